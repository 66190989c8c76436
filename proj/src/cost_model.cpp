#include "ftes/cost_model.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace ftes {

namespace {

void require_symmetric(const Eigen::MatrixXd& M, const char* name) {
  if (M.rows() != M.cols() || (M - M.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
    throw std::invalid_argument(std::string(name) + " must be symmetric");
  }
}

}  // namespace

PlantModel::PlantModel(Eigen::MatrixXd A, Eigen::MatrixXd B, Eigen::MatrixXd output_quad,
                       Eigen::VectorXd output_lin, double output_const,
                       Eigen::VectorXd state_lo, Eigen::VectorXd state_hi)
    : A_(std::move(A)),
      B_(std::move(B)),
      output_quad_(std::move(output_quad)),
      output_lin_(std::move(output_lin)),
      output_const_(output_const),
      state_lo_(std::move(state_lo)),
      state_hi_(std::move(state_hi)) {
  const auto p = A_.rows();
  if (A_.cols() != p) throw std::invalid_argument("PlantModel: A must be square");
  if (B_.rows() != p) throw std::invalid_argument("PlantModel: B row count must match A");
  require_symmetric(output_quad_, "PlantModel: output_quad");
  if (output_quad_.rows() != p || output_lin_.size() != p) {
    throw std::invalid_argument("PlantModel: output map dimension must match state");
  }
  const Eigen::VectorXcd eig = Eigen::EigenSolver<Eigen::MatrixXd>(A_, false).eigenvalues();
  if (eig.real().maxCoeff() >= 0.0) {
    throw std::invalid_argument("PlantModel: A must be Hurwitz (all eigenvalues Re < 0)");
  }
  if (state_lo_.size() == 0) {
    state_lo_ = Eigen::VectorXd::Constant(p, -std::numeric_limits<double>::infinity());
    state_hi_ = Eigen::VectorXd::Constant(p, std::numeric_limits<double>::infinity());
  }
  if (state_lo_.size() != p || state_hi_.size() != p) {
    throw std::invalid_argument("PlantModel: state box dimension must match state");
  }
  L_ = -A_.partialPivLu().solve(B_);
}

PlantModel PlantModel::demo2x2() {
  Eigen::MatrixXd A(2, 2), B(2, 2), Q(2, 2);
  A << -20.0, 5.0, 0.0, -20.0;
  B << 5.0, 0.0, 0.0, 5.0;
  Q << 10.0, 0.0, 0.0, 10.0;
  Eigen::VectorXd r(2);
  r << 0.5, 0.2;
  Eigen::VectorXd lo = Eigen::VectorXd::Constant(2, -1000.0);
  Eigen::VectorXd hi = Eigen::VectorXd::Constant(2, 1000.0);
  return PlantModel(A, B, Q, r, 0.0, lo, hi);
}

Eigen::VectorXd PlantModel::steady_state(const Eigen::VectorXd& z) const {
  if (z.size() != input_dim()) {
    throw std::invalid_argument("PlantModel::steady_state: input dimension mismatch");
  }
  return L_ * z;
}

double PlantModel::output(const Eigen::VectorXd& x) const {
  if (x.size() != state_dim()) {
    throw std::invalid_argument("PlantModel::output: state dimension mismatch");
  }
  return x.dot(output_quad_ * x) + output_lin_.dot(x) + output_const_;
}

Eigen::VectorXd PlantModel::dynamics(const Eigen::VectorXd& x, const Eigen::VectorXd& z) const {
  if (x.size() != state_dim() || z.size() != input_dim()) {
    throw std::invalid_argument("PlantModel::dynamics: dimension mismatch");
  }
  return A_ * x + B_ * z;
}

CostSpec CostSpec::scalar_quadratic(double curvature, double zstar) {
  if (!(curvature > 0.0)) {
    throw std::invalid_argument("CostSpec: scalar-quadratic curvature must be > 0");
  }
  CostSpec c;
  c.family_ = ScalarQuad{curvature, zstar};
  c.dim_ = 1;
  c.zstar_ = Eigen::VectorXd::Constant(1, zstar);
  c.phistar_ = 0.0;
  return c;
}

CostSpec CostSpec::quadratic_form(Eigen::MatrixXd H, Eigen::VectorXd b, double c) {
  require_symmetric(H, "CostSpec: H");
  if (b.size() != H.rows()) throw std::invalid_argument("CostSpec: b dimension must match H");
  const Eigen::LLT<Eigen::MatrixXd> llt(H);
  if (llt.info() != Eigen::Success) {
    throw std::invalid_argument("CostSpec: H must be positive definite");
  }
  CostSpec spec;
  spec.dim_ = static_cast<int>(H.rows());
  spec.zstar_ = llt.solve(-b);
  // phi(z*) = c + b'z*/2 since H z* = -b.
  spec.phistar_ = c + 0.5 * b.dot(spec.zstar_);
  spec.family_ = QuadForm{std::move(H), std::move(b), c};
  return spec;
}

CostSpec CostSpec::plant_composed(PlantModel plant) {
  auto shared = std::make_shared<const PlantModel>(std::move(plant));
  const Eigen::MatrixXd& L = shared->steady_state_gain();
  Eigen::MatrixXd Heff = 2.0 * L.transpose() * shared->output_quad() * L;
  Heff = 0.5 * (Heff + Heff.transpose().eval());  // kill round-off asymmetry
  Eigen::VectorXd geff = L.transpose() * shared->output_lin();
  const Eigen::LLT<Eigen::MatrixXd> llt(Heff);
  if (llt.info() != Eigen::Success) {
    throw std::invalid_argument(
        "CostSpec: plant steady-state cost is not strongly convex (composed Hessian not PD)");
  }
  CostSpec spec;
  spec.dim_ = shared->input_dim();
  spec.zstar_ = llt.solve(-geff);
  spec.family_ = PlantComposed{shared, std::move(Heff), std::move(geff), shared->output_const()};
  const auto& pc = std::get<PlantComposed>(spec.family_);
  spec.phistar_ = 0.5 * spec.zstar_.dot(pc.Heff * spec.zstar_) + pc.geff.dot(spec.zstar_) + pc.ceff;
  return spec;
}

void CostSpec::check_dim(const Eigen::VectorXd& z) const {
  if (z.size() != dim_) {
    throw std::invalid_argument("CostSpec: expected dimension " + std::to_string(dim_) +
                                ", got " + std::to_string(z.size()));
  }
  if (!z.allFinite()) throw std::invalid_argument("CostSpec: non-finite input");
}

double CostSpec::eval(const Eigen::VectorXd& z) const {
  check_dim(z);
  if (const auto* sq = std::get_if<ScalarQuad>(&family_)) {
    const double e = z[0] - sq->zstar;
    return 0.5 * sq->curvature * e * e;
  }
  if (const auto* qf = std::get_if<QuadForm>(&family_)) {
    return 0.5 * z.dot(qf->H * z) + qf->b.dot(z) + qf->c;
  }
  const auto& pc = std::get<PlantComposed>(family_);
  // h(l(z)); Heff already folds the factor 2 from the quadratic output term.
  return 0.5 * z.dot(pc.Heff * z) + pc.geff.dot(z) + pc.ceff;
}

Eigen::VectorXd CostSpec::gradient(const Eigen::VectorXd& z) const {
  check_dim(z);
  if (const auto* sq = std::get_if<ScalarQuad>(&family_)) {
    return Eigen::VectorXd::Constant(1, sq->curvature * (z[0] - sq->zstar));
  }
  if (const auto* qf = std::get_if<QuadForm>(&family_)) {
    return qf->H * z + qf->b;
  }
  const auto& pc = std::get<PlantComposed>(family_);
  return pc.Heff * z + pc.geff;
}

Eigen::MatrixXd CostSpec::hessian(const Eigen::VectorXd& z) const {
  check_dim(z);
  if (const auto* sq = std::get_if<ScalarQuad>(&family_)) {
    return Eigen::MatrixXd::Constant(1, 1, sq->curvature);
  }
  if (const auto* qf = std::get_if<QuadForm>(&family_)) {
    return qf->H;
  }
  return std::get<PlantComposed>(family_).Heff;
}

const PlantModel* CostSpec::plant() const {
  if (const auto* pc = std::get_if<PlantComposed>(&family_)) return pc->plant.get();
  return nullptr;
}

double pl_constant_estimate(const CostSpec& cost, const Eigen::VectorXd& box_lo,
                            const Eigen::VectorXd& box_hi, int grid_points_per_axis) {
  const int n = cost.dim();
  if (box_lo.size() != n || box_hi.size() != n) {
    throw std::invalid_argument("pl_constant_estimate: box dimension mismatch");
  }
  if (grid_points_per_axis < 2) {
    throw std::invalid_argument("pl_constant_estimate: need at least 2 grid points per axis");
  }
  const double phistar = cost.minimum();
  long total = 1;
  for (int i = 0; i < n; ++i) total *= grid_points_per_axis;

  double best = std::numeric_limits<double>::infinity();
  Eigen::VectorXd z(n);
  for (long idx = 0; idx < total; ++idx) {
    long rem = idx;
    for (int i = 0; i < n; ++i) {
      const long gi = rem % grid_points_per_axis;
      rem /= grid_points_per_axis;
      z[i] = box_lo[i] + (box_hi[i] - box_lo[i]) * static_cast<double>(gi) /
                             static_cast<double>(grid_points_per_axis - 1);
    }
    const double gap = cost.eval(z) - phistar;
    if (gap <= 1e-15 * std::max(1.0, std::abs(phistar))) continue;  // ratio is +inf here
    best = std::min(best, cost.gradient(z).squaredNorm() / (2.0 * gap));
  }
  if (!std::isfinite(best)) {
    throw std::invalid_argument("pl_constant_estimate: every grid point sits at the minimum");
  }
  return best;
}

}  // namespace ftes
