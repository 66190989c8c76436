#include "ftes/flows.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace ftes {

namespace {

// |v|^-a1 + |v|^-a2 with exact 1.0 contributions for zero exponents.
double drive_factor(double norm, double a1, double a2) {
  const double f1 = (a1 == 0.0) ? 1.0 : std::pow(norm, -a1);
  const double f2 = (a2 == 0.0) ? 1.0 : std::pow(norm, -a2);
  return f1 + f2;
}

double guarded_drive_factor(const double norm, const ShapeParams& shape) {
  if (norm <= kDriveZeroGuard) return 0.0;
  return drive_factor(norm, shape.alpha1, shape.alpha2);
}

Eigen::VectorXd frequency_values(const FrequencySet& freqs) {
  Eigen::VectorXd v(freqs.size());
  for (int i = 0; i < freqs.size(); ++i) v[i] = freqs.value(i);
  return v;
}

// Controller rows shared by the static and closed-loop gradient RHS.
// State block: [u(n) | xi(n) | mu(2n)] starting at s[0].
void ftges_rows(const FtgesParams& p, const Eigen::VectorXd& omega, int n,
                const Eigen::VectorXd& s, double y, Eigen::VectorXd& ds) {
  const auto xi = s.segment(n, n);
  const double factor = guarded_drive_factor(xi.norm(), p.shape);
  ds.head(n) = (-p.eps0 * p.shape.k * factor) * xi;

  const double demod = 2.0 / p.dither.a;
  const double rate = p.eps0 / p.eps2;
  for (int i = 0; i < n; ++i) {
    ds[n + i] = -rate * (xi[i] - y * demod * s[2 * n + 2 * i]);
  }
  for (int i = 0; i < n; ++i) {
    const double w = p.eps0 * omega[i];
    ds[2 * n + 2 * i] = w * s[2 * n + 2 * i + 1];
    ds[2 * n + 2 * i + 1] = -w * s[2 * n + 2 * i];
  }
}

// Newton controller rows: [u(n) | xi1(n*n row-major) | xi2(n) | mu(2n)].
struct FtnesRowsScratch {
  Eigen::MatrixXd W, T1, T2;
  explicit FtnesRowsScratch(int n) : W(n, n), T1(n, n), T2(n, n) {}
};

void ftnes_rows(const FtgesParams& p, const Eigen::VectorXd& omega, int n,
                const Eigen::VectorXd& s, double y, FtnesRowsScratch& scratch,
                Eigen::VectorXd& ds) {
  const FtnesLayout lay(n);
  using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const Eigen::Map<const RowMat> xi1(s.data() + lay.xi1_offset(), n, n);
  const auto xi2 = s.segment(lay.xi2_offset(), n);
  const int mu0 = lay.mu_offset();

  const double factor = guarded_drive_factor(xi2.norm(), p.shape);
  ds.head(n).noalias() = (-p.eps0 * p.shape.k * factor) * (xi1 * xi2);

  // W = y * N(mu)
  const double a2inv = 1.0 / (p.dither.a * p.dither.a);
  for (int i = 0; i < n; ++i) {
    const double mi = s[mu0 + 2 * i];
    scratch.W(i, i) = y * 16.0 * a2inv * (mi * mi - 0.5);
    for (int j = i + 1; j < n; ++j) {
      const double v = y * 4.0 * a2inv * mi * s[mu0 + 2 * j];
      scratch.W(i, j) = v;
      scratch.W(j, i) = v;
    }
  }
  const double rate = p.eps0 / p.eps2;
  scratch.T1.noalias() = xi1 * scratch.W;
  scratch.T2.noalias() = scratch.T1 * xi1;
  Eigen::Map<RowMat> dxi1(ds.data() + lay.xi1_offset(), n, n);
  dxi1 = -rate * (scratch.T2 - xi1);

  const double demod = 2.0 / p.dither.a;
  for (int i = 0; i < n; ++i) {
    ds[lay.xi2_offset() + i] = -rate * (xi2[i] - y * demod * s[mu0 + 2 * i]);
  }
  for (int i = 0; i < n; ++i) {
    const double w = p.eps0 * omega[i];
    ds[mu0 + 2 * i] = w * s[mu0 + 2 * i + 1];
    ds[mu0 + 2 * i + 1] = -w * s[mu0 + 2 * i];
  }
}

void require_demodulation_amplitude(const FtgesParams& p) {
  if (!(p.dither.a > 0.0)) {
    throw std::invalid_argument("controller wiring requires probing amplitude a > 0");
  }
}

struct FtgesStaticRhs {
  FtgesParams p;
  MeasurementFn measure;
  Eigen::VectorXd omega;
  mutable Eigen::VectorXd z;

  FtgesStaticRhs(const FtgesParams& params, MeasurementFn m)
      : p(params), measure(std::move(m)), omega(), z(params.n()) {
    omega = 2.0 * std::numbers::pi / p.dither.eps1 * frequency_values(p.freqs);
  }

  void operator()(const Eigen::VectorXd& s, Eigen::VectorXd& ds) const {
    const int n = p.n();
    for (int i = 0; i < n; ++i) z[i] = s[i] + p.dither.a * s[2 * n + 2 * i];
    ftges_rows(p, omega, n, s, measure(z), ds);
  }
};

struct FtnesStaticRhs {
  FtgesParams p;
  MeasurementFn measure;
  Eigen::VectorXd omega;
  mutable Eigen::VectorXd z;
  mutable FtnesRowsScratch scratch;

  FtnesStaticRhs(const FtgesParams& params, MeasurementFn m)
      : p(params), measure(std::move(m)), omega(), z(params.n()), scratch(params.n()) {
    omega = 2.0 * std::numbers::pi / p.dither.eps1 * frequency_values(p.freqs);
  }

  void operator()(const Eigen::VectorXd& s, Eigen::VectorXd& ds) const {
    const int n = p.n();
    const int mu0 = FtnesLayout(n).mu_offset();
    for (int i = 0; i < n; ++i) z[i] = s[i] + p.dither.a * s[mu0 + 2 * i];
    ftnes_rows(p, omega, n, s, measure(z), scratch, ds);
  }
};

template <class ControllerRows>
struct PlantRhs {
  FtgesParams p;
  std::shared_ptr<const PlantModel> plant;
  Eigen::VectorXd omega;
  mutable Eigen::VectorXd z, qx;
  mutable ControllerRows rows;

  PlantRhs(const FtgesParams& params, std::shared_ptr<const PlantModel> plant_in)
      : p(params),
        plant(std::move(plant_in)),
        omega(),
        z(params.n()),
        qx(plant->state_dim()),
        rows(params.n()) {
    omega = 2.0 * std::numbers::pi / p.dither.eps1 * frequency_values(p.freqs);
  }

  void operator()(const Eigen::VectorXd& s, Eigen::VectorXd& ds) const {
    const int n = p.n();
    const auto x = s.tail(plant->state_dim());
    const int mu0 = rows.mu_offset(n);
    for (int i = 0; i < n; ++i) z[i] = s[i] + p.dither.a * s[mu0 + 2 * i];
    // y = x'Qx + r'x + c, measured from the plant, not the steady-state map
    qx.noalias() = plant->output_quad() * x;
    const double y = x.dot(qx) + plant->output_lin().dot(x) + plant->output_const();
    rows(p, omega, n, s, y, ds);
    ds.tail(plant->state_dim()).noalias() = plant->A() * x;
    ds.tail(plant->state_dim()).noalias() += plant->B() * z;
  }
};

struct GradientRows {
  explicit GradientRows(int) {}
  int mu_offset(int n) const { return FtgesLayout(n).mu_offset(); }
  void operator()(const FtgesParams& p, const Eigen::VectorXd& omega, int n,
                  const Eigen::VectorXd& s, double y, Eigen::VectorXd& ds) {
    ftges_rows(p, omega, n, s, y, ds);
  }
};

struct NewtonRows {
  FtnesRowsScratch scratch;
  explicit NewtonRows(int n) : scratch(n) {}
  int mu_offset(int n) const { return FtnesLayout(n).mu_offset(); }
  void operator()(const FtgesParams& p, const Eigen::VectorXd& omega, int n,
                  const Eigen::VectorXd& s, double y, Eigen::VectorXd& ds) {
    ftnes_rows(p, omega, n, s, y, scratch, ds);
  }
};

}  // namespace

Eigen::VectorXd nonsmooth_drive(const Eigen::VectorXd& v, double alpha1, double alpha2) {
  const double norm = v.norm();
  if (norm <= kDriveZeroGuard) return Eigen::VectorXd::Zero(v.size());
  return drive_factor(norm, alpha1, alpha2) * v;
}

FtgesParams::FtgesParams(ShapeParams shape_in, DitherParams dither_in, FrequencySet freqs_in,
                         double eps2_in, double eta_in, double eps0_in)
    : shape(shape_in),
      dither(dither_in),
      freqs(std::move(freqs_in)),
      eps2(eps2_in),
      eta(eta_in),
      eps0(eps0_in) {
  if (!(eps2 > 0.0)) throw std::invalid_argument("FtgesParams: eps2 must be > 0");
  if (!(eta > 0.0)) throw std::invalid_argument("FtgesParams: eta must be > 0");
  if (!(eps0 > 0.0 && eps0 <= 1.0)) {
    throw std::invalid_argument("FtgesParams: eps0 must be in (0, 1]");
  }
}

std::vector<std::string> FtgesParams::tuning_warnings() const {
  std::vector<std::string> w;
  if (!(dither.eps1 < eps2)) {
    w.push_back("tuning guideline violated: expected eps1 < eps2 (eps1 = " +
                std::to_string(dither.eps1) + ", eps2 = " + std::to_string(eps2) + ")");
  }
  if (eps2 >= 1.0) {
    w.push_back("tuning guideline violated: expected eps2 < 1 (eps2 = " + std::to_string(eps2) +
                ")");
  }
  return w;
}

Eigen::VectorXd pack(const FtgesState& s) {
  const int n = static_cast<int>(s.u.size());
  Eigen::VectorXd flat(FtgesLayout(n).dim());
  flat << s.u, s.xi, s.mu.mu;
  return flat;
}

Eigen::VectorXd pack(const FtnesState& s) {
  const int n = static_cast<int>(s.u.size());
  const FtnesLayout lay(n);
  Eigen::VectorXd flat(lay.dim());
  flat.head(n) = s.u;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) flat[lay.xi1_offset() + i * n + j] = s.xi1(i, j);
  }
  flat.segment(lay.xi2_offset(), n) = s.xi2;
  flat.segment(lay.mu_offset(), 2 * n) = s.mu.mu;
  return flat;
}

FtgesState unpack_ftges(const Eigen::VectorXd& flat, int n) {
  const FtgesLayout lay(n);
  if (flat.size() != lay.dim()) throw std::invalid_argument("unpack_ftges: dimension mismatch");
  FtgesState s;
  s.u = flat.head(n);
  s.xi = flat.segment(lay.xi_offset(), n);
  s.mu = TorusState(flat.segment(lay.mu_offset(), 2 * n));
  return s;
}

FtnesState unpack_ftnes(const Eigen::VectorXd& flat, int n) {
  const FtnesLayout lay(n);
  if (flat.size() != lay.dim()) throw std::invalid_argument("unpack_ftnes: dimension mismatch");
  FtnesState s;
  s.u = flat.head(n);
  s.xi1.resize(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) s.xi1(i, j) = flat[lay.xi1_offset() + i * n + j];
  }
  s.xi2 = flat.segment(lay.xi2_offset(), n);
  s.mu = TorusState(flat.segment(lay.mu_offset(), 2 * n));
  return s;
}

FtgesState ftges_derivative(const FtgesState& s, double y, const FtgesParams& p) {
  require_demodulation_amplitude(p);
  if (s.u.size() != p.n() || s.xi.size() != p.n() || s.mu.pairs() != p.n()) {
    throw std::invalid_argument("ftges_derivative: state/parameter dimension mismatch");
  }
  const Eigen::VectorXd flat = pack(s);
  Eigen::VectorXd ds(flat.size());
  const Eigen::VectorXd omega =
      2.0 * std::numbers::pi / p.dither.eps1 * frequency_values(p.freqs);
  ftges_rows(p, omega, p.n(), flat, y, ds);
  return unpack_ftges(ds, p.n());
}

FtnesState ftnes_derivative(const FtnesState& s, double y, const FtgesParams& p) {
  require_demodulation_amplitude(p);
  const int n = p.n();
  if (s.u.size() != n || s.xi1.rows() != n || s.xi1.cols() != n || s.xi2.size() != n ||
      s.mu.pairs() != n) {
    throw std::invalid_argument("ftnes_derivative: state/parameter dimension mismatch");
  }
  const Eigen::VectorXd flat = pack(s);
  Eigen::VectorXd ds(flat.size());
  const Eigen::VectorXd omega =
      2.0 * std::numbers::pi / p.dither.eps1 * frequency_values(p.freqs);
  FtnesRowsScratch scratch(n);
  ftnes_rows(p, omega, n, flat, y, scratch, ds);
  return unpack_ftnes(ds, n);
}

ClosedLoopState closed_loop_derivative(const ClosedLoopState& s, const PlantModel& plant,
                                       const FtgesParams& p) {
  const double y = plant.output(s.x);
  ClosedLoopState ds;
  Eigen::VectorXd u, mu_odd;
  if (const auto* g = std::get_if<FtgesState>(&s.controller)) {
    ds.controller = ftges_derivative(*g, y, p);
    u = g->u;
    mu_odd = odd_projection(g->mu.mu);
  } else {
    const auto& nstate = std::get<FtnesState>(s.controller);
    ds.controller = ftnes_derivative(nstate, y, p);
    u = nstate.u;
    mu_odd = odd_projection(nstate.mu.mu);
  }
  ds.x = plant.dynamics(s.x, u + p.dither.a * mu_odd);
  return ds;
}

Eigen::VectorXd reduced_gradient_derivative(const Eigen::VectorXd& u, const CostSpec& cost,
                                            const ShapeParams& shape) {
  return -shape.k * nonsmooth_drive(cost.gradient(u), shape.alpha1, shape.alpha2);
}

Eigen::VectorXd reduced_newton_derivative(const Eigen::VectorXd& u, const CostSpec& cost,
                                          const ShapeParams& shape) {
  const Eigen::LLT<Eigen::MatrixXd> llt(cost.hessian(u));
  if (llt.info() != Eigen::Success) {
    throw std::domain_error("reduced_newton_derivative: Hessian not positive definite at u");
  }
  return -shape.k * llt.solve(nonsmooth_drive(cost.gradient(u), shape.alpha1, shape.alpha2));
}

DerivFn make_ftges_rhs(const FtgesParams& p, MeasurementFn measure) {
  require_demodulation_amplitude(p);
  return FtgesStaticRhs(p, std::move(measure));
}

DerivFn make_ftnes_rhs(const FtgesParams& p, MeasurementFn measure) {
  require_demodulation_amplitude(p);
  return FtnesStaticRhs(p, std::move(measure));
}

DerivFn make_ftges_plant_rhs(const FtgesParams& p, std::shared_ptr<const PlantModel> plant) {
  require_demodulation_amplitude(p);
  return PlantRhs<GradientRows>(p, std::move(plant));
}

DerivFn make_ftnes_plant_rhs(const FtgesParams& p, std::shared_ptr<const PlantModel> plant) {
  require_demodulation_amplitude(p);
  return PlantRhs<NewtonRows>(p, std::move(plant));
}

DerivFn make_reduced_gradient_rhs(CostSpec cost, ShapeParams shape) {
  return [cost = std::move(cost), shape](const Eigen::VectorXd& u, Eigen::VectorXd& du) {
    du = reduced_gradient_derivative(u, cost, shape);
  };
}

DerivFn make_reduced_newton_rhs(CostSpec cost, ShapeParams shape) {
  return [cost = std::move(cost), shape](const Eigen::VectorXd& u, Eigen::VectorXd& du) {
    du = reduced_newton_derivative(u, cost, shape);
  };
}

IntegrateOptions make_static_options(const FtgesParams& p, ControllerKind kind,
                                     MeasurementFn measure) {
  const int n = p.n();
  IntegrateOptions opts;
  if (kind == ControllerKind::kFtges) {
    const FtgesLayout lay(n);
    opts.torus = TorusBlock{lay.mu_offset(), n};
    opts.balls.push_back({"xi", lay.xi_offset(), n, p.eta});
  } else {
    const FtnesLayout lay(n);
    opts.torus = TorusBlock{lay.mu_offset(), n};
    opts.balls.push_back({"xi1", lay.xi1_offset(), n * n, p.eta});
    opts.balls.push_back({"xi2", lay.xi2_offset(), n, p.eta});
    opts.symmetry = SymmetryMonitor{lay.xi1_offset(), n, 1e-6};
  }
  const double a = p.dither.a;
  const int mu0 = (kind == ControllerKind::kFtges) ? FtgesLayout(n).mu_offset()
                                                   : FtnesLayout(n).mu_offset();
  opts.derived.z_size = n;
  opts.derived.fn = [n, a, mu0, measure = std::move(measure)](
                        const Eigen::VectorXd& s, Eigen::Ref<Eigen::VectorXd> z, double& y) {
    for (int i = 0; i < n; ++i) z[i] = s[i] + a * s[mu0 + 2 * i];
    y = measure(z);
  };
  return opts;
}

IntegrateOptions make_plant_options(const FtgesParams& p, ControllerKind kind,
                                    std::shared_ptr<const PlantModel> plant) {
  const int n = p.n();
  IntegrateOptions opts = make_static_options(p, kind, [](const Eigen::VectorXd&) { return 0.0; });
  const int ctrl_dim =
      (kind == ControllerKind::kFtges) ? FtgesLayout(n).dim() : FtnesLayout(n).dim();
  opts.boxes.push_back({"plant_state", ctrl_dim, plant->state_lo(), plant->state_hi()});
  const double a = p.dither.a;
  const int mu0 = (kind == ControllerKind::kFtges) ? FtgesLayout(n).mu_offset()
                                                   : FtnesLayout(n).mu_offset();
  opts.derived.z_size = n;
  opts.derived.fn = [n, a, mu0, plant = std::move(plant)](
                        const Eigen::VectorXd& s, Eigen::Ref<Eigen::VectorXd> z, double& y) {
    for (int i = 0; i < n; ++i) z[i] = s[i] + a * s[mu0 + 2 * i];
    y = plant->output(s.tail(plant->state_dim()));
  };
  return opts;
}

}  // namespace ftes
