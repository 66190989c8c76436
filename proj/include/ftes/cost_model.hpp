#pragma once

#include <Eigen/Dense>
#include <memory>
#include <variant>

namespace ftes {

// Linear plant x' = A x + B z with A Hurwitz, read out through a
// quadratic-plus-linear output map h(x) = x' Q x + r' x + c.
//
// The steady-state map l(z) = -A^{-1} B z is computed at construction; the
// composed steady-state cost h(l(z)) is exposed through CostSpec so that the
// same exact oracles work for static maps and plants.
class PlantModel {
 public:
  PlantModel(Eigen::MatrixXd A, Eigen::MatrixXd B, Eigen::MatrixXd output_quad,
             Eigen::VectorXd output_lin, double output_const = 0.0,
             Eigen::VectorXd state_lo = {}, Eigen::VectorXd state_hi = {});

  // The built-in 2-state, 2-input demo plant used by the bundled scenarios:
  //   x1' = -20 x1 + 5 x2 + 5 z1
  //   x2' = -20 x2 + 5 z2
  //   y   = 10 x1^2 + 10 x2^2 + x1/2 + x2/5
  static PlantModel demo2x2();

  int state_dim() const { return static_cast<int>(A_.rows()); }
  int input_dim() const { return static_cast<int>(B_.cols()); }

  const Eigen::MatrixXd& A() const { return A_; }
  const Eigen::MatrixXd& B() const { return B_; }
  const Eigen::MatrixXd& output_quad() const { return output_quad_; }
  const Eigen::VectorXd& output_lin() const { return output_lin_; }
  double output_const() const { return output_const_; }
  const Eigen::VectorXd& state_lo() const { return state_lo_; }
  const Eigen::VectorXd& state_hi() const { return state_hi_; }

  // l(z) = -A^{-1} B z
  Eigen::VectorXd steady_state(const Eigen::VectorXd& z) const;
  const Eigen::MatrixXd& steady_state_gain() const { return L_; }

  double output(const Eigen::VectorXd& x) const;
  Eigen::VectorXd dynamics(const Eigen::VectorXd& x, const Eigen::VectorXd& z) const;

 private:
  Eigen::MatrixXd A_, B_;
  Eigen::MatrixXd output_quad_;
  Eigen::VectorXd output_lin_;
  double output_const_;
  Eigen::VectorXd state_lo_, state_hi_;
  Eigen::MatrixXd L_;  // -A^{-1} B
};

// Cost function family with exact value/gradient/Hessian oracles.
//
// Variants: scalar quadratic (curvature/2)(z - z*)^2, quadratic form
// z'Hz/2 + b'z + c with H symmetric positive definite, and the steady-state
// cost of a PlantModel. Values are immutable after construction and safe to
// share across threads.
class CostSpec {
 public:
  static CostSpec scalar_quadratic(double curvature, double zstar);
  static CostSpec quadratic_form(Eigen::MatrixXd H, Eigen::VectorXd b, double c);
  static CostSpec plant_composed(PlantModel plant);

  int dim() const { return dim_; }
  double eval(const Eigen::VectorXd& z) const;
  Eigen::VectorXd gradient(const Eigen::VectorXd& z) const;
  Eigen::MatrixXd hessian(const Eigen::VectorXd& z) const;

  const Eigen::VectorXd& minimizer() const { return zstar_; }
  double minimum() const { return phistar_; }

  // Non-null only for the plant-composed variant.
  const PlantModel* plant() const;

 private:
  struct ScalarQuad {
    double curvature;
    double zstar;
  };
  struct QuadForm {
    Eigen::MatrixXd H;
    Eigen::VectorXd b;
    double c;
  };
  struct PlantComposed {
    std::shared_ptr<const PlantModel> plant;
    Eigen::MatrixXd Heff;  // 2 L' Q L
    Eigen::VectorXd geff;  // L' r
    double ceff;
  };

  CostSpec() = default;
  void check_dim(const Eigen::VectorXd& z) const;

  std::variant<ScalarQuad, QuadForm, PlantComposed> family_;
  int dim_ = 0;
  Eigen::VectorXd zstar_;
  double phistar_ = 0.0;
};

// Minimum over a sampled grid of |grad phi|^2 / (2 (phi - phi*)): an estimate
// of the largest PL constant valid on the box. Grid points where the ratio is
// undefined (phi = phi*) are skipped.
double pl_constant_estimate(const CostSpec& cost, const Eigen::VectorXd& box_lo,
                            const Eigen::VectorXd& box_hi, int grid_points_per_axis);

}  // namespace ftes
