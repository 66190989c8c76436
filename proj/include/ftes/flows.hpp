#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "ftes/bounds.hpp"
#include "ftes/cost_model.hpp"
#include "ftes/dither.hpp"
#include "ftes/sim.hpp"

namespace ftes {

// Below this norm the drive term is exactly zero. The vector field is
// continuous there, but |v|^alpha2 with alpha2 < 0 overflows as v -> 0; the
// guard implements the zero-at-zero definition numerically.
inline constexpr double kDriveZeroGuard = 1e-14;

// v/|v|^alpha1 + v/|v|^alpha2, zero vector when |v| <= kDriveZeroGuard.
// The exponent 0 is special-cased so the classic variant returns exactly 2v.
Eigen::VectorXd nonsmooth_drive(const Eigen::VectorXd& v, double alpha1, double alpha2);

// Full parameter pack shared by the gradient- and Newton-based controllers.
struct FtgesParams {
  ShapeParams shape;
  DitherParams dither;
  FrequencySet freqs;
  double eps2 = 0.1;   // filter time scale
  double eta = 50.0;   // filter constraint ball radius
  double eps0 = 1.0;   // plant time-scale gain; 1 for static maps

  FtgesParams(ShapeParams shape_in, DitherParams dither_in, FrequencySet freqs_in,
              double eps2_in, double eta_in = 50.0, double eps0_in = 1.0);

  int n() const { return freqs.size(); }

  // Soft tuning-guideline checks (eps1 < eps2 < 1); violations are reported,
  // not rejected.
  std::vector<std::string> tuning_warnings() const;
};

// Gradient-based controller state.
struct FtgesState {
  Eigen::VectorXd u;   // optimizer estimate
  Eigen::VectorXd xi;  // gradient-filter state
  TorusState mu;
};

// Newton-based controller state.
struct FtnesState {
  Eigen::VectorXd u;
  Eigen::MatrixXd xi1;  // Hessian-inverse estimate
  Eigen::VectorXd xi2;  // gradient estimate
  TorusState mu;
};

// Controller plus plant state for the dynamic closed loop.
struct ClosedLoopState {
  std::variant<FtgesState, FtnesState> controller;
  Eigen::VectorXd x;
};

// Controller vector fields. `y` is the measured cost at the probe input
// z = u + a * mu_odd; the caller supplies it, keeping the fields model-free.
// With eps0 < 1 every controller row is premultiplied by eps0.
FtgesState ftges_derivative(const FtgesState& s, double y, const FtgesParams& p);
FtnesState ftnes_derivative(const FtnesState& s, double y, const FtgesParams& p);

// Closed loop: the controller reads y = h(x) from the plant output and the
// plant runs at unit rate with input z = u + a * mu_odd.
ClosedLoopState closed_loop_derivative(const ClosedLoopState& s, const PlantModel& plant,
                                       const FtgesParams& p);

// Model-based reference flows emulated by the controllers.
Eigen::VectorXd reduced_gradient_derivative(const Eigen::VectorXd& u, const CostSpec& cost,
                                            const ShapeParams& shape);
// Hessian is solved, never inverted; throws std::domain_error if it is not
// positive definite at u.
Eigen::VectorXd reduced_newton_derivative(const Eigen::VectorXd& u, const CostSpec& cost,
                                          const ShapeParams& shape);

// --- flat-state wiring for the integrator ---------------------------------

// Gradient controller: [u(n) | xi(n) | mu(2n)].
struct FtgesLayout {
  int n = 0;
  explicit FtgesLayout(int n_in) : n(n_in) {}
  int u_offset() const { return 0; }
  int xi_offset() const { return n; }
  int mu_offset() const { return 2 * n; }
  int dim() const { return 4 * n; }
};

// Newton controller: [u(n) | xi1(n*n, row-major) | xi2(n) | mu(2n)].
struct FtnesLayout {
  int n = 0;
  explicit FtnesLayout(int n_in) : n(n_in) {}
  int u_offset() const { return 0; }
  int xi1_offset() const { return n; }
  int xi2_offset() const { return n + n * n; }
  int mu_offset() const { return 2 * n + n * n; }
  int dim() const { return 4 * n + n * n; }
};

Eigen::VectorXd pack(const FtgesState& s);
Eigen::VectorXd pack(const FtnesState& s);
FtgesState unpack_ftges(const Eigen::VectorXd& flat, int n);
FtnesState unpack_ftnes(const Eigen::VectorXd& flat, int n);

using MeasurementFn = std::function<double(const Eigen::VectorXd& z)>;

// Static-map right-hand sides; `measure` is evaluated at z = u + a * mu_odd
// on every derivative call.
DerivFn make_ftges_rhs(const FtgesParams& p, MeasurementFn measure);
DerivFn make_ftnes_rhs(const FtgesParams& p, MeasurementFn measure);

// Closed-loop right-hand sides: [controller | x(p)].
DerivFn make_ftges_plant_rhs(const FtgesParams& p, std::shared_ptr<const PlantModel> plant);
DerivFn make_ftnes_plant_rhs(const FtgesParams& p, std::shared_ptr<const PlantModel> plant);

// Reference-flow right-hand sides over the bare u vector.
DerivFn make_reduced_gradient_rhs(CostSpec cost, ShapeParams shape);
DerivFn make_reduced_newton_rhs(CostSpec cost, ShapeParams shape);

enum class ControllerKind { kFtges, kFtnes };

// Torus block, filter-ball monitors, symmetry monitor (Newton), and the
// probe/measurement recorder for a static-map run.
IntegrateOptions make_static_options(const FtgesParams& p, ControllerKind kind,
                                     MeasurementFn measure);

// Same plus the plant state box monitor; y is recorded from the plant output.
IntegrateOptions make_plant_options(const FtgesParams& p, ControllerKind kind,
                                    std::shared_ptr<const PlantModel> plant);

}  // namespace ftes
