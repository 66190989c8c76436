#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace ftes {

using DerivFn = std::function<void(const Eigen::VectorXd& state, Eigen::VectorXd& dstate)>;

// Thrown when integration produces a NaN/Inf; reports where and when.
class NonFiniteStateError : public std::runtime_error {
 public:
  NonFiniteStateError(double time, int channel)
      : std::runtime_error("non-finite state at t = " + std::to_string(time) + ", channel " +
                           std::to_string(channel)),
        time_(time),
        channel_(channel) {}
  double time() const { return time_; }
  int channel() const { return channel_; }

 private:
  double time_;
  int channel_;
};

enum class ViolationPolicy { kWarn, kHalt };

// Norm-ball constraint |state.segment(offset, size)| <= radius.
struct BallMonitor {
  std::string name;
  int offset = 0;
  int size = 0;
  double radius = 0.0;
};

// Per-coordinate box constraint on a state block.
struct BoxMonitor {
  std::string name;
  int offset = 0;
  Eigen::VectorXd lo, hi;
};

// Records |S - S'|_F for an n x n block stored row-major at `offset`.
struct SymmetryMonitor {
  int offset = 0;
  int n = 0;
  double tol = 1e-6;
};

// Consecutive (cos, sin) pairs starting at `offset`; renormalized after every
// step, with the applied correction magnitude logged.
struct TorusBlock {
  int offset = 0;
  int pairs = 0;
};

struct MonitorEvent {
  std::string name;
  double time = 0.0;
  double value = 0.0;
};

struct MonitorLog {
  std::vector<MonitorEvent> violations;  // first crossing per monitor
  double max_torus_correction = 0.0;     // worst per-step projection applied
  double max_symmetry_drift = 0.0;
  std::vector<std::string> warnings;

  std::optional<double> first_violation(const std::string& name) const;
};

struct DerivedRecorder {
  int z_size = 0;
  std::function<void(const Eigen::VectorXd& state, Eigen::Ref<Eigen::VectorXd> z, double& y)> fn;
};

struct IntegrateOptions {
  std::optional<TorusBlock> torus;
  std::vector<BallMonitor> balls;
  std::vector<BoxMonitor> boxes;
  std::optional<SymmetryMonitor> symmetry;
  ViolationPolicy policy = ViolationPolicy::kWarn;
  DerivedRecorder derived;  // optional; fn == nullptr disables
};

// Uniformly sampled trajectory plus derived probe/measurement channels.
struct Trajectory {
  double dt = 0.0;
  int stride = 1;
  std::vector<double> times;
  Eigen::MatrixXd states;       // samples x dim
  Eigen::MatrixXd probe;        // samples x n (0 cols when not recorded)
  Eigen::VectorXd measurement;  // samples (empty when not recorded)
  MonitorLog monitors;

  int samples() const { return static_cast<int>(times.size()); }
  int dim() const { return static_cast<int>(states.cols()); }
  Eigen::VectorXd final_state() const { return states.row(samples() - 1); }
};

// Classical fixed-step 4-stage Runge-Kutta integration of ds/dt = f(s).
// Records every `stride`-th step (including step 0); the horizon is rounded
// up to a whole number of recording intervals so sampling stays uniform.
Trajectory integrate(const DerivFn& f, const Eigen::VectorXd& s0, double dt, double horizon,
                     int stride, const IntegrateOptions& options = {});

// Which recorded channel a measurement applies to.
struct ChannelSpec {
  enum class Source { kState, kProbe };
  Source source = Source::kState;
  int offset = 0;
  int size = 0;

  static ChannelSpec state_block(int offset, int size) {
    return {Source::kState, offset, size};
  }
  static ChannelSpec probe(int size) { return {Source::kProbe, 0, size}; }
};

// Earliest sampled time t_c with |channel(t) - target| <= nu for ALL sampled
// t >= t_c; nullopt if the trajectory never stays inside the ball.
std::optional<double> convergence_time(const Trajectory& traj, const Eigen::VectorXd& target,
                                       double nu, const ChannelSpec& channel);

// Earliest sampled time with |channel(t)| > eta; nullopt if never.
std::optional<double> constraint_violation(const Trajectory& traj, double eta,
                                           const ChannelSpec& channel);

}  // namespace ftes
