#include "ftes/sim.hpp"

#include <cmath>

namespace ftes {

namespace {

// Extracts the monitored block view of a recorded sample row.
Eigen::VectorXd channel_of(const Trajectory& traj, const ChannelSpec& c, int row) {
  if (c.source == ChannelSpec::Source::kProbe) {
    return traj.probe.row(row).head(c.size);
  }
  return traj.states.row(row).segment(c.offset, c.size);
}

int first_nonfinite_channel(const Eigen::VectorXd& s) {
  for (int i = 0; i < s.size(); ++i) {
    if (!std::isfinite(s[i])) return i;
  }
  return -1;
}

class MonitorState {
 public:
  explicit MonitorState(const IntegrateOptions& opts) : opts_(opts) {
    ball_tripped_.assign(opts.balls.size(), false);
    box_tripped_.assign(opts.boxes.size(), false);
  }

  // Returns true if integration should halt at this sample.
  bool check(double t, const Eigen::VectorXd& s, MonitorLog& log) {
    bool halt = false;
    for (std::size_t i = 0; i < opts_.balls.size(); ++i) {
      const auto& m = opts_.balls[i];
      if (ball_tripped_[i] || !std::isfinite(m.radius)) continue;
      const double norm = s.segment(m.offset, m.size).norm();
      if (norm > m.radius) {
        ball_tripped_[i] = true;
        log.violations.push_back({m.name, t, norm});
        halt = halt || opts_.policy == ViolationPolicy::kHalt;
      }
    }
    for (std::size_t i = 0; i < opts_.boxes.size(); ++i) {
      const auto& m = opts_.boxes[i];
      if (box_tripped_[i]) continue;
      const auto block = s.segment(m.offset, m.lo.size());
      if ((block.array() < m.lo.array()).any() || (block.array() > m.hi.array()).any()) {
        box_tripped_[i] = true;
        log.violations.push_back({m.name, t, block.cwiseAbs().maxCoeff()});
        halt = halt || opts_.policy == ViolationPolicy::kHalt;
      }
    }
    if (opts_.symmetry) {
      const auto& m = *opts_.symmetry;
      double drift = 0.0;
      for (int r = 0; r < m.n; ++r) {
        for (int c = r + 1; c < m.n; ++c) {
          const double d = s[m.offset + r * m.n + c] - s[m.offset + c * m.n + r];
          drift += 2.0 * d * d;
        }
      }
      drift = std::sqrt(drift);
      if (drift > log.max_symmetry_drift) log.max_symmetry_drift = drift;
      if (drift > m.tol && !symmetry_warned_) {
        symmetry_warned_ = true;
        log.warnings.push_back("symmetry drift " + std::to_string(drift) + " exceeds " +
                               std::to_string(m.tol) + " at t = " + std::to_string(t));
      }
    }
    return halt;
  }

 private:
  const IntegrateOptions& opts_;
  std::vector<bool> ball_tripped_;
  std::vector<bool> box_tripped_;
  bool symmetry_warned_ = false;
};

}  // namespace

std::optional<double> MonitorLog::first_violation(const std::string& name) const {
  for (const auto& ev : violations) {
    if (ev.name == name) return ev.time;
  }
  return std::nullopt;
}

Trajectory integrate(const DerivFn& f, const Eigen::VectorXd& s0, double dt, double horizon,
                     int stride, const IntegrateOptions& options) {
  if (!(dt > 0.0)) throw std::invalid_argument("integrate: dt must be > 0");
  if (!(horizon > 0.0)) throw std::invalid_argument("integrate: horizon must be > 0");
  if (stride < 1) throw std::invalid_argument("integrate: stride must be >= 1");

  const int dim = static_cast<int>(s0.size());
  long steps = static_cast<long>(std::ceil(horizon / dt - 1e-9));
  steps = ((steps + stride - 1) / stride) * stride;  // whole recording intervals
  const long samples = steps / stride + 1;

  Trajectory traj;
  traj.dt = dt;
  traj.stride = stride;
  traj.times.reserve(samples);
  traj.states.resize(samples, dim);
  const bool derived = static_cast<bool>(options.derived.fn);
  if (derived) {
    traj.probe.resize(samples, options.derived.z_size);
    traj.measurement.resize(samples);
  }

  MonitorState monitors(options);
  Eigen::VectorXd s = s0;
  Eigen::VectorXd k1(dim), k2(dim), k3(dim), k4(dim), tmp(dim);
  Eigen::VectorXd zbuf(derived ? options.derived.z_size : 0);

  const auto record = [&](long row, double t) {
    traj.times.push_back(t);
    traj.states.row(row) = s;
    if (derived) {
      double y = 0.0;
      options.derived.fn(s, zbuf, y);
      traj.probe.row(row) = zbuf.transpose();
      traj.measurement[row] = y;
    }
  };

  long row = 0;
  record(row++, 0.0);
  if (monitors.check(0.0, s, traj.monitors) ) {
    traj.states.conservativeResize(row, dim);
    if (derived) {
      traj.probe.conservativeResize(row, options.derived.z_size);
      traj.measurement.conservativeResize(row);
    }
    return traj;
  }

  for (long step = 1; step <= steps; ++step) {
    f(s, k1);
    tmp = s + (0.5 * dt) * k1;
    f(tmp, k2);
    tmp = s + (0.5 * dt) * k2;
    f(tmp, k3);
    tmp = s + dt * k3;
    f(tmp, k4);
    s += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);

    const double t = static_cast<double>(step) * dt;

    if (options.torus) {
      for (int i = 0; i < options.torus->pairs; ++i) {
        const int o = options.torus->offset + 2 * i;
        const double r = std::sqrt(s[o] * s[o] + s[o + 1] * s[o + 1]);
        if (r > 0.0) {
          const double corr = std::abs(r - 1.0);
          if (corr > traj.monitors.max_torus_correction) {
            traj.monitors.max_torus_correction = corr;
          }
          s[o] /= r;
          s[o + 1] /= r;
        }
      }
    }

    if (!s.allFinite()) {
      throw NonFiniteStateError(t, first_nonfinite_channel(s));
    }

    if (step % stride == 0) {
      record(row++, t);
      if (monitors.check(t, s, traj.monitors)) break;
    }
  }

  if (row < samples) {  // halted early
    traj.states.conservativeResize(row, dim);
    if (derived) {
      traj.probe.conservativeResize(row, options.derived.z_size);
      traj.measurement.conservativeResize(row);
    }
  }
  if (traj.monitors.max_torus_correction > 1e-9) {
    traj.monitors.warnings.push_back("torus projection correction reached " +
                                     std::to_string(traj.monitors.max_torus_correction));
  }
  return traj;
}

std::optional<double> convergence_time(const Trajectory& traj, const Eigen::VectorXd& target,
                                       double nu, const ChannelSpec& channel) {
  if (!(nu > 0.0)) throw std::invalid_argument("convergence_time: nu must be > 0");
  if (target.size() != channel.size) {
    throw std::invalid_argument("convergence_time: target/channel dimension mismatch");
  }
  const int m = traj.samples();
  int last_outside = -1;
  for (int i = m - 1; i >= 0; --i) {
    if ((channel_of(traj, channel, i) - target).norm() > nu) {
      last_outside = i;
      break;
    }
  }
  if (last_outside == m - 1) return std::nullopt;
  return traj.times[static_cast<std::size_t>(last_outside) + 1];
}

std::optional<double> constraint_violation(const Trajectory& traj, double eta,
                                           const ChannelSpec& channel) {
  if (!(eta > 0.0)) throw std::invalid_argument("constraint_violation: eta must be > 0");
  if (!std::isfinite(eta)) return std::nullopt;
  for (int i = 0; i < traj.samples(); ++i) {
    if (channel_of(traj, channel, i).norm() > eta) return traj.times[i];
  }
  return std::nullopt;
}

}  // namespace ftes
