#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ftes/averaging.hpp"
#include "ftes/flows.hpp"
#include "ftes/sim.hpp"

namespace ftes {

// Configuration problem; the message names the offending section.key.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

enum class ControllerType {
  kFtges,
  kFtnes,
  kClassicGradient,
  kClassicNewton,
  kReducedGradient,
  kReducedNewton,
};

std::string to_string(ControllerType t);
ControllerType controller_type_from_string(const std::string& s);

struct CostConfig {
  enum class Kind { kScalarQuadratic, kQuadraticForm, kPlantComposed } kind =
      Kind::kScalarQuadratic;
  double curvature = 1.0;  // scalar-quadratic
  double zstar = 0.0;
  Eigen::MatrixXd H;  // quadratic-form
  Eigen::VectorXd b;
  double c = 0.0;
};

struct ControllerConfig {
  ControllerType type = ControllerType::kFtges;
  double q1 = 3.0;
  double q2 = 1.5;
  std::optional<double> k;
  std::optional<double> tstar;     // target bound; resolves k via the gain design
  std::optional<double> kappa_pl;  // PL estimate used by the gradient bound
  double a = 0.1;
  double eps1 = 0.01;
  double eps2 = 0.1;
  double eps0 = 1.0;
  double eta = 50.0;
  std::optional<std::vector<Rational>> freqs;  // default: FrequencySet::defaults(n)
  std::optional<Eigen::VectorXd> xi0;          // default zeros
  double xi1_scale = 1.0;                      // ftnes: xi1(0) = scale * I
  std::optional<Eigen::MatrixXd> xi1_init;     // overrides xi1_scale
  std::optional<Eigen::VectorXd> xi2_0;        // default zeros
};

struct PlantConfig {
  std::string builtin;  // "demo-2x2" or empty for explicit matrices
  Eigen::MatrixXd A, B;
  Eigen::MatrixXd output_quad;
  Eigen::VectorXd output_lin;
  double output_const = 0.0;
  std::optional<std::pair<double, double>> state_box;  // broadcast per coordinate
  std::optional<Eigen::VectorXd> x0;                   // default zeros
};

struct SimConfig {
  double dt = 0.0;  // 0 = auto from the fastest time scale
  double horizon = 1.0;
  int stride = 10;
  std::uint64_t seed = 0;
  std::optional<Eigen::VectorXd> u0;
  std::optional<Eigen::VectorXd> u0_list;              // flat, n entries per run
  std::optional<std::pair<double, double>> u0_box;     // uniform sample box
  int batch = 1;
};

struct AcceptanceConfig {
  Eigen::VectorXd zstar;
  double nu = 0.01;
  double factor = 1.0;               // pass if t_c <= factor * bound (/eps0 for plants)
  std::optional<double> bound;       // explicit bound; default: resolved T*
  std::string channel = "u";         // "u" or "z"
  double min_fraction = 1.0;         // batch pass threshold
};

struct ScenarioConfig {
  std::string name = "scenario";
  CostConfig cost;
  ControllerConfig controller;
  std::optional<PlantConfig> plant;
  SimConfig sim;
  std::optional<AcceptanceConfig> acceptance;
};

ScenarioConfig parse_scenario_text(const std::string& text);
ScenarioConfig parse_scenario_file(const std::string& path);

struct RunSummary {
  int index = 0;
  Eigen::VectorXd u0;
  Eigen::VectorXd final_state;
  std::optional<double> convergence_time;
  bool converged = false;
  std::optional<double> violation_time;
  double max_torus_correction = 0.0;
  double max_symmetry_drift = 0.0;
  std::string csv_path;
};

struct ScenarioOutcome {
  std::string name;
  // Every resolved parameter, in output order; written as key = value lines.
  std::vector<std::pair<std::string, std::string>> metadata;
  std::vector<std::string> warnings;
  std::vector<RunSummary> runs;
  std::optional<Trajectory> trajectory;  // kept for single-run scenarios
  double tstar = 0.0;                    // resolved bound (0 if not derivable)
  double bound_time = 0.0;               // factor * bound / eps0, when acceptance given
  double fraction_converged = 0.0;
  bool pass = true;
  std::string metadata_path;
};

// Runs a scenario (single trajectory or batch). When `outdir` is non-empty,
// writes one CSV per trajectory, a metadata file, and a summary CSV for
// batches. Batch trajectories run concurrently; outputs are ordered by index.
ScenarioOutcome run_scenario(const ScenarioConfig& config, const std::string& outdir = "");

// run_scenario with the batch count and seed overridden.
ScenarioOutcome run_batch(ScenarioConfig config, int n, std::uint64_t seed,
                          const std::string& outdir = "");

struct FigureSpec {
  std::string id;
  std::string description;
  std::vector<ScenarioConfig> scenarios;
};

const std::vector<std::string>& figure_ids();
FigureSpec figure_spec(const std::string& id);

// Runs every scenario of a prebaked figure, prints one pass/fail line per
// scenario, and writes CSVs plus a plotting-script stub when outdir is given.
// Returns the outcomes in scenario order.
std::vector<ScenarioOutcome> reproduce(const std::string& figure_id,
                                       const std::string& outdir = "");

// Deterministic counter-based sample in [0, 1), independent of call order.
double sample_u01(std::uint64_t seed, std::uint64_t index, std::uint64_t axis);

// 17-significant-digit representation used by every artifact writer.
std::string format_full(double v);

}  // namespace ftes
