// Command-line front end: scenario simulation, figure reproduction, batch
// experiments, bound/gain evaluation, and the averaging checks.

#include <CLI11.hpp>
#include <cstdlib>
#include <iostream>
#include <sstream>

#include "ftes/harness.hpp"

namespace {

std::string default_outdir(const std::string& flag_value) {
  if (!flag_value.empty()) return flag_value;
  if (const char* env = std::getenv("FTES_OUT_DIR")) return env;
  return "out";
}

void print_outcome(const ftes::ScenarioOutcome& out) {
  for (const auto& w : out.warnings) std::cerr << "warning: " << w << "\n";
  std::cout << (out.pass ? "[PASS] " : "[FAIL] ") << out.name << ": "
            << out.fraction_converged * 100.0 << "% of " << out.runs.size()
            << " run(s) converged";
  if (out.bound_time > 0.0) std::cout << " by t = " << ftes::format_full(out.bound_time);
  std::cout << "\n";
  if (!out.metadata_path.empty()) std::cout << "metadata: " << out.metadata_path << "\n";
}

int run_bounds(const std::string& family, double k, double tstar, double q1, double q2,
               double kappa) {
  const auto [a1, a2] = ftes::alphas(q1, q2);
  std::cout << "alpha1 = " << ftes::format_full(a1) << "\n";
  std::cout << "alpha2 = " << ftes::format_full(a2) << "\n";
  const bool newton = family == "newton";
  if (k > 0.0) {
    const double t = newton ? ftes::t_star_newton(k, q1, q2)
                            : ftes::t_star_gradient(k, q1, q2, kappa);
    std::cout << "tstar = " << ftes::format_full(t) << "\n";
  } else {
    const double g = newton ? ftes::gain_for_tstar_newton(tstar, q1, q2)
                            : ftes::gain_for_tstar_gradient(tstar, q1, q2, kappa);
    std::cout << "k = " << ftes::format_full(g) << "\n";
  }
  return 0;
}

int run_verify_averaging(const std::string& freq_text, double a) {
  std::vector<ftes::Rational> freqs;
  for (const auto& tok : [&] {
         std::vector<std::string> toks;
         std::istringstream is(freq_text);
         std::string t;
         while (is >> t) toks.push_back(t);
         return toks;
       }()) {
    freqs.push_back(ftes::Rational::parse(tok));
  }
  const ftes::FrequencySet set(freqs);
  const auto first = ftes::moment_check_first(set);
  std::cout << "frequencies: " << set.str() << "\n";
  std::cout << "common period (eps1 = 1): " << ftes::format_full(first.period) << " ("
            << first.nodes << " quadrature nodes)\n";
  std::cout << "first moments: |avg outer - I/2| = " << ftes::format_full(first.max_outer_deviation)
            << ", |avg mean| = " << ftes::format_full(first.max_mean_deviation) << " -> "
            << (first.pass ? "PASS" : "FAIL") << "\n";
  const auto second = ftes::moment_check_second(set, a);
  std::cout << "second moments (a = " << a << "):\n";
  std::cout << "  vanishing entries: max |.| = " << ftes::format_full(second.max_zero_deviation)
            << " -> " << (second.zeros_pass ? "PASS" : "FAIL") << "\n";
  for (int i = 0; i < second.diag_raw.size(); ++i) {
    std::cout << "  <mu_" << i + 1 << "^2 N_" << i + 1 << i + 1
              << "> = " << ftes::format_full(second.diag_raw[i]) << " (raw, expect 2/a^2)"
              << ", scaled by a^2/16 = " << ftes::format_full(second.diag_scaled[i])
              << " (expect 1/8)\n";
  }
  for (int i = 0; i < second.offdiag_raw.rows(); ++i) {
    for (int j = i + 1; j < second.offdiag_raw.cols(); ++j) {
      std::cout << "  <mu_" << i + 1 << " mu_" << j + 1 << " N_" << i + 1 << j + 1
                << "> = " << ftes::format_full(second.offdiag_raw(i, j)) << " (raw, expect 1/a^2)"
                << ", scaled by a^2/4 = " << ftes::format_full(second.offdiag_scaled(i, j))
                << " (expect 1/4)\n";
    }
  }
  std::cout << "  scaled constants match: " << (second.scaled_constants_match ? "yes" : "no")
            << "\n";
  const bool ok = first.pass && second.zeros_pass;
  std::cout << (ok ? "PASS" : "FAIL") << "\n";
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fixed-time extremum seeking: simulation and verification toolkit"};
  app.require_subcommand(1);

  std::string config_path, out_flag, figure_id, family, freq_text = "1 3/2";
  double k = 0.0, tstar = 0.0, q1 = 3.0, q2 = 1.5, kappa = 1.0, amp = 0.1;
  int batch_n = 1;
  std::uint64_t seed = 0;
  bool list_figures = false;

  auto* simulate = app.add_subcommand("simulate", "run one scenario config");
  simulate->add_option("config", config_path, "scenario config file")->required();
  simulate->add_option("--out", out_flag, "output directory (default $FTES_OUT_DIR or ./out)");

  auto* repro = app.add_subcommand("reproduce", "run a prebaked experiment");
  repro->add_option("figure", figure_id, "figure id");
  repro->add_flag("--list", list_figures, "list available figure ids");
  repro->add_option("--out", out_flag, "output directory");

  auto* batch = app.add_subcommand("batch", "run a scenario from n sampled initial conditions");
  batch->add_option("config", config_path, "scenario config file")->required();
  batch->add_option("--n", batch_n, "number of trajectories")->required();
  batch->add_option("--seed", seed, "sampler seed")->required();
  batch->add_option("--out", out_flag, "output directory");

  auto* bounds = app.add_subcommand("bounds", "evaluate the fixed-time bound or its gain");
  bounds->add_option("family", family, "gradient|newton")
      ->required()
      ->check(CLI::IsMember({"gradient", "newton"}));
  auto* kopt = bounds->add_option("--k", k, "gain (prints the bound)");
  auto* topt = bounds->add_option("--tstar", tstar, "target bound (prints the gain)");
  bounds->add_option("--q1", q1, "shaping exponent q1 (default 3)");
  bounds->add_option("--q2", q2, "shaping exponent q2 (default 1.5)");
  bounds->add_option("--kappa", kappa, "PL constant (gradient family only, default 1)");
  kopt->excludes(topt);

  auto* verify = app.add_subcommand("verify-averaging", "oscillator moment checks");
  verify->add_option("--freqs", freq_text, "frequencies, e.g. \"1 3/2\"");
  verify->add_option("--a", amp, "probing amplitude (default 0.1)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (simulate->parsed()) {
      const auto cfg = ftes::parse_scenario_file(config_path);
      print_outcome(ftes::run_scenario(cfg, default_outdir(out_flag)));
      return 0;
    }
    if (repro->parsed()) {
      if (list_figures) {
        for (const auto& id : ftes::figure_ids()) {
          std::cout << id << ": " << ftes::figure_spec(id).description << "\n";
        }
        return 0;
      }
      if (figure_id.empty()) {
        std::cerr << "error: figure id required (or --list)\n";
        return 2;
      }
      bool all_pass = true;
      for (const auto& out : ftes::reproduce(figure_id, default_outdir(out_flag))) {
        all_pass = all_pass && out.pass;
      }
      return all_pass ? 0 : 1;
    }
    if (batch->parsed()) {
      const auto cfg = ftes::parse_scenario_file(config_path);
      print_outcome(ftes::run_batch(cfg, batch_n, seed, default_outdir(out_flag)));
      return 0;
    }
    if (bounds->parsed()) {
      if (k <= 0.0 && tstar <= 0.0) {
        std::cerr << "error: bounds: give --k or --tstar\n";
        return 2;
      }
      return run_bounds(family, k, tstar, q1, q2, kappa);
    }
    if (verify->parsed()) {
      return run_verify_averaging(freq_text, amp);
    }
  } catch (const ftes::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const ftes::NonFiniteStateError& e) {
    std::cerr << "integration error: " << e.what() << "\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::domain_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
