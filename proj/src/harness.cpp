#include "ftes/harness.hpp"

#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <numbers>
#include <set>
#include <sstream>
#include <thread>

#include "ftes/bounds.hpp"

namespace ftes {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::vector<std::string> split_ws(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream is(s);
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

double parse_double(const std::string& v, const std::string& field) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing characters");
    return d;
  } catch (const std::exception&) {
    throw ConfigError(field + ": expected a number, got '" + v + "'");
  }
}

long parse_long(const std::string& v, const std::string& field) {
  try {
    std::size_t pos = 0;
    const long d = std::stol(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing characters");
    return d;
  } catch (const std::exception&) {
    throw ConfigError(field + ": expected an integer, got '" + v + "'");
  }
}

Eigen::VectorXd parse_vector(const std::string& v, const std::string& field) {
  const auto toks = split_ws(v);
  if (toks.empty()) throw ConfigError(field + ": expected at least one number");
  Eigen::VectorXd out(toks.size());
  for (std::size_t i = 0; i < toks.size(); ++i) out[i] = parse_double(toks[i], field);
  return out;
}

Eigen::MatrixXd reshape_rowmajor(const Eigen::VectorXd& flat, int rows, int cols,
                                 const std::string& field) {
  if (flat.size() != static_cast<long>(rows) * cols) {
    throw ConfigError(field + ": expected " + std::to_string(rows * cols) + " entries (" +
                      std::to_string(rows) + "x" + std::to_string(cols) + " row-major), got " +
                      std::to_string(flat.size()));
  }
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) m(i, j) = flat[i * cols + j];
  }
  return m;
}

// One parsed [section]: keys in file order, with access tracking so that
// unknown keys can be reported.
class KvSection {
 public:
  void add(const std::string& key, const std::string& value, const std::string& section) {
    if (entries_.count(key)) {
      throw ConfigError(section + "." + key + ": duplicate key");
    }
    entries_[key] = value;
  }

  bool has(const std::string& key) const { return entries_.count(key) > 0; }

  std::optional<std::string> take(const std::string& key) {
    auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    used_.insert(it->first);
    return it->second;
  }

  std::string require(const std::string& key, const std::string& section) {
    auto v = take(key);
    if (!v) throw ConfigError(section + "." + key + ": required key missing");
    return *v;
  }

  void finish(const std::string& section) const {
    for (const auto& [k, v] : entries_) {
      if (!used_.count(k)) throw ConfigError(section + "." + k + ": unknown key");
    }
  }

 private:
  std::map<std::string, std::string> entries_;
  std::set<std::string> used_;
};

struct RawConfig {
  std::map<std::string, KvSection> sections;
};

RawConfig parse_raw(const std::string& text) {
  RawConfig raw;
  std::istringstream is(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw ConfigError("line " + std::to_string(lineno) + ": malformed section header");
      }
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) {
        throw ConfigError("line " + std::to_string(lineno) + ": empty section name");
      }
      raw.sections[section];  // allow empty sections
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    }
    if (section.empty()) {
      throw ConfigError("line " + std::to_string(lineno) + ": key outside any [section]");
    }
    raw.sections[section].add(trim(line.substr(0, eq)), trim(line.substr(eq + 1)), section);
  }
  return raw;
}

std::vector<Rational> parse_rationals(const std::string& v, const std::string& field) {
  const auto toks = split_ws(v);
  if (toks.empty()) throw ConfigError(field + ": expected at least one frequency");
  std::vector<Rational> out;
  for (const auto& t : toks) {
    try {
      out.push_back(Rational::parse(t));
    } catch (const std::exception& e) {
      throw ConfigError(field + ": " + e.what());
    }
  }
  return out;
}

std::pair<double, double> parse_interval(const std::string& v, const std::string& field) {
  const auto vec = parse_vector(v, field);
  if (vec.size() != 2 || !(vec[0] < vec[1])) {
    throw ConfigError(field + ": expected 'lo hi' with lo < hi");
  }
  return {vec[0], vec[1]};
}

}  // namespace

std::string to_string(ControllerType t) {
  switch (t) {
    case ControllerType::kFtges: return "ftges";
    case ControllerType::kFtnes: return "ftnes";
    case ControllerType::kClassicGradient: return "classic-gradient";
    case ControllerType::kClassicNewton: return "classic-newton";
    case ControllerType::kReducedGradient: return "reduced-gradient";
    case ControllerType::kReducedNewton: return "reduced-newton";
  }
  return "?";
}

ControllerType controller_type_from_string(const std::string& s) {
  if (s == "ftges") return ControllerType::kFtges;
  if (s == "ftnes") return ControllerType::kFtnes;
  if (s == "classic-gradient") return ControllerType::kClassicGradient;
  if (s == "classic-newton") return ControllerType::kClassicNewton;
  if (s == "reduced-gradient") return ControllerType::kReducedGradient;
  if (s == "reduced-newton") return ControllerType::kReducedNewton;
  throw ConfigError("controller.type: unknown controller '" + s + "'");
}

std::string format_full(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double sample_u01(std::uint64_t seed, std::uint64_t index, std::uint64_t axis) {
  auto mix = [](std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  };
  const std::uint64_t h = mix(seed ^ mix(index ^ mix(axis + 0x1234567891011ULL)));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

ScenarioConfig parse_scenario_text(const std::string& text) {
  RawConfig raw = parse_raw(text);
  ScenarioConfig cfg;

  for (const auto& [name, _] : raw.sections) {
    if (name != "scenario" && name != "cost" && name != "controller" && name != "plant" &&
        name != "sim" && name != "acceptance") {
      throw ConfigError(name + ": unknown section");
    }
  }

  if (raw.sections.count("scenario")) {
    auto& s = raw.sections["scenario"];
    if (auto v = s.take("name")) cfg.name = *v;
    s.finish("scenario");
  }

  if (!raw.sections.count("cost")) throw ConfigError("cost: section required");
  {
    auto& s = raw.sections["cost"];
    const std::string type = s.require("type", "cost");
    if (type == "scalar-quadratic") {
      cfg.cost.kind = CostConfig::Kind::kScalarQuadratic;
      cfg.cost.curvature = parse_double(s.require("curvature", "cost"), "cost.curvature");
      cfg.cost.zstar = parse_double(s.require("zstar", "cost"), "cost.zstar");
    } else if (type == "quadratic-form") {
      cfg.cost.kind = CostConfig::Kind::kQuadraticForm;
      cfg.cost.b = parse_vector(s.require("b", "cost"), "cost.b");
      const int n = static_cast<int>(cfg.cost.b.size());
      cfg.cost.H = reshape_rowmajor(parse_vector(s.require("H", "cost"), "cost.H"), n, n, "cost.H");
      if (auto v = s.take("c")) cfg.cost.c = parse_double(*v, "cost.c");
    } else if (type == "plant-composed") {
      cfg.cost.kind = CostConfig::Kind::kPlantComposed;
    } else {
      throw ConfigError("cost.type: unknown cost family '" + type + "'");
    }
    s.finish("cost");
  }

  if (!raw.sections.count("controller")) throw ConfigError("controller: section required");
  {
    auto& s = raw.sections["controller"];
    auto& c = cfg.controller;
    c.type = controller_type_from_string(s.require("type", "controller"));
    if (auto v = s.take("q1")) c.q1 = parse_double(*v, "controller.q1");
    if (auto v = s.take("q2")) c.q2 = parse_double(*v, "controller.q2");
    if (auto v = s.take("k")) c.k = parse_double(*v, "controller.k");
    if (auto v = s.take("tstar")) c.tstar = parse_double(*v, "controller.tstar");
    if (auto v = s.take("kappa_pl")) c.kappa_pl = parse_double(*v, "controller.kappa_pl");
    if (auto v = s.take("a")) c.a = parse_double(*v, "controller.a");
    if (auto v = s.take("eps1")) c.eps1 = parse_double(*v, "controller.eps1");
    if (auto v = s.take("eps2")) c.eps2 = parse_double(*v, "controller.eps2");
    if (auto v = s.take("eps0")) c.eps0 = parse_double(*v, "controller.eps0");
    if (auto v = s.take("eta")) c.eta = parse_double(*v, "controller.eta");
    if (auto v = s.take("freqs")) c.freqs = parse_rationals(*v, "controller.freqs");
    if (auto v = s.take("xi0")) c.xi0 = parse_vector(*v, "controller.xi0");
    if (auto v = s.take("xi1_scale")) c.xi1_scale = parse_double(*v, "controller.xi1_scale");
    if (auto v = s.take("xi1")) {
      const Eigen::VectorXd flat = parse_vector(*v, "controller.xi1");
      const int n = static_cast<int>(std::lround(std::sqrt(double(flat.size()))));
      c.xi1_init = reshape_rowmajor(flat, n, n, "controller.xi1");
    }
    if (auto v = s.take("xi2_0")) c.xi2_0 = parse_vector(*v, "controller.xi2_0");
    s.finish("controller");
  }

  if (raw.sections.count("plant")) {
    auto& s = raw.sections["plant"];
    PlantConfig p;
    if (auto v = s.take("builtin")) {
      p.builtin = *v;
    } else {
      const Eigen::VectorXd aflat = parse_vector(s.require("A", "plant"), "plant.A");
      const int pdim = static_cast<int>(std::lround(std::sqrt(double(aflat.size()))));
      p.A = reshape_rowmajor(aflat, pdim, pdim, "plant.A");
      const Eigen::VectorXd bflat = parse_vector(s.require("B", "plant"), "plant.B");
      if (bflat.size() % pdim != 0) {
        throw ConfigError("plant.B: entry count must be a multiple of the state dimension");
      }
      p.B = reshape_rowmajor(bflat, pdim, static_cast<int>(bflat.size()) / pdim, "plant.B");
      p.output_quad = reshape_rowmajor(parse_vector(s.require("output_quad", "plant"),
                                                    "plant.output_quad"),
                                       pdim, pdim, "plant.output_quad");
      p.output_lin = parse_vector(s.require("output_lin", "plant"), "plant.output_lin");
      if (auto v = s.take("output_const")) p.output_const = parse_double(*v, "plant.output_const");
    }
    if (auto v = s.take("box")) p.state_box = parse_interval(*v, "plant.box");
    if (auto v = s.take("x0")) p.x0 = parse_vector(*v, "plant.x0");
    s.finish("plant");
    cfg.plant = std::move(p);
  }

  if (!raw.sections.count("sim")) throw ConfigError("sim: section required");
  {
    auto& s = raw.sections["sim"];
    auto& m = cfg.sim;
    if (auto v = s.take("dt")) m.dt = parse_double(*v, "sim.dt");
    m.horizon = parse_double(s.require("horizon", "sim"), "sim.horizon");
    if (auto v = s.take("stride")) m.stride = static_cast<int>(parse_long(*v, "sim.stride"));
    if (auto v = s.take("seed")) m.seed = static_cast<std::uint64_t>(parse_long(*v, "sim.seed"));
    if (auto v = s.take("u0")) m.u0 = parse_vector(*v, "sim.u0");
    if (auto v = s.take("u0_list")) {
      const Eigen::VectorXd flat = parse_vector(*v, "sim.u0_list");
      m.u0_list = flat;  // reshaped once n is known
    }
    if (auto v = s.take("u0_box")) m.u0_box = parse_interval(*v, "sim.u0_box");
    if (auto v = s.take("batch")) m.batch = static_cast<int>(parse_long(*v, "sim.batch"));
    s.finish("sim");
  }

  if (raw.sections.count("acceptance")) {
    auto& s = raw.sections["acceptance"];
    AcceptanceConfig a;
    a.zstar = parse_vector(s.require("zstar", "acceptance"), "acceptance.zstar");
    a.nu = parse_double(s.require("nu", "acceptance"), "acceptance.nu");
    if (auto v = s.take("factor")) a.factor = parse_double(*v, "acceptance.factor");
    if (auto v = s.take("bound")) a.bound = parse_double(*v, "acceptance.bound");
    if (auto v = s.take("channel")) {
      if (*v != "u" && *v != "z") throw ConfigError("acceptance.channel: expected 'u' or 'z'");
      a.channel = *v;
    }
    if (auto v = s.take("min_fraction")) {
      a.min_fraction = parse_double(*v, "acceptance.min_fraction");
    }
    s.finish("acceptance");
    cfg.acceptance = std::move(a);
  }

  return cfg;
}

ScenarioConfig parse_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_scenario_text(ss.str());
}

namespace {

bool is_reduced(ControllerType t) {
  return t == ControllerType::kReducedGradient || t == ControllerType::kReducedNewton;
}

bool is_newton_family(ControllerType t) {
  return t == ControllerType::kFtnes || t == ControllerType::kClassicNewton ||
         t == ControllerType::kReducedNewton;
}

bool is_classic(ControllerType t) {
  return t == ControllerType::kClassicGradient || t == ControllerType::kClassicNewton;
}

struct Resolved {
  ScenarioConfig cfg;
  int n = 0;
  CostSpec cost;
  std::shared_ptr<const PlantModel> plant;  // null for static runs
  ShapeParams shape;
  std::optional<FtgesParams> params;  // dithered controllers only
  double dt = 0.0;
  double tstar = 0.0;  // 0 when not derivable
  std::vector<std::string> warnings;
  std::vector<Eigen::VectorXd> initials;  // u0 per run
  Eigen::VectorXd x0;                     // plant runs
};

CostSpec build_cost(const ScenarioConfig& cfg, std::shared_ptr<const PlantModel>& plant_out) {
  switch (cfg.cost.kind) {
    case CostConfig::Kind::kScalarQuadratic:
      if (cfg.cost.curvature <= 0.0) throw ConfigError("cost.curvature: must be > 0");
      return CostSpec::scalar_quadratic(cfg.cost.curvature, cfg.cost.zstar);
    case CostConfig::Kind::kQuadraticForm:
      try {
        return CostSpec::quadratic_form(cfg.cost.H, cfg.cost.b, cfg.cost.c);
      } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("cost.H: ") + e.what());
      }
    case CostConfig::Kind::kPlantComposed: {
      if (!cfg.plant) throw ConfigError("plant: section required for a plant-composed cost");
      const auto& pc = *cfg.plant;
      PlantModel model = [&]() {
        if (!pc.builtin.empty()) {
          if (pc.builtin != "demo-2x2") {
            throw ConfigError("plant.builtin: unknown plant '" + pc.builtin + "'");
          }
          return PlantModel::demo2x2();
        }
        Eigen::VectorXd lo, hi;
        if (pc.state_box) {
          lo = Eigen::VectorXd::Constant(pc.A.rows(), pc.state_box->first);
          hi = Eigen::VectorXd::Constant(pc.A.rows(), pc.state_box->second);
        }
        try {
          return PlantModel(pc.A, pc.B, pc.output_quad, pc.output_lin, pc.output_const, lo, hi);
        } catch (const std::invalid_argument& e) {
          throw ConfigError(std::string("plant.A: ") + e.what());
        }
      }();
      auto cost = CostSpec::plant_composed(std::move(model));
      plant_out = std::shared_ptr<const PlantModel>(cost.plant(), [cost](const PlantModel*) {});
      return cost;
    }
  }
  throw ConfigError("cost.type: unhandled cost family");
}

Resolved resolve(const ScenarioConfig& cfg_in) {
  std::shared_ptr<const PlantModel> plant;
  CostSpec cost = build_cost(cfg_in, plant);
  Resolved r{cfg_in, cost.dim(), std::move(cost), std::move(plant)};
  const auto& cc = r.cfg.controller;

  if (r.cfg.plant && cfg_in.cost.kind != CostConfig::Kind::kPlantComposed) {
    throw ConfigError("cost.type: a plant section requires a plant-composed cost");
  }

  // Gain / shape resolution.
  if (cc.k && cc.tstar) {
    throw ConfigError("controller.k: give either k or tstar, not both");
  }
  double k = 0.0;
  if (is_classic(cc.type)) {
    if (cc.tstar) {
      throw ConfigError("controller.tstar: classic controllers have no fixed-time bound");
    }
    k = cc.k.value_or(0.5);
    r.shape = ShapeParams::classic(k);
  } else {
    try {
      if (cc.tstar) {
        if (is_newton_family(cc.type)) {
          k = gain_for_tstar_newton(*cc.tstar, cc.q1, cc.q2);
        } else {
          if (!cc.kappa_pl) {
            throw ConfigError(
                "controller.kappa_pl: required to resolve k from tstar for gradient "
                "controllers");
          }
          k = gain_for_tstar_gradient(*cc.tstar, cc.q1, cc.q2, *cc.kappa_pl);
        }
      } else if (cc.k) {
        k = *cc.k;
      } else {
        throw ConfigError("controller.k: either k or tstar is required");
      }
      r.shape = ShapeParams::admissible(cc.q1, cc.q2, k);
      if (is_newton_family(cc.type)) {
        r.tstar = t_star_newton(k, cc.q1, cc.q2);
      } else if (cc.kappa_pl) {
        r.tstar = t_star_gradient(k, cc.q1, cc.q2, *cc.kappa_pl);
      }
    } catch (const std::domain_error& e) {
      throw ConfigError(std::string("controller.q1: ") + e.what());
    }
  }

  // Dither wiring for the full extremum-seeking controllers.
  if (!is_reduced(cc.type)) {
    FrequencySet freqs = cc.freqs ? FrequencySet(*cc.freqs) : FrequencySet::defaults(r.n);
    if (freqs.size() != r.n) {
      throw ConfigError("controller.freqs: need exactly " + std::to_string(r.n) +
                        " frequencies");
    }
    if (!(cc.a > 0.0)) throw ConfigError("controller.a: must be > 0 for dithered controllers");
    try {
      r.params = FtgesParams(r.shape, DitherParams(cc.a, cc.eps1), std::move(freqs), cc.eps2,
                             cc.eta, cc.eps0);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("controller.eps2: ") + e.what());
    }
    for (auto& w : r.params->tuning_warnings()) r.warnings.push_back(w);
  } else if (cc.eps0 != 1.0) {
    throw ConfigError("controller.eps0: reduced flows have no plant time scale");
  }

  // Step size. 100 steps per cycle of the fastest oscillator keeps the
  // per-step torus projection correction below 1e-9 (the radius drift of the
  // 4-stage scheme on a rotation is ~ (w dt)^6 / 144 per step).
  r.dt = r.cfg.sim.dt;
  if (r.dt <= 0.0) {
    double dt = std::numeric_limits<double>::infinity();
    if (r.params) {
      dt = std::min(dt, r.params->dither.eps1 /
                            (100.0 * r.params->freqs.max_value() * r.params->eps0));
    }
    if (r.plant) {
      dt = std::min(dt, 1.0 / (50.0 * r.plant->A().cwiseAbs().rowwise().sum().maxCoeff()));
    }
    r.dt = std::isfinite(dt) ? dt : r.cfg.sim.horizon / 1e5;
  }
  if (r.params) {
    const double warn_dt = r.params->dither.eps1 /
                           (40.0 * r.params->freqs.max_value() * r.params->eps0);
    if (r.dt > warn_dt) {
      r.warnings.push_back("sim.dt = " + format_full(r.dt) +
                           " does not resolve the oscillator (recommend dt <= " +
                           format_full(warn_dt) + ")");
    }
  }
  if (!(r.cfg.sim.horizon > 0.0)) throw ConfigError("sim.horizon: must be > 0");
  if (r.cfg.sim.stride < 1) throw ConfigError("sim.stride: must be >= 1");

  // Initial conditions.
  const auto& sc = r.cfg.sim;
  const int given = (sc.u0 ? 1 : 0) + (sc.u0_list ? 1 : 0) + (sc.u0_box ? 1 : 0);
  if (given != 1) {
    throw ConfigError("sim.u0: give exactly one of u0, u0_list, or u0_box");
  }
  if (sc.u0) {
    if (sc.u0->size() != r.n) throw ConfigError("sim.u0: expected dimension " +
                                                std::to_string(r.n));
    r.initials.push_back(*sc.u0);
  } else if (sc.u0_list) {
    if (sc.u0_list->size() % r.n != 0) {
      throw ConfigError("sim.u0_list: entry count must be a multiple of the dimension");
    }
    const int rows = static_cast<int>(sc.u0_list->size()) / r.n;
    for (int i = 0; i < rows; ++i) {
      Eigen::VectorXd u0(r.n);
      for (int ax = 0; ax < r.n; ++ax) u0[ax] = (*sc.u0_list)(i * r.n + ax);
      r.initials.push_back(std::move(u0));
    }
  } else {
    if (sc.batch < 1) throw ConfigError("sim.batch: must be >= 1");
    const auto [lo, hi] = *sc.u0_box;
    for (int i = 0; i < sc.batch; ++i) {
      Eigen::VectorXd u0(r.n);
      for (int ax = 0; ax < r.n; ++ax) {
        u0[ax] = lo + (hi - lo) * sample_u01(sc.seed, static_cast<std::uint64_t>(i),
                                             static_cast<std::uint64_t>(ax));
      }
      r.initials.push_back(std::move(u0));
    }
  }

  if (r.plant) {
    r.x0 = r.cfg.plant->x0.value_or(Eigen::VectorXd::Zero(r.plant->state_dim()));
    if (r.x0.size() != r.plant->state_dim()) {
      throw ConfigError("plant.x0: expected dimension " +
                        std::to_string(r.plant->state_dim()));
    }
    if (is_reduced(r.cfg.controller.type)) {
      throw ConfigError("controller.type: reduced flows do not take a plant in the loop");
    }
  }

  return r;
}

Eigen::VectorXd initial_state(const Resolved& r, const Eigen::VectorXd& u0) {
  const auto& cc = r.cfg.controller;
  const int n = r.n;
  if (is_reduced(cc.type)) return u0;

  Eigen::VectorXd xi0 = cc.xi0.value_or(Eigen::VectorXd::Zero(n));
  if (xi0.size() == 1 && n > 1) xi0 = Eigen::VectorXd::Constant(n, xi0[0]);
  if (xi0.size() != n) throw ConfigError("controller.xi0: expected dimension " +
                                         std::to_string(n));
  const TorusState mu0 = TorusState::canonical(n);

  Eigen::VectorXd s;
  if (!is_newton_family(cc.type)) {
    FtgesState st{u0, xi0, mu0};
    s = pack(st);
  } else {
    Eigen::MatrixXd xi1 = cc.xi1_init.value_or(
        Eigen::MatrixXd(cc.xi1_scale * Eigen::MatrixXd::Identity(n, n)));
    if (xi1.rows() != n || xi1.cols() != n) {
      throw ConfigError("controller.xi1: expected " + std::to_string(n) + "x" +
                        std::to_string(n));
    }
    Eigen::VectorXd xi2 = cc.xi2_0.value_or(Eigen::VectorXd::Zero(n));
    if (xi2.size() == 1 && n > 1) xi2 = Eigen::VectorXd::Constant(n, xi2[0]);
    if (xi2.size() != n) throw ConfigError("controller.xi2_0: expected dimension " +
                                           std::to_string(n));
    FtnesState st{u0, xi1, xi2, mu0};
    s = pack(st);
  }
  if (r.plant) {
    Eigen::VectorXd full(s.size() + r.x0.size());
    full << s, r.x0;
    return full;
  }
  return s;
}

struct Wiring {
  DerivFn rhs;
  IntegrateOptions options;
};

Wiring wire(const Resolved& r) {
  const auto& cc = r.cfg.controller;
  Wiring w;
  if (is_reduced(cc.type)) {
    const CostSpec cost = r.cost;
    if (cc.type == ControllerType::kReducedGradient) {
      w.rhs = make_reduced_gradient_rhs(cost, r.shape);
    } else {
      w.rhs = make_reduced_newton_rhs(cost, r.shape);
    }
    w.options.derived.z_size = r.n;
    w.options.derived.fn = [cost](const Eigen::VectorXd& s, Eigen::Ref<Eigen::VectorXd> z,
                                  double& y) {
      z = s;
      y = cost.eval(s);
    };
    return w;
  }

  const ControllerKind kind =
      is_newton_family(cc.type) ? ControllerKind::kFtnes : ControllerKind::kFtges;
  if (r.plant) {
    w.rhs = (kind == ControllerKind::kFtges) ? make_ftges_plant_rhs(*r.params, r.plant)
                                             : make_ftnes_plant_rhs(*r.params, r.plant);
    w.options = make_plant_options(*r.params, kind, r.plant);
  } else {
    const CostSpec cost = r.cost;
    MeasurementFn measure = [cost](const Eigen::VectorXd& z) { return cost.eval(z); };
    w.rhs = (kind == ControllerKind::kFtges) ? make_ftges_rhs(*r.params, measure)
                                             : make_ftnes_rhs(*r.params, measure);
    w.options = make_static_options(*r.params, kind, measure);
  }
  return w;
}

std::vector<std::pair<std::string, int>> csv_columns(const Resolved& r) {
  // name -> state column (or -1 for the probe/measurement channels appended
  // separately). The oscillator state is reconstructible and not exported.
  std::vector<std::pair<std::string, int>> cols;
  const auto& cc = r.cfg.controller;
  const int n = r.n;
  for (int i = 0; i < n; ++i) cols.push_back({"u_" + std::to_string(i + 1), i});
  if (!is_reduced(cc.type)) {
    if (is_newton_family(cc.type)) {
      const FtnesLayout lay(n);
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
          cols.push_back({"xi1_" + std::to_string(i + 1) + std::to_string(j + 1),
                          lay.xi1_offset() + i * n + j});
        }
      }
      for (int i = 0; i < n; ++i) {
        cols.push_back({"xi2_" + std::to_string(i + 1), lay.xi2_offset() + i});
      }
    } else {
      const FtgesLayout lay(n);
      for (int i = 0; i < n; ++i) {
        cols.push_back({"xi_" + std::to_string(i + 1), lay.xi_offset() + i});
      }
    }
  }
  return cols;
}

void write_csv(const std::string& path, const Resolved& r, const Trajectory& traj) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  const auto cols = csv_columns(r);
  const int n = r.n;
  out << "t";
  for (const auto& [name, _] : cols) out << "," << name;
  for (int i = 0; i < n; ++i) out << ",z_" << (i + 1);
  out << ",y";
  const int p = r.plant ? r.plant->state_dim() : 0;
  const int x_offset = static_cast<int>(traj.states.cols()) - p;
  for (int i = 0; i < p; ++i) out << ",x_" << (i + 1);
  out << "\n";
  for (int row = 0; row < traj.samples(); ++row) {
    out << format_full(traj.times[row]);
    for (const auto& [_, idx] : cols) out << "," << format_full(traj.states(row, idx));
    for (int i = 0; i < n; ++i) out << "," << format_full(traj.probe(row, i));
    out << "," << format_full(traj.measurement[row]);
    for (int i = 0; i < p; ++i) out << "," << format_full(traj.states(row, x_offset + i));
    out << "\n";
  }
}

std::string vec_str(const Eigen::VectorXd& v) {
  std::string s;
  for (int i = 0; i < v.size(); ++i) {
    if (i) s += " ";
    s += format_full(v[i]);
  }
  return s;
}

}  // namespace

ScenarioOutcome run_scenario(const ScenarioConfig& config, const std::string& outdir) {
  Resolved r = resolve(config);
  const int nruns = static_cast<int>(r.initials.size());
  const auto& acc = r.cfg.acceptance;

  ScenarioOutcome out;
  out.name = r.cfg.name;
  out.tstar = r.tstar;
  out.warnings = r.warnings;

  double bound = 0.0;
  if (acc) {
    bound = acc->bound.value_or(r.tstar);
    if (!(bound > 0.0)) {
      throw ConfigError(
          "acceptance.bound: no bound derivable from the controller config; set it explicitly");
    }
    const double eps0 = r.params ? r.params->eps0 : 1.0;
    out.bound_time = acc->factor * bound / eps0;
    if (out.bound_time > r.cfg.sim.horizon) {
      out.warnings.push_back("sim.horizon = " + format_full(r.cfg.sim.horizon) +
                             " ends before the acceptance bound " +
                             format_full(out.bound_time));
    }
    if (acc->zstar.size() != r.n) throw ConfigError("acceptance.zstar: dimension mismatch");
  }

  if (!outdir.empty()) std::filesystem::create_directories(outdir);

  out.runs.resize(nruns);
  std::atomic<int> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;

  auto run_one = [&](int idx) {
    RunSummary sum;
    sum.index = idx;
    sum.u0 = r.initials[idx];
    // Each worker wires its own right-hand side: the functors carry scratch.
    const Wiring w = wire(r);
    const Trajectory traj =
        integrate(w.rhs, initial_state(r, sum.u0), r.dt, r.cfg.sim.horizon, r.cfg.sim.stride,
                  w.options);
    sum.final_state = traj.final_state();
    sum.max_torus_correction = traj.monitors.max_torus_correction;
    sum.max_symmetry_drift = traj.monitors.max_symmetry_drift;
    if (!traj.monitors.violations.empty()) {
      sum.violation_time = traj.monitors.violations.front().time;
    }
    if (acc) {
      const ChannelSpec chan = (acc->channel == "z")
                                   ? ChannelSpec::probe(r.n)
                                   : ChannelSpec::state_block(0, r.n);
      sum.convergence_time = convergence_time(traj, acc->zstar, acc->nu, chan);
      sum.converged = sum.convergence_time && *sum.convergence_time <= out.bound_time * (1 + 1e-12);
    }
    if (!outdir.empty()) {
      const std::string fname = nruns == 1
                                    ? out.name + ".csv"
                                    : out.name + "_" + std::to_string(idx) + ".csv";
      sum.csv_path = (std::filesystem::path(outdir) / fname).string();
      write_csv(sum.csv_path, r, traj);
    }
    if (nruns == 1) out.trajectory = traj;
    out.runs[idx] = std::move(sum);
  };

  const int workers =
      std::max(1, std::min<int>(static_cast<int>(std::thread::hardware_concurrency()), nruns));
  if (workers == 1 || nruns == 1) {
    for (int i = 0; i < nruns; ++i) run_one(i);
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < workers; ++t) {
      pool.emplace_back([&]() {
        for (int i = next.fetch_add(1); i < nruns; i = next.fetch_add(1)) {
          try {
            run_one(i);
          } catch (...) {
            std::lock_guard<std::mutex> lock(error_mutex);
            if (!first_error) first_error = std::current_exception();
            return;
          }
        }
      });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
  }

  int converged = 0;
  for (const auto& run : out.runs) converged += run.converged ? 1 : 0;
  out.fraction_converged = nruns ? static_cast<double>(converged) / nruns : 0.0;
  out.pass = !acc || out.fraction_converged >= acc->min_fraction - 1e-12;

  // Metadata: every resolved parameter, then per-run results.
  auto put = [&](const std::string& k, const std::string& v) { out.metadata.push_back({k, v}); };
  put("scenario", out.name);
  put("controller.type", to_string(r.cfg.controller.type));
  switch (r.cfg.cost.kind) {
    case CostConfig::Kind::kScalarQuadratic:
      put("cost.type", "scalar-quadratic");
      put("cost.curvature", format_full(r.cfg.cost.curvature));
      put("cost.zstar", format_full(r.cfg.cost.zstar));
      break;
    case CostConfig::Kind::kQuadraticForm: {
      put("cost.type", "quadratic-form");
      Eigen::VectorXd hflat(r.n * r.n);
      for (int i = 0; i < r.n; ++i)
        for (int j = 0; j < r.n; ++j) hflat[i * r.n + j] = r.cfg.cost.H(i, j);
      put("cost.H", vec_str(hflat));
      put("cost.b", vec_str(r.cfg.cost.b));
      put("cost.c", format_full(r.cfg.cost.c));
      break;
    }
    case CostConfig::Kind::kPlantComposed:
      put("cost.type", "plant-composed");
      put("plant.builtin", r.cfg.plant->builtin.empty() ? "(explicit)" : r.cfg.plant->builtin);
      break;
  }
  put("cost.minimizer", vec_str(r.cost.minimizer()));
  put("cost.minimum", format_full(r.cost.minimum()));
  if (!r.shape.is_classic()) {
    put("controller.q1", format_full(r.shape.q1));
    put("controller.q2", format_full(r.shape.q2));
    put("resolved.alpha1", format_full(r.shape.alpha1));
    put("resolved.alpha2", format_full(r.shape.alpha2));
  } else {
    put("resolved.alpha1", "0");
    put("resolved.alpha2", "0");
  }
  put("resolved.k", format_full(r.shape.k));
  if (r.cfg.controller.kappa_pl) put("controller.kappa_pl", format_full(*r.cfg.controller.kappa_pl));
  if (r.tstar > 0.0) put("resolved.tstar", format_full(r.tstar));
  if (r.params) {
    put("controller.a", format_full(r.params->dither.a));
    put("controller.eps1", format_full(r.params->dither.eps1));
    put("controller.eps2", format_full(r.params->eps2));
    put("controller.eps0", format_full(r.params->eps0));
    put("controller.eta", format_full(r.params->eta));
    put("controller.freqs", r.params->freqs.str());
  }
  put("sim.dt", format_full(r.dt));
  put("sim.horizon", format_full(r.cfg.sim.horizon));
  put("sim.stride", std::to_string(r.cfg.sim.stride));
  put("sim.seed", std::to_string(r.cfg.sim.seed));
  put("sim.runs", std::to_string(nruns));
  if (acc) {
    put("acceptance.zstar", vec_str(acc->zstar));
    put("acceptance.nu", format_full(acc->nu));
    put("acceptance.factor", format_full(acc->factor));
    put("acceptance.channel", acc->channel);
    put("acceptance.bound_time", format_full(out.bound_time));
    put("acceptance.min_fraction", format_full(acc->min_fraction));
  }
  for (const auto& run : out.runs) {
    const std::string prefix = "run." + std::to_string(run.index);
    put(prefix + ".u0", vec_str(run.u0));
    if (run.convergence_time) {
      put(prefix + ".convergence_time", format_full(*run.convergence_time));
    } else if (acc) {
      put(prefix + ".convergence_time", "none");
    }
    if (acc) put(prefix + ".converged", run.converged ? "1" : "0");
    put(prefix + ".constraint_violation",
        run.violation_time ? format_full(*run.violation_time) : "none");
  }
  put("result.fraction_converged", format_full(out.fraction_converged));
  put("result.pass", out.pass ? "1" : "0");
  for (std::size_t i = 0; i < out.warnings.size(); ++i) {
    put("warning." + std::to_string(i), out.warnings[i]);
  }

  if (!outdir.empty()) {
    out.metadata_path = (std::filesystem::path(outdir) / (out.name + "_meta.txt")).string();
    std::ofstream meta(out.metadata_path);
    for (const auto& [k, v] : out.metadata) meta << k << " = " << v << "\n";
    if (nruns > 1) {
      const std::string spath =
          (std::filesystem::path(outdir) / (out.name + "_summary.csv")).string();
      std::ofstream s(spath);
      s << "index,u0,convergence_time,converged,constraint_violation\n";
      for (const auto& run : out.runs) {
        s << run.index << "," << vec_str(run.u0) << ","
          << (run.convergence_time ? format_full(*run.convergence_time) : "none") << ","
          << (run.converged ? 1 : 0) << ","
          << (run.violation_time ? format_full(*run.violation_time) : "none") << "\n";
      }
    }
  }
  return out;
}

ScenarioOutcome run_batch(ScenarioConfig config, int n, std::uint64_t seed,
                          const std::string& outdir) {
  if (n < 1) throw ConfigError("sim.batch: must be >= 1");
  if (!config.sim.u0_box) {
    throw ConfigError("sim.u0_box: required for batch runs");
  }
  config.sim.u0 = std::nullopt;
  config.sim.u0_list = std::nullopt;
  config.sim.batch = n;
  config.sim.seed = seed;
  return run_scenario(config, outdir);
}

}  // namespace ftes
