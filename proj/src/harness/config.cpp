#include "nhrm/harness/config.hpp"

#include <cmath>
#include <cstdio>
#include <set>

#include "nhrm/dynamics.hpp"
#include "nhrm/profile.hpp"
#include "nhrm/sampler.hpp"

namespace nhrm {

namespace {

struct ExperimentName {
  Experiment e;
  const char* name;
};

constexpr ExperimentName kNames[] = {
    {Experiment::kernel_mc, "kernel-mc"},         {Experiment::functional, "functional"},
    {Experiment::mde_check, "mde-check"},         {Experiment::f_operator, "f-operator"},
    {Experiment::linearization, "linearization"}, {Experiment::gap, "gap"},
    {Experiment::decay, "decay"},                 {Experiment::hermitian_decay, "hermitian-decay"},
    {Experiment::autocorr, "autocorr"},           {Experiment::accept_all, "accept-all"},
};

cplx complex_from_json(const nlohmann::json& j, const char* key) {
  if (j.is_number()) return j.get<double>();
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
    return {j[0].get<double>(), j[1].get<double>()};
  throw ConfigError(std::string("config field '") + key + "' must be a number or [re, im]");
}

nlohmann::json complex_to_json(cplx c) { return nlohmann::json::array({c.real(), c.imag()}); }

template <typename T>
T get_field(const nlohmann::json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(std::string("config field '") + key + "' has the wrong type");
  }
}

}  // namespace

Experiment parse_experiment(const std::string& name) {
  for (const auto& [e, n] : kNames)
    if (name == n) return e;
  throw ConfigError("unknown experiment '" + name + "'");
}

std::string to_string(Experiment e) {
  for (const auto& [x, n] : kNames)
    if (x == e) return n;
  return "unknown";
}

std::vector<double> GridSpec::build() const {
  if (kind == "uniform") return uniform_grid(start, stop, points);
  if (kind == "geometric") return geometric_grid(start, stop, points);
  throw ConfigError("grid kind must be 'uniform' or 'geometric'");
}

ExperimentConfig default_config(Experiment e) {
  ExperimentConfig c;
  c.experiment = e;
  switch (e) {
    case Experiment::kernel_mc:
      c.tolerance = 0.05;
      break;
    case Experiment::functional:
      c.n = 200;
      c.samples = 2;
      c.tolerance = 1e-8;
      break;
    case Experiment::mde_check:
      c.n = 20;
      c.samples = 0;
      c.alpha = 1e-4;
      c.tolerance = 1e-6;
      break;
    case Experiment::f_operator:
      c.n = 50;
      c.samples = 0;
      c.tolerance = 1e-8;
      break;
    case Experiment::linearization:
      c.n = 50;
      c.samples = 10;
      // Allowed deviation of the doubling ratio from 4.
      c.tolerance = 1.0;
      break;
    case Experiment::gap:
      c.samples = 20;
      // Allowed fraction of samples without the gap.
      c.tolerance = 0.05;
      break;
    case Experiment::decay:
      c.n = 1000;
      c.samples = 1;
      c.grid = {"uniform", 0.5, 60.0, 120};
      c.fit_min = 10.0;
      c.fit_max = 60.0;
      c.tolerance = 0.1;
      break;
    case Experiment::hermitian_decay:
      c.n = 2000;
      c.samples = 1;
      c.grid = {"uniform", 0.5, 50.0, 100};
      c.fit_min = 10.0;
      c.fit_max = 50.0;
      c.tolerance = 0.1;
      break;
    case Experiment::autocorr:
      c.samples = 1;
      c.g = 0.5;
      c.grid = {"uniform", 0.0, 5.0, 21};
      c.tolerance = 0.05;
      break;
    case Experiment::accept_all:
      c.seed = 20240601;
      break;
  }
  return c;
}

ExperimentConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  static const std::set<std::string> known = {"experiment", "n",       "samples",   "seed",     "profile",
                                              "law",        "g",       "zeta1",     "zeta2",    "alpha",
                                              "kappa",      "degree",  "contour",   "grid",     "fit_min",
                                              "fit_max",    "tolerance", "workers", "out_dir"};
  for (const auto& item : j.items())
    if (!known.count(item.key())) throw ConfigError("unknown config field '" + item.key() + "'");
  if (!j.contains("experiment")) throw ConfigError("config field 'experiment' is required");

  ExperimentConfig c = default_config(parse_experiment(get_field<std::string>(j, "experiment")));
  if (j.contains("n")) c.n = get_field<int>(j, "n");
  if (j.contains("samples")) c.samples = get_field<int>(j, "samples");
  if (j.contains("seed")) c.seed = get_field<std::uint64_t>(j, "seed");
  if (j.contains("profile")) c.profile = get_field<std::string>(j, "profile");
  if (j.contains("law")) c.law = get_field<std::string>(j, "law");
  if (j.contains("g")) c.g = get_field<double>(j, "g");
  if (j.contains("zeta1")) c.zeta1 = complex_from_json(j["zeta1"], "zeta1");
  if (j.contains("zeta2")) c.zeta2 = complex_from_json(j["zeta2"], "zeta2");
  if (j.contains("alpha")) c.alpha = get_field<double>(j, "alpha");
  if (j.contains("kappa")) c.kappa = get_field<double>(j, "kappa");
  if (j.contains("degree")) c.degree = get_field<int>(j, "degree");
  if (j.contains("contour")) {
    const auto& k = j["contour"];
    if (!k.is_object()) throw ConfigError("config field 'contour' must be an object");
    if (k.contains("radius")) c.contour.radius = get_field<double>(k, "radius");
    if (k.contains("nodes")) c.contour.nodes = get_field<int>(k, "nodes");
  }
  const bool explicit_grid = j.contains("grid");
  if (explicit_grid) {
    const auto& k = j["grid"];
    if (!k.is_object()) throw ConfigError("config field 'grid' must be an object");
    if (k.contains("kind")) c.grid.kind = get_field<std::string>(k, "kind");
    if (k.contains("start")) c.grid.start = get_field<double>(k, "start");
    if (k.contains("stop")) c.grid.stop = get_field<double>(k, "stop");
    if (k.contains("points")) c.grid.points = get_field<int>(k, "points");
  }
  // Prediction-only decay runs reach far longer times than the empirics.
  if (c.experiment == Experiment::decay && c.samples == 0) {
    if (!explicit_grid) c.grid = {"geometric", 1.0, 200.0, 40};
    if (!j.contains("fit_min")) c.fit_min = 50.0;
    if (!j.contains("fit_max")) c.fit_max = 200.0;
    if (!j.contains("tolerance")) c.tolerance = 0.02;
  }
  if (j.contains("fit_min")) c.fit_min = get_field<double>(j, "fit_min");
  if (j.contains("fit_max")) c.fit_max = get_field<double>(j, "fit_max");
  if (j.contains("tolerance")) c.tolerance = get_field<double>(j, "tolerance");
  if (j.contains("workers")) c.workers = get_field<int>(j, "workers");
  if (j.contains("out_dir")) c.out_dir = get_field<std::string>(j, "out_dir");
  validate(c);
  return c;
}

nlohmann::json to_json(const ExperimentConfig& c) {
  return {
      {"experiment", to_string(c.experiment)},
      {"n", c.n},
      {"samples", c.samples},
      {"seed", c.seed},
      {"profile", c.profile},
      {"law", c.law},
      {"g", c.g},
      {"zeta1", complex_to_json(c.zeta1)},
      {"zeta2", complex_to_json(c.zeta2)},
      {"alpha", c.alpha},
      {"kappa", c.kappa},
      {"degree", c.degree},
      {"contour", {{"radius", c.contour.radius}, {"nodes", c.contour.nodes}}},
      {"grid", {{"kind", c.grid.kind}, {"start", c.grid.start}, {"stop", c.grid.stop}, {"points", c.grid.points}}},
      {"fit_min", c.fit_min},
      {"fit_max", c.fit_max},
      {"tolerance", c.tolerance},
      {"workers", c.workers},
      {"out_dir", c.out_dir},
  };
}

void validate(const ExperimentConfig& c) {
  auto check = [](bool ok, const std::string& msg) {
    if (!ok) throw ConfigError(msg);
  };
  check(c.n >= 2, "n must be at least 2");
  check(c.samples >= 0, "samples must be nonnegative");
  check(c.workers >= 0, "workers must be nonnegative");
  check(std::isfinite(c.g) && c.g > 0.0 && c.g <= 1.0, "g must lie in (0, 1]");
  check(c.kappa > 0.0, "kappa must be positive");
  check(c.tolerance >= 0.0, "tolerance must be nonnegative");
  try {
    parse_entry_law(c.law);
    (void)parse_profile_kind(c.profile.substr(0, c.profile.find(':')));
    c.contour.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }

  const SpectralPoint pt{c.zeta1, c.zeta2};
  const bool needs_point = c.experiment == Experiment::kernel_mc || c.experiment == Experiment::mde_check ||
                           c.experiment == Experiment::f_operator || c.experiment == Experiment::linearization ||
                           c.experiment == Experiment::gap;
  if (needs_point) check(pt.delta() > 0.0, "zeta1 and zeta2 must lie outside the unit disk");

  switch (c.experiment) {
    case Experiment::kernel_mc:
    case Experiment::linearization:
    case Experiment::gap:
      check(c.samples >= 1, to_string(c.experiment) + " needs at least one sample");
      break;
    case Experiment::functional:
      check(c.degree >= 0 && c.degree <= 8, "degree must lie in [0, 8]");
      break;
    case Experiment::mde_check:
      check(c.alpha > 0.0 && c.alpha < c.kappa * pt.delta() * pt.delta(),
            "alpha (the difference step) must lie in (0, kappa delta^2)");
      break;
    case Experiment::autocorr:
      check(c.g < 1.0, "autocorr needs g < 1");
      [[fallthrough]];
    case Experiment::decay:
    case Experiment::hermitian_decay:
      try {
        (void)c.grid.build();
      } catch (const InvalidArgument& e) {
        throw ConfigError(std::string("invalid grid: ") + e.what());
      }
      if (c.experiment != Experiment::autocorr)
        check(c.fit_min > 0.0 && c.fit_max > c.fit_min, "fit window must satisfy 0 < fit_min < fit_max");
      break;
    default:
      break;
  }
  if (c.experiment == Experiment::linearization) check(c.alpha != 0.0, "alpha must be nonzero");
}

std::string config_hash(const ExperimentConfig& c) {
  nlohmann::json j = to_json(c);
  j.erase("workers");
  j.erase("out_dir");
  const std::string s = j.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace nhrm
