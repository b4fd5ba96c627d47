#include "curveflow/config.hpp"

#include <algorithm>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "curveflow/errors.hpp"
#include "curveflow/presets.hpp"

namespace curveflow {

namespace pt = boost::property_tree;

namespace {

const std::map<std::string, std::set<std::string>>& allowed_keys() {
  static const std::map<std::string, std::set<std::string>> keys{
      {"domain", {"kind", "radius", "a", "b"}},
      {"grid", {"n_rho", "n_theta"}},
      {"curvature", {"family", "n", "index"}},
      {"forcing", {"preset", "rho", "Phi0", "Phi1", "g0", "g2", "k", "fraction", "z_bound", "samples"}},
      {"initial", {"preset", "rho", "rho_start", "c0", "alpha", "beta", "bump", "saddle", "dent", "dent_width"}},
      {"solver",
       {"scheme", "sigma", "tol_res", "t_max", "max_steps", "monitor_every", "dt_initial", "dt_growth", "dt_max",
        "compat_factor", "window_time", "window_dt", "threads", "seed"}},
      {"barrier", {"enabled", "mu", "N", "A_bar"}},
      {"output", {"dir"}},
  };
  return keys;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

class Reader {
 public:
  Reader(const pt::ptree& tree, const std::string& text, const std::string& source)
      : tree_(tree), text_(text), source_(source) {}

  // Line of `key` inside `[section]` (or of the section header when key is empty).
  int line_of(const std::string& section, const std::string& key) const {
    std::istringstream in(text_);
    std::string line;
    std::string current;
    int n = 0;
    while (std::getline(in, line)) {
      ++n;
      const std::string t = trim(line);
      if (t.empty() || t[0] == ';' || t[0] == '#') continue;
      if (t.front() == '[') {
        current = trim(t.substr(1, t.find(']') - 1));
        if (key.empty() && current == section) return n;
        continue;
      }
      if (current != section) continue;
      const auto eq = t.find('=');
      if (eq != std::string::npos && trim(t.substr(0, eq)) == key) return n;
    }
    return 0;
  }

  [[noreturn]] void fail(const std::string& section, const std::string& key, const std::string& what) const {
    const int line = line_of(section, key);
    std::ostringstream msg;
    msg << source_ << ":" << line << ": [" << section << "] " << key << ": " << what;
    throw ParseError(msg.str(), line);
  }

  void check_keys() const {
    for (const auto& [section, body] : tree_) {
      const auto it = allowed_keys().find(section);
      if (it == allowed_keys().end()) fail(section, "", "unknown section");
      if (!body.data().empty() && body.empty()) fail(section, section, "key outside any section");
      for (const auto& [key, value] : body) {
        if (!it->second.count(key)) fail(section, key, "unknown key");
      }
    }
  }

  bool has(const std::string& section, const std::string& key) const {
    return static_cast<bool>(tree_.get_child_optional(pt::ptree::path_type(section + "." + key, '.')));
  }

  std::string text(const std::string& section, const std::string& key, const std::string& fallback) const {
    return tree_.get<std::string>(pt::ptree::path_type(section + "." + key, '.'), fallback);
  }

  double number(const std::string& section, const std::string& key, double fallback) const {
    if (!has(section, key)) return fallback;
    const std::string raw = trim(text(section, key, ""));
    try {
      std::size_t used = 0;
      const double v = std::stod(raw, &used);
      if (used != raw.size() || !std::isfinite(v)) throw std::invalid_argument(raw);
      return v;
    } catch (const std::exception&) {
      fail(section, key, "expected a finite number, got '" + raw + "'");
    }
  }

  long integer(const std::string& section, const std::string& key, long fallback) const {
    if (!has(section, key)) return fallback;
    const std::string raw = trim(text(section, key, ""));
    try {
      std::size_t used = 0;
      const long v = std::stol(raw, &used);
      if (used != raw.size()) throw std::invalid_argument(raw);
      return v;
    } catch (const std::exception&) {
      fail(section, key, "expected an integer, got '" + raw + "'");
    }
  }

  bool flag(const std::string& section, const std::string& key, bool fallback) const {
    if (!has(section, key)) return fallback;
    const std::string raw = trim(text(section, key, ""));
    if (raw == "true" || raw == "1" || raw == "yes" || raw == "on") return true;
    if (raw == "false" || raw == "0" || raw == "no" || raw == "off") return false;
    fail(section, key, "expected a boolean, got '" + raw + "'");
  }

 private:
  const pt::ptree& tree_;
  const std::string& text_;
  const std::string& source_;
};

}  // namespace

RunConfig parse_config(std::istream& in, const std::string& source) {
  const std::string body((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  pt::ptree tree;
  try {
    std::istringstream ss(body);
    pt::read_ini(ss, tree);
  } catch (const pt::ini_parser_error& e) {
    std::ostringstream msg;
    msg << source << ":" << e.line() << ": " << e.message();
    throw ParseError(msg.str(), static_cast<int>(e.line()));
  }
  const Reader r(tree, body, source);
  r.check_keys();

  RunConfig cfg;
  cfg.source = source;
  FlowConfig& flow = cfg.flow;

  const std::string kind = r.text("domain", "kind", "disk");
  if (kind == "disk") {
    flow.domain = DomainSpec::disk(r.number("domain", "radius", 1.0));
  } else if (kind == "ellipse") {
    flow.domain = DomainSpec::ellipse(r.number("domain", "a", 2.0), r.number("domain", "b", 1.0));
  } else {
    r.fail("domain", "kind", "expected disk or ellipse, got '" + kind + "'");
  }
  const Domain domain = build_domain(flow.domain);

  flow.n_rho = static_cast<int>(r.integer("grid", "n_rho", 64));
  flow.n_theta = static_cast<int>(r.integer("grid", "n_theta", flow.n_rho));

  const std::string family = r.text("curvature", "family", "combined");
  const int n = static_cast<int>(r.integer("curvature", "n", 2));
  const int index = static_cast<int>(r.integer("curvature", "index", 1));
  try {
    flow.f = CurvatureFunction::from_name(family, n, index);
  } catch (const Error& e) {
    r.fail("curvature", "family", e.what());
  }

  cfg.z_bound = r.number("forcing", "z_bound", 10.0);
  cfg.validation_samples = static_cast<int>(r.integer("forcing", "samples", 2000));
  if (!(cfg.z_bound > 0.0)) throw ConfigError("[forcing] z_bound must be positive");
  if (cfg.validation_samples < 1) throw ConfigError("[forcing] samples must be >= 1");
  const std::string forcing = r.text("forcing", "preset", "sphere");
  const double R = domain.a();
  double forcing_rho = 0.0;
  if (forcing == "sphere") {
    if (domain.kind() != DomainKind::kDisk) throw ConfigError("the sphere forcing preset needs a disk domain");
    forcing_rho = r.number("forcing", "rho", 2.0 * R);
    flow.forcing = sphere_forcing(R, forcing_rho);
    cfg.has_sphere_reference = true;
    cfg.sphere_rho = forcing_rho;
  } else if (forcing == "affine") {
    flow.forcing = affine_forcing(r.number("forcing", "Phi0", 1.0), r.number("forcing", "Phi1", 0.0),
                                  r.number("forcing", "g0", 0.0), r.number("forcing", "g2", 0.0),
                                  r.number("forcing", "k", 1.0));
  } else if (forcing != "compatible") {
    r.fail("forcing", "preset", "expected sphere, affine or compatible, got '" + forcing + "'");
  }

  const std::string initial = r.text("initial", "preset", "sphere_approach");
  const double rho_default = forcing_rho > 0.0 ? forcing_rho : 2.0 * R;
  if (initial == "sphere_cap") {
    flow.initial = sphere_cap_initial(r.number("initial", "rho", rho_default));
  } else if (initial == "sphere_approach") {
    if (domain.kind() != DomainKind::kDisk) throw ConfigError("the sphere_approach preset needs a disk domain");
    const double rho = r.number("initial", "rho", rho_default);
    flow.initial = sphere_approach_initial(R, rho, r.number("initial", "rho_start", 0.8 * rho));
  } else if (initial == "paraboloid") {
    flow.initial = paraboloid_initial(r.number("initial", "c0", 0.0), r.number("initial", "alpha", 1.0),
                                      r.number("initial", "beta", 1.0));
  } else {
    r.fail("initial", "preset", "expected sphere_cap, sphere_approach or paraboloid, got '" + initial + "'");
  }
  if (const double eps = r.number("initial", "bump", 0.0); eps != 0.0) flow.initial = bumped_initial(flow.initial, eps);
  if (const double s = r.number("initial", "saddle", 0.0); s != 0.0) flow.initial = saddle_initial(flow.initial, s);
  if (const double d = r.number("initial", "dent", 0.0); d != 0.0) {
    flow.initial = dented_initial(flow.initial, d, r.number("initial", "dent_width", 0.15));
  }

  if (forcing == "compatible") {
    cfg.has_sphere_reference = false;
    flow.forcing = compatible_forcing(domain, flow.initial, flow.f, r.number("forcing", "k", 1.0),
                                      r.number("forcing", "fraction", 0.9));
  }

  flow.scheme = scheme_from_name(r.text("solver", "scheme", "implicit"));
  flow.sigma = r.number("solver", "sigma", flow.sigma);
  flow.tol_res = r.number("solver", "tol_res", flow.tol_res);
  flow.t_max = r.number("solver", "t_max", 1000.0);
  flow.max_steps = r.integer("solver", "max_steps", flow.max_steps);
  flow.monitor_every = static_cast<int>(r.integer("solver", "monitor_every", flow.monitor_every));
  flow.dt_initial = r.number("solver", "dt_initial", flow.dt_initial);
  flow.dt_growth = r.number("solver", "dt_growth", flow.dt_growth);
  flow.dt_max = r.number("solver", "dt_max", flow.dt_max);
  flow.compat_factor = r.number("solver", "compat_factor", flow.compat_factor);
  flow.window_time = r.number("solver", "window_time", flow.window_time);
  flow.window_dt = r.number("solver", "window_dt", flow.window_dt);
  flow.threads = static_cast<int>(r.integer("solver", "threads", 0));
  cfg.seed = static_cast<std::uint64_t>(r.integer("solver", "seed", 1));

  flow.barrier.enabled = r.flag("barrier", "enabled", true);
  flow.barrier.mu = r.number("barrier", "mu", 0.0);
  flow.barrier.N = r.number("barrier", "N", 0.0);
  flow.barrier.A_bar = r.number("barrier", "A_bar", flow.barrier.A_bar);

  cfg.out_dir = r.text("output", "dir", cfg.out_dir);

  flow.validate();
  validate_hypotheses(cfg);
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse_config(in, path);
}

void validate_hypotheses(const RunConfig& config) {
  const Domain domain = build_domain(config.flow.domain);
  auto violations =
      validate_forcing(config.flow.forcing, domain, config.z_bound, config.validation_samples, config.seed);
  if (!violations.empty()) throw HypothesisError(std::move(violations));
}

double sphere_reference(const RunConfig& config, double x, double y) {
  if (!config.has_sphere_reference) throw UsageError("this configuration has no analytic reference");
  return -std::sqrt(config.sphere_rho * config.sphere_rho - x * x - y * y);
}

}  // namespace curveflow
