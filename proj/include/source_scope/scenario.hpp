#pragma once

// Scenario files: flat "key = value" lines, '#' comments, comma-separated arrays and
// a small catalog of function shapes instead of an expression parser.
//
// Function shapes (used by u0, catalyst_h, background_profile, sensors):
//   zero | one | x | x2 | sin | cos | exp | const:c | linear:c0:c1 | grid:v0;v1;...
// optionally prefixed by a scale, e.g. "3*sin" or "2.5*cos".
// Generator symbols: const:c | linear | linear:c0:c1 | grid:v0;v1;...

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "alg1.hpp"
#include "alg2.hpp"
#include "dynamics.hpp"
#include "errors.hpp"
#include "hilbert.hpp"
#include "sampling.hpp"

namespace sscope {

enum AlgorithmMask { kAlg1 = 1, kAlg2 = 2, kBoth = 3 };

struct Scenario {
  std::string name = "scenario";
  double horizon = 1.0;
  std::size_t nodes = kDefaultNodes;
  MultiplicationGenerator generator = MultiplicationGenerator::constant(0.0);
  SourceModel model;
  bool H_auto = true;
  std::vector<Sensor> sensors;
  MeasurementConfig mcfg;
  double K = 1.0;
  int ell0 = 3;
  int algorithms = kBoth;

  double R() const {
    double r = 0.0;
    for (const auto& s : sensors) r = std::max(r, norm(s.g));
    return r;
  }

  /// Re-derives H when automatic and checks every model and sampling assumption.
  /// Throws ValidationError naming the violated constraint.
  void finalize() {
    if (H_auto) model.H = model.max_content_norm();
    mcfg.horizon = horizon;
    if (auto e = mcfg.validate()) throw ValidationError(*e);
    if (auto e = model.validate(mcfg.beta)) throw ValidationError(*e);
    if (sensors.empty()) throw ValidationError("at least one sensor is required");
    std::set<std::string> ids;
    for (const auto& s : sensors) {
      if (s.g.nodes() != nodes) throw ValidationError("sensor " + s.id + " has wrong node count");
      if (!ids.insert(s.id).second) throw ValidationError("duplicate sensor id " + s.id);
    }
    if (generator.nodes() != nodes) throw ValidationError("generator symbol has wrong node count");
    if (K < 1.0) throw ValidationError("threshold multiplier K must be >= 1");
    if (algorithms & kAlg2) {
      if (mcfg.k == 0) throw ValidationError("Laplace frequency index k must be nonzero");
      if (!(mcfg.beta < 2.0 * std::numbers::pi * std::abs(mcfg.k) / model.rho_hi))
        throw ValidationError("Laplace step condition violated: beta < 2 pi k / rho_hi");
      if (ell0 < 2) throw ValidationError("ell0 must be >= 2");
    }
    for (const auto& c : model.catalysts)
      if (c.t_intake > horizon) throw ValidationError("catalyst intake after the horizon");
  }

  Alg1Params alg1_params() const {
    Alg1Params p;
    p.K = K;
    p.N = mcfg.N;
    p.beta = mcfg.beta;
    p.sigma = mcfg.sigma;
    p.D = model.D;
    p.H = model.H;
    p.R = R();
    p.L = model.background.lipschitz();
    p.rho_lo = model.rho_lo;
    p.rho_hi = model.rho_hi;
    p.horizon = horizon;
    return p;
  }

  Alg2Params alg2_params() const {
    Alg2Params p;
    p.k = mcfg.k;
    p.ell0 = ell0;
    p.beta = mcfg.beta;
    p.sigma = mcfg.sigma;
    p.D = model.D;
    p.H = model.H;
    p.L = model.background.lipschitz();
    p.rho_lo = model.rho_lo;
    p.rho_hi = model.rho_hi;
    p.horizon = horizon;
    return p;
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) out.push_back(trim(cur));
  if (!s.empty() && s.back() == sep) out.push_back("");
  return out;
}

inline bool parse_double(const std::string& s, double& v) {
  const char* b = s.data();
  const char* e = b + s.size();
  auto r = std::from_chars(b, e, v);
  return r.ec == std::errc() && r.ptr == e && std::isfinite(v);
}

struct Field {
  std::string value;
  int line;
};

class FieldReader {
 public:
  explicit FieldReader(std::map<std::string, Field> f) : f_(std::move(f)) {}

  bool has(const std::string& k) const { return f_.count(k) > 0; }
  int line(const std::string& k) const { return has(k) ? f_.at(k).line : 0; }

  std::string str(const std::string& k, const std::string& def) const { return has(k) ? f_.at(k).value : def; }
  std::string str(const std::string& k) const {
    if (!has(k)) throw ParseError("missing required key", 0, k);
    return f_.at(k).value;
  }

  double num(const std::string& k, double def) const { return has(k) ? num(k) : def; }
  double num(const std::string& k) const {
    const auto v = str(k);
    double d;
    if (!parse_double(v, d)) throw ParseError("not a number: '" + v + "'", line(k), k);
    return d;
  }

  long long integer(const std::string& k, long long def) const {
    if (!has(k)) return def;
    const auto v = str(k);
    long long x;
    auto r = std::from_chars(v.data(), v.data() + v.size(), x);
    if (r.ec != std::errc() || r.ptr != v.data() + v.size()) throw ParseError("not an integer: '" + v + "'", line(k), k);
    return x;
  }

  std::vector<double> nums(const std::string& k) const {
    std::vector<double> out;
    if (!has(k)) return out;
    for (const auto& t : split(str(k), ',')) {
      double d;
      if (!parse_double(t, d)) throw ParseError("not a number: '" + t + "'", line(k), k);
      out.push_back(d);
    }
    return out;
  }

 private:
  std::map<std::string, Field> f_;
};

}  // namespace detail

/// Evaluates one catalog entry on the grid.
inline GridFunction parse_function(const std::string& spec_in, std::size_t nodes, int line = 0,
                                   const std::string& field = "") {
  std::string spec = detail::trim(spec_in);
  if (spec.empty()) throw ParseError("empty function entry", line, field);
  double scale = 1.0;
  if (const auto star = spec.find('*'); star != std::string::npos) {
    if (!detail::parse_double(detail::trim(spec.substr(0, star)), scale))
      throw ParseError("bad scale in '" + spec + "'", line, field);
    spec = detail::trim(spec.substr(star + 1));
    if (spec.empty()) throw ParseError("missing function after scale", line, field);
  }
  auto params = detail::split(spec, ':');
  const std::string name = params.front();
  auto num = [&](std::size_t i) {
    double d;
    if (i >= params.size() || !detail::parse_double(params[i], d))
      throw ParseError("bad parameter in '" + spec + "'", line, field);
    return d;
  };
  GridFunction f(nodes);
  if (name == "zero") {
  } else if (name == "one") {
    f = GridFunction(nodes, 1.0);
  } else if (name == "x") {
    f = GridFunction::sample([](double x) { return x; }, nodes);
  } else if (name == "x2") {
    f = GridFunction::sample([](double x) { return x * x; }, nodes);
  } else if (name == "sin") {
    f = GridFunction::sample([](double x) { return std::sin(x); }, nodes);
  } else if (name == "cos") {
    f = GridFunction::sample([](double x) { return std::cos(x); }, nodes);
  } else if (name == "exp") {
    f = GridFunction::sample([](double x) { return std::exp(x); }, nodes);
  } else if (name == "const") {
    f = GridFunction(nodes, num(1));
  } else if (name == "linear") {
    const double c0 = params.size() > 1 ? num(1) : 0.0;
    const double c1 = params.size() > 2 ? num(2) : 1.0;
    f = GridFunction::sample([&](double x) { return c0 + c1 * x; }, nodes);
  } else if (name == "grid") {
    if (params.size() != 2) throw ParseError("grid needs ';'-separated values", line, field);
    std::vector<double> v;
    for (const auto& t : detail::split(params[1], ';')) {
      double d;
      if (!detail::parse_double(t, d)) throw ParseError("bad grid value '" + t + "'", line, field);
      v.push_back(d);
    }
    if (v.size() != nodes)
      throw ParseError("grid has " + std::to_string(v.size()) + " values, expected " + std::to_string(nodes), line,
                       field);
    f = GridFunction(std::move(v));
  } else {
    throw ParseError("unknown function '" + name + "'", line, field);
  }
  return f * scale;
}

inline BackgroundKind parse_background_kind(const std::string& s, int line) {
  if (s == "zero") return BackgroundKind::zero;
  if (s == "exp_decay") return BackgroundKind::exp_decay;
  if (s == "sinusoid") return BackgroundKind::sinusoid;
  throw ParseError("unknown background '" + s + "'", line, "background");
}

inline NoiseMode parse_noise_mode(const std::string& s, int line) {
  if (s == "uniform") return NoiseMode::uniform;
  if (s == "adversarial_alternating") return NoiseMode::adversarial_alternating;
  if (s == "zero") return NoiseMode::zero;
  throw ParseError("unknown noise mode '" + s + "'", line, "noise");
}

inline Scenario parse_scenario(const std::string& text, const std::string& name = "scenario") {
  static const std::set<std::string> known = {
      "name",       "horizon",         "nodes",  "generator", "u0",    "catalyst_h",         "catalyst_t",
      "catalyst_rho", "background",    "background_rate", "background_profile", "D",     "rho_lo",
      "rho_hi",     "H",               "sensors", "beta",      "N",     "k",                  "sigma",
      "noise",      "seed",            "K",      "ell0",      "algorithm"};
  std::map<std::string, detail::Field> fields;
  std::istringstream is(text);
  std::string raw;
  int lineno = 0;
  while (std::getline(is, raw)) {
    ++lineno;
    if (const auto h = raw.find('#'); h != std::string::npos) raw = raw.substr(0, h);
    const std::string line = detail::trim(raw);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("expected 'key = value'", lineno, "");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string val = detail::trim(line.substr(eq + 1));
    if (!known.count(key)) throw ParseError("unknown key", lineno, key);
    if (fields.count(key)) throw ParseError("duplicate key", lineno, key);
    if (val.empty()) throw ParseError("empty value", lineno, key);
    fields[key] = {val, lineno};
  }
  if (fields.empty()) throw ParseError("empty scenario", lineno, "");
  detail::FieldReader r(std::move(fields));

  Scenario s;
  s.name = r.str("name", name);
  s.horizon = r.num("horizon");
  const long long nodes = r.integer("nodes", static_cast<long long>(kDefaultNodes));
  if (nodes < 2) throw ParseError("need at least 2 nodes", r.line("nodes"), "nodes");
  s.nodes = static_cast<std::size_t>(nodes);

  const std::string gen = r.str("generator", "const:0");
  if (gen == "linear") {
    s.generator = MultiplicationGenerator(parse_function("x", s.nodes));
  } else if (gen.rfind("const:", 0) == 0 || gen.rfind("linear:", 0) == 0 || gen.rfind("grid:", 0) == 0) {
    s.generator = MultiplicationGenerator(parse_function(gen, s.nodes, r.line("generator"), "generator"));
  } else {
    throw ParseError("unknown generator '" + gen + "'", r.line("generator"), "generator");
  }

  s.model.u0 = parse_function(r.str("u0", "zero"), s.nodes, r.line("u0"), "u0");

  if (r.has("catalyst_h") || r.has("catalyst_t") || r.has("catalyst_rho")) {
    const auto hs = detail::split(r.str("catalyst_h"), ',');
    const auto ts = r.nums("catalyst_t");
    const auto rs = r.nums("catalyst_rho");
    if (hs.size() != ts.size() || hs.size() != rs.size())
      throw ParseError("catalyst_h, catalyst_t and catalyst_rho need equal lengths", r.line("catalyst_h"),
                       "catalyst_h");
    for (std::size_t j = 0; j < hs.size(); ++j)
      s.model.catalysts.push_back({parse_function(hs[j], s.nodes, r.line("catalyst_h"), "catalyst_h"), rs[j], ts[j]});
    for (std::size_t j = 1; j < ts.size(); ++j)
      if (!(ts[j] > ts[j - 1])) throw ParseError("intake times must increase", r.line("catalyst_t"), "catalyst_t");
  }

  s.model.background.kind = parse_background_kind(r.str("background", "zero"), r.line("background"));
  s.model.background.rate = r.num("background_rate", 0.0);
  s.model.background.profile =
      parse_function(r.str("background_profile", "zero"), s.nodes, r.line("background_profile"), "background_profile");

  s.model.D = r.num("D");
  s.model.rho_lo = r.num("rho_lo");
  s.model.rho_hi = r.num("rho_hi");
  const std::string H = r.str("H", "auto");
  if (H == "auto") {
    s.H_auto = true;
  } else {
    s.H_auto = false;
    s.model.H = r.num("H");
  }

  for (const auto& tok : detail::split(r.str("sensors", "one"), ',')) {
    std::string id = tok;
    if (tok.rfind("grid:", 0) == 0) id = "grid" + std::to_string(s.sensors.size() + 1);
    s.sensors.push_back({id, parse_function(tok, s.nodes, r.line("sensors"), "sensors")});
  }

  s.mcfg.beta = r.num("beta");
  const long long N = r.integer("N", 100);
  if (N < 1) throw ParseError("N must be a positive integer", r.line("N"), "N");
  s.mcfg.N = static_cast<int>(N);
  s.mcfg.k = static_cast<int>(r.integer("k", 1));
  s.mcfg.sigma = r.num("sigma", 0.0);
  s.mcfg.noise_mode = parse_noise_mode(r.str("noise", "uniform"), r.line("noise"));
  const long long seed = r.integer("seed", 1);
  s.mcfg.seed = static_cast<std::uint64_t>(seed);
  s.K = r.num("K", 1.0);
  s.ell0 = static_cast<int>(r.integer("ell0", 3));
  const std::string alg = r.str("algorithm", "both");
  if (alg == "1") s.algorithms = kAlg1;
  else if (alg == "2") s.algorithms = kAlg2;
  else if (alg == "both") s.algorithms = kBoth;
  else throw ParseError("algorithm must be 1, 2 or both", r.line("algorithm"), "algorithm");

  s.finalize();
  return s;
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open scenario file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  std::string name = path;
  if (const auto slash = name.find_last_of('/'); slash != std::string::npos) name = name.substr(slash + 1);
  if (const auto dot = name.rfind('.'); dot != std::string::npos) name = name.substr(0, dot);
  return parse_scenario(ss.str(), name);
}

}  // namespace sscope
