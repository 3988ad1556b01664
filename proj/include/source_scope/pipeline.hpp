#pragma once

// End-to-end runs (simulate, sample, detect, certify), parameter sweeps, and their
// CSV writers.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "alg1.hpp"
#include "alg2.hpp"
#include "bounds.hpp"
#include "dynamics.hpp"
#include "errors.hpp"
#include "format.hpp"
#include "sampling.hpp"
#include "scenario.hpp"

namespace sscope {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct RunMetrics {
  double rel_coeff_err_g2 = kNaN;
  std::vector<double> rho_rel;  // per catalyst, NaN when missed or no rate
  std::vector<double> t_err;    // per catalyst, NaN when missed
  double cert_pass_rate = 1.0;
  std::size_t events = 0;
};

struct RunOutput {
  bool ran1 = false, ran2 = false;
  std::vector<DetectionEvent> events1;
  std::vector<Certificate> certs1;
  std::vector<Alg2Event> events2;
  std::vector<Certificate> certs2;
  std::vector<MeasurementRecord> records;  // filled only on request
  RunMetrics metrics1, metrics2;

  bool all_certificates_pass() const {
    for (const auto* cs : {&certs1, &certs2})
      for (const auto& c : *cs)
        if (!c.satisfied) return false;
    return true;
  }
};

/// The sensor the coefficient error is reported for: the second one when present.
inline std::size_t g2_index(const Scenario& s) { return s.sensors.size() > 1 ? 1 : 0; }

namespace detail {

inline double pass_rate(const std::vector<Certificate>& certs) {
  if (certs.empty()) return 1.0;
  std::size_t ok = 0;
  for (const auto& c : certs) ok += c.satisfied ? 1 : 0;
  return static_cast<double>(ok) / static_cast<double>(certs.size());
}

// f(i) gives the coefficient on g2 of the event matched to catalyst i, rho(i) its rate
template <class Ev, class F, class Rho>
RunMetrics metrics_for(const Scenario& s, const std::vector<Ev>& events, const std::vector<Certificate>& certs, F f,
                       Rho rho) {
  RunMetrics m;
  const auto& cats = s.model.catalysts;
  const auto match = match_events(cats, events, s.mcfg.beta);
  const auto& g2 = s.sensors[g2_index(s)].g;
  double num = 0.0, den = 0.0;
  for (std::size_t c = 0; c < cats.size(); ++c) {
    const double truth = inner(cats[c].h, g2);
    const double est = match[c] >= 0 ? f(events[match[c]]) : 0.0;
    num += (truth - est) * (truth - est);
    den += truth * truth;
    if (match[c] >= 0) {
      const auto r = rho(events[match[c]]);
      m.rho_rel.push_back(r ? std::abs(*r - cats[c].rho) / cats[c].rho : kNaN);
      m.t_err.push_back(std::abs(events[match[c]].t_hat - cats[c].t_intake));
    } else {
      m.rho_rel.push_back(kNaN);
      m.t_err.push_back(kNaN);
    }
  }
  m.rel_coeff_err_g2 = den > 0.0 ? std::sqrt(num) / std::sqrt(den) : kNaN;
  m.cert_pass_rate = pass_rate(certs);
  m.events = events.size();
  return m;
}

}  // namespace detail

/// simulate -> sample -> detect -> certify for the selected algorithms.
inline RunOutput run_scenario(const Scenario& s, int algorithms, bool keep_records = false) {
  RunOutput out;
  Trajectory traj(s.model, s.generator, s.horizon);
  Sampler smp(traj, s.sensors, s.mcfg);
  auto* dump = keep_records ? &out.records : nullptr;
  const std::size_t g2 = g2_index(s);

  if (algorithms & kAlg1) {
    const auto p = s.alg1_params();
    const auto m = m_streams(smp, dump);
    out.events1 = detect_alg1(m, s.sensors, p);
    std::vector<RealStream> sst(s.sensors.size());
    std::vector<double> eps;
    for (auto& ev : out.events1) {
      fill_s(smp, alg1_s_indices(ev), sst, dump);
      estimate_rho_alg1(sst, s.sensors, ev, p);
      eps.push_back(ev.chosen >= 0 ? richardson_eps_alg1(smp, static_cast<std::size_t>(ev.chosen),
                                                         ev.sensors[ev.chosen].index, p.N)
                                   : 0.0);
    }
    out.certs1 = certify_alg1(s.model, s.sensors, out.events1, eps, p);
    out.metrics1 = detail::metrics_for(
        s, out.events1, out.certs1, [&](const DetectionEvent& e) { return e.sensors[g2].f; },
        [](const DetectionEvent& e) { return e.rho_hat; });
    out.ran1 = true;
  }
  if (algorithms & kAlg2) {
    const auto p = s.alg2_params();
    const auto d = delta_streams(smp, dump);
    out.events2 = run_alg2(d, s.sensors, p);
    out.certs2 = certify_alg2(s.model, s.sensors, out.events2, p);
    out.metrics2 = detail::metrics_for(
        s, out.events2, out.certs2, [&](const Alg2Event& e) { return e.sensors[g2].f; },
        [](const Alg2Event& e) { return e.rho_tilde; });
    out.ran2 = true;
  }
  return out;
}

// Event logs

inline void write_events_alg1_csv(std::ostream& os, const Scenario& s, const RunOutput& r) {
  os << "j,t_hat,rho_hat,sensor_id,f_j,case_tag,bound_coeff,bound_rho,tie\n";
  const auto match = detail::match_events(s.model.catalysts, r.events1, s.mcfg.beta);
  for (const auto& ev : r.events1) {
    int cat = 0;
    for (std::size_t c = 0; c < match.size(); ++c)
      if (match[c] == ev.j - 1) cat = static_cast<int>(c) + 1;
    for (const auto& sr : ev.sensors) {
      double bc = kNaN, br = kNaN;
      for (const auto& c : r.certs1) {
        if (cat == 0 || c.j != cat) continue;
        if (c.kind == "thm1_coeff" && c.sensor_id == sr.sensor_id) bc = c.rhs;
        if (c.kind == "thm1_rate" && c.sensor_id == sr.sensor_id) br = c.rhs;
      }
      os << ev.j << ',' << fmt_num(ev.t_hat) << ',' << (ev.rho_hat ? fmt_num(*ev.rho_hat) : "") << ',' << sr.sensor_id
         << ',' << fmt_num(sr.f) << ',' << to_string(sr.tag) << ',' << fmt_num(bc) << ',' << fmt_num(br) << ','
         << (ev.tie ? "true" : "false") << '\n';
    }
  }
}

inline void write_events_alg2_csv(std::ostream& os, const Scenario& s, const RunOutput& r) {
  os << "j,t_hat,rho_hat,sensor_id,f_j,case_tag,bound_coeff,bound_rho,im_residual,M_g\n";
  const auto match = detail::match_events(s.model.catalysts, r.events2, s.mcfg.beta);
  for (const auto& ev : r.events2) {
    int cat = 0;
    for (std::size_t c = 0; c < match.size(); ++c)
      if (match[c] == ev.j - 1) cat = static_cast<int>(c) + 1;
    for (const auto& sr : ev.sensors) {
      double bc = kNaN, br = kNaN;
      for (const auto& c : r.certs2) {
        if (cat == 0 || c.j != cat || c.sensor_id != sr.sensor_id) continue;
        if (c.kind == "thm2_coeff") bc = c.rhs;
        if (c.kind == "thm2_rate") br = c.rhs;
      }
      os << ev.j << ',' << fmt_num(ev.t_hat) << ',' << (sr.gated ? fmt_num(sr.rho) : "") << ',' << sr.sensor_id << ','
         << fmt_num(sr.f) << ',' << (sr.gated ? "full_recovery" : "coeff_zero") << ',' << fmt_num(bc) << ','
         << fmt_num(br) << ',' << fmt_num(sr.im_residual) << ',' << fmt_num(sr.M) << '\n';
    }
  }
}

// Sweeps

enum class SweepAxis { beta, L, sigma, N };

inline std::string to_string(SweepAxis a) {
  switch (a) {
    case SweepAxis::beta: return "beta";
    case SweepAxis::L: return "L";
    case SweepAxis::sigma: return "sigma";
    case SweepAxis::N: return "N";
  }
  return "?";
}

inline SweepAxis parse_axis(const std::string& s) {
  if (s == "beta") return SweepAxis::beta;
  if (s == "L") return SweepAxis::L;
  if (s == "sigma") return SweepAxis::sigma;
  if (s == "N") return SweepAxis::N;
  throw InputError("unknown sweep axis '" + s + "' (expected beta, L, sigma or N)");
}

/// Copy of the scenario with one parameter replaced, re-validated.
inline Scenario with_axis(Scenario s, SweepAxis axis, double v) {
  switch (axis) {
    case SweepAxis::beta: s.mcfg.beta = v; break;
    case SweepAxis::L: s.model.background.rate = v; break;
    case SweepAxis::sigma: s.mcfg.sigma = v; break;
    case SweepAxis::N:
      if (v < 1.0 || v != std::floor(v)) throw ValidationError("N must be a positive integer");
      s.mcfg.N = static_cast<int>(v);
      break;
  }
  s.finalize();
  return s;
}

struct SweepPoint {
  double value = 0.0;
  std::uint64_t seed = 0;
  bool failed = false;
  std::string error;
  RunMetrics m1, m2;
};

struct SweepResult {
  SweepAxis axis = SweepAxis::beta;
  int algorithms = kBoth;
  std::vector<SweepPoint> points;  // ordered by (value, seed)
};

/// Thread count: the environment variable wins over the requested value.
inline unsigned resolve_threads(unsigned requested) {
  if (const char* env = std::getenv("SOURCE_SCOPE_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<unsigned>(v);
  }
  return requested > 0 ? requested : 1;
}

/// Runs jobs [0, n) on a small worker pool; each job writes only its own slot.
inline void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& job) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) job(i);
    });
  for (auto& th : pool) th.join();
}

/// One run per (value, repetition); repetition r uses seed base_seed + r.
/// A failing point is recorded and the sweep continues.
inline SweepResult run_sweep(const Scenario& s, SweepAxis axis, const std::vector<double>& values, int reps,
                             unsigned threads, int algorithms) {
  SweepResult res;
  res.axis = axis;
  res.algorithms = algorithms;
  reps = std::max(1, reps);
  res.points.resize(values.size() * static_cast<std::size_t>(reps));
  parallel_for(res.points.size(), threads, [&](std::size_t idx) {
    auto& pt = res.points[idx];
    pt.value = values[idx / reps];
    pt.seed = s.mcfg.seed + static_cast<std::uint64_t>(idx % reps);
    try {
      Scenario sc = with_axis(s, axis, pt.value);
      sc.mcfg.seed = pt.seed;
      const auto out = run_scenario(sc, algorithms);
      pt.m1 = out.metrics1;
      pt.m2 = out.metrics2;
    } catch (const std::exception& e) {
      pt.failed = true;
      pt.error = e.what();
    }
  });
  return res;
}

namespace detail {

inline std::vector<double> metric_row(const SweepPoint& p, int alg) {
  std::vector<double> row(8, kNaN);
  if (p.failed) return row;
  const RunMetrics& m = alg == 1 ? p.m1 : p.m2;
  row[0] = m.rel_coeff_err_g2;
  for (std::size_t c = 0; c < 3; ++c) {
    if (c < m.rho_rel.size()) row[1 + c] = m.rho_rel[c];
    if (c < m.t_err.size()) row[4 + c] = m.t_err[c];
  }
  row[7] = m.cert_pass_rate;
  return row;
}

inline double median_of(std::vector<double> v) {
  v.erase(std::remove_if(v.begin(), v.end(), [](double x) { return std::isnan(x); }), v.end());
  if (v.empty()) return kNaN;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace detail

inline const char* kSweepHeader = "rel_coeff_err_g2,rho1_rel,rho2_rel,rho3_rel,t1_err,t2_err,t3_err,cert_pass_rate";

inline void write_sweep_csv(std::ostream& os, const SweepResult& r, int alg) {
  os << "axis,value,seed," << kSweepHeader << '\n';
  for (const auto& p : r.points) {
    os << to_string(r.axis) << ',' << fmt_num(p.value) << ',' << p.seed;
    for (double v : detail::metric_row(p, alg)) os << ',' << fmt_num(v);
    os << '\n';
  }
}

struct SummaryRow {
  double value;
  std::vector<double> median, min, max;
};

inline std::vector<SummaryRow> summarize(const SweepResult& r, int alg) {
  std::vector<SummaryRow> out;
  for (std::size_t i = 0; i < r.points.size();) {
    std::size_t j = i;
    while (j < r.points.size() && r.points[j].value == r.points[i].value) ++j;
    SummaryRow row{r.points[i].value, std::vector<double>(8, kNaN), std::vector<double>(8, kNaN),
                   std::vector<double>(8, kNaN)};
    for (std::size_t c = 0; c < 8; ++c) {
      std::vector<double> col;
      for (std::size_t k = i; k < j; ++k) col.push_back(detail::metric_row(r.points[k], alg)[c]);
      row.median[c] = detail::median_of(col);
      for (double v : col) {
        if (std::isnan(v)) continue;
        if (std::isnan(row.min[c]) || v < row.min[c]) row.min[c] = v;
        if (std::isnan(row.max[c]) || v > row.max[c]) row.max[c] = v;
      }
    }
    out.push_back(std::move(row));
    i = j;
  }
  return out;
}

inline void write_sweep_summary_csv(std::ostream& os, const SweepResult& r, int alg) {
  os << "axis,value,stat," << kSweepHeader << '\n';
  for (const auto& row : summarize(r, alg)) {
    for (const auto& [name, vals] : {std::pair{"median", &row.median}, std::pair{"min", &row.min},
                                     std::pair{"max", &row.max}}) {
      os << to_string(r.axis) << ',' << fmt_num(row.value) << ',' << name;
      for (double v : *vals) os << ',' << fmt_num(v);
      os << '\n';
    }
  }
}

// Sweep defaults and scenario variants

inline const std::vector<double>& default_sweep_values(SweepAxis a) {
  static const std::vector<double> beta{0.005, 0.01, 0.02, 0.05};
  static const std::vector<double> L{1e-3, 5e-3, 1e-2, 5e-2, 1e-1};
  static const std::vector<double> sigma{1e-5, 1e-4, 1e-3, 1e-2, 1e-1};
  static const std::vector<double> N{10, 50, 100, 500};
  switch (a) {
    case SweepAxis::beta: return beta;
    case SweepAxis::L: return L;
    case SweepAxis::sigma: return sigma;
    case SweepAxis::N: return N;
  }
  return beta;
}

/// The scenario with its background replaced by kind (profile and rate kept).
inline Scenario with_background(Scenario s, BackgroundKind kind) {
  s.model.background.kind = kind;
  s.finalize();
  return s;
}

/// No background and no noise.
inline Scenario ideal_of(Scenario s) {
  s.model.background.kind = BackgroundKind::zero;
  s.mcfg.sigma = 0.0;
  s.mcfg.noise_mode = NoiseMode::zero;
  s.finalize();
  return s;
}

}  // namespace sscope
