#pragma once

// The three measurement families, bounded noise, and closed-form expansions used to
// cross-check the quadrature.

#include <cmath>
#include <complex>
#include <cstdint>
#include <algorithm>
#include <map>
#include <optional>
#include <numbers>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "dynamics.hpp"
#include "errors.hpp"
#include "format.hpp"
#include "hilbert.hpp"

namespace sscope {

using cplx = std::complex<double>;

struct Sensor {
  std::string id;
  GridFunction g;
};

enum class NoiseMode { uniform, adversarial_alternating, zero };

inline std::string to_string(NoiseMode m) {
  switch (m) {
    case NoiseMode::uniform: return "uniform";
    case NoiseMode::adversarial_alternating: return "adversarial_alternating";
    case NoiseMode::zero: return "zero";
  }
  return "?";
}

struct MeasurementConfig {
  double beta = 0.01;
  int N = 100;
  int k = 1;
  double sigma = 0.0;
  NoiseMode noise_mode = NoiseMode::uniform;
  std::uint64_t seed = 1;
  double horizon = 1.0;

  std::optional<std::string> validate() const {
    if (!(beta > 0.0)) return "beta must be positive";
    if (N < 1) return "N must be a positive integer";
    if (sigma < 0.0) return "sigma must be nonnegative";
    if (!(horizon > 0.0)) return "horizon must be positive";
    if (horizon < beta) return "horizon shorter than one time step";
    return std::nullopt;
  }

  /// Number of whole beta-steps in [0, horizon].
  int steps() const { return static_cast<int>(std::floor(horizon / beta + 1e-9)); }
  double fine_step() const { return beta / N; }
  cplx s() const { return cplx(0.0, 2.0 * std::numbers::pi * k / beta); }
};

enum class Family { m, s, laplace, laplace0 };

inline std::string to_string(Family f) {
  switch (f) {
    case Family::m: return "m";
    case Family::s: return "s";
    case Family::laplace: return "laplace";
    case Family::laplace0: return "laplace0";
  }
  return "?";
}

struct MeasurementRecord {
  Family family = Family::m;
  int index = 0;
  std::string sensor_id;
  cplx value;
  cplx noise;
};

namespace detail {

inline std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t hash_string(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (unsigned char c : s) h = (h ^ c) * 0x100000001b3ULL;
  return h;
}

inline double unit(std::uint64_t h) { return static_cast<double>(h >> 11) * 0x1.0p-53; }

}  // namespace detail

/// Noise for one record, a pure function of (seed, family, index, sensor).
/// Real families get a real draw; Laplace families a complex one with modulus <= sigma.
inline cplx noise_draw(const MeasurementConfig& cfg, Family fam, int index, const std::string& sensor_id) {
  const double sigma = cfg.sigma;
  if (cfg.noise_mode == NoiseMode::zero || sigma == 0.0) return 0.0;
  const bool complex_family = fam == Family::laplace || fam == Family::laplace0;
  if (cfg.noise_mode == NoiseMode::adversarial_alternating) {
    // +sigma, -sigma, ... ; the two Laplace families run in opposite phase so that
    // their difference alternates by 2 sigma as well.
    int sign = (index % 2 == 0) ? 1 : -1;
    if (fam == Family::laplace0) sign = -sign;
    return sign * sigma;
  }
  std::uint64_t h = detail::splitmix(cfg.seed);
  h = detail::splitmix(h ^ (static_cast<std::uint64_t>(fam) + 0x51ULL));
  h = detail::splitmix(h ^ static_cast<std::uint64_t>(static_cast<std::int64_t>(index)));
  h = detail::splitmix(h ^ detail::hash_string(sensor_id));
  const double u1 = detail::unit(h);
  if (!complex_family) return sigma * (2.0 * u1 - 1.0);
  const double u2 = detail::unit(detail::splitmix(h));
  const double r = sigma * u1 * (1.0 - 1e-15);
  const double th = 2.0 * std::numbers::pi * u2;
  return cplx(r * std::cos(th), r * std::sin(th));
}

/// Draws all sensors' measurements from one trajectory. Each state u(t) is evaluated
/// once per quadrature node and shared by every sensor.
class Sampler {
 public:
  Sampler(const Trajectory& traj, std::vector<Sensor> sensors, MeasurementConfig cfg)
      : traj_(traj), sensors_(std::move(sensors)), cfg_(cfg) {
    if (auto e = cfg_.validate()) throw InputError(*e);
    for (const auto& s : sensors_) {
      GridFunction::same_shape(s.g, traj_.model().u0);
      adj_.push_back(traj_.generator().adjoint(s.g));
    }
  }

  const std::vector<Sensor>& sensors() const { return sensors_; }
  const MeasurementConfig& config() const { return cfg_; }
  const Trajectory& trajectory() const { return traj_; }

  /// m_n for every sensor.
  std::vector<MeasurementRecord> m_all(int n, bool noisy = true) const {
    const double b = cfg_.beta;
    if (n < 0 || n + 1 > cfg_.steps()) throw RangeError("m index " + std::to_string(n) + " outside the horizon");
    const double t0 = n * b, t1 = (n + 1) * b;
    const auto p0 = pairs(t0), p1 = pairs(t1);
    const auto integral = time_integral(t0, t1, [&](double t) {
      const auto p = pairs(t);
      std::vector<cplx> v(p.size());
      for (std::size_t i = 0; i < p.size(); ++i) v[i] = p[i].ag;
      return v;
    });
    std::vector<MeasurementRecord> out(sensors_.size());
    for (std::size_t i = 0; i < sensors_.size(); ++i) {
      const double val = (p1[i].g - p0[i].g - integral[i].real()) / b;
      out[i] = record(Family::m, n, i, val, noisy);
    }
    return out;
  }

  /// s_n for every sensor with fine step beta/N (N from the config unless given).
  std::vector<MeasurementRecord> s_all(int n, int N = 0, bool noisy = true) const {
    const double b = cfg_.beta;
    const double bt = b / (N > 0 ? N : cfg_.N);
    const double t0 = n * b;
    if (n < 0 || t0 + bt > cfg_.horizon * (1.0 + 1e-12))
      throw RangeError("s index " + std::to_string(n) + " outside the horizon");
    const GridFunction u0 = traj_.state(t0);
    const GridFunction du = traj_.state(t0 + bt) - u0;
    std::vector<MeasurementRecord> out(sensors_.size());
    for (std::size_t i = 0; i < sensors_.size(); ++i) {
      const double val = inner(du, sensors_[i].g) / (bt * b) - inner(u0, adj_[i]) / b;
      out[i] = record(Family::s, n, i, val, noisy);
    }
    return out;
  }

  /// (m_{s,l}, m_{0,l}) for every sensor, s = 2 pi i k / beta.
  std::pair<std::vector<MeasurementRecord>, std::vector<MeasurementRecord>> laplace_all(int ell,
                                                                                        bool noisy = true) const {
    const double b = cfg_.beta;
    if (ell < 0 || ell + 1 > cfg_.steps())
      throw RangeError("laplace index " + std::to_string(ell) + " outside the horizon");
    const double t0 = ell * b, t1 = (ell + 1) * b;
    const cplx s = cfg_.s();
    const double w = 2.0 * std::numbers::pi * cfg_.k / b;
    const std::size_t ns = sensors_.size();
    // exp(-s t) integrates to zero over the step, so <u(t0), g> can be taken out of
    // the s <u, g> term; this removes a cancellation of size |s| <u, g> beta.
    const auto p0 = pairs(t0);
    // pack [k-part..., zero-part...]
    const auto integral = time_integral(t0, t1, [&](double t) {
      const auto p = pairs(t);
      // exp(-s t) = exp(-s (t - l beta)) since exp(-s l beta) = 1
      const double tau = t - t0;
      const cplx phase(std::cos(w * tau), -std::sin(w * tau));
      std::vector<cplx> v(2 * ns);
      for (std::size_t i = 0; i < ns; ++i) {
        v[i] = phase * (s * (p[i].g - p0[i].g) - p[i].ag);
        v[ns + i] = -p[i].ag;
      }
      return v;
    });
    std::vector<MeasurementRecord> ms(ns), m0(ns);
    const double scale = 1.0 / (b * b);
    for (std::size_t i = 0; i < ns; ++i) {
      ms[i] = record(Family::laplace, ell, i, integral[i] * scale, noisy);
      m0[i] = record(Family::laplace0, ell, i, integral[ns + i] * scale, noisy);
    }
    return {ms, m0};
  }

 private:
  struct Pair {
    double g, ag;  // <u, g>, <u, A* g>
  };

  std::vector<Pair> pairs(double t) const {
    const GridFunction u = traj_.state(t);
    std::vector<Pair> out(sensors_.size());
    for (std::size_t i = 0; i < sensors_.size(); ++i) out[i] = {inner(u, sensors_[i].g), inner(u, adj_[i])};
    return out;
  }

  // 32-point Gauss-Legendre on each smooth piece of [t0, t1]; intakes inside the
  // step are kinks of u, so the step is split there.
  template <class F>
  std::vector<cplx> time_integral(double t0, double t1, F&& f) const {
    std::vector<double> cuts{t0};
    for (const auto& c : traj_.model().catalysts)
      if (c.t_intake > t0 && c.t_intake < t1) cuts.push_back(c.t_intake);
    cuts.push_back(t1);
    std::sort(cuts.begin(), cuts.end());
    const GaussRule& gr = gauss_rule(32);
    std::vector<cplx> acc;
    for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
      const double a = cuts[c], bnd = cuts[c + 1];
      const double h = bnd - a;
      if (h <= 0.0) continue;
      for (std::size_t q = 0; q < gr.x.size(); ++q) {
        const auto v = f(a + 0.5 * h * (1.0 + gr.x[q]));
        if (acc.empty()) acc.assign(v.size(), cplx{});
        for (std::size_t i = 0; i < v.size(); ++i) acc[i] += (0.5 * h * gr.w[q]) * v[i];
      }
    }
    if (acc.empty()) acc.assign(2 * sensors_.size(), cplx{});
    return acc;
  }

  MeasurementRecord record(Family fam, int index, std::size_t sensor, cplx clean, bool noisy) const {
    MeasurementRecord r;
    r.family = fam;
    r.index = index;
    r.sensor_id = sensors_[sensor].id;
    r.noise = noisy ? noise_draw(cfg_, fam, index, r.sensor_id) : cplx{};
    r.value = clean + r.noise;
    return r;
  }

  const Trajectory& traj_;
  std::vector<Sensor> sensors_;
  std::vector<GridFunction> adj_;
  MeasurementConfig cfg_;
};

// Single-sensor forms.

inline MeasurementRecord sample_m(const Trajectory& traj, const GridFunction& g, int n, const MeasurementConfig& cfg,
                                  const std::string& sensor_id = "g") {
  return Sampler(traj, {{sensor_id, g}}, cfg).m_all(n).front();
}

inline MeasurementRecord sample_s(const Trajectory& traj, const GridFunction& g, int n, const MeasurementConfig& cfg,
                                  const std::string& sensor_id = "g") {
  return Sampler(traj, {{sensor_id, g}}, cfg).s_all(n).front();
}

/// m_{s,l} at the configured k (k = 0 gives the subtrahend family directly).
inline MeasurementRecord sample_laplace(const Trajectory& traj, const GridFunction& g, int ell,
                                        const MeasurementConfig& cfg, const std::string& sensor_id = "g") {
  auto [ms, m0] = Sampler(traj, {{sensor_id, g}}, cfg).laplace_all(ell);
  return cfg.k == 0 ? m0.front() : ms.front();
}

// Streams: per sensor, index -> value. Missing indices are reported, never guessed.

using RealStream = std::map<int, double>;
using ComplexStream = std::map<int, cplx>;

template <class Map>
auto stream_at(const Map& s, int idx, const std::string& what) -> typename Map::mapped_type {
  auto it = s.find(idx);
  if (it == s.end()) throw DataError("missing " + what + " index " + std::to_string(idx));
  return it->second;
}

inline std::vector<RealStream> m_streams(const Sampler& smp, std::vector<MeasurementRecord>* dump = nullptr) {
  std::vector<RealStream> out(smp.sensors().size());
  for (int n = 0; n < smp.config().steps(); ++n) {
    auto recs = smp.m_all(n);
    for (std::size_t i = 0; i < recs.size(); ++i) out[i][n] = recs[i].value.real();
    if (dump) dump->insert(dump->end(), recs.begin(), recs.end());
  }
  return out;
}

/// Delta_{s,l} = m_{s,l} - m_{0,l} for every index in the horizon.
inline std::vector<ComplexStream> delta_streams(const Sampler& smp, std::vector<MeasurementRecord>* dump = nullptr) {
  std::vector<ComplexStream> out(smp.sensors().size());
  for (int l = 0; l < smp.config().steps(); ++l) {
    auto [ms, m0] = smp.laplace_all(l);
    for (std::size_t i = 0; i < ms.size(); ++i) out[i][l] = ms[i].value - m0[i].value;
    if (dump) {
      dump->insert(dump->end(), ms.begin(), ms.end());
      dump->insert(dump->end(), m0.begin(), m0.end());
    }
  }
  return out;
}

/// Adds the requested s indices (all sensors) to the given streams.
inline void fill_s(const Sampler& smp, const std::vector<int>& indices, std::vector<RealStream>& out,
                   std::vector<MeasurementRecord>* dump = nullptr) {
  out.resize(smp.sensors().size());
  for (int n : indices) {
    if (out.front().count(n)) continue;
    auto recs = smp.s_all(n);
    for (std::size_t i = 0; i < recs.size(); ++i) out[i][n] = recs[i].value.real();
    if (dump) dump->insert(dump->end(), recs.begin(), recs.end());
  }
}

inline void write_measurements_csv(std::ostream& os, const std::vector<MeasurementRecord>& recs) {
  os << "family,index,sensor_id,re,im,noise_re,noise_im\n";
  for (const auto& r : recs)
    os << to_string(r.family) << ',' << r.index << ',' << r.sensor_id << ',' << fmt_num(r.value.real()) << ','
       << fmt_num(r.value.imag()) << ',' << fmt_num(r.noise.real()) << ',' << fmt_num(r.noise.imag()) << '\n';
}

// Closed-form expansions.

/// Noiseless m_n from the source model alone: catalyst terms in closed form plus the
/// step average of <eta, g>.
inline double oracle_m_expansion(const SourceModel& m, const GridFunction& g, int n, const MeasurementConfig& cfg) {
  const double b = cfg.beta;
  const double t0 = n * b, t1 = (n + 1) * b;
  double v = 0.0;
  for (const auto& c : m.catalysts) {
    const double hg = inner(c.h, g);
    const double r = c.rho;
    if (c.t_intake < t0)
      v += hg * std::exp(-r * (t0 - c.t_intake)) * (-std::expm1(-r * b)) / (r * b);
    else if (c.t_intake < t1)
      v += hg * (-std::expm1(-r * (t1 - c.t_intake))) / (r * b);
  }
  if (m.background.kind != BackgroundKind::zero)
    v += inner(m.background.profile, g) * m.background.temporal_integral(t0, t1) / b;
  return v;
}

/// Limit of s_n as the fine step goes to zero: <F(n beta), g> / beta.
inline double oracle_s_limit(const SourceModel& m, const GridFunction& g, int n, const MeasurementConfig& cfg) {
  const double t = n * cfg.beta;
  double v = 0.0;
  for (const auto& c : m.catalysts)
    if (c.t_intake <= t) v += inner(c.h, g) * std::exp(-c.rho * (t - c.t_intake));
  if (m.background.kind != BackgroundKind::zero) v += inner(m.background.profile, g) * m.background.temporal(t);
  return v / cfg.beta;
}

/// Closed-form Delta_{s,l}: each catalyst contributes the in-step or after-step
/// expression, and the background adds (1/beta^2) int (exp(-s t) - 1) <eta(t), g> dt.
inline cplx oracle_delta_laplace(const SourceModel& m, const GridFunction& g, int ell, const MeasurementConfig& cfg) {
  const double b = cfg.beta;
  const double t0 = ell * b, t1 = (ell + 1) * b;
  const cplx s = cfg.s();
  const double w = 2.0 * std::numbers::pi * cfg.k / b;
  int inside = 0;
  cplx v{};
  for (const auto& c : m.catalysts) {
    const double r = c.rho;
    const double hg = inner(c.h, g);
    const cplx den = r * (r + s) * b * b;
    if (c.t_intake >= t0 && c.t_intake <= t1) {
      ++inside;
      const double tau = c.t_intake - t0;
      const cplx est = cplx(std::cos(w * tau), -std::sin(w * tau));  // exp(-s t_j)
      const double E = std::exp(r * (c.t_intake - t1));
      v += (r * (est - 1.0) + s * (E - 1.0)) / den * hg;
    } else if (c.t_intake < t0) {
      v += s * (std::exp(r * (c.t_intake - t1)) - std::exp(r * (c.t_intake - t0))) / den * hg;
    }
  }
  if (inside > 1) throw ModelError("more than one intake inside laplace step " + std::to_string(ell));
  if (m.background.kind != BackgroundKind::zero) {
    const double pg = inner(m.background.profile, g);
    const cplx eps = integrate(
        [&](double t) {
          const double tau = t - t0;
          return (cplx(std::cos(w * tau), -std::sin(w * tau)) - 1.0) * m.background.temporal(t);
        },
        t0, t1, Quadrature{QuadratureRule::gauss_legendre, 1, 32});
    v += eps * pg / (b * b);
  }
  return v;
}

}  // namespace sscope
