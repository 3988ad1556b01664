#pragma once

// Prony-Laplace detection and recovery from the complex differences
// Delta_{s,l} = m_{s,l} - m_{0,l}.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "errors.hpp"
#include "hilbert.hpp"
#include "sampling.hpp"

namespace sscope {

struct Alg2Params {
  int k = 1;
  int ell0 = 3;
  double beta = 0.01;
  double sigma = 0.0;
  double D = 1.0;
  double H = 0.0;
  double L = 0.0;
  double rho_lo = 1.0;
  double rho_hi = 1.0;
  double horizon = 1.0;

  cplx s() const { return cplx(0.0, 2.0 * std::numbers::pi * k / beta); }

  void validate() const {
    if (k == 0) throw InputError("Laplace frequency index k must be nonzero");
    if (ell0 < 2) throw InputError("ell0 must be >= 2 so that index ell0 - 2 exists");
    if (!(beta > 0.0)) throw InputError("beta must be positive");
    if (!(rho_lo > 0.0) || rho_hi < rho_lo) throw InputError("decay-rate bounds need 0 < rho_lo <= rho_hi");
    if (!(beta < 2.0 * std::numbers::pi * std::abs(k) / rho_hi))
      throw InputError("step too large for the Laplace frequency: need beta < 2 pi k / rho_hi");
  }
};

/// L + H rho_hi exp((ell0 - (ell - 2)) beta) / (1 - exp(-rho_lo (4 beta + D))), the
/// Lipschitz constant of background plus earlier-catalyst tails after step ell.
inline double lipschitz_local(int ell, int ell0, const Alg2Params& p) {
  return p.L + p.H * p.rho_hi * std::exp((ell0 - (ell - 2)) * p.beta) / (-std::expm1(-p.rho_lo * (4.0 * p.beta + p.D)));
}
inline double lipschitz_local(int ell, const Alg2Params& p) { return lipschitz_local(ell, p.ell0, p); }

struct Alg2Thresholds {
  double Q1, Q2, Q3, Qstar;
};

inline Alg2Thresholds thresholds_alg2(double gnorm, double L_ell, const Alg2Params& p) {
  auto q = [&](int n) { return 4.0 * n / std::numbers::pi * L_ell * gnorm + 4.0 * p.sigma; };
  const double q1 = q(1);
  return {q1, q(2), q(3), q1 + p.rho_hi * p.H * gnorm};
}
inline Alg2Thresholds thresholds_alg2(const GridFunction& g, double L_ell, const Alg2Params& p) {
  return thresholds_alg2(norm(g), L_ell, p);
}

struct Alg2SensorResult {
  std::string sensor_id;
  double gnorm = 0.0;
  bool gated = false;  // passed |Delta_{l+1} - Delta_{l-2}| > Q3
  double M = 0.0;      // beta |Delta_{l+1} - Delta_{l-2}|
  double rate_raw = 0.0;
  double rho = 0.0;  // clamped rate from this sensor
  double f = 0.0;
  double im_residual = 0.0;
};

struct Alg2Event {
  int j = 0;
  int ell = 0;
  int ell0 = 0;  // start index in force when the event fired
  double t_hat = 0.0;
  double L_ell = 0.0;
  std::vector<Alg2SensorResult> sensors;
  int chosen = -1;  // gated sensor with the largest M, -1 if none passed
  std::optional<double> rho_tilde;
};

/// Rate statistic R = (Delta_{l+1} - Delta_{l+2}) / (beta (Delta_{l+1} - Delta_{l-2})).
/// In the noiseless single-catalyst case with t_j in [l beta, (l+1) beta) it equals
/// (1 - exp(-rho beta)) / beta; the opposite orientation would converge to -rho.
inline cplx alg2_rate_statistic(cplx d_lm2, cplx d_lp1, cplx d_lp2, double beta) {
  return (d_lp1 - d_lp2) / (beta * (d_lp1 - d_lm2));
}

/// f = rho (rho + s) beta^2 / (s (exp(-2 rho beta) - exp(-rho beta))) * (Delta_{l+1} - Delta_{l-2})
inline cplx alg2_coefficient(double rho, cplx s, double beta, cplx diff) {
  const cplx den = s * (std::exp(-2.0 * rho * beta) - std::exp(-rho * beta));
  return rho * (rho + s) * beta * beta / den * diff;
}

inline std::vector<Alg2Event> run_alg2(const std::vector<ComplexStream>& delta, const std::vector<Sensor>& sensors,
                                       const Alg2Params& p) {
  p.validate();
  if (delta.size() != sensors.size()) throw InputError("one Laplace stream per sensor is required");
  const int steps = static_cast<int>(std::floor(p.horizon / p.beta + 1e-9));
  const int skip = 5 + static_cast<int>(std::floor(p.D / p.beta + 1e-9));
  const cplx s = p.s();
  std::vector<double> gn(sensors.size());
  std::vector<std::string> names(sensors.size());
  for (std::size_t i = 0; i < sensors.size(); ++i) {
    gn[i] = norm(sensors[i].g);
    names[i] = "Delta[" + sensors[i].id + "]";
  }

  std::vector<Alg2Event> events;
  int ell0 = p.ell0;
  for (int ell = p.ell0; ell < steps;) {
    const double L_ell = lipschitz_local(ell, ell0, p);
    bool fire = false;
    for (std::size_t i = 0; i < sensors.size() && !fire; ++i) {
      const auto th = thresholds_alg2(gn[i], L_ell, p);
      const cplx d = stream_at(delta[i], ell, names[i]) - stream_at(delta[i], ell - 1, names[i]);
      fire = std::abs(d) - th.Qstar > 0.0;
    }
    if (!fire) {
      ++ell;
      continue;
    }
    Alg2Event ev;
    ev.j = static_cast<int>(events.size()) + 1;
    ev.ell = ell;
    ev.ell0 = ell0;
    ev.t_hat = ell * p.beta;
    ev.L_ell = L_ell;
    ev.sensors.resize(sensors.size());
    for (std::size_t i = 0; i < sensors.size(); ++i) {
      auto& sr = ev.sensors[i];
      sr.sensor_id = sensors[i].id;
      sr.gnorm = gn[i];
      const auto th = thresholds_alg2(gn[i], L_ell, p);
      const cplx dm2 = stream_at(delta[i], ell - 2, names[i]);
      const cplx dp1 = stream_at(delta[i], ell + 1, names[i]);
      const cplx dp2 = stream_at(delta[i], ell + 2, names[i]);
      const cplx diff = dp1 - dm2;
      sr.M = p.beta * std::abs(diff);
      if (!(std::abs(diff) > th.Q3)) continue;
      sr.gated = true;
      sr.rate_raw = alg2_rate_statistic(dm2, dp1, dp2, p.beta).real();
      sr.rho = std::clamp(sr.rate_raw, p.rho_lo, p.rho_hi);
      const cplx f = alg2_coefficient(sr.rho, s, p.beta, diff);
      sr.f = f.real();
      sr.im_residual = f.imag();
      if (ev.chosen < 0 || sr.M > ev.sensors[ev.chosen].M) ev.chosen = static_cast<int>(i);
    }
    if (ev.chosen >= 0) ev.rho_tilde = ev.sensors[ev.chosen].rho;
    events.push_back(std::move(ev));
    ell += skip;
    ell0 = ell;
  }
  return events;
}

/// Noiseless single-catalyst value of (Delta_{l+2} - Delta_{l+1}) / (beta Delta_{l+1})
/// with the sign chosen so the limit is +(1 - exp(-rho beta)) / beta. Delta_{l+1} and
/// Delta_{l+2} are both after-intake expressions when t_j lies in [l beta, (l+1) beta).
inline double prony_rate_limit_check(double rho, double t_j, int ell, double beta, int k = 1) {
  if (t_j < ell * beta || t_j >= (ell + 1) * beta)
    throw InputError("prony_rate_limit_check needs t_j in [ell beta, (ell+1) beta)");
  const cplx s(0.0, 2.0 * std::numbers::pi * k / beta);
  auto after = [&](int l) {
    return s * (std::exp(rho * (t_j - (l + 1) * beta)) - std::exp(rho * (t_j - l * beta))) /
           (rho * (rho + s) * beta * beta);
  };
  const cplx d1 = after(ell + 1), d2 = after(ell + 2);
  return ((d1 - d2) / (beta * d1)).real();
}

namespace detail {

// log((exp(beta y) - 1) / y), continuous through y = 0 where the value is log(beta)
inline double log_f(double beta, double y) {
  const double z = beta * y;
  if (std::abs(z) < 1e-12) return std::log(beta) + 0.5 * z;
  if (z > 30.0) return z + std::log1p(-std::exp(-z)) - std::log(y);
  return std::log(std::expm1(z) / y);
}

}  // namespace detail

/// g_a(x) = |1 - f(x) / f(x + a)| with f(x) = (exp(beta x) - 1) / x, evaluated in log
/// form so that large beta x does not overflow.
inline double lemma_g(double a, double beta, double x) {
  return std::abs(-std::expm1(detail::log_f(beta, x) - detail::log_f(beta, x + a)));
}

/// The limit value exp(|a| beta) - 1 bounding lemma_g.
inline double lemma_g_bound(double a, double beta) { return std::expm1(std::abs(a) * beta); }

}  // namespace sscope
