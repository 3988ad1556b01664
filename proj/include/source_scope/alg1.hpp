#pragma once

// Threshold detection on m-differences, coefficient extraction, and decay-rate
// estimation from fine-scale s-measurements.

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "errors.hpp"
#include "hilbert.hpp"
#include "sampling.hpp"

namespace sscope {

struct Alg1Params {
  double K = 1.0;
  int N = 100;
  double beta = 0.01;
  double sigma = 0.0;
  double D = 1.0;
  double H = 0.0;
  double R = 0.0;
  double L = 0.0;
  double rho_lo = 1.0;
  double rho_hi = 1.0;
  double horizon = 1.0;

  void validate(const std::vector<Sensor>& sensors) const {
    if (K < 1.0) throw InputError("threshold multiplier K must be >= 1");
    if (N < 1) throw InputError("N must be a positive integer");
    if (!(beta > 0.0)) throw InputError("beta must be positive");
    if (!(rho_lo > 0.0) || rho_hi < rho_lo) throw InputError("decay-rate bounds need 0 < rho_lo <= rho_hi");
    for (const auto& s : sensors)
      if (norm(s.g) > R * (1.0 + 1e-12)) throw InputError("R is smaller than ||" + s.id + "||");
  }
};

/// alpha = H R / (exp(rho_lo D) - 1)
inline double tail_alpha(double H, double R, double rho_lo, double D) { return H * R / std::expm1(rho_lo * D); }

/// e(t) = 1 - exp(-rho_hi t)
inline double e_of(double t, double rho_hi) { return -std::expm1(-rho_hi * t); }

inline double threshold_q_tilde(double gnorm, const Alg1Params& p) {
  const double a = tail_alpha(p.H, p.R, p.rho_lo, p.D);
  return (a + p.H * gnorm) * e_of(p.beta, p.rho_hi) + p.L * p.beta * gnorm + 2.0 * p.sigma;
}
inline double threshold_q_tilde(const GridFunction& g, const Alg1Params& p) { return threshold_q_tilde(norm(g), p); }
inline double threshold_q(double gnorm, const Alg1Params& p) { return p.K * threshold_q_tilde(gnorm, p); }

enum class Alg1Case { case1, case2, undetected_sensor };

inline std::string to_string(Alg1Case c) {
  switch (c) {
    case Alg1Case::case1: return "case1";
    case Alg1Case::case2: return "case2";
    case Alg1Case::undetected_sensor: return "undetected_sensor";
  }
  return "?";
}

struct Alg1SensorResult {
  std::string sensor_id;
  double gnorm = 0.0;
  int index = -1;  // this sensor's own detection index, -1 if it did not fire
  double f = 0.0;
  Alg1Case tag = Alg1Case::undetected_sensor;
};

struct DetectionEvent {
  int j = 0;
  int index = 0;  // min over sensors of the detection index
  double t_hat = 0.0;
  std::vector<Alg1SensorResult> sensors;  // same order as the sensor list
  int chosen = -1;                        // sensor used for the rate, -1 if all coefficients are zero
  bool tie = false;                       // another nonzero-coefficient sensor had the same norm
  std::optional<double> rho_hat;
  double rho_raw = 0.0;  // R before clamping
};

/// Per-sensor scan followed by cross-sensor merging. Detection index i fires when
/// |m_i - m_{i-1}| > Q; the coefficient is m_{i+1} - m_{i-2} if it clears Q-tilde.
/// For a sensor firing one step after the event index this is the second-case
/// combination m_{n+2} - m_{n-1}.
inline std::vector<DetectionEvent> detect_alg1(const std::vector<RealStream>& m, const std::vector<Sensor>& sensors,
                                               const Alg1Params& p) {
  p.validate(sensors);
  if (m.size() != sensors.size()) throw InputError("one m-stream per sensor is required");
  const int steps = static_cast<int>(std::floor(p.horizon / p.beta + 1e-9));
  const int skip = 3 + static_cast<int>(std::floor(p.D / p.beta + 1e-9));

  struct Hit {
    std::size_t sensor;
    int index;
    double f;
  };
  std::vector<Hit> hits;
  for (std::size_t s = 0; s < sensors.size(); ++s) {
    const double gn = norm(sensors[s].g);
    const double qt = threshold_q_tilde(gn, p);
    const double q = p.K * qt;
    const auto& ms = m[s];
    const std::string name = "m[" + sensors[s].id + "]";
    // the first difference that also has m_{i-2} available
    for (int i = 2; i < steps;) {
      const double d = stream_at(ms, i, name) - stream_at(ms, i - 1, name);
      if (std::abs(d) > q) {
        const double f = stream_at(ms, i + 1, name) - stream_at(ms, i - 2, name);
        hits.push_back({s, i, std::abs(f) > qt ? f : 0.0});
        i += skip;
      } else {
        ++i;
      }
    }
  }
  std::sort(hits.begin(), hits.end(), [](const Hit& a, const Hit& b) {
    return a.index != b.index ? a.index < b.index : a.sensor < b.sensor;
  });

  std::vector<DetectionEvent> events;
  std::vector<bool> used(hits.size(), false);
  for (std::size_t h = 0; h < hits.size(); ++h) {
    if (used[h]) continue;
    DetectionEvent ev;
    ev.j = static_cast<int>(events.size()) + 1;
    ev.index = hits[h].index;
    ev.t_hat = ev.index * p.beta;
    ev.sensors.resize(sensors.size());
    for (std::size_t s = 0; s < sensors.size(); ++s) {
      ev.sensors[s].sensor_id = sensors[s].id;
      ev.sensors[s].gnorm = norm(sensors[s].g);
    }
    for (std::size_t k = h; k < hits.size() && hits[k].index <= ev.index + 1; ++k) {
      if (used[k]) continue;
      auto& sr = ev.sensors[hits[k].sensor];
      if (sr.index >= 0) continue;  // one detection per sensor per event
      used[k] = true;
      sr.index = hits[k].index;
      sr.f = hits[k].f;
      sr.tag = hits[k].index == ev.index ? Alg1Case::case1 : Alg1Case::case2;
    }
    // rate sensor: smallest norm among nonzero coefficients, ties broken by order
    for (std::size_t s = 0; s < ev.sensors.size(); ++s) {
      const auto& sr = ev.sensors[s];
      if (sr.f == 0.0) continue;
      if (ev.chosen < 0 || sr.gnorm < ev.sensors[ev.chosen].gnorm) {
        ev.chosen = static_cast<int>(s);
        ev.tie = false;
      } else if (sr.gnorm == ev.sensors[ev.chosen].gnorm) {
        ev.tie = true;
      }
    }
    events.push_back(std::move(ev));
  }
  return events;
}

/// s-indices the rate step needs for an event (the chosen sensor's i-2 .. i+2).
inline std::vector<int> alg1_s_indices(const DetectionEvent& ev) {
  if (ev.chosen < 0) return {};
  const int i = ev.sensors[ev.chosen].index;
  return {i - 2, i - 1, i + 1, i + 2};
}

/// The unclamped rate statistic (Delta~_{i+1} - Delta~_{i-2}) / f with Delta~_i = s_{i+1} - s_i.
inline double alg1_rate_statistic(const RealStream& s, int i, double f, const std::string& name) {
  const double d_next = stream_at(s, i + 2, name) - stream_at(s, i + 1, name);
  const double d_prev = stream_at(s, i - 1, name) - stream_at(s, i - 2, name);
  return (d_next - d_prev) / f;
}

/// Fills rho_hat for an event from the chosen sensor's s-stream. Leaves it empty
/// when every coefficient is zero.
inline void estimate_rho_alg1(const std::vector<RealStream>& s, const std::vector<Sensor>& sensors, DetectionEvent& ev,
                              const Alg1Params& p) {
  if (ev.chosen < 0) {
    ev.rho_hat.reset();
    return;
  }
  const auto& sr = ev.sensors[ev.chosen];
  const double r = std::abs(alg1_rate_statistic(s.at(ev.chosen), sr.index, sr.f, "s[" + sensors[ev.chosen].id + "]"));
  ev.rho_raw = r;
  ev.rho_hat = std::clamp(r, p.rho_lo, p.rho_hi);
}

/// Both stages on complete streams.
inline std::vector<DetectionEvent> run_alg1(const std::vector<RealStream>& m, const std::vector<RealStream>& s,
                                            const std::vector<Sensor>& sensors, const Alg1Params& p) {
  auto events = detect_alg1(m, sensors, p);
  for (auto& ev : events) estimate_rho_alg1(s, sensors, ev, p);
  return events;
}

}  // namespace sscope
