#pragma once

// Forward model: u' = A u + sum_j h_j exp(-rho_j (t - t_j)) 1[t >= t_j] + eta(t),
// with A a multiplication operator on the grid.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "errors.hpp"
#include "hilbert.hpp"

namespace sscope {

/// A acting as (A v)(x) = a(x) v(x). Self-adjoint, so A* = A.
class MultiplicationGenerator {
 public:
  MultiplicationGenerator() = default;
  explicit MultiplicationGenerator(GridFunction symbol) : a_(std::move(symbol)) {}

  static MultiplicationGenerator constant(double c, std::size_t nodes = kDefaultNodes) {
    return MultiplicationGenerator(GridFunction(nodes, c));
  }

  const GridFunction& symbol() const { return a_; }
  std::size_t nodes() const { return a_.nodes(); }

  GridFunction apply(const GridFunction& v) const { return hadamard(a_, v); }
  GridFunction adjoint(const GridFunction& v) const { return hadamard(a_, v); }

  /// T(t) v = exp(a t) v nodewise. T(0) returns v untouched.
  GridFunction semigroup(double t, const GridFunction& v) const {
    GridFunction::same_shape(a_, v);
    if (t == 0.0) return v;
    GridFunction out(v.nodes());
    for (std::size_t i = 0; i < v.nodes(); ++i) out[i] = std::exp(a_[i] * t) * v[i];
    return out;
  }

 private:
  GridFunction a_{kDefaultNodes, 0.0};
};

struct Catalyst {
  GridFunction h;
  double rho = 1.0;
  double t_intake = 0.0;
};

enum class BackgroundKind { zero, exp_decay, sinusoid };

inline std::string to_string(BackgroundKind k) {
  switch (k) {
    case BackgroundKind::zero: return "zero";
    case BackgroundKind::exp_decay: return "exp_decay";
    case BackgroundKind::sinusoid: return "sinusoid";
  }
  return "?";
}

/// eta(t)(x) = profile(x) * phi(t) with phi(t) = exp(-rate t) or sin(rate t).
struct BackgroundSource {
  BackgroundKind kind = BackgroundKind::zero;
  double rate = 0.0;
  GridFunction profile;

  double temporal(double t) const {
    switch (kind) {
      case BackgroundKind::exp_decay: return std::exp(-rate * t);
      case BackgroundKind::sinusoid: return std::sin(rate * t);
      case BackgroundKind::zero: break;
    }
    return 0.0;
  }

  /// Closed-form integral of phi over [t0, t1].
  double temporal_integral(double t0, double t1) const {
    switch (kind) {
      case BackgroundKind::exp_decay:
        if (rate == 0.0) return t1 - t0;
        return std::exp(-rate * t0) * (-std::expm1(-rate * (t1 - t0))) / rate;
      case BackgroundKind::sinusoid:
        if (rate == 0.0) return 0.0;
        return (std::cos(rate * t0) - std::cos(rate * t1)) / rate;
      case BackgroundKind::zero: break;
    }
    return 0.0;
  }

  GridFunction at(double t) const { return profile * temporal(t); }

  /// Sup over t of ||eta'(t)||; a valid Lipschitz constant in H.
  double lipschitz() const {
    if (kind == BackgroundKind::zero) return 0.0;
    return std::abs(rate) * norm(profile);
  }

  bool active() const { return kind != BackgroundKind::zero && !profile.is_zero(); }
};

struct SourceModel {
  GridFunction u0;
  std::vector<Catalyst> catalysts;
  BackgroundSource background;
  double D = 1.0;
  double H = 0.0;
  double rho_lo = 1.0;
  double rho_hi = 1.0;

  double max_content_norm() const {
    double m = 0.0;
    for (const auto& c : catalysts) m = std::max(m, norm(c.h));
    return m;
  }

  /// Checks the modelling assumptions for time step beta; returns the first violation.
  std::optional<std::string> validate(double beta) const {
    if (!(rho_lo > 0.0) || rho_hi < rho_lo) return "decay-rate bounds need 0 < rho_lo <= rho_hi";
    if (!(D > 0.0)) return "separation parameter D must be positive";
    if (H < 0.0) return "mass bound H must be nonnegative";
    for (std::size_t j = 0; j < catalysts.size(); ++j) {
      const auto& c = catalysts[j];
      if (c.h.nodes() != u0.nodes()) return "catalyst " + std::to_string(j + 1) + " content has wrong node count";
      if (c.rho < rho_lo || c.rho > rho_hi)
        return "catalyst " + std::to_string(j + 1) + " decay rate outside [rho_lo, rho_hi]";
      if (c.t_intake < 0.0) return "catalyst " + std::to_string(j + 1) + " intake time is negative";
      if (norm(c.h) > H * (1.0 + 1e-12))
        return "mass bound violated: ||h_" + std::to_string(j + 1) + "|| exceeds H";
      if (j > 0) {
        const double gap = c.t_intake - catalysts[j - 1].t_intake;
        if (gap < 4.0 * beta + D - 1e-12)
          return "intake separation violated: t[" + std::to_string(j + 1) + "] - t[" + std::to_string(j) +
                 "] < 4*beta + D";
      }
    }
    if (background.kind != BackgroundKind::zero && background.profile.nodes() != u0.nodes())
      return "background profile has wrong node count";
    return std::nullopt;
  }
};

namespace detail {

/// (exp(a d) - exp(-rho d)) / (a + rho), written to avoid cancellation near a = -rho.
inline double response_factor(double a, double rho, double d) {
  const double s = a + rho;
  if (std::abs(s) < 1e-9) return d * std::exp(-rho * d);
  return std::exp(-rho * d) * std::expm1(s * d) / s;
}

}  // namespace detail

/// Integral over [t_j, t] of T(t-s) h exp(-rho (s - t_j)) ds.
inline GridFunction catalyst_response(const MultiplicationGenerator& a, const Catalyst& c, double t) {
  if (t < c.t_intake) throw InputError("catalyst_response evaluated before the intake time");
  GridFunction::same_shape(a.symbol(), c.h);
  const double d = t - c.t_intake;
  GridFunction out(c.h.nodes());
  for (std::size_t i = 0; i < out.nodes(); ++i) out[i] = c.h[i] * detail::response_factor(a.symbol()[i], c.rho, d);
  return out;
}

/// Mild solution at time t, computed from scratch. The background convolution uses
/// composite Gauss-Legendre with at least ceil(t / bq) panels.
inline GridFunction evolve_state(const SourceModel& m, const MultiplicationGenerator& a, double t,
                                 const Quadrature& q = {QuadratureRule::gauss_legendre, 1, 8},
                                 double bq = 1e-3) {
  if (t < 0.0) throw InputError("evolve_state needs t >= 0");
  GridFunction u = a.semigroup(t, m.u0);
  for (const auto& c : m.catalysts)
    if (c.t_intake < t) u += catalyst_response(a, c, t);
  if (m.background.active() && t > 0.0) {
    Quadrature qq = q;
    qq.panels = std::max(q.panels, static_cast<int>(std::ceil(t / bq)));
    const auto& sym = a.symbol();
    std::map<double, double> cache;
    for (std::size_t i = 0; i < u.nodes(); ++i) {
      const double ai = sym[i];
      auto it = cache.find(ai);
      if (it == cache.end()) {
        const double conv =
            integrate([&](double s) { return std::exp(ai * (t - s)) * m.background.temporal(s); }, 0.0, t, qq);
        it = cache.emplace(ai, conv).first;
      }
      u[i] += m.background.profile[i] * it->second;
    }
  }
  return u;
}

/// Precomputed trajectory for repeated evaluation on [0, horizon].
///
/// The background convolution c_a(t) = int_0^t exp(a (t-s)) phi(s) ds is accumulated
/// panel by panel (width <= bq) for each distinct symbol value a; evaluating at t adds
/// one partial panel. This is the same composite quadrature as evolve_state, memoized.
class Trajectory {
 public:
  Trajectory(SourceModel model, MultiplicationGenerator gen, double horizon, double bq = 1e-3)
      : model_(std::move(model)), gen_(std::move(gen)), horizon_(horizon) {
    if (!(horizon > 0.0)) throw InputError("trajectory horizon must be positive");
    GridFunction::same_shape(gen_.symbol(), model_.u0);
    const auto& sym = gen_.symbol();
    slot_.resize(sym.nodes());
    for (std::size_t i = 0; i < sym.nodes(); ++i) {
      auto it = std::find(avals_.begin(), avals_.end(), sym[i]);
      if (it == avals_.end()) {
        slot_[i] = avals_.size();
        avals_.push_back(sym[i]);
      } else {
        slot_[i] = static_cast<std::size_t>(it - avals_.begin());
      }
    }
    if (model_.background.active()) {
      panels_ = std::max(1, static_cast<int>(std::ceil(horizon / bq)));
      width_ = horizon / panels_;
      cum_.assign(avals_.size(), std::vector<double>(panels_ + 1, 0.0));
      for (std::size_t k = 0; k < avals_.size(); ++k) {
        const double ak = avals_[k];
        const double grow = std::exp(ak * width_);
        for (int p = 0; p < panels_; ++p) {
          const double t0 = p * width_, t1 = (p + 1) * width_;
          cum_[k][p + 1] = grow * cum_[k][p] + panel(ak, t0, t1);
        }
      }
    }
  }

  const SourceModel& model() const { return model_; }
  const MultiplicationGenerator& generator() const { return gen_; }
  double horizon() const { return horizon_; }

  GridFunction state(double t) const {
    if (t < 0.0) throw InputError("trajectory evaluated at negative time");
    if (t > horizon_ * (1.0 + 1e-12)) throw RangeError("trajectory evaluated beyond its horizon");
    const auto& sym = gen_.symbol();
    const std::size_t n = sym.nodes();
    std::vector<double> ea(avals_.size()), bg(avals_.size(), 0.0);
    for (std::size_t k = 0; k < avals_.size(); ++k) ea[k] = t == 0.0 ? 1.0 : std::exp(avals_[k] * t);
    if (model_.background.active() && t > 0.0) {
      int p = std::min(panels_ - 1, static_cast<int>(t / width_));
      const double tp = p * width_;
      for (std::size_t k = 0; k < avals_.size(); ++k)
        bg[k] = std::exp(avals_[k] * (t - tp)) * cum_[k][p] + panel(avals_[k], tp, t, t);
    }
    GridFunction u(n);
    for (std::size_t i = 0; i < n; ++i) u[i] = ea[slot_[i]] * model_.u0[i];
    std::vector<double> fac(avals_.size());
    for (const auto& c : model_.catalysts) {
      if (!(c.t_intake < t)) continue;
      const double d = t - c.t_intake;
      for (std::size_t k = 0; k < avals_.size(); ++k) fac[k] = detail::response_factor(avals_[k], c.rho, d);
      for (std::size_t i = 0; i < n; ++i) u[i] += c.h[i] * fac[slot_[i]];
    }
    if (model_.background.active())
      for (std::size_t i = 0; i < n; ++i) u[i] += model_.background.profile[i] * bg[slot_[i]];
    return u;
  }

 private:
  // int_{t0}^{t1} exp(a (tend - s)) phi(s) ds with tend defaulting to t1
  double panel(double a, double t0, double t1, double tend = -1.0) const {
    if (tend < 0.0) tend = t1;
    if (t1 <= t0) return 0.0;
    return integrate([&](double s) { return std::exp(a * (tend - s)) * model_.background.temporal(s); }, t0, t1,
                     Quadrature{QuadratureRule::gauss_legendre, 1, 8});
  }

  SourceModel model_;
  MultiplicationGenerator gen_;
  double horizon_;
  std::vector<double> avals_;
  std::vector<std::size_t> slot_;
  int panels_ = 0;
  double width_ = 0.0;
  std::vector<std::vector<double>> cum_;
};

}  // namespace sscope
