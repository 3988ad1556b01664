#pragma once

// Discretized L2([0,1]): grid functions, inner products and 1-D quadrature.

#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"

namespace sscope {

inline constexpr std::size_t kDefaultNodes = 257;

/// Samples of a real function on a uniform grid of [0,1] (endpoints included).
class GridFunction {
 public:
  GridFunction() : values_(kDefaultNodes, 0.0) {}
  explicit GridFunction(std::size_t nodes, double fill = 0.0) : values_(check_nodes(nodes), fill) {}
  explicit GridFunction(std::vector<double> values) : values_(std::move(values)) {
    check_nodes(values_.size());
    for (double v : values_)
      if (!std::isfinite(v)) throw InputError("grid function value is not finite");
  }

  template <class F>
  static GridFunction sample(F&& f, std::size_t nodes = kDefaultNodes) {
    GridFunction out(nodes);
    for (std::size_t i = 0; i < nodes; ++i) out.values_[i] = f(out.x(i));
    for (double v : out.values_)
      if (!std::isfinite(v)) throw InputError("grid function value is not finite");
    return out;
  }

  std::size_t nodes() const { return values_.size(); }
  double x(std::size_t i) const { return static_cast<double>(i) / static_cast<double>(values_.size() - 1); }
  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }
  const std::vector<double>& values() const { return values_; }

  bool is_zero() const {
    for (double v : values_)
      if (v != 0.0) return false;
    return true;
  }

  GridFunction& operator+=(const GridFunction& o) {
    same_shape(*this, o);
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += o.values_[i];
    return *this;
  }
  GridFunction& operator-=(const GridFunction& o) {
    same_shape(*this, o);
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= o.values_[i];
    return *this;
  }
  GridFunction& operator*=(double c) {
    for (double& v : values_) v *= c;
    return *this;
  }

  friend GridFunction operator+(GridFunction a, const GridFunction& b) { return a += b; }
  friend GridFunction operator-(GridFunction a, const GridFunction& b) { return a -= b; }
  friend GridFunction operator*(double c, GridFunction a) { return a *= c; }
  friend GridFunction operator*(GridFunction a, double c) { return a *= c; }

  /// Pointwise product.
  friend GridFunction hadamard(const GridFunction& a, const GridFunction& b) {
    same_shape(a, b);
    GridFunction out(a.nodes());
    for (std::size_t i = 0; i < a.nodes(); ++i) out.values_[i] = a.values_[i] * b.values_[i];
    return out;
  }

  static void same_shape(const GridFunction& a, const GridFunction& b) {
    if (a.nodes() != b.nodes())
      throw DimensionError("node count mismatch: " + std::to_string(a.nodes()) + " vs " +
                           std::to_string(b.nodes()));
  }

 private:
  static std::size_t check_nodes(std::size_t n) {
    if (n < 2) throw InputError("a grid function needs at least 2 nodes");
    return n;
  }
  std::vector<double> values_;
};

enum class QuadratureRule { trapezoid, gauss_legendre };

struct Quadrature {
  QuadratureRule rule = QuadratureRule::trapezoid;
  int panels = 256;
  int points = 8;  // Gauss-Legendre points per panel
};

/// Nodes and weights of the n-point Gauss-Legendre rule on [-1,1].
struct GaussRule {
  std::vector<double> x, w;
};

inline GaussRule make_gauss_rule(int n) {
  if (n < 1) throw InputError("Gauss-Legendre rule needs at least one point");
  GaussRule r;
  r.x.resize(n);
  r.w.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 1; j <= n; ++j) {
        double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p2) / j;
      }
      dp = n * (z * p0 - p1) / (z * z - 1.0);
      double dz = p0 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    // recompute the derivative at the converged root
    double p0 = 1.0, p1 = 0.0;
    for (int j = 1; j <= n; ++j) {
      double p2 = p1;
      p1 = p0;
      p0 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p2) / j;
    }
    dp = n * (z * p0 - p1) / (z * z - 1.0);
    double w = 2.0 / ((1.0 - z * z) * dp * dp);
    r.x[i] = -z;
    r.x[n - 1 - i] = z;
    r.w[i] = w;
    r.w[n - 1 - i] = w;
  }
  if (n % 2 == 1) r.x[n / 2] = 0.0;
  return r;
}

inline const GaussRule& gauss_rule(int n) {
  static const GaussRule r8 = make_gauss_rule(8);
  static const GaussRule r32 = make_gauss_rule(32);
  if (n == 8) return r8;
  if (n == 32) return r32;
  thread_local GaussRule other;
  if (static_cast<int>(other.x.size()) != n) other = make_gauss_rule(n);
  return other;
}

/// Composite rule on [a,b] for a callable integrand. Works for real or complex results.
template <class F>
auto integrate(F&& f, double a, double b, const Quadrature& q) -> decltype(f(a)) {
  using R = decltype(f(a));
  if (q.panels < 1) throw InputError("quadrature needs at least one panel");
  R sum{};
  const double h = (b - a) / q.panels;
  if (q.rule == QuadratureRule::trapezoid) {
    sum += 0.5 * f(a);
    for (int i = 1; i < q.panels; ++i) sum += f(a + i * h);
    sum += 0.5 * f(b);
    return sum * h;
  }
  const GaussRule& g = gauss_rule(q.points);
  for (int p = 0; p < q.panels; ++p) {
    const double lo = a + p * h;
    const double mid = lo + 0.5 * h;
    R part{};
    for (std::size_t i = 0; i < g.x.size(); ++i) part += g.w[i] * f(mid + 0.5 * h * g.x[i]);
    sum += part * (0.5 * h);
  }
  return sum;
}

/// Trapezoid weights for a grid with `nodes` points.
inline const std::vector<double>& trapezoid_weights(std::size_t nodes) {
  thread_local std::vector<double> w;
  if (w.size() != nodes) {
    w.assign(nodes, 1.0 / static_cast<double>(nodes - 1));
    w.front() *= 0.5;
    w.back() *= 0.5;
  }
  return w;
}

/// Composite trapezoid approximation of the integral of f*g over [0,1].
inline double inner(const GridFunction& f, const GridFunction& g) {
  GridFunction::same_shape(f, g);
  const auto& w = trapezoid_weights(f.nodes());
  double s = 0.0;
  for (std::size_t i = 0; i < f.nodes(); ++i) s += w[i] * f[i] * g[i];
  return s;
}

inline double norm(const GridFunction& f) { return std::sqrt(inner(f, f)); }

struct TimeSample {
  double t;
  double v;
};

/// Integral of sampled data over [t_first, t_last]. Only the trapezoid rule makes
/// sense for data at caller-chosen abscissae; Gauss-Legendre needs its own nodes
/// and is available through integrate() with a callable.
inline double integrate_time(const std::vector<TimeSample>& samples,
                             const Quadrature& q = {QuadratureRule::trapezoid, 1, 8}) {
  if (samples.size() < 2) throw InputError("integrate_time needs at least 2 samples");
  if (q.rule != QuadratureRule::trapezoid)
    throw InputError("Gauss-Legendre needs a callable integrand, not fixed samples");
  double s = 0.0;
  for (std::size_t i = 1; i < samples.size(); ++i) {
    const double dt = samples[i].t - samples[i - 1].t;
    if (!(dt > 0.0)) throw InputError("sample times must be strictly increasing");
    s += 0.5 * dt * (samples[i].v + samples[i - 1].v);
  }
  return s;
}

}  // namespace sscope
