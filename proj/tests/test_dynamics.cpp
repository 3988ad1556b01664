#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "source_scope/dynamics.hpp"
#include "source_scope/scenario.hpp"

using namespace sscope;
using Catch::Approx;

namespace {

constexpr double kSinh1 = 1.17520119364380146;  // (e - 1/e) / 2

GridFunction fn(const std::string& spec, std::size_t nodes = kDefaultNodes) { return parse_function(spec, nodes); }

double max_abs_diff(const GridFunction& a, const GridFunction& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.nodes(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

SourceModel empty_model(std::size_t nodes = kDefaultNodes) {
  SourceModel m;
  m.u0 = GridFunction(nodes);
  m.background.profile = GridFunction(nodes);
  m.D = 1.0;
  m.rho_lo = 0.5;
  m.rho_hi = 3.0;
  return m;
}

}  // namespace

TEST_CASE("semigroup identity, law and self-adjointness") {
  const auto gen = MultiplicationGenerator(fn("linear:-1:0.7"));
  const auto v = fn("2*cos");
  const auto t0 = gen.semigroup(0.0, v);
  for (std::size_t i = 0; i < v.nodes(); ++i) CHECK(t0[i] == v[i]);
  for (double t : {0.1, 0.7, 2.0})
    for (double s : {0.05, 1.3}) {
      const auto lhs = gen.semigroup(t, gen.semigroup(s, v));
      const auto rhs = gen.semigroup(t + s, v);
      for (std::size_t i = 0; i < v.nodes(); ++i) CHECK(lhs[i] == Approx(rhs[i]).epsilon(1e-12));
    }
  const auto f = fn("sin"), g = fn("x2");
  CHECK(inner(gen.semigroup(0.8, f), g) == Approx(inner(f, gen.semigroup(0.8, g))).epsilon(1e-13));
}

TEST_CASE("catalyst_response examples") {
  const auto h = fn("3*sin");
  const auto id = MultiplicationGenerator::constant(1.0);
  CHECK(catalyst_response(id, {h, 1.0, 0.25}, 0.25).is_zero());
  const auto r = catalyst_response(id, {h, 1.0, 0.25}, 1.25);
  for (std::size_t i = 0; i < h.nodes(); ++i) CHECK(r[i] == Approx(h[i] * kSinh1).epsilon(1e-14));

  // a = -rho: removable singularity h (t - t_j) exp(-rho (t - t_j))
  const double rho = 2.0, d = 0.6;
  const auto sing = catalyst_response(MultiplicationGenerator::constant(-rho), {h, rho, 1.0}, 1.0 + d);
  for (std::size_t i = 0; i < h.nodes(); ++i) CHECK(sing[i] == Approx(h[i] * d * std::exp(-rho * d)).epsilon(1e-14));

  CHECK_THROWS_AS(catalyst_response(id, {h, 1.0, 0.25}, 0.2), InputError);
}

TEST_CASE("catalyst_response is continuous across the singular symbol") {
  const auto h = fn("one");
  const double rho = 1.5, t = 0.9;
  const auto at = catalyst_response(MultiplicationGenerator::constant(-rho), {h, rho, 0.0}, t);
  for (double eps : {1e-10, -1e-10}) {
    const auto near = catalyst_response(MultiplicationGenerator::constant(-rho + eps), {h, rho, 0.0}, t);
    CHECK(max_abs_diff(at, near) < 1e-8 * std::abs(at[0]));
  }
}

TEST_CASE("evolve_state examples") {
  const auto id = MultiplicationGenerator::constant(1.0);
  SourceModel m = empty_model();
  for (double t : {0.0, 0.3, 2.0}) CHECK(evolve_state(m, id, t).is_zero());

  m.catalysts.push_back({fn("2.5*cos"), 2.0, 0.4});
  CHECK(max_abs_diff(evolve_state(m, id, 1.7), catalyst_response(id, m.catalysts[0], 1.7)) == 0.0);

  CHECK_THROWS_AS(evolve_state(m, id, -0.1), InputError);
}

TEST_CASE("exponential background matches the closed-form convolution") {
  const double L = 1e-2;
  SourceModel m = empty_model();
  m.background = {BackgroundKind::exp_decay, L, fn("x")};
  const auto id = MultiplicationGenerator::constant(1.0);
  const Trajectory traj(m, id, 5.0);
  for (double t : {0.37, 1.0, 4.25}) {
    const auto x = fn("x");
    const auto exact = x * ((std::exp(t) - std::exp(-L * t)) / (1.0 + L));
    CHECK(max_abs_diff(evolve_state(m, id, t), exact) < 1e-11);
    CHECK(max_abs_diff(traj.state(t), exact) < 1e-11);
  }
  // independent spot value: x = 0.5, t = 1
  CHECK(traj.state(1.0)[128] == Approx(0.855560393420731278).epsilon(1e-12));
}

TEST_CASE("trajectory agrees with direct evolution for both background kinds") {
  for (auto kind : {BackgroundKind::exp_decay, BackgroundKind::sinusoid}) {
    SourceModel m = empty_model(65);
    m.u0 = fn("0.3*exp", 65);
    m.catalysts = {{fn("x2", 65), 1.2, 0.3}, {fn("2*sin", 65), 0.8, 2.0}};
    m.background = {kind, 0.07, fn("linear:1:-0.5", 65)};
    const auto gen = MultiplicationGenerator(fn("linear:-0.8:0.4", 65));
    const Trajectory traj(m, gen, 3.0);
    for (double t : {0.0, 0.3, 0.31, 1.234, 2.0, 3.0}) CHECK(max_abs_diff(traj.state(t), evolve_state(m, gen, t)) < 1e-12);
  }
}

TEST_CASE("superposition of catalysts") {
  SourceModel m = empty_model(65);
  m.u0 = fn("cos", 65);
  const Catalyst c1{fn("x", 65), 1.0, 0.2}, c2{fn("3*sin", 65), 2.5, 1.1};
  const auto gen = MultiplicationGenerator(fn("linear:-1:0.5", 65));
  auto only = [&](std::vector<Catalyst> cs) {
    SourceModel s = m;
    s.catalysts = std::move(cs);
    return s;
  };
  SourceModel homog = only({});
  for (double t : {0.5, 1.5, 3.0}) {
    const auto sum = evolve_state(only({c1}), gen, t) + evolve_state(only({c2}), gen, t) - evolve_state(homog, gen, t);
    const auto both = evolve_state(only({c1, c2}), gen, t);
    for (std::size_t i = 0; i < sum.nodes(); ++i) CHECK(both[i] == Approx(sum[i]).epsilon(1e-12).margin(1e-14));
  }
}

TEST_CASE("mild solution satisfies the differential equation") {
  SourceModel m = empty_model(33);
  m.u0 = fn("sin", 33);
  m.catalysts = {{fn("x", 33), 1.3, 0.1}};
  m.background = {BackgroundKind::sinusoid, 0.5, fn("one", 33)};
  const auto gen = MultiplicationGenerator(fn("linear:-0.5:1", 33));
  const double t = 0.8;
  auto residual = [&](double delta) {
    const auto du = (evolve_state(m, gen, t + delta) - evolve_state(m, gen, t - delta)) * (0.5 / delta);
    const auto u = evolve_state(m, gen, t);
    const auto F = m.catalysts[0].h * std::exp(-1.3 * (t - 0.1)) + m.background.at(t);
    return max_abs_diff(du, gen.apply(u) + F);
  };
  const double e1 = residual(0.02), e2 = residual(0.01), e3 = residual(0.005);
  CHECK(std::log2(e1 / e2) >= 1.9);
  CHECK(std::log2(e2 / e3) >= 1.9);
}

TEST_CASE("background Lipschitz constant bounds increments") {
  for (auto kind : {BackgroundKind::exp_decay, BackgroundKind::sinusoid}) {
    const BackgroundSource bg{kind, 0.3, fn("linear:2:-1")};
    const double L = bg.lipschitz();
    for (double t = 0.0; t < 10.0; t += 0.37)
      for (double s : {1e-3, 0.1, 1.0, 4.0}) CHECK(norm(bg.at(t + s) - bg.at(t)) <= L * s * (1.0 + 1e-12));
  }
}

TEST_CASE("model validation names the violated assumption") {
  SourceModel m = empty_model();
  m.catalysts = {{fn("one"), 1.0, 0.2}, {fn("one"), 1.0, 1.2}};
  m.H = 1.0;
  m.D = 1.0;
  // 4 beta + D = 1.04 <= 1.0 gap fails
  const auto e = m.validate(0.01);
  REQUIRE(e.has_value());
  CHECK(e->find("intake separation") != std::string::npos);
  CHECK_FALSE(m.validate(0.0).has_value());
  m.H = 0.5;
  CHECK(m.validate(0.0)->find("mass bound") != std::string::npos);
  m.H = 1.0;
  m.catalysts[0].rho = 5.0;
  CHECK(m.validate(0.0)->find("decay rate") != std::string::npos);
}
