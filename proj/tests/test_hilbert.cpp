#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "source_scope/hilbert.hpp"
#include "source_scope/scenario.hpp"

using namespace sscope;
using Catch::Approx;

namespace {

// closed-form integrals on [0,1], evaluated independently
constexpr double kThreeSinInt = 1.37909308239558084;  // 3 (1 - cos 1)
constexpr double kEMinusOne = 1.71828182845904524;
// trapezoid on 256 panels integrates x^2 with error h^2/6
constexpr double kTrapXX = 1.0 / 3.0 + 1.0 / (6.0 * 256.0 * 256.0);

GridFunction fn(const std::string& spec, std::size_t nodes = kDefaultNodes) { return parse_function(spec, nodes); }

}  // namespace

TEST_CASE("inner product examples") {
  const auto x = fn("x");
  CHECK(inner(fn("zero"), fn("sin")) == 0.0);
  CHECK(inner(x, x) == Approx(kTrapXX).epsilon(1e-14));
  CHECK(inner(x, x) == Approx(1.0 / 3.0).margin(1e-5));
  CHECK(inner(fn("3*sin"), fn("one")) == Approx(kThreeSinInt).margin(1e-5));
  CHECK(inner(fn("one"), fn("one")) == 1.0);
}

TEST_CASE("mismatched node counts raise a dimension error") {
  CHECK_THROWS_AS(inner(fn("x", 65), fn("x", 129)), DimensionError);
  CHECK_THROWS_AS(fn("x", 65) + fn("x", 129), DimensionError);
}

TEST_CASE("grid functions reject non-finite values") {
  CHECK_THROWS_AS(GridFunction(std::vector<double>{0.0, NAN, 1.0}), InputError);
  CHECK_THROWS_AS(GridFunction(std::vector<double>{0.0, INFINITY}), InputError);
}

TEST_CASE("quadrature of constants") {
  const auto one = [](double) { return 1.0; };
  CHECK(integrate(one, 0.0, 1.0, {QuadratureRule::trapezoid, 256, 8}) == 1.0);
  CHECK(integrate(one, 0.0, 1.0, {QuadratureRule::gauss_legendre, 4, 8}) == Approx(1.0).margin(1e-14));
  CHECK(integrate(one, 0.0, 1.0, {QuadratureRule::gauss_legendre, 1, 32}) == Approx(1.0).margin(1e-14));
}

TEST_CASE("Gauss-Legendre rules integrate polynomials exactly") {
  for (int n : {1, 2, 5, 8, 32}) {
    const auto& r = gauss_rule(n);
    double wsum = 0.0;
    for (double w : r.w) wsum += w;
    CHECK(wsum == Approx(2.0).margin(1e-13));
    // degree 2n-1 is exact
    const int deg = 2 * n - 1;
    double s = 0.0;
    for (std::size_t i = 0; i < r.x.size(); ++i) s += r.w[i] * std::pow(r.x[i], deg - 1);
    const double exact = (deg - 1) % 2 == 0 ? 2.0 / deg : 0.0;
    CHECK(s == Approx(exact).margin(1e-13));
  }
  CHECK_THROWS_AS(make_gauss_rule(0), InputError);
}

TEST_CASE("integrate_time examples") {
  const double beta = 0.01, c = 2.5;
  CHECK(integrate_time({{0.0, c}, {beta, c}}) == Approx(c * beta).epsilon(1e-15));
  CHECK(integrate_time({{0.0, 0.0}, {0.5, 0.5}, {1.0, 1.0}}) == 0.5);
  std::vector<TimeSample> ex;
  for (int i = 0; i <= 2000; ++i) ex.push_back({i / 2000.0, std::exp(i / 2000.0)});
  CHECK(integrate_time(ex) == Approx(kEMinusOne).margin(1e-7));
  CHECK(integrate([](double t) { return std::exp(t); }, 0.0, 1.0, {QuadratureRule::gauss_legendre, 1, 8}) ==
        Approx(kEMinusOne).margin(1e-14));
}

TEST_CASE("integrate_time input errors") {
  CHECK_THROWS_AS(integrate_time({{0.0, 1.0}}), InputError);
  CHECK_THROWS_AS(integrate_time({{0.0, 1.0}, {0.0, 2.0}}), InputError);
  CHECK_THROWS_AS(integrate_time({{0.0, 1.0}, {1.0, 2.0}}, {QuadratureRule::gauss_legendre, 1, 8}), InputError);
}

TEST_CASE("bilinearity and Cauchy-Schwarz on random grid functions") {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> U(-2.0, 2.0);
  auto rand_fn = [&] {
    std::vector<double> v(kDefaultNodes);
    for (auto& e : v) e = U(rng);
    return GridFunction(v);
  };
  for (int trial = 0; trial < 50; ++trial) {
    const auto f = rand_fn(), g = rand_fn(), h = rand_fn();
    const double a = U(rng);
    const double lhs = inner(f * a + g, h);
    const double rhs = a * inner(f, h) + inner(g, h);
    CHECK(lhs == Approx(rhs).epsilon(1e-12).margin(1e-13));
    CHECK(inner(f, g) == inner(g, f));
    CHECK(inner(f, g) * inner(f, g) <= inner(f, f) * inner(g, g) * (1.0 + 1e-14));
    CHECK(inner(f, f) > 0.0);
  }
}

TEST_CASE("trapezoid refinement converges at second order") {
  std::vector<double> errs;
  const double exact = 0.5 * std::sin(1.0) * std::sin(1.0);  // int sin cos on [0,1]
  for (std::size_t nodes : {33, 65, 129, 257}) errs.push_back(std::abs(inner(fn("sin", nodes), fn("cos", nodes)) - exact));
  for (std::size_t i = 1; i < errs.size(); ++i) CHECK(std::log2(errs[i - 1] / errs[i]) >= 1.9);
}
