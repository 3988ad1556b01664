#include <catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include "source_scope/sampling.hpp"
#include "source_scope/scenario.hpp"
#include "support.hpp"

using namespace sscope;
using Catch::Approx;

namespace {

GridFunction fn(const std::string& spec, std::size_t nodes = kDefaultNodes) { return parse_function(spec, nodes); }

struct Setup {
  SourceModel model;
  MultiplicationGenerator gen = MultiplicationGenerator::constant(1.0);
  MeasurementConfig cfg;
};

// first catalyst of the reference experiment alone, A = I
Setup single_catalyst(double sigma = 0.0, NoiseMode mode = NoiseMode::zero) {
  Setup s;
  s.model.u0 = GridFunction(kDefaultNodes);
  s.model.catalysts = {{fn("3*sin"), 1.0, 0.25}};
  s.model.D = 2.0;
  s.model.H = 3.0;
  s.model.rho_lo = 0.5;
  s.model.rho_hi = 3.0;
  s.cfg.beta = 0.01;
  s.cfg.N = 100;
  s.cfg.sigma = sigma;
  s.cfg.noise_mode = mode;
  s.cfg.horizon = 1.0;
  return s;
}

}  // namespace

TEST_CASE("zero model gives zero measurements") {
  Setup s = single_catalyst();
  s.model.catalysts.clear();
  const Trajectory traj(s.model, s.gen, 1.0);
  const auto g = fn("x");
  CHECK(sample_m(traj, g, 10, s.cfg).value == cplx(0.0));
  CHECK(sample_s(traj, g, 10, s.cfg).value == cplx(0.0));
  CHECK(sample_laplace(traj, g, 10, s.cfg).value == cplx(0.0));
}

TEST_CASE("m matches the closed-form expansion") {
  Setup s = single_catalyst();
  const Trajectory traj(s.model, s.gen, 1.0);
  const auto g = fn("one");
  for (int n : {0, 24, 25, 26, 60, 98}) {
    const double v = sample_m(traj, g, n, s.cfg).value.real();
    CHECK(v == Approx(oracle_m_expansion(s.model, g, n, s.cfg)).margin(1e-8));
  }
  // intake exactly at the step start: a single term <h,g> (1 - exp(-rho beta)) / (rho beta)
  const double hg = inner(s.model.catalysts[0].h, g);
  CHECK(oracle_m_expansion(s.model, g, 25, s.cfg) == Approx(hg * -std::expm1(-0.01) / 0.01).epsilon(1e-14));
}

TEST_CASE("noise stays within sigma and is deterministic") {
  Setup s = single_catalyst(1e-3, NoiseMode::uniform);
  const Trajectory traj(s.model, s.gen, 1.0);
  const Sampler noisy(traj, {{"one", fn("one")}, {"x", fn("x")}}, s.cfg);
  for (int n = 0; n < 99; ++n) {
    const auto a = noisy.m_all(n), b = noisy.m_all(n), clean = noisy.m_all(n, false);
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(std::abs(a[i].noise) <= 1e-3);
      CHECK(std::abs(a[i].value - clean[i].value) <= 1e-3 + 1e-15);
      CHECK(a[i].value == b[i].value);
    }
    const auto [ms, m0] = noisy.laplace_all(n);
    for (std::size_t i = 0; i < ms.size(); ++i) {
      CHECK(std::abs(ms[i].noise) <= 1e-3);
      CHECK(std::abs(m0[i].noise) <= 1e-3);
    }
  }
  s.cfg.seed = 2;
  const Sampler other(traj, {{"one", fn("one")}}, s.cfg);
  CHECK(other.m_all(5)[0].noise != noisy.m_all(5)[0].noise);
}

TEST_CASE("adversarial noise alternates and saturates the difference") {
  MeasurementConfig cfg;
  cfg.sigma = 2e-3;
  cfg.noise_mode = NoiseMode::adversarial_alternating;
  for (int n = 1; n < 20; ++n) {
    CHECK(std::abs(noise_draw(cfg, Family::m, n, "g") - noise_draw(cfg, Family::m, n - 1, "g")) ==
          Approx(2 * cfg.sigma).epsilon(1e-15));
    const cplx dl = noise_draw(cfg, Family::laplace, n, "g") - noise_draw(cfg, Family::laplace0, n, "g");
    const cplx dl1 = noise_draw(cfg, Family::laplace, n - 1, "g") - noise_draw(cfg, Family::laplace0, n - 1, "g");
    CHECK(std::abs(dl - dl1) == Approx(4 * cfg.sigma).epsilon(1e-15));
  }
}

TEST_CASE("s converges to the derivative limit at first order") {
  Setup s = single_catalyst();
  const Trajectory traj(s.model, s.gen, 1.0);
  const auto g = fn("x");
  const int n = 40;
  const double limit = oracle_s_limit(s.model, g, n, s.cfg);
  std::vector<double> errs;
  for (int N : {10, 20, 40, 80}) {
    MeasurementConfig c = s.cfg;
    c.N = N;
    errs.push_back(std::abs(sample_s(traj, g, n, c).value.real() - limit));
  }
  for (std::size_t i = 1; i < errs.size(); ++i) CHECK(std::log2(errs[i - 1] / errs[i]) >= 0.9);

  // N = 1 is the same formula with fine step beta
  MeasurementConfig c1 = s.cfg;
  c1.N = 1;
  const Sampler smp(traj, {{"x", g}}, c1);
  CHECK(smp.s_all(n)[0].value == smp.s_all(n, 1)[0].value);
}

TEST_CASE("halving beta doubles m for a short impulse while the noise bound stays") {
  // a very fast decay acts as an impulse of mass <h,g>/rho
  Setup s = single_catalyst(1e-3, NoiseMode::uniform);
  s.model.catalysts[0].rho = 2000.0;
  s.model.catalysts[0].t_intake = 0.4;
  const Trajectory traj(s.model, s.gen, 1.0);
  const auto g = fn("one");
  MeasurementConfig half = s.cfg;
  half.beta = 0.005;
  const Sampler coarse(traj, {{"one", g}}, s.cfg), fine(traj, {{"one", g}}, half);
  const double big = fine.m_all(80, false)[0].value.real();
  const double small = coarse.m_all(40, false)[0].value.real();
  CHECK(big / small == Approx(2.0).epsilon(1e-4));
  CHECK(std::abs(coarse.m_all(40)[0].noise) <= 1e-3);
  CHECK(std::abs(fine.m_all(80)[0].noise) <= 1e-3);
}

TEST_CASE("Laplace differences match the closed forms") {
  Setup s = single_catalyst();
  s.cfg.horizon = 1.0;
  const Trajectory traj(s.model, s.gen, 1.0);
  const auto g = fn("x2");
  const Sampler smp(traj, {{"x2", g}}, s.cfg);
  for (int ell : {10, 25, 26, 30, 90}) {
    const auto [ms, m0] = smp.laplace_all(ell, false);
    CHECK(std::abs(ms[0].value - m0[0].value - oracle_delta_laplace(s.model, g, ell, s.cfg)) < 1e-7);
  }
  // after the intake: s (exp(rho (t_j - (l+1) beta)) - exp(rho (t_j - l beta))) / (rho (rho + s) beta^2) <h,g>
  const int ell = 30;
  const double b = 0.01, rho = 1.0, tj = 0.25;
  const cplx sv(0.0, 2.0 * std::numbers::pi / b);
  const cplx direct = sv * (std::exp(rho * (tj - (ell + 1) * b)) - std::exp(rho * (tj - ell * b))) /
                      (rho * (rho + sv) * b * b) * inner(s.model.catalysts[0].h, g);
  CHECK(std::abs(oracle_delta_laplace(s.model, g, ell, s.cfg) - direct) < 1e-12);

  SourceModel none = s.model;
  none.catalysts.clear();
  CHECK(oracle_delta_laplace(none, g, 5, s.cfg) == cplx(0.0));
}

TEST_CASE("k = 0 gives the subtrahend family") {
  Setup s = single_catalyst();
  const Trajectory traj(s.model, s.gen, 1.0);
  const auto g = fn("x");
  MeasurementConfig k0 = s.cfg;
  k0.k = 0;
  const Sampler smp(traj, {{"x", g}}, s.cfg);
  const auto direct = sample_laplace(traj, g, 30, k0);
  CHECK(std::abs(direct.value - smp.laplace_all(30, false).second[0].value) < 1e-12);
}

TEST_CASE("two intakes in one window break the reduced form") {
  Setup s = single_catalyst();
  s.model.catalysts.push_back({fn("one"), 1.0, 0.255});
  CHECK_THROWS_AS(oracle_delta_laplace(s.model, fn("one"), 25, s.cfg), ModelError);
}

TEST_CASE("periodicity of the Laplace weight") {
  for (double beta : {0.005, 0.01, 0.05})
    for (int k : {1, 2, 3}) {
      MeasurementConfig cfg;
      cfg.beta = beta;
      cfg.k = k;
      for (int ell : {1, 17, 499}) CHECK(std::abs(std::exp(-cfg.s() * (ell * beta)) - 1.0) < 1e-12);
    }
}

TEST_CASE("sampling outside the horizon is a range error") {
  Setup s = single_catalyst();
  const Trajectory traj(s.model, s.gen, 1.0);
  const auto g = fn("one");
  CHECK_THROWS_AS(sample_m(traj, g, 100, s.cfg), RangeError);
  CHECK_THROWS_AS(sample_laplace(traj, g, 100, s.cfg), RangeError);
  CHECK_THROWS_AS(sample_s(traj, g, 101, s.cfg), RangeError);
  CHECK_THROWS_AS(sample_m(traj, g, -1, s.cfg), RangeError);
}

TEST_CASE("missing stream indices are data errors") {
  RealStream m{{1, 0.0}, {2, 0.0}};
  CHECK_THROWS_WITH(stream_at(m, 3, "m[x]"), Catch::Matchers::ContainsSubstring("missing m[x] index 3"));
}

TEST_CASE("measurement CSV layout") {
  Setup s = single_catalyst(1e-3, NoiseMode::adversarial_alternating);
  const Trajectory traj(s.model, s.gen, 1.0);
  const Sampler smp(traj, {{"one", fn("one")}}, s.cfg);
  std::vector<MeasurementRecord> recs;
  m_streams(smp, &recs);
  std::ostringstream os;
  write_measurements_csv(os, recs);
  const std::string out = os.str();
  CHECK(out.rfind("family,index,sensor_id,re,im,noise_re,noise_im\n", 0) == 0);
  CHECK(out.find("\nm,0,one,") != std::string::npos);
  CHECK(out.find('\r') == std::string::npos);
}
