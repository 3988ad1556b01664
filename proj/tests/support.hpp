#pragma once

// Shared fixtures: the committed scenario and a seeded random-scenario generator.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "source_scope/source_scope.hpp"

#ifndef SOURCE_SCOPE_DIR
#define SOURCE_SCOPE_DIR "."
#endif

namespace testsupport {

inline std::string scenario_path(const std::string& name) {
  return std::string(SOURCE_SCOPE_DIR) + "/scenarios/" + name + ".scenario";
}

inline sscope::Scenario paper_scenario() { return sscope::load_scenario(scenario_path("paper_fig1")); }

struct RandomOptions {
  int min_catalysts = 1;
  int max_catalysts = 3;
  std::size_t nodes = 129;
};

/// A valid random scenario: intakes respect the separation 4 beta + D, all rates lie
/// in [rho_lo, rho_hi], and the Laplace step condition holds.
inline sscope::Scenario random_scenario(std::uint64_t seed, const RandomOptions& o = {}) {
  std::mt19937_64 rng(seed);
  auto U = [&](double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); };
  auto I = [&](int a, int b) { return std::uniform_int_distribution<int>(a, b)(rng); };
  const std::vector<std::string> shapes{"one", "x", "x2", "sin", "cos", "exp", "linear:1:-0.5"};
  auto shape = [&] { return shapes[static_cast<std::size_t>(I(0, static_cast<int>(shapes.size()) - 1))]; };

  sscope::Scenario s;
  s.name = "random" + std::to_string(seed);
  s.nodes = o.nodes;
  const double betas[] = {0.005, 0.01, 0.02};
  s.mcfg.beta = betas[I(0, 2)];
  s.mcfg.N = I(20, 100);
  s.mcfg.k = 1;
  s.mcfg.sigma = std::pow(10.0, U(-5.0, -2.0));
  s.mcfg.noise_mode = I(0, 1) ? sscope::NoiseMode::uniform : sscope::NoiseMode::adversarial_alternating;
  s.mcfg.seed = seed * 7919 + 1;
  s.generator = I(0, 1) ? sscope::MultiplicationGenerator::constant(U(-1.0, 0.5), s.nodes)
                        : sscope::MultiplicationGenerator(sscope::parse_function("linear:" + std::to_string(U(-1.0, 0.0)) +
                                                                                     ":" + std::to_string(U(-0.5, 0.5)),
                                                                                 s.nodes));
  s.model.u0 = sscope::parse_function(std::to_string(U(-1.0, 1.0)) + "*" + shape(), s.nodes);
  s.model.D = U(0.5, 1.5);
  s.model.rho_lo = U(0.3, 1.0);
  s.model.rho_hi = U(2.0, 4.0);

  const int nc = I(o.min_catalysts, o.max_catalysts);
  const double sep = 4.0 * s.mcfg.beta + s.model.D;
  double t = U(0.1, 0.6);
  for (int j = 0; j < nc; ++j) {
    const double scale = U(0.5, 3.0) * (I(0, 1) ? 1.0 : -1.0);
    s.model.catalysts.push_back(
        {sscope::parse_function(std::to_string(scale) + "*" + shape(), s.nodes), U(s.model.rho_lo, s.model.rho_hi), t});
    t += sep + U(0.05, 0.8);
  }
  s.horizon = s.model.catalysts.back().t_intake + U(0.3, 1.0);

  const int bk = I(0, 2);
  s.model.background.kind = bk == 0 ? sscope::BackgroundKind::zero
                             : bk == 1 ? sscope::BackgroundKind::exp_decay
                                       : sscope::BackgroundKind::sinusoid;
  s.model.background.rate = std::pow(10.0, U(-3.0, -1.0));
  s.model.background.profile = sscope::parse_function(std::to_string(U(0.2, 1.5)) + "*" + shape(), s.nodes);

  const int ns = I(1, 3);
  for (int i = 0; i < ns; ++i) {
    const std::string sh = shapes[static_cast<std::size_t>(i)];
    s.sensors.push_back({sh, sscope::parse_function(sh, s.nodes)});
  }
  s.K = U(1.0, 1.5);
  s.ell0 = 3;
  s.algorithms = sscope::kBoth;
  s.finalize();
  return s;
}

}  // namespace testsupport
