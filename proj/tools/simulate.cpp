// simulate: run one scenario (or a sweep, or the full figure set) and write CSV/SVG output.

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "source_scope/source_scope.hpp"

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitCertificate = 3;

struct SweepArg {
  sscope::SweepAxis axis;
  std::vector<double> values;
};

SweepArg parse_sweep_arg(const std::string& arg) {
  const auto eq = arg.find('=');
  if (eq == std::string::npos) throw sscope::InputError("--sweep expects axis=v1,v2,...");
  SweepArg out{sscope::parse_axis(arg.substr(0, eq)), {}};
  for (const auto& tok : sscope::detail::split(arg.substr(eq + 1), ',')) {
    double v = 0.0;
    if (!sscope::detail::parse_double(tok, v)) throw sscope::InputError("bad sweep value '" + tok + "'");
    out.values.push_back(v);
  }
  if (out.values.empty()) throw sscope::InputError("--sweep needs at least one value");
  return out;
}

int parse_algorithm(const std::string& a) {
  if (a == "1") return sscope::kAlg1;
  if (a == "2") return sscope::kAlg2;
  if (a == "both") return sscope::kBoth;
  throw sscope::InputError("--algorithm must be 1, 2 or both");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Forward-simulate a source scenario, recover catalysts and certify the error bounds"};
  std::string scenario_path, out_dir, algorithm, sweep;
  std::optional<std::uint64_t> seed;
  int reps = 10;
  unsigned threads = 1;
  bool figures = false, dump = false;
  app.add_option("--scenario", scenario_path, "scenario file")->required();
  app.add_option("--out", out_dir, "output directory")->required();
  app.add_option("--seed", seed, "noise seed (overrides the scenario)");
  app.add_option("--algorithm", algorithm, "1, 2 or both (default: scenario setting)");
  app.add_option("--sweep", sweep, "axis=v1,v2,... with axis in beta, L, sigma, N");
  app.add_option("--reps", reps, "repetitions per sweep point")->check(CLI::PositiveNumber);
  app.add_option("--threads", threads, "worker threads for sweeps (SOURCE_SCOPE_THREADS wins)");
  app.add_flag("--figures", figures, "run the default experiment set and write six SVG figures");
  app.add_flag("--measurements", dump, "also write every sampled measurement");
  CLI11_PARSE(app, argc, argv);

  try {
    sscope::Scenario s = sscope::load_scenario(scenario_path);
    if (seed) s.mcfg.seed = *seed;
    if (!algorithm.empty()) s.algorithms = parse_algorithm(algorithm);
    s.finalize();
    const unsigned nthreads = sscope::resolve_threads(threads);
    const std::filesystem::path dir(out_dir);

    if (figures) {
      const auto fs = sscope::emit_figures(dir, s, reps, nthreads);
      for (const auto& f : fs.files) std::cout << (dir / f).string() << '\n';
      if (!fs.all_certificates_pass) {
        std::cerr << "certificate violation in figure runs\n";
        return kExitCertificate;
      }
      return 0;
    }
    if (!sweep.empty()) {
      const auto arg = parse_sweep_arg(sweep);
      const auto r = sscope::run_sweep(s, arg.axis, arg.values, reps, nthreads, s.algorithms);
      sscope::emit_sweep(dir, r);
      bool pass = true;
      for (const auto& p : r.points) {
        if (p.failed) std::cerr << "point " << sscope::to_string(arg.axis) << '=' << p.value << " seed " << p.seed
                                << " failed: " << p.error << '\n';
        else if (p.m1.cert_pass_rate < 1.0 || p.m2.cert_pass_rate < 1.0) pass = false;
      }
      if (!pass) {
        std::cerr << "certificate violation in sweep\n";
        return kExitCertificate;
      }
      return 0;
    }

    const auto r = sscope::run_scenario(s, s.algorithms, dump);
    sscope::emit_run(dir, s, r);
    if (r.ran1) std::cout << "algorithm 1: " << r.events1.size() << " events, " << r.certs1.size() << " certificates\n";
    if (r.ran2) std::cout << "algorithm 2: " << r.events2.size() << " events, " << r.certs2.size() << " certificates\n";
    if (!r.all_certificates_pass()) {
      for (const auto* cs : {&r.certs1, &r.certs2})
        for (const auto& c : *cs)
          if (!c.satisfied)
            std::cerr << "violated: j=" << c.j << " sensor=" << c.sensor_id << ' ' << c.kind << " observed "
                      << c.observed << " > " << c.rhs << '\n';
      return kExitCertificate;
    }
    return 0;
  } catch (const sscope::ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const sscope::ValidationError& e) {
    std::cerr << "validation error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const sscope::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
