#include <fstream>
#include <sstream>

#include "source_scope/output.hpp"

namespace sscope {

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot write " + path.string());
  f << content;
  if (!f) throw InputError("write failed for " + path.string());
}

void emit_run(const std::filesystem::path& dir, const Scenario& s, const RunOutput& r) {
  std::filesystem::create_directories(dir);
  if (!r.records.empty()) write_with(dir / "measurements.csv", [&](auto& os) { write_measurements_csv(os, r.records); });
  if (r.ran1) {
    write_with(dir / "events_alg1.csv", [&](auto& os) { write_events_alg1_csv(os, s, r); });
    write_with(dir / "certificates_alg1.csv", [&](auto& os) { write_certificates_csv(os, r.certs1); });
  }
  if (r.ran2) {
    write_with(dir / "events_alg2.csv", [&](auto& os) { write_events_alg2_csv(os, s, r); });
    write_with(dir / "certificates_alg2.csv", [&](auto& os) { write_certificates_csv(os, r.certs2); });
  }
}

void emit_sweep(const std::filesystem::path& dir, const SweepResult& r, const std::string& suffix) {
  std::filesystem::create_directories(dir);
  for (int alg : {1, 2}) {
    if (!(r.algorithms & alg)) continue;
    const std::string stem = "sweep_" + to_string(r.axis) + "_alg" + std::to_string(alg) + suffix;
    write_with(dir / (stem + ".csv"), [&](auto& os) { write_sweep_csv(os, r, alg); });
    write_with(dir / (stem + "_summary.csv"), [&](auto& os) { write_sweep_summary_csv(os, r, alg); });
  }
}

FigureSummary emit_figures(const std::filesystem::path& dir, const Scenario& base, int reps, unsigned threads) {
  FigureSummary fs;
  std::filesystem::create_directories(dir);
  const BackgroundKind kinds[] = {BackgroundKind::exp_decay, BackgroundKind::sinusoid};
  const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
  auto out = [&](const std::string& name, const std::string& content) {
    write_file(dir / name, content);
    fs.files.push_back(name);
  };

  // coefficient scatter plots (estimates vs ground truth)
  for (int alg : {1, 2}) {
    std::ostringstream csv;
    csv << "background,beta,catalyst,sensor_id,truth,estimate\n";
    PlotSpec plot{alg == 1 ? "Algorithm 1: coefficients <h_i, g_j>" : "Algorithm 2: coefficients <h_i, g_j>",
                  "pair index 3(i-1)+j", "value", false, false, {}};
    PlotSeries truth{"ground truth", {}, {}, "#e377c2", false, "plus"};
    int color = 0;
    for (auto kind : kinds) {
      for (double beta : alg == 1 ? std::vector<double>{0.01, 0.005} : std::vector<double>{0.01}) {
        Scenario s = with_axis(with_background(base, kind), SweepAxis::beta, beta);
        const auto r = run_scenario(s, alg);
        fs.all_certificates_pass = fs.all_certificates_pass && r.all_certificates_pass();
        const auto& cats = s.model.catalysts;
        PlotSeries est{to_string(kind) + " beta=" + fmt_num(beta), {}, {}, colors[color++ % 6], false, "star"};
        std::vector<int> match = alg == 1 ? detail::match_events(cats, r.events1, beta)
                                          : detail::match_events(cats, r.events2, beta);
        for (std::size_t c = 0; c < cats.size(); ++c)
          for (std::size_t g = 0; g < s.sensors.size(); ++g) {
            const double tv = inner(cats[c].h, s.sensors[g].g);
            double ev = 0.0;
            if (match[c] >= 0) ev = alg == 1 ? r.events1[match[c]].sensors[g].f : r.events2[match[c]].sensors[g].f;
            const double xi = static_cast<double>(c * s.sensors.size() + g + 1);
            est.x.push_back(xi);
            est.y.push_back(ev);
            if (color == 1) {
              truth.x.push_back(xi);
              truth.y.push_back(tv);
            }
            csv << to_string(kind) << ',' << fmt_num(beta) << ',' << (c + 1) << ',' << s.sensors[g].id << ','
                << fmt_num(tv) << ',' << fmt_num(ev) << '\n';
          }
        plot.series.push_back(std::move(est));
      }
    }
    plot.series.insert(plot.series.begin(), truth);
    const std::string stem = alg == 1 ? "fig1_alg1_coefficients" : "fig2_alg2_coefficients";
    out(stem + ".csv", csv.str());
    out(stem + ".svg", render_svg(plot));
  }

  // rate error vs N for Algorithm 1: sinusoidal background and the ideal case
  {
    PlotSpec plot{"Algorithm 1: decay-rate relative error vs N", "N", "relative error", true, true, {}};
    const Scenario sim = with_background(base, BackgroundKind::sinusoid);
    const Scenario ideal = ideal_of(base);
    const auto rs = run_sweep(sim, SweepAxis::N, default_sweep_values(SweepAxis::N), reps, threads, kAlg1);
    const auto ri = run_sweep(ideal, SweepAxis::N, default_sweep_values(SweepAxis::N), 1, threads, kAlg1);
    emit_sweep(dir, rs, "_sinusoid");
    emit_sweep(dir, ri, "_ideal");
    int color = 0;
    for (const auto* r : {&rs, &ri}) {
      const auto sum = summarize(*r, 1);
      for (std::size_t c = 0; c < 3; ++c) {
        PlotSeries s{std::string(r == &rs ? "simulation" : "ideal") + " rho" + std::to_string(c + 1), {}, {},
                     colors[color++ % 6], true, r == &rs ? "circle" : "star"};
        for (const auto& row : sum) {
          s.x.push_back(row.value);
          s.y.push_back(row.median[1 + c]);
        }
        plot.series.push_back(std::move(s));
      }
    }
    out("fig3_alg1_rate_vs_N.svg", render_svg(plot));
  }

  // coefficient error vs beta, L, sigma
  const std::pair<SweepAxis, const char*> figs[] = {
      {SweepAxis::beta, "fig4_coeff_err_vs_beta"}, {SweepAxis::L, "fig5_coeff_err_vs_L"},
      {SweepAxis::sigma, "fig6_coeff_err_vs_sigma"}};
  for (const auto& [axis, stem] : figs) {
    PlotSpec plot{"relative error of <h_i, g_2> vs " + to_string(axis), to_string(axis), "relative error", true, true,
                  {}};
    int color = 0;
    for (auto kind : kinds) {
      const auto r = run_sweep(with_background(base, kind), axis, default_sweep_values(axis), reps, threads, kBoth);
      for (const auto& p : r.points)
        if (!p.failed && (p.m1.cert_pass_rate < 1.0 || p.m2.cert_pass_rate < 1.0)) fs.all_certificates_pass = false;
      emit_sweep(dir, r, "_" + to_string(kind));
      for (int alg : {1, 2}) {
        PlotSeries s{"alg" + std::to_string(alg) + " " + to_string(kind), {}, {}, colors[color++ % 6], true,
                     alg == 1 ? "circle" : "star"};
        for (const auto& row : summarize(r, alg)) {
          s.x.push_back(row.value);
          s.y.push_back(row.median[0]);
        }
        plot.series.push_back(std::move(s));
      }
    }
    out(std::string(stem) + ".svg", render_svg(plot));
  }
  return fs;
}

}  // namespace sscope
