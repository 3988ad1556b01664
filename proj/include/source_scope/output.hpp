#pragma once

// SVG charts and the files written by the command-line tool.

#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "pipeline.hpp"

namespace sscope {

struct PlotSeries {
  std::string label;
  std::vector<double> x, y;
  std::string color = "#1f77b4";
  bool line = true;
  std::string marker = "circle";  // circle | plus | star
};

struct PlotSpec {
  std::string title, xlabel, ylabel;
  bool logx = false, logy = false;
  std::vector<PlotSeries> series;
};

/// Self-contained SVG line/scatter chart. Non-finite points (and nonpositive ones on
/// log axes) are skipped.
std::string render_svg(const PlotSpec& p);

void write_file(const std::filesystem::path& path, const std::string& content);

template <class Fn>
void write_with(const std::filesystem::path& path, Fn&& fn) {
  std::ostringstream os;
  fn(os);
  write_file(path, os.str());
}

/// measurements.csv (when records were kept), events_alg{1,2}.csv, certificates_alg{1,2}.csv.
void emit_run(const std::filesystem::path& dir, const Scenario& s, const RunOutput& r);

/// sweep_<axis>_alg<k><suffix>.csv and its _summary table for each algorithm run.
void emit_sweep(const std::filesystem::path& dir, const SweepResult& r, const std::string& suffix = "");

struct FigureSummary {
  bool all_certificates_pass = true;
  std::vector<std::string> files;
};

/// Runs the default experiment set for both background kinds and writes the six
/// figure analogs plus their CSV tables.
FigureSummary emit_figures(const std::filesystem::path& dir, const Scenario& base, int reps, unsigned threads);

}  // namespace sscope
