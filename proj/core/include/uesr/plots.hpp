#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "uesr/metrics.hpp"

namespace uesr {

// Learning curve of one scheme: mean of deliveries_per_episode across runs
// at each logged env_step, with the sample standard deviation (n - 1) as the
// band. A single run has no band (std is empty).
struct CurveBand {
  std::string label;
  std::vector<double> env_steps;
  std::vector<double> mean;
  std::vector<double> std;
  std::size_t runs = 0;
};

// Groups runs by scheme (first-seen order). Throws std::runtime_error when
// runs of one scheme were logged at different env steps.
std::vector<CurveBand> aggregate_curves(
    std::span<const std::vector<MetricsRecord>> runs);

std::string render_svg(std::span<const CurveBand> curves, const std::string& title);

// Reads every CSV and writes one SVG. Nothing is written if any CSV fails to
// parse.
void emit_plots(std::span<const std::filesystem::path> csvs,
                const std::filesystem::path& out_svg);

}  // namespace uesr
