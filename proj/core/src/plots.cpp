#include "uesr/plots.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace uesr {

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                    "#ff7f0e", "#8c564b"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

}  // namespace

std::vector<CurveBand> aggregate_curves(
    std::span<const std::vector<MetricsRecord>> runs) {
  std::vector<std::string> order;
  std::vector<std::vector<const std::vector<MetricsRecord>*>> groups;
  for (const auto& run : runs) {
    if (run.empty()) throw std::runtime_error("run without metric rows");
    const std::string& label = run.front().scheme;
    auto it = std::find(order.begin(), order.end(), label);
    if (it == order.end()) {
      order.push_back(label);
      groups.emplace_back();
      it = order.end() - 1;
    }
    groups[static_cast<std::size_t>(it - order.begin())].push_back(&run);
  }

  std::vector<CurveBand> bands;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const auto& members = groups[g];
    const auto& first = *members.front();
    CurveBand band;
    band.label = order[g];
    band.runs = members.size();
    for (const auto* run : members) {
      if (run->size() != first.size()) {
        throw std::runtime_error("runs of " + band.label + " have different lengths");
      }
      for (std::size_t i = 0; i < first.size(); ++i) {
        if ((*run)[i].env_step != first[i].env_step) {
          throw std::runtime_error("runs of " + band.label + " disagree on env_step");
        }
      }
    }
    const double n = static_cast<double>(members.size());
    for (std::size_t i = 0; i < first.size(); ++i) {
      double sum = 0.0;
      for (const auto* run : members) sum += (*run)[i].deliveries_per_episode;
      const double mean = sum / n;
      band.env_steps.push_back(static_cast<double>(first[i].env_step));
      band.mean.push_back(mean);
      if (members.size() > 1) {
        double ss = 0.0;
        for (const auto* run : members) {
          const double d = (*run)[i].deliveries_per_episode - mean;
          ss += d * d;
        }
        band.std.push_back(std::sqrt(ss / (n - 1.0)));
      }
    }
    bands.push_back(std::move(band));
  }
  return bands;
}

std::string render_svg(std::span<const CurveBand> curves, const std::string& title) {
  constexpr double kW = 720, kH = 440, kL = 70, kR = 160, kT = 40, kB = 50;
  double x_max = 1.0, y_max = 0.0;
  for (const auto& c : curves) {
    for (std::size_t i = 0; i < c.mean.size(); ++i) {
      x_max = std::max(x_max, c.env_steps[i]);
      y_max = std::max(y_max, c.mean[i] + (c.std.empty() ? 0.0 : c.std[i]));
    }
  }
  y_max = y_max > 0.0 ? y_max * 1.1 : 1.0;
  const double pw = kW - kL - kR, ph = kH - kT - kB;
  auto px = [&](double x) { return kL + pw * x / x_max; };
  auto py = [&](double y) { return kT + ph * (1.0 - std::max(0.0, y) / y_max); };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
     << "<text x=\"" << kL << "\" y=\"24\" font-size=\"15\">" << title << "</text>\n"
     << "<rect x=\"" << kL << "\" y=\"" << kT << "\" width=\"" << pw << "\" height=\"" << ph
     << "\" fill=\"none\" stroke=\"#444\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double xv = x_max * k / 4.0, yv = y_max * k / 4.0;
    os << "<text x=\"" << num(px(xv)) << "\" y=\"" << num(kH - kB + 18)
       << "\" text-anchor=\"middle\">" << num(xv) << "</text>\n"
       << "<text x=\"" << num(kL - 6) << "\" y=\"" << num(py(yv) + 4)
       << "\" text-anchor=\"end\">" << num(yv) << "</text>\n";
  }
  os << "<text x=\"" << num(kL + pw / 2) << "\" y=\"" << num(kH - 10)
     << "\" text-anchor=\"middle\">environment steps</text>\n"
     << "<text transform=\"translate(16," << num(kT + ph / 2)
     << ") rotate(-90)\" text-anchor=\"middle\">deliveries per episode</text>\n";

  for (std::size_t c = 0; c < curves.size(); ++c) {
    const auto& band = curves[c];
    const char* colour = kPalette[c % std::size(kPalette)];
    if (!band.std.empty()) {
      os << "<polygon fill=\"" << colour << "\" fill-opacity=\"0.2\" stroke=\"none\" points=\"";
      for (std::size_t i = 0; i < band.mean.size(); ++i) {
        os << num(px(band.env_steps[i])) << ',' << num(py(band.mean[i] + band.std[i])) << ' ';
      }
      for (std::size_t i = band.mean.size(); i-- > 0;) {
        os << num(px(band.env_steps[i])) << ',' << num(py(band.mean[i] - band.std[i])) << ' ';
      }
      os << "\"/>\n";
    }
    os << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < band.mean.size(); ++i) {
      os << num(px(band.env_steps[i])) << ',' << num(py(band.mean[i])) << ' ';
    }
    os << "\"/>\n";
    const double ly = kT + 16 + 18.0 * static_cast<double>(c);
    os << "<line x1=\"" << num(kW - kR + 12) << "\" y1=\"" << num(ly) << "\" x2=\""
       << num(kW - kR + 36) << "\" y2=\"" << num(ly) << "\" stroke=\"" << colour
       << "\" stroke-width=\"2\"/>\n"
       << "<text x=\"" << num(kW - kR + 42) << "\" y=\"" << num(ly + 4) << "\">" << band.label
       << " (n=" << band.runs << ")</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

void emit_plots(std::span<const std::filesystem::path> csvs,
                const std::filesystem::path& out_svg) {
  if (csvs.empty()) throw std::runtime_error("no metrics files given");
  std::vector<std::vector<MetricsRecord>> runs;
  for (const auto& p : csvs) runs.push_back(read_metrics_csv(p));
  const auto bands = aggregate_curves(runs);
  const std::string svg = render_svg(bands, "Learning curves");
  std::ofstream out(out_svg, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + out_svg.string());
  out << svg;
}

}  // namespace uesr
