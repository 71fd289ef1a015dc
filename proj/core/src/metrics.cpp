#include "uesr/metrics.hpp"

#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace uesr {

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

template <typename T>
T parse_cell(const std::string& s, std::size_t line_no) {
  std::istringstream is(s);
  T v{};
  is >> v;
  if (!is || !is.eof()) {
    throw std::runtime_error("malformed metrics value '" + s + "' on line " +
                             std::to_string(line_no));
  }
  return v;
}

}  // namespace

MetricsWriter::MetricsWriter(const std::filesystem::path& path, bool with_wall_clock)
    : out_(path, std::ios::trunc), with_wall_clock_(with_wall_clock) {
  if (!out_) throw std::runtime_error("cannot create metrics file " + path.string());
  out_ << kMetricsHeader << (with_wall_clock ? ",wall_clock_s" : "") << '\n';
  out_.flush();
}

void MetricsWriter::write(const MetricsRecord& record) {
  out_ << format_row(record, with_wall_clock_) << '\n';
  out_.flush();
}

std::string format_row(const MetricsRecord& r, bool with_wall_clock) {
  std::string row = r.scheme + ',' + std::to_string(r.seed) + ',' +
                    std::to_string(r.env_step) + ',' +
                    std::to_string(r.episodes_completed) + ',' +
                    fmt_double(r.deliveries_per_episode) + ',' +
                    fmt_double(r.recent_deliveries_per_episode) + ',' +
                    fmt_double(r.actor_loss) + ',' + fmt_double(r.critic_loss) + ',' +
                    fmt_double(r.pred_loss) + ',' + fmt_double(r.enc_loss);
  if (with_wall_clock) row += ',' + fmt_double(r.wall_clock_s);
  return row;
}

std::vector<MetricsRecord> read_metrics_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read metrics file " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path.string() + " is empty");
  bool wall = false;
  if (line == std::string(kMetricsHeader) + ",wall_clock_s") {
    wall = true;
  } else if (line != kMetricsHeader) {
    throw std::runtime_error(path.string() + " has an unexpected header");
  }
  const std::size_t columns = wall ? 11 : 10;
  std::vector<MetricsRecord> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != columns) {
      throw std::runtime_error("wrong column count on line " + std::to_string(line_no));
    }
    MetricsRecord r;
    r.scheme = cells[0];
    r.seed = parse_cell<std::uint64_t>(cells[1], line_no);
    r.env_step = parse_cell<std::int64_t>(cells[2], line_no);
    r.episodes_completed = parse_cell<std::int64_t>(cells[3], line_no);
    r.deliveries_per_episode = parse_cell<double>(cells[4], line_no);
    r.recent_deliveries_per_episode = parse_cell<double>(cells[5], line_no);
    r.actor_loss = parse_cell<double>(cells[6], line_no);
    r.critic_loss = parse_cell<double>(cells[7], line_no);
    r.pred_loss = parse_cell<double>(cells[8], line_no);
    r.enc_loss = parse_cell<double>(cells[9], line_no);
    if (wall) r.wall_clock_s = parse_cell<double>(cells[10], line_no);
    rows.push_back(std::move(r));
  }
  if (rows.empty()) throw std::runtime_error(path.string() + " has no metric rows");
  return rows;
}

}  // namespace uesr
