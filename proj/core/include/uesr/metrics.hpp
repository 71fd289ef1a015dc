#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

namespace uesr {

struct MetricsRecord {
  std::string scheme;
  std::uint64_t seed = 0;
  std::int64_t env_step = 0;
  std::int64_t episodes_completed = 0;
  // Cumulative: total deliveries / total completed episodes of the phase.
  double deliveries_per_episode = 0.0;
  // Same ratio over the episodes completed since the previous row.
  double recent_deliveries_per_episode = 0.0;
  double actor_loss = 0.0;
  double critic_loss = 0.0;
  double pred_loss = 0.0;
  double enc_loss = 0.0;
  double wall_clock_s = 0.0;

  bool operator==(const MetricsRecord&) const = default;
};

// Column order of the metrics CSV. wall_clock_s is appended only when
// enabled, so default runs produce machine-independent files.
inline constexpr std::string_view kMetricsHeader =
    "scheme,seed,env_step,episodes_completed,deliveries_per_episode,"
    "recent_deliveries_per_episode,actor_loss,critic_loss,pred_loss,enc_loss";

// Append-only CSV; every row is flushed as soon as it is written.
class MetricsWriter {
 public:
  MetricsWriter() = default;
  // Throws std::runtime_error if the file cannot be created.
  MetricsWriter(const std::filesystem::path& path, bool with_wall_clock);

  void write(const MetricsRecord& record);
  bool is_open() const { return out_.is_open(); }

 private:
  std::ofstream out_;
  bool with_wall_clock_ = false;
};

std::string format_row(const MetricsRecord& record, bool with_wall_clock);

// Throws std::runtime_error when the file is missing, has a wrong header,
// a malformed row or no rows at all.
std::vector<MetricsRecord> read_metrics_csv(const std::filesystem::path& path);

}  // namespace uesr
