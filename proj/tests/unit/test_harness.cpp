#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "uesr/plots.hpp"
#include "uesr/trainer.hpp"

using namespace uesr;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "uesr_unit";
  fs::create_directories(dir);
  return dir / name;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ExperimentConfig small(Scheme scheme, std::int64_t steps) {
  ExperimentConfig c = ExperimentConfig::defaults(scheme);
  c.total_env_steps = steps;
  c.metric_flush_interval = 250;
  c.seed = 5;
  return c;
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::trunc);
  out << text;
}

}  // namespace

TEST_SUITE("harness") {

TEST_CASE("config defaults per scheme") {
  const auto c = ExperimentConfig::defaults(Scheme::UES_R);
  CHECK(c.split == SchemeSplit{5, 5});
  CHECK(c.a2c.optimizer.learning_rate == 5e-4);
  CHECK(c.a2c.entropy_coefficient == 0.05);
  CHECK(c.uem_learning_rate == 1e-3);
  CHECK(c.policy_input_size() == 100);
  CHECK(c.uem_inbox_size() == 10);
  CHECK(ExperimentConfig::defaults(Scheme::None).policy_input_size() == 80);
  CHECK(c.total_env_steps == 500000);
  CHECK(c.a2c.batch_envs == 10);
  CHECK(c.finetune_batches == 10);
}

TEST_CASE("config parsing") {
  const auto c = parse_config(
      "[experiment]\nscheme = m_ues\nlayout = goal_shift\nseed = 9\n"
      "total_env_steps = 1000\n[a2c]\nentropy_coefficient = 0.02\n"
      "[message]\nzero_ues = true\n");
  CHECK(c.scheme == Scheme::UES);
  CHECK(c.layout == LayoutVariant::GoalShift);
  CHECK(c.seed == 9);
  CHECK(c.total_env_steps == 1000);
  CHECK(c.a2c.entropy_coefficient == 0.02);
  CHECK(c.a2c.optimizer.learning_rate == 1e-3);
  CHECK(c.split == SchemeSplit{0, 10});
  CHECK(c.zero_ues);

  CHECK_THROWS_AS(parse_config("[experiment]\nschem = m_r\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config("[nonsense]\nkey = 1\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config("[experiment]\nseed = many\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config("[a2c]\nlearning_rate = -1\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config("[experiment]\nscheme = ia2c\n[message]\nreward_len = 3\n"),
                  std::invalid_argument);
  CHECK_THROWS_AS(parse_config("[experiment\n"), std::invalid_argument);
}

TEST_CASE("config round trip through text") {
  auto c = ExperimentConfig::defaults(Scheme::R);
  c.seed = 123;
  c.a2c.optimizer.learning_rate = 3.3e-4;
  c.metrics_path = "m.csv";
  c.split = {5, 5};
  const auto back = parse_config(to_ini(c));
  CHECK(to_ini(back) == to_ini(c));
  CHECK(back.a2c.optimizer.learning_rate == c.a2c.optimizer.learning_rate);
  CHECK(back.fingerprint() == c.fingerprint());
}

TEST_CASE("metrics csv round trip and errors") {
  MetricsRecord r{"m_r", 3, 100, 4, 0.25, 0.5, -0.1, 0.2, 0.0, 0.0, 1.5};
  const auto path = scratch("metrics.csv");
  {
    MetricsWriter w(path, false);
    w.write(r);
    r.env_step = 200;
    w.write(r);
  }
  const auto rows = read_metrics_csv(path);
  REQUIRE(rows.size() == 2);
  CHECK(rows[1].env_step == 200);
  CHECK(rows[0].deliveries_per_episode == 0.25);
  CHECK(rows[0].wall_clock_s == 0.0);
  CHECK(slurp(path).rfind(std::string(kMetricsHeader) + "\n", 0) == 0);

  write_text(path, "");
  CHECK_THROWS_AS(read_metrics_csv(path), std::runtime_error);
  write_text(path, std::string(kMetricsHeader) + "\n");
  CHECK_THROWS_AS(read_metrics_csv(path), std::runtime_error);
  write_text(path, "a,b\n1,2\n");
  CHECK_THROWS_AS(read_metrics_csv(path), std::runtime_error);
  write_text(path, std::string(kMetricsHeader) + "\nm_r,1,x,0,0,0,0,0,0,0\n");
  CHECK_THROWS_AS(read_metrics_csv(path), std::runtime_error);
}

TEST_CASE("curve aggregation against a hand computation") {
  auto run = [](std::vector<double> d) {
    std::vector<MetricsRecord> rows;
    for (std::size_t i = 0; i < d.size(); ++i) {
      MetricsRecord r;
      r.scheme = "m_ues_r";
      r.env_step = static_cast<std::int64_t>(100 * (i + 1));
      r.deliveries_per_episode = d[i];
      rows.push_back(r);
    }
    return rows;
  };
  const std::vector<std::vector<MetricsRecord>> runs = {run({1, 2, 3}), run({3, 2, 5}), run({2, 2, 4})};
  const auto bands = aggregate_curves(runs);
  REQUIRE(bands.size() == 1);
  CHECK(bands[0].runs == 3);
  CHECK(bands[0].mean == std::vector<double>{2.0, 2.0, 4.0});
  CHECK(bands[0].std[0] == doctest::Approx(1.0));
  CHECK(bands[0].std[1] == 0.0);
  CHECK(bands[0].std[2] == doctest::Approx(1.0));

  const std::vector<std::vector<MetricsRecord>> one = {run({1, 2, 3})};
  const auto single = aggregate_curves(one);
  CHECK(single[0].std.empty());
  const auto svg = render_svg(single, "t");
  CHECK(svg.find("<polyline") != std::string::npos);
  CHECK(svg.find("<polygon") == std::string::npos);
  CHECK(render_svg(bands, "t").find("<polygon") != std::string::npos);

  auto shifted = run({1, 2, 3});
  shifted[1].env_step = 250;
  const std::vector<std::vector<MetricsRecord>> bad = {run({1, 2, 3}), shifted};
  CHECK_THROWS_AS(aggregate_curves(bad), std::runtime_error);
}

TEST_CASE("plot emission writes nothing on a bad csv") {
  const auto good = scratch("good.csv");
  {
    MetricsWriter w(good, false);
    w.write(MetricsRecord{"ia2c", 0, 10, 1, 0.5, 0.5, 0, 0, 0, 0, 0});
  }
  const auto empty = scratch("empty.csv");
  write_text(empty, "");
  const auto out = scratch("curves.svg");
  fs::remove(out);
  const std::vector<fs::path> both{good, empty};
  CHECK_THROWS(emit_plots(both, out));
  CHECK_FALSE(fs::exists(out));
  const std::vector<fs::path> one{good};
  emit_plots(one, out);
  CHECK(fs::exists(out));
  CHECK_THROWS(emit_plots(std::vector<fs::path>{}, out));
}

TEST_CASE("checkpoint round trip is bit exact") {
  Team team(ExperimentConfig::defaults(Scheme::UES_R));
  const auto config = ExperimentConfig::defaults(Scheme::UES_R);
  auto ckpt = make_checkpoint(team, config, LayoutVariant::Training, 42);
  const auto path = scratch("team.ckpt");
  save_checkpoint(ckpt, path);
  const auto back = load_checkpoint(path);
  CHECK(back == ckpt);
  save_checkpoint(back, scratch("team2.ckpt"));
  CHECK(slurp(path) == slurp(scratch("team2.ckpt")));
  const Team restored = Team::from_checkpoint(back, config);
  CHECK(restored.agents[1].actor.params == team.agents[1].actor.params);
  CHECK(restored.agents[0].uem->projection == team.agents[0].uem->projection);

  CHECK_THROWS_AS(Team::from_checkpoint(back, ExperimentConfig::defaults(Scheme::R)),
                  std::runtime_error);
  write_text(scratch("junk.ckpt"), "not a checkpoint");
  CHECK_THROWS_AS(load_checkpoint(scratch("junk.ckpt")), std::runtime_error);
  const std::string bytes = slurp(path);
  write_text(scratch("cut.ckpt"), bytes.substr(0, bytes.size() / 2));
  CHECK_THROWS_AS(load_checkpoint(scratch("cut.ckpt")), std::runtime_error);
  CHECK_THROWS_AS(load_checkpoint(scratch("missing.ckpt")), std::runtime_error);
}

TEST_CASE("ia2c run produces monotone rows and silent inboxes") {
  auto c = small(Scheme::None, 1000);
  const auto r = train(c);
  CHECK(r.env_steps == 1000);
  CHECK(r.updates == 1000 / 50);
  REQUIRE(r.metrics.size() == 4);
  for (std::size_t i = 1; i < r.metrics.size(); ++i) {
    CHECK(r.metrics[i].env_step > r.metrics[i - 1].env_step);
  }
  for (const auto& m : r.metrics) CHECK(m.deliveries_per_episode >= 0.0);
  bool any_input = false;
  trace_rollout(c, 3, [&](const StepTrace& s) {
    any_input = true;
    CHECK(s.policy_input.size() == 80);
    CHECK(s.published.empty());
  });
  CHECK(any_input);
}

TEST_CASE("same config and seed give identical csv files") {
  auto c = small(Scheme::UES_R, 1500);
  c.metrics_path = scratch("det_a.csv").string();
  train(c);
  c.metrics_path = scratch("det_b.csv").string();
  train(c);
  CHECK(slurp(scratch("det_a.csv")) == slurp(scratch("det_b.csv")));
  c.seed = 6;
  c.metrics_path = scratch("det_c.csv").string();
  train(c);
  CHECK(slurp(scratch("det_a.csv")) != slurp(scratch("det_c.csv")));
}

TEST_CASE("zeroed UES part reduces m_ues_r to a padded m_r run") {
  auto a = small(Scheme::UES_R, 2000);
  a.zero_ues = true;
  auto b = small(Scheme::R, 2000);
  b.split = {5, 5};
  b.a2c.entropy_coefficient = a.a2c.entropy_coefficient;
  b.a2c.optimizer = a.a2c.optimizer;
  const auto ra = train(a);
  const auto rb = train(b);
  REQUIRE(ra.metrics.size() == rb.metrics.size());
  for (std::size_t i = 0; i < ra.metrics.size(); ++i) {
    CHECK(ra.metrics[i].deliveries_per_episode == rb.metrics[i].deliveries_per_episode);
    CHECK(ra.metrics[i].actor_loss == rb.metrics[i].actor_loss);
    CHECK(ra.metrics[i].critic_loss == rb.metrics[i].critic_loss);
  }
  // The UEM still trains in the zeroed run.
  CHECK(ra.metrics.back().pred_loss > 0.0);
}

TEST_CASE("evaluation of a random team") {
  const auto config = ExperimentConfig::defaults(Scheme::UES_R);
  const auto ckpt = make_checkpoint(Team(config), config, LayoutVariant::Training, 0);
  const auto copy = ckpt;
  const auto e1 = evaluate(ckpt, LayoutVariant::Training, 100, 3);
  const auto e2 = evaluate(ckpt, LayoutVariant::Training, 100, 3);
  CHECK(e1.deliveries.size() == 100);
  CHECK(e1.mean < 0.1);
  CHECK(e1.mean == e2.mean);
  CHECK(e1.deliveries == e2.deliveries);
  CHECK(ckpt == copy);
  CHECK_THROWS_AS(evaluate(ckpt, LayoutVariant::Training, 0, 3), std::invalid_argument);
}

TEST_CASE("transfer protocol counts") {
  auto c = small(Scheme::UES_R, 500);
  const auto trained = train(c);
  const auto t = transfer(trained.checkpoint, LayoutVariant::GoalShift, 10, 1);
  CHECK(t.updates == 10);
  CHECK(t.episodes == 100);
  CHECK(t.env_steps == 100 * 50);
  CHECK(t.metrics.size() == 10);
  CHECK(t.metrics.back().episodes_completed == 100);
  CHECK(t.metrics.front().env_step == 500);
  const auto zero = transfer(trained.checkpoint, LayoutVariant::ShelfShift, 0, 1);
  CHECK(zero.updates == 0);
  CHECK(zero.episodes == 100);
  CHECK(zero.checkpoint == trained.checkpoint);

  auto shifted = trained.checkpoint;
  shifted.metadata["layout"] = "goal_shift";
  CHECK_THROWS_AS(transfer(shifted, LayoutVariant::ShelfShift, 1, 1), std::runtime_error);
  CHECK_THROWS_AS(transfer(trained.checkpoint, LayoutVariant::GoalShift, -1, 1),
                  std::invalid_argument);
}

TEST_CASE("divergence leaves a snapshot") {
  auto c = small(Scheme::None, 500);
  c.a2c.optimizer.learning_rate = 1e300;
  c.checkpoint_path = scratch("div.ckpt").string();
  fs::remove(c.checkpoint_path + ".diverged");
  CHECK_THROWS_AS(train(c), DivergenceError);
  CHECK(fs::exists(c.checkpoint_path + ".diverged"));
}

}  // TEST_SUITE
