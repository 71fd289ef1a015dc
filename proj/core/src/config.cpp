#include "uesr/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <sstream>
#include <stdexcept>

namespace uesr {

namespace pt = boost::property_tree;

ExperimentConfig ExperimentConfig::defaults(Scheme scheme) {
  ExperimentConfig c;
  c.scheme = scheme;
  c.a2c = A2CConfig::defaults(scheme);
  c.split = default_split(scheme);
  return c;
}

void ExperimentConfig::validate() const {
  a2c.validate();
  if (a2c.scheme != scheme) throw std::invalid_argument("a2c scheme differs from experiment scheme");
  if (n_agents <= 0) throw std::invalid_argument("n_agents must be positive");
  if (total_env_steps < 0) throw std::invalid_argument("total_env_steps must be >= 0");
  if (!(uem_learning_rate > 0.0)) throw std::invalid_argument("uem learning_rate must be > 0");
  if (metric_flush_interval <= 0) throw std::invalid_argument("metric_flush_interval must be > 0");
  if (checkpoint_interval < 0) throw std::invalid_argument("checkpoint_interval must be >= 0");
  if (finetune_batches < 0) throw std::invalid_argument("finetune_batches must be >= 0");
  if (eval_episodes <= 0) throw std::invalid_argument("eval_episodes must be positive");
  if (split.reward_len < 0 || split.ues_len < 0) throw std::invalid_argument("negative message length");
  if (scheme == Scheme::None && split.total() != 0) {
    throw std::invalid_argument("ia2c sends no messages");
  }
  if (scheme != Scheme::None && split.total() == 0) {
    throw std::invalid_argument("messaging scheme needs a message length");
  }
  if (uses_ues(scheme) && split.ues_len == 0) {
    throw std::invalid_argument("UES scheme needs ues_len > 0");
  }
  if (!uses_reward_bits(scheme) && scheme != Scheme::None && split.reward_len != 0) {
    throw std::invalid_argument("m_ues carries no reward bits");
  }
}

std::string ExperimentConfig::fingerprint() const {
  std::ostringstream os;
  os << "obs=" << kObservationSize << ";agents=" << n_agents
     << ";scheme=" << scheme_name(scheme) << ";split=" << split.reward_len << ','
     << split.ues_len << ";hidden=" << kHiddenSize;
  return os.str();
}

WarehouseConfig ExperimentConfig::warehouse() const {
  WarehouseConfig w;
  w.n_agents = n_agents;
  return w;
}

OptimizerConfig ExperimentConfig::uem_optimizer() const {
  OptimizerConfig o = a2c.optimizer;
  o.learning_rate = uem_learning_rate;
  return o;
}

std::size_t ExperimentConfig::policy_input_size() const {
  return kObservationSize + static_cast<std::size_t>(n_agents * split.total());
}

std::size_t ExperimentConfig::uem_inbox_size() const {
  return static_cast<std::size_t>((n_agents - 1) * split.total());
}

namespace {

using Setter = std::function<void(ExperimentConfig&, const std::string&)>;

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  std::istringstream is(text);
  T v{};
  is >> v;
  if (!is || !(is >> std::ws).eof()) {
    throw std::invalid_argument("bad value for " + key + ": '" + text + "'");
  }
  return v;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw std::invalid_argument("bad boolean for " + key + ": '" + text + "'");
}

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"experiment.layout",
       [](auto& c, const auto& v) { c.layout = parse_variant(v); }},
      {"experiment.seed",
       [](auto& c, const auto& v) { c.seed = parse_number<std::uint64_t>("seed", v); }},
      {"experiment.total_env_steps",
       [](auto& c, const auto& v) {
         c.total_env_steps = parse_number<std::int64_t>("total_env_steps", v);
       }},
      {"experiment.n_agents",
       [](auto& c, const auto& v) { c.n_agents = parse_number<int>("n_agents", v); }},
      {"experiment.batch_envs",
       [](auto& c, const auto& v) { c.a2c.batch_envs = parse_number<int>("batch_envs", v); }},
      {"experiment.n_steps",
       [](auto& c, const auto& v) { c.a2c.n_steps = parse_number<int>("n_steps", v); }},
      {"a2c.learning_rate",
       [](auto& c, const auto& v) {
         c.a2c.optimizer.learning_rate = parse_number<double>("learning_rate", v);
       }},
      {"a2c.entropy_coefficient",
       [](auto& c, const auto& v) {
         c.a2c.entropy_coefficient = parse_number<double>("entropy_coefficient", v);
       }},
      {"a2c.gamma",
       [](auto& c, const auto& v) { c.a2c.gamma = parse_number<double>("gamma", v); }},
      {"optimizer.adam_beta1",
       [](auto& c, const auto& v) {
         c.a2c.optimizer.adam_beta1 = parse_number<double>("adam_beta1", v);
       }},
      {"optimizer.adam_beta2",
       [](auto& c, const auto& v) {
         c.a2c.optimizer.adam_beta2 = parse_number<double>("adam_beta2", v);
       }},
      {"optimizer.adam_epsilon",
       [](auto& c, const auto& v) {
         c.a2c.optimizer.adam_epsilon = parse_number<double>("adam_epsilon", v);
       }},
      {"optimizer.soft_update_tau",
       [](auto& c, const auto& v) {
         c.a2c.optimizer.soft_update_tau = parse_number<double>("soft_update_tau", v);
       }},
      {"uem.learning_rate",
       [](auto& c, const auto& v) {
         c.uem_learning_rate = parse_number<double>("uem.learning_rate", v);
       }},
      {"message.reward_len",
       [](auto& c, const auto& v) { c.split.reward_len = parse_number<int>("reward_len", v); }},
      {"message.ues_len",
       [](auto& c, const auto& v) { c.split.ues_len = parse_number<int>("ues_len", v); }},
      {"message.zero_ues",
       [](auto& c, const auto& v) { c.zero_ues = parse_bool("zero_ues", v); }},
      {"output.metrics_path", [](auto& c, const auto& v) { c.metrics_path = v; }},
      {"output.checkpoint_path", [](auto& c, const auto& v) { c.checkpoint_path = v; }},
      {"output.metric_flush_interval",
       [](auto& c, const auto& v) {
         c.metric_flush_interval = parse_number<std::int64_t>("metric_flush_interval", v);
       }},
      {"output.checkpoint_interval",
       [](auto& c, const auto& v) {
         c.checkpoint_interval = parse_number<std::int64_t>("checkpoint_interval", v);
       }},
      {"output.record_wall_clock",
       [](auto& c, const auto& v) { c.record_wall_clock = parse_bool("record_wall_clock", v); }},
      {"transfer.finetune_batches",
       [](auto& c, const auto& v) {
         c.finetune_batches = parse_number<int>("finetune_batches", v);
       }},
      {"transfer.eval_episodes",
       [](auto& c, const auto& v) { c.eval_episodes = parse_number<int>("eval_episodes", v); }},
  };
  return table;
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  pt::ptree tree;
  std::istringstream is(text);
  try {
    pt::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    throw std::invalid_argument(std::string("config syntax error: ") + e.what());
  }

  // The scheme selects the defaults, so it is read first.
  Scheme scheme = Scheme::None;
  if (auto s = tree.get_optional<std::string>("experiment.scheme")) {
    scheme = parse_scheme(*s);
  }
  ExperimentConfig config = ExperimentConfig::defaults(scheme);

  for (const auto& [section, entries] : tree) {
    if (entries.empty() && !entries.data().empty()) {
      throw std::invalid_argument("key outside a section: " + section);
    }
    for (const auto& [key, value] : entries) {
      const std::string full = section + "." + key;
      if (full == "experiment.scheme") continue;
      const auto it = setters().find(full);
      if (it == setters().end()) throw std::invalid_argument("unknown config key: " + full);
      it->second(config, value.data());
    }
  }
  config.validate();
  return config;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot read config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string to_ini(const ExperimentConfig& c) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "[experiment]\n"
     << "scheme = " << scheme_name(c.scheme) << '\n'
     << "layout = " << variant_name(c.layout) << '\n'
     << "seed = " << c.seed << '\n'
     << "total_env_steps = " << c.total_env_steps << '\n'
     << "n_agents = " << c.n_agents << '\n'
     << "batch_envs = " << c.a2c.batch_envs << '\n'
     << "n_steps = " << c.a2c.n_steps << "\n\n"
     << "[a2c]\n"
     << "learning_rate = " << c.a2c.optimizer.learning_rate << '\n'
     << "entropy_coefficient = " << c.a2c.entropy_coefficient << '\n'
     << "gamma = " << c.a2c.gamma << "\n\n"
     << "[optimizer]\n"
     << "adam_beta1 = " << c.a2c.optimizer.adam_beta1 << '\n'
     << "adam_beta2 = " << c.a2c.optimizer.adam_beta2 << '\n'
     << "adam_epsilon = " << c.a2c.optimizer.adam_epsilon << '\n'
     << "soft_update_tau = " << c.a2c.optimizer.soft_update_tau << "\n\n"
     << "[uem]\n"
     << "learning_rate = " << c.uem_learning_rate << "\n\n"
     << "[message]\n"
     << "reward_len = " << c.split.reward_len << '\n'
     << "ues_len = " << c.split.ues_len << '\n'
     << "zero_ues = " << (c.zero_ues ? "true" : "false") << "\n\n"
     << "[output]\n";
  if (!c.metrics_path.empty()) os << "metrics_path = " << c.metrics_path << '\n';
  if (!c.checkpoint_path.empty()) os << "checkpoint_path = " << c.checkpoint_path << '\n';
  os << "metric_flush_interval = " << c.metric_flush_interval << '\n'
     << "checkpoint_interval = " << c.checkpoint_interval << '\n'
     << "record_wall_clock = " << (c.record_wall_clock ? "true" : "false") << "\n\n"
     << "[transfer]\n"
     << "finetune_batches = " << c.finetune_batches << '\n'
     << "eval_episodes = " << c.eval_episodes << '\n';
  return os.str();
}

}  // namespace uesr
