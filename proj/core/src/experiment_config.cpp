#include "w3ar/experiment_config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "w3ar/dump_io.hpp"
#include "w3ar/error.hpp"

namespace w3ar {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_unsigned(const std::string& key, const std::string& value) {
  T out{};
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw Error(ErrorCode::SchemaViolation, key + ": expected a nonnegative integer, got \"" +
                                                value + "\"");
  }
  return out;
}

double parse_real(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(value, &used);
  } catch (const std::logic_error&) {
    used = 0;
  }
  if (used != value.size() || value.empty() || !std::isfinite(out)) {
    throw Error(ErrorCode::SchemaViolation, key + ": expected a real number, got \"" + value +
                                                "\"");
  }
  return out;
}

using Setter = std::function<void(ExperimentConfig&, const std::string& key, const std::string&)>;

template <typename T>
Setter set_size(T ExperimentConfig::*group, std::size_t T::*field) {
  return [=](ExperimentConfig& c, const std::string& k, const std::string& v) {
    c.*group.*field = parse_unsigned<std::size_t>(k, v);
  };
}

template <typename T>
Setter set_u64(T ExperimentConfig::*group, std::uint64_t T::*field) {
  return [=](ExperimentConfig& c, const std::string& k, const std::string& v) {
    c.*group.*field = parse_unsigned<std::uint64_t>(k, v);
  };
}

template <typename T>
Setter set_real(T ExperimentConfig::*group, double T::*field) {
  return [=](ExperimentConfig& c, const std::string& k, const std::string& v) {
    c.*group.*field = parse_real(k, v);
  };
}

const std::map<std::string, Setter>& setters() {
  using C = ExperimentConfig;
  static const std::map<std::string, Setter> table = {
      {"world.n_text_symbols", set_size(&C::world, &ToyWorldConfig::n_text_symbols)},
      {"world.n_acoustic_symbols", set_size(&C::world, &ToyWorldConfig::n_acoustic_symbols)},
      {"world.tokens_per_word", set_size(&C::world, &ToyWorldConfig::tokens_per_word)},
      {"world.frames_per_acoustic_token",
       set_size(&C::world, &ToyWorldConfig::frames_per_acoustic_token)},
      {"world.embed_dim", set_size(&C::world, &ToyWorldConfig::embed_dim)},
      {"world.sharpness", set_real(&C::world, &ToyWorldConfig::sharpness)},
      {"world.seed", set_u64(&C::world, &ToyWorldConfig::seed)},
      {"world.words_per_utterance", set_size(&C::world, &ToyWorldConfig::words_per_utterance)},
      {"world.n_train_texts", set_size(&C::world, &ToyWorldConfig::n_train_texts)},
      {"world.n_eval_texts", set_size(&C::world, &ToyWorldConfig::n_eval_texts)},
      {"reward.window_w", set_size(&C::reward, &RewardConfig::window_w)},
      {"reward.beta", set_real(&C::reward, &RewardConfig::beta)},
      {"reward.lambda_purity", set_real(&C::reward, &RewardConfig::lambda_purity)},
      {"reward.lambda_mono", set_real(&C::reward, &RewardConfig::lambda_mono)},
      {"optim.group_size", set_size(&C::optimizer, &OptimizerConfig::group_size)},
      {"optim.gamma_kl", set_real(&C::optimizer, &OptimizerConfig::gamma_kl)},
      {"optim.gamma_sup", set_real(&C::optimizer, &OptimizerConfig::gamma_sup)},
      {"optim.learning_rate", set_real(&C::optimizer, &OptimizerConfig::learning_rate)},
      {"optim.temperature", set_real(&C::optimizer, &OptimizerConfig::sampling_temperature)},
      {"optim.top_p", set_real(&C::optimizer, &OptimizerConfig::top_p)},
      {"optim.iterations", set_size(&C::optimizer, &OptimizerConfig::iterations)},
      {"optim.seed", set_u64(&C::optimizer, &OptimizerConfig::seed)},
      {"optim.kl_direction",
       [](C& c, const std::string& k, const std::string& v) {
         if (v == "ref_to_policy") {
           c.optimizer.kl_direction = KlDirection::RefToPolicy;
         } else if (v == "policy_to_ref") {
           c.optimizer.kl_direction = KlDirection::PolicyToRef;
         } else {
           throw Error(ErrorCode::SchemaViolation,
                       k + ": expected ref_to_policy or policy_to_ref, got \"" + v + "\"");
         }
       }},
      {"pretrain.epochs", set_size(&C::pretrain, &PretrainConfig::epochs)},
      {"pretrain.learning_rate", set_real(&C::pretrain, &PretrainConfig::learning_rate)},
      {"pretrain.p_noise", set_real(&C::pretrain, &PretrainConfig::p_noise)},
      {"eval.samples_per_text", set_size(&C::train, &TrainOptions::eval_samples_per_text)},
  };
  return table;
}

std::string real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void ExperimentConfig::validate() const {
  try {
    world.validate();
    reward.validate();
    optimizer.validate();
    if (!(pretrain.p_noise >= 0.0 && pretrain.p_noise < 1.0)) {
      throw Error(ErrorCode::InvalidArgument, "pretrain.p_noise must lie in [0, 1)");
    }
    if (!(pretrain.learning_rate > 0.0)) {
      throw Error(ErrorCode::InvalidArgument, "pretrain.learning_rate must be positive");
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::SchemaViolation) throw;
    throw Error(ErrorCode::SchemaViolation, e.what());
  }
}

ExperimentConfig parse_experiment_config(const std::string& text) {
  ExperimentConfig config;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::SchemaViolation,
                  "line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = setters().find(key);
    if (it == setters().end()) {
      throw Error(ErrorCode::SchemaViolation,
                  "line " + std::to_string(line_no) + ": unknown key \"" + key + "\"");
    }
    if (!seen.insert(key).second) {
      throw Error(ErrorCode::SchemaViolation,
                  "line " + std::to_string(line_no) + ": duplicate key \"" + key + "\"");
    }
    it->second(config, key, value);
  }
  config.validate();
  return config;
}

ExperimentConfig read_experiment_config(const std::string& path) {
  return parse_experiment_config(read_file(path));
}

std::string format_experiment_config(const ExperimentConfig& c) {
  std::ostringstream out;
  out << "# toy world\n"
      << "world.n_text_symbols = " << c.world.n_text_symbols << "\n"
      << "world.n_acoustic_symbols = " << c.world.n_acoustic_symbols << "\n"
      << "world.tokens_per_word = " << c.world.tokens_per_word << "\n"
      << "world.frames_per_acoustic_token = " << c.world.frames_per_acoustic_token << "\n"
      << "world.embed_dim = " << c.world.embed_dim << "\n"
      << "world.sharpness = " << real(c.world.sharpness) << "\n"
      << "world.seed = " << c.world.seed << "\n"
      << "world.words_per_utterance = " << c.world.words_per_utterance << "\n"
      << "world.n_train_texts = " << c.world.n_train_texts << "\n"
      << "world.n_eval_texts = " << c.world.n_eval_texts << "\n"
      << "\n# reward\n"
      << "reward.window_w = " << c.reward.window_w << "\n"
      << "reward.beta = " << real(c.reward.beta) << "\n"
      << "reward.lambda_purity = " << real(c.reward.lambda_purity) << "\n"
      << "reward.lambda_mono = " << real(c.reward.lambda_mono) << "\n"
      << "\n# optimizer\n"
      << "optim.group_size = " << c.optimizer.group_size << "\n"
      << "optim.gamma_kl = " << real(c.optimizer.gamma_kl) << "\n"
      << "optim.gamma_sup = " << real(c.optimizer.gamma_sup) << "\n"
      << "optim.learning_rate = " << real(c.optimizer.learning_rate) << "\n"
      << "optim.temperature = " << real(c.optimizer.sampling_temperature) << "\n"
      << "optim.top_p = " << real(c.optimizer.top_p) << "\n"
      << "optim.iterations = " << c.optimizer.iterations << "\n"
      << "optim.seed = " << c.optimizer.seed << "\n"
      << "optim.kl_direction = "
      << (c.optimizer.kl_direction == KlDirection::RefToPolicy ? "ref_to_policy"
                                                              : "policy_to_ref")
      << "\n"
      << "\n# supervised pre-training of the starting policy\n"
      << "pretrain.epochs = " << c.pretrain.epochs << "\n"
      << "pretrain.learning_rate = " << real(c.pretrain.learning_rate) << "\n"
      << "pretrain.p_noise = " << real(c.pretrain.p_noise) << "\n"
      << "\n# evaluation\n"
      << "eval.samples_per_text = " << c.train.eval_samples_per_text << "\n";
  return out.str();
}

}  // namespace w3ar
