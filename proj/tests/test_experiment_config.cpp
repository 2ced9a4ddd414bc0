#include "doctest.h"
#include "w3ar/error.hpp"
#include "w3ar/experiment_config.hpp"

using namespace w3ar;

namespace {

std::string schema_error(const std::string& text) {
  try {
    parse_experiment_config(text);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SchemaViolation);
    return e.what();
  }
  FAIL("expected SchemaViolation");
  return {};
}

}  // namespace

TEST_CASE("empty config yields defaults") {
  const auto c = parse_experiment_config("# nothing here\n\n");
  CHECK(c.world.n_text_symbols == 8);
  CHECK(c.world.n_acoustic_symbols == 16);
  CHECK(c.world.tokens_per_word == 3);
  CHECK(c.world.sharpness == 10.0);
  CHECK(c.reward.window_w == 6);
  CHECK(c.optimizer.group_size == 8);
  CHECK(c.optimizer.gamma_kl == 0.1);
  CHECK(c.optimizer.gamma_sup == 0.0);
  CHECK(c.pretrain.p_noise == 0.3);
  CHECK(c.train.eval_samples_per_text == 8);
}

TEST_CASE("values override defaults") {
  const auto c = parse_experiment_config(
      "world.seed = 7   # trailing comment\n"
      "  reward.beta=0.25\n"
      "optim.kl_direction = policy_to_ref\n"
      "optim.top_p = 0.9\n"
      "optim.iterations = 12\n"
      "pretrain.p_noise = 0\n"
      "eval.samples_per_text = 3\n");
  CHECK(c.world.seed == 7);
  CHECK(c.reward.beta == 0.25);
  CHECK(c.optimizer.kl_direction == KlDirection::PolicyToRef);
  CHECK(c.optimizer.top_p == 0.9);
  CHECK(c.optimizer.iterations == 12);
  CHECK(c.pretrain.p_noise == 0.0);
  CHECK(c.train.eval_samples_per_text == 3);
}

TEST_CASE("format and parse round trip") {
  ExperimentConfig c;
  c.world.seed = 123456789012345ULL;
  c.reward.beta = 0.1 / 3.0;
  c.optimizer.learning_rate = 0.123456789;
  c.optimizer.kl_direction = KlDirection::PolicyToRef;
  c.pretrain.epochs = 17;
  const auto back = parse_experiment_config(format_experiment_config(c));
  CHECK(back.world.seed == c.world.seed);
  CHECK(back.reward.beta == c.reward.beta);
  CHECK(back.optimizer.learning_rate == c.optimizer.learning_rate);
  CHECK(back.optimizer.kl_direction == c.optimizer.kl_direction);
  CHECK(back.pretrain.epochs == 17);
  CHECK(format_experiment_config(back) == format_experiment_config(c));
}

TEST_CASE("schema violations") {
  CHECK(schema_error("world.colour = 3\n").find("world.colour") != std::string::npos);
  CHECK(schema_error("optim.seed = 1\noptim.seed = 2\n").find("duplicate") != std::string::npos);
  CHECK(schema_error("optim.group_size = eight\n").find("optim.group_size") != std::string::npos);
  CHECK(schema_error("optim.group_size = -3\n").find("optim.group_size") != std::string::npos);
  CHECK(schema_error("reward.beta = 0.1x\n").find("reward.beta") != std::string::npos);
  CHECK(schema_error("just some words\n").find("line 1") != std::string::npos);
  CHECK(schema_error("optim.kl_direction = sideways\n").find("kl_direction") !=
        std::string::npos);
  // semantically invalid values are schema violations as well
  schema_error("optim.group_size = 1\n");
  schema_error("optim.top_p = 1.5\n");
  schema_error("pretrain.p_noise = 1\n");
  schema_error("world.n_acoustic_symbols = 4\n");
}
