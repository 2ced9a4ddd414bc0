#include "cli.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "w3ar/dump_io.hpp"
#include "w3ar/error.hpp"
#include "w3ar/experiment_config.hpp"
#include "w3ar/gradcheck.hpp"
#include "w3ar/reward.hpp"
#include "w3ar/trainer.hpp"

namespace w3ar::cli {

namespace {

struct ScoreArgs {
  std::string attn;
  std::string meta;
  std::string out;
  RewardConfig reward;
};

struct TrainArgs {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> iters;
  std::optional<std::size_t> group_size;
  std::optional<double> gamma_kl;
  std::optional<double> gamma_sup;
};

struct GradcheckArgs {
  std::uint64_t seed = 0;
  double eps = 1e-5;
  std::size_t seeds = 10;
  double inject_error = 0.0;
};

struct DemoArgs {
  std::uint64_t seed = 42;
  std::size_t n = 200;
  std::string out;
};

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

int score(const ScoreArgs& a, std::ostream& out) {
  a.reward.validate();
  AttentionMap map = read_attn_dump(a.attn);
  const DumpSidecar meta = read_sidecar(a.meta);
  check_pairing(meta, map);

  const TokenRewards tok = token_rewards(map, a.reward);
  const auto rows = word_reward_report(meta.utterance_id, tok, meta.word_map());
  write_report(rows, a.out);

  double mean = 0.0;
  std::size_t worst = 0;
  for (std::size_t w = 0; w < rows.size(); ++w) {
    mean += rows[w].reward;
    if (rows[w].reward < rows[worst].reward) worst = w;
  }
  mean /= static_cast<double>(rows.size());
  out << "utterance " << meta.utterance_id << ": " << rows.size() << " words, "
      << map.n_frames() << " frames\n"
      << "mean reward " << fmt("%.6f", mean) << "\n"
      << "worst word #" << worst << " \"" << rows[worst].word << "\" reward "
      << fmt("%.6f", rows[worst].reward) << " purity " << fmt("%.6f", rows[worst].purity)
      << " mono " << fmt("%.6f", rows[worst].mono) << "\n"
      << "report written to " << a.out << "\n";
  return kExitOk;
}

int train_toy(const TrainArgs& a, std::ostream& out) {
  ExperimentConfig config = a.config.empty() ? ExperimentConfig{} : read_experiment_config(a.config);
  if (a.seed) config.optimizer.seed = *a.seed;
  if (a.iters) config.optimizer.iterations = *a.iters;
  if (a.group_size) config.optimizer.group_size = *a.group_size;
  if (a.gamma_kl) config.optimizer.gamma_kl = *a.gamma_kl;
  if (a.gamma_sup) config.optimizer.gamma_sup = *a.gamma_sup;
  config.validate();

  const ToyWorld world(config.world);
  ToyPolicy policy = pretrain_supervised(ToyPolicy::for_world(world), world, config.pretrain);
  const ToyPolicy reference = policy;
  const TrainResult result =
      train(policy, reference, world, config.reward, config.optimizer, config.train);
  write_metrics_csv(a.out, result.metrics);

  out << "iterations " << result.metrics.size() << ", group size "
      << config.optimizer.group_size << ", gamma_kl " << config.optimizer.gamma_kl << "\n"
      << "word mismatch rate: initial " << fmt("%.4f", result.initial.mismatch_rate)
      << " final " << fmt("%.4f", result.final.mismatch_rate) << "\n"
      << "mean reward:        initial " << fmt("%.4f", result.initial.mean_reward) << " final "
      << fmt("%.4f", result.final.mean_reward) << "\n"
      << "KL(ref||policy):    final " << fmt("%.4f", result.final.kl_to_ref) << "\n"
      << "metrics written to " << a.out << "\n";
  return kExitOk;
}

int gradcheck(const GradcheckArgs& a, std::ostream& out) {
  if (!(a.eps > 0.0)) throw Error(ErrorCode::InvalidArgument, "--eps must be positive");
  if (a.seeds == 0) throw Error(ErrorCode::InvalidArgument, "--seeds must be at least 1");
  double worst = 0.0;
  for (std::size_t k = 0; k < a.seeds; ++k) {
    GradCheckOptions opt;
    opt.seed = a.seed + k;
    opt.eps = a.eps;
    opt.inject_error = a.inject_error;
    const GradCheckResult r = gradient_check(opt);
    out << "seed " << opt.seed << ": " << r.n_parameters << " parameters, max rel error "
        << fmt("%.3e", r.max_rel_error) << " (abs " << fmt("%.3e", r.max_abs_error) << ")\n";
    worst = std::max(worst, r.max_rel_error);
  }
  const bool ok = worst <= kGradCheckTolerance;
  out << "max relative error " << fmt("%.3e", worst) << " (threshold "
      << fmt("%.0e", kGradCheckTolerance) << "): " << (ok ? "PASS" : "FAIL") << "\n";
  return ok ? kExitOk : kExitCheckFailed;
}

int demo_artifacts(const DemoArgs& a, std::ostream& out) {
  if (a.n == 0) throw Error(ErrorCode::InvalidArgument, "--n must be at least 1");
  ToyWorldConfig wc;
  wc.seed = a.seed;
  const ToyWorld world(wc);
  const RewardConfig reward;
  const ArtifactSeparation s = measure_artifact_separation(world, reward, a.n, a.seed);

  std::ostringstream csv;
  csv << "condition,n_scored,mean_purity,mean_mono\n";
  auto row = [&](const char* name, double p, double m) {
    csv << name << ',' << a.n << ',' << fmt("%.6f", p) << ',' << fmt("%.6f", m) << '\n';
  };
  row("clean", s.clean_mean_purity, s.clean_mean_mono);
  row("substitution", s.substitution_mean_purity, s.substitution_mean_mono);
  row("stutter", s.stutter_mean_purity, s.stutter_mean_mono);
  row("swap", s.swap_mean_purity, s.swap_mean_mono);
  write_file(a.out, csv.str());

  out << "scored " << 4 * a.n << " utterances (" << a.n << " per condition)\n"
      << "substitution target purity: clean " << fmt("%.4f", s.target_clean_purity)
      << " substituted " << fmt("%.4f", s.target_substituted_purity) << " margin "
      << fmt("%.4f", s.substitution_margin()) << "\n"
      << "swap utterances with a negative monotonicity reward: "
      << fmt("%.1f%%", 100.0 * s.swap_negative_fraction) << "\n"
      << "clean utterances with all monotonicity rewards >= 0: "
      << fmt("%.1f%%", 100.0 * s.clean_nonnegative_fraction) << "\n"
      << "summary written to " << a.out << "\n";
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Word-level attention rewards and group-relative policy optimization", "w3ar"};
  app.require_subcommand(1);

  ScoreArgs score_args;
  auto* score_cmd = app.add_subcommand("score", "Score an attention dump and write a word report");
  score_cmd->add_option("--attn", score_args.attn, "Attention dump (W3AR format)")->required();
  score_cmd->add_option("--meta", score_args.meta, "JSON sidecar for the dump")->required();
  score_cmd->add_option("--window", score_args.reward.window_w, "Purity window W in frames")
      ->capture_default_str();
  score_cmd->add_option("--beta", score_args.reward.beta, "Monotonicity scale")
      ->capture_default_str();
  score_cmd->add_option("--lambda-purity", score_args.reward.lambda_purity, "Purity weight")
      ->capture_default_str();
  score_cmd->add_option("--lambda-mono", score_args.reward.lambda_mono, "Monotonicity weight")
      ->capture_default_str();
  score_cmd->add_option("--out", score_args.out, "Report CSV path")->required();

  TrainArgs train_args;
  auto* train_cmd =
      app.add_subcommand("train-toy", "Pre-train and then RL-train the toy policy");
  train_cmd->add_option("--config", train_args.config, "Experiment config (key = value)");
  train_cmd->add_option("--seed", train_args.seed, "Optimizer seed (overrides optim.seed)");
  train_cmd->add_option("--iters", train_args.iters, "Iterations (overrides optim.iterations)");
  train_cmd->add_option("--group-size", train_args.group_size, "Group size N (default 8)");
  train_cmd->add_option("--gamma-kl", train_args.gamma_kl, "KL weight (default 0.1)");
  train_cmd->add_option("--gamma-sup", train_args.gamma_sup, "Supervised weight (default 0)");
  train_cmd->add_option("--out", train_args.out, "Metrics CSV path")->required();

  GradcheckArgs grad_args;
  auto* grad_cmd =
      app.add_subcommand("gradcheck", "Check analytic gradients against finite differences");
  grad_cmd->add_option("--seed", grad_args.seed, "First seed")->capture_default_str();
  grad_cmd->add_option("--eps", grad_args.eps, "Central-difference step")->capture_default_str();
  grad_cmd->add_option("--seeds", grad_args.seeds, "Number of consecutive seeds")
      ->capture_default_str();
  grad_cmd->add_option("--inject-error", grad_args.inject_error,
                       "Negative control: add this to one analytic coordinate");

  DemoArgs demo_args;
  auto* demo_cmd = app.add_subcommand("demo-artifacts",
                                      "Score clean vs corrupted toy utterances");
  demo_cmd->add_option("--seed", demo_args.seed, "World and sampling seed")->capture_default_str();
  demo_cmd->add_option("--n", demo_args.n, "Utterances per condition")->capture_default_str();
  demo_cmd->add_option("--out", demo_args.out, "Summary CSV path")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitValidation;
  }

  try {
    if (*score_cmd) return score(score_args, out);
    if (*train_cmd) return train_toy(train_args, out);
    if (*grad_cmd) return gradcheck(grad_args, out);
    if (*demo_cmd) return demo_artifacts(demo_args, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return is_validation_error(e.code()) ? kExitValidation : kExitIo;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  }
  return kExitValidation;
}

}  // namespace w3ar::cli
