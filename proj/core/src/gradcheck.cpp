#include "w3ar/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "w3ar/trainer.hpp"

namespace w3ar {

GradCheckResult gradient_check(const GradCheckOptions& options) {
  ToyWorldConfig wc;
  wc.seed = options.seed;
  const ToyWorld world(wc);

  Rng rng(Rng::mix(options.seed, 0x6772616463686bULL));
  ToyPolicy policy = ToyPolicy::for_world(world);
  ToyPolicy reference = ToyPolicy::for_world(world);
  for (double& p : policy.parameters()) p = 0.5 * rng.normal();
  for (double& p : reference.parameters()) p = 0.5 * rng.normal();

  OptimizerConfig config;
  config.gamma_kl = options.gamma_kl;
  config.gamma_sup = 0.0;
  const TextSeq& text = world.train_texts()[rng.below(world.train_texts().size())];
  const GroupRollout rollout =
      sample_group(policy, world, RewardConfig{}, text, config, rng.next_u64());

  ToyPolicy analytic = surrogate_gradient(policy, reference, world, rollout, config);
  analytic.parameters()[0] += options.inject_error;

  GradCheckResult out;
  out.n_parameters = policy.parameters().size();
  ToyPolicy probe = policy;
  auto theta = probe.parameters();
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double saved = theta[i];
    theta[i] = saved + options.eps;
    const double up = surrogate_loss(probe, reference, world, rollout, config).total;
    theta[i] = saved - options.eps;
    const double down = surrogate_loss(probe, reference, world, rollout, config).total;
    theta[i] = saved;

    const double numeric = (up - down) / (2.0 * options.eps);
    const double a = analytic.parameters()[i];
    const double abs_err = std::abs(a - numeric);
    const double rel_err = abs_err / std::max({std::abs(a), std::abs(numeric), kGradCheckFloor});
    out.max_abs_error = std::max(out.max_abs_error, abs_err);
    if (rel_err > out.max_rel_error) {
      out.max_rel_error = rel_err;
      out.worst_index = i;
    }
  }
  return out;
}

}  // namespace w3ar
