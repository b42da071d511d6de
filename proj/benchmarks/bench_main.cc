#include <benchmark/benchmark.h>

#include <filesystem>

#include "nudge/causal.h"
#include "nudge/lexicon.h"
#include "nudge/outlets.h"
#include "nudge/replygen.h"
#include "nudge/rng.h"
#include "nudge/simulator.h"

namespace {

using namespace nudge;
const std::filesystem::path kData = NUDGE_DATA_DIR;

const Lexicon& lexicon() {
  static const auto lex = load_lexicon(kData / "keywords.csv");
  return lex;
}

void BM_MatchKeywords(benchmark::State& state) {
  const auto& lex = lexicon();
  const std::string post =
      "Can't believe the lakers pulled that off, best nba night in years. Watching the oscars "
      "rerun now with some yoga after, what a weekend honestly";
  for (auto _ : state) benchmark::DoNotOptimize(match_keywords(post, lex));
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * post.size()));
}
BENCHMARK(BM_MatchKeywords);

void BM_EntropyBalance(benchmark::State& state) {
  const auto n = state.range(0);
  Rng rng(1);
  CovariateMatrix src(n, 4);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < 4; ++j) src(i, j) = std::exp(rng.normal());
  }
  Eigen::VectorXd target = column_means(src) * 1.1;
  for (auto _ : state) benchmark::DoNotOptimize(entropy_balance(src, target));
}
BENCHMARK(BM_EntropyBalance)->Arg(1'000)->Arg(10'000)->Arg(30'000)->Unit(benchmark::kMillisecond);

void BM_GComputeEffect(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(2);
  std::vector<double> y(n), w(n);
  std::vector<int> t(n);
  CovariateMatrix x(static_cast<Eigen::Index>(n), 4);
  for (std::size_t i = 0; i < n; ++i) {
    t[i] = rng.uniform() < 0.5;
    y[i] = rng.normal();
    w[i] = 0.5 + rng.uniform();
    for (Eigen::Index j = 0; j < 4; ++j) x(static_cast<Eigen::Index>(i), j) = rng.normal();
  }
  for (auto _ : state) benchmark::DoNotOptimize(g_compute_effect(y, t, w, &x));
}
BENCHMARK(BM_GComputeEffect)->Arg(1'000)->Arg(30'000)->Unit(benchmark::kMillisecond);

void BM_RunSimulation(benchmark::State& state) {
  const auto outlets = filter_eligible(load_outlets(kData / "outlets.csv"));
  const auto gates = GateLexicons::load(kData / "profanity.txt", kData / "platform_terms.txt",
                                        kData / "generic_responses.txt");
  const TemplateEchoGenerator generator;
  const ReplyBundle bundle{&generator, &gates, load_templates(kData / "templates.txt")};
  std::vector<SimUser> users;
  for (std::int64_t i = 0; i < state.range(0); ++i) {
    SimUser u;
    u.user_id = "u" + std::to_string(i);
    u.arm = kAllArms[static_cast<std::size_t>(i % 3)];
    u.activity.posts_per_day = 3.8;
    u.activity.topic_mixture = {0.08, 0.04, 0.01, 0.87};
    users.push_back(u);
  }
  const PoissonPostSource source(lexicon());
  SimConfig cfg;
  cfg.seed = 3;
  for (auto _ : state) {
    benchmark::DoNotOptimize(run_simulation(users, lexicon(), outlets, bundle, source, cfg));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_RunSimulation)->Arg(1'000)->Arg(5'000)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
