#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <thread>
#include <vector>

#include "eglab/game.hpp"
#include "eglab/rng.hpp"

namespace eglab::detail {

// Shared Monte-Carlo loop: trials are split into fixed-size chunks claimed by
// workers, each trial draws from its own counter stream, and chunk tallies
// are integers, so the result is a pure function of (seed, trials) no matter
// how many threads execute it.  trial_fn receives the trial's rng and returns
// (accepted, subtest index).
template <typename TrialFn>
game::SampledStats run_trials(std::uint64_t seed, std::uint64_t trials,
                              unsigned threads, std::uint32_t num_subtests,
                              const TrialFn& trial_fn) {
  if (trials == 0) throw std::invalid_argument("need at least one trial");
  constexpr std::uint64_t kChunk = 4096;
  const std::uint64_t num_chunks = (trials + kChunk - 1) / kChunk;
  struct Tally {
    std::vector<std::uint64_t> trials, accepts;
  };
  std::vector<Tally> tallies(num_chunks);

  const CounterRng root(seed);
  auto run_chunk = [&](std::uint64_t c) {
    Tally t{std::vector<std::uint64_t>(num_subtests, 0),
            std::vector<std::uint64_t>(num_subtests, 0)};
    const std::uint64_t hi = std::min(trials, (c + 1) * kChunk);
    for (std::uint64_t i = c * kChunk; i < hi; ++i) {
      CounterRng rng = root.split(i);
      auto [accepted, subtest] = trial_fn(rng);
      t.trials[subtest] += 1;
      t.accepts[subtest] += accepted ? 1 : 0;
    }
    tallies[c] = std::move(t);
  };

  const unsigned workers = std::max(1u, std::min({threads, 64u,
      static_cast<unsigned>(std::min<std::uint64_t>(num_chunks, 64))}));
  if (workers == 1) {
    for (std::uint64_t c = 0; c < num_chunks; ++c) run_chunk(c);
  } else {
    std::atomic<std::uint64_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::uint64_t c = next.fetch_add(1); c < num_chunks;
             c = next.fetch_add(1))
          run_chunk(c);
      });
    for (auto& th : pool) th.join();
  }

  game::SampledStats stats;
  stats.subtest_trials.assign(num_subtests, 0);
  stats.subtest_accepts.assign(num_subtests, 0);
  std::uint64_t accepts = 0;
  for (const Tally& t : tallies)
    for (std::uint32_t s = 0; s < num_subtests; ++s) {
      stats.subtest_trials[s] += t.trials[s];
      stats.subtest_accepts[s] += t.accepts[s];
      accepts += t.accepts[s];
    }
  const double p = static_cast<double>(accepts) / static_cast<double>(trials);
  stats.overall = {p, std::sqrt(p * (1.0 - p) / static_cast<double>(trials)),
                   trials};
  return stats;
}

}  // namespace eglab::detail
