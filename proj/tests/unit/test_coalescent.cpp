//
// Copyright 2026 The pdbrw Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "pdbrw/brw.hpp"
#include "pdbrw/coalescent.hpp"
#include "pdbrw/error.hpp"
#include "pdbrw/estimators.hpp"
#include "pdbrw/stats.hpp"

namespace pdbrw {
namespace {

Partition random_partition(std::size_t n, Rng& rng) {
  std::vector<std::uint32_t> labels(n);
  const std::uint64_t k = 1 + rng.below(n);
  for (auto& l : labels) l = static_cast<std::uint32_t>(rng.below(k));
  return Partition::from_labels(labels);
}

double factorial(int n) { return std::tgamma(n + 1.0); }

TEST(Partition, StringRoundTrip) {
  const Partition p = Partition::from_string("1 3|2");
  EXPECT_EQ(p.size(), 3u);
  EXPECT_EQ(p.block_count(), 2u);
  EXPECT_EQ(p.to_string(), "1 3|2");
  EXPECT_EQ(Partition::from_string("2|3 1").to_string(), "1 3|2");
  EXPECT_EQ(Partition::singletons(4).to_string(), "1|2|3|4");
  EXPECT_EQ(Partition::from_string("1|2 3|4").largest_block(), 2u);
}

TEST(Partition, RejectsMalformedText) {
  EXPECT_THROW(Partition::from_string("1 2|2"), ParameterError);
  EXPECT_THROW(Partition::from_string("1|3"), ParameterError);
  EXPECT_THROW(Partition::from_string("1||2"), ParameterError);
  EXPECT_THROW(Partition::from_string("0|1"), ParameterError);
  EXPECT_THROW(Partition::from_string("a"), ParameterError);
}

TEST(Partition, CanonicalLabels) {
  const std::vector<std::uint32_t> raw{7, 2, 7, 9, 2};
  const Partition p = Partition::from_labels(raw);
  EXPECT_EQ(p.labels(), (std::vector<std::uint32_t>{0, 1, 0, 2, 1}));
  const auto blocks = p.blocks();
  ASSERT_EQ(blocks.size(), 3u);
  EXPECT_EQ(blocks[0], (std::vector<std::uint32_t>{0, 2}));
  EXPECT_EQ(Partition::from_blocks({{3, 1}, {0}, {2, 4}}).to_string(), "1|2 4|3 5");
  EXPECT_THROW(Partition::from_blocks({{0, 1}, {1}}), ParameterError);
  EXPECT_THROW(Partition::from_blocks({{0}, {2}}), ParameterError);
}

TEST(Coag, Examples) {
  const Partition pi = Partition::from_string("1 4|2|3");
  EXPECT_EQ(coag(pi, Partition::singletons(3)), pi);
  EXPECT_EQ(coag(Partition::singletons(3), Partition::from_string("1 2|3")),
            Partition::from_string("1 2|3"));
  EXPECT_EQ(coag(pi, Partition::from_string("1 3|2")), Partition::from_string("1 3 4|2"));
  // Extra indices of pi_prime are ignored.
  EXPECT_EQ(coag(pi, Partition::from_string("1 3|2|4 5")), Partition::from_string("1 3 4|2"));
  EXPECT_THROW(coag(pi, Partition::singletons(2)), ParameterError);
}

TEST(Restrict, Examples) {
  const Partition pi = Partition::from_string("1 3|2");
  EXPECT_EQ(restrict(pi, 3), pi);
  EXPECT_EQ(restrict(pi, 2), Partition::from_string("1|2"));
  EXPECT_EQ(restrict(Partition::from_string("1 4|2 3"), 1).to_string(), "1");
  EXPECT_THROW(restrict(pi, 4), ParameterError);
}

TEST(Coag, Associativity) {
  Rng rng(1);
  for (int trial = 0; trial < 5000; ++trial) {
    const std::size_t n = 1 + rng.below(8);
    const Partition a = random_partition(n, rng);
    const Partition b = random_partition(a.block_count(), rng);
    const Partition c = random_partition(b.block_count(), rng);
    ASSERT_EQ(coag(coag(a, b), c), coag(a, coag(b, c)));
  }
}

TEST(Coag, ExhaustiveAssociativityOnThree) {
  std::vector<Partition> all;
  for (std::uint32_t x = 0; x < 27; ++x) {
    const std::vector<std::uint32_t> l{x % 3, (x / 3) % 3, x / 9};
    const Partition p = Partition::from_labels(l);
    if (std::find(all.begin(), all.end(), p) == all.end()) all.push_back(p);
  }
  ASSERT_EQ(all.size(), 5u);  // Bell number B_3
  for (const auto& a : all)
    for (const auto& b : all)
      for (const auto& c : all) EXPECT_EQ(coag(coag(a, b), c), coag(a, coag(b, c)));
}

TEST(Restrict, CommutesWithCoag) {
  Rng rng(2);
  for (int trial = 0; trial < 5000; ++trial) {
    const std::size_t n = 1 + rng.below(8);
    const std::size_t m = 1 + rng.below(n);
    const Partition pi = random_partition(n, rng);
    const Partition pp = random_partition(pi.block_count(), rng);
    const Partition r = restrict(pi, m);
    // Block a of r is block old[a] of pi.
    std::vector<std::uint32_t> matched(r.block_count());
    for (std::size_t i = 0; i < m; ++i) matched[r.block_of(i)] = pp.block_of(pi.block_of(i));
    ASSERT_EQ(restrict(coag(pi, pp), m), coag(r, Partition::from_labels(matched)));
  }
}

TEST(LambdaRate, BolthausenSznitmanClosedForm) {
  const LambdaMeasure bs = LambdaMeasure::beta_family(1.0);
  EXPECT_NEAR(lambda_rate(3, 2, bs), 0.5, 1e-14);
  EXPECT_NEAR(lambda_rate(3, 3, bs), 0.5, 1e-14);
  for (int b = 2; b <= 20; ++b)
    for (int k = 2; k <= b; ++k)
      EXPECT_NEAR(lambda_rate(b, k, bs), factorial(k - 2) * factorial(b - k) / factorial(b - 1),
                  1e-12 * lambda_rate(b, k, bs));
}

TEST(LambdaRate, UnitTotalMass) {
  for (double l : {0.2, 0.5, 1.0, 1.5, 1.9})
    EXPECT_NEAR(lambda_rate(2, 2, LambdaMeasure::beta_family(l)), 1.0, 1e-13) << l;
  EXPECT_EQ(lambda_rate(2, 2, LambdaMeasure::kingman()), 1.0);
}

TEST(LambdaRate, Kingman) {
  const LambdaMeasure k = LambdaMeasure::kingman();
  EXPECT_EQ(lambda_rate(5, 2, k), 1.0);
  EXPECT_EQ(lambda_rate(5, 3, k), 0.0);
  EXPECT_EQ(lambda_rate(5, 5, k), 0.0);
}

TEST(LambdaRate, InvalidArguments) {
  const LambdaMeasure bs = LambdaMeasure::beta_family(1.0);
  EXPECT_THROW(lambda_rate(1, 2, bs), ParameterError);
  EXPECT_THROW(lambda_rate(4, 1, bs), ParameterError);
  EXPECT_THROW(lambda_rate(4, 5, bs), ParameterError);
  EXPECT_THROW(LambdaMeasure::beta_family(0.0), ParameterError);
  EXPECT_THROW(LambdaMeasure::beta_family(2.0), ParameterError);
}

TEST(LambdaRate, QuadratureExample) {
  const LambdaMeasure m = LambdaMeasure::beta_family(1.5);
  EXPECT_NEAR(lambda_rate(4, 3, m), 0.125, 1e-14);
  EXPECT_NEAR(lambda_rate_quadrature(4, 3, m), lambda_rate(4, 3, m), 1e-8);
}

TEST(LambdaRate, ClosedFormMatchesQuadrature) {
  for (double l : {0.5, 1.0, 1.5}) {
    const LambdaMeasure m = LambdaMeasure::beta_family(l);
    for (int b = 2; b <= 30; ++b)
      for (int k = 2; k <= b; ++k)
        ASSERT_NEAR(lambda_rate_quadrature(b, k, m), lambda_rate(b, k, m), 1e-8)
            << l << ' ' << b << ' ' << k;
  }
}

TEST(LambdaRate, GeneralMeasure) {
  const LambdaMeasure uniform = LambdaMeasure::general([](double) { return 1.0; }, 1.0);
  const LambdaMeasure bs = LambdaMeasure::beta_family(1.0);
  for (int b = 2; b <= 10; ++b)
    for (int k = 2; k <= b; ++k) EXPECT_NEAR(lambda_rate(b, k, uniform), lambda_rate(b, k, bs), 1e-10);
  EXPECT_THROW(LambdaMeasure::general(nullptr, 1.0), ParameterError);
}

TEST(RateTable, RecursionHolds) {
  for (double l : {0.5, 1.0, 1.5}) {
    const RateTable t(31, LambdaMeasure::beta_family(l));
    EXPECT_LE(t.max_recursion_error(), 1e-10) << l;
    for (std::size_t b = 2; b <= 30; ++b)
      for (std::size_t k = 2; k <= b; ++k) {
        ASSERT_GT(t.rate(b, k), 0.0);
        ASSERT_TRUE(std::isfinite(t.rate(b, k)));
        ASSERT_NEAR(t.rate(b, k), t.rate(b + 1, k) + t.rate(b + 1, k + 1), 1e-10 * t.rate(b, k));
      }
  }
  EXPECT_THROW(RateTable(1, LambdaMeasure::kingman()), ParameterError);
  const RateTable t(5, LambdaMeasure::kingman());
  EXPECT_THROW(t.rate(6, 2), ParameterError);
}

TEST(FirstMergerDistribution, Examples) {
  const auto bs = first_merger_distribution(3, LambdaMeasure::beta_family(1.0));
  ASSERT_EQ(bs.size(), 4u);
  EXPECT_NEAR(bs[2], 0.75, 1e-14);
  EXPECT_NEAR(bs[3], 0.25, 1e-14);
  const auto k = first_merger_distribution(6, LambdaMeasure::kingman());
  EXPECT_EQ(k[2], 1.0);
  for (std::size_t j = 3; j <= 6; ++j) EXPECT_EQ(k[j], 0.0);
  for (double l : {0.3, 1.0, 1.7})
    for (std::size_t n : {2u, 5u, 20u}) {
      const auto p = first_merger_distribution(n, LambdaMeasure::beta_family(l));
      EXPECT_NEAR(std::accumulate(p.begin(), p.end(), 0.0), 1.0, 1e-12);
    }
  EXPECT_THROW(first_merger_distribution(1, LambdaMeasure::kingman()), ParameterError);
}

TEST(LambdaCoalescent, KingmanPairTime) {
  Rng rng(3);
  RunningStats s;
  for (int i = 0; i < 100000; ++i) {
    const auto tr = simulate_lambda_coalescent(2, LambdaMeasure::kingman(), rng);
    s.add(tr.times.back());
  }
  EXPECT_NEAR(s.mean(), 1.0, 0.01);
}

TEST(LambdaCoalescent, BolthausenSznitmanTripleMerger) {
  Rng rng(4);
  int triple = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const auto tr = simulate_lambda_coalescent(3, LambdaMeasure::beta_family(1.0), rng);
    if (tr.states[1].block_count() == 1) ++triple;
  }
  EXPECT_NEAR(triple / static_cast<double>(n), 0.25, 0.005);
}

TEST(LambdaCoalescent, StrictlyDecreasingToOneBlock) {
  Rng rng(5);
  for (double l : {0.5, 1.0, 1.5}) {
    const auto tr = simulate_lambda_coalescent(12, LambdaMeasure::beta_family(l), rng);
    ASSERT_EQ(tr.states.front(), Partition::singletons(12));
    EXPECT_EQ(tr.states.back().block_count(), 1u);
    for (std::size_t i = 1; i < tr.states.size(); ++i) {
      EXPECT_LT(tr.states[i].block_count(), tr.states[i - 1].block_count());
      EXPECT_GT(tr.times[i], tr.times[i - 1]);
    }
  }
}

TEST(PDWeights, NormalizedAndOrdered) {
  Rng rng(6);
  const PDWeights w = sample_pd_weights(PDParams(0.5, 0.25), 5000, rng);
  ASSERT_EQ(w.theta.size(), 5000u);
  EXPECT_NEAR(std::accumulate(w.theta.begin(), w.theta.end(), 0.0), 1.0, 1e-12);
  EXPECT_TRUE(std::is_sorted(w.order_stats.begin(), w.order_stats.end(), std::greater<>()));
  EXPECT_EQ(w.order_stats.front(), *std::max_element(w.theta.begin(), w.theta.end()));
  EXPECT_THROW(sample_pd_weights(PDParams(0.5, 0.0), 1, rng), ParameterError);
  EXPECT_THROW(PDWeights::from_theta({0.5, 0.4}), ParameterError);
}

TEST(MultinomialStep, DegenerateWeightsMergeAll) {
  Rng rng(7);
  const PDWeights w = PDWeights::from_theta({1.0, 0.0, 0.0, 0.0});
  EXPECT_EQ(multinomial_coalescent_step(Partition::singletons(6), w, rng).block_count(), 1u);
}

TEST(MultinomialStep, UniformPairCollision) {
  Rng rng(8);
  const PDWeights w = PDWeights::from_theta({0.5, 0.5});
  int merged = 0;
  for (int i = 0; i < 100000; ++i)
    merged += multinomial_coalescent_step(Partition::singletons(2), w, rng).block_count() == 1;
  EXPECT_NEAR(merged / 1e5, 0.5, 0.005);
}

TEST(MultinomialStep, ConditionalPairCollisionIsSumOfSquares) {
  Rng rng(9);
  for (int rep = 0; rep < 3; ++rep) {
    const PDWeights w = sample_pd_weights(PDParams(0.5, 0.0), 50, rng);
    RunningStats s;
    for (int i = 0; i < 100000; ++i)
      s.add(multinomial_coalescent_step(Partition::singletons(2), w, rng).block_count() == 1);
    EXPECT_NEAR(s.mean(), w.sum_of_squares(), 4.0 * s.std_error() + 1e-4);
  }
}

TEST(MultinomialStep, Exchangeability) {
  Rng rng(10);
  const PDWeights w = sample_pd_weights(PDParams(0.5, 0.0), 6, rng);
  for (std::size_t n : {3u, 4u}) {
    std::vector<std::uint32_t> sigma(n);
    std::iota(sigma.begin(), sigma.end(), 0u);
    std::reverse(sigma.begin(), sigma.end());
    std::rotate(sigma.begin(), sigma.begin() + 1, sigma.end());
    std::map<std::string, double> plain, perm;
    const int reps = 100000;
    for (int i = 0; i < reps; ++i) {
      plain[multinomial_coalescent_step(Partition::singletons(n), w, rng).to_string()] += 1.0;
      const Partition p = multinomial_coalescent_step(Partition::singletons(n), w, rng);
      std::vector<std::uint32_t> l(n);
      for (std::size_t j = 0; j < n; ++j) l[j] = p.block_of(sigma[j]);
      perm[Partition::from_labels(l).to_string()] += 1.0;
    }
    double tv = 0.0;
    for (const auto& [k, v] : plain) tv += std::fabs(v - perm[k]);
    for (const auto& [k, v] : perm)
      if (!plain.count(k)) tv += v;
    EXPECT_LT(0.5 * tv / reps, 0.01) << "n " << n;
  }
}

TEST(MultinomialStep, ConsistentUnderRestriction) {
  Rng rng(11);
  const PDWeights w = sample_pd_weights(PDParams(0.5, 0.0), 8, rng);
  std::map<std::string, double> big, small;
  const int reps = 100000;
  for (int i = 0; i < reps; ++i) {
    big[restrict(multinomial_coalescent_step(Partition::singletons(5), w, rng), 3).to_string()] += 1.0;
    small[multinomial_coalescent_step(Partition::singletons(3), w, rng).to_string()] += 1.0;
  }
  double tv = 0.0;
  for (const auto& [k, v] : big) tv += std::fabs(v - small[k]);
  EXPECT_LT(0.5 * tv / reps, 0.01);
}

TEST(MultinomialStep, MultipleMergersKept) {
  const PDWeights w = PDWeights::from_theta({0.5, 0.5});
  Rng rng(12);
  bool two_pairs = false;
  for (int i = 0; i < 200 && !two_pairs; ++i) {
    const Partition p = multinomial_coalescent_step(Partition::singletons(4), w, rng);
    two_pairs = p.block_count() == 2 && p.largest_block() == 2;
  }
  EXPECT_TRUE(two_pairs);
}

TEST(MergerProbabilities, MatchBruteForce) {
  Rng rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t big_n = 2 + rng.below(4);
    const std::size_t n = 2 + rng.below(4);
    std::vector<double> w(big_n);
    for (double& x : w) x = rng.uniform();
    const double s = std::accumulate(w.begin(), w.end(), 0.0);
    for (double& x : w) x /= s;
    std::vector<double> brute(n + 1, 0.0);
    std::vector<std::size_t> idx(n, 0);
    for (;;) {
      double p = 1.0;
      std::vector<std::size_t> count(big_n, 0);
      for (auto j : idx) {
        p *= w[j];
        ++count[j];
      }
      brute[*std::max_element(count.begin(), count.end())] += p;
      std::size_t d = 0;
      while (d < n && ++idx[d] == big_n) idx[d++] = 0;
      if (d == n) break;
    }
    const auto exact = merger_size_probabilities(w, n);
    ASSERT_EQ(exact.size(), n + 1);
    for (std::size_t m = 1; m <= n; ++m) EXPECT_NEAR(exact[m], brute[m], 1e-12) << big_n << ' ' << n;
  }
}

TEST(MergerProbabilities, ThreeLineageFormulas) {
  const std::vector<double> w{0.6, 0.3, 0.1};
  const double p2 = 0.36 + 0.09 + 0.01, p3 = 0.216 + 0.027 + 0.001;
  const auto p = merger_size_probabilities(w, 3);
  EXPECT_NEAR(p[3], p3, 1e-15);
  EXPECT_NEAR(p[2] + p[3], 3 * p2 - 2 * p3, 1e-15);
  EXPECT_NEAR(p[1], 1 - 3 * p2 + 2 * p3, 1e-15);
  EXPECT_THROW(merger_size_probabilities(w, 9), ParameterError);
}

TEST(AncestralPartition, BasicCases) {
  GenealogyRecord g(4);
  const std::vector<std::uint32_t> g1{0, 1, 2, 3}, g2{2, 2, 2, 2};
  g.append(g1);
  g.append(g2);
  const std::vector<std::uint32_t> sample{0, 1, 3};
  const auto t0 = ancestral_partition(g, sample, 0);
  ASSERT_EQ(t0.states.size(), 1u);
  EXPECT_EQ(t0.states[0], Partition::singletons(3));
  const auto t1 = ancestral_partition(g, sample, 1);
  EXPECT_EQ(t1.states.back().block_count(), 1u);
  const std::vector<std::uint32_t> dup{0, 0}, bad{4};
  EXPECT_THROW(ancestral_partition(g, sample, 3), ParameterError);
  EXPECT_THROW(ancestral_partition(g, dup, 1), ParameterError);
  EXPECT_THROW(ancestral_partition(g, bad, 1), ParameterError);
}

TEST(AncestralPartition, PairCollisionMatchesParentWeights) {
  BRWConfig c;
  c.n_particles = 20;
  c.beta = 2.0;
  std::vector<double> merged, sum_sq;
  const std::vector<std::uint32_t> sample{0, 1};
  for (std::uint64_t r = 0; r < 20000; ++r) {
    Rng rng = seed_stream(14, r);
    RunOptions opt;
    opt.keep_states = true;
    const RunResult res = run(c, 3, rng, opt);
    const auto& prev = res.states[2];
    std::vector<double> theta(prev.size());
    for (std::size_t i = 0; i < theta.size(); ++i) theta[i] = std::exp(prev.positions[i] - prev.x_eq);
    sum_sq.push_back(PDWeights::from_theta(theta).sum_of_squares());
    merged.push_back(ancestral_partition(res.genealogy, sample, 1).states.back().block_count() == 1);
  }
  const Estimate d = paired_difference(merged, sum_sq);
  EXPECT_LT(std::fabs(d.value), 4.0 * d.std_error);
}

TEST(MultinomialCoalescent, TrajectoryIsCoagulationChain) {
  Rng rng(15);
  const auto tr = simulate_multinomial_coalescent(PDParams(0.5, 0.0), 50, 6, rng, 10000);
  EXPECT_EQ(tr.states.back().block_count(), 1u);
  for (std::size_t i = 1; i < tr.states.size(); ++i) {
    EXPECT_LE(tr.states[i].block_count(), tr.states[i - 1].block_count());
    // Each state is coarser than its predecessor.
    for (std::size_t a = 0; a < 6; ++a)
      for (std::size_t b = 0; b < 6; ++b)
        if (tr.states[i - 1].block_of(a) == tr.states[i - 1].block_of(b))
          EXPECT_EQ(tr.states[i].block_of(a), tr.states[i].block_of(b));
  }
  const auto first = simulate_multinomial_coalescent(PDParams(0.5, 0.0), 50, 6, rng, 10000, true);
  EXPECT_LT(first.states.back().block_count(), 6u);
  for (std::size_t i = 0; i + 1 < first.states.size(); ++i) EXPECT_EQ(first.states[i].block_count(), 6u);
}

TEST(MergerStatistics, CountsFirstMergers) {
  CoalescentTrajectory a, b, none;
  a.times = {0, 1, 2};
  a.states = {Partition::singletons(3), Partition::singletons(3), Partition::from_string("1 2 3")};
  b.times = {0, 1};
  b.states = {Partition::singletons(3), Partition::from_string("1 3|2")};
  none.times = {0};
  none.states = {Partition::singletons(3)};
  EXPECT_EQ(first_merger_size(a), 3u);
  EXPECT_EQ(first_merger_size(b), 2u);
  EXPECT_EQ(first_merger_size(none), 0u);
  const std::vector<CoalescentTrajectory> all{a, b, b, none};
  const LambdaMeasure bs = LambdaMeasure::beta_family(1.0);
  const MergerStatistics s = merger_statistics(all, 3, &bs);
  EXPECT_EQ(s.n_trajectories, 4u);
  EXPECT_EQ(s.no_merger, 1u);
  EXPECT_EQ(s.counts[2], 2.0);
  EXPECT_EQ(s.counts[3], 1.0);
  EXPECT_NEAR(s.frequencies[3], 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(s.reference[3], 0.25, 1e-14);
}

TEST(MergerStatistics, BolthausenSznitmanLimitOnSimulatedCoalescent) {
  Rng rng(16);
  std::vector<CoalescentTrajectory> trs;
  for (int i = 0; i < 20000; ++i)
    trs.push_back(simulate_lambda_coalescent(3, LambdaMeasure::beta_family(1.0), rng));
  const LambdaMeasure bs = LambdaMeasure::beta_family(1.0);
  const MergerStatistics s = merger_statistics(trs, 3, &bs);
  EXPECT_NEAR(s.frequencies[3], 0.25, 0.012);
  EXPECT_EQ(s.chi2.dof, 1u);
  EXPECT_LT(s.chi2.statistic, 15.0);
}

}  // namespace
}  // namespace pdbrw
