#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "simsmooth/evaluation.hpp"
#include "simsmooth/smoothing.hpp"
#include "support.hpp"

using namespace simsmooth;
using namespace simsmooth::testing;

namespace {

// P(w2|w1) = 1/4 for a 1x4 model.
std::shared_ptr<const PairCountTable> uniform_table() {
  return std::make_shared<const PairCountTable>(PairCountTable::from_rows({{{0, 1}, {1, 1}, {2, 1}, {3, 1}}}, 4));
}

// Two-sided p-value of Student's t with 4 degrees of freedom, closed form.
double p_two_sided_df4(double t) {
  const double u = t * t / (4.0 + t * t);
  const double f = 0.5 + 0.375 * (std::abs(t) / std::sqrt(1.0 + t * t / 4.0)) * (1.0 - u / 3.0);
  return 2.0 * (1.0 - f);
}

Decision decided(Outcome o) { return Decision{{}, o, 0.0, 0.0}; }

}  // namespace

TEST(Perplexity, UniformModel) {
  const MleModel m(uniform_table());
  const PairList test{{0, 0}, {0, 1}, {0, 3}};
  const auto r = perplexity(m, std::span<const Pair>(test));
  EXPECT_NEAR(r.value, 4.0, 1e-12);
  EXPECT_FALSE(r.infinite);
  EXPECT_EQ(r.n, 3u);
}

TEST(Perplexity, ConstantProbability) {
  // P(x|w) = 1/10 for every test pair
  std::vector<CountEntry> row;
  for (WordId w = 0; w < 10; ++w) row.push_back({w, 3});
  const MleModel m(std::make_shared<const PairCountTable>(PairCountTable::from_rows({row}, 10)));
  const PairList test(7, Pair{0, 4});
  EXPECT_NEAR(perplexity(m, std::span<const Pair>(test)).value, 10.0, 1e-12);
}

TEST(Perplexity, ZeroProbabilityIsInfiniteAndNamesThePair) {
  const auto t = micro_table();
  const MleModel m(t);
  const PairList test{{0, 0}, {2, 1}, {0, 2}};
  const auto r = perplexity(m, std::span<const Pair>(test));
  EXPECT_TRUE(r.infinite);
  EXPECT_TRUE(std::isinf(r.value));
  ASSERT_TRUE(r.offending.has_value());
  EXPECT_EQ(*r.offending, (Pair{2, 1}));
  const auto k = katz_backoff(t);
  EXPECT_FALSE(perplexity(k, std::span<const Pair>(test)).infinite);
}

TEST(Perplexity, EmptyTestSetIsAnError) {
  const MleModel m(uniform_table());
  EXPECT_THROW(perplexity(m, std::span<const Pair>()), Error);
}

TEST(Perplexity, InvariantUnderReordering) {
  rng::Stream s(4);
  const auto t = std::make_shared<const PairCountTable>(random_table(s, 10, 12, 0.4, 7));
  const auto k = katz_backoff(t);
  PairList test;
  for (int i = 0; i < 500; ++i) test.push_back({static_cast<WordId>(s.bounded(10)), static_cast<WordId>(s.bounded(12))});
  const double ref = perplexity(k, std::span<const Pair>(test)).value;
  for (int trial = 0; trial < 10; ++trial) {
    s.shuffle(std::span<Pair>(test));
    EXPECT_EQ(perplexity(k, std::span<const Pair>(test)).value, ref);
  }
}

TEST(Perplexity, UnseenSubset) {
  const auto t = micro_table();
  const auto k = katz_backoff(t);
  const PairList test{{0, 0}, {0, 2}, {2, 0}, {2, 1}};
  const auto r = unseen_subset_perplexity(k, std::span<const Pair>(test), *t);
  EXPECT_EQ(r.n_unseen, 3u);
  EXPECT_DOUBLE_EQ(r.unseen_fraction, 0.75);
  ASSERT_TRUE(r.unseen.has_value());
  EXPECT_NEAR(r.unseen->value, std::pow(0.5 * 0.45 * 0.30, -1.0 / 3.0), 1e-12);
  const PairList seen{{0, 0}};
  EXPECT_FALSE(unseen_subset_perplexity(k, std::span<const Pair>(seen), *t).unseen.has_value());
}

TEST(Pseudowords, PairsAdjacentFrequencyRanks) {
  // make 10, take 8, fetch 3, renegotiate 2, obtain 1
  const std::vector<std::uint64_t> f{3, 10, 1, 8, 2};
  const auto pw = build_pseudowords(std::span<const std::uint64_t>(f));
  ASSERT_EQ(pw.pairs.size(), 2u);
  EXPECT_EQ(pw.pairs[0], (std::array<WordId, 2>{1, 3}));
  EXPECT_EQ(pw.pairs[1], (std::array<WordId, 2>{0, 4}));
  EXPECT_EQ(pw.leftover, std::optional<WordId>(2));
  EXPECT_EQ(pw.partner_of(3), std::optional<WordId>(1));
  EXPECT_FALSE(pw.partner_of(2).has_value());
  EXPECT_THROW(pw.partner_of(5), UnknownWord);
}

TEST(Pseudowords, TiesByIdAndEvenVocabulary) {
  const std::vector<std::uint64_t> f{5, 5, 5, 5};
  const auto pw = build_pseudowords(std::span<const std::uint64_t>(f));
  EXPECT_EQ(pw.pairs[0], (std::array<WordId, 2>{0, 1}));
  EXPECT_EQ(pw.pairs[1], (std::array<WordId, 2>{2, 3}));
  EXPECT_FALSE(pw.leftover.has_value());
  const std::vector<std::uint64_t> one{5};
  EXPECT_THROW(build_pseudowords(std::span<const std::uint64_t>(one)), Error);
}

TEST(Pseudowords, EveryWordInExactlyOnePair) {
  rng::Stream s(6);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<std::uint64_t> f(2 + s.bounded(60));
    for (auto& x : f) x = s.bounded(20);
    const auto pw = build_pseudowords(std::span<const std::uint64_t>(f));
    std::vector<int> seen(f.size(), 0);
    for (const auto& p : pw.pairs) {
      ++seen[p[0]];
      ++seen[p[1]];
      EXPECT_GE(f[p[0]], f[p[1]]);
    }
    if (pw.leftover) ++seen[*pw.leftover];
    for (int x : seen) EXPECT_EQ(x, 1);
    EXPECT_EQ(pw.leftover.has_value(), f.size() % 2 == 1);
  }
}

TEST(Instances, FiltersLeftoverAndSeenDistractor) {
  // w2 frequencies: 0:3 1:2 2:1 -> pair (0,1), leftover 2
  const auto train = PairCountTable::from_rows({{{0, 3}, {2, 1}}, {{1, 2}}}, 3);
  const auto pw = build_pseudowords(train);
  const PairList unseen{{0, 1}, {1, 0}, {0, 2}, {1, 2}};
  const auto s = make_instances(unseen, pw, train);
  // (0,1): distractor 0 was seen with w1 0; (1,0): distractor 1 was seen with w1 1
  EXPECT_EQ(s.dropped_seen_distractor, 2u);
  EXPECT_EQ(s.dropped_leftover, 2u);
  EXPECT_TRUE(s.instances.empty());
  const PairList ok{{1, 2}};
  const auto pw2 = build_pseudowords(std::vector<std::uint64_t>{3, 1, 2});
  const auto s2 = make_instances(ok, pw2, train);
  ASSERT_EQ(s2.instances.size(), 1u);
  EXPECT_EQ(s2.instances[0], (TestInstance{1, 2, 0}));
}

TEST(Decisions, CompareAndErrorRate) {
  EXPECT_EQ(compare_scores(0.3, 0.2), Outcome::Correct);
  EXPECT_EQ(compare_scores(0.2, 0.3), Outcome::Incorrect);
  EXPECT_EQ(compare_scores(0.25, 0.25), Outcome::Tie);
  EXPECT_EQ(compare_scores(0.1 + 0.2, 0.3), Outcome::Correct);
  const std::vector<Decision> d{decided(Outcome::Correct), decided(Outcome::Incorrect), decided(Outcome::Tie), decided(Outcome::Correct)};
  EXPECT_DOUBLE_EQ(error_rate(d), 1.5 / 4.0);
  EXPECT_THROW(error_rate(std::span<const Decision>()), Error);
}

TEST(Decisions, MleTiesEveryUnseenInstance) {
  const MleModel m(micro_table());
  const auto d = disambiguate(m, {2, 0, 1});
  EXPECT_EQ(d.outcome, Outcome::Tie);
  EXPECT_EQ(d.truth_score, 0.0);
}

TEST(Decisions, UndefinedRowIsATie) {
  const MleModel m(std::make_shared<const PairCountTable>(PairCountTable::from_rows({{{0, 1}}, {}}, 2)));
  const auto d = disambiguate(m, {1, 0, 1});
  EXPECT_EQ(d.outcome, Outcome::Tie);
}

TEST(Decisions, SmoothedDecisionFollowsSimilarityEstimate) {
  // Both alternatives are unseen, so they share alpha(w1) and the decision
  // is the comparison of the redistribution estimates.
  rng::Stream s(41);
  int decided_cases = 0;
  for (int trial = 0; trial < 10; ++trial) {
    const auto t = std::make_shared<const PairCountTable>(random_table(s, 15, 20, 0.25, 4));
    const auto mle = std::make_shared<const MleModel>(t);
    const auto mat = build_similarity_matrix(*mle, Measure::Js, {6.0, kAllNeighbors, kNoThreshold});
    const SmoothedModel<MleModel> sm(std::make_shared<const KatzModel>(katz_backoff(t)), mat, mle, mle_unigram(*t, Side::V2), 0.0);
    for (WordId w1 = 0; w1 < 15; ++w1)
      for (WordId a = 0; a < 20; ++a)
        for (WordId b = a + 1; b < 20; ++b) {
          if (t->count(w1, a) || t->count(w1, b) || sm.alpha(w1) == 0.0) continue;
          const auto o = compare_scores(p_sim(a, mat.row(w1), *mle), p_sim(b, mat.row(w1), *mle));
          const auto d = disambiguate(sm, {w1, a, b});
          if (o == Outcome::Tie) EXPECT_EQ(d.outcome, Outcome::Tie);
          else EXPECT_NE(d.outcome, o == Outcome::Correct ? Outcome::Incorrect : Outcome::Correct);
          ++decided_cases;
        }
  }
  EXPECT_GT(decided_cases, 100);
}

TEST(Decisions, WeightScaleDoesNotChangePSim) {
  const MleModel m(micro_table());
  auto nl = neighbors(2, m, Measure::Js, {2.0, kAllNeighbors, kNoThreshold});
  const double before = p_sim(0, nl, m);
  for (auto& n : nl.entries) n.weight *= 8.0;
  EXPECT_NEAR(p_sim(0, nl, m), before, 1e-15);
}

TEST(Voting, MajorityOfNeighboursAbstainingOnTies) {
  // evidence rows: 0 prefers w2 0, 1 prefers w2 0, 2 prefers w2 1, 3 is indifferent
  const auto t = std::make_shared<const PairCountTable>(
      PairCountTable::from_rows({{{0, 3}, {1, 1}}, {{0, 2}}, {{1, 5}}, {{0, 1}, {1, 1}}, {{2, 1}}}, 3));
  const MleModel m(t);
  NeighborList nl;
  nl.owner = 4;
  for (WordId w : {3u, 2u, 0u, 1u}) nl.entries.push_back({w, 0.0, 1.0});
  const TestInstance inst{4, 0, 1};
  auto d = vote_disambiguate(nl, m, inst);
  EXPECT_EQ(d.truth_score, 2.0);
  EXPECT_EQ(d.distractor_score, 1.0);
  EXPECT_EQ(d.outcome, Outcome::Correct);
  EXPECT_EQ(vote_disambiguate(truncate(nl, 2), m, inst).outcome, Outcome::Incorrect);
  EXPECT_EQ(vote_disambiguate(truncate(nl, 1), m, inst).outcome, Outcome::Tie);
  EXPECT_EQ(vote_disambiguate(truncate(nl, 3), m, inst).outcome, Outcome::Tie);
  EXPECT_EQ(truncate(nl, 10).size(), 4u);
}

TEST(Rand, WeightsAreUniformAndDeterministic) {
  double sum = 0.0;
  int n = 0;
  for (WordId a = 0; a < 100; ++a)
    for (WordId b = 0; b < 100; ++b) {
      const double w = rand_weight(7, a, b);
      ASSERT_GT(w, 0.0);
      ASSERT_LT(w, 1.0);
      sum += w;
      ++n;
    }
  EXPECT_NEAR(sum / n, 0.5, 0.01);
  EXPECT_EQ(rand_weight(7, 3, 4), rand_weight(7, 3, 4));
  EXPECT_NE(rand_weight(7, 3, 4), rand_weight(7, 4, 3));
  EXPECT_NE(rand_weight(7, 3, 4), rand_weight(8, 3, 4));
}

TEST(Rand, MatrixCoversOtherRowsSortedByWeight) {
  const auto t = std::make_shared<const PairCountTable>(PairCountTable::from_rows({{{0, 1}}, {{1, 1}}, {}, {{0, 2}}}, 2));
  const MleModel m(t);
  const auto mat = build_rand_matrix(m, 3);
  EXPECT_EQ(mat.measure(), Measure::Random);
  ASSERT_EQ(mat.row(0).size(), 2u);
  EXPECT_GE(mat.row(0).entries[0].weight, mat.row(0).entries[1].weight);
  for (const auto& n : mat.row(0).entries) EXPECT_NE(n.id, 2u);
  EXPECT_TRUE(mat.row(2).empty());
}

TEST(Grid, ProductOrderAndLinspace) {
  const std::vector<double> b{1, 2}, g{0, 0.5}, t{kNoThreshold};
  const std::vector<std::size_t> k{kAllNeighbors};
  const auto grid = make_grid(b, g, k, t);
  ASSERT_EQ(grid.size(), 4u);
  EXPECT_EQ(grid[1], (ParamPoint{1, 0.5, kAllNeighbors, kNoThreshold}));
  EXPECT_EQ(grid[2].beta, 2.0);
  const auto l = linspace_step(0.5, 8.0, 0.5);
  ASSERT_EQ(l.size(), 16u);
  EXPECT_DOUBLE_EQ(l.back(), 8.0);
  EXPECT_EQ(linspace_step(1, 30, 1).size(), 30u);
  EXPECT_THROW(linspace_step(1, 0, 1), Error);
}

TEST(Grid, SearchTakesFirstMinimum) {
  std::vector<ParamPoint> grid;
  for (double b : {1.0, 2.0, 3.0, 4.0}) grid.push_back({b});
  const std::vector<double> e{0.3, 0.2, 0.2, 0.4};
  const auto r = grid_search(std::span<const ParamPoint>(grid), [&](const ParamPoint& p) { return e[static_cast<std::size_t>(p.beta) - 1]; });
  EXPECT_EQ(r.index, 1u);
  EXPECT_EQ(r.best.beta, 2.0);
  EXPECT_EQ(r.error, 0.2);
  EXPECT_EQ(r.errors, e);
  EXPECT_THROW(grid_search(std::span<const ParamPoint>(), [](const ParamPoint&) { return 0.0; }), Error);
}

TEST(CrossValidation, TunesOnOtherFoldsOnly) {
  // Instances carry their fold number in w1; the decider is correct only on
  // instances whose fold matches beta, so tuning must avoid the held-out fold.
  std::vector<std::vector<TestInstance>> folds(4);
  for (WordId f = 0; f < 4; ++f)
    for (int i = 0; i < int(f) + 2; ++i) folds[f].push_back({f, 0, 1});
  Method m;
  m.name = "probe";
  for (double b : {0.0, 1.0, 2.0, 3.0}) m.grid.push_back({b});
  m.decide = [](const ParamPoint& p, std::span<const TestInstance> set) {
    std::vector<Decision> out;
    for (const auto& i : set) out.push_back(decided(i.w1 == static_cast<WordId>(p.beta) ? Outcome::Correct : Outcome::Incorrect));
    return out;
  };
  const auto rep = cross_validate(folds, m);
  ASSERT_EQ(rep.folds.size(), 4u);
  // the largest other fold wins the tuning, and it is never the held-out one
  EXPECT_EQ(rep.folds[0].params.beta, 3.0);
  EXPECT_EQ(rep.folds[3].params.beta, 2.0);
  for (const auto& f : rep.folds) EXPECT_EQ(f.error, 1.0);
  EXPECT_DOUBLE_EQ(rep.folds[0].tuning_error, 1.0 - 5.0 / 12.0);
  EXPECT_EQ(rep.mean_error(), 1.0);
  EXPECT_THROW(cross_validate({folds[0]}, m), Error);
}

TEST(TTest, KnownSample) {
  const std::vector<double> a{.30, .32, .29, .31, .33}, b{.33, .35, .30, .34, .36};
  const auto r = paired_t_test(a, b);
  EXPECT_EQ(r.df, 4u);
  EXPECT_NEAR(r.mean_difference, -0.026, 1e-15);
  // differences -.03 -.03 -.01 -.03 -.03: s = sqrt(8e-5), se = 0.004
  EXPECT_NEAR(r.t, -6.5, 1e-9);
  EXPECT_NEAR(r.p, p_two_sided_df4(6.5), 1e-12);
  EXPECT_NEAR(r.p, 0.002890007117100729, 1e-12);
  EXPECT_FALSE(r.degenerate);
  const auto s = paired_t_test(b, a);
  EXPECT_NEAR(s.t, 6.5, 1e-9);
  EXPECT_NEAR(s.p, r.p, 1e-15);
}

TEST(TTest, DegenerateAndInvalidInput) {
  const std::vector<double> a{.1, .1, .1, .1, .1}, b{.2, .2, .2, .2, .2};
  const auto same = paired_t_test(a, a);
  EXPECT_TRUE(same.degenerate);
  EXPECT_EQ(same.t, 0.0);
  EXPECT_EQ(same.p, 1.0);
  const auto shift = paired_t_test(a, b);
  EXPECT_TRUE(shift.degenerate);
  EXPECT_TRUE(std::isinf(shift.t));
  EXPECT_LT(shift.t, 0.0);
  EXPECT_EQ(shift.p, 0.0);
  EXPECT_THROW(paired_t_test(std::vector<double>{.1}, std::vector<double>{.2}), Error);
  EXPECT_THROW(paired_t_test(a, std::vector<double>{.1, .2}), Error);
}
