#pragma once

// Evaluation protocols: test-set perplexity and pseudo-word disambiguation
// with cross-validated grid search, the RAND and voting baselines, and the
// paired t-test used to compare methods fold by fold.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "simsmooth/basemodel.hpp"
#include "simsmooth/corpus.hpp"
#include "simsmooth/rng.hpp"
#include "simsmooth/similarity.hpp"
#include "simsmooth/smoothing.hpp"

namespace simsmooth {

// ---------------------------------------------------------------- perplexity

struct PerplexityResult {
  double value = 0.0;               // +inf when some pair has probability 0
  bool infinite = false;
  std::optional<Pair> offending;    // first zero-probability pair
  std::size_t n = 0;
};

// [prod P(w2|w1)]^(-1/N), accumulated in log space. The log terms are summed
// in sorted order so the result does not depend on the order of `test`.
template <ConditionalModel M>
PerplexityResult perplexity(const M& model, std::span<const Pair> test) {
  if (test.empty()) throw Error("perplexity of an empty test set is undefined");
  PerplexityResult r;
  r.n = test.size();
  std::vector<double> logs;
  logs.reserve(test.size());
  for (const auto& p : test) {
    double prob = 0.0;
    try {
      prob = model.prob(p.w1, p.w2);
    } catch (const UndefinedRow&) {
      prob = 0.0;
    }
    if (!(prob > 0.0)) {
      if (!r.infinite) r.offending = p;
      r.infinite = true;
      continue;
    }
    logs.push_back(std::log(prob));
  }
  if (r.infinite) {
    r.value = std::numeric_limits<double>::infinity();
    return r;
  }
  std::sort(logs.begin(), logs.end());
  double s = 0.0;
  for (double l : logs) s += l;
  r.value = std::exp(-s / static_cast<double>(test.size()));
  return r;
}

struct UnseenPerplexity {
  PerplexityResult overall;
  std::optional<PerplexityResult> unseen;  // nullopt: no unseen pairs in the test set
  double unseen_fraction = 0.0;
  std::size_t n_unseen = 0;
};

template <ConditionalModel M>
UnseenPerplexity unseen_subset_perplexity(const M& model, std::span<const Pair> test, const PairCountTable& train) {
  UnseenPerplexity r;
  r.overall = perplexity(model, test);
  const auto unseen = extract_unseen(test, train);
  r.n_unseen = unseen.size();
  r.unseen_fraction = static_cast<double>(unseen.size()) / static_cast<double>(test.size());
  if (!unseen.empty()) r.unseen = perplexity(model, std::span<const Pair>(unseen));
  return r;
}

// --------------------------------------------------------------- pseudowords

struct PseudowordMap {
  std::vector<std::array<WordId, 2>> pairs;   // frequency-adjacent words
  std::vector<std::optional<WordId>> partner;  // per w2
  std::optional<WordId> leftover;              // odd word out, if any

  std::optional<WordId> partner_of(WordId w2) const {
    if (w2 >= partner.size()) throw UnknownWord("V2", w2);
    return partner[w2];
  }
};

// Ranks V2 by descending frequency (ties by ascending id) and pairs ranks
// (1,2), (3,4), ...
inline PseudowordMap build_pseudowords(std::span<const std::uint64_t> freqs) {
  if (freqs.size() < 2) throw Error("pseudowords need at least two words");
  std::vector<WordId> order(freqs.size());
  for (WordId i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](WordId a, WordId b) { return freqs[a] != freqs[b] ? freqs[a] > freqs[b] : a < b; });
  PseudowordMap m;
  m.partner.assign(freqs.size(), std::nullopt);
  for (std::size_t i = 0; i + 1 < order.size(); i += 2) {
    m.pairs.push_back({order[i], order[i + 1]});
    m.partner[order[i]] = order[i + 1];
    m.partner[order[i + 1]] = order[i];
  }
  if (order.size() % 2 == 1) m.leftover = order.back();
  return m;
}

inline PseudowordMap build_pseudowords(const PairCountTable& train) {
  std::vector<std::uint64_t> f(train.v2_size());
  for (WordId w = 0; w < f.size(); ++w) f[w] = train.w2_marginal(w);
  return build_pseudowords(f);
}

struct TestInstance {
  WordId w1 = 0;
  WordId truth = 0;
  WordId distractor = 0;

  friend bool operator==(const TestInstance&, const TestInstance&) = default;
};

struct InstanceSet {
  std::vector<TestInstance> instances;
  std::size_t dropped_leftover = 0;          // true word had no pseudoword partner
  std::size_t dropped_seen_distractor = 0;   // (w1, distractor) occurs in training
};

// Replaces each unseen (w1, w2) by its pseudoword. Instances are kept only
// when both alternatives are unseen with w1 in `train`, so that every test
// decision is between two unseen pairs.
inline InstanceSet make_instances(std::span<const Pair> unseen, const PseudowordMap& pw, const PairCountTable& train) {
  InstanceSet s;
  for (const auto& p : unseen) {
    auto other = pw.partner_of(p.w2);
    if (!other) {
      ++s.dropped_leftover;
      continue;
    }
    if (train.count(p.w1, *other) > 0) {
      ++s.dropped_seen_distractor;
      continue;
    }
    s.instances.push_back({p.w1, p.w2, *other});
  }
  return s;
}

// ----------------------------------------------------------------- decisions

enum class Outcome { Correct, Incorrect, Tie };

inline const char* to_string(Outcome o) {
  switch (o) {
    case Outcome::Correct: return "correct";
    case Outcome::Incorrect: return "incorrect";
    case Outcome::Tie: return "tie";
  }
  return "?";
}

struct Decision {
  TestInstance instance;
  Outcome outcome = Outcome::Tie;
  double truth_score = 0.0;
  double distractor_score = 0.0;
};

// Exact comparison: only bit-identical scores tie.
inline Outcome compare_scores(double truth, double distractor) {
  if (truth > distractor) return Outcome::Correct;
  if (truth < distractor) return Outcome::Incorrect;
  return Outcome::Tie;
}

// An undefined row scores both alternatives 0, which is a tie.
template <ConditionalModel M>
Decision disambiguate(const M& model, const TestInstance& inst) {
  Decision d{inst, Outcome::Tie, 0.0, 0.0};
  if (model.has_row(inst.w1)) {
    d.truth_score = model.prob(inst.w1, inst.truth);
    d.distractor_score = model.prob(inst.w1, inst.distractor);
  }
  d.outcome = compare_scores(d.truth_score, d.distractor_score);
  return d;
}

template <ConditionalModel M>
std::vector<Decision> disambiguate_all(const M& model, std::span<const TestInstance> set) {
  std::vector<Decision> out;
  out.reserve(set.size());
  for (const auto& inst : set) out.push_back(disambiguate(model, inst));
  return out;
}

// (#incorrect + #ties / 2) / N
inline double error_rate(std::span<const Decision> decisions) {
  if (decisions.empty()) throw Error("error rate of an empty decision list is undefined");
  double bad = 0.0;
  for (const auto& d : decisions) {
    if (d.outcome == Outcome::Incorrect) bad += 1.0;
    else if (d.outcome == Outcome::Tie) bad += 0.5;
  }
  return bad / static_cast<double>(decisions.size());
}

inline NeighborList truncate(const NeighborList& nl, std::size_t k) {
  NeighborList out = nl;
  if (out.entries.size() > k) out.entries.resize(k);
  out.params.k = k;
  return out;
}

// Unweighted majority vote of the listed neighbours; each votes for the
// alternative it gives higher probability and abstains on its own tie.
template <ConditionalModel Evidence>
Decision vote_disambiguate(const NeighborList& neighbors, const Evidence& evidence, const TestInstance& inst) {
  Decision d{inst, Outcome::Tie, 0.0, 0.0};
  for (const auto& n : neighbors.entries) {
    const double a = evidence.prob(n.id, inst.truth);
    const double b = evidence.prob(n.id, inst.distractor);
    if (a > b) d.truth_score += 1.0;
    else if (b > a) d.distractor_score += 1.0;
  }
  d.outcome = compare_scores(d.truth_score, d.distractor_score);
  return d;
}

// ---------------------------------------------------------------------- RAND

inline double rand_weight(std::uint64_t seed, WordId w1, WordId w1p) {
  const std::uint64_t key = (static_cast<std::uint64_t>(w1) << 32) | w1p;
  return rng::unit_open(rng::splitmix64(rng::splitmix64(seed) ^ rng::splitmix64(key)));
}

// S(w1) = every other word of V1 that has a row, each with an independent
// uniform (0,1) weight fixed by (seed, w1, w1').
template <ConditionalModel M>
NeighborList rand_weights(WordId w1, const M& model, std::uint64_t seed) {
  NeighborList nl;
  nl.owner = w1;
  nl.measure = Measure::Random;
  nl.params = {0.0, kAllNeighbors, kNoThreshold};
  for (WordId w = 0; w < model.v1_size(); ++w) {
    if (w == w1 || !model.has_row(w)) continue;
    const double x = rand_weight(seed, w1, w);
    nl.entries.push_back({w, x, x});
  }
  std::sort(nl.entries.begin(), nl.entries.end(), [](const Neighbor& a, const Neighbor& b) { return detail::closer(Measure::Random, a, b); });
  return nl;
}

template <ConditionalModel M>
SimilarityMatrix build_rand_matrix(const M& model, std::uint64_t seed) {
  std::vector<NeighborList> rows;
  rows.reserve(model.v1_size());
  for (WordId w = 0; w < model.v1_size(); ++w) {
    if (model.has_row(w)) {
      rows.push_back(rand_weights(w, model, seed));
    } else {
      NeighborList nl;
      nl.owner = w;
      nl.measure = Measure::Random;
      rows.push_back(std::move(nl));
    }
  }
  return SimilarityMatrix(Measure::Random, "rand", std::move(rows), {0.0, kAllNeighbors, kNoThreshold});
}

// ------------------------------------------------------------- grid search

struct ParamPoint {
  double beta = 4.0;
  double gamma = 0.0;
  std::size_t k = kAllNeighbors;
  double t = kNoThreshold;

  SelectionParams selection() const { return {beta, k, t}; }

  friend bool operator==(const ParamPoint&, const ParamPoint&) = default;
  friend bool operator<(const ParamPoint& a, const ParamPoint& b) {
    return std::tie(a.beta, a.gamma, a.k, a.t) < std::tie(b.beta, b.gamma, b.k, b.t);
  }
};

// Cartesian product, beta varying slowest.
inline std::vector<ParamPoint> make_grid(std::span<const double> betas, std::span<const double> gammas, std::span<const std::size_t> ks,
                                         std::span<const double> ts) {
  std::vector<ParamPoint> grid;
  for (double b : betas)
    for (double g : gammas)
      for (std::size_t k : ks)
        for (double t : ts) grid.push_back({b, g, k, t});
  return grid;
}

// Evenly spaced values from `from` to `to` inclusive.
inline std::vector<double> linspace_step(double from, double to, double step) {
  if (!(step > 0.0) || to < from) throw Error("bad grid range");
  std::vector<double> out;
  const auto n = static_cast<std::size_t>(std::floor((to - from) / step + 1e-9));
  for (std::size_t i = 0; i <= n; ++i) out.push_back(from + step * static_cast<double>(i));
  return out;
}

struct GridSearchResult {
  std::size_t index = 0;
  ParamPoint best;
  double error = 0.0;
  std::vector<double> errors;  // parallel to the grid
};

// Lowest error wins; ties go to the earliest grid point.
template <class Evaluate>
GridSearchResult grid_search(std::span<const ParamPoint> grid, Evaluate&& evaluate) {
  if (grid.empty()) throw Error("grid search needs a non-empty grid");
  GridSearchResult r;
  r.errors.reserve(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double e = evaluate(grid[i]);
    r.errors.push_back(e);
    if (i == 0 || e < r.error) {
      r.index = i;
      r.error = e;
    }
  }
  r.best = grid[r.index];
  return r;
}

// --------------------------------------------------------- cross-validation

using Decider = std::function<std::vector<Decision>(const ParamPoint&, std::span<const TestInstance>)>;

struct Method {
  std::string name;
  std::vector<ParamPoint> grid;  // one point when nothing is tuned
  Decider decide;
};

struct FoldResult {
  double error = 0.0;         // on the held-out fold
  ParamPoint params;          // chosen on the other folds
  double tuning_error = 0.0;
};

struct CrossValidationReport {
  std::string method;
  std::vector<FoldResult> folds;

  std::vector<double> errors() const {
    std::vector<double> e;
    for (const auto& f : folds) e.push_back(f.error);
    return e;
  }

  double mean_error() const {
    double s = 0.0;
    for (const auto& f : folds) s += f.error;
    return folds.empty() ? 0.0 : s / static_cast<double>(folds.size());
  }
};

// Fold i is the test set of run i; the remaining folds, concatenated in
// order, form its tuning set.
inline CrossValidationReport cross_validate(const std::vector<std::vector<TestInstance>>& folds, const Method& method) {
  if (folds.size() < 2) throw Error("cross-validation needs at least 2 folds");
  CrossValidationReport rep;
  rep.method = method.name;
  for (std::size_t i = 0; i < folds.size(); ++i) {
    std::vector<TestInstance> tuning;
    for (std::size_t j = 0; j < folds.size(); ++j)
      if (j != i) tuning.insert(tuning.end(), folds[j].begin(), folds[j].end());
    FoldResult fr;
    if (method.grid.size() == 1) {
      fr.params = method.grid.front();
      fr.tuning_error = error_rate(method.decide(fr.params, tuning));
    } else {
      auto gs = grid_search(method.grid, [&](const ParamPoint& p) { return error_rate(method.decide(p, tuning)); });
      fr.params = gs.best;
      fr.tuning_error = gs.error;
    }
    fr.error = error_rate(method.decide(fr.params, folds[i]));
    rep.folds.push_back(fr);
  }
  return rep;
}

// -------------------------------------------------------------- paired t-test

struct TTestResult {
  double t = 0.0;
  double p = 1.0;            // two-sided
  std::size_t df = 0;
  double mean_difference = 0.0;
  bool degenerate = false;   // differences have zero variance
};

// Paired t-test on a[i] - b[i] with n - 1 degrees of freedom.
inline TTestResult paired_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error("paired t-test needs equal-length samples");
  if (a.size() < 2) throw Error("paired t-test needs at least 2 pairs");
  const std::size_t n = a.size();
  std::vector<double> d(n);
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    d[i] = a[i] - b[i];
    mean += d[i];
  }
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double x : d) ss += (x - mean) * (x - mean);
  const double var = ss / static_cast<double>(n - 1);
  TTestResult r;
  r.df = n - 1;
  r.mean_difference = mean;
  // Relative cut-off: [0.1]*5 minus floats does not give an exactly constant
  // difference.
  double scale = 0.0;
  for (double x : d) scale = std::max(scale, std::abs(x));
  if (!(var > (scale * scale) * 1e-24)) {
    r.degenerate = true;
    if (scale == 0.0 || std::abs(mean) <= scale * 1e-12) {
      r.t = 0.0;
      r.p = 1.0;
    } else {
      r.t = mean > 0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
      r.p = 0.0;
    }
    return r;
  }
  r.t = mean / std::sqrt(var / static_cast<double>(n));
  boost::math::students_t dist(static_cast<double>(r.df));
  r.p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(r.t)));
  return r;
}

}  // namespace simsmooth
