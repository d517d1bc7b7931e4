#pragma once

// Fixtures and brute-force reference implementations shared by the tests.
// The references work on dense vectors over all of V2 and follow the
// textbook definitions, so they share no code with the library.

#include <cmath>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "simsmooth/corpus.hpp"
#include "simsmooth/distribution.hpp"
#include "simsmooth/rng.hpp"

namespace simsmooth::testing {

// a: x x y    b: x y z z    c: z
inline const char* kMicroCorpus =
    "a\tx\n"
    "a\tx\n"
    "a\ty\n"
    "b\tx\n"
    "b\ty\n"
    "b\tz\n"
    "b\tz\n"
    "c\tz\n";

inline Corpus micro_corpus() {
  std::istringstream in(kMicroCorpus);
  return ingest_pairs(in, "micro");
}

inline std::shared_ptr<const PairCountTable> micro_table() { return std::make_shared<const PairCountTable>(count(micro_corpus())); }

using Dense = std::vector<double>;

inline Dense to_dense(const SparseDistribution& d, std::size_t n) {
  Dense out(n, 0.0);
  for (const auto& m : d.entries()) out[m.w2] = m.p;
  return out;
}

inline SparseDistribution to_sparse(const Dense& d) { return SparseDistribution::from_dense(d); }

inline double naive_kl(const Dense& p, const Dense& q) {
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i)
    if (p[i] > 0.0) s += p[i] * std::log10(p[i] / q[i]);
  return s;
}

inline bool naive_kl_defined(const Dense& p, const Dense& q) {
  for (std::size_t i = 0; i < p.size(); ++i)
    if (p[i] > 0.0 && !(q[i] > 0.0)) return false;
  return true;
}

// Average of the two divergences to the explicit mean distribution.
inline double naive_js(const Dense& p, const Dense& q) {
  Dense m(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) m[i] = 0.5 * (p[i] + q[i]);
  return 0.5 * (naive_kl(p, m) + naive_kl(q, m));
}

inline double naive_l1(const Dense& p, const Dense& q) {
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - q[i]);
  return s;
}

// sum_{w2} P(w1|w2) P(w1'|w2) P(w2) / P(w1), all from raw counts.
inline double naive_confusion(const PairCountTable& t, WordId w1, WordId w1p) {
  const double n = static_cast<double>(t.total());
  double s = 0.0;
  for (WordId w2 = 0; w2 < t.v2_size(); ++w2) {
    const double c2 = static_cast<double>(t.w2_marginal(w2));
    if (c2 == 0.0) continue;
    const double p1 = static_cast<double>(t.count(w1, w2)) / c2;
    const double p1p = static_cast<double>(t.count(w1p, w2)) / c2;
    s += p1 * p1p * (c2 / n);
  }
  return s / (static_cast<double>(t.w1_marginal(w1)) / n);
}

// Random distribution over n outcomes with a random support (at least one
// outcome) and random masses.
inline Dense random_distribution(rng::Stream& s, std::size_t n, double keep = 0.5) {
  Dense d(n, 0.0);
  double total = 0.0;
  while (total == 0.0) {
    for (auto& x : d) {
      x = s.uniform() < keep ? s.uniform() : 0.0;
      total += x;
    }
  }
  for (auto& x : d) x /= total;
  return d;
}

// Random count table with v1 x v2 cells, roughly `fill` of them nonzero.
inline PairCountTable random_table(rng::Stream& s, std::size_t v1, std::size_t v2, double fill, std::uint64_t max_count) {
  std::vector<std::vector<CountEntry>> rows(v1);
  for (auto& r : rows)
    for (WordId w2 = 0; w2 < v2; ++w2)
      if (s.uniform() < fill) r.push_back({w2, 1 + s.bounded(max_count)});
  // every row and column gets at least one count
  for (WordId w1 = 0; w1 < v1; ++w1)
    if (rows[w1].empty()) rows[w1].push_back({static_cast<WordId>(s.bounded(v2)), 1});
  auto t = PairCountTable::from_rows(rows, v2);
  for (WordId w2 = 0; w2 < v2; ++w2) {
    if (t.w2_marginal(w2) > 0) continue;
    auto& r = rows[s.bounded(v1)];
    auto it = std::lower_bound(r.begin(), r.end(), w2, [](const CountEntry& e, WordId w) { return e.w2 < w; });
    r.insert(it, {w2, 1});
  }
  return PairCountTable::from_rows(std::move(rows), v2);
}

}  // namespace simsmooth::testing
