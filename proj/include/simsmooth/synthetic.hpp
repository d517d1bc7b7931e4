#pragma once

// Seeded two-class generator for (noun, verb) pairs.
//
// Each verb belongs to one of two latent classes (alternating by id) and the
// classes have equally shaped Zipf profiles over their own verbs, so verbs
// 2r and 2r+1 have the same expected frequency. A pair is drawn by picking a
// noun from a Zipf distribution, a class from the noun's class mixture, and a
// verb from that class's profile mixed with `leakage` of the other class.
// Every noun except the `generic` most frequent ones prefers its class with
// weight `purity`. A generic noun draws from its own profile (the same Zipf
// shape over a seeded permutation of all verbs) with probability
// `idiosyncrasy` and from an even class mixture otherwise.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "simsmooth/corpus.hpp"
#include "simsmooth/rng.hpp"

namespace simsmooth {

struct SyntheticParams {
  std::size_t nouns = 200;
  std::size_t verbs = 100;
  std::size_t pairs = 30000;
  double noun_exponent = 1.0;
  double verb_exponent = 1.0;
  double purity = 0.95;
  double leakage = 0.05;
  std::size_t generic = 20;
  double idiosyncrasy = 0.8;
  std::uint64_t seed = 1;
};

namespace detail {

inline std::vector<double> zipf_cdf(std::size_t n, double exponent) {
  std::vector<double> cdf(n);
  double s = 0.0;
  for (std::size_t r = 0; r < n; ++r) cdf[r] = (s += 1.0 / std::pow(static_cast<double>(r + 1), exponent));
  for (auto& c : cdf) c /= s;
  return cdf;
}

inline std::size_t sample_cdf(const std::vector<double>& cdf, double u) {
  const auto it = std::lower_bound(cdf.begin(), cdf.end(), u);
  return it == cdf.end() ? cdf.size() - 1 : static_cast<std::size_t>(it - cdf.begin());
}

inline std::string numbered(char prefix, std::size_t i, std::size_t n) {
  const int width = static_cast<int>(std::to_string(n > 0 ? n - 1 : 0).size());
  char buf[32];
  std::snprintf(buf, sizeof buf, "%c%0*zu", prefix, width, i);
  return buf;
}

}  // namespace detail

inline bool is_generic_noun(const SyntheticParams& p, std::size_t noun) { return noun < p.generic; }

// Preferred class of a non-generic noun.
inline int noun_class(std::size_t noun) { return static_cast<int>(noun % 2); }

inline int verb_class(std::size_t verb) { return static_cast<int>(verb % 2); }

// Nouns are named n000.., verbs v00..; ids follow the numbering and all words
// are interned whether or not they are drawn.
inline Corpus generate_two_class_corpus(const SyntheticParams& p) {
  if (p.nouns == 0 || p.verbs < 2) throw Error("synthetic corpus needs at least one noun and two verbs");
  if (!(p.purity >= 0.0 && p.purity <= 1.0) || !(p.idiosyncrasy >= 0.0 && p.idiosyncrasy <= 1.0) || !(p.leakage >= 0.0 && p.leakage <= 1.0)) throw Error("purity and leakage must lie in [0, 1]");
  Corpus c;
  for (std::size_t i = 0; i < p.nouns; ++i) c.vocab.v1.intern(detail::numbered('n', i, p.nouns));
  for (std::size_t j = 0; j < p.verbs; ++j) c.vocab.v2.intern(detail::numbered('v', j, p.verbs));

  const auto noun_cdf = detail::zipf_cdf(p.nouns, p.noun_exponent);
  const std::size_t per_class[2] = {(p.verbs + 1) / 2, p.verbs / 2};
  const std::vector<double> class_cdf[2] = {detail::zipf_cdf(per_class[0], p.verb_exponent), detail::zipf_cdf(per_class[1], p.verb_exponent)};

  const auto own_cdf = detail::zipf_cdf(p.verbs, p.verb_exponent);
  std::vector<std::vector<std::size_t>> own(std::min(p.generic, p.nouns));
  rng::Stream perm(rng::derive(p.seed, "synthetic-generic"));
  for (auto& o : own) {
    o.resize(p.verbs);
    for (std::size_t j = 0; j < p.verbs; ++j) o[j] = j;
    perm.shuffle(std::span<std::size_t>(o));
  }

  rng::Stream s(rng::derive(p.seed, "synthetic"));
  c.pairs.reserve(p.pairs);
  for (std::size_t i = 0; i < p.pairs; ++i) {
    const auto noun = detail::sample_cdf(noun_cdf, s.uniform());
    const bool generic = is_generic_noun(p, noun);
    if (generic && s.uniform() < p.idiosyncrasy) {
      const auto verb = own[noun][detail::sample_cdf(own_cdf, s.uniform())];
      c.pairs.push_back({static_cast<WordId>(noun), static_cast<WordId>(verb)});
      continue;
    }
    const double prefer = generic ? 0.5 : p.purity;
    int cls = s.uniform() < prefer ? noun_class(noun) : 1 - noun_class(noun);
    if (s.uniform() < p.leakage) cls = 1 - cls;
    const auto rank = detail::sample_cdf(class_cdf[cls], s.uniform());
    const auto verb = 2 * rank + static_cast<std::size_t>(cls);
    c.pairs.push_back({static_cast<WordId>(noun), static_cast<WordId>(verb)});
  }
  return c;
}

}  // namespace simsmooth
