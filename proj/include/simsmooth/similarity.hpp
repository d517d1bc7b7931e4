#pragma once

// Distributional (dis)similarity between conditioning words: KL divergence,
// Jensen-Shannon divergence, L1 distance and confusion probability, their
// weight functions, and nearest-neighbour selection. All logarithms are base
// 10, which fixes the scale of beta.

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "simsmooth/basemodel.hpp"
#include "simsmooth/distribution.hpp"

namespace simsmooth {

inline constexpr double kLog2 = 0.30102999566398119521;  // log10(2)
inline constexpr std::size_t kAllNeighbors = std::numeric_limits<std::size_t>::max();
inline constexpr double kNoThreshold = std::numeric_limits<double>::infinity();

// Random tags the RAND baseline's neighbour lists; it is not a measure of
// anything and cannot be requested by name.
enum class Measure { Kl, Js, L1, Confusion, Random };

inline const char* to_string(Measure m) {
  switch (m) {
    case Measure::Kl: return "kl";
    case Measure::Js: return "js";
    case Measure::L1: return "l1";
    case Measure::Confusion: return "conf";
    case Measure::Random: return "rand";
  }
  return "?";
}

inline Measure parse_measure(const std::string& s) {
  if (s == "kl") return Measure::Kl;
  if (s == "js") return Measure::Js;
  if (s == "l1") return Measure::L1;
  if (s == "conf") return Measure::Confusion;
  throw Error("unknown measure '" + s + "' (expected kl, js, l1 or conf)");
}

// Confusion probability is a similarity (larger is closer); the rest are
// dissimilarities.
constexpr bool is_similarity(Measure m) noexcept { return m == Measure::Confusion || m == Measure::Random; }

// D(p||q) = sum_{w in supp p} p log(p/q). nullopt when supp p is not inside
// supp q.
inline std::optional<double> kl_divergence(const SparseDistribution& p, const SparseDistribution& q) {
  double d = 0.0;
  bool defined = true;
  merge_supports(p, q, [&](WordId, double a, double b) {
    if (a > 0.0) {
      if (b > 0.0) d += a * std::log10(a / b);
      else defined = false;
    }
  });
  if (!defined) return std::nullopt;
  return std::max(d, 0.0);
}

// Common-support form of the Jensen-Shannon divergence,
//   J = log 2 + 1/2 sum_{w in C} { h(p+q) - h(p) - h(q) },  h(x) = -x log x,
// with C the words where both p and q are positive. Each bracket is
// evaluated as p log(2p/(p+q)) + q log(2q/(p+q)) - (p+q) log 2 and the
// log 2 terms are folded into the mass lying outside C, which for
// normalized inputs is the same quantity but gives exactly 0 for p == q.
inline double jensen_shannon(const SparseDistribution& p, const SparseDistribution& q) {
  double outside = 0.0;
  double inside = 0.0;
  merge_supports(p, q, [&](WordId, double a, double b) {
    if (a > 0.0 && b > 0.0) {
      const double m = a + b;
      inside += a * std::log10(2.0 * a / m) + b * std::log10(2.0 * b / m);
    } else {
      outside += a + b;
    }
  });
  const double j = 0.5 * (kLog2 * outside + inside);
  return std::clamp(j, 0.0, kLog2);
}

// L = 2 - sum_C p - sum_C q + sum_C |p - q|; as with J the constant is
// carried as the out-of-C mass.
inline double l1_distance(const SparseDistribution& p, const SparseDistribution& q) {
  double outside = 0.0;
  double inside = 0.0;
  merge_supports(p, q, [&](WordId, double a, double b) {
    if (a > 0.0 && b > 0.0) inside += std::abs(a - b);
    else outside += a + b;
  });
  return std::clamp(outside + inside, 0.0, 2.0);
}

// P_C(w1'|w1) = sum_{w2 in C} [P(w2|w1) / P(w2)] P(w2|w1') P(w1'), i.e. the
// Bayes-rewritten confusion probability. Requires maximum-likelihood
// estimates, which are the only ones here that are consistent with their
// marginals.
template <ConditionalModel M>
double confusion_probability(const M& base, WordId w1, WordId w1p) {
  if constexpr (!std::same_as<M, MleModel>) {
    throw Error(std::string("confusion probability needs a Bayes-consistent (mle) base model, got ") + to_string(base.kind()));
  } else {
    const auto& table = base.table();
    const auto p = base.distribution(w1);
    if (!base.has_row(w1p)) return 0.0;
    const auto q = base.distribution(w1p);
    const double n = static_cast<double>(table.total());
    const double prior = static_cast<double>(table.w1_marginal(w1p)) / n;
    double s = 0.0;
    common_support(p, q, [&](WordId w2, double a, double b) {
      s += a / (static_cast<double>(table.w2_marginal(w2)) / n) * b * prior;
    });
    return s;
  }
}

// W_D = 10^(-beta D), W_J = 10^(-beta J), W_L = (2 - L)^beta, W_C = P_C.
inline double weight(Measure m, double value, double beta) {
  if (!is_similarity(m) && beta < 0.0) throw Error("beta must be non-negative");
  switch (m) {
    case Measure::Kl:
    case Measure::Js:
      if (std::isinf(value)) return 0.0;
      return std::pow(10.0, -beta * value);
    case Measure::L1:
      return std::pow(std::max(0.0, 2.0 - value), beta);
    case Measure::Confusion:
    case Measure::Random:
      return value;
  }
  return 0.0;
}

struct Neighbor {
  WordId id;
  double value;   // dissimilarity, or P_C for the confusion measure
  double weight;
};

struct SelectionParams {
  double beta = 4.0;
  std::size_t k = kAllNeighbors;
  double t = kNoThreshold;  // dissimilarity threshold; ignored for P_C
};

// S(w1) with W(w1, w1'). Closest first; the owner itself is never included.
struct NeighborList {
  WordId owner = 0;
  Measure measure = Measure::Js;
  SelectionParams params;
  std::vector<Neighbor> entries;
  std::size_t excluded_undefined = 0;  // KL candidates with a support mismatch

  bool empty() const noexcept { return entries.empty(); }
  std::size_t size() const noexcept { return entries.size(); }

  double norm() const noexcept {
    double s = 0.0;
    for (const auto& n : entries) s += n.weight;
    return s;
  }
};

namespace detail {

// Per-word inputs shared by all pairwise evaluations against one base model.
struct MeasureInputs {
  Measure measure;
  std::vector<std::optional<SparseDistribution>> rows;
  // Confusion only: P(w2|w1)/P(w2) as a distribution-shaped vector, and P(w1).
  std::vector<std::optional<SparseDistribution>> ratios;
  std::vector<double> prior;
};

template <ConditionalModel M>
MeasureInputs prepare(const M& base, Measure measure) {
  if (measure == Measure::Random) throw Error("random weights are not computed from a base model");
  if (measure == Measure::Confusion && base.kind() != ModelKind::Mle)
    throw Error(std::string("confusion probability needs a Bayes-consistent (mle) base model, got ") + to_string(base.kind()));
  MeasureInputs in{measure, {}, {}, {}};
  in.rows.resize(base.v1_size());
  for (WordId w = 0; w < base.v1_size(); ++w)
    if (base.has_row(w)) in.rows[w] = base.distribution(w);
  if constexpr (std::same_as<M, MleModel>) {
    if (measure == Measure::Confusion) {
      const auto& table = base.table();
      const double n = static_cast<double>(table.total());
      in.ratios.resize(base.v1_size());
      in.prior.resize(base.v1_size(), 0.0);
      for (WordId w = 0; w < base.v1_size(); ++w) {
        in.prior[w] = static_cast<double>(table.w1_marginal(w)) / n;
        if (!in.rows[w]) continue;
        std::vector<Mass> r;
        for (const auto& e : in.rows[w]->entries()) r.push_back({e.w2, e.p / (static_cast<double>(table.w2_marginal(e.w2)) / n)});
        in.ratios[w] = SparseDistribution(std::move(r));
      }
    }
  }
  return in;
}

// nullopt: undefined (KL support failure) or w1' has no distribution.
inline std::optional<double> evaluate(const MeasureInputs& in, WordId w1, WordId w1p) {
  if (!in.rows[w1] || !in.rows[w1p]) return std::nullopt;
  const auto& p = *in.rows[w1];
  const auto& q = *in.rows[w1p];
  switch (in.measure) {
    case Measure::Kl: return kl_divergence(p, q);
    case Measure::Js: return jensen_shannon(p, q);
    case Measure::L1: return l1_distance(p, q);
    case Measure::Confusion: {
      double s = 0.0;
      common_support(*in.ratios[w1], q, [&](WordId, double ratio, double b) { s += ratio * b; });
      return s * in.prior[w1p];
    }
    case Measure::Random: break;
  }
  return std::nullopt;
}

inline bool closer(Measure m, const Neighbor& a, const Neighbor& b) {
  if (a.value != b.value) return is_similarity(m) ? a.value > b.value : a.value < b.value;
  return a.id < b.id;
}

// Every defined candidate for w1, closest first, weights unset.
inline NeighborList rank_candidates(const MeasureInputs& in, WordId w1) {
  NeighborList list;
  list.owner = w1;
  list.measure = in.measure;
  if (!in.rows[w1]) return list;
  for (WordId w1p = 0; w1p < in.rows.size(); ++w1p) {
    if (w1p == w1 || !in.rows[w1p]) continue;
    auto v = evaluate(in, w1, w1p);
    if (!v) {
      ++list.excluded_undefined;
      continue;
    }
    list.entries.push_back({w1p, *v, 0.0});
  }
  std::sort(list.entries.begin(), list.entries.end(), [&](const Neighbor& a, const Neighbor& b) { return closer(in.measure, a, b); });
  return list;
}

inline NeighborList select(const NeighborList& ranked, const SelectionParams& params) {
  NeighborList out;
  out.owner = ranked.owner;
  out.measure = ranked.measure;
  out.params = params;
  out.excluded_undefined = ranked.excluded_undefined;
  for (const auto& c : ranked.entries) {
    if (out.entries.size() >= params.k) break;
    if (!is_similarity(ranked.measure) && !(c.value < params.t)) break;
    out.entries.push_back({c.id, c.value, weight(ranked.measure, c.value, params.beta)});
  }
  return out;
}

}  // namespace detail

// The closest k (or fewer) words with dissimilarity below t, excluding w1.
// Ties are broken by ascending id.
template <ConditionalModel M>
NeighborList neighbors(WordId w1, const M& base, Measure measure, const SelectionParams& params) {
  if (w1 >= base.v1_size()) throw UnknownWord("V1", w1);
  if (params.k == 0) throw Error("k must be at least 1");
  if (!(params.t > 0.0)) throw Error("t must be positive");
  const auto in = detail::prepare(base, measure);
  return detail::select(detail::rank_candidates(in, w1), params);
}

// D/J/L of a word to itself is 0; P_C(w1|w1) is not (and need not be the
// largest value in the row).
template <ConditionalModel M>
double self_value(WordId w1, const M& base, Measure measure) {
  if (measure != Measure::Confusion) return 0.0;
  return confusion_probability(base, w1, w1);
}

// One NeighborList per w1. Keeps the full ranking so that different
// (beta, k, t) settings can be selected without recomputing the measure.
class SimilarityMatrix {
 public:
  SimilarityMatrix() = default;

  SimilarityMatrix(Measure measure, std::string base_id, std::shared_ptr<const std::vector<NeighborList>> ranked,
                   const SelectionParams& params)
      : measure_(measure), base_id_(std::move(base_id)), ranked_(std::move(ranked)) {
    apply(params);
  }

  // Rows loaded from a file; no ranking beyond what was stored.
  SimilarityMatrix(Measure measure, std::string base_id, std::vector<NeighborList> rows, const SelectionParams& params)
      : measure_(measure), base_id_(std::move(base_id)), params_(params), rows_(std::move(rows)) {}

  Measure measure() const noexcept { return measure_; }
  const std::string& base_id() const noexcept { return base_id_; }
  const SelectionParams& params() const noexcept { return params_; }
  std::size_t size() const noexcept { return rows_.size(); }
  const NeighborList& row(WordId w1) const {
    if (w1 >= rows_.size()) throw UnknownWord("V1", w1);
    return rows_[w1];
  }
  const std::vector<NeighborList>& rows() const noexcept { return rows_; }

  // Same measure values, new selection and weights.
  SimilarityMatrix reselect(const SelectionParams& params) const {
    if (ranked_) return SimilarityMatrix(measure_, base_id_, ranked_, params);
    std::vector<NeighborList> rows;
    rows.reserve(rows_.size());
    for (const auto& r : rows_) rows.push_back(detail::select(r, params));
    return SimilarityMatrix(measure_, base_id_, std::move(rows), params);
  }

  std::size_t empty_rows() const noexcept {
    return static_cast<std::size_t>(std::count_if(rows_.begin(), rows_.end(), [](const NeighborList& r) { return r.empty(); }));
  }

 private:
  void apply(const SelectionParams& params) {
    params_ = params;
    rows_.clear();
    rows_.reserve(ranked_->size());
    for (const auto& r : *ranked_) rows_.push_back(detail::select(r, params));
  }

  Measure measure_ = Measure::Js;
  std::string base_id_;
  SelectionParams params_;
  std::shared_ptr<const std::vector<NeighborList>> ranked_;
  std::vector<NeighborList> rows_;
};

// Rows are independent, so they are spread over `threads` workers; each row
// is written to its own slot and the result does not depend on scheduling.
template <ConditionalModel M>
SimilarityMatrix build_similarity_matrix(const M& base, Measure measure, const SelectionParams& params, std::string base_id = {},
                                         unsigned threads = 1) {
  if (params.k == 0) throw Error("k must be at least 1");
  if (!(params.t > 0.0)) throw Error("t must be positive");
  const auto in = detail::prepare(base, measure);
  auto ranked = std::make_shared<std::vector<NeighborList>>(base.v1_size());
  const std::size_t n = base.v1_size();
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  if (threads == 1) {
    for (WordId w = 0; w < n; ++w) (*ranked)[w] = detail::rank_candidates(in, w);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t)
      pool.emplace_back([&, t] {
        for (std::size_t w = t; w < n; w += threads) (*ranked)[w] = detail::rank_candidates(in, static_cast<WordId>(w));
      });
  }
  if (base_id.empty()) base_id = to_string(base.kind());
  return SimilarityMatrix(measure, std::move(base_id), std::move(ranked), params);
}

inline std::string format_limit(std::size_t k) { return k == kAllNeighbors ? "inf" : std::to_string(k); }

inline std::string format_limit(double t) {
  if (std::isinf(t)) return "inf";
  std::ostringstream os;
  os << t;
  return os.str();
}

// TSV `w1<TAB>w1'<TAB>value<TAB>weight`, grouped by w1, after a header comment.
inline void write_similarity_matrix(std::ostream& out, const SimilarityMatrix& m, const Vocabulary& v1) {
  out << "# measure=" << to_string(m.measure()) << " beta=" << m.params().beta << " k=" << format_limit(m.params().k)
      << " t=" << format_limit(m.params().t) << " base=" << m.base_id() << "\n";
  out.precision(17);
  for (const auto& row : m.rows())
    for (const auto& n : row.entries) out << v1.word(row.owner) << '\t' << v1.word(n.id) << '\t' << n.value << '\t' << n.weight << '\n';
}

inline SimilarityMatrix read_similarity_matrix(std::istream& in, const Vocabulary& v1, const std::string& source = "<matrix>") {
  std::string line;
  std::size_t lineno = 0;
  Measure measure = Measure::Js;
  SelectionParams params;
  std::string base_id;
  std::vector<NeighborList> rows(v1.size());
  for (WordId w = 0; w < rows.size(); ++w) rows[w].owner = w;
  bool header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.starts_with("#")) {
      if (header) continue;
      header = true;
      std::istringstream fields(line.substr(1));
      std::string kv;
      while (fields >> kv) {
        auto eq = kv.find('=');
        if (eq == std::string::npos) continue;
        auto key = kv.substr(0, eq), value = kv.substr(eq + 1);
        if (key == "measure") measure = value == "rand" ? Measure::Random : parse_measure(value);
        else if (key == "beta") params.beta = std::stod(value);
        else if (key == "k") params.k = value == "inf" ? kAllNeighbors : std::stoull(value);
        else if (key == "t") params.t = value == "inf" ? kNoThreshold : std::stod(value);
        else if (key == "base") base_id = value;
      }
      continue;
    }
    if (line.empty()) continue;
    auto f = detail::split_tabs(line);
    if (f.size() != 4) throw ParseError(source, lineno, "expected w1<TAB>w1'<TAB>value<TAB>weight");
    auto a = v1.find(f[0]), b = v1.find(f[1]);
    if (!a || !b) throw ParseError(source, lineno, "word not in vocabulary");
    try {
      rows[*a].entries.push_back({*b, std::stod(std::string(f[2])), std::stod(std::string(f[3]))});
    } catch (const std::logic_error&) {
      throw ParseError(source, lineno, "bad number");
    }
  }
  for (auto& r : rows) {
    r.measure = measure;
    r.params = params;
  }
  return SimilarityMatrix(measure, base_id, std::move(rows), params);
}

}  // namespace simsmooth
