#pragma once

// Base language models over a pair count table: maximum likelihood and Katz
// back-off with Good-Turing discounting.

#include <cmath>
#include <concepts>
#include <cstdint>
#include <functional>
#include <istream>
#include <map>
#include <memory>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "simsmooth/corpus.hpp"
#include "simsmooth/distribution.hpp"
#include "simsmooth/error.hpp"

namespace simsmooth {

enum class ModelKind { Mle, Katz, Similarity };

inline const char* to_string(ModelKind k) {
  switch (k) {
    case ModelKind::Mle: return "mle";
    case ModelKind::Katz: return "katz";
    case ModelKind::Similarity: return "similarity";
  }
  return "?";
}

// Anything that answers P(w2|w1) row by row. `accumulate_row` adds
// scale * P(.|w1) into a dense |V2| buffer.
template <class M>
concept ConditionalModel = requires(const M& m, WordId w, double s, std::span<double> out) {
  { m.prob(w, w) } -> std::convertible_to<double>;
  { m.has_row(w) } -> std::convertible_to<bool>;
  { m.v1_size() } -> std::convertible_to<std::size_t>;
  { m.v2_size() } -> std::convertible_to<std::size_t>;
  { m.kind() } -> std::same_as<ModelKind>;
  { m.distribution(w) } -> std::same_as<SparseDistribution>;
  m.accumulate_row(w, s, out);
};

enum class Side { V1, V2 };

// P(w) = c(w) / N on one side of the table.
class UnigramModel {
 public:
  UnigramModel() = default;
  UnigramModel(Side side, std::vector<double> probs) : side_(side), probs_(std::move(probs)) {}

  double prob(WordId w) const {
    if (w >= probs_.size()) throw UnknownWord(side_ == Side::V1 ? "V1" : "V2", w);
    return probs_[w];
  }
  std::size_t size() const noexcept { return probs_.size(); }
  Side side() const noexcept { return side_; }
  std::span<const double> probs() const noexcept { return probs_; }

 private:
  Side side_ = Side::V2;
  std::vector<double> probs_;
};

inline UnigramModel mle_unigram(const PairCountTable& table, Side side) {
  if (table.total() == 0) throw Error("unigram model needs a non-empty table");
  const double n = static_cast<double>(table.total());
  std::vector<double> probs(side == Side::V1 ? table.v1_size() : table.v2_size());
  for (WordId w = 0; w < probs.size(); ++w)
    probs[w] = static_cast<double>(side == Side::V1 ? table.w1_marginal(w) : table.w2_marginal(w)) / n;
  return UnigramModel(side, std::move(probs));
}

class MleModel {
 public:
  explicit MleModel(std::shared_ptr<const PairCountTable> table) : table_(std::move(table)) {}

  ModelKind kind() const noexcept { return ModelKind::Mle; }
  std::size_t v1_size() const noexcept { return table_->v1_size(); }
  std::size_t v2_size() const noexcept { return table_->v2_size(); }
  const PairCountTable& table() const noexcept { return *table_; }
  const std::shared_ptr<const PairCountTable>& table_ptr() const noexcept { return table_; }

  bool has_row(WordId w1) const { return table_->w1_marginal(w1) > 0; }

  double prob(WordId w1, WordId w2) const {
    const auto c = table_->count(w1, w2);
    const auto m = table_->w1_marginal(w1);
    if (m == 0) throw UndefinedRow(w1);
    return static_cast<double>(c) / static_cast<double>(m);
  }

  // P(w1|w2) = c(w1,w2) / c(w2); 0 when w2 never occurs.
  double reverse_prob(WordId w1, WordId w2) const {
    const auto m = table_->w2_marginal(w2);
    return m == 0 ? 0.0 : static_cast<double>(table_->count(w1, w2)) / static_cast<double>(m);
  }

  SparseDistribution distribution(WordId w1) const {
    const auto m = table_->w1_marginal(w1);
    if (m == 0) throw UndefinedRow(w1);
    std::vector<Mass> out;
    for (const auto& e : table_->row(w1)) out.push_back({e.w2, static_cast<double>(e.count) / static_cast<double>(m)});
    return SparseDistribution(std::move(out));
  }

  void accumulate_row(WordId w1, double scale, std::span<double> out) const {
    const auto m = table_->w1_marginal(w1);
    if (m == 0) throw UndefinedRow(w1);
    for (const auto& e : table_->row(w1)) out[e.w2] += scale * static_cast<double>(e.count) / static_cast<double>(m);
  }

 private:
  std::shared_ptr<const PairCountTable> table_;
};

inline MleModel mle_conditional(std::shared_ptr<const PairCountTable> table) { return MleModel(std::move(table)); }

// n_r: number of distinct pairs whose count is exactly r, over the whole table.
class CountOfCounts {
 public:
  CountOfCounts() = default;
  explicit CountOfCounts(std::map<std::uint64_t, std::uint64_t> n) : n_(std::move(n)) {}

  explicit CountOfCounts(const PairCountTable& table) {
    for (WordId w1 = 0; w1 < table.v1_size(); ++w1)
      for (const auto& e : table.row(w1)) ++n_[e.count];
  }

  std::uint64_t n(std::uint64_t r) const {
    auto it = n_.find(r);
    return it == n_.end() ? 0 : it->second;
  }

  // Sum of r * n_r: the number of tokens covered.
  std::uint64_t tokens() const {
    std::uint64_t s = 0;
    for (auto [r, nr] : n_) s += r * nr;
    return s;
  }

  const std::map<std::uint64_t, std::uint64_t>& table() const noexcept { return n_; }

 private:
  std::map<std::uint64_t, std::uint64_t> n_;
};

struct DiscountParams {
  std::uint64_t r_threshold = 5;      // counts >= threshold are left alone
  double fallback_discount = 0.75;    // absolute discount when statistics are degenerate
};

// (r+1) n_{r+1} / n_r, without Katz's correction.
inline double raw_good_turing(const CountOfCounts& coc, std::uint64_t r) {
  const auto nr = coc.n(r);
  if (nr == 0) throw Error("no pairs with count " + std::to_string(r));
  return static_cast<double>(r + 1) * static_cast<double>(coc.n(r + 1)) / static_cast<double>(nr);
}

// Katz-corrected Good-Turing discounted count r* for 1 <= r < threshold:
//   r* = (raw(r) - r A) / (1 - A),  A = k n_k / n_1,  k = threshold.
// Counts at or above the threshold are unchanged. When the statistics are
// degenerate (n_{r+1} = 0, n_1 = 0, A >= 1, or r* outside (0, r)) the count
// is absolutely discounted instead: r* = r - fallback.
inline double good_turing_discount(const CountOfCounts& coc, std::uint64_t r, const DiscountParams& params = {}) {
  if (r < 1) throw Error("discounted counts are only defined for r >= 1");
  if (r >= params.r_threshold) return static_cast<double>(r);
  if (coc.n(r) == 0) throw Error("no pairs with count " + std::to_string(r));
  const double rr = static_cast<double>(r);
  const double fallback = rr - params.fallback_discount;
  if (coc.n(r + 1) == 0 || coc.n(1) == 0) return fallback;
  const double k = static_cast<double>(params.r_threshold);
  const double a = k * static_cast<double>(coc.n(params.r_threshold)) / static_cast<double>(coc.n(1));
  if (a >= 1.0) return fallback;
  const double rstar = (raw_good_turing(coc, r) - rr * a) / (1.0 - a);
  if (!(rstar > 0.0 && rstar < rr)) return fallback;
  return rstar;
}

// Katz back-off:
//   P(w2|w1) = P_d(w2|w1)               if c(w1,w2) > 0
//            = alpha(w1) P_r(w2|w1)      otherwise
// with P_d = r* / c(w1) and alpha spreading the discounted mass over the
// unseen w2 in proportion to the redistribution model.
class KatzModel {
 public:
  using Redistribution = std::function<double(WordId, WordId)>;

  // Backs off to the V2 unigram distribution of the same table.
  KatzModel(std::shared_ptr<const PairCountTable> table, DiscountParams params = {})
      : KatzModel(table, make_unigram_redistribution(*table), params) {}

  KatzModel(std::shared_ptr<const PairCountTable> table, Redistribution redistribution, DiscountParams params = {})
      : table_(std::move(table)), redistribution_(std::move(redistribution)), params_(params), coc_(*table_) {
    build();
  }

  ModelKind kind() const noexcept { return ModelKind::Katz; }
  std::size_t v1_size() const noexcept { return table_->v1_size(); }
  std::size_t v2_size() const noexcept { return table_->v2_size(); }
  const PairCountTable& table() const noexcept { return *table_; }
  const std::shared_ptr<const PairCountTable>& table_ptr() const noexcept { return table_; }
  const DiscountParams& params() const noexcept { return params_; }
  const CountOfCounts& count_of_counts() const noexcept { return coc_; }

  bool has_row(WordId w1) const { return table_->w1_marginal(w1) > 0; }

  // Discounted probability of a seen pair; 0 for an unseen one.
  double discounted(WordId w1, WordId w2) const {
    const auto row = table_->row(w1);
    auto it = std::lower_bound(row.begin(), row.end(), w2, [](const CountEntry& e, WordId w) { return e.w2 < w; });
    if (it == row.end() || it->w2 != w2) return 0.0;
    return pd_[w1][static_cast<std::size_t>(it - row.begin())];
  }

  // P_d values parallel to table().row(w1).
  std::span<const double> discounted_row(WordId w1) const {
    if (w1 >= pd_.size()) throw UnknownWord("V1", w1);
    return pd_[w1];
  }

  // 1 - sum of P_d over the seen w2 of the row.
  double leftover(WordId w1) const {
    if (w1 >= leftover_.size()) throw UnknownWord("V1", w1);
    return leftover_[w1];
  }

  double alpha(WordId w1) const {
    if (w1 >= alpha_.size()) throw UnknownWord("V1", w1);
    return alpha_[w1];
  }

  double prob(WordId w1, WordId w2) const {
    const auto row = table_->row(w1);
    if (w2 >= v2_size()) throw UnknownWord("V2", w2);
    if (table_->w1_marginal(w1) == 0) throw UndefinedRow(w1);
    auto it = std::lower_bound(row.begin(), row.end(), w2, [](const CountEntry& e, WordId w) { return e.w2 < w; });
    if (it != row.end() && it->w2 == w2) return pd_[w1][static_cast<std::size_t>(it - row.begin())];
    return alpha_[w1] == 0.0 ? 0.0 : alpha_[w1] * redistribution_(w1, w2);
  }

  SparseDistribution distribution(WordId w1) const {
    std::vector<double> dense(v2_size(), 0.0);
    accumulate_row(w1, 1.0, dense);
    return SparseDistribution::from_dense(dense);
  }

  void accumulate_row(WordId w1, double scale, std::span<double> out) const {
    if (table_->w1_marginal(w1) == 0) throw UndefinedRow(w1);
    const auto row = table_->row(w1);
    std::size_t j = 0;
    for (WordId w2 = 0; w2 < v2_size(); ++w2) {
      if (j < row.size() && row[j].w2 == w2) {
        out[w2] += scale * pd_[w1][j];
        ++j;
      } else if (alpha_[w1] != 0.0) {
        out[w2] += scale * alpha_[w1] * redistribution_(w1, w2);
      }
    }
  }

  // Rows whose seen counts were all at or above the threshold and so had to
  // be absolutely discounted to leave mass for unseen pairs.
  std::size_t forced_discount_rows() const noexcept { return forced_rows_; }

 private:
  static Redistribution make_unigram_redistribution(const PairCountTable& table) {
    if (table.total() == 0) return [](WordId, WordId) { return 0.0; };
    auto uni = std::make_shared<UnigramModel>(mle_unigram(table, Side::V2));
    return [uni](WordId, WordId w2) { return uni->prob(w2); };
  }

  void build() {
    const std::size_t v1 = table_->v1_size();
    const std::size_t v2 = table_->v2_size();
    pd_.assign(v1, {});
    leftover_.assign(v1, 0.0);
    alpha_.assign(v1, 0.0);

    std::map<std::uint64_t, double> rstar;
    for (auto [r, nr] : coc_.table()) rstar[r] = good_turing_discount(coc_, r, params_);

    std::size_t active_v2 = 0;
    for (WordId w2 = 0; w2 < v2; ++w2) active_v2 += table_->w2_marginal(w2) > 0;

    std::vector<char> seen(v2, 0);
    for (WordId w1 = 0; w1 < v1; ++w1) {
      const auto row = table_->row(w1);
      const auto m = table_->w1_marginal(w1);
      if (m == 0) continue;
      const double cm = static_cast<double>(m);
      auto& pd = pd_[w1];
      pd.resize(row.size());

      // Every occurring w2 already seen with w1: nothing to redistribute to.
      if (row.size() == active_v2) {
        for (std::size_t j = 0; j < row.size(); ++j) pd[j] = static_cast<double>(row[j].count) / cm;
        continue;
      }

      double left = 0.0;
      for (std::size_t j = 0; j < row.size(); ++j) {
        const double rs = rstar.at(row[j].count);
        pd[j] = rs / cm;
        left += (static_cast<double>(row[j].count) - rs) / cm;
      }
      if (!(left > 0.0)) {
        ++forced_rows_;
        left = 0.0;
        for (std::size_t j = 0; j < row.size(); ++j) {
          const double rs = static_cast<double>(row[j].count) - params_.fallback_discount;
          pd[j] = rs / cm;
          left += params_.fallback_discount / cm;
        }
      }

      for (const auto& e : row) seen[e.w2] = 1;
      double unseen_mass = 0.0;
      for (WordId w2 = 0; w2 < v2; ++w2)
        if (!seen[w2]) unseen_mass += redistribution_(w1, w2);
      for (const auto& e : row) seen[e.w2] = 0;

      if (!(unseen_mass > 0.0))
        throw Error("redistribution model gives no mass to the unseen pairs of w1 id " + std::to_string(w1));
      leftover_[w1] = left;
      alpha_[w1] = left / unseen_mass;
    }
  }

  std::shared_ptr<const PairCountTable> table_;
  Redistribution redistribution_;
  DiscountParams params_;
  CountOfCounts coc_;
  std::vector<std::vector<double>> pd_;
  std::vector<double> leftover_;
  std::vector<double> alpha_;
  std::size_t forced_rows_ = 0;
};

inline KatzModel katz_backoff(std::shared_ptr<const PairCountTable> table, DiscountParams params = {}) {
  return KatzModel(std::move(table), params);
}

inline KatzModel katz_backoff(std::shared_ptr<const PairCountTable> table, const UnigramModel& unigram, DiscountParams params = {}) {
  auto uni = std::make_shared<UnigramModel>(unigram);
  return KatzModel(std::move(table), [uni](WordId, WordId w2) { return uni->prob(w2); }, params);
}

template <ConditionalModel R>
KatzModel katz_backoff(std::shared_ptr<const PairCountTable> table, std::shared_ptr<const R> redistribution, DiscountParams params = {}) {
  return KatzModel(
      std::move(table),
      [redistribution](WordId w1, WordId w2) { return redistribution->has_row(w1) ? redistribution->prob(w1, w2) : 0.0; },
      params);
}

// Model file: `#key=value` header lines followed by the backing count table.
// Only the counts are stored; discounts and alpha are recomputed on load.
struct StoredModel {
  ModelKind kind = ModelKind::Katz;
  DiscountParams params;
  LoadedTable data;
};

inline void write_model(std::ostream& out, ModelKind kind, const DiscountParams& params, const PairCountTable& table,
                        const VocabularyIndex& vocab) {
  if (kind == ModelKind::Similarity) throw Error("similarity models are not persisted; store the base model instead");
  out << "#simsmooth-model\n";
  out << "#kind=" << to_string(kind) << "\n";
  out << "#r_threshold=" << params.r_threshold << "\n";
  out << "#fallback_discount=" << params.fallback_discount << "\n";
  out << "#v1_size=" << vocab.v1.size() << "\n";
  out << "#v2_size=" << vocab.v2.size() << "\n";
  write_count_table(out, table, vocab);
}

inline StoredModel read_model(std::istream& in, const std::string& source = "<model>") {
  std::stringstream body;
  body << in.rdbuf();
  const std::string text = body.str();
  StoredModel m;
  std::size_t v1 = 0, v2 = 0;
  bool magic = false;
  std::istringstream lines(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(lines, line)) {
    ++lineno;
    if (line == "#simsmooth-model") {
      magic = true;
      continue;
    }
    if (!line.starts_with("#") || line.starts_with("#v1\t") || line.starts_with("#v2\t")) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = line.substr(1, eq - 1);
    const std::string value = line.substr(eq + 1);
    try {
      if (key == "kind") {
        if (value == "mle") m.kind = ModelKind::Mle;
        else if (value == "katz") m.kind = ModelKind::Katz;
        else throw ParseError(source, lineno, "unknown model kind '" + value + "'");
      } else if (key == "r_threshold") {
        m.params.r_threshold = std::stoull(value);
      } else if (key == "fallback_discount") {
        m.params.fallback_discount = std::stod(value);
      } else if (key == "v1_size") {
        v1 = std::stoull(value);
      } else if (key == "v2_size") {
        v2 = std::stoull(value);
      }
    } catch (const std::logic_error&) {
      throw ParseError(source, lineno, "bad value for " + key);
    }
  }
  if (!magic) throw ParseError(source, 1, "missing #simsmooth-model header");
  std::istringstream table_in(text);
  m.data = read_count_table(table_in, source);
  if (m.data.vocab.v1.size() != v1 || m.data.vocab.v2.size() != v2)
    throw ParseError(source, 0, "vocabulary sizes do not match the header");
  return m;
}

}  // namespace simsmooth
