#pragma once

// Pair ingestion, count tables, singleton deletion, splits and folds.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "simsmooth/error.hpp"
#include "simsmooth/rng.hpp"

namespace simsmooth {

// Interning table for one side of the pair vocabulary. Ids are dense from 0
// in first-occurrence order.
class Vocabulary {
 public:
  WordId intern(std::string_view word) {
    auto it = ids_.find(std::string(word));
    if (it != ids_.end()) return it->second;
    const auto id = static_cast<WordId>(words_.size());
    words_.emplace_back(word);
    ids_.emplace(words_.back(), id);
    return id;
  }

  std::optional<WordId> find(std::string_view word) const {
    auto it = ids_.find(std::string(word));
    if (it == ids_.end()) return std::nullopt;
    return it->second;
  }

  const std::string& word(WordId id) const {
    if (id >= words_.size()) throw UnknownWord("vocabulary", id);
    return words_[id];
  }

  std::size_t size() const noexcept { return words_.size(); }
  const std::vector<std::string>& words() const noexcept { return words_; }

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, WordId> ids_;
};

// V1 (conditioning) and V2 (conditioned) are independent id spaces.
struct VocabularyIndex {
  Vocabulary v1;
  Vocabulary v2;
};

struct Pair {
  WordId w1 = 0;
  WordId w2 = 0;

  friend auto operator<=>(const Pair&, const Pair&) = default;
};

// Token instances, duplicates preserved, in input order.
using PairList = std::vector<Pair>;

struct Corpus {
  VocabularyIndex vocab;
  PairList pairs;
};

struct CountEntry {
  WordId w2;
  std::uint64_t count;
};

// Sparse c(w1,w2) with cached marginals. Rows are sorted by w2 and never hold
// zero counts. Immutable once built.
class PairCountTable {
 public:
  PairCountTable() = default;

  PairCountTable(std::size_t v1_size, std::size_t v2_size) : rows_(v1_size), w1_marginal_(v1_size, 0), w2_marginal_(v2_size, 0) {}

  // Entries must be sorted by w2 within each row and have count > 0.
  static PairCountTable from_rows(std::vector<std::vector<CountEntry>> rows, std::size_t v2_size) {
    PairCountTable t(rows.size(), v2_size);
    t.rows_ = std::move(rows);
    t.recompute_marginals();
    return t;
  }

  std::size_t v1_size() const noexcept { return rows_.size(); }
  std::size_t v2_size() const noexcept { return w2_marginal_.size(); }
  std::uint64_t total() const noexcept { return total_; }
  std::size_t distinct() const noexcept { return distinct_; }

  std::span<const CountEntry> row(WordId w1) const {
    check_w1(w1);
    return rows_[w1];
  }

  std::uint64_t count(WordId w1, WordId w2) const {
    check_w1(w1);
    check_w2(w2);
    const auto& r = rows_[w1];
    auto it = std::lower_bound(r.begin(), r.end(), w2, [](const CountEntry& e, WordId w) { return e.w2 < w; });
    return (it != r.end() && it->w2 == w2) ? it->count : 0;
  }

  std::uint64_t w1_marginal(WordId w1) const {
    check_w1(w1);
    return w1_marginal_[w1];
  }

  std::uint64_t w2_marginal(WordId w2) const {
    check_w2(w2);
    return w2_marginal_[w2];
  }

  // Number of distinct pairs seen exactly once.
  std::size_t singletons() const noexcept {
    std::size_t n = 0;
    for (const auto& r : rows_)
      for (const auto& e : r) n += (e.count == 1);
    return n;
  }

  friend bool operator==(const PairCountTable& a, const PairCountTable& b) {
    if (a.v1_size() != b.v1_size() || a.v2_size() != b.v2_size()) return false;
    for (std::size_t i = 0; i < a.rows_.size(); ++i) {
      if (a.rows_[i].size() != b.rows_[i].size()) return false;
      for (std::size_t j = 0; j < a.rows_[i].size(); ++j)
        if (a.rows_[i][j].w2 != b.rows_[i][j].w2 || a.rows_[i][j].count != b.rows_[i][j].count) return false;
    }
    return true;
  }

 private:
  void check_w1(WordId w1) const {
    if (w1 >= rows_.size()) throw UnknownWord("V1", w1);
  }
  void check_w2(WordId w2) const {
    if (w2 >= w2_marginal_.size()) throw UnknownWord("V2", w2);
  }

  void recompute_marginals() {
    w1_marginal_.assign(rows_.size(), 0);
    std::fill(w2_marginal_.begin(), w2_marginal_.end(), 0);
    total_ = 0;
    distinct_ = 0;
    for (std::size_t w1 = 0; w1 < rows_.size(); ++w1) {
      for (const auto& e : rows_[w1]) {
        check_w2(e.w2);
        w1_marginal_[w1] += e.count;
        w2_marginal_[e.w2] += e.count;
        total_ += e.count;
        ++distinct_;
      }
    }
  }

  std::vector<std::vector<CountEntry>> rows_;
  std::vector<std::uint64_t> w1_marginal_;
  std::vector<std::uint64_t> w2_marginal_;
  std::uint64_t total_ = 0;
  std::size_t distinct_ = 0;
};

namespace detail {

inline std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  for (;;) {
    auto pos = line.find('\t', start);
    fields.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return fields;
}

struct PairLine {
  std::string_view w1;
  std::string_view w2;
  std::uint64_t count = 1;
};

// Parses one pair-file line; nullopt for blank and '#' lines.
inline std::optional<PairLine> parse_pair_line(std::string_view view, std::size_t lineno, const std::string& source) {
  if (!view.empty() && view.back() == '\r') view.remove_suffix(1);
  if (view.empty() || view.front() == '#') return std::nullopt;
  auto fields = split_tabs(view);
  if (fields.size() < 2 || fields.size() > 3) throw ParseError(source, lineno, "expected w1<TAB>w2[<TAB>count]");
  if (fields[0].empty() || fields[1].empty()) throw ParseError(source, lineno, "empty word");
  PairLine out{fields[0], fields[1], 1};
  if (fields.size() == 3) {
    std::int64_t n = 0;
    auto f = fields[2];
    auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), n);
    if (ec != std::errc() || ptr != f.data() + f.size()) throw ParseError(source, lineno, "count is not an integer");
    if (n <= 0) throw ParseError(source, lineno, "count must be >= 1");
    out.count = static_cast<std::uint64_t>(n);
  }
  return out;
}

}  // namespace detail

// Reads `w1<TAB>w2[<TAB>count]` lines into an existing vocabulary, appending
// instances to `out`. A count expands to that many repeated instances. Lines
// starting with '#' and empty lines are skipped.
inline void ingest_pairs(std::istream& in, VocabularyIndex& vocab, PairList& out, const std::string& source = "<input>") {
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto parsed = detail::parse_pair_line(line, lineno, source);
    if (!parsed) continue;
    const Pair p{vocab.v1.intern(parsed->w1), vocab.v2.intern(parsed->w2)};
    out.insert(out.end(), parsed->count, p);
  }
}

inline Corpus ingest_pairs(std::istream& in, const std::string& source = "<input>") {
  Corpus c;
  ingest_pairs(in, c.vocab, c.pairs, source);
  return c;
}

inline PairCountTable count(std::span<const Pair> pairs, std::size_t v1_size, std::size_t v2_size) {
  std::vector<Pair> sorted(pairs.begin(), pairs.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<std::vector<CountEntry>> rows(v1_size);
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    if (sorted[i].w1 >= v1_size) throw UnknownWord("V1", sorted[i].w1);
    rows[sorted[i].w1].push_back({sorted[i].w2, static_cast<std::uint64_t>(j - i)});
    i = j;
  }
  return PairCountTable::from_rows(std::move(rows), v2_size);
}

inline PairCountTable count(const Corpus& c) { return count(c.pairs, c.vocab.v1.size(), c.vocab.v2.size()); }

// Expands a table back into instances, ordered by (w1, w2).
inline PairList expand(const PairCountTable& table) {
  PairList out;
  out.reserve(table.total());
  for (WordId w1 = 0; w1 < table.v1_size(); ++w1)
    for (const auto& e : table.row(w1)) out.insert(out.end(), e.count, Pair{w1, e.w2});
  return out;
}

// Drops count-1 entries. Vocabulary sizes are unchanged, so words may be left
// with a zero marginal.
inline PairCountTable remove_singletons(const PairCountTable& table) {
  std::vector<std::vector<CountEntry>> rows(table.v1_size());
  for (WordId w1 = 0; w1 < table.v1_size(); ++w1)
    for (const auto& e : table.row(w1))
      if (e.count > 1) rows[w1].push_back(e);
  return PairCountTable::from_rows(std::move(rows), table.v2_size());
}

struct TrainTestSplit {
  PairList train;
  PairList test;
};

// Seeded shuffle of instance order, then the first round(n * test_fraction)
// instances become the test set.
inline TrainTestSplit split_train_test(std::span<const Pair> pairs, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw Error("test fraction must lie in (0, 1)");
  std::vector<std::size_t> order(pairs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng::Stream stream(seed);
  stream.shuffle(std::span<std::size_t>(order));
  const auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(pairs.size())));
  TrainTestSplit s;
  s.test.reserve(n_test);
  s.train.reserve(pairs.size() - n_test);
  for (std::size_t i = 0; i < order.size(); ++i) (i < n_test ? s.test : s.train).push_back(pairs[order[i]]);
  return s;
}

inline PairList extract_unseen(std::span<const Pair> test, const PairCountTable& train) {
  PairList out;
  for (const auto& p : test)
    if (train.count(p.w1, p.w2) == 0) out.push_back(p);
  return out;
}

// Seeded shuffle then contiguous slicing; the first n % n_folds folds get one
// extra element.
template <class T>
std::vector<std::vector<T>> make_folds(std::span<const T> items, std::size_t n_folds, std::uint64_t seed) {
  if (n_folds < 2) throw Error("need at least 2 folds");
  if (items.size() < n_folds)
    throw Error("cannot split " + std::to_string(items.size()) + " instances into " + std::to_string(n_folds) + " folds");
  std::vector<T> shuffled(items.begin(), items.end());
  rng::Stream stream(seed);
  stream.shuffle(std::span<T>(shuffled));
  std::vector<std::vector<T>> folds(n_folds);
  const std::size_t base = items.size() / n_folds;
  const std::size_t extra = items.size() % n_folds;
  std::size_t pos = 0;
  for (std::size_t f = 0; f < n_folds; ++f) {
    const std::size_t len = base + (f < extra ? 1 : 0);
    folds[f].assign(shuffled.begin() + static_cast<std::ptrdiff_t>(pos), shuffled.begin() + static_cast<std::ptrdiff_t>(pos + len));
    pos += len;
  }
  return folds;
}

// Aggregated count file, sorted by (w1 id, w2 id). The vocabulary is listed
// first as `#v1<TAB>word` / `#v2<TAB>word` comment lines so that ids (and
// words left with a zero marginal) survive a round trip; plain pair readers
// skip them as comments.
inline void write_count_table(std::ostream& out, const PairCountTable& table, const VocabularyIndex& vocab) {
  out << "# simsmooth count table N=" << table.total() << " |V1|=" << table.v1_size() << " |V2|=" << table.v2_size()
      << " distinct=" << table.distinct() << "\n";
  for (const auto& w : vocab.v1.words()) out << "#v1\t" << w << '\n';
  for (const auto& w : vocab.v2.words()) out << "#v2\t" << w << '\n';
  for (WordId w1 = 0; w1 < table.v1_size(); ++w1)
    for (const auto& e : table.row(w1)) out << vocab.v1.word(w1) << '\t' << vocab.v2.word(e.w2) << '\t' << e.count << '\n';
}

struct LoadedTable {
  VocabularyIndex vocab;
  PairCountTable table;
};

// Reads a count file (or any pair file); `#v1`/`#v2` lines pre-seed the
// vocabulary in order.
inline LoadedTable read_count_table(std::istream& in, const std::string& source = "<input>") {
  LoadedTable out;
  PairList pairs;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view view(line);
    if (!view.empty() && view.back() == '\r') view.remove_suffix(1);
    if (view.starts_with("#v1\t")) {
      out.vocab.v1.intern(view.substr(4));
      continue;
    }
    if (view.starts_with("#v2\t")) {
      out.vocab.v2.intern(view.substr(4));
      continue;
    }
    auto parsed = detail::parse_pair_line(view, lineno, source);
    if (!parsed) continue;
    const Pair p{out.vocab.v1.intern(parsed->w1), out.vocab.v2.intern(parsed->w2)};
    pairs.insert(pairs.end(), parsed->count, p);
  }
  out.table = count(pairs, out.vocab.v1.size(), out.vocab.v2.size());
  return out;
}

}  // namespace simsmooth
