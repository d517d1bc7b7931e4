#pragma once

// Similarity-based back-off: seen pairs keep their Katz discounted estimate,
// unseen pairs share the leftover mass according to
//   P_r(w2|w1) = gamma P(w2) + (1 - gamma) P_SIM(w2|w1),
//   P_SIM(w2|w1) = sum_{w1' in S(w1)} W(w1,w1') / norm(w1) * P(w2|w1').

#include <cmath>
#include <istream>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "simsmooth/basemodel.hpp"
#include "simsmooth/similarity.hpp"

namespace simsmooth {

struct SmoothingConfig {
  Measure measure = Measure::Kl;
  double beta = 4.0;
  double gamma = 0.15;
  std::size_t k = 60;
  double t = 2.5;
  ModelKind base = ModelKind::Katz;      // rows the similarity is computed from
  ModelKind evidence = ModelKind::Katz;  // P(w2|w1') inside P_SIM
  std::uint64_t seed = 1;
  DiscountParams discount;

  SelectionParams selection() const { return {beta, k, t}; }

  void validate() const {
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw Error("gamma must lie in [0, 1]");
    if (beta < 0.0) throw Error("beta must be non-negative");
    if (k == 0) throw Error("k must be at least 1");
    if (!(t > 0.0)) throw Error("t must be positive");
    if (base == ModelKind::Similarity || evidence == ModelKind::Similarity) throw Error("base models must be mle or katz");
    if (measure == Measure::Kl && base != ModelKind::Katz) throw Error("KL divergence needs a smoothed (katz) base model");
    if (measure == Measure::Confusion && base != ModelKind::Mle) throw Error("confusion probability needs an mle base model");
  }
};

// Language-modelling setup: KL over Katz rows, Katz evidence, interpolated.
inline SmoothingConfig preset_lm() { return {}; }

// Disambiguation setup: no unigram interpolation, all of V1 as neighbours,
// maximum-likelihood rows for both similarity and evidence.
inline SmoothingConfig preset_wsd() {
  SmoothingConfig c;
  c.measure = Measure::Js;
  c.gamma = 0.0;
  c.k = kAllNeighbors;
  c.t = kNoThreshold;
  c.base = ModelKind::Mle;
  c.evidence = ModelKind::Mle;
  return c;
}

inline ModelKind parse_model_kind(const std::string& s) {
  if (s == "mle") return ModelKind::Mle;
  if (s == "katz") return ModelKind::Katz;
  throw Error("unknown base model '" + s + "' (expected mle or katz)");
}

inline std::size_t parse_k(const std::string& s) {
  if (s == "inf") return kAllNeighbors;
  std::size_t pos = 0;
  long long v = 0;
  try {
    v = std::stoll(s, &pos);
  } catch (const std::logic_error&) {
    throw Error("k must be a positive integer or inf, got '" + s + "'");
  }
  if (pos != s.size() || v < 1) throw Error("k must be a positive integer or inf, got '" + s + "'");
  return static_cast<std::size_t>(v);
}

inline double parse_real(const std::string& s, const char* what) {
  if (s == "inf") return kNoThreshold;
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::logic_error&) {
    throw Error(std::string(what) + ": not a number: '" + s + "'");
  }
  if (pos != s.size()) throw Error(std::string(what) + ": not a number: '" + s + "'");
  return v;
}

// Keys: measure, beta, gamma, k, t, base, evidence_base, seed.
inline void apply_config_value(SmoothingConfig& c, const std::string& key, const std::string& value) {
  if (key == "measure") c.measure = parse_measure(value);
  else if (key == "beta") c.beta = parse_real(value, "beta");
  else if (key == "gamma") c.gamma = parse_real(value, "gamma");
  else if (key == "k") c.k = parse_k(value);
  else if (key == "t") c.t = parse_real(value, "t");
  else if (key == "base") c.base = parse_model_kind(value);
  else if (key == "evidence_base") c.evidence = parse_model_kind(value);
  else if (key == "seed") c.seed = static_cast<std::uint64_t>(std::stoull(value));
  else throw Error("unknown config key '" + key + "'");
}

struct ConfigEntry {
  std::string key;
  std::string value;
  std::size_t line;
};

// Flat `key = value` text; '#' starts a comment line.
inline std::vector<ConfigEntry> read_config(std::istream& in, const std::string& source = "<config>") {
  std::vector<ConfigEntry> out;
  std::string line;
  std::size_t lineno = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string();
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(source, lineno, "expected key = value");
    out.push_back({trim(line.substr(0, eq)), trim(line.substr(eq + 1)), lineno});
    if (out.back().key.empty()) throw ParseError(source, lineno, "empty key");
  }
  return out;
}

// Weighted average of the neighbours' predictions for w2.
template <ConditionalModel Evidence>
double p_sim(WordId w2, const NeighborList& neighbors, const Evidence& evidence) {
  const double norm = neighbors.norm();
  if (neighbors.empty() || !(norm > 0.0)) throw Error("no similarity evidence for w1 id " + std::to_string(neighbors.owner));
  double s = 0.0;
  for (const auto& n : neighbors.entries)
    if (n.weight > 0.0) s += n.weight * evidence.prob(n.id, w2);
  return s / norm;
}

inline double p_redistribute(double gamma, double unigram, double psim) {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw Error("gamma must lie in [0, 1]");
  return gamma * unigram + (1.0 - gamma) * psim;
}

// Back-off model whose unseen-pair estimates come from similar words.
template <ConditionalModel Evidence>
class SmoothedModel {
 public:
  SmoothedModel(std::shared_ptr<const KatzModel> discount, SimilarityMatrix neighbors, std::shared_ptr<const Evidence> evidence,
                UnigramModel unigram, double gamma)
      : discount_(std::move(discount)),
        neighbors_(std::move(neighbors)),
        evidence_(std::move(evidence)),
        unigram_(std::move(unigram)),
        gamma_(gamma) {
    if (!(gamma_ >= 0.0 && gamma_ <= 1.0)) throw Error("gamma must lie in [0, 1]");
    if (neighbors_.size() != discount_->v1_size() || evidence_->v1_size() != discount_->v1_size() ||
        evidence_->v2_size() != discount_->v2_size() || unigram_.size() != discount_->v2_size())
      throw Error("smoothed model components disagree on vocabulary size");
    build();
  }

  ModelKind kind() const noexcept { return ModelKind::Similarity; }
  std::size_t v1_size() const noexcept { return discount_->v1_size(); }
  std::size_t v2_size() const noexcept { return discount_->v2_size(); }
  bool has_row(WordId w1) const { return discount_->has_row(w1); }
  double gamma() const noexcept { return gamma_; }
  const SimilarityMatrix& neighbors() const noexcept { return neighbors_; }
  const KatzModel& discount() const noexcept { return *discount_; }
  double alpha(WordId w1) const { return rows_.at(w1).alpha; }

  // Rows that had no usable neighbour and backed off to the unigram.
  std::size_t no_evidence_rows() const noexcept { return no_evidence_rows_; }
  // Rows whose neighbours gave every unseen w2 zero mass; also unigram.
  std::size_t zero_mass_rows() const noexcept { return zero_mass_rows_; }

  // Unnormalised redistribution estimate P_r(w2|w1).
  double redistribution(WordId w1, WordId w2) const {
    const auto& r = rows_.at(w1);
    const double uni = unigram_.prob(w2);
    if (r.unigram_only) return uni;
    return p_redistribute(gamma_, uni, p_sim(w2, neighbors_.row(w1), *evidence_));
  }

  double prob(WordId w1, WordId w2) const {
    if (w2 >= v2_size()) throw UnknownWord("V2", w2);
    if (!discount_->has_row(w1)) throw UndefinedRow(w1);
    if (discount_->table().count(w1, w2) > 0) return discount_->discounted(w1, w2);
    const auto& r = rows_[w1];
    if (r.alpha == 0.0) return 0.0;
    return r.alpha * redistribution(w1, w2);
  }

  SparseDistribution distribution(WordId w1) const {
    std::vector<double> dense(v2_size(), 0.0);
    accumulate_row(w1, 1.0, dense);
    return SparseDistribution::from_dense(dense);
  }

  void accumulate_row(WordId w1, double scale, std::span<double> out) const {
    if (!discount_->has_row(w1)) throw UndefinedRow(w1);
    std::vector<double> pr(v2_size(), 0.0);
    redistribution_row(w1, pr);
    const auto row = discount_->table().row(w1);
    const auto pd = discount_->discounted_row(w1);
    const double a = rows_[w1].alpha;
    std::size_t j = 0;
    for (WordId w2 = 0; w2 < v2_size(); ++w2) {
      if (j < row.size() && row[j].w2 == w2) out[w2] += scale * pd[j++];
      else if (a != 0.0) out[w2] += scale * a * pr[w2];
    }
  }

 private:
  struct Row {
    double alpha = 0.0;
    bool unigram_only = false;
  };

  void redistribution_row(WordId w1, std::span<double> pr) const {
    const auto uni = unigram_.probs();
    if (rows_[w1].unigram_only) {
      for (std::size_t i = 0; i < pr.size(); ++i) pr[i] = uni[i];
      return;
    }
    std::vector<double> sim(pr.size(), 0.0);
    const auto& nl = neighbors_.row(w1);
    const double norm = nl.norm();
    for (const auto& n : nl.entries)
      if (n.weight > 0.0) evidence_->accumulate_row(n.id, n.weight / norm, sim);
    for (std::size_t i = 0; i < pr.size(); ++i) pr[i] = gamma_ * uni[i] + (1.0 - gamma_) * sim[i];
  }

  void build() {
    rows_.assign(v1_size(), {});
    std::vector<double> pr(v2_size());
    std::vector<char> seen(v2_size(), 0);
    for (WordId w1 = 0; w1 < v1_size(); ++w1) {
      if (!discount_->has_row(w1)) continue;
      auto& r = rows_[w1];
      const auto& nl = neighbors_.row(w1);
      for (const auto& n : nl.entries)
        if (!evidence_->has_row(n.id)) throw Error("neighbour id " + std::to_string(n.id) + " has no evidence row");
      if (nl.empty() || !(nl.norm() > 0.0)) {
        r.unigram_only = true;
        ++no_evidence_rows_;
      }
      const double left = discount_->leftover(w1);
      if (left == 0.0) continue;

      const auto row = discount_->table().row(w1);
      for (const auto& e : row) seen[e.w2] = 1;
      auto unseen_mass = [&] {
        std::fill(pr.begin(), pr.end(), 0.0);
        redistribution_row(w1, pr);
        double s = 0.0;
        for (WordId w2 = 0; w2 < v2_size(); ++w2)
          if (!seen[w2]) s += pr[w2];
        return s;
      };
      double mass = unseen_mass();
      if (!(mass > 0.0) && !r.unigram_only) {
        r.unigram_only = true;
        ++zero_mass_rows_;
        mass = unseen_mass();
      }
      for (const auto& e : row) seen[e.w2] = 0;
      if (!(mass > 0.0)) throw Error("no redistribution mass for the unseen pairs of w1 id " + std::to_string(w1));
      r.alpha = left / mass;
    }
  }

  std::shared_ptr<const KatzModel> discount_;
  SimilarityMatrix neighbors_;
  std::shared_ptr<const Evidence> evidence_;
  UnigramModel unigram_;
  double gamma_;
  std::vector<Row> rows_;
  std::size_t no_evidence_rows_ = 0;
  std::size_t zero_mass_rows_ = 0;
};

}  // namespace simsmooth
