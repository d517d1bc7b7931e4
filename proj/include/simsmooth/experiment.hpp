#pragma once

// End-to-end pseudo-word disambiguation experiment:
//   ingest -> split -> count -> [singleton deletion] -> unseen -> pseudowords
//   -> instances -> folds -> cross-validation per method -> sweeps -> t-tests
// plus its JSON and CSV reports.

#include <map>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "simsmooth/evaluation.hpp"

namespace simsmooth {

class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& what) : Error(stage + ": " + what), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

// Method names: mle, katz, rand, conf, l1, js, kl.
inline const std::vector<std::string>& known_methods() {
  static const std::vector<std::string> names = {"mle", "katz", "rand", "conf", "l1", "js", "kl"};
  return names;
}

inline std::optional<Measure> method_measure(const std::string& name) {
  if (name == "conf") return Measure::Confusion;
  if (name == "l1") return Measure::L1;
  if (name == "js") return Measure::Js;
  if (name == "kl") return Measure::Kl;
  return std::nullopt;
}

struct ExperimentConfig {
  std::uint64_t seed = 1;
  double test_fraction = 0.2;
  std::size_t folds = 5;
  bool drop_singletons = false;
  std::vector<std::string> methods = {"mle", "katz", "rand", "conf", "l1", "js"};
  std::vector<double> js_betas = linspace_step(1.0, 30.0, 1.0);
  std::vector<double> l1_betas = linspace_step(0.5, 8.0, 0.5);
  std::vector<double> kl_betas = linspace_step(0.5, 8.0, 0.5);
  std::vector<double> gammas = {0.0};
  std::size_t k = kAllNeighbors;
  double t = kNoThreshold;
  ModelKind evidence = ModelKind::Mle;
  DiscountParams discount;
  bool beta_sweep = true;
  std::vector<std::size_t> vote_ks = {1, 3, 5, 10, kAllNeighbors};  // empty: no voting sweep
  unsigned threads = 1;

  const std::vector<double>& betas(Measure m) const {
    switch (m) {
      case Measure::Js: return js_betas;
      case Measure::L1: return l1_betas;
      default: return kl_betas;
    }
  }

  void validate() const {
    if (folds < 2) throw Error("need at least 2 folds");
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw Error("test fraction must lie in (0, 1)");
    if (methods.empty()) throw Error("no methods configured");
    for (const auto& m : methods)
      if (std::find(known_methods().begin(), known_methods().end(), m) == known_methods().end()) throw Error("unknown method '" + m + "'");
    for (const auto* g : {&js_betas, &l1_betas, &kl_betas, &gammas})
      if (g->empty()) throw Error("empty parameter grid");
    for (double g : gammas)
      if (!(g >= 0.0 && g <= 1.0)) throw Error("gamma must lie in [0, 1]");
    for (const auto* g : {&js_betas, &l1_betas, &kl_betas})
      for (double b : *g)
        if (b < 0.0) throw Error("beta must be non-negative");
    if (k == 0) throw Error("k must be at least 1");
    if (!(t > 0.0)) throw Error("t must be positive");
    for (auto vk : vote_ks)
      if (vk == 0) throw Error("voting k must be at least 1");
    if (evidence == ModelKind::Similarity) throw Error("evidence model must be mle or katz");
  }
};

struct SweepPoint {
  std::string sweep;   // "beta" or "vote_k"
  std::string method;
  double param = 0.0;  // +inf for k = all
  std::size_t fold = 0;
  double error = 0.0;
};

struct NamedTTest {
  std::string a;
  std::string b;
  TTestResult result;
};

struct ExperimentReport {
  ExperimentConfig config;
  std::size_t n_pairs = 0;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  std::size_t n_unseen = 0;
  std::size_t train_singletons = 0;
  std::size_t n_instances = 0;
  std::size_t dropped_leftover = 0;
  std::size_t dropped_seen_distractor = 0;
  std::optional<std::string> pseudoword_leftover;
  std::vector<std::size_t> fold_sizes;
  std::vector<CrossValidationReport> methods;
  std::vector<SweepPoint> sweeps;
  std::vector<NamedTTest> t_tests;

  const CrossValidationReport& method(const std::string& name) const {
    for (const auto& m : methods)
      if (m.method == name) return m;
    throw Error("no method '" + name + "' in report");
  }

  bool has_method(const std::string& name) const {
    return std::any_of(methods.begin(), methods.end(), [&](const auto& m) { return m.method == name; });
  }

  // Per-fold errors of one sweep curve point, in fold order.
  std::vector<double> sweep_errors(const std::string& sweep, const std::string& method, double param) const {
    std::vector<double> e;
    for (const auto& s : sweeps)
      if (s.sweep == sweep && s.method == method && s.param == param) e.push_back(s.error);
    return e;
  }

  // Mean error at each param of one sweep, in ascending param order.
  std::vector<std::pair<double, double>> sweep_curve(const std::string& sweep, const std::string& method) const {
    std::map<double, std::pair<double, std::size_t>> acc;
    for (const auto& s : sweeps)
      if (s.sweep == sweep && s.method == method) {
        acc[s.param].first += s.error;
        ++acc[s.param].second;
      }
    std::vector<std::pair<double, double>> out;
    for (const auto& [p, v] : acc) out.push_back({p, v.first / static_cast<double>(v.second)});
    return out;
  }
};

namespace detail {

template <class F>
auto stage(const char* name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

// Lazily built models for one training table, shared by all methods.
class ExperimentModels {
 public:
  ExperimentModels(std::shared_ptr<const PairCountTable> table, const ExperimentConfig& cfg)
      : cfg_(cfg),
        table_(std::move(table)),
        mle_(std::make_shared<MleModel>(table_)),
        katz_(std::make_shared<KatzModel>(katz_backoff(table_, cfg.discount))),
        unigram_(mle_unigram(*table_, Side::V2)) {}

  const MleModel& mle() const { return *mle_; }
  const KatzModel& katz() const { return *katz_; }

  const SimilarityMatrix& matrix(Measure m) {
    auto it = matrices_.find(m);
    if (it != matrices_.end()) return it->second;
    const SelectionParams sel{0.0, cfg_.k, cfg_.t};
    SimilarityMatrix built;
    if (m == Measure::Random) built = build_rand_matrix(*mle_, rng::derive(cfg_.seed, "rand"));
    else if (m == Measure::Kl) built = build_similarity_matrix(*katz_, m, sel, "katz", cfg_.threads);
    else built = build_similarity_matrix(*mle_, m, sel, "mle", cfg_.threads);
    return matrices_.emplace(m, std::move(built)).first->second;
  }

  // Decisions of the smoothed model with measure m at p.
  std::vector<Decision> smoothed(Measure m, const ParamPoint& p, std::span<const TestInstance> set) {
    const auto key = std::make_pair(m, p);
    auto it = smoothed_.find(key);
    if (it == smoothed_.end()) {
      auto sel = m == Measure::Random ? matrix(m) : matrix(m).reselect(p.selection());
      Entry e;
      if (cfg_.evidence == ModelKind::Mle) e.mle = std::make_shared<SmoothedModel<MleModel>>(katz_, std::move(sel), mle_, unigram_, p.gamma);
      else e.katz = std::make_shared<SmoothedModel<KatzModel>>(katz_, std::move(sel), katz_, unigram_, p.gamma);
      it = smoothed_.emplace(key, std::move(e)).first;
    }
    if (it->second.mle) return disambiguate_all(*it->second.mle, set);
    return disambiguate_all(*it->second.katz, set);
  }

  template <class Set>
  std::vector<Decision> vote(Measure m, std::size_t k, const Set& set) {
    const auto& mat = matrix(m);
    std::vector<Decision> out;
    out.reserve(set.size());
    for (const auto& inst : set) {
      const auto nl = truncate(mat.row(inst.w1), k);
      if (cfg_.evidence == ModelKind::Mle) out.push_back(vote_disambiguate(nl, *mle_, inst));
      else out.push_back(vote_disambiguate(nl, *katz_, inst));
    }
    return out;
  }

 private:
  struct Entry {
    std::shared_ptr<const SmoothedModel<MleModel>> mle;
    std::shared_ptr<const SmoothedModel<KatzModel>> katz;
  };

  const ExperimentConfig& cfg_;
  std::shared_ptr<const PairCountTable> table_;
  std::shared_ptr<const MleModel> mle_;
  std::shared_ptr<const KatzModel> katz_;
  UnigramModel unigram_;
  std::map<Measure, SimilarityMatrix> matrices_;
  std::map<std::pair<Measure, ParamPoint>, Entry> smoothed_;
};

inline Method make_method(const std::string& name, ExperimentModels& models, const ExperimentConfig& cfg) {
  const ParamPoint fixed{0.0, 0.0, cfg.k, cfg.t};
  if (name == "mle")
    return {name, {fixed}, [&models](const ParamPoint&, std::span<const TestInstance> s) { return disambiguate_all(models.mle(), s); }};
  if (name == "katz")
    return {name, {fixed}, [&models](const ParamPoint&, std::span<const TestInstance> s) { return disambiguate_all(models.katz(), s); }};
  if (name == "rand") {
    std::vector<ParamPoint> grid;
    for (double g : cfg.gammas) grid.push_back({0.0, g, kAllNeighbors, kNoThreshold});
    return {name, grid, [&models](const ParamPoint& p, std::span<const TestInstance> s) { return models.smoothed(Measure::Random, p, s); }};
  }
  const Measure m = *method_measure(name);
  std::vector<ParamPoint> grid;
  if (m == Measure::Confusion) {
    for (double g : cfg.gammas) grid.push_back({0.0, g, cfg.k, cfg.t});
  } else {
    const std::vector<std::size_t> ks{cfg.k};
    const std::vector<double> ts{cfg.t};
    grid = make_grid(cfg.betas(m), cfg.gammas, ks, ts);
  }
  return {name, grid, [&models, m](const ParamPoint& p, std::span<const TestInstance> s) { return models.smoothed(m, p, s); }};
}

}  // namespace detail

inline ExperimentReport run_experiment(const Corpus& corpus, const ExperimentConfig& cfg) {
  detail::stage("config", [&] { cfg.validate(); });
  ExperimentReport rep;
  rep.config = cfg;
  rep.n_pairs = corpus.pairs.size();
  const std::size_t nv1 = corpus.vocab.v1.size();
  const std::size_t nv2 = corpus.vocab.v2.size();

  const auto split = detail::stage("split", [&] { return split_train_test(corpus.pairs, cfg.test_fraction, rng::derive(cfg.seed, "split")); });
  rep.n_train = split.train.size();
  rep.n_test = split.test.size();

  const auto full = detail::stage("count", [&] { return count(split.train, nv1, nv2); });
  rep.train_singletons = full.singletons();
  auto table = std::make_shared<const PairCountTable>(cfg.drop_singletons ? remove_singletons(full) : full);

  // Unseen pairs, pseudowords and instances come from the complete training
  // table so that both singleton conditions are scored on the same instances.
  const auto unseen = detail::stage("unseen", [&] { return extract_unseen(split.test, full); });
  rep.n_unseen = unseen.size();
  const auto pw = detail::stage("pseudowords", [&] { return build_pseudowords(full); });
  if (pw.leftover) rep.pseudoword_leftover = corpus.vocab.v2.word(*pw.leftover);
  const auto inst = detail::stage("instances", [&] { return make_instances(unseen, pw, full); });
  rep.n_instances = inst.instances.size();
  rep.dropped_leftover = inst.dropped_leftover;
  rep.dropped_seen_distractor = inst.dropped_seen_distractor;
  const auto folds = detail::stage("folds", [&] {
    return make_folds(std::span<const TestInstance>(inst.instances), cfg.folds, rng::derive(cfg.seed, "folds"));
  });
  for (const auto& f : folds) rep.fold_sizes.push_back(f.size());

  auto models = detail::stage("models", [&] { return std::make_unique<detail::ExperimentModels>(table, cfg); });

  for (const auto& name : cfg.methods) {
    detail::stage(("cross-validation " + name).c_str(), [&] {
      const auto method = detail::make_method(name, *models, cfg);
      rep.methods.push_back(cross_validate(folds, method));
    });
  }

  if (cfg.beta_sweep) {
    detail::stage("beta sweep", [&] {
      for (const auto& name : cfg.methods) {
        const auto m = method_measure(name);
        if (!m || *m == Measure::Confusion) continue;
        const double gamma = cfg.gammas.front();
        for (double b : cfg.betas(*m))
          for (std::size_t f = 0; f < folds.size(); ++f)
            rep.sweeps.push_back({"beta", name, b, f, error_rate(models->smoothed(*m, {b, gamma, cfg.k, cfg.t}, folds[f]))});
      }
    });
  }

  if (!cfg.vote_ks.empty()) {
    detail::stage("voting sweep", [&] {
      for (const auto& name : cfg.methods) {
        const auto m = method_measure(name);
        if (!m) continue;
        for (auto k : cfg.vote_ks) {
          const double param = k == kAllNeighbors ? kNoThreshold : static_cast<double>(k);
          for (std::size_t f = 0; f < folds.size(); ++f) rep.sweeps.push_back({"vote_k", name, param, f, error_rate(models->vote(*m, k, folds[f]))});
        }
      }
    });
  }

  detail::stage("t-tests", [&] {
    for (std::size_t i = 0; i < rep.methods.size(); ++i)
      for (std::size_t j = i + 1; j < rep.methods.size(); ++j) {
        const auto a = rep.methods[i].errors();
        const auto b = rep.methods[j].errors();
        rep.t_tests.push_back({rep.methods[i].method, rep.methods[j].method, paired_t_test(a, b)});
      }
  });
  return rep;
}

// ------------------------------------------------------------------ reports

namespace detail {

inline nlohmann::json limit_json(std::size_t k) { return k == kAllNeighbors ? nlohmann::json("inf") : nlohmann::json(k); }
inline nlohmann::json limit_json(double t) { return std::isinf(t) ? nlohmann::json("inf") : nlohmann::json(t); }

}  // namespace detail

inline nlohmann::json to_json(const ParamPoint& p) {
  return {{"beta", p.beta}, {"gamma", p.gamma}, {"k", detail::limit_json(p.k)}, {"t", detail::limit_json(p.t)}};
}

inline nlohmann::json to_json(const TTestResult& t) {
  nlohmann::json j = {{"df", t.df}, {"mean_difference", t.mean_difference}, {"degenerate", t.degenerate}, {"p", t.p}};
  j["t"] = std::isinf(t.t) ? nlohmann::json(t.t > 0 ? "inf" : "-inf") : nlohmann::json(t.t);
  return j;
}

inline nlohmann::json to_json(const ExperimentConfig& c) {
  auto list = [](const std::vector<double>& v) { return nlohmann::json(v); };
  nlohmann::json ks = nlohmann::json::array();
  for (auto k : c.vote_ks) ks.push_back(detail::limit_json(k));
  return {{"seed", c.seed},
          {"test_fraction", c.test_fraction},
          {"folds", c.folds},
          {"drop_singletons", c.drop_singletons},
          {"methods", c.methods},
          {"js_betas", list(c.js_betas)},
          {"l1_betas", list(c.l1_betas)},
          {"kl_betas", list(c.kl_betas)},
          {"gammas", list(c.gammas)},
          {"k", detail::limit_json(c.k)},
          {"t", detail::limit_json(c.t)},
          {"evidence_base", to_string(c.evidence)},
          {"r_threshold", c.discount.r_threshold},
          {"fallback_discount", c.discount.fallback_discount},
          {"vote_ks", ks},
          {"seeds",
           {{"split", rng::derive(c.seed, "split")}, {"folds", rng::derive(c.seed, "folds")}, {"rand", rng::derive(c.seed, "rand")}}}};
}

inline nlohmann::json to_json(const ExperimentReport& r) {
  nlohmann::json methods = nlohmann::json::array();
  for (const auto& m : r.methods) {
    nlohmann::json folds = nlohmann::json::array();
    for (const auto& f : m.folds) folds.push_back({{"error", f.error}, {"tuning_error", f.tuning_error}, {"params", to_json(f.params)}});
    methods.push_back({{"method", m.method}, {"mean_error", m.mean_error()}, {"folds", folds}});
  }
  nlohmann::json tests = nlohmann::json::array();
  for (const auto& t : r.t_tests) tests.push_back({{"a", t.a}, {"b", t.b}, {"result", to_json(t.result)}});
  nlohmann::json curves = nlohmann::json::object();
  for (const auto& sweep : {"beta", "vote_k"})
    for (const auto& name : r.config.methods) {
      const auto c = r.sweep_curve(sweep, name);
      if (c.empty()) continue;
      nlohmann::json pts = nlohmann::json::array();
      for (const auto& [p, e] : c) pts.push_back({{"param", detail::limit_json(p)}, {"mean_error", e}});
      curves[sweep][name] = pts;
    }
  return {{"config", to_json(r.config)},
          {"data",
           {{"pairs", r.n_pairs},
            {"train", r.n_train},
            {"test", r.n_test},
            {"unseen", r.n_unseen},
            {"train_singletons", r.train_singletons},
            {"instances", r.n_instances},
            {"dropped_leftover", r.dropped_leftover},
            {"dropped_seen_distractor", r.dropped_seen_distractor},
            {"pseudoword_leftover", r.pseudoword_leftover ? nlohmann::json(*r.pseudoword_leftover) : nlohmann::json(nullptr)},
            {"fold_sizes", r.fold_sizes}}},
          {"methods", methods},
          {"t_tests", tests},
          {"sweeps", curves}};
}

inline void write_sweep_csv(std::ostream& out, const ExperimentReport& r) {
  out << "sweep,method,param,fold,error\n";
  char buf[64];
  for (const auto& s : r.sweeps) {
    std::snprintf(buf, sizeof buf, "%.17g", s.error);
    out << s.sweep << ',' << s.method << ',' << format_limit(s.param) << ',' << s.fold << ',' << buf << '\n';
  }
}

}  // namespace simsmooth
