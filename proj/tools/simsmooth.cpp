// simsmooth: command-line front end.
//
//   simsmooth ingest PAIRS [--out COUNTS] [--drop-singletons]
//   simsmooth neighbors TABLE --word W [model flags]
//   simsmooth perplexity TRAIN [TEST] [model flags]
//   simsmooth disambig PAIRS [experiment flags] [--out REPORT.json] [--csv SWEEP.csv]
//   simsmooth tune PAIRS [experiment flags]
//   simsmooth synth --out PAIRS [generator flags]
//
// Settings are layered: command defaults < --preset < --config file < flags.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "simsmooth/basemodel.hpp"
#include "simsmooth/corpus.hpp"
#include "simsmooth/evaluation.hpp"
#include "simsmooth/experiment.hpp"
#include "simsmooth/similarity.hpp"
#include "simsmooth/smoothing.hpp"
#include "simsmooth/synthetic.hpp"

using namespace simsmooth;

namespace {

std::string fmt(double v, int precision = 6) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", precision, v);
  return buf;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "' for reading");
  return in;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  return out;
}

Corpus read_pairs(const std::string& path) {
  auto in = open_in(path);
  return ingest_pairs(in, path);
}

LoadedTable read_table(const std::string& path) {
  auto in = open_in(path);
  return read_count_table(in, path);
}

// "a:b:step" or "x,y,z".
std::vector<double> parse_real_grid(const std::string& text, const char* what) {
  std::vector<double> out;
  if (text.find(':') != std::string::npos) {
    std::vector<double> parts;
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ':')) parts.push_back(parse_real(tok, what));
    if (parts.size() != 3) throw Error(std::string(what) + ": range must be FROM:TO:STEP, got '" + text + "'");
    return linspace_step(parts[0], parts[1], parts[2]);
  }
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ','))
    if (!tok.empty()) out.push_back(parse_real(tok, what));
  return out;
}

std::vector<std::size_t> parse_k_list(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ','))
    if (!tok.empty()) out.push_back(parse_k(tok));
  return out;
}

std::vector<std::string> parse_names(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ','))
    if (!tok.empty()) out.push_back(tok);
  return out;
}

std::size_t edit_distance(const std::string& a, const std::string& b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j)
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

std::vector<std::string> nearest_words(const Vocabulary& v, const std::string& w, std::size_t n) {
  std::vector<std::pair<std::size_t, std::string>> scored;
  for (const auto& x : v.words()) scored.emplace_back(edit_distance(w, x), x);
  std::sort(scored.begin(), scored.end());
  std::vector<std::string> out;
  for (std::size_t i = 0; i < std::min(n, scored.size()); ++i) out.push_back(scored[i].second);
  return out;
}

// --------------------------------------------------------------- model flags

struct ModelFlags {
  std::string preset, config, measure, base, evidence, beta, gamma, k, t, seed;
  CLI::Option *o_preset = nullptr, *o_config = nullptr, *o_measure = nullptr, *o_base = nullptr, *o_evidence = nullptr,
              *o_beta = nullptr, *o_gamma = nullptr, *o_k = nullptr, *o_t = nullptr, *o_seed = nullptr;

  void attach(CLI::App* app, const SmoothingConfig& d) {
    o_preset = app->add_option("--preset", preset, "Parameter preset: lm (kl, katz base and evidence, gamma 0.15, k 60, t 2.5) "
                                                   "or wsd (js, mle base and evidence, gamma 0, all neighbours)")
                   ->check(CLI::IsMember({"lm", "wsd"}));
    o_config = app->add_option("--config", config, "key = value file overriding the preset; flags override the file")->check(CLI::ExistingFile);
    o_measure = app->add_option("--measure", measure, "Similarity measure {kl,js,l1,conf}")->default_str(to_string(d.measure));
    o_base = app->add_option("--base", base, "Model the measure is computed from {mle,katz}")->default_str(to_string(d.base));
    o_evidence = app->add_option("--evidence-base", evidence, "Model supplying P(w2|w1') inside P_SIM {mle,katz}")->default_str(to_string(d.evidence));
    o_beta = app->add_option("--beta", beta, "Weight exponent beta")->default_str(fmt(d.beta));
    o_gamma = app->add_option("--gamma", gamma, "Unigram interpolation gamma in [0,1]")->default_str(fmt(d.gamma));
    o_k = app->add_option("--k", k, "Neighbours per word, N or inf")->default_str(format_limit(d.k));
    o_t = app->add_option("--t", t, "Dissimilarity threshold, R or inf")->default_str(format_limit(d.t));
    o_seed = app->add_option("--seed", seed, "Random seed")->default_str(std::to_string(d.seed));
  }

  // With `model_only` false the measure flag is left to the caller, which
  // treats it as a method name.
  SmoothingConfig resolve(const SmoothingConfig& defaults, bool model_only = true) const {
    SmoothingConfig c = defaults;
    if (o_preset->count()) c = preset == "lm" ? preset_lm() : preset_wsd();
    if (o_config->count()) {
      auto in = open_in(config);
      for (const auto& e : read_config(in, config)) {
        try {
          apply_config_value(c, e.key, e.value);
        } catch (const ParseError&) {
          throw;
        } catch (const Error& err) {
          throw ParseError(config, e.line, err.what());
        }
      }
    }
    const std::pair<CLI::Option*, std::pair<const char*, const std::string*>> flags[] = {
        {o_measure, {"measure", &measure}}, {o_base, {"base", &base}},   {o_evidence, {"evidence_base", &evidence}},
        {o_beta, {"beta", &beta}},          {o_gamma, {"gamma", &gamma}}, {o_k, {"k", &k}},
        {o_t, {"t", &t}},                   {o_seed, {"seed", &seed}}};
    for (const auto& [opt, kv] : flags)
      if (opt->count() && (model_only || opt != o_measure)) apply_config_value(c, kv.first, *kv.second);
    if (model_only) c.validate();
    return c;
  }
};

// Base models and the similarity-smoothed model described by a config.
struct Models {
  std::shared_ptr<const PairCountTable> table;
  std::shared_ptr<const MleModel> mle;
  std::shared_ptr<const KatzModel> katz;
  std::variant<std::monostate, SmoothedModel<MleModel>, SmoothedModel<KatzModel>> smoothed;

  Models(std::shared_ptr<const PairCountTable> t, const SmoothingConfig& c, unsigned threads) : table(std::move(t)) {
    mle = std::make_shared<const MleModel>(table);
    katz = std::make_shared<const KatzModel>(katz_backoff(table, c.discount));
    const auto matrix = c.base == ModelKind::Mle ? build_similarity_matrix(*mle, c.measure, c.selection(), "mle", threads)
                                                 : build_similarity_matrix(*katz, c.measure, c.selection(), "katz", threads);
    const auto uni = mle_unigram(*table, Side::V2);
    if (c.evidence == ModelKind::Mle) smoothed.emplace<SmoothedModel<MleModel>>(katz, matrix, mle, uni, c.gamma);
    else smoothed.emplace<SmoothedModel<KatzModel>>(katz, matrix, katz, uni, c.gamma);
  }

  template <class F>
  auto visit(F&& f) const {
    if (const auto* m = std::get_if<SmoothedModel<MleModel>>(&smoothed)) return f(*m);
    return f(std::get<SmoothedModel<KatzModel>>(smoothed));
  }
};

std::string describe(const SmoothingConfig& c) {
  std::ostringstream s;
  s << "measure=" << to_string(c.measure) << " base=" << to_string(c.base) << " evidence_base=" << to_string(c.evidence)
    << " beta=" << fmt(c.beta) << " gamma=" << fmt(c.gamma) << " k=" << format_limit(c.k) << " t=" << format_limit(c.t);
  return s.str();
}

// --------------------------------------------------------------------- ingest

struct IngestArgs {
  std::string input, out;
  bool drop_singletons = false;
};

int cmd_ingest(const IngestArgs& a) {
  const auto c = read_pairs(a.input);
  auto table = count(c);
  const auto singletons = table.singletons();
  if (a.drop_singletons) table = remove_singletons(table);
  if (!a.out.empty()) {
    auto out = open_out(a.out);
    write_count_table(out, table, c.vocab);
  }
  std::cout << "N=" << table.total() << " |V1|=" << table.v1_size() << " |V2|=" << table.v2_size() << " singletons=" << singletons
            << '\n';
  return 0;
}

// ------------------------------------------------------------------ neighbors

struct NeighborsArgs {
  std::string input, word, out;
  ModelFlags model;
  unsigned threads = 1;
};

int cmd_neighbors(const NeighborsArgs& a) {
  const auto cfg = a.model.resolve(preset_wsd());
  auto loaded = read_table(a.input);
  const auto w = loaded.vocab.v1.find(a.word);
  if (!w) {
    std::cerr << "error: '" << a.word << "' is not in V1 of " << a.input;
    const auto near = nearest_words(loaded.vocab.v1, a.word, 5);
    if (!near.empty()) {
      std::cerr << "; nearest matches:";
      for (const auto& x : near) std::cerr << ' ' << x;
    }
    std::cerr << '\n';
    return 1;
  }
  const auto table = std::make_shared<const PairCountTable>(std::move(loaded.table));
  const MleModel mle(table);
  std::optional<KatzModel> katz;
  if (cfg.base == ModelKind::Katz) katz.emplace(katz_backoff(table, cfg.discount));

  NeighborList nl;
  double self = 0.0;
  if (katz) {
    nl = neighbors(*w, *katz, cfg.measure, cfg.selection());
    self = self_value(*w, *katz, cfg.measure);
  } else {
    nl = neighbors(*w, mle, cfg.measure, cfg.selection());
    self = self_value(*w, mle, cfg.measure);
  }
  // The word itself is listed in its rank position but is never a neighbour.
  std::vector<std::pair<Neighbor, bool>> rows;
  const Neighbor self_row{*w, self, weight(cfg.measure, self, cfg.beta)};
  bool placed = false;
  for (const auto& n : nl.entries) {
    if (!placed && !detail::closer(cfg.measure, n, self_row)) {
      rows.emplace_back(self_row, true);
      placed = true;
    }
    rows.emplace_back(n, false);
  }
  if (!placed) rows.emplace_back(self_row, true);

  std::ostream* out = &std::cout;
  std::ofstream file;
  if (!a.out.empty()) {
    file = open_out(a.out);
    out = &file;
  }
  *out << "# word=" << a.word << ' ' << describe(cfg) << '\n';
  *out << "rank\tword\t" << (cfg.measure == Measure::Confusion ? "p_c" : "value") << "\tweight\n";
  std::size_t rank = 0;
  for (const auto& [n, is_self] : rows) {
    *out << (is_self ? std::string("-") : std::to_string(++rank)) << '\t' << loaded.vocab.v1.word(n.id) << '\t' << fmt(n.value, 10)
         << '\t' << fmt(n.weight, 10) << '\n';
  }
  if (nl.excluded_undefined > 0 && a.out.empty())
    std::cerr << "note: " << nl.excluded_undefined << " candidates skipped because the divergence is undefined\n";
  return 0;
}

// ----------------------------------------------------------------- perplexity

struct PerplexityArgs {
  std::string train, test, out;
  double test_fraction = 0.2;
  ModelFlags model;
  unsigned threads = 1;
};

std::string describe(const PerplexityResult& r, const VocabularyIndex& v) {
  if (!r.infinite) return fmt(r.value, 8);
  std::string s = "infinite";
  if (r.offending) s += " (P(" + v.v2.word(r.offending->w2) + "|" + v.v1.word(r.offending->w1) + ") = 0)";
  return s;
}

int cmd_perplexity(const PerplexityArgs& a) {
  const auto cfg = a.model.resolve(preset_lm());
  VocabularyIndex vocab;
  PairList train, test;
  {
    auto c = read_pairs(a.train);
    vocab = std::move(c.vocab);
    train = std::move(c.pairs);
  }
  if (!a.test.empty()) {
    auto in = open_in(a.test);
    ingest_pairs(in, vocab, test, a.test);
  } else {
    const auto s = split_train_test(train, a.test_fraction, rng::derive(cfg.seed, "split"));
    train = s.train;
    test = s.test;
  }
  if (test.empty()) throw Error("the test set is empty");
  const auto table = std::make_shared<const PairCountTable>(count(train, vocab.v1.size(), vocab.v2.size()));
  const Models models(table, cfg, a.threads);

  const auto mle = unseen_subset_perplexity(*models.mle, test, *table);
  const auto katz = unseen_subset_perplexity(*models.katz, test, *table);
  const auto sim = models.visit([&](const auto& m) { return unseen_subset_perplexity(m, test, *table); });

  nlohmann::json report = {{"train_pairs", train.size()}, {"test_pairs", test.size()}, {"unseen_pairs", katz.n_unseen},
                           {"unseen_fraction", katz.unseen_fraction}, {"similarity", describe(cfg)}};
  std::cout << "# " << describe(cfg) << '\n';
  std::cout << "test pairs: " << test.size() << "  unseen in training: " << katz.n_unseen << " (" << fmt(100.0 * katz.unseen_fraction, 4)
            << "%)\n";
  std::cout << "model\toverall\tunseen\n";
  for (const auto& [name, r] : {std::pair<const char*, const UnseenPerplexity*>{"mle", &mle}, {"katz", &katz}, {"similarity", &sim}}) {
    const std::string unseen = r->unseen ? describe(*r->unseen, vocab) : "undefined (no unseen pairs)";
    std::cout << name << '\t' << describe(r->overall, vocab) << '\t' << unseen << '\n';
    auto value = [](const PerplexityResult& p) { return p.infinite ? nlohmann::json("inf") : nlohmann::json(p.value); };
    report[name] = {{"overall", value(r->overall)}, {"unseen", r->unseen ? value(*r->unseen) : nlohmann::json(nullptr)}};
  }
  if (katz.unseen && sim.unseen && !katz.unseen->infinite && !sim.unseen->infinite) {
    const double reduction = 1.0 - sim.unseen->value / katz.unseen->value;
    report["unseen_reduction"] = reduction;
    std::cout << "unseen reduction vs katz: " << fmt(100.0 * reduction, 4) << "%\n";
  }
  if (!a.out.empty()) open_out(a.out) << report.dump(2) << '\n';
  return 0;
}

// ------------------------------------------------------- disambig and tune

struct ExperimentArgs {
  std::string input, out, csv, methods, js_betas, l1_betas, kl_betas, gammas, vote_ks = "1,3,5,10,inf";
  ModelFlags model;
  std::size_t folds = 5;
  bool drop_singletons = false, voting = false, no_beta_sweep = false;
  unsigned threads = 1;
  CLI::Option *o_methods = nullptr, *o_js = nullptr, *o_l1 = nullptr, *o_kl = nullptr, *o_gammas = nullptr, *o_vote_ks = nullptr;
};

void attach_experiment(CLI::App* app, ExperimentArgs& a, const char* default_methods) {
  app->add_option("pairs", a.input, "Pair file (w1<TAB>w2[<TAB>count])")->required()->check(CLI::ExistingFile);
  a.model.attach(app, preset_wsd());
  a.o_methods = app->add_option("--methods", a.methods, "Comma list of methods {mle,katz,rand,conf,l1,js,kl}; --measure selects one")
                    ->default_str(default_methods);
  a.o_js = app->add_option("--js-betas", a.js_betas, "beta grid for js, FROM:TO:STEP or a comma list")->default_str("1:30:1");
  a.o_l1 = app->add_option("--l1-betas", a.l1_betas, "beta grid for l1")->default_str("0.5:8:0.5");
  a.o_kl = app->add_option("--kl-betas", a.kl_betas, "beta grid for kl")->default_str("0.5:8:0.5");
  a.o_gammas = app->add_option("--gammas", a.gammas, "gamma grid")->default_str("0");
  app->add_option("--folds", a.folds, "Cross-validation folds")->capture_default_str();
  app->add_flag("--drop-singletons", a.drop_singletons, "Delete singleton pairs from the training counts");
  app->add_option("--threads", a.threads, "Worker threads for similarity matrices")->capture_default_str();
}

ExperimentConfig resolve_experiment(const ExperimentArgs& a, const std::string& default_methods) {
  const auto sc = a.model.resolve(preset_wsd(), false);
  ExperimentConfig c;
  c.seed = sc.seed;
  c.folds = a.folds;
  c.drop_singletons = a.drop_singletons;
  c.k = sc.k;
  c.t = sc.t;
  c.evidence = sc.evidence;
  c.discount = sc.discount;
  c.threads = a.threads;
  c.methods = parse_names(default_methods);
  if (a.o_methods->count()) c.methods = parse_names(a.methods);
  if (a.model.o_measure->count()) c.methods = {a.model.measure};
  if (a.o_js->count()) c.js_betas = parse_real_grid(a.js_betas, "--js-betas");
  if (a.o_l1->count()) c.l1_betas = parse_real_grid(a.l1_betas, "--l1-betas");
  if (a.o_kl->count()) c.kl_betas = parse_real_grid(a.kl_betas, "--kl-betas");
  if (a.model.o_beta->count()) c.js_betas = c.l1_betas = c.kl_betas = {sc.beta};
  if (a.o_gammas->count()) c.gammas = parse_real_grid(a.gammas, "--gammas");
  if (a.model.o_gamma->count()) c.gammas = {sc.gamma};
  c.validate();
  return c;
}

void print_summary(const ExperimentReport& r) {
  std::cout << "pairs " << r.n_pairs << "  train " << r.n_train << "  test " << r.n_test << "  unseen " << r.n_unseen << "  instances "
            << r.n_instances << "  folds";
  for (auto s : r.fold_sizes) std::cout << ' ' << s;
  std::cout << '\n' << "method\tmean\tfold errors\n";
  for (const auto& m : r.methods) {
    std::cout << m.method << '\t' << fmt(m.mean_error(), 4) << '\t';
    for (const auto& f : m.folds) std::cout << ' ' << fmt(f.error, 4);
    std::cout << '\n';
  }
}

int cmd_disambig(const ExperimentArgs& a, const std::string& default_methods) {
  auto cfg = resolve_experiment(a, default_methods);
  cfg.beta_sweep = !a.no_beta_sweep;
  cfg.vote_ks.clear();
  if (a.voting) {
    cfg.vote_ks = parse_k_list(a.vote_ks);
    if (a.model.o_k->count() && !a.o_vote_ks->count()) cfg.vote_ks = {cfg.k};
    if (cfg.vote_ks.empty()) throw Error("--vote-ks: empty list");
  }
  const auto corpus = read_pairs(a.input);
  const auto rep = run_experiment(corpus, cfg);
  print_summary(rep);
  if (a.voting) {
    std::cout << "voting\tk\tmean error\n";
    for (const auto& name : cfg.methods)
      for (const auto& [k, e] : rep.sweep_curve("vote_k", name)) std::cout << name << '\t' << format_limit(k) << '\t' << fmt(e, 4) << '\n';
  }
  for (const auto& t : rep.t_tests)
    std::cout << "t-test " << t.a << " vs " << t.b << ": t=" << fmt(t.result.t, 4) << " p=" << fmt(t.result.p, 4) << '\n';
  if (!a.out.empty()) {
    open_out(a.out) << to_json(rep).dump(2) << '\n';
    std::string csv = a.csv;
    if (csv.empty()) {
      csv = a.out;
      const auto dot = csv.rfind('.');
      csv = (dot == std::string::npos || csv.find('/', dot) != std::string::npos ? csv : csv.substr(0, dot)) + ".csv";
    }
    auto out = open_out(csv);
    write_sweep_csv(out, rep);
  }
  return 0;
}

int cmd_tune(const ExperimentArgs& a) {
  auto cfg = resolve_experiment(a, "js");
  cfg.beta_sweep = false;
  cfg.vote_ks.clear();
  const auto corpus = read_pairs(a.input);
  const auto rep = run_experiment(corpus, cfg);
  std::cout << "method\tfold\tbeta\tgamma\tk\tt\ttuning error\theld-out error\n";
  for (const auto& m : rep.methods)
    for (std::size_t f = 0; f < m.folds.size(); ++f) {
      const auto& r = m.folds[f];
      std::cout << m.method << '\t' << f << '\t' << fmt(r.params.beta) << '\t' << fmt(r.params.gamma) << '\t' << format_limit(r.params.k)
                << '\t' << format_limit(r.params.t) << '\t' << fmt(r.tuning_error, 4) << '\t' << fmt(r.error, 4) << '\n';
    }
  if (!a.out.empty()) open_out(a.out) << to_json(rep).dump(2) << '\n';
  return 0;
}

// ---------------------------------------------------------------------- synth

int cmd_synth(const SyntheticParams& p, const std::string& out_path) {
  const auto c = generate_two_class_corpus(p);
  std::ostream* out = &std::cout;
  std::ofstream file;
  if (!out_path.empty()) {
    file = open_out(out_path);
    out = &file;
  }
  for (const auto& pr : c.pairs) *out << c.vocab.v1.word(pr.w1) << '\t' << c.vocab.v2.word(pr.w2) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Similarity-based smoothing of word-pair probabilities"};
  app.require_subcommand(1);
  app.footer(
      "Settings are layered: command defaults < --preset < --config < flags.\n"
      "neighbors, disambig and tune default to the wsd preset; perplexity to lm.");

  IngestArgs ingest;
  auto* c_ingest = app.add_subcommand("ingest", "Count a pair file and write an aggregated count table");
  c_ingest->add_option("pairs", ingest.input, "Pair file (w1<TAB>w2[<TAB>count])")->required();
  c_ingest->add_option("--out", ingest.out, "Count table to write");
  c_ingest->add_flag("--drop-singletons", ingest.drop_singletons, "Delete pairs seen exactly once");

  NeighborsArgs nb;
  auto* c_nb = app.add_subcommand("neighbors", "List the closest words of one w1");
  c_nb->add_option("table", nb.input, "Pair file or count table")->required();
  c_nb->add_option("--word", nb.word, "The w1 to report")->required();
  c_nb->add_option("--out", nb.out, "Write the table here instead of stdout");
  c_nb->add_option("--threads", nb.threads, "Worker threads")->capture_default_str();
  nb.model.attach(c_nb, preset_wsd());

  PerplexityArgs px;
  auto* c_px = app.add_subcommand("perplexity", "Compare Katz and similarity-based perplexity on a test set");
  c_px->add_option("train", px.train, "Training pairs or count table")->required();
  c_px->add_option("test", px.test, "Test pairs; without it, TRAIN is split by --test-fraction");
  c_px->add_option("--test-fraction", px.test_fraction, "Held-out share when no TEST is given")->capture_default_str();
  c_px->add_option("--out", px.out, "JSON report");
  c_px->add_option("--threads", px.threads, "Worker threads")->capture_default_str();
  px.model.attach(c_px, preset_lm());

  const std::string disambig_methods = "mle,katz,rand,conf,l1,js";
  ExperimentArgs dis;
  auto* c_dis = app.add_subcommand("disambig", "Pseudo-word disambiguation with cross-validated parameters");
  attach_experiment(c_dis, dis, disambig_methods.c_str());
  c_dis->add_option("--out", dis.out, "JSON report; the sweep CSV goes next to it unless --csv is given");
  c_dis->add_option("--csv", dis.csv, "Sweep CSV (sweep,method,param,fold,error)");
  c_dis->add_flag("--voting", dis.voting, "Also run the neighbour-voting sweep");
  dis.o_vote_ks = c_dis->add_option("--vote-ks", dis.vote_ks, "Neighbour counts for --voting; --k alone selects one")->capture_default_str();
  c_dis->add_flag("--no-beta-sweep", dis.no_beta_sweep, "Skip the per-beta error curves");

  ExperimentArgs tune;
  auto* c_tune = app.add_subcommand("tune", "Report the grid-search choice on each cross-validation fold");
  attach_experiment(c_tune, tune, "js");
  c_tune->add_option("--out", tune.out, "JSON report");

  SyntheticParams sp;
  std::string synth_out;
  auto* c_synth = app.add_subcommand("synth", "Write the seeded two-class synthetic pair corpus");
  c_synth->add_option("--out", synth_out, "Pair file to write (stdout if omitted)");
  c_synth->add_option("--nouns", sp.nouns, "Number of nouns (V1)")->capture_default_str();
  c_synth->add_option("--verbs", sp.verbs, "Number of verbs (V2)")->capture_default_str();
  c_synth->add_option("--pairs", sp.pairs, "Number of pair tokens")->capture_default_str();
  c_synth->add_option("--noun-exponent", sp.noun_exponent, "Zipf exponent of noun frequency")->capture_default_str();
  c_synth->add_option("--verb-exponent", sp.verb_exponent, "Zipf exponent within a verb class")->capture_default_str();
  c_synth->add_option("--purity", sp.purity, "Probability a noun uses its own class")->capture_default_str();
  c_synth->add_option("--leakage", sp.leakage, "Probability the chosen class is flipped")->capture_default_str();
  c_synth->add_option("--generic", sp.generic, "Number of class-neutral frequent nouns")->capture_default_str();
  c_synth->add_option("--idiosyncrasy", sp.idiosyncrasy, "Share of a generic noun's pairs from its own verb profile")->capture_default_str();
  c_synth->add_option("--seed", sp.seed, "Random seed")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*c_ingest) return cmd_ingest(ingest);
    if (*c_nb) return cmd_neighbors(nb);
    if (*c_px) return cmd_perplexity(px);
    if (*c_dis) return cmd_disambig(dis, disambig_methods);
    if (*c_tune) return cmd_tune(tune);
    if (*c_synth) return cmd_synth(sp, synth_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
