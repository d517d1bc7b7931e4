#include <gtest/gtest.h>

#include <sstream>

#include "simsmooth/experiment.hpp"
#include "simsmooth/synthetic.hpp"

using namespace simsmooth;

namespace {

SyntheticParams small_corpus() {
  SyntheticParams p;
  p.nouns = 60;
  p.verbs = 30;
  p.pairs = 3000;
  p.generic = 6;
  p.seed = 3;
  return p;
}

ExperimentConfig small_config() {
  ExperimentConfig c;
  c.folds = 3;
  c.methods = {"mle", "katz", "rand", "conf", "js", "l1"};
  c.js_betas = {2.0, 8.0};
  c.l1_betas = {1.0, 4.0};
  c.vote_ks = {1, kAllNeighbors};
  return c;
}

}  // namespace

TEST(Synthetic, DeterministicAndSized) {
  const auto p = small_corpus();
  const auto a = generate_two_class_corpus(p);
  const auto b = generate_two_class_corpus(p);
  EXPECT_EQ(a.pairs, b.pairs);
  EXPECT_EQ(a.pairs.size(), 3000u);
  EXPECT_EQ(a.vocab.v1.size(), 60u);
  EXPECT_EQ(a.vocab.v2.size(), 30u);
  auto q = p;
  q.seed = 4;
  EXPECT_NE(generate_two_class_corpus(q).pairs, a.pairs);
}

TEST(Synthetic, NonGenericNounsPreferTheirClass) {
  auto p = small_corpus();
  p.pairs = 20000;
  const auto c = generate_two_class_corpus(p);
  std::size_t same = 0, total = 0;
  for (const auto& pr : c.pairs) {
    if (is_generic_noun(p, pr.w1)) continue;
    ++total;
    if (noun_class(pr.w1) == verb_class(pr.w2)) ++same;
  }
  const double expected = p.purity * (1 - p.leakage) + (1 - p.purity) * p.leakage;
  EXPECT_NEAR(static_cast<double>(same) / static_cast<double>(total), expected, 0.02);
}

TEST(Experiment, SmallRunIsConsistent) {
  const auto corpus = generate_two_class_corpus(small_corpus());
  const auto cfg = small_config();
  const auto rep = run_experiment(corpus, cfg);
  EXPECT_EQ(rep.n_pairs, 3000u);
  EXPECT_EQ(rep.n_train + rep.n_test, 3000u);
  EXPECT_EQ(rep.n_test, 600u);
  EXPECT_EQ(rep.n_instances + rep.dropped_leftover + rep.dropped_seen_distractor, rep.n_unseen);
  std::size_t fold_total = 0;
  for (auto s : rep.fold_sizes) fold_total += s;
  EXPECT_EQ(fold_total, rep.n_instances);
  ASSERT_EQ(rep.methods.size(), cfg.methods.size());
  for (const auto& m : rep.methods) {
    EXPECT_EQ(m.folds.size(), 3u);
    for (const auto& f : m.folds) {
      EXPECT_GE(f.error, 0.0);
      EXPECT_LE(f.error, 1.0);
    }
  }
  // every instance is an unseen pair with an unseen distractor: all ties
  EXPECT_EQ(rep.method("mle").mean_error(), 0.5);
  for (const auto& f : rep.method("js").folds) EXPECT_TRUE(f.params.beta == 2.0 || f.params.beta == 8.0);
  EXPECT_LT(rep.method("js").mean_error(), rep.method("mle").mean_error());
  EXPECT_EQ(rep.t_tests.size(), 15u);
  EXPECT_EQ(rep.sweep_curve("beta", "js").size(), 2u);
  EXPECT_EQ(rep.sweep_curve("beta", "conf").size(), 0u);
  EXPECT_EQ(rep.sweep_curve("vote_k", "l1").size(), 2u);
  EXPECT_EQ(rep.sweep_errors("beta", "l1", 4.0).size(), 3u);
  EXPECT_THROW(rep.method("kl"), Error);
}

TEST(Experiment, DeterministicForSeed) {
  const auto corpus = generate_two_class_corpus(small_corpus());
  auto cfg = small_config();
  cfg.methods = {"katz", "js"};
  EXPECT_EQ(to_json(run_experiment(corpus, cfg)).dump(), to_json(run_experiment(corpus, cfg)).dump());
  auto other = cfg;
  other.seed = 2;
  EXPECT_NE(to_json(run_experiment(corpus, other)).dump(), to_json(run_experiment(corpus, cfg)).dump());
}

TEST(Experiment, SingletonDeletionKeepsInstances) {
  const auto corpus = generate_two_class_corpus(small_corpus());
  auto cfg = small_config();
  cfg.methods = {"katz", "js"};
  cfg.vote_ks.clear();
  const auto a = run_experiment(corpus, cfg);
  cfg.drop_singletons = true;
  const auto b = run_experiment(corpus, cfg);
  EXPECT_EQ(a.n_instances, b.n_instances);
  EXPECT_EQ(a.fold_sizes, b.fold_sizes);
  EXPECT_GT(b.train_singletons, 0u);
}

TEST(Experiment, JsonAndCsvOutput) {
  const auto corpus = generate_two_class_corpus(small_corpus());
  auto cfg = small_config();
  cfg.methods = {"mle", "js"};
  const auto rep = run_experiment(corpus, cfg);
  const auto j = to_json(rep);
  EXPECT_EQ(j["config"]["k"], "inf");
  EXPECT_EQ(j["config"]["vote_ks"][1], "inf");
  EXPECT_EQ(j["config"]["seeds"]["split"], rng::derive(1, "split"));
  EXPECT_EQ(j["methods"][0]["method"], "mle");
  EXPECT_EQ(j["methods"][0]["mean_error"], 0.5);
  EXPECT_EQ(j["data"]["instances"], rep.n_instances);
  EXPECT_EQ(j["t_tests"].size(), 1u);
  EXPECT_EQ(j["sweeps"]["beta"]["js"].size(), 2u);
  EXPECT_EQ(nlohmann::json::parse(j.dump()), j);

  std::ostringstream csv;
  write_sweep_csv(csv, rep);
  std::istringstream in(csv.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "sweep,method,param,fold,error");
  std::size_t rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, rep.sweeps.size());
  EXPECT_NE(csv.str().find("vote_k,js,inf,0,"), std::string::npos);
}

TEST(Experiment, FailuresNameTheStage) {
  const auto corpus = generate_two_class_corpus(small_corpus());
  auto cfg = small_config();
  cfg.js_betas.clear();
  try {
    run_experiment(corpus, cfg);
    FAIL() << "expected a stage error";
  } catch (const StageError& e) {
    EXPECT_EQ(e.stage(), "config");
  }
  auto tiny = small_corpus();
  tiny.pairs = 12;
  cfg = small_config();
  cfg.folds = 50;
  try {
    run_experiment(generate_two_class_corpus(tiny), cfg);
    FAIL() << "expected a stage error";
  } catch (const StageError& e) {
    EXPECT_EQ(e.stage(), "folds");
  }
}

TEST(Experiment, ConfigValidation) {
  auto c = small_config();
  c.validate();
  c.methods = {"cosine"};
  EXPECT_THROW(c.validate(), Error);
  c = small_config();
  c.gammas = {1.5};
  EXPECT_THROW(c.validate(), Error);
  c = small_config();
  c.vote_ks = {0};
  EXPECT_THROW(c.validate(), Error);
  c = small_config();
  c.folds = 1;
  EXPECT_THROW(c.validate(), Error);
}
