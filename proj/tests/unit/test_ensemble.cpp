#include "netanom/ensemble.hpp"

#include "netanom/metrics.hpp"
#include "netanom/rng.hpp"

#include "doctest.h"
#include "test_support.hpp"

#include <cmath>
#include <vector>

using namespace netanom;
using namespace netanom::ens;
using testsup::same_matrix;

namespace {

// well-separated training triple plus a held-out test set
struct Fixture {
    adv::TrainingSetTriple triple;
    Dataset test;
};

Fixture make_fixture(int n_normal = 120, int n_malicious = 60, double sep = 4.0,
                     std::uint64_t seed = 5) {
    Dataset full = data::synth_generate(n_normal, n_malicious, 4, sep, seed);
    data::SplitResult split = data::train_test_split(full, 0.25, seed, true);

    adv::PerturbationConfig cfg;
    cfg.epsilon = 0.1;
    cfg.fraction = 0.2;
    cfg.features = {0, 1};
    cfg.seed = seed;

    Fixture f;
    f.triple = adv::build_training_sets(split.train, cfg);
    f.test = std::move(split.test);
    return f;
}

}  // namespace

TEST_CASE("default member specs map models to training sets") {
    auto specs = default_member_specs(42);
    REQUIRE(specs.size() == 3);
    CHECK(specs[0].kind == clf::Kind::LogisticRegression);
    CHECK(specs[1].kind == clf::Kind::DecisionTree);
    CHECK(specs[2].kind == clf::Kind::Lda);
    CHECK(specs[0].params.seed != specs[1].params.seed);
    CHECK(specs[1].params.seed != specs[2].params.seed);
    auto again = default_member_specs(42);
    CHECK(specs[0].params.seed == again[0].params.seed);
}

TEST_CASE("level-1 members carry their own stats and names") {
    Fixture f = make_fixture();
    Level1Stack stack = train_level1(f.triple, default_member_specs(7));
    REQUIRE(stack.members.size() == 3);
    CHECK(stack.members[0].training_set == "T1");
    CHECK(stack.members[1].training_set == "T2");
    CHECK(stack.members[2].training_set == "T3");
    for (const auto& m : stack.members) {
        CHECK(m.model->fitted());
        CHECK(m.stats.size() == f.triple.t1.n_cols());
        CHECK(m.train_seconds >= 0.0);
    }

    Matrix meta = level1_meta_features(stack, f.test.features);
    CHECK(meta.rows() == f.test.features.rows());
    CHECK(meta.cols() == 3);
    CHECK((meta.array() >= 0.0).all());
    CHECK((meta.array() <= 1.0).all());

    // member stats differ because t2/t3 were perturbed
    CHECK(stack.members[0].stats.means[0] != stack.members[2].stats.means[0]);

    Matrix narrow(2, 2);
    narrow.setZero();
    CHECK_THROWS_AS(level1_meta_features(stack, narrow), std::invalid_argument);
}

TEST_CASE("level-1 training is thread-invariant") {
    Fixture f = make_fixture();
    Level1Stack one = train_level1(f.triple, default_member_specs(3), 1);
    Level1Stack four = train_level1(f.triple, default_member_specs(3), 4);
    CHECK(same_matrix(level1_meta_features(one, f.test.features),
                      level1_meta_features(four, f.test.features)));
}

TEST_CASE("stacked ensemble predicts end to end and round-trips") {
    Fixture f = make_fixture();
    auto specs = default_member_specs(11);
    StackedEnsemble ens;
    ens.level1 = train_level1(f.triple, specs);
    Matrix meta = level1_meta_features(ens.level1, f.triple.t1.features);
    clf::HyperParams l2p;
    l2p.seed = 19;
    ens.level2 = train_level2(meta, f.triple.t1.labels, clf::Kind::GaussianNb, l2p);
    ens.meta_feature_names = {"lr_t1", "dt_t2", "lda_t3"};

    PipelinePrediction pred = predict_pipeline(ens, f.test.features);
    CHECK(pred.labels.size() == f.test.n_rows());
    CHECK(pred.malicious.size() == f.test.n_rows());
    auto m = metrics::f1_per_class(f.test.labels, pred.labels);
    CHECK(m.malicious.f1 >= 0.9);

    nlohmann::json j = ens.to_json();
    CHECK(j["version"] == 1);
    StackedEnsemble back = StackedEnsemble::from_json(j);
    PipelinePrediction pred2 = predict_pipeline(back, f.test.features);
    CHECK(same_matrix(pred.labels, pred2.labels));
    CHECK(same_matrix(pred.malicious, pred2.malicious));
    CHECK(back.meta_feature_names == ens.meta_feature_names);

    nlohmann::json bad = j;
    bad["version"] = 3;
    CHECK_THROWS_AS(StackedEnsemble::from_json(bad), std::invalid_argument);
    bad = j;
    bad["meta_feature_names"] = {"only_one"};
    CHECK_THROWS_AS(StackedEnsemble::from_json(bad), std::invalid_argument);
}

TEST_CASE("stratified folds balance both classes") {
    VecI labels(20);
    for (int i = 0; i < 20; ++i) labels[i] = i < 12 ? 0 : 1;
    auto folds = stratified_folds(labels, 4, 9);
    REQUIRE(folds.size() == 20);
    std::vector<int> count0(4, 0), count1(4, 0);
    for (int i = 0; i < 20; ++i) {
        REQUIRE(folds[i] >= 0);
        REQUIRE(folds[i] < 4);
        (labels[i] == 0 ? count0 : count1)[static_cast<std::size_t>(folds[i])] += 1;
    }
    for (int f = 0; f < 4; ++f) {
        CHECK(count0[static_cast<std::size_t>(f)] == 3);
        CHECK(count1[static_cast<std::size_t>(f)] == 2);
    }

    CHECK(stratified_folds(labels, 4, 9) == folds);
    CHECK(stratified_folds(labels, 4, 10) != folds);

    CHECK_THROWS_AS(stratified_folds(labels, 1, 9), std::invalid_argument);
    VecI tiny(5);
    tiny << 0, 0, 0, 0, 1;  // one malicious row cannot reach two folds
    CHECK_THROWS_AS(stratified_folds(tiny, 2, 9), std::invalid_argument);
}

TEST_CASE("grid search ranks candidates by mean malicious f1") {
    // interior band on feature 0: one split cannot isolate it, two can
    Rng rng(23);
    const int n = 160;
    Matrix X(n, 2);
    VecI y(n);
    for (int i = 0; i < n; ++i) {
        X(i, 0) = rng.uniform(-1.0, 1.0);
        X(i, 1) = rng.uniform(-1.0, 1.0);
        y[i] = std::abs(X(i, 0)) < 0.5 ? 1 : 0;
    }
    clf::HyperParams shallow;
    shallow.max_depth = 1;
    clf::HyperParams deep;
    deep.max_depth = 2;
    GridSearchResult res = grid_search(clf::Kind::DecisionTree, {shallow, deep}, X, y, 4, 3);
    CHECK(res.best_index == 1);
    CHECK(res.best_hyperparams.max_depth == 2);
    CHECK(res.best_score > 0.9);
    REQUIRE(res.table.size() == 2);
    CHECK(res.table[1].second == res.best_score);
    CHECK(res.table[0].second < res.best_score);
    CHECK(res.folds == 4);

    nlohmann::json j = res.to_json();
    CHECK(j["best_index"] == 1);
    CHECK(j["best_score"] == res.best_score);
    CHECK(j["folds"] == 4);
    CHECK(j["table"].size() == 2);
    CHECK(j["table"][0].contains("hyperparams"));
    CHECK(j["table"][0].contains("mean_f1"));
    CHECK(j["best_hyperparams"]["max_depth"] == 2);

    // identical candidates tie; the earliest wins
    GridSearchResult tie = grid_search(clf::Kind::DecisionTree, {deep, deep, deep}, X, y, 4, 3);
    CHECK(tie.best_index == 0);

    CHECK_THROWS_AS(grid_search(clf::Kind::DecisionTree, {}, X, y, 4, 3), std::invalid_argument);
    clf::HyperParams bad;
    bad.max_depth = -2;
    CHECK_THROWS_AS(grid_search(clf::Kind::DecisionTree, {bad}, X, y, 4, 3),
                    std::invalid_argument);
}

TEST_CASE("out-of-fold meta features have the right shape and determinism") {
    Fixture f = make_fixture(160, 80);
    auto specs = default_member_specs(13);
    Matrix oof = level1_meta_features_oof(f.triple, specs, 4, 21);
    CHECK(oof.rows() == f.triple.t1.n_rows());
    CHECK(oof.cols() == 3);
    CHECK((oof.array() >= 0.0).all());
    CHECK((oof.array() <= 1.0).all());

    Matrix again = level1_meta_features_oof(f.triple, specs, 4, 21);
    CHECK(same_matrix(oof, again));
    Matrix other = level1_meta_features_oof(f.triple, specs, 4, 22);
    CHECK_FALSE(same_matrix(oof, other));

    // oof estimates still separate a well-split problem
    clf::HyperParams p;
    auto l2 = train_level2(oof, f.triple.t1.labels, clf::Kind::GaussianNb, p);
    VecI preds = l2->predict(oof);
    auto m = metrics::f1_per_class(f.triple.t1.labels, preds);
    CHECK(m.malicious.f1 >= 0.9);
}
