#include "netanom/adversarial.hpp"

#include "netanom/classifiers.hpp"
#include "netanom/rng.hpp"

#include "doctest.h"
#include "test_support.hpp"

#include <algorithm>
#include <cmath>
#include <set>

using namespace netanom;
using namespace netanom::adv;
using testsup::same_matrix;

namespace {

// two shifted gaussian columns, labels in a block
Dataset gaussian_dataset(int n0, int n1, std::uint64_t seed) {
    Dataset d;
    d.feature_names = {"f0", "f1"};
    d.features.resize(n0 + n1, 2);
    d.labels.resize(n0 + n1);
    Rng rng(seed);
    for (int i = 0; i < n0 + n1; ++i) {
        const int label = i < n0 ? 0 : 1;
        d.labels[i] = label;
        d.features(i, 0) = rng.normal(label * 3.0, 1.0);
        d.features(i, 1) = rng.normal(-label * 2.0, 1.0);
    }
    return d;
}

}  // namespace

TEST_CASE("perturbation config validates its fields") {
    PerturbationConfig c;
    c.features = {0, 1};
    CHECK_NOTHROW(c.validate(3));

    PerturbationConfig bad = c;
    bad.epsilon = 0.0;
    CHECK_THROWS_AS(bad.validate(3), std::invalid_argument);
    bad = c;
    bad.fraction = 0.0;
    CHECK_THROWS_AS(bad.validate(3), std::invalid_argument);
    bad = c;
    bad.fraction = 1.5;
    CHECK_THROWS_AS(bad.validate(3), std::invalid_argument);
    bad = c;
    bad.features = {};
    CHECK_THROWS_AS(bad.validate(3), std::invalid_argument);
    bad = c;
    bad.features = {0, 3};
    CHECK_THROWS_AS(bad.validate(3), std::invalid_argument);
    bad = c;
    bad.features = {1, 1};
    CHECK_THROWS_AS(bad.validate(3), std::invalid_argument);

    nlohmann::json j = c.to_json();
    CHECK(j["epsilon"] == 0.1);
    CHECK(j["fraction"] == 0.2);
    CHECK(j["features"] == nlohmann::json({0, 1}));
    CHECK(j["seed"] == 1);
}

TEST_CASE("mean shift lands the malicious mean on the normal mean") {
    Matrix X(3, 1);
    X << 2, 4, 10;
    VecI y(3);
    y << 0, 0, 1;
    Matrix out = feature_mean_shift(X, y, {0});
    CHECK(out(0, 0) == 2.0);
    CHECK(out(1, 0) == 4.0);
    CHECK(out(2, 0) == 3.0);  // exactly the normal mean
}

TEST_CASE("mean shift is exact on random data and touches nothing else") {
    Rng rng(31);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 20 + static_cast<int>(rng.uniform_index(60));
        Matrix X(n, 4);
        VecI y(n);
        int n1 = 0;
        for (int i = 0; i < n; ++i) {
            y[i] = static_cast<int>(rng.uniform_index(2));
            n1 += y[i];
            for (int j = 0; j < 4; ++j) X(i, j) = rng.normal(y[i] * 5.0, 2.0);
        }
        if (n1 == 0) { y[0] = 1; n1 = 1; }
        if (n1 == n) { y[0] = 0; n1 -= 1; }

        std::vector<int> selected = {1, 3};
        Matrix out = feature_mean_shift(X, y, selected);

        for (int j : {0, 2}) {
            for (int i = 0; i < n; ++i) CHECK(out(i, j) == X(i, j));
        }
        for (int j : selected) {
            double normal_before = 0.0, malicious_after = 0.0;
            for (int i = 0; i < n; ++i) {
                if (y[i] == 0) {
                    normal_before += X(i, j);
                    CHECK(out(i, j) == X(i, j));  // normal rows untouched
                } else {
                    malicious_after += out(i, j);
                }
            }
            normal_before /= static_cast<double>(n - n1);
            malicious_after /= static_cast<double>(n1);
            CHECK(malicious_after == doctest::Approx(normal_before).epsilon(1e-9));
        }
    }
}

TEST_CASE("mean shift rejects bad inputs") {
    Matrix X(2, 1);
    X << 1, 2;
    VecI y(2);
    y << 0, 1;
    CHECK_THROWS_AS(feature_mean_shift(X, y, {}), std::invalid_argument);
    CHECK_THROWS_AS(feature_mean_shift(X, y, {1}), std::invalid_argument);
    VecI ones = VecI::Ones(2);
    CHECK_THROWS_AS(feature_mean_shift(X, ones, {0}), std::invalid_argument);
    VecI short_y(1);
    short_y << 0;
    CHECK_THROWS_AS(feature_mean_shift(X, short_y, {0}), std::invalid_argument);
}

TEST_CASE("fgsm on one feature moves every touched row by exactly epsilon") {
    // single separating column: fraction 1 perturbs everything
    Matrix X(8, 1);
    X << 0.0, 0.5, 1.0, 1.5, 8.0, 8.5, 9.0, 9.5;
    VecI y(8);
    y << 0, 0, 0, 0, 1, 1, 1, 1;

    FgsmResult res = lda_fgsm(X, y, 0.1, 1.0, 7);
    REQUIRE(res.rows.size() == 8);
    CHECK(std::is_sorted(res.rows.begin(), res.rows.end()));

    clf::LdaClassifier lda;
    lda.fit(X, y);
    VecD d = lda.decision_function(X);
    for (Eigen::Index i = 0; i < 8; ++i) {
        if (d[i] > 0.0) CHECK(res.features(i, 0) == X(i, 0) - 0.1);
        else CHECK(res.features(i, 0) == X(i, 0) + 0.1);
    }
}

TEST_CASE("fgsm samples ceil(fraction * n) rows and leaves the rest bitwise alone") {
    Dataset d = gaussian_dataset(30, 10, 11);
    FgsmResult res = lda_fgsm(d.features, d.labels, 0.25, 0.25, 5);
    CHECK(res.rows.size() == 10);  // ceil(0.25 * 40)

    FgsmResult odd = lda_fgsm(d.features, d.labels, 0.25, 0.26, 5);
    CHECK(odd.rows.size() == 11);  // ceil(10.4)

    std::set<Eigen::Index> touched(res.rows.begin(), res.rows.end());
    for (Eigen::Index i = 0; i < d.features.rows(); ++i) {
        if (touched.count(i)) continue;
        for (Eigen::Index j = 0; j < d.features.cols(); ++j)
            CHECK(res.features(i, j) == d.features(i, j));
    }
    // touched rows move in every nonzero-weight coordinate
    clf::LdaClassifier lda;
    lda.fit(d.features, d.labels);
    for (Eigen::Index r : res.rows) {
        for (Eigen::Index j = 0; j < d.features.cols(); ++j) {
            if (lda.coefficients()[j] != 0.0)
                CHECK(std::abs(res.features(r, j) - d.features(r, j)) ==
                      doctest::Approx(0.25).epsilon(1e-12));
            else
                CHECK(res.features(r, j) == d.features(r, j));
        }
    }
}

TEST_CASE("fgsm is seed-deterministic") {
    Dataset d = gaussian_dataset(25, 15, 13);
    FgsmResult a = lda_fgsm(d.features, d.labels, 0.1, 0.3, 21);
    FgsmResult b = lda_fgsm(d.features, d.labels, 0.1, 0.3, 21);
    CHECK(a.rows == b.rows);
    CHECK(same_matrix(a.features, b.features));
    FgsmResult c = lda_fgsm(d.features, d.labels, 0.1, 0.3, 22);
    CHECK(a.rows != c.rows);  // 12 of 40 rows; collision over seeds is ~impossible
}

TEST_CASE("fgsm validates epsilon and fraction") {
    Dataset d = gaussian_dataset(5, 5, 1);
    CHECK_THROWS_AS(lda_fgsm(d.features, d.labels, 0.0, 0.5, 1), std::invalid_argument);
    CHECK_THROWS_AS(lda_fgsm(d.features, d.labels, 0.1, 0.0, 1), std::invalid_argument);
    CHECK_THROWS_AS(lda_fgsm(d.features, d.labels, 0.1, 1.1, 1), std::invalid_argument);
}

TEST_CASE("build_training_sets assembles the triple with provenance") {
    Dataset train = gaussian_dataset(40, 20, 3);
    PerturbationConfig cfg;
    cfg.epsilon = 0.2;
    cfg.fraction = 0.5;
    cfg.features = {0};
    cfg.seed = 9;

    TrainingSetTriple triple = build_training_sets(train, cfg);

    CHECK(same_matrix(triple.t1.features, train.features));
    CHECK(same_matrix(triple.t1.labels, train.labels));
    CHECK(triple.t1.feature_names == train.feature_names);
    CHECK(triple.t2.feature_names == train.feature_names);
    CHECK(same_matrix(triple.t2.labels, train.labels));
    CHECK(same_matrix(triple.t3.labels, train.labels));
    CHECK(triple.fgsm_rows.size() == 30);
    CHECK_FALSE(same_matrix(triple.t2.features, train.features));
    CHECK_FALSE(same_matrix(triple.t3.features, train.features));

    // t3 touches only the configured column, and only malicious rows
    for (Eigen::Index i = 0; i < train.features.rows(); ++i) {
        CHECK(triple.t3.features(i, 1) == train.features(i, 1));
        if (train.labels[i] == 0) CHECK(triple.t3.features(i, 0) == train.features(i, 0));
    }

    const auto& prov = triple.provenance;
    CHECK(prov["config"]["epsilon"] == 0.2);
    CHECK(prov["fgsm_rows"] == 30);
    const auto& means = prov["class_means"];
    REQUIRE(means["before"]["normal"].size() == 2);
    double normal_before = means["before"]["normal"][0].get<double>();
    double malicious_after = means["after"]["malicious"][0].get<double>();
    CHECK(malicious_after == doctest::Approx(normal_before).epsilon(1e-9));
    CHECK(means["after"]["normal"][0].get<double>() == normal_before);

    // same config reproduces the triple bitwise
    TrainingSetTriple again = build_training_sets(train, cfg);
    CHECK(same_matrix(again.t2.features, triple.t2.features));
    CHECK(same_matrix(again.t3.features, triple.t3.features));

    PerturbationConfig bad = cfg;
    bad.features = {7};
    CHECK_THROWS_AS(build_training_sets(train, bad), std::invalid_argument);
}
