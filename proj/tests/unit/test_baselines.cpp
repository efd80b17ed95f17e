#include "netanom/baselines.hpp"

#include "netanom/metrics.hpp"
#include "netanom/rng.hpp"

#include "doctest.h"
#include "test_support.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

using namespace netanom;
using namespace netanom::base;
using testsup::same_matrix;

namespace {

constexpr double kGamma = 0.5772156649015329;

// dense cluster with a handful of distant points appended
Matrix cluster_with_outliers(int n_in, int n_out, std::uint64_t seed) {
    Rng rng(seed);
    Matrix X(n_in + n_out, 2);
    for (int i = 0; i < n_in; ++i) {
        X(i, 0) = rng.normal(0.0, 1.0);
        X(i, 1) = rng.normal(0.0, 1.0);
    }
    for (int i = 0; i < n_out; ++i) {
        double angle = rng.uniform(0.0, 6.283185307179586);
        double radius = rng.uniform(9.0, 12.0);
        X(n_in + i, 0) = radius * std::cos(angle);
        X(n_in + i, 1) = radius * std::sin(angle);
    }
    return X;
}

VecI outlier_labels(int n_in, int n_out) {
    VecI y(n_in + n_out);
    for (int i = 0; i < n_in + n_out; ++i) y[i] = i < n_in ? 0 : 1;
    return y;
}

// apply a row permutation: out.row(i) = in.row(perm[i])
Matrix permute_rows(const Matrix& X, const std::vector<int>& perm) {
    Matrix out(X.rows(), X.cols());
    for (Eigen::Index i = 0; i < X.rows(); ++i)
        out.row(i) = X.row(perm[static_cast<std::size_t>(i)]);
    return out;
}

}  // namespace

TEST_CASE("average path length follows the harmonic formula") {
    CHECK(average_path_length(0) == 0.0);
    CHECK(average_path_length(1) == 0.0);
    CHECK(average_path_length(2) ==
          doctest::Approx(2.0 * kGamma - 1.0).epsilon(1e-12));
    CHECK(average_path_length(256) ==
          doctest::Approx(2.0 * (std::log(255.0) + kGamma) - 2.0 * 255.0 / 256.0).epsilon(1e-12));
    CHECK(average_path_length(100) > average_path_length(10));
}

TEST_CASE("isolation forest ranks planted outliers above the cluster") {
    Matrix X = cluster_with_outliers(300, 20, 5);
    VecI y = outlier_labels(300, 20);
    VecD scores = isolation_forest_score(X, 100, 256, 7);
    REQUIRE(scores.size() == 320);
    CHECK((scores.array() > 0.0).all());
    CHECK((scores.array() < 1.0).all());
    CHECK(metrics::auc(y, scores) >= 0.9);

    double mean_in = scores.head(300).mean();
    double mean_out = scores.tail(20).mean();
    CHECK(mean_out > mean_in);
}

TEST_CASE("isolation forest is deterministic and thread-invariant") {
    Matrix X = cluster_with_outliers(80, 6, 9);
    VecD a = isolation_forest_score(X, 40, 64, 3, 1);
    VecD b = isolation_forest_score(X, 40, 64, 3, 4);
    CHECK(same_matrix(a, b));
    VecD c = isolation_forest_score(X, 40, 64, 4, 1);
    CHECK_FALSE(same_matrix(a, c));
}

TEST_CASE("isolation forest with full subsample is permutation-equivariant") {
    Matrix X = cluster_with_outliers(60, 5, 11);
    const int n = 65;
    VecD base = isolation_forest_score(X, 30, n, 13);  // subsample == n: no row sampling

    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    Rng rng(21);
    rng.shuffle(perm);
    Matrix Xp = permute_rows(X, perm);
    VecD permuted = isolation_forest_score(Xp, 30, n, 13);
    for (int i = 0; i < n; ++i)
        CHECK(permuted[i] == base[perm[static_cast<std::size_t>(i)]]);

    // oversized subsample clamps to n, so scores are identical
    VecD clamped = isolation_forest_score(X, 30, 10 * n, 13);
    CHECK(same_matrix(clamped, base));
}

TEST_CASE("isolation forest rejects degenerate input") {
    Matrix one(1, 2);
    one.setZero();
    CHECK_THROWS_AS(isolation_forest_score(one), std::invalid_argument);
    Matrix X(4, 1);
    X << 1, 2, 3, 4;
    CHECK_THROWS_AS(isolation_forest_score(X, 0), std::invalid_argument);
    CHECK_THROWS_AS(isolation_forest_score(X, 10, 1), std::invalid_argument);
    Matrix bad = X;
    bad(0, 0) = std::nan("");
    CHECK_THROWS_AS(isolation_forest_score(bad), std::invalid_argument);
}

TEST_CASE("lof scores the grid fixture by density") {
    // 5x5 unit grid plus one far point
    Matrix X(26, 2);
    int r = 0;
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j) {
            X(r, 0) = i;
            X(r, 1) = j;
            ++r;
        }
    X(25, 0) = 10.0;
    X(25, 1) = 10.0;

    VecD scores = lof_score(X, 3);
    REQUIRE(scores.size() == 26);
    // interior 3x3 sub-grid is locally uniform
    for (int i = 1; i < 4; ++i)
        for (int j = 1; j < 4; ++j) {
            double s = scores[i * 5 + j];
            CHECK(s >= 0.9);
            CHECK(s <= 1.1);
        }
    CHECK(scores[25] > 1.5);
}

TEST_CASE("lof with k = n-1 is symmetric across a regular polygon") {
    // regular octagon: every point is interchangeable
    Matrix X(8, 2);
    for (int i = 0; i < 8; ++i) {
        double a = 2.0 * 3.141592653589793 * i / 8.0;
        X(i, 0) = std::cos(a);
        X(i, 1) = std::sin(a);
    }
    VecD scores = lof_score(X, 7);
    for (int i = 0; i < 8; ++i) {
        CHECK(scores[i] == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(std::abs(scores[i] - scores[0]) <= 1e-9);
    }
}

TEST_CASE("lof is exactly permutation-equivariant") {
    Matrix X = cluster_with_outliers(50, 4, 15);
    const int n = 54;
    VecD base = lof_score(X, 5);

    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    Rng rng(33);
    rng.shuffle(perm);
    VecD permuted = lof_score(permute_rows(X, perm), 5);
    for (int i = 0; i < n; ++i)
        CHECK(permuted[i] == base[perm[static_cast<std::size_t>(i)]]);
}

TEST_CASE("lof stays finite on duplicated points and flags the stray") {
    Matrix X(7, 1);
    X << 1, 1, 1, 1, 1, 1, 50;  // six coincident points
    VecD scores = lof_score(X, 2);
    for (int i = 0; i < 7; ++i) CHECK(std::isfinite(scores[i]));
    CHECK(scores[6] > scores[0]);
}

TEST_CASE("lof validates k and the matrix") {
    Matrix X(5, 1);
    X << 1, 2, 3, 4, 5;
    CHECK_THROWS_AS(lof_score(X, 0), std::invalid_argument);
    CHECK_THROWS_AS(lof_score(X, 5), std::invalid_argument);
    Matrix bad = X;
    bad(2, 0) = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(lof_score(bad, 2), std::invalid_argument);
}

TEST_CASE("quantile threshold uses the nearest-rank rule") {
    VecD scores(10);
    scores << 1, 2, 3, 4, 5, 6, 7, 8, 9, 10;
    VecI top = threshold_by_quantile(scores, 0.1);
    CHECK(top.sum() == 1);
    CHECK(top[9] == 1);

    VecI none = threshold_by_quantile(scores, 0.0);
    CHECK(none.sum() == 0);

    VecI most = threshold_by_quantile(scores, 1.0);
    CHECK(most.sum() == 9);  // strict > keeps the minimum unflagged
    CHECK(most[0] == 0);

    // ties at the threshold stay unflagged
    VecD tied(4);
    tied << 1, 2, 2, 2;
    VecI flags = threshold_by_quantile(tied, 0.5);
    CHECK(flags.sum() == 0);  // rank 2 -> threshold 2; nothing exceeds it

    CHECK_THROWS_AS(threshold_by_quantile(scores, -0.1), std::invalid_argument);
    CHECK_THROWS_AS(threshold_by_quantile(scores, 1.5), std::invalid_argument);
}
