#include "netanom/baselines.hpp"

#include "netanom/rng.hpp"
#include "netanom/util.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace netanom::base {

namespace {

constexpr double kEulerGamma = 0.5772156649015329;

struct IsoNode {
    int feature = -1;  // -1 marks a leaf
    double split = 0.0;
    int left = -1;
    int right = -1;
    int size = 0;      // rows that landed here during build
    int depth = 0;
};

struct IsoBuildItem {
    int node;
    std::vector<int> rows;
    int depth;
};

std::vector<IsoNode> grow_iso_tree(const Matrix& X, const std::vector<int>& sample_rows,
                                   int height_limit, Rng& rng) {
    const int m = static_cast<int>(X.cols());
    std::vector<IsoNode> nodes;
    std::vector<IsoBuildItem> work;
    nodes.emplace_back();
    work.push_back({0, sample_rows, 0});

    while (!work.empty()) {
        IsoBuildItem item = std::move(work.back());
        work.pop_back();
        IsoNode& nd = nodes[static_cast<std::size_t>(item.node)];
        nd.size = static_cast<int>(item.rows.size());
        nd.depth = item.depth;
        if (item.depth >= height_limit || item.rows.size() <= 1) continue;

        // only columns that actually vary on this node's rows can split it
        std::vector<int> usable;
        std::vector<double> lo_of(static_cast<std::size_t>(m)), hi_of(static_cast<std::size_t>(m));
        for (int f = 0; f < m; ++f) {
            double lo = X(item.rows[0], f), hi = lo;
            for (int r : item.rows) {
                lo = std::min(lo, X(r, f));
                hi = std::max(hi, X(r, f));
            }
            if (hi > lo) {
                usable.push_back(f);
                lo_of[static_cast<std::size_t>(f)] = lo;
                hi_of[static_cast<std::size_t>(f)] = hi;
            }
        }
        if (usable.empty()) continue;

        int f = usable[rng.uniform_index(usable.size())];
        double split = rng.uniform(lo_of[static_cast<std::size_t>(f)],
                                   hi_of[static_cast<std::size_t>(f)]);

        std::vector<int> left_rows, right_rows;
        for (int r : item.rows) (X(r, f) < split ? left_rows : right_rows).push_back(r);

        int li = static_cast<int>(nodes.size());
        nodes.emplace_back();
        int ri = static_cast<int>(nodes.size());
        nodes.emplace_back();
        nodes[static_cast<std::size_t>(item.node)].feature = f;
        nodes[static_cast<std::size_t>(item.node)].split = split;
        nodes[static_cast<std::size_t>(item.node)].left = li;
        nodes[static_cast<std::size_t>(item.node)].right = ri;
        work.push_back({ri, std::move(right_rows), item.depth + 1});
        work.push_back({li, std::move(left_rows), item.depth + 1});
    }
    return nodes;
}

double iso_path_length(const std::vector<IsoNode>& nodes, const Matrix& X, Eigen::Index row) {
    int idx = 0;
    while (nodes[static_cast<std::size_t>(idx)].feature >= 0) {
        const IsoNode& nd = nodes[static_cast<std::size_t>(idx)];
        idx = X(row, nd.feature) < nd.split ? nd.left : nd.right;
    }
    const IsoNode& leaf = nodes[static_cast<std::size_t>(idx)];
    return static_cast<double>(leaf.depth) + average_path_length(leaf.size);
}

}  // namespace

double average_path_length(std::int64_t n) {
    if (n < 2) return 0.0;
    double h = std::log(static_cast<double>(n - 1)) + kEulerGamma;
    return 2.0 * h - 2.0 * static_cast<double>(n - 1) / static_cast<double>(n);
}

VecD isolation_forest_score(const Matrix& features, int n_trees, int subsample,
                            std::uint64_t seed, int threads) {
    const Eigen::Index n = features.rows();
    if (n < 2) throw std::invalid_argument("isolation forest: need >= 2 rows");
    if (n_trees < 1) throw std::invalid_argument("isolation forest: need >= 1 tree");
    if (subsample < 2) throw std::invalid_argument("isolation forest: subsample must be >= 2");
    if (!features.allFinite())
        throw std::invalid_argument("isolation forest: non-finite feature values");
    const auto psi = static_cast<std::size_t>(
        std::min<Eigen::Index>(subsample, n));
    const int height_limit =
        static_cast<int>(std::ceil(std::log2(static_cast<double>(psi))));

    std::vector<std::vector<IsoNode>> trees(static_cast<std::size_t>(n_trees));
    parallel_for(static_cast<std::size_t>(n_trees), threads, [&](std::size_t t) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(t)));
        std::vector<int> rows;
        if (psi < static_cast<std::size_t>(n)) {
            auto picked = rng.sample_without_replacement(static_cast<std::size_t>(n), psi);
            rows.assign(picked.begin(), picked.end());
        } else {
            rows.resize(static_cast<std::size_t>(n));
            for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = static_cast<int>(i);
        }
        trees[t] = grow_iso_tree(features, rows, height_limit, rng);
    });

    const double norm = average_path_length(static_cast<std::int64_t>(psi));
    VecD scores(n);
    parallel_for(static_cast<std::size_t>(n), threads, [&](std::size_t i) {
        double mean_path = 0.0;
        for (const auto& tree : trees)
            mean_path += iso_path_length(tree, features, static_cast<Eigen::Index>(i));
        mean_path /= static_cast<double>(trees.size());
        scores[static_cast<Eigen::Index>(i)] = std::exp2(-mean_path / norm);
    });
    return scores;
}

VecD lof_score(const Matrix& features, int k, int threads) {
    const Eigen::Index n = features.rows();
    if (k < 1) throw std::invalid_argument("lof: k must be >= 1");
    if (k >= n) throw std::invalid_argument("lof: k must be < number of rows");
    if (!features.allFinite()) throw std::invalid_argument("lof: non-finite feature values");

    Matrix dist(n, n);
    parallel_for(static_cast<std::size_t>(n), threads, [&](std::size_t ii) {
        auto i = static_cast<Eigen::Index>(ii);
        dist(i, i) = 0.0;
        for (Eigen::Index j = 0; j < n; ++j)
            if (j != i) dist(i, j) = (features.row(i) - features.row(j)).norm();
    });

    // k-distance by value, neighborhoods include ties at the boundary
    VecD kdist(n);
    std::vector<std::vector<Eigen::Index>> neighbors(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        std::vector<double> d;
        d.reserve(static_cast<std::size_t>(n - 1));
        for (Eigen::Index j = 0; j < n; ++j)
            if (j != i) d.push_back(dist(i, j));
        std::nth_element(d.begin(), d.begin() + (k - 1), d.end());
        kdist[i] = d[static_cast<std::size_t>(k - 1)];
        for (Eigen::Index j = 0; j < n; ++j)
            if (j != i && dist(i, j) <= kdist[i])
                neighbors[static_cast<std::size_t>(i)].push_back(j);
    }

    // sums run over sorted values so row order cannot perturb the rounding
    std::vector<double> terms;
    auto ordered_sum = [&terms]() {
        std::sort(terms.begin(), terms.end());
        double total = 0.0;
        for (double v : terms) total += v;
        return total;
    };

    VecD lrd(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        terms.clear();
        for (Eigen::Index j : neighbors[static_cast<std::size_t>(i)])
            terms.push_back(std::max(kdist[j], dist(i, j)));  // reachability distance
        double mean_reach =
            ordered_sum() / static_cast<double>(neighbors[static_cast<std::size_t>(i)].size());
        lrd[i] = 1.0 / std::max(mean_reach, 1e-12);
    }

    VecD scores(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        terms.clear();
        for (Eigen::Index j : neighbors[static_cast<std::size_t>(i)]) terms.push_back(lrd[j]);
        scores[i] = ordered_sum() /
                    (static_cast<double>(neighbors[static_cast<std::size_t>(i)].size()) * lrd[i]);
    }
    return scores;
}

VecI threshold_by_quantile(const VecD& scores, double contamination) {
    if (contamination < 0.0 || contamination > 1.0)
        throw std::invalid_argument("threshold: contamination must be in [0,1]");
    const Eigen::Index n = scores.size();
    if (n < 1) throw std::invalid_argument("threshold: empty scores");

    std::vector<double> sorted(scores.data(), scores.data() + n);
    std::sort(sorted.begin(), sorted.end());
    auto rank = static_cast<Eigen::Index>(
        std::ceil((1.0 - contamination) * static_cast<double>(n)));
    rank = std::max<Eigen::Index>(1, std::min(rank, n));
    double threshold = sorted[static_cast<std::size_t>(rank - 1)];

    VecI out(n);
    for (Eigen::Index i = 0; i < n; ++i) out[i] = scores[i] > threshold ? 1 : 0;
    return out;
}

}  // namespace netanom::base
