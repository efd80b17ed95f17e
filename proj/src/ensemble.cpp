#include "netanom/ensemble.hpp"

#include "netanom/metrics.hpp"
#include "netanom/rng.hpp"
#include "netanom/util.hpp"

#include <algorithm>
#include <chrono>
#include <stdexcept>

namespace netanom::ens {

namespace {

constexpr std::uint64_t kFoldStream = 0x666f6c64;

const Dataset& triple_set(const adv::TrainingSetTriple& triple, std::size_t i) {
    switch (i) {
        case 0: return triple.t1;
        case 1: return triple.t2;
        default: return triple.t3;
    }
}

std::string set_name(std::size_t i) { return "T" + std::to_string(i + 1); }

}  // namespace

std::vector<MemberSpec> default_member_specs(std::uint64_t seed) {
    std::vector<MemberSpec> specs(3);
    specs[0].kind = clf::Kind::LogisticRegression;
    specs[1].kind = clf::Kind::DecisionTree;
    specs[2].kind = clf::Kind::Lda;
    for (std::size_t i = 0; i < specs.size(); ++i)
        specs[i].params.seed = derive_seed(seed, static_cast<std::uint64_t>(i));
    return specs;
}

nlohmann::json Level1Stack::to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const Level1Member& m : members) {
        arr.push_back({{"training_set", m.training_set},
                       {"stats", data::stats_to_json(m.stats)},
                       {"model", m.model->to_json()},
                       {"train_seconds", m.train_seconds}});
    }
    return nlohmann::json{{"members", arr}};
}

Level1Stack Level1Stack::from_json(const nlohmann::json& j) {
    Level1Stack stack;
    for (const auto& mj : j.at("members")) {
        Level1Member m;
        m.training_set = mj.at("training_set").get<std::string>();
        m.stats = data::stats_from_json(mj.at("stats"));
        m.model = clf::Classifier::from_json(mj.at("model"));
        m.train_seconds = mj.at("train_seconds").get<double>();
        stack.members.push_back(std::move(m));
    }
    if (stack.members.empty()) throw std::invalid_argument("level-1 stack: no members");
    return stack;
}

Level1Stack train_level1(const adv::TrainingSetTriple& triple,
                         const std::vector<MemberSpec>& specs, int threads) {
    if (specs.size() != 3)
        throw std::invalid_argument("train_level1: exactly 3 member specs required");

    Level1Stack stack;
    stack.members.resize(3);
    // members are independent; one per training set
    parallel_for(3, threads, [&](std::size_t i) {
        const Dataset& ds = triple_set(triple, i);
        Level1Member& m = stack.members[i];
        m.training_set = set_name(i);
        m.stats = data::fit_stats(ds.features);
        Matrix X = ds.features;
        data::apply_stats(X, m.stats);
        auto timed = metrics::timed_fit(specs[i].kind, specs[i].params, X, ds.labels, 1);
        m.model = std::move(timed.model);
        m.train_seconds = timed.seconds;
    });
    return stack;
}

Matrix level1_meta_features(const Level1Stack& stack, const Matrix& raw_features) {
    if (stack.members.empty()) throw std::invalid_argument("level-1 stack: no members");
    Matrix meta(raw_features.rows(), static_cast<Eigen::Index>(stack.members.size()));
    for (std::size_t j = 0; j < stack.members.size(); ++j) {
        const Level1Member& m = stack.members[j];
        if (static_cast<Eigen::Index>(m.stats.size()) != raw_features.cols())
            throw std::invalid_argument("level1_meta_features: feature width mismatch");
        Matrix X = raw_features;
        data::apply_stats(X, m.stats);
        meta.col(static_cast<Eigen::Index>(j)) = m.model->predict_proba(X).col(1);
    }
    return meta;
}

std::unique_ptr<clf::Classifier> train_level2(const Matrix& meta, const VecI& labels,
                                              clf::Kind kind, const clf::HyperParams& params) {
    auto model = clf::Classifier::make(kind, params);
    model->fit(meta, labels);
    return model;
}

nlohmann::json StackedEnsemble::to_json() const {
    return nlohmann::json{{"version", 1},
                          {"level1", level1.to_json()},
                          {"level2", level2->to_json()},
                          {"meta_feature_names", meta_feature_names}};
}

StackedEnsemble StackedEnsemble::from_json(const nlohmann::json& j) {
    if (!j.contains("version") || j["version"].get<int>() != 1)
        throw std::invalid_argument("ensemble file: unsupported version");
    StackedEnsemble e;
    e.level1 = Level1Stack::from_json(j.at("level1"));
    e.level2 = clf::Classifier::from_json(j.at("level2"));
    e.meta_feature_names = j.at("meta_feature_names").get<std::vector<std::string>>();
    if (e.meta_feature_names.size() != e.level1.members.size())
        throw std::invalid_argument("ensemble file: meta name count mismatch");
    return e;
}

PipelinePrediction predict_pipeline(const StackedEnsemble& ensemble, const Matrix& raw_features) {
    Matrix meta = level1_meta_features(ensemble.level1, raw_features);
    Matrix proba = ensemble.level2->predict_proba(meta);
    PipelinePrediction out;
    out.labels.resize(raw_features.rows());
    out.malicious.resize(raw_features.rows());
    for (Eigen::Index i = 0; i < raw_features.rows(); ++i) {
        out.malicious[i] = proba(i, 1);
        out.labels[i] = proba(i, 1) > proba(i, 0) ? 1 : 0;
    }
    return out;
}

std::vector<int> stratified_folds(const VecI& labels, int folds, std::uint64_t seed) {
    if (folds < 2) throw std::invalid_argument("stratified_folds: folds must be >= 2");
    const Eigen::Index n = labels.size();
    std::vector<int> assignment(static_cast<std::size_t>(n), -1);
    for (int cls = 0; cls < 2; ++cls) {
        std::vector<std::size_t> idx;
        for (Eigen::Index i = 0; i < n; ++i)
            if (labels[i] == cls) idx.push_back(static_cast<std::size_t>(i));
        if (static_cast<int>(idx.size()) < folds)
            throw std::invalid_argument("stratified_folds: a class has fewer rows than folds");
        Rng rng(derive_seed(seed, kFoldStream + static_cast<std::uint64_t>(cls)));
        rng.shuffle(idx);
        for (std::size_t p = 0; p < idx.size(); ++p)
            assignment[idx[p]] = static_cast<int>(p % static_cast<std::size_t>(folds));
    }
    return assignment;
}

GridSearchResult grid_search(clf::Kind kind, const std::vector<clf::HyperParams>& grid,
                             const Matrix& features, const VecI& labels, int folds,
                             std::uint64_t seed, int threads) {
    if (grid.empty()) throw std::invalid_argument("grid_search: empty grid");
    for (const auto& params : grid) params.validate(kind);
    std::vector<int> fold_of = stratified_folds(labels, folds, seed);

    // per-fold index lists, reused by every candidate
    std::vector<std::vector<int>> train_rows(static_cast<std::size_t>(folds));
    std::vector<std::vector<int>> test_rows(static_cast<std::size_t>(folds));
    for (std::size_t i = 0; i < fold_of.size(); ++i)
        for (int f = 0; f < folds; ++f)
            (fold_of[i] == f ? test_rows : train_rows)[static_cast<std::size_t>(f)].push_back(
                static_cast<int>(i));

    std::vector<double> scores(grid.size(), 0.0);
    parallel_for(grid.size(), threads, [&](std::size_t g) {
        double total = 0.0;
        for (int f = 0; f < folds; ++f) {
            const auto& tr = train_rows[static_cast<std::size_t>(f)];
            const auto& te = test_rows[static_cast<std::size_t>(f)];
            Matrix Xtr(tr.size(), features.cols());
            VecI ytr(tr.size());
            for (std::size_t i = 0; i < tr.size(); ++i) {
                Xtr.row(static_cast<Eigen::Index>(i)) = features.row(tr[i]);
                ytr[static_cast<Eigen::Index>(i)] = labels[tr[i]];
            }
            Matrix Xte(te.size(), features.cols());
            VecI yte(te.size());
            for (std::size_t i = 0; i < te.size(); ++i) {
                Xte.row(static_cast<Eigen::Index>(i)) = features.row(te[i]);
                yte[static_cast<Eigen::Index>(i)] = labels[te[i]];
            }
            auto model = clf::Classifier::make(kind, grid[g]);
            model->fit(Xtr, ytr);
            VecI preds = model->predict(Xte);
            total += metrics::f1_per_class(yte, preds).malicious.f1;
        }
        scores[g] = total / static_cast<double>(folds);
    });

    GridSearchResult result;
    result.folds = folds;
    result.table.reserve(grid.size());
    for (std::size_t g = 0; g < grid.size(); ++g) result.table.emplace_back(grid[g], scores[g]);
    result.best_index = 0;
    for (std::size_t g = 1; g < grid.size(); ++g)
        if (scores[g] > scores[static_cast<std::size_t>(result.best_index)])
            result.best_index = static_cast<int>(g);
    result.best_hyperparams = grid[static_cast<std::size_t>(result.best_index)];
    result.best_score = scores[static_cast<std::size_t>(result.best_index)];
    return result;
}

nlohmann::json GridSearchResult::to_json() const {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& [params, score] : table)
        rows.push_back({{"hyperparams", params.to_json()}, {"mean_f1", score}});
    return nlohmann::json{{"folds", folds},
                          {"best_index", best_index},
                          {"best_score", best_score},
                          {"best_hyperparams", best_hyperparams.to_json()},
                          {"table", rows}};
}

Matrix level1_meta_features_oof(const adv::TrainingSetTriple& triple,
                                const std::vector<MemberSpec>& specs, int folds,
                                std::uint64_t seed, int threads) {
    if (specs.size() != 3)
        throw std::invalid_argument("level1_meta_features_oof: exactly 3 member specs required");
    const VecI& labels = triple.t1.labels;
    std::vector<int> fold_of = stratified_folds(labels, folds, seed);
    const Eigen::Index n = labels.size();

    Matrix meta(n, 3);
    parallel_for(3, threads, [&](std::size_t mi) {
        const Dataset& ds = triple_set(triple, mi);
        for (int f = 0; f < folds; ++f) {
            std::vector<int> tr, te;
            for (std::size_t i = 0; i < fold_of.size(); ++i)
                (fold_of[i] == f ? te : tr).push_back(static_cast<int>(i));
            // member fits on its own set's fold-train rows ...
            Matrix Xtr(tr.size(), ds.features.cols());
            VecI ytr(tr.size());
            for (std::size_t i = 0; i < tr.size(); ++i) {
                Xtr.row(static_cast<Eigen::Index>(i)) = ds.features.row(tr[i]);
                ytr[static_cast<Eigen::Index>(i)] = labels[tr[i]];
            }
            FeatureStats stats = data::fit_stats(Xtr);
            data::apply_stats(Xtr, stats);
            auto model = clf::Classifier::make(specs[mi].kind, specs[mi].params);
            model->fit(Xtr, ytr);

            // ... and predicts the held-out original rows, as at inference
            Matrix Xte(te.size(), triple.t1.features.cols());
            for (std::size_t i = 0; i < te.size(); ++i)
                Xte.row(static_cast<Eigen::Index>(i)) = triple.t1.features.row(te[i]);
            data::apply_stats(Xte, stats);
            Matrix proba = model->predict_proba(Xte);
            for (std::size_t i = 0; i < te.size(); ++i)
                meta(te[i], static_cast<Eigen::Index>(mi)) = proba(static_cast<Eigen::Index>(i), 1);
        }
    });
    return meta;
}

}  // namespace netanom::ens
