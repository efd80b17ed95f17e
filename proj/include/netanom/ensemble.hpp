#pragma once

#include "netanom/adversarial.hpp"
#include "netanom/classifiers.hpp"
#include "netanom/dataset.hpp"
#include "netanom/types.hpp"

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

namespace netanom::ens {

struct MemberSpec {
    clf::Kind kind = clf::Kind::LogisticRegression;
    clf::HyperParams params;
};

// logistic regression on T1, decision tree on T2, LDA on T3
std::vector<MemberSpec> default_member_specs(std::uint64_t seed);

struct Level1Member {
    std::unique_ptr<clf::Classifier> model;
    FeatureStats stats;  // of this member's own training set
    std::string training_set;
    double train_seconds = 0.0;
};

struct Level1Stack {
    std::vector<Level1Member> members;

    nlohmann::json to_json() const;
    static Level1Stack from_json(const nlohmann::json& j);
};

// Fits one member per training set; member i trains on set i standardized by
// its own stats, and those stats travel with the member.
Level1Stack train_level1(const adv::TrainingSetTriple& triple,
                         const std::vector<MemberSpec>& specs, int threads = 1);

// Column j = member j's malicious-class probability on raw rows standardized
// with member j's own stats.
Matrix level1_meta_features(const Level1Stack& stack, const Matrix& raw_features);

std::unique_ptr<clf::Classifier> train_level2(const Matrix& meta, const VecI& labels,
                                              clf::Kind kind, const clf::HyperParams& params);

struct StackedEnsemble {
    Level1Stack level1;
    std::unique_ptr<clf::Classifier> level2;
    std::vector<std::string> meta_feature_names;

    nlohmann::json to_json() const;
    static StackedEnsemble from_json(const nlohmann::json& j);
};

struct PipelinePrediction {
    VecI labels;
    VecD malicious;  // level-2 malicious-class probability
};

PipelinePrediction predict_pipeline(const StackedEnsemble& ensemble, const Matrix& raw_features);

// Stratified fold ids in [0, folds); every fold holds both classes.
std::vector<int> stratified_folds(const VecI& labels, int folds, std::uint64_t seed);

struct GridSearchResult {
    clf::HyperParams best_hyperparams;
    double best_score = 0.0;  // mean malicious-class F1 across folds
    int best_index = 0;
    std::vector<std::pair<clf::HyperParams, double>> table;  // grid order
    int folds = 0;

    nlohmann::json to_json() const;
};

GridSearchResult grid_search(clf::Kind kind, const std::vector<clf::HyperParams>& grid,
                             const Matrix& features, const VecI& labels, int folds = 5,
                             std::uint64_t seed = 1, int threads = 1);

// Out-of-fold meta features: each row's column j comes from a member-j model
// fitted without that row's fold. Optional alternative to reusing the level-1
// training rows.
Matrix level1_meta_features_oof(const adv::TrainingSetTriple& triple,
                                const std::vector<MemberSpec>& specs, int folds,
                                std::uint64_t seed, int threads = 1);

}  // namespace netanom::ens
