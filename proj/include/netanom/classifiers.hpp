#pragma once

#include "netanom/types.hpp"

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"

namespace netanom::clf {

enum class Kind {
    Lda,
    Qda,
    GaussianNb,
    LogisticRegression,
    DecisionTree,
    Bagging,
    RandomForest,
};

Kind parse_kind(const std::string& name);
std::string kind_name(Kind kind);
std::vector<Kind> all_kinds();

// One bag of knobs across all kinds; validate() checks the fields the kind
// actually uses. Negative ridge/var_floor means "derive the default from the
// training data" (see fit).
struct HyperParams {
    double ridge = -1.0;          // lda/qda covariance ridge
    double var_floor = -1.0;      // gaussian nb variance floor
    double l2 = 1e-3;             // logistic regression L2 strength
    int max_iter = 1000;
    double tol = 1e-6;
    int max_depth = 0;            // trees; 0 = unlimited
    int min_samples_split = 2;
    int min_samples_leaf = 1;
    int n_estimators = 10;        // bagging / random forest
    int bootstrap_size = 0;       // 0 = training size
    bool bootstrap = true;
    int max_features = 0;         // rf features per split; 0 = ceil(sqrt(m))
    std::uint64_t seed = 1;

    void validate(Kind kind) const;
    nlohmann::json to_json() const;
    static HyperParams from_json(const nlohmann::json& j);
};

// Binary classifier contract: fit on {0,1} labels, emit n x 2 probabilities
// that sum to 1 per row. predict is argmax with ties to class 0.
class Classifier {
public:
    explicit Classifier(Kind kind, HyperParams params) : kind_(kind), params_(std::move(params)) {}
    virtual ~Classifier() = default;

    Kind kind() const { return kind_; }
    bool fitted() const { return fitted_; }
    const HyperParams& params() const { return params_; }

    // worker threads for ensemble members; results do not depend on it
    void set_threads(int threads) { threads_ = threads; }

    virtual void fit(const Matrix& X, const VecI& y) = 0;
    virtual Matrix predict_proba(const Matrix& X) const = 0;
    VecI predict(const Matrix& X) const;

    nlohmann::json to_json() const;
    static std::unique_ptr<Classifier> make(Kind kind, HyperParams params = {});
    static std::unique_ptr<Classifier> from_json(const nlohmann::json& j);

protected:
    virtual nlohmann::json save_state() const = 0;
    virtual void load_state(const nlohmann::json& j) = 0;

    void check_fit_input(const Matrix& X, const VecI& y, bool needs_both_classes) const;
    void check_predict_input(const Matrix& X) const;

    Kind kind_;
    HyperParams params_;
    bool fitted_ = false;
    Eigen::Index n_features_ = 0;
    int threads_ = 1;
};

class LdaClassifier : public Classifier {
public:
    explicit LdaClassifier(HyperParams params = {}) : Classifier(Kind::Lda, std::move(params)) {}

    void fit(const Matrix& X, const VecI& y) override;
    Matrix predict_proba(const Matrix& X) const override;

    // log P(y=1|x) - log P(y=0|x); positive means class 1
    VecD decision_function(const Matrix& X) const;
    const VecD& coefficients() const { return w_; }
    double intercept() const { return b_; }

protected:
    nlohmann::json save_state() const override;
    void load_state(const nlohmann::json& j) override;

private:
    VecD w_;
    double b_ = 0.0;
    Matrix class_means_;  // 2 x m
    double priors_[2] = {0.5, 0.5};
};

class QdaClassifier : public Classifier {
public:
    explicit QdaClassifier(HyperParams params = {}) : Classifier(Kind::Qda, std::move(params)) {}

    void fit(const Matrix& X, const VecI& y) override;
    Matrix predict_proba(const Matrix& X) const override;

protected:
    nlohmann::json save_state() const override;
    void load_state(const nlohmann::json& j) override;

private:
    void factorize();

    Matrix class_means_;       // 2 x m
    Matrix covariances_[2];    // ridged
    Eigen::LLT<Matrix> llt_[2];
    double log_det_[2] = {0, 0};
    double priors_[2] = {0.5, 0.5};
};

class GaussianNbClassifier : public Classifier {
public:
    explicit GaussianNbClassifier(HyperParams params = {})
        : Classifier(Kind::GaussianNb, std::move(params)) {}

    void fit(const Matrix& X, const VecI& y) override;
    Matrix predict_proba(const Matrix& X) const override;

protected:
    nlohmann::json save_state() const override;
    void load_state(const nlohmann::json& j) override;

private:
    Matrix means_;  // 2 x m
    Matrix vars_;   // 2 x m, floored
    double priors_[2] = {0.5, 0.5};
};

// Regularized logistic objective (mean NLL + l2/2 * |w|^2, intercept not
// penalized). Fills gradients when requested; exposed so the analytic
// gradient can be checked against finite differences.
double logreg_objective(const Matrix& X, const VecI& y, const VecD& w, double b, double l2,
                        VecD* grad_w = nullptr, double* grad_b = nullptr);

class LogisticRegressionClassifier : public Classifier {
public:
    explicit LogisticRegressionClassifier(HyperParams params = {})
        : Classifier(Kind::LogisticRegression, std::move(params)) {}

    void fit(const Matrix& X, const VecI& y) override;
    Matrix predict_proba(const Matrix& X) const override;

    const VecD& weights() const { return w_; }
    double intercept() const { return b_; }
    bool converged() const { return converged_; }
    int iterations() const { return iterations_; }

protected:
    nlohmann::json save_state() const override;
    void load_state(const nlohmann::json& j) override;

private:
    VecD w_;
    double b_ = 0.0;
    bool converged_ = false;
    int iterations_ = 0;
};

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double p1 = 0.0;  // malicious-class probability at this node
    int count = 0;
};

class DecisionTreeClassifier : public Classifier {
public:
    explicit DecisionTreeClassifier(HyperParams params = {})
        : Classifier(Kind::DecisionTree, std::move(params)) {}

    void fit(const Matrix& X, const VecI& y) override;
    Matrix predict_proba(const Matrix& X) const override;

    const std::vector<TreeNode>& nodes() const { return nodes_; }

protected:
    nlohmann::json save_state() const override;
    void load_state(const nlohmann::json& j) override;

private:
    std::vector<TreeNode> nodes_;
};

// Shared by Bagging and RandomForest; rf_features > 0 switches on per-split
// feature subsampling.
class TreeEnsembleClassifier : public Classifier {
public:
    TreeEnsembleClassifier(Kind kind, HyperParams params)
        : Classifier(kind, std::move(params)) {}

    void fit(const Matrix& X, const VecI& y) override;
    Matrix predict_proba(const Matrix& X) const override;

    const std::vector<std::vector<TreeNode>>& trees() const { return trees_; }

protected:
    nlohmann::json save_state() const override;
    void load_state(const nlohmann::json& j) override;

private:
    std::vector<std::vector<TreeNode>> trees_;
};

class BaggingClassifier : public TreeEnsembleClassifier {
public:
    explicit BaggingClassifier(HyperParams params = {})
        : TreeEnsembleClassifier(Kind::Bagging, std::move(params)) {}
};

class RandomForestClassifier : public TreeEnsembleClassifier {
public:
    explicit RandomForestClassifier(HyperParams params = {})
        : TreeEnsembleClassifier(Kind::RandomForest, std::move(params)) {}
};

}  // namespace netanom::clf
