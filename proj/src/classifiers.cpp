#include "netanom/classifiers.hpp"

#include "netanom/rng.hpp"
#include "netanom/util.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>
#include <utility>

namespace netanom::clf {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    double e = std::exp(z);
    return e / (1.0 + e);
}

// log(1 + exp(z)) without overflow
double softplus(double z) {
    return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)));
}

nlohmann::json vec_to_json(const VecD& v) {
    nlohmann::json arr = nlohmann::json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
    return arr;
}

VecD vec_from_json(const nlohmann::json& j) {
    if (!j.is_array()) throw std::invalid_argument("model state: expected array");
    VecD v(j.size());
    for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
    return v;
}

nlohmann::json matrix_to_json(const Matrix& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) rows.push_back(vec_to_json(m.row(r).transpose()));
    return rows;
}

Matrix matrix_from_json(const nlohmann::json& j) {
    if (!j.is_array() || j.empty()) throw std::invalid_argument("model state: expected matrix");
    Matrix m(j.size(), j[0].size());
    for (std::size_t r = 0; r < j.size(); ++r) {
        VecD row = vec_from_json(j[r]);
        if (row.size() != m.cols()) throw std::invalid_argument("model state: ragged matrix");
        m.row(static_cast<Eigen::Index>(r)) = row.transpose();
    }
    return m;
}

void class_counts(const VecI& y, std::int64_t out[2]) {
    out[0] = out[1] = 0;
    for (Eigen::Index i = 0; i < y.size(); ++i) ++out[y[i]];
}

// Per-class means and the pooled or per-class scatter pieces used by the
// gaussian models.
void class_means(const Matrix& X, const VecI& y, Matrix& means, std::int64_t counts[2]) {
    const Eigen::Index m = X.cols();
    means = Matrix::Zero(2, m);
    class_counts(y, counts);
    for (Eigen::Index i = 0; i < X.rows(); ++i) means.row(y[i]) += X.row(i);
    for (int c = 0; c < 2; ++c)
        if (counts[c] > 0) means.row(c) /= static_cast<double>(counts[c]);
}

double effective_ridge(double requested, double trace, Eigen::Index m) {
    double r = requested >= 0.0 ? requested : 1e-6 * trace / static_cast<double>(m);
    return std::max(r, 1e-12);
}

}  // namespace

Kind parse_kind(const std::string& name) {
    for (Kind k : all_kinds())
        if (kind_name(k) == name) return k;
    throw std::invalid_argument("unknown classifier kind: " + name);
}

std::string kind_name(Kind kind) {
    switch (kind) {
        case Kind::Lda: return "lda";
        case Kind::Qda: return "qda";
        case Kind::GaussianNb: return "gaussian-nb";
        case Kind::LogisticRegression: return "logistic-regression";
        case Kind::DecisionTree: return "decision-tree";
        case Kind::Bagging: return "bagging";
        case Kind::RandomForest: return "random-forest";
    }
    throw std::logic_error("bad kind");
}

std::vector<Kind> all_kinds() {
    return {Kind::Lda,          Kind::Qda,     Kind::GaussianNb, Kind::LogisticRegression,
            Kind::DecisionTree, Kind::Bagging, Kind::RandomForest};
}

void HyperParams::validate(Kind kind) const {
    auto bad = [](const std::string& what) { throw std::invalid_argument("hyperparams: " + what); };
    if (kind == Kind::LogisticRegression) {
        if (l2 < 0.0) bad("l2 must be >= 0");
        if (max_iter < 1) bad("max_iter must be >= 1");
        if (!(tol > 0.0)) bad("tol must be > 0");
    }
    if (kind == Kind::DecisionTree || kind == Kind::Bagging || kind == Kind::RandomForest) {
        if (max_depth < 0) bad("max_depth must be >= 0");
        if (min_samples_split < 2) bad("min_samples_split must be >= 2");
        if (min_samples_leaf < 1) bad("min_samples_leaf must be >= 1");
    }
    if (kind == Kind::Bagging || kind == Kind::RandomForest) {
        if (n_estimators < 1) bad("n_estimators must be >= 1");
        if (bootstrap_size < 0) bad("bootstrap_size must be >= 0");
    }
    if (kind == Kind::RandomForest && max_features < 0) bad("max_features must be >= 0");
}

nlohmann::json HyperParams::to_json() const {
    return nlohmann::json{
        {"ridge", ridge},
        {"var_floor", var_floor},
        {"l2", l2},
        {"max_iter", max_iter},
        {"tol", tol},
        {"max_depth", max_depth},
        {"min_samples_split", min_samples_split},
        {"min_samples_leaf", min_samples_leaf},
        {"n_estimators", n_estimators},
        {"bootstrap_size", bootstrap_size},
        {"bootstrap", bootstrap},
        {"max_features", max_features},
        {"seed", seed},
    };
}

HyperParams HyperParams::from_json(const nlohmann::json& j) {
    static const std::set<std::string> known = {
        "ridge",     "var_floor",         "l2",               "max_iter",
        "tol",       "max_depth",         "min_samples_split", "min_samples_leaf",
        "n_estimators", "bootstrap_size", "bootstrap",        "max_features",
        "seed"};
    for (const auto& item : j.items())
        if (!known.count(item.key()))
            throw std::invalid_argument("hyperparams: unknown key '" + item.key() + "'");
    HyperParams p;
    if (j.contains("ridge")) p.ridge = j["ridge"].get<double>();
    if (j.contains("var_floor")) p.var_floor = j["var_floor"].get<double>();
    if (j.contains("l2")) p.l2 = j["l2"].get<double>();
    if (j.contains("max_iter")) p.max_iter = j["max_iter"].get<int>();
    if (j.contains("tol")) p.tol = j["tol"].get<double>();
    if (j.contains("max_depth")) p.max_depth = j["max_depth"].get<int>();
    if (j.contains("min_samples_split")) p.min_samples_split = j["min_samples_split"].get<int>();
    if (j.contains("min_samples_leaf")) p.min_samples_leaf = j["min_samples_leaf"].get<int>();
    if (j.contains("n_estimators")) p.n_estimators = j["n_estimators"].get<int>();
    if (j.contains("bootstrap_size")) p.bootstrap_size = j["bootstrap_size"].get<int>();
    if (j.contains("bootstrap")) p.bootstrap = j["bootstrap"].get<bool>();
    if (j.contains("max_features")) p.max_features = j["max_features"].get<int>();
    if (j.contains("seed")) p.seed = j["seed"].get<std::uint64_t>();
    return p;
}

VecI Classifier::predict(const Matrix& X) const {
    Matrix proba = predict_proba(X);
    VecI out(X.rows());
    for (Eigen::Index i = 0; i < X.rows(); ++i) out[i] = proba(i, 1) > proba(i, 0) ? 1 : 0;
    return out;
}

void Classifier::check_fit_input(const Matrix& X, const VecI& y, bool needs_both_classes) const {
    if (X.rows() != y.size()) throw std::invalid_argument("fit: rows of X and y differ");
    if (X.rows() < 1) throw std::invalid_argument("fit: empty training set");
    if (X.cols() < 1) throw std::invalid_argument("fit: no features");
    if (!X.allFinite()) throw std::invalid_argument("fit: non-finite feature values");
    std::int64_t counts[2];
    for (Eigen::Index i = 0; i < y.size(); ++i)
        if (y[i] != 0 && y[i] != 1) throw std::invalid_argument("fit: labels must be 0 or 1");
    class_counts(y, counts);
    if (needs_both_classes && (counts[0] == 0 || counts[1] == 0))
        throw std::invalid_argument("fit: both classes required");
}

void Classifier::check_predict_input(const Matrix& X) const {
    if (!fitted_) throw std::logic_error("predict before fit");
    if (X.cols() != n_features_) throw std::invalid_argument("predict: feature count mismatch");
    if (!X.allFinite()) throw std::invalid_argument("predict: non-finite feature values");
}

nlohmann::json Classifier::to_json() const {
    if (!fitted_) throw std::logic_error("to_json before fit");
    return nlohmann::json{{"version", 1},
                          {"kind", kind_name(kind_)},
                          {"hyperparams", params_.to_json()},
                          {"n_features", n_features_},
                          {"state", save_state()}};
}

std::unique_ptr<Classifier> Classifier::make(Kind kind, HyperParams params) {
    params.validate(kind);
    switch (kind) {
        case Kind::Lda: return std::make_unique<LdaClassifier>(std::move(params));
        case Kind::Qda: return std::make_unique<QdaClassifier>(std::move(params));
        case Kind::GaussianNb: return std::make_unique<GaussianNbClassifier>(std::move(params));
        case Kind::LogisticRegression:
            return std::make_unique<LogisticRegressionClassifier>(std::move(params));
        case Kind::DecisionTree: return std::make_unique<DecisionTreeClassifier>(std::move(params));
        case Kind::Bagging: return std::make_unique<BaggingClassifier>(std::move(params));
        case Kind::RandomForest: return std::make_unique<RandomForestClassifier>(std::move(params));
    }
    throw std::logic_error("bad kind");
}

std::unique_ptr<Classifier> Classifier::from_json(const nlohmann::json& j) {
    if (!j.contains("version") || j["version"].get<int>() != 1)
        throw std::invalid_argument("model file: unsupported version");
    Kind kind = parse_kind(j.at("kind").get<std::string>());
    HyperParams params = HyperParams::from_json(j.at("hyperparams"));
    auto model = make(kind, std::move(params));
    model->n_features_ = j.at("n_features").get<Eigen::Index>();
    model->load_state(j.at("state"));
    model->fitted_ = true;
    return model;
}

// ---------------------------------------------------------------- lda

void LdaClassifier::fit(const Matrix& X, const VecI& y) {
    check_fit_input(X, y, true);
    const Eigen::Index n = X.rows(), m = X.cols();
    std::int64_t counts[2];
    class_means(X, y, class_means_, counts);
    priors_[0] = static_cast<double>(counts[0]) / static_cast<double>(n);
    priors_[1] = static_cast<double>(counts[1]) / static_cast<double>(n);

    // pooled maximum-likelihood covariance: sum of class scatters over n
    Matrix scatter = Matrix::Zero(m, m);
    for (Eigen::Index i = 0; i < n; ++i) {
        VecD d = X.row(i).transpose() - class_means_.row(y[i]).transpose();
        scatter.noalias() += d * d.transpose();
    }
    Matrix cov = scatter / static_cast<double>(n);
    cov.diagonal().array() += effective_ridge(params_.ridge, cov.trace(), m);

    Eigen::LLT<Matrix> llt(cov);
    if (llt.info() != Eigen::Success)
        throw std::runtime_error("lda: covariance not positive definite; increase ridge");
    VecD mean_diff = (class_means_.row(1) - class_means_.row(0)).transpose();
    w_ = llt.solve(mean_diff);
    b_ = std::log(priors_[1] / priors_[0]) -
         0.5 * (class_means_.row(0) + class_means_.row(1)).dot(w_.transpose());

    n_features_ = m;
    fitted_ = true;
}

VecD LdaClassifier::decision_function(const Matrix& X) const {
    check_predict_input(X);
    return (X * w_).array() + b_;
}

Matrix LdaClassifier::predict_proba(const Matrix& X) const {
    VecD d = decision_function(X);
    Matrix proba(X.rows(), 2);
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        double p1 = sigmoid(d[i]);
        proba(i, 0) = 1.0 - p1;
        proba(i, 1) = p1;
    }
    return proba;
}

nlohmann::json LdaClassifier::save_state() const {
    return nlohmann::json{{"weights", vec_to_json(w_)},
                          {"intercept", b_},
                          {"class_means", matrix_to_json(class_means_)},
                          {"priors", {priors_[0], priors_[1]}}};
}

void LdaClassifier::load_state(const nlohmann::json& j) {
    w_ = vec_from_json(j.at("weights"));
    b_ = j.at("intercept").get<double>();
    class_means_ = matrix_from_json(j.at("class_means"));
    priors_[0] = j.at("priors")[0].get<double>();
    priors_[1] = j.at("priors")[1].get<double>();
}

// ---------------------------------------------------------------- qda

void QdaClassifier::fit(const Matrix& X, const VecI& y) {
    check_fit_input(X, y, true);
    const Eigen::Index n = X.rows(), m = X.cols();
    std::int64_t counts[2];
    class_means(X, y, class_means_, counts);
    priors_[0] = static_cast<double>(counts[0]) / static_cast<double>(n);
    priors_[1] = static_cast<double>(counts[1]) / static_cast<double>(n);

    for (int c = 0; c < 2; ++c) covariances_[c] = Matrix::Zero(m, m);
    for (Eigen::Index i = 0; i < n; ++i) {
        VecD d = X.row(i).transpose() - class_means_.row(y[i]).transpose();
        covariances_[y[i]].noalias() += d * d.transpose();
    }
    for (int c = 0; c < 2; ++c) {
        covariances_[c] /= static_cast<double>(counts[c]);
        covariances_[c].diagonal().array() +=
            effective_ridge(params_.ridge, covariances_[c].trace(), m);
    }
    factorize();

    n_features_ = m;
    fitted_ = true;
}

void QdaClassifier::factorize() {
    for (int c = 0; c < 2; ++c) {
        llt_[c].compute(covariances_[c]);
        if (llt_[c].info() != Eigen::Success)
            throw std::runtime_error("qda: covariance not positive definite; increase ridge");
        log_det_[c] = 2.0 * llt_[c].matrixL().toDenseMatrix().diagonal().array().log().sum();
    }
}

Matrix QdaClassifier::predict_proba(const Matrix& X) const {
    check_predict_input(X);
    const Eigen::Index m = X.cols();
    Matrix proba(X.rows(), 2);
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        double score[2];
        for (int c = 0; c < 2; ++c) {
            VecD d = X.row(i).transpose() - class_means_.row(c).transpose();
            double quad = d.dot(llt_[c].solve(d));
            score[c] = std::log(priors_[c]) - 0.5 * log_det_[c] - 0.5 * quad -
                       0.5 * static_cast<double>(m) * kLog2Pi;
        }
        double p1 = sigmoid(score[1] - score[0]);
        proba(i, 0) = 1.0 - p1;
        proba(i, 1) = p1;
    }
    return proba;
}

nlohmann::json QdaClassifier::save_state() const {
    return nlohmann::json{{"class_means", matrix_to_json(class_means_)},
                          {"covariances", {matrix_to_json(covariances_[0]), matrix_to_json(covariances_[1])}},
                          {"priors", {priors_[0], priors_[1]}}};
}

void QdaClassifier::load_state(const nlohmann::json& j) {
    class_means_ = matrix_from_json(j.at("class_means"));
    covariances_[0] = matrix_from_json(j.at("covariances")[0]);
    covariances_[1] = matrix_from_json(j.at("covariances")[1]);
    priors_[0] = j.at("priors")[0].get<double>();
    priors_[1] = j.at("priors")[1].get<double>();
    factorize();
}

// ---------------------------------------------------------------- gaussian nb

void GaussianNbClassifier::fit(const Matrix& X, const VecI& y) {
    check_fit_input(X, y, true);
    const Eigen::Index n = X.rows(), m = X.cols();
    std::int64_t counts[2];
    class_means(X, y, means_, counts);
    priors_[0] = static_cast<double>(counts[0]) / static_cast<double>(n);
    priors_[1] = static_cast<double>(counts[1]) / static_cast<double>(n);

    vars_ = Matrix::Zero(2, m);
    for (Eigen::Index i = 0; i < n; ++i) {
        VecD d = X.row(i).transpose() - means_.row(y[i]).transpose();
        vars_.row(y[i]) += d.array().square().matrix().transpose();
    }
    for (int c = 0; c < 2; ++c) vars_.row(c) /= static_cast<double>(counts[c]);

    double floor = params_.var_floor;
    if (floor < 0.0) {
        // scale-aware default: fraction of the largest overall feature variance
        VecD overall_mean = X.colwise().mean().transpose();
        double max_var = 0.0;
        for (Eigen::Index jcol = 0; jcol < m; ++jcol) {
            double v = (X.col(jcol).array() - overall_mean[jcol]).square().mean();
            max_var = std::max(max_var, v);
        }
        floor = 1e-9 * max_var;
    }
    floor = std::max(floor, 1e-12);
    vars_ = vars_.cwiseMax(floor);

    n_features_ = m;
    fitted_ = true;
}

Matrix GaussianNbClassifier::predict_proba(const Matrix& X) const {
    check_predict_input(X);
    Matrix proba(X.rows(), 2);
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        double score[2];
        for (int c = 0; c < 2; ++c) {
            double s = std::log(priors_[c]);
            for (Eigen::Index jcol = 0; jcol < X.cols(); ++jcol) {
                double v = vars_(c, jcol);
                double d = X(i, jcol) - means_(c, jcol);
                s -= 0.5 * (std::log(2.0 * M_PI * v) + d * d / v);
            }
            score[c] = s;
        }
        double p1 = sigmoid(score[1] - score[0]);
        proba(i, 0) = 1.0 - p1;
        proba(i, 1) = p1;
    }
    return proba;
}

nlohmann::json GaussianNbClassifier::save_state() const {
    return nlohmann::json{{"means", matrix_to_json(means_)},
                          {"variances", matrix_to_json(vars_)},
                          {"priors", {priors_[0], priors_[1]}}};
}

void GaussianNbClassifier::load_state(const nlohmann::json& j) {
    means_ = matrix_from_json(j.at("means"));
    vars_ = matrix_from_json(j.at("variances"));
    priors_[0] = j.at("priors")[0].get<double>();
    priors_[1] = j.at("priors")[1].get<double>();
}

// ---------------------------------------------------------------- logistic regression

double logreg_objective(const Matrix& X, const VecI& y, const VecD& w, double b, double l2,
                        VecD* grad_w, double* grad_b) {
    const Eigen::Index n = X.rows();
    VecD z = (X * w).array() + b;
    double loss = 0.0;
    VecD residual(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        loss += softplus(z[i]) - static_cast<double>(y[i]) * z[i];
        residual[i] = sigmoid(z[i]) - static_cast<double>(y[i]);
    }
    loss = loss / static_cast<double>(n) + 0.5 * l2 * w.squaredNorm();
    if (grad_w) *grad_w = X.transpose() * residual / static_cast<double>(n) + l2 * w;
    if (grad_b) *grad_b = residual.mean();
    return loss;
}

void LogisticRegressionClassifier::fit(const Matrix& X, const VecI& y) {
    check_fit_input(X, y, true);
    const Eigen::Index m = X.cols();
    w_ = VecD::Zero(m);
    b_ = 0.0;
    converged_ = false;
    iterations_ = 0;

    double step = 1.0;
    VecD grad_w(m);
    double grad_b = 0.0;
    double obj = logreg_objective(X, y, w_, b_, params_.l2, &grad_w, &grad_b);
    for (int iter = 0; iter < params_.max_iter; ++iter) {
        double grad_sq = grad_w.squaredNorm() + grad_b * grad_b;
        if (std::sqrt(grad_sq) < params_.tol) {
            converged_ = true;
            break;
        }
        // backtracking line search along the negative gradient (Armijo)
        bool accepted = false;
        for (int half = 0; half < 60; ++half) {
            VecD w_try = w_ - step * grad_w;
            double b_try = b_ - step * grad_b;
            double obj_try = logreg_objective(X, y, w_try, b_try, params_.l2, nullptr, nullptr);
            if (obj_try <= obj - 1e-4 * step * grad_sq) {
                w_ = std::move(w_try);
                b_ = b_try;
                obj = obj_try;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break;  // step underflow; gradient norm still above tol
        ++iterations_;
        step = std::min(step * 2.0, 1e6);
        obj = logreg_objective(X, y, w_, b_, params_.l2, &grad_w, &grad_b);
    }
    if (!converged_ && iterations_ == params_.max_iter) {
        double grad_sq = grad_w.squaredNorm() + grad_b * grad_b;
        converged_ = std::sqrt(grad_sq) < params_.tol;
    }

    n_features_ = m;
    fitted_ = true;
}

Matrix LogisticRegressionClassifier::predict_proba(const Matrix& X) const {
    check_predict_input(X);
    VecD z = (X * w_).array() + b_;
    Matrix proba(X.rows(), 2);
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        double p1 = sigmoid(z[i]);
        proba(i, 0) = 1.0 - p1;
        proba(i, 1) = p1;
    }
    return proba;
}

nlohmann::json LogisticRegressionClassifier::save_state() const {
    return nlohmann::json{{"weights", vec_to_json(w_)},
                          {"intercept", b_},
                          {"converged", converged_},
                          {"iterations", iterations_}};
}

void LogisticRegressionClassifier::load_state(const nlohmann::json& j) {
    w_ = vec_from_json(j.at("weights"));
    b_ = j.at("intercept").get<double>();
    converged_ = j.at("converged").get<bool>();
    iterations_ = j.at("iterations").get<int>();
}

// ---------------------------------------------------------------- trees

namespace {

double gini_impurity(std::int64_t n0, std::int64_t n1) {
    double n = static_cast<double>(n0 + n1);
    if (n <= 0.0) return 0.0;
    double f0 = static_cast<double>(n0) / n;
    double f1 = static_cast<double>(n1) / n;
    return 1.0 - f0 * f0 - f1 * f1;
}

struct SplitChoice {
    int feature = -1;
    double threshold = 0.0;
    double impurity = std::numeric_limits<double>::infinity();
};

// Candidate thresholds are midpoints between adjacent distinct sorted values.
// Rows with value <= threshold go left. Zero-gain splits are legal: any valid
// split beats "no split", and ties keep the lowest feature, then the lowest
// threshold (first found wins under strict improvement).
SplitChoice best_split(const Matrix& X, const VecI& y, const std::vector<int>& rows,
                       const std::vector<int>& features, std::int64_t total1, int min_leaf) {
    const std::int64_t k = static_cast<std::int64_t>(rows.size());
    SplitChoice best;
    std::vector<std::pair<double, int>> vals(rows.size());
    for (int f : features) {
        for (std::size_t i = 0; i < rows.size(); ++i) vals[i] = {X(rows[i], f), y[rows[i]]};
        std::sort(vals.begin(), vals.end());
        std::int64_t left1 = 0;
        for (std::int64_t i = 1; i < k; ++i) {
            left1 += vals[static_cast<std::size_t>(i - 1)].second;
            double a = vals[static_cast<std::size_t>(i - 1)].first;
            double b = vals[static_cast<std::size_t>(i)].first;
            if (!(b > a)) continue;
            if (i < min_leaf || k - i < min_leaf) continue;
            std::int64_t l1 = left1, l0 = i - left1;
            std::int64_t r1 = total1 - l1, r0 = (k - i) - r1;
            double weighted = (static_cast<double>(i) * gini_impurity(l0, l1) +
                               static_cast<double>(k - i) * gini_impurity(r0, r1)) /
                              static_cast<double>(k);
            if (weighted < best.impurity) {
                double thr = a + 0.5 * (b - a);
                if (thr >= b) thr = a;  // keep "x <= thr" consistent with the counted split
                best = {f, thr, weighted};
            }
        }
    }
    return best;
}

struct BuildItem {
    int node;
    std::vector<int> rows;
    int depth;
};

std::vector<TreeNode> grow_tree(const Matrix& X, const VecI& y, std::vector<int> rows,
                                const HyperParams& p, Rng* rng, int rf_features) {
    const int m = static_cast<int>(X.cols());
    std::vector<TreeNode> nodes;
    std::vector<BuildItem> work;
    nodes.emplace_back();
    work.push_back({0, std::move(rows), 0});
    std::vector<int> all_features(static_cast<std::size_t>(m));
    for (int f = 0; f < m; ++f) all_features[static_cast<std::size_t>(f)] = f;

    while (!work.empty()) {
        BuildItem item = std::move(work.back());
        work.pop_back();
        const std::int64_t k = static_cast<std::int64_t>(item.rows.size());
        std::int64_t c1 = 0;
        for (int r : item.rows) c1 += y[r];
        nodes[static_cast<std::size_t>(item.node)].count = static_cast<int>(k);
        nodes[static_cast<std::size_t>(item.node)].p1 =
            k > 0 ? static_cast<double>(c1) / static_cast<double>(k) : 0.0;

        bool impure = c1 > 0 && c1 < k;
        bool depth_ok = p.max_depth == 0 || item.depth < p.max_depth;
        if (!impure || !depth_ok || k < p.min_samples_split) continue;

        SplitChoice choice;
        if (rf_features > 0) {
            auto picked = rng->sample_without_replacement(static_cast<std::size_t>(m),
                                                          static_cast<std::size_t>(
                                                              std::min(rf_features, m)));
            std::vector<int> feats(picked.begin(), picked.end());
            std::sort(feats.begin(), feats.end());
            choice = best_split(X, y, item.rows, feats, c1, p.min_samples_leaf);
        } else {
            choice = best_split(X, y, item.rows, all_features, c1, p.min_samples_leaf);
        }
        if (choice.feature < 0) continue;

        std::vector<int> left_rows, right_rows;
        left_rows.reserve(item.rows.size());
        right_rows.reserve(item.rows.size());
        for (int r : item.rows)
            (X(r, choice.feature) <= choice.threshold ? left_rows : right_rows).push_back(r);

        int li = static_cast<int>(nodes.size());
        nodes.emplace_back();
        int ri = static_cast<int>(nodes.size());
        nodes.emplace_back();
        nodes[static_cast<std::size_t>(item.node)].feature = choice.feature;
        nodes[static_cast<std::size_t>(item.node)].threshold = choice.threshold;
        nodes[static_cast<std::size_t>(item.node)].left = li;
        nodes[static_cast<std::size_t>(item.node)].right = ri;
        work.push_back({ri, std::move(right_rows), item.depth + 1});
        work.push_back({li, std::move(left_rows), item.depth + 1});
    }
    return nodes;
}

double tree_p1(const std::vector<TreeNode>& nodes, const Matrix& X, Eigen::Index row) {
    int idx = 0;
    while (nodes[static_cast<std::size_t>(idx)].feature >= 0) {
        const TreeNode& nd = nodes[static_cast<std::size_t>(idx)];
        idx = X(row, nd.feature) <= nd.threshold ? nd.left : nd.right;
    }
    return nodes[static_cast<std::size_t>(idx)].p1;
}

nlohmann::json tree_to_json(const std::vector<TreeNode>& nodes) {
    nlohmann::json arr = nlohmann::json::array();
    for (const TreeNode& nd : nodes)
        arr.push_back({nd.feature, nd.threshold, nd.left, nd.right, nd.p1, nd.count});
    return arr;
}

std::vector<TreeNode> tree_from_json(const nlohmann::json& j) {
    std::vector<TreeNode> nodes;
    nodes.reserve(j.size());
    for (const auto& e : j) {
        TreeNode nd;
        nd.feature = e[0].get<int>();
        nd.threshold = e[1].get<double>();
        nd.left = e[2].get<int>();
        nd.right = e[3].get<int>();
        nd.p1 = e[4].get<double>();
        nd.count = e[5].get<int>();
        nodes.push_back(nd);
    }
    if (nodes.empty()) throw std::invalid_argument("model state: empty tree");
    return nodes;
}

}  // namespace

void DecisionTreeClassifier::fit(const Matrix& X, const VecI& y) {
    check_fit_input(X, y, false);
    std::vector<int> rows(static_cast<std::size_t>(X.rows()));
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = static_cast<int>(i);
    nodes_ = grow_tree(X, y, std::move(rows), params_, nullptr, 0);
    n_features_ = X.cols();
    fitted_ = true;
}

Matrix DecisionTreeClassifier::predict_proba(const Matrix& X) const {
    check_predict_input(X);
    Matrix proba(X.rows(), 2);
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        double p1 = tree_p1(nodes_, X, i);
        proba(i, 0) = 1.0 - p1;
        proba(i, 1) = p1;
    }
    return proba;
}

nlohmann::json DecisionTreeClassifier::save_state() const {
    return nlohmann::json{{"nodes", tree_to_json(nodes_)}};
}

void DecisionTreeClassifier::load_state(const nlohmann::json& j) {
    nodes_ = tree_from_json(j.at("nodes"));
}

void TreeEnsembleClassifier::fit(const Matrix& X, const VecI& y) {
    check_fit_input(X, y, false);
    const Eigen::Index n = X.rows();
    const int m = static_cast<int>(X.cols());
    int rf_features = 0;
    if (kind_ == Kind::RandomForest) {
        rf_features = params_.max_features > 0
                          ? params_.max_features
                          : static_cast<int>(std::ceil(std::sqrt(static_cast<double>(m))));
        rf_features = std::min(rf_features, m);
    }
    const std::size_t boot =
        params_.bootstrap_size > 0 ? static_cast<std::size_t>(params_.bootstrap_size)
                                   : static_cast<std::size_t>(n);

    trees_.assign(static_cast<std::size_t>(params_.n_estimators), {});
    // one independent stream per tree, so results do not depend on threads
    parallel_for(static_cast<std::size_t>(params_.n_estimators), threads_, [&](std::size_t t) {
        Rng rng(derive_seed(params_.seed, static_cast<std::uint64_t>(t)));
        std::vector<int> rows;
        if (params_.bootstrap) {
            rows.resize(boot);
            for (std::size_t i = 0; i < boot; ++i)
                rows[i] = static_cast<int>(rng.uniform_index(static_cast<std::size_t>(n)));
        } else {
            rows.resize(static_cast<std::size_t>(n));
            for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = static_cast<int>(i);
        }
        trees_[t] = grow_tree(X, y, std::move(rows), params_, &rng, rf_features);
    });

    n_features_ = X.cols();
    fitted_ = true;
}

Matrix TreeEnsembleClassifier::predict_proba(const Matrix& X) const {
    check_predict_input(X);
    Matrix proba(X.rows(), 2);
    const double inv = 1.0 / static_cast<double>(trees_.size());
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        double p1 = 0.0;
        for (const auto& tree : trees_) p1 += tree_p1(tree, X, i);
        p1 *= inv;
        proba(i, 0) = 1.0 - p1;
        proba(i, 1) = p1;
    }
    return proba;
}

nlohmann::json TreeEnsembleClassifier::save_state() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& tree : trees_) arr.push_back(tree_to_json(tree));
    return nlohmann::json{{"trees", arr}};
}

void TreeEnsembleClassifier::load_state(const nlohmann::json& j) {
    trees_.clear();
    for (const auto& t : j.at("trees")) trees_.push_back(tree_from_json(t));
    if (trees_.empty()) throw std::invalid_argument("model state: no trees");
}

}  // namespace netanom::clf
