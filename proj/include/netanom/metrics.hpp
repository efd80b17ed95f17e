#pragma once

#include "netanom/classifiers.hpp"
#include "netanom/dataset.hpp"
#include "netanom/types.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace netanom::metrics {

struct ConfusionCounts {
    std::int64_t tp = 0;  // label 1 predicted 1
    std::int64_t fp = 0;  // label 0 predicted 1
    std::int64_t tn = 0;
    std::int64_t fn = 0;

    std::int64_t total() const { return tp + fp + tn + fn; }
};

struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

struct PerClassMetrics {
    ClassMetrics normal;     // class 0
    ClassMetrics malicious;  // class 1
    double accuracy = 0.0;
};

// Precision/recall/F1 for both classes; zero-denominator cases score 0.
PerClassMetrics f1_per_class(const VecI& labels, const VecI& predictions,
                             ConfusionCounts* confusion = nullptr);

// Mann-Whitney AUC of score ranking with half credit for ties. Throws
// when labels contain a single class.
double auc(const VecI& labels, const VecD& scores);

struct RocPoint {
    double fpr = 0.0;
    double tpr = 0.0;
    double threshold = 0.0;  // score >= threshold predicts malicious
};

// Full curve from (0,0) to (1,1), one point per distinct score.
std::vector<RocPoint> roc_points(const VecI& labels, const VecD& scores);
std::string roc_to_csv(const std::vector<RocPoint>& points);

struct MetricsReport {
    std::string model;
    std::string training_set;
    std::uint64_t seed = 0;
    ConfusionCounts confusion;
    PerClassMetrics per_class;
    double auc = 0.0;
    double train_seconds = 0.0;  // machine-dependent; excluded from reproducibility checks
    std::string hardware;
    std::int64_t n_test = 0;

    nlohmann::json to_json() const;
    static MetricsReport from_json(const nlohmann::json& j);
};

struct TimedFitResult {
    std::unique_ptr<clf::Classifier> model;
    double seconds = 0.0;
};

// Fit wrapped in a monotonic-clock stopwatch; the clock covers fit only.
TimedFitResult timed_fit(clf::Kind kind, const clf::HyperParams& params, const Matrix& X,
                         const VecI& y, int threads = 1);

struct EvalItem {
    std::string name;
    const clf::Classifier* model = nullptr;
    std::string training_set;
    double train_seconds = 0.0;
    std::uint64_t seed = 0;
};

// Score every model on the same test set; optionally emit per-model ROC curves
// in item order.
std::vector<MetricsReport> evaluate_matrix(const std::vector<EvalItem>& items, const Matrix& X_test,
                                           const VecI& y_test,
                                           std::vector<std::vector<RocPoint>>* roc = nullptr);

// Fixed-width text table; cells are preformatted strings.
std::string format_table(const std::string& title, const std::vector<std::string>& row_names,
                         const std::vector<std::string>& col_names,
                         const std::vector<std::vector<std::string>>& cells);

}  // namespace netanom::metrics
