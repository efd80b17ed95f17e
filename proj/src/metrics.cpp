#include "netanom/metrics.hpp"

#include "netanom/util.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace netanom::metrics {

namespace {

ClassMetrics class_metrics(std::int64_t tp, std::int64_t fp, std::int64_t fn) {
    ClassMetrics m;
    m.precision = (tp + fp) > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    m.recall = (tp + fn) > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
    m.f1 = (m.precision + m.recall) > 0.0
               ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
               : 0.0;
    return m;
}

void check_paired(Eigen::Index labels, Eigen::Index other, const char* what) {
    if (labels != other) throw std::invalid_argument(std::string(what) + ": length mismatch");
    if (labels < 1) throw std::invalid_argument(std::string(what) + ": empty input");
}

}  // namespace

PerClassMetrics f1_per_class(const VecI& labels, const VecI& predictions,
                             ConfusionCounts* confusion) {
    check_paired(labels.size(), predictions.size(), "f1_per_class");
    ConfusionCounts cc;
    for (Eigen::Index i = 0; i < labels.size(); ++i) {
        if (labels[i] != 0 && labels[i] != 1)
            throw std::invalid_argument("f1_per_class: labels must be 0 or 1");
        if (predictions[i] != 0 && predictions[i] != 1)
            throw std::invalid_argument("f1_per_class: predictions must be 0 or 1");
        if (labels[i] == 1)
            ++(predictions[i] == 1 ? cc.tp : cc.fn);
        else
            ++(predictions[i] == 1 ? cc.fp : cc.tn);
    }
    if (confusion) *confusion = cc;

    PerClassMetrics out;
    out.malicious = class_metrics(cc.tp, cc.fp, cc.fn);
    // class 0 viewed as the positive class: tp=tn, fp=fn, fn=fp
    out.normal = class_metrics(cc.tn, cc.fn, cc.fp);
    out.accuracy = static_cast<double>(cc.tp + cc.tn) / static_cast<double>(cc.total());
    return out;
}

double auc(const VecI& labels, const VecD& scores) {
    check_paired(labels.size(), scores.size(), "auc");
    const Eigen::Index n = labels.size();
    std::int64_t n1 = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (labels[i] != 0 && labels[i] != 1)
            throw std::invalid_argument("auc: labels must be 0 or 1");
        if (std::isnan(scores[i])) throw std::invalid_argument("auc: NaN score");
        n1 += labels[i];
    }
    const std::int64_t n0 = n - n1;
    if (n0 == 0 || n1 == 0) throw std::invalid_argument("auc: both classes required");

    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](Eigen::Index a, Eigen::Index b) { return scores[a] < scores[b]; });

    // average ranks within tie groups give the half-credit convention
    double rank_sum_pos = 0.0;
    Eigen::Index i = 0;
    while (i < n) {
        Eigen::Index j = i;
        while (j + 1 < n && scores[order[static_cast<std::size_t>(j + 1)]] ==
                                scores[order[static_cast<std::size_t>(i)]])
            ++j;
        double avg_rank = 0.5 * static_cast<double>(i + 1 + j + 1);
        for (Eigen::Index t = i; t <= j; ++t)
            if (labels[order[static_cast<std::size_t>(t)]] == 1) rank_sum_pos += avg_rank;
        i = j + 1;
    }
    double u = rank_sum_pos - 0.5 * static_cast<double>(n1) * static_cast<double>(n1 + 1);
    return u / (static_cast<double>(n0) * static_cast<double>(n1));
}

std::vector<RocPoint> roc_points(const VecI& labels, const VecD& scores) {
    check_paired(labels.size(), scores.size(), "roc_points");
    const Eigen::Index n = labels.size();
    std::int64_t n1 = 0;
    for (Eigen::Index i = 0; i < n; ++i) n1 += labels[i];
    const std::int64_t n0 = n - n1;
    if (n0 == 0 || n1 == 0) throw std::invalid_argument("roc_points: both classes required");

    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](Eigen::Index a, Eigen::Index b) { return scores[a] > scores[b]; });

    std::vector<RocPoint> points;
    points.push_back({0.0, 0.0, std::numeric_limits<double>::infinity()});
    std::int64_t tp = 0, fp = 0;
    Eigen::Index i = 0;
    while (i < n) {
        double s = scores[order[static_cast<std::size_t>(i)]];
        Eigen::Index j = i;
        while (j < n && scores[order[static_cast<std::size_t>(j)]] == s) {
            if (labels[order[static_cast<std::size_t>(j)]] == 1)
                ++tp;
            else
                ++fp;
            ++j;
        }
        points.push_back({static_cast<double>(fp) / static_cast<double>(n0),
                          static_cast<double>(tp) / static_cast<double>(n1), s});
        i = j;
    }
    return points;
}

std::string roc_to_csv(const std::vector<RocPoint>& points) {
    std::string out = "fpr,tpr,threshold\n";
    for (const RocPoint& p : points) {
        out += format_double(p.fpr);
        out += ',';
        out += format_double(p.tpr);
        out += ',';
        out += std::isinf(p.threshold) ? "inf" : format_double(p.threshold);
        out += '\n';
    }
    return out;
}

nlohmann::json MetricsReport::to_json() const {
    return nlohmann::json{
        {"model", model},
        {"training_set", training_set},
        {"seed", seed},
        {"hardware", hardware},
        {"confusion",
         {{"tp", confusion.tp}, {"fp", confusion.fp}, {"tn", confusion.tn}, {"fn", confusion.fn}}},
        {"metrics",
         {{"normal",
           {{"precision", per_class.normal.precision},
            {"recall", per_class.normal.recall},
            {"f1", per_class.normal.f1}}},
          {"malicious",
           {{"precision", per_class.malicious.precision},
            {"recall", per_class.malicious.recall},
            {"f1", per_class.malicious.f1}}},
          {"accuracy", per_class.accuracy},
          {"auc", auc}}},
        {"train_seconds", train_seconds},
        {"n_test", n_test}};
}

MetricsReport MetricsReport::from_json(const nlohmann::json& j) {
    MetricsReport r;
    r.model = j.at("model").get<std::string>();
    r.training_set = j.at("training_set").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.hardware = j.at("hardware").get<std::string>();
    const auto& c = j.at("confusion");
    r.confusion = {c.at("tp").get<std::int64_t>(), c.at("fp").get<std::int64_t>(),
                   c.at("tn").get<std::int64_t>(), c.at("fn").get<std::int64_t>()};
    const auto& m = j.at("metrics");
    auto read_class = [](const nlohmann::json& cj) {
        ClassMetrics cm;
        cm.precision = cj.at("precision").get<double>();
        cm.recall = cj.at("recall").get<double>();
        cm.f1 = cj.at("f1").get<double>();
        return cm;
    };
    r.per_class.normal = read_class(m.at("normal"));
    r.per_class.malicious = read_class(m.at("malicious"));
    r.per_class.accuracy = m.at("accuracy").get<double>();
    r.auc = m.at("auc").get<double>();
    r.train_seconds = j.at("train_seconds").get<double>();
    r.n_test = j.at("n_test").get<std::int64_t>();
    return r;
}

TimedFitResult timed_fit(clf::Kind kind, const clf::HyperParams& params, const Matrix& X,
                         const VecI& y, int threads) {
    TimedFitResult out;
    out.model = clf::Classifier::make(kind, params);
    out.model->set_threads(threads);
    auto t0 = std::chrono::steady_clock::now();
    out.model->fit(X, y);
    auto t1 = std::chrono::steady_clock::now();
    out.seconds = std::chrono::duration<double>(t1 - t0).count();
    return out;
}

std::vector<MetricsReport> evaluate_matrix(const std::vector<EvalItem>& items, const Matrix& X_test,
                                           const VecI& y_test,
                                           std::vector<std::vector<RocPoint>>* roc) {
    std::vector<MetricsReport> reports;
    if (roc) roc->clear();
    for (const EvalItem& item : items) {
        if (!item.model) throw std::invalid_argument("evaluate_matrix: null model");
        Matrix proba = item.model->predict_proba(X_test);
        VecD scores = proba.col(1);
        VecI preds(X_test.rows());
        for (Eigen::Index i = 0; i < X_test.rows(); ++i)
            preds[i] = proba(i, 1) > proba(i, 0) ? 1 : 0;

        MetricsReport r;
        r.model = item.name;
        r.training_set = item.training_set;
        r.seed = item.seed;
        r.hardware = hardware_descriptor();
        r.per_class = f1_per_class(y_test, preds, &r.confusion);
        r.auc = auc(y_test, scores);
        r.train_seconds = item.train_seconds;
        r.n_test = X_test.rows();
        reports.push_back(std::move(r));
        if (roc) roc->push_back(roc_points(y_test, scores));
    }
    return reports;
}

std::string format_table(const std::string& title, const std::vector<std::string>& row_names,
                         const std::vector<std::string>& col_names,
                         const std::vector<std::vector<std::string>>& cells) {
    if (cells.size() != row_names.size())
        throw std::invalid_argument("format_table: row count mismatch");
    for (const auto& row : cells)
        if (row.size() != col_names.size())
            throw std::invalid_argument("format_table: column count mismatch");

    std::size_t name_width = 0;
    for (const auto& rn : row_names) name_width = std::max(name_width, rn.size());
    std::vector<std::size_t> widths(col_names.size());
    for (std::size_t c = 0; c < col_names.size(); ++c) {
        widths[c] = col_names[c].size();
        for (const auto& row : cells) widths[c] = std::max(widths[c], row[c].size());
    }

    std::ostringstream os;
    os << title << '\n';
    os << std::string(name_width, ' ');
    for (std::size_t c = 0; c < col_names.size(); ++c) {
        os << "  " << std::string(widths[c] - col_names[c].size(), ' ') << col_names[c];
    }
    os << '\n';
    std::size_t total = name_width;
    for (std::size_t w : widths) total += w + 2;
    os << std::string(total, '-') << '\n';
    for (std::size_t r = 0; r < row_names.size(); ++r) {
        os << row_names[r] << std::string(name_width - row_names[r].size(), ' ');
        for (std::size_t c = 0; c < col_names.size(); ++c)
            os << "  " << std::string(widths[c] - cells[r][c].size(), ' ') << cells[r][c];
        os << '\n';
    }
    return os.str();
}

}  // namespace netanom::metrics
