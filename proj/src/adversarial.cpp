#include "netanom/adversarial.hpp"

#include "netanom/classifiers.hpp"
#include "netanom/rng.hpp"
#include "netanom/util.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace netanom::adv {

namespace {

constexpr std::uint64_t kFgsmStream = 0x6667736d;  // row-sampling stream tag

double sign0(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

// column means split by class; rows must contain both classes
void class_column_means(const Matrix& X, const VecI& y, VecD& mean0, VecD& mean1) {
    const Eigen::Index m = X.cols();
    mean0 = VecD::Zero(m);
    mean1 = VecD::Zero(m);
    std::int64_t n0 = 0, n1 = 0;
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        if (y[i] == 1) {
            mean1 += X.row(i).transpose();
            ++n1;
        } else {
            mean0 += X.row(i).transpose();
            ++n0;
        }
    }
    if (n0 > 0) mean0 /= static_cast<double>(n0);
    if (n1 > 0) mean1 /= static_cast<double>(n1);
}

nlohmann::json means_to_json(const VecD& v) {
    nlohmann::json arr = nlohmann::json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
    return arr;
}

}  // namespace

void PerturbationConfig::validate(Eigen::Index n_cols) const {
    if (!(epsilon > 0.0)) throw std::invalid_argument("perturbation: epsilon must be > 0");
    if (!(fraction > 0.0) || fraction > 1.0)
        throw std::invalid_argument("perturbation: fraction must be in (0,1]");
    if (features.empty()) throw std::invalid_argument("perturbation: feature list is empty");
    std::set<int> seen;
    for (int f : features) {
        if (f < 0 || f >= n_cols)
            throw std::invalid_argument("perturbation: feature index " + std::to_string(f) +
                                        " out of range");
        if (!seen.insert(f).second)
            throw std::invalid_argument("perturbation: duplicate feature index " +
                                        std::to_string(f));
    }
}

nlohmann::json PerturbationConfig::to_json() const {
    return nlohmann::json{
        {"epsilon", epsilon}, {"fraction", fraction}, {"features", features}, {"seed", seed}};
}

FgsmResult lda_fgsm(const Matrix& features, const VecI& labels, double epsilon, double fraction,
                    std::uint64_t seed) {
    if (!(epsilon > 0.0)) throw std::invalid_argument("lda_fgsm: epsilon must be > 0");
    if (!(fraction > 0.0) || fraction > 1.0)
        throw std::invalid_argument("lda_fgsm: fraction must be in (0,1]");

    clf::LdaClassifier lda;  // default regularization; no separate attacker model
    lda.fit(features, labels);
    const VecD& w = lda.coefficients();

    const Eigen::Index n = features.rows();
    const auto k = static_cast<std::size_t>(
        std::ceil(fraction * static_cast<double>(n)));
    Rng rng(derive_seed(seed, kFgsmStream));
    auto picked = rng.sample_without_replacement(static_cast<std::size_t>(n), k);
    std::sort(picked.begin(), picked.end());

    FgsmResult out;
    out.features = features;
    out.rows.reserve(picked.size());
    VecD d = lda.decision_function(features);
    for (std::size_t p : picked) {
        auto r = static_cast<Eigen::Index>(p);
        // move against the model: predicted-malicious rows step down the
        // weight direction, predicted-normal rows step up
        double v = d[r] > 0.0 ? -1.0 : 1.0;
        for (Eigen::Index j = 0; j < features.cols(); ++j)
            out.features(r, j) += epsilon * sign0(v * w[j]);
        out.rows.push_back(r);
    }
    return out;
}

Matrix feature_mean_shift(const Matrix& features, const VecI& labels,
                          const std::vector<int>& selected) {
    if (features.rows() != labels.size())
        throw std::invalid_argument("feature_mean_shift: rows of X and y differ");
    if (selected.empty()) throw std::invalid_argument("feature_mean_shift: empty feature list");
    for (int f : selected)
        if (f < 0 || f >= features.cols())
            throw std::invalid_argument("feature_mean_shift: feature index out of range");

    std::int64_t n0 = 0, n1 = 0;
    for (Eigen::Index i = 0; i < labels.size(); ++i) (labels[i] == 1 ? n1 : n0) += 1;
    if (n0 == 0 || n1 == 0)
        throw std::invalid_argument("feature_mean_shift: both classes required");

    Matrix out = features;
    for (int f : selected) {
        double s0 = 0.0, s1 = 0.0;
        for (Eigen::Index i = 0; i < features.rows(); ++i)
            (labels[i] == 1 ? s1 : s0) += features(i, f);
        // x*(N1/N0) + (s0-s1)/N0 maps the malicious column sum to (N1/N0)*s0,
        // so the malicious mean becomes s0/N0, the normal mean
        double scale = static_cast<double>(n1) / static_cast<double>(n0);
        double shift = (s0 - s1) / static_cast<double>(n0);
        for (Eigen::Index i = 0; i < features.rows(); ++i)
            if (labels[i] == 1) out(i, f) = features(i, f) * scale + shift;
    }
    return out;
}

TrainingSetTriple build_training_sets(const Dataset& train, const PerturbationConfig& config) {
    train.validate();
    config.validate(train.n_cols());

    TrainingSetTriple triple;
    triple.t1 = train;

    FgsmResult fgsm = lda_fgsm(train.features, train.labels, config.epsilon, config.fraction,
                               config.seed);
    triple.t2 = train;
    triple.t2.features = std::move(fgsm.features);
    triple.fgsm_rows = std::move(fgsm.rows);

    triple.t3 = train;
    triple.t3.features = feature_mean_shift(train.features, train.labels, config.features);

    VecD before0, before1, after0, after1;
    class_column_means(train.features, train.labels, before0, before1);
    class_column_means(triple.t3.features, triple.t3.labels, after0, after1);
    triple.provenance = nlohmann::json{
        {"config", config.to_json()},
        {"fgsm_rows", triple.fgsm_rows.size()},
        {"class_means",
         {{"before", {{"normal", means_to_json(before0)}, {"malicious", means_to_json(before1)}}},
          {"after", {{"normal", means_to_json(after0)}, {"malicious", means_to_json(after1)}}}}}};
    return triple;
}

}  // namespace netanom::adv
