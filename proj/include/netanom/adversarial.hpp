#pragma once

#include "netanom/dataset.hpp"
#include "netanom/types.hpp"

#include <cstdint>
#include <vector>

#include "json.hpp"

namespace netanom::adv {

struct PerturbationConfig {
    double epsilon = 0.1;            // step size in standardized feature units
    double fraction = 0.2;           // share of rows the attacker may touch
    std::vector<int> features;       // mean-shift column list, required non-empty
    std::uint64_t seed = 1;

    void validate(Eigen::Index n_cols) const;
    nlohmann::json to_json() const;
};

struct FgsmResult {
    Matrix features;
    std::vector<Eigen::Index> rows;  // perturbed row indices, ascending
};

// Evasion attack driven by an LDA fit on the input itself: a seeded sample of
// ceil(fraction*n) rows moves epsilon against the model's decision direction.
// Only coordinates with nonzero LDA weight move.
FgsmResult lda_fgsm(const Matrix& features, const VecI& labels, double epsilon, double fraction,
                    std::uint64_t seed);

// Poisoning attack: remap each malicious row's selected columns so the
// malicious column mean lands exactly on the normal column mean.
Matrix feature_mean_shift(const Matrix& features, const VecI& labels,
                          const std::vector<int>& selected);

struct TrainingSetTriple {
    Dataset t1;
    Dataset t2;
    Dataset t3;
    std::vector<Eigen::Index> fgsm_rows;
    nlohmann::json provenance;  // config echo plus before/after class means
};

TrainingSetTriple build_training_sets(const Dataset& train, const PerturbationConfig& config);

}  // namespace netanom::adv
