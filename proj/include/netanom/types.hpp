#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace netanom {

// rows = samples, cols = features
using Matrix = Eigen::MatrixXd;
using VecD = Eigen::VectorXd;
using VecI = Eigen::VectorXi;

// Feature matrix plus binary labels and the bookkeeping needed to trace a
// column back to its source: column names and, for encoded nominal columns,
// the token list in code order (token -> code is the index in the list).
struct Dataset {
    Matrix features;                                        // n x m
    VecI labels;                                            // n, values in {0,1}
    std::vector<std::string> feature_names;                 // length m, unique
    std::map<std::string, std::vector<std::string>> nominal_maps;

    Eigen::Index n_rows() const { return features.rows(); }
    Eigen::Index n_cols() const { return features.cols(); }

    // throws std::invalid_argument on any structural violation
    void validate() const;
};

// Per-column training statistics used for standardization. Columns that were
// constant in the training set keep std 1 and are passed through unchanged.
struct FeatureStats {
    VecD means;
    VecD stds;                          // population std; 1.0 where constant
    std::vector<std::uint8_t> constant_mask;

    Eigen::Index size() const { return means.size(); }
};

}  // namespace netanom
