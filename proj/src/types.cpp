#include "netanom/types.hpp"

#include <set>

namespace netanom {

void Dataset::validate() const {
    if (features.rows() != labels.size()) {
        throw std::invalid_argument("dataset: feature rows (" + std::to_string(features.rows()) +
                                    ") != label count (" + std::to_string(labels.size()) + ")");
    }
    if (static_cast<Eigen::Index>(feature_names.size()) != features.cols()) {
        throw std::invalid_argument("dataset: feature_names size != column count");
    }
    std::set<std::string> seen;
    for (const auto& name : feature_names) {
        if (!seen.insert(name).second) {
            throw std::invalid_argument("dataset: duplicate feature name '" + name + "'");
        }
    }
    for (Eigen::Index i = 0; i < labels.size(); ++i) {
        if (labels[i] != 0 && labels[i] != 1) {
            throw std::invalid_argument("dataset: label out of {0,1} at row " + std::to_string(i));
        }
    }
    for (const auto& [name, tokens] : nominal_maps) {
        std::set<std::string> tok(tokens.begin(), tokens.end());
        if (tok.size() != tokens.size()) {
            throw std::invalid_argument("dataset: nominal map for '" + name + "' not injective");
        }
    }
}

}  // namespace netanom
