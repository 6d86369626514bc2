#pragma once

#include <cstdint>
#include <string>

#include <nlohmann/json.hpp>

#include "tabsema/ensemble.hpp"
#include "tabsema/hnn.hpp"
#include "tabsema/p2vec.hpp"

namespace tabsema {

/// Every hyperparameter of a run. Defaults follow the published setting
/// where one exists.
struct RunConfig {
    HnnConfig hnn;
    TrainConfig train;
    BaseTrainConfig base;
    double sigma = 0.005;
    P2VecParams p2vec;
    std::uint64_t seed = 42;

    /// Hyperparameters only; data-derived sizes (d_w, K) and I/O paths are excluded.
    nlohmann::json to_json() const;
    /// Hash of to_json() together with the catalog hash.
    std::string fingerprint(const std::string& catalog_hash) const;
};

}  // namespace tabsema
