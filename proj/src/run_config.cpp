#include "tabsema/run_config.hpp"

namespace tabsema {

nlohmann::json RunConfig::to_json() const {
    auto net = hnn.to_json();
    net.erase("d_w");
    net.erase("K");
    return {{"hnn", std::move(net)},
            {"train",
             {{"learning_rate", train.learning_rate},
              {"batch_size", train.batch_size},
              {"epochs", train.epochs},
              {"init_range", train.init_range}}},
            {"base",
             {{"kind", std::string(to_string(base.kind))},
              {"hidden", base.hidden},
              {"learning_rate", base.learning_rate},
              {"epochs", base.epochs},
              {"batch_size", base.batch_size}}},
            {"sigma", sigma},
            {"n_lookup", p2vec.n_lookup},
            {"lookup_alpha", p2vec.lookup_alpha},
            {"match_alpha", p2vec.match_alpha},
            {"seed", seed}};
}

std::string RunConfig::fingerprint(const std::string& catalog_hash) const {
    return to_hex(fnv1a64(to_json().dump() + '\n' + catalog_hash));
}

}  // namespace tabsema
