#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "tabsema/table.hpp"

namespace tabsema {

struct Sample {
    MicroTable micro_table;
    std::size_t label = 0;
};

/// Micro tables of one column: a window of m target rows sliding by one
/// row, paired with the first l other columns taken left to right. Short
/// targets yield a single window padded with empty cells; missing
/// surrounding columns are all-empty.
std::vector<MicroTable> extract_micro_tables(const Table& table, std::size_t target_index,
                                             std::size_t m, std::size_t l);

struct LabeledColumn {
    const Table* table = nullptr;
    std::size_t target_index = 0;
    std::string class_id;
};

/// Windows of every column in input order, each labeled with its column's class.
std::vector<Sample> build_training_set(const std::vector<LabeledColumn>& columns,
                                       const ClassCatalog& catalog, std::size_t m, std::size_t l);

struct SplitSpec {
    std::uint64_t seed = 0;
    double train_fraction = 0.7;
};

/// Column-level split: floor(fraction * n) items go to train, the rest to test.
template <typename T>
std::pair<std::vector<T>, std::vector<T>> split_dataset(const std::vector<T>& items,
                                                        const SplitSpec& spec) {
    if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0))
        throw ConfigError("train_fraction must lie in (0,1)");
    std::vector<std::size_t> order(items.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(spec.seed);
    rng.shuffle(order);
    // 1e-9 absorbs representation error such as 0.7 * 10 = 6.9999...
    auto n_train = static_cast<std::size_t>(spec.train_fraction * static_cast<double>(items.size()) + 1e-9);
    std::pair<std::vector<T>, std::vector<T>> out;
    for (std::size_t i = 0; i < order.size(); ++i)
        (i < n_train ? out.first : out.second).push_back(items[order[i]]);
    return out;
}

/// JSON lines, one sample per line.
std::string samples_to_jsonl(const std::vector<Sample>& samples);
std::vector<Sample> samples_from_jsonl(const std::string& text);

}  // namespace tabsema
