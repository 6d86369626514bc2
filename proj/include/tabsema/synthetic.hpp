#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "tabsema/encoder.hpp"
#include "tabsema/kb.hpp"
#include "tabsema/table.hpp"

namespace tabsema::synthetic {

/// Knobs of the synthetic web-table corpus.
struct Spec {
    std::uint64_t seed = 2024;
    std::size_t entities_per_class = 50;
    std::size_t columns = 200;
    std::size_t min_rows = 5;
    std::size_t max_rows = 10;
    std::size_t persons = 80;
    std::size_t dim = 16;
    /// Upper bound of the per-column share of rows named with class-neutral words.
    double max_ambiguity = 0.7;
    /// Share of entities left out of the knowledge base.
    double unknown_entity_rate = 0.1;
    /// Share of surrounding cells replaced by an unrelated value.
    double cell_noise = 0.1;
};

/// Four creative-work/organisation classes whose entities differ in name
/// vocabulary (partly) and in which person/date properties they carry.
/// Surrounding columns have the same kinds for every class, so only the
/// knowledge base tells the relations apart.
struct Dataset {
    std::vector<kb::Triple> triples;
    ClassCatalog catalog;
    EmbeddingTable embeddings;
    std::vector<Table> tables;
    std::vector<GoldLabel> gold;
};

Dataset generate(const Spec& spec);

/// Writes kb.nt, catalog.csv, embeddings.txt, gold.csv and tables/<id>.json.
void write(const Dataset& data, const std::filesystem::path& dir);

}  // namespace tabsema::synthetic
