#include "tabsema/sampler.hpp"

#include <sstream>

#include <nlohmann/json.hpp>

namespace tabsema {

namespace {

Column window(const Column& col, std::size_t start, std::size_t m) {
    Column out;
    out.kind = col.kind;
    out.cells.reserve(m);
    for (std::size_t r = start; r < start + m; ++r)
        out.cells.push_back(r < col.cells.size() ? col.cells[r] : Cell{});
    return out;
}

Column empty_column(std::size_t m) {
    Column c;
    c.cells.resize(m);
    return c;
}

nlohmann::json column_json(const Column& c) {
    nlohmann::json cells = nlohmann::json::array();
    for (const auto& cell : c.cells) cells.push_back(cell.raw_text);
    return {{"kind", std::string(to_string(c.kind))}, {"cells", std::move(cells)}};
}

Column column_from_json(const nlohmann::json& j) {
    Column c;
    c.kind = column_kind_from_string(j.at("kind").get<std::string>());
    for (const auto& cell : j.at("cells")) c.cells.push_back({cell.get<std::string>()});
    return c;
}

}  // namespace

std::vector<MicroTable> extract_micro_tables(const Table& table, std::size_t target_index,
                                             std::size_t m, std::size_t l) {
    if (m < 1) throw ConfigError("micro table needs m >= 1");
    if (target_index >= table.columns.size())
        throw Error("target column " + std::to_string(target_index) + " out of range for table '" +
                    table.id + "'");
    const Column& target = table.columns[target_index];
    if (target.kind != ColumnKind::entity)
        throw Error("target column " + std::to_string(target_index) + " of table '" + table.id +
                    "' is not an entity column");

    std::vector<const Column*> others;
    for (std::size_t c = 0; c < table.columns.size() && others.size() < l; ++c)
        if (c != target_index) others.push_back(&table.columns[c]);

    const std::size_t rows = target.size();
    const std::size_t windows = rows >= m ? rows - m + 1 : 1;
    std::vector<MicroTable> out;
    out.reserve(windows);
    for (std::size_t w = 0; w < windows; ++w) {
        MicroTable mt;
        mt.target = window(target, w, m);
        mt.surrounding.reserve(l);
        for (const Column* c : others) mt.surrounding.push_back(window(*c, w, m));
        while (mt.surrounding.size() < l) mt.surrounding.push_back(empty_column(m));
        out.push_back(std::move(mt));
    }
    return out;
}

std::vector<Sample> build_training_set(const std::vector<LabeledColumn>& columns,
                                       const ClassCatalog& catalog, std::size_t m, std::size_t l) {
    std::vector<Sample> samples;
    for (const auto& lc : columns) {
        auto label = catalog.index_of(lc.class_id);
        if (!label) throw ConfigError("unknown class id '" + lc.class_id + "'");
        for (auto& mt : extract_micro_tables(*lc.table, lc.target_index, m, l))
            samples.push_back({std::move(mt), *label});
    }
    return samples;
}

std::string samples_to_jsonl(const std::vector<Sample>& samples) {
    std::string out;
    for (const auto& s : samples) {
        nlohmann::json surrounding = nlohmann::json::array();
        for (const auto& c : s.micro_table.surrounding) surrounding.push_back(column_json(c));
        nlohmann::json j = {{"target", column_json(s.micro_table.target)},
                            {"surrounding", std::move(surrounding)},
                            {"label", s.label}};
        out += j.dump();
        out.push_back('\n');
    }
    return out;
}

std::vector<Sample> samples_from_jsonl(const std::string& text) {
    std::vector<Sample> samples;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        try {
            auto j = nlohmann::json::parse(line);
            Sample s;
            s.micro_table.target = column_from_json(j.at("target"));
            for (const auto& c : j.at("surrounding"))
                s.micro_table.surrounding.push_back(column_from_json(c));
            s.label = j.at("label").get<std::size_t>();
            samples.push_back(std::move(s));
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(std::string("bad sample: ") + e.what(), lineno);
        }
    }
    return samples;
}

}  // namespace tabsema
