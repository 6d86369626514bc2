#include "tabsema/p2vec.hpp"

#include <algorithm>
#include <cctype>
#include <iostream>
#include <optional>
#include <set>

#include <nlohmann/json.hpp>

namespace tabsema {

CandidatePropertySet::CandidatePropertySet(double sigma,
                                           std::map<std::string, std::vector<std::string>> per_class)
    : sigma_(sigma), per_class_(std::move(per_class)) {
    std::set<std::string> merged;
    for (auto& [cls, props] : per_class_) {
        std::sort(props.begin(), props.end());
        props.erase(std::unique(props.begin(), props.end()), props.end());
        merged.insert(props.begin(), props.end());
    }
    properties_.assign(merged.begin(), merged.end());
}

std::size_t CandidatePropertySet::index(const std::string& property) const {
    auto it = std::lower_bound(properties_.begin(), properties_.end(), property);
    if (it == properties_.end() || *it != property) return npos;
    return static_cast<std::size_t>(it - properties_.begin());
}

std::string CandidatePropertySet::to_json() const {
    nlohmann::json j = {{"sigma", sigma_}, {"classes", per_class_}, {"properties", properties_}};
    return j.dump(2) + "\n";
}

CandidatePropertySet CandidatePropertySet::from_json(std::string_view text) {
    try {
        auto j = nlohmann::json::parse(text);
        CandidatePropertySet set(j.at("sigma").get<double>(),
                                 j.at("classes").get<std::map<std::string, std::vector<std::string>>>());
        if (set.properties_ != j.at("properties").get<std::vector<std::string>>())
            throw ParseError("property list does not match the per-class sets");
        return set;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed property file: ") + e.what());
    }
}

void CandidatePropertySet::save(const std::filesystem::path& path) const { write_file_atomic(path, to_json()); }

CandidatePropertySet CandidatePropertySet::load(const std::filesystem::path& path) {
    return from_json(read_file(path));
}

std::optional<int> extract_year(std::string_view text) {
    if (auto d = parse_date(text)) return d->year;
    // xsd:dateTime, gYearMonth and negative years: leading [-]YYYY
    std::string s = trim(text);
    std::size_t i = s.starts_with('-') ? 1 : 0;
    std::size_t digits = 0;
    while (i + digits < s.size() && std::isdigit(static_cast<unsigned char>(s[i + digits]))) ++digits;
    if (digits < 4 || (i + digits < s.size() && s[i + digits] != '-')) return std::nullopt;
    int year = std::stoi(s.substr(i, digits));
    return i ? -year : year;
}

bool cell_object_match(std::string_view cell_text, const kb::TripleObject& object, double alpha,
                       const kb::Backend& kb) {
    const std::string cell = normalize_phrase(cell_text);
    if (cell.empty()) return false;
    switch (object.kind) {
        case kb::ObjectKind::entity:
            for (const auto& label : kb.labels_of(object.value))
                if (jaro_similarity(cell, normalize_phrase(label)) >= alpha) return true;
            return false;
        case kb::ObjectKind::text:
            return jaro_similarity(cell, normalize_phrase(object.value)) >= alpha;
        case kb::ObjectKind::number: {
            auto v = parse_decimal(cell_text);
            return v && *v == object.number;
        }
        case kb::ObjectKind::date: {
            auto a = extract_year(cell_text);
            auto b = extract_year(object.value);
            return a && b && *a == *b;
        }
    }
    return false;
}

CandidatePropertySet mine_candidate_properties(const ClassCatalog& catalog, double sigma,
                                               const kb::Backend& kb) {
    if (!(sigma >= 0.0 && sigma <= 1.0)) throw ConfigError("sigma must lie in [0,1]");
    std::vector<std::vector<std::string>> members;
    std::set<std::string> all_entities;
    for (const auto& entry : catalog.entries()) {
        members.push_back(kb.entities_of_class(entry.kb_iri));
        all_entities.insert(members.back().begin(), members.back().end());
    }
    // one Q2 per distinct entity, shared across classes
    std::map<std::string, std::set<std::string>> subject_properties;
    for (const auto& e : all_entities) {
        auto& props = subject_properties[e];
        for (const auto& t : kb.triples_of_subject(e)) props.insert(t.predicate);
    }
    std::map<std::string, std::vector<std::string>> per_class;
    for (std::size_t i = 0; i < catalog.size(); ++i) {
        const auto& cls = catalog[i].kb_iri;
        auto& frequent = per_class[cls];
        const auto& entities = members[i];
        if (entities.empty()) {
            std::clog << "mine-properties: class " << cls << " has no entities\n";
            continue;
        }
        std::map<std::string, std::size_t> counts;
        for (const auto& e : entities)
            for (const auto& p : subject_properties[e]) ++counts[p];
        for (const auto& [p, count] : counts)
            if (static_cast<double>(count) / static_cast<double>(entities.size()) >= sigma)
                frequent.push_back(p);
    }
    return CandidatePropertySet(sigma, std::move(per_class));
}

PropertyVector p2vec_extract(const MicroTable& mt, const CandidatePropertySet& props,
                             const P2VecParams& params, const kb::Backend& kb) {
    if (params.n_lookup < 1) throw ConfigError("lookup size must be >= 1");
    PropertyVector v = PropertyVector::Zero(static_cast<Eigen::Index>(props.dim()));
    if (mt.target.cells.empty()) return v;
    for (const auto& hit : kb.entity_lookup(mt.main_cell().raw_text, params.lookup_alpha, params.n_lookup)) {
        for (const auto& triple : kb.triples_of_subject(hit.iri)) {
            const std::size_t slot = props.index(triple.predicate);
            if (slot == CandidatePropertySet::npos) continue;
            for (const auto& column : mt.surrounding) {
                if (column.cells.empty()) continue;
                if (cell_object_match(column.cells[0].raw_text, triple.object, params.match_alpha, kb)) {
                    v[static_cast<Eigen::Index>(slot)] = 1.0;
                    break;
                }
            }
        }
    }
    const double norm = v.norm();
    if (norm > 0.0) v /= norm;
    return v;
}

std::string p2vec_jsonl_line(const std::string& sample_id, const PropertyVector& v) {
    nlohmann::json j = {{"sample_id", sample_id},
                        {"v", std::vector<double>(v.data(), v.data() + v.size())}};
    return j.dump() + "\n";
}

}  // namespace tabsema
