#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tabsema/kb.hpp"
#include "tabsema/similarity.hpp"
#include "tabsema/table.hpp"

namespace tabsema {

/// Merged frequent properties of all candidate classes; the IRI-sorted
/// order fixes the P2Vec slot of each property.
class CandidatePropertySet {
public:
    CandidatePropertySet() = default;
    CandidatePropertySet(double sigma, std::map<std::string, std::vector<std::string>> per_class);

    double sigma() const noexcept { return sigma_; }
    std::size_t dim() const noexcept { return properties_.size(); }
    const std::vector<std::string>& properties() const noexcept { return properties_; }
    /// class IRI -> its frequent properties, sorted
    const std::map<std::string, std::vector<std::string>>& per_class() const noexcept { return per_class_; }
    /// Slot of a property, or npos when it is not a candidate.
    std::size_t index(const std::string& property) const;

    std::string to_json() const;
    static CandidatePropertySet from_json(std::string_view text);
    void save(const std::filesystem::path& path) const;
    static CandidatePropertySet load(const std::filesystem::path& path);

    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

private:
    double sigma_ = 0.0;
    std::vector<std::string> properties_;
    std::map<std::string, std::vector<std::string>> per_class_;
};

/// Matching thresholds; Algorithm 1 shares one alpha for lookup and text matching.
struct P2VecParams {
    std::size_t n_lookup = 5;
    double lookup_alpha = 0.85;
    double match_alpha = 0.85;
};

/// Boolean match of a table cell against a triple object:
/// entity -> Jaro against its English labels, text -> Jaro,
/// date -> equal years, number -> equal values. Empty cells never match.
bool cell_object_match(std::string_view cell_text, const kb::TripleObject& object, double alpha,
                       const kb::Backend& kb);

/// Year carried by a date literal or a date-like cell, if any.
std::optional<int> extract_year(std::string_view text);

/// Frequent properties per class: p is frequent for C when at least a sigma
/// fraction of E(C) has a triple with predicate p.
CandidatePropertySet mine_candidate_properties(const ClassCatalog& catalog, double sigma,
                                               const kb::Backend& kb);

using PropertyVector = Eigen::VectorXd;

/// Sets slot index(p) when some triple (e, p, o) of an entity e looked up by
/// the main cell matches the first cell of a surrounding column, then
/// L2-normalizes (the zero vector stays zero).
PropertyVector p2vec_extract(const MicroTable& mt, const CandidatePropertySet& props,
                             const P2VecParams& params, const kb::Backend& kb);

/// `{ "sample_id": ..., "v": [...] }` per line.
std::string p2vec_jsonl_line(const std::string& sample_id, const PropertyVector& v);

}  // namespace tabsema
