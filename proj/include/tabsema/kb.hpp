#pragma once

#include <atomic>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "tabsema/common.hpp"

namespace tabsema::kb {

inline constexpr std::string_view kRdfType = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";
inline constexpr std::string_view kRdfsLabel = "http://www.w3.org/2000/01/rdf-schema#label";
inline constexpr std::string_view kRdfsSubClassOf = "http://www.w3.org/2000/01/rdf-schema#subClassOf";
inline constexpr std::string_view kXsd = "http://www.w3.org/2001/XMLSchema#";

/// Knowledge-base access failure. Retryable errors (network) may succeed later.
class KbError : public Error {
public:
    KbError(const std::string& what, bool retryable) : Error(what), retryable_(retryable) {}
    bool retryable() const noexcept { return retryable_; }

private:
    bool retryable_;
};

enum class ObjectKind { entity, text, number, date };

struct TripleObject {
    ObjectKind kind = ObjectKind::entity;
    std::string value;     // IRI for entities, lexical form for literals
    std::string lang;      // text only
    std::string datatype;  // literals with an explicit datatype
    double number = 0.0;   // parsed value for numbers

    friend bool operator==(const TripleObject&, const TripleObject&) = default;
};

struct Triple {
    std::string subject;
    std::string predicate;
    TripleObject object;

    friend bool operator==(const Triple&, const Triple&) = default;
};

/// Classifies an RDF literal by datatype: numeric XSD types become numbers,
/// date/dateTime/gYear become dates, everything else text.
TripleObject make_literal(std::string lexical, std::string lang, std::string datatype);
TripleObject make_entity(std::string iri);

/// English (or untagged) label literal.
bool is_english(const TripleObject& o) noexcept;

struct EntityRecord {
    std::string iri;
    std::vector<std::string> labels;   // English rdfs:label values
    std::vector<std::string> classes;  // asserted types plus every superclass, sorted
};

struct LookupHit {
    std::string iri;
    double similarity = 0.0;

    friend bool operator==(const LookupHit&, const LookupHit&) = default;
};

/// Ranks candidates: similarity descending, IRI ascending; keeps those >= alpha; truncates to n.
std::vector<LookupHit> rank_hits(std::vector<LookupHit> hits, double alpha, std::size_t n);

/// The query shapes every backend answers.
class Backend {
public:
    virtual ~Backend() = default;
    /// Q1: entities whose type closure contains the class, IRI-sorted.
    virtual std::vector<std::string> entities_of_class(const std::string& class_iri) const = 0;
    /// Q2: all stored triples with the given subject.
    virtual std::vector<Triple> triples_of_subject(const std::string& entity_iri) const = 0;
    /// Fuzzy label lookup by Jaro similarity over normalized strings.
    virtual std::vector<LookupHit> entity_lookup(std::string_view phrase, double alpha,
                                                 std::size_t n) const = 0;
    /// English labels of an entity (for matching entity-valued objects).
    virtual std::vector<std::string> labels_of(const std::string& entity_iri) const = 0;
};

struct SnapshotOptions {
    std::string label_property = std::string(kRdfsLabel);
    std::string type_property = std::string(kRdfType);
    std::string subclass_property = std::string(kRdfsSubClassOf);
};

/// Offline, immutable triple store with materialized class closure and a
/// label index bucketed by normalized length.
class Snapshot final : public Backend {
public:
    Snapshot() = default;
    Snapshot(std::vector<Triple> triples, SnapshotOptions opts = {});

    std::vector<std::string> entities_of_class(const std::string& class_iri) const override;
    std::vector<Triple> triples_of_subject(const std::string& entity_iri) const override;
    std::vector<LookupHit> entity_lookup(std::string_view phrase, double alpha,
                                         std::size_t n) const override;
    std::vector<std::string> labels_of(const std::string& entity_iri) const override;

    const EntityRecord* entity(const std::string& iri) const;
    std::size_t entity_count() const noexcept { return entities_.size(); }
    /// Every parsed input triple, including schema triples.
    const std::vector<Triple>& source_triples() const noexcept { return source_; }
    const SnapshotOptions& options() const noexcept { return opts_; }

    std::string to_json() const;
    static Snapshot from_json(std::string_view text);
    void save(const std::filesystem::path& path) const;
    static Snapshot load(const std::filesystem::path& path);

private:
    SnapshotOptions opts_;
    std::vector<Triple> source_;
    std::map<std::string, EntityRecord> entities_;
    std::unordered_map<std::string, std::vector<Triple>> by_subject_;
    std::unordered_map<std::string, std::vector<std::string>> by_class_;
    /// normalized label length -> (normalized label, iri)
    std::map<std::size_t, std::vector<std::pair<std::string, std::string>>> label_index_;
};

/// Parses N-Triples (IRIs, blank nodes, plain/language/typed literals).
/// Throws ParseError carrying the offending line number.
std::vector<Triple> parse_ntriples(std::string_view text);
std::string to_ntriples(const std::vector<Triple>& triples);

Snapshot build_snapshot(const std::filesystem::path& ntriples_file, SnapshotOptions opts = {});

/// Decorator counting queries per shape; forwards everything.
class CountingBackend final : public Backend {
public:
    explicit CountingBackend(const Backend& inner) : inner_(inner) {}

    std::vector<std::string> entities_of_class(const std::string& c) const override;
    std::vector<Triple> triples_of_subject(const std::string& e) const override;
    std::vector<LookupHit> entity_lookup(std::string_view phrase, double alpha, std::size_t n) const override;
    std::vector<std::string> labels_of(const std::string& e) const override;

    std::size_t q1() const noexcept { return q1_; }
    std::size_t q2() const noexcept { return q2_; }
    std::size_t lookups() const noexcept { return lookups_; }
    std::size_t label_queries() const noexcept { return labels_; }

private:
    const Backend& inner_;
    mutable std::atomic<std::size_t> q1_{0}, q2_{0}, lookups_{0}, labels_{0};
};

}  // namespace tabsema::kb
