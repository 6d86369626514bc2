#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <semaphore>
#include <string>
#include <vector>

#include "tabsema/kb.hpp"

namespace tabsema::kb {

/// Persistent response cache: one file per key hash, written atomically.
/// A file stores the full key on its first line so hash collisions read as misses.
class QueryCache {
public:
    explicit QueryCache(std::filesystem::path dir);

    std::optional<std::string> get(const std::string& key) const;
    void put(const std::string& key, const std::string& body) const;
    const std::filesystem::path& dir() const noexcept { return dir_; }

private:
    std::filesystem::path path_for(const std::string& key) const;
    std::filesystem::path dir_;
};

enum class QueryKind { q1, q2, lookup, labels };

struct RemoteOptions {
    /// SPARQL endpoint URL, e.g. http://dbpedia.org/sparql.
    std::string endpoint;
    /// Lookup service URL; defaults to <scheme://host[:port]>/lookup of the endpoint.
    std::string lookup_url;
    double timeout_seconds = 30.0;
    bool offline = false;
    std::ptrdiff_t max_concurrent = 4;
    std::string label_property = std::string(kRdfsLabel);
    std::string type_property = std::string(kRdfType);
    std::string subclass_property = std::string(kRdfsSubClassOf);

    /// Endpoint from TABSEMA_KB_ENDPOINT, if set.
    static RemoteOptions from_env();
};

/// Query text sent for Q1 / Q2 / label queries.
std::string sparql_entities_of_class(const std::string& class_iri, const RemoteOptions& opts);
std::string sparql_triples_of_subject(const std::string& entity_iri);
std::string sparql_labels_of(const std::string& entity_iri, const RemoteOptions& opts);

/// Parses a SPARQL JSON result set into rows of (variable -> object term).
std::vector<std::map<std::string, TripleObject>> parse_sparql_json(const std::string& body);

/// SPARQL endpoint plus lookup service client. Every response body is
/// cached under (kind, args); offline mode answers from the cache only.
class RemoteBackend final : public Backend {
public:
    RemoteBackend(RemoteOptions opts, std::shared_ptr<const QueryCache> cache);
    ~RemoteBackend() override;

    std::vector<std::string> entities_of_class(const std::string& class_iri) const override;
    std::vector<Triple> triples_of_subject(const std::string& entity_iri) const override;
    std::vector<LookupHit> entity_lookup(std::string_view phrase, double alpha,
                                         std::size_t n) const override;
    std::vector<std::string> labels_of(const std::string& entity_iri) const override;

    /// Raw response for a query, from cache or network.
    std::string remote_query(QueryKind kind, const std::vector<std::string>& args) const;

    std::size_t network_calls() const noexcept { return network_calls_; }

private:
    std::string fetch(QueryKind kind, const std::vector<std::string>& args) const;

    RemoteOptions opts_;
    std::shared_ptr<const QueryCache> cache_;
    mutable std::counting_semaphore<1024> slots_;
    mutable std::atomic<std::size_t> network_calls_{0};
};

}  // namespace tabsema::kb
