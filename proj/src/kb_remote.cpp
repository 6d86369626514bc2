#include "tabsema/kb_remote.hpp"

#include <cstdlib>
#include <regex>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "tabsema/similarity.hpp"
#include "tabsema/table.hpp"

namespace tabsema::kb {

namespace {

struct Url {
    std::string origin;  // scheme://host[:port]
    std::string path;
};

Url split_url(const std::string& url) {
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw ConfigError("endpoint URL needs a scheme: " + url);
    auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

std::string_view kind_name(QueryKind k) {
    switch (k) {
        case QueryKind::q1: return "q1";
        case QueryKind::q2: return "q2";
        case QueryKind::lookup: return "lookup";
        case QueryKind::labels: return "labels";
    }
    return "?";
}

std::string strip_tags(const std::string& s) {
    static const std::regex tag("<[^>]*>");
    return std::regex_replace(s, tag, "");
}

std::string first_string(const nlohmann::json& j) {
    if (j.is_string()) return j.get<std::string>();
    if (j.is_array() && !j.empty() && j.front().is_string()) return j.front().get<std::string>();
    return {};
}

std::vector<std::string> all_strings(const nlohmann::json& j) {
    std::vector<std::string> out;
    if (j.is_string()) out.push_back(j.get<std::string>());
    if (j.is_array())
        for (const auto& v : j)
            if (v.is_string()) out.push_back(v.get<std::string>());
    return out;
}

}  // namespace

QueryCache::QueryCache(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_);
}

std::filesystem::path QueryCache::path_for(const std::string& key) const {
    return dir_ / (to_hex(fnv1a64(key)) + ".resp");
}

std::optional<std::string> QueryCache::get(const std::string& key) const {
    auto path = path_for(key);
    if (!std::filesystem::exists(path)) return std::nullopt;
    std::string raw = read_file(path);
    std::string header = nlohmann::json(key).dump();
    if (raw.size() <= header.size() || raw.compare(0, header.size(), header) != 0 || raw[header.size()] != '\n')
        return std::nullopt;
    return raw.substr(header.size() + 1);
}

void QueryCache::put(const std::string& key, const std::string& body) const {
    write_file_atomic(path_for(key), nlohmann::json(key).dump() + '\n' + body);
}

RemoteOptions RemoteOptions::from_env() {
    RemoteOptions opts;
    if (const char* ep = std::getenv("TABSEMA_KB_ENDPOINT")) opts.endpoint = ep;
    return opts;
}

std::string sparql_entities_of_class(const std::string& class_iri, const RemoteOptions& opts) {
    return "SELECT DISTINCT ?e WHERE { ?e <" + opts.type_property + ">/<" + opts.subclass_property +
           ">* <" + class_iri + "> . } ORDER BY ?e";
}

std::string sparql_triples_of_subject(const std::string& entity_iri) {
    return "SELECT ?p ?o WHERE { <" + entity_iri + "> ?p ?o . }";
}

std::string sparql_labels_of(const std::string& entity_iri, const RemoteOptions& opts) {
    return "SELECT ?l WHERE { <" + entity_iri + "> <" + opts.label_property + "> ?l . }";
}

std::vector<std::map<std::string, TripleObject>> parse_sparql_json(const std::string& body) {
    std::vector<std::map<std::string, TripleObject>> rows;
    try {
        auto j = nlohmann::json::parse(body);
        for (const auto& binding : j.at("results").at("bindings")) {
            std::map<std::string, TripleObject> row;
            for (const auto& [var, t] : binding.items()) {
                std::string type = t.at("type");
                std::string value = t.at("value");
                if (type == "uri")
                    row[var] = make_entity(std::move(value));
                else if (type == "bnode")
                    row[var] = make_entity("_:" + value);
                else
                    row[var] = make_literal(std::move(value), t.value("xml:lang", ""), t.value("datatype", ""));
            }
            rows.push_back(std::move(row));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed SPARQL response: ") + e.what());
    }
    return rows;
}

RemoteBackend::RemoteBackend(RemoteOptions opts, std::shared_ptr<const QueryCache> cache)
    : opts_(std::move(opts)), cache_(std::move(cache)), slots_(std::max<std::ptrdiff_t>(1, opts_.max_concurrent)) {
    if (opts_.endpoint.empty() && !opts_.offline)
        throw ConfigError("no KB endpoint configured (set TABSEMA_KB_ENDPOINT or --kb endpoint:URL)");
    if (opts_.lookup_url.empty() && !opts_.endpoint.empty())
        opts_.lookup_url = split_url(opts_.endpoint).origin + "/lookup";
}

RemoteBackend::~RemoteBackend() = default;

std::string RemoteBackend::remote_query(QueryKind kind, const std::vector<std::string>& args) const {
    std::string key = std::string(kind_name(kind)) + '\x1f' + opts_.endpoint;
    for (const auto& a : args) key += '\x1f' + a;
    if (cache_)
        if (auto hit = cache_->get(key)) return *hit;
    if (opts_.offline) throw KbError("offline cache miss: " + std::string(kind_name(kind)) + " " +
                                         (args.empty() ? "" : args.front()), false);
    std::string body = fetch(kind, args);
    if (cache_) cache_->put(key, body);
    return body;
}

std::string RemoteBackend::fetch(QueryKind kind, const std::vector<std::string>& args) const {
    const bool lookup = kind == QueryKind::lookup;
    Url url = split_url(lookup ? opts_.lookup_url : opts_.endpoint);
    httplib::Params params;
    httplib::Headers headers;
    if (lookup) {
        params.emplace("query", args.at(0));
        params.emplace("maxResults", args.at(1));
        params.emplace("format", "json");
        headers.emplace("Accept", "application/json");
    } else {
        std::string q;
        switch (kind) {
            case QueryKind::q1: q = sparql_entities_of_class(args.at(0), opts_); break;
            case QueryKind::q2: q = sparql_triples_of_subject(args.at(0)); break;
            default: q = sparql_labels_of(args.at(0), opts_); break;
        }
        params.emplace("query", std::move(q));
        params.emplace("format", "application/sparql-results+json");
        headers.emplace("Accept", "application/sparql-results+json");
    }

    slots_.acquire();
    struct Release {
        std::counting_semaphore<1024>& s;
        ~Release() { s.release(); }
    } release{slots_};

    httplib::Client client(url.origin);
    auto secs = static_cast<time_t>(opts_.timeout_seconds);
    auto usecs = static_cast<time_t>((opts_.timeout_seconds - static_cast<double>(secs)) * 1e6);
    client.set_connection_timeout(secs, usecs);
    client.set_read_timeout(secs, usecs);
    client.set_follow_location(true);
    ++network_calls_;
    auto res = client.Get(url.path, params, headers);
    if (!res)
        throw KbError("network failure contacting " + url.origin + ": " + httplib::to_string(res.error()), true);
    if (res->status != 200)
        throw KbError("KB service returned HTTP " + std::to_string(res->status) + " for " +
                          std::string(kind_name(kind)),
                      res->status >= 500 || res->status == 429);
    return res->body;
}

std::vector<std::string> RemoteBackend::entities_of_class(const std::string& class_iri) const {
    std::vector<std::string> out;
    for (auto& row : parse_sparql_json(remote_query(QueryKind::q1, {class_iri})))
        if (auto it = row.find("e"); it != row.end() && it->second.kind == ObjectKind::entity)
            out.push_back(std::move(it->second.value));
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::vector<Triple> RemoteBackend::triples_of_subject(const std::string& entity_iri) const {
    std::vector<Triple> out;
    for (auto& row : parse_sparql_json(remote_query(QueryKind::q2, {entity_iri}))) {
        auto p = row.find("p");
        auto o = row.find("o");
        if (p == row.end() || o == row.end()) throw ParseError("SPARQL row lacks ?p or ?o");
        out.push_back({entity_iri, p->second.value, std::move(o->second)});
    }
    return out;
}

std::vector<std::string> RemoteBackend::labels_of(const std::string& entity_iri) const {
    std::vector<std::string> out;
    for (auto& row : parse_sparql_json(remote_query(QueryKind::labels, {entity_iri})))
        if (auto it = row.find("l"); it != row.end() && is_english(it->second) &&
                                     std::find(out.begin(), out.end(), it->second.value) == out.end())
            out.push_back(it->second.value);
    return out;
}

std::vector<LookupHit> RemoteBackend::entity_lookup(std::string_view phrase, double alpha, std::size_t n) const {
    std::string body = remote_query(QueryKind::lookup, {std::string(phrase), std::to_string(n)});
    std::map<std::string, double> best;
    const std::string query = normalize_phrase(phrase);
    try {
        auto j = nlohmann::json::parse(body);
        const auto& docs = j.contains("docs") ? j.at("docs") : j.at("results");
        for (const auto& d : docs) {
            std::string iri = strip_tags(first_string(d.contains("resource") ? d.at("resource") : d.at("uri")));
            if (iri.empty()) continue;
            for (const auto& label : all_strings(d.at("label"))) {
                double sim = jaro_similarity(query, normalize_phrase(strip_tags(label)));
                auto [it, inserted] = best.emplace(iri, sim);
                if (!inserted) it->second = std::max(it->second, sim);
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed lookup response: ") + e.what());
    }
    std::vector<LookupHit> hits;
    for (auto& [iri, sim] : best) hits.push_back({iri, sim});
    return rank_hits(std::move(hits), alpha, n);
}

}  // namespace tabsema::kb
