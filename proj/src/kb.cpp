#include "tabsema/kb.hpp"

#include <algorithm>
#include <cctype>
#include <deque>
#include <set>

#include <nlohmann/json.hpp>

#include "tabsema/similarity.hpp"
#include "tabsema/table.hpp"

namespace tabsema::kb {

namespace {

const std::set<std::string, std::less<>> kNumericXsd = {
    "integer",         "decimal",          "double",        "float",
    "int",             "long",             "short",         "byte",
    "nonNegativeInteger", "positiveInteger", "negativeInteger", "nonPositiveInteger",
    "unsignedInt",     "unsignedLong",     "unsignedShort", "unsignedByte"};
const std::set<std::string, std::less<>> kDateXsd = {"date", "dateTime", "gYear", "gYearMonth"};

void append_utf8(std::string& out, std::uint32_t cp) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

class LineParser {
public:
    LineParser(std::string_view line, std::size_t lineno) : s_(line), lineno_(lineno) {}

    Triple parse() {
        Triple t;
        skip_ws();
        t.subject = subject();
        skip_ws();
        t.predicate = iri();
        skip_ws();
        t.object = object();
        skip_ws();
        expect('.');
        skip_ws();
        if (pos_ < s_.size() && s_[pos_] != '#') fail("trailing characters after '.'");
        return t;
    }

private:
    [[noreturn]] void fail(const std::string& msg) const { throw ParseError("N-Triples: " + msg, lineno_); }

    void skip_ws() {
        while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t' || s_[pos_] == '\r')) ++pos_;
    }
    void expect(char c) {
        if (pos_ >= s_.size() || s_[pos_] != c) fail(std::string("expected '") + c + "'");
        ++pos_;
    }

    std::string iri() {
        expect('<');
        auto end = s_.find('>', pos_);
        if (end == std::string_view::npos) fail("unterminated IRI");
        std::string out(s_.substr(pos_, end - pos_));
        if (out.empty()) fail("empty IRI");
        pos_ = end + 1;
        return out;
    }

    std::string blank() {
        expect('_');
        expect(':');
        std::size_t start = pos_;
        while (pos_ < s_.size() && s_[pos_] != ' ' && s_[pos_] != '\t' && s_[pos_] != '.') ++pos_;
        if (pos_ == start) fail("empty blank node label");
        return "_:" + std::string(s_.substr(start, pos_ - start));
    }

    std::string subject() {
        if (pos_ < s_.size() && s_[pos_] == '_') return blank();
        return iri();
    }

    std::uint32_t hex(std::size_t digits) {
        if (pos_ + digits > s_.size()) fail("truncated unicode escape");
        std::uint32_t v = 0;
        for (std::size_t i = 0; i < digits; ++i) {
            char c = s_[pos_++];
            v <<= 4;
            if (c >= '0' && c <= '9') v |= static_cast<std::uint32_t>(c - '0');
            else if (c >= 'a' && c <= 'f') v |= static_cast<std::uint32_t>(c - 'a' + 10);
            else if (c >= 'A' && c <= 'F') v |= static_cast<std::uint32_t>(c - 'A' + 10);
            else fail("bad hex digit in unicode escape");
        }
        return v;
    }

    TripleObject object() {
        if (pos_ >= s_.size()) fail("missing object");
        if (s_[pos_] == '<') return make_entity(iri());
        if (s_[pos_] == '_') return make_entity(blank());
        if (s_[pos_] != '"') fail("object must be an IRI, blank node or literal");
        ++pos_;
        std::string lexical;
        for (;;) {
            if (pos_ >= s_.size()) fail("unterminated literal");
            char c = s_[pos_++];
            if (c == '"') break;
            if (c != '\\') {
                lexical.push_back(c);
                continue;
            }
            if (pos_ >= s_.size()) fail("dangling escape");
            char e = s_[pos_++];
            switch (e) {
                case 't': lexical.push_back('\t'); break;
                case 'b': lexical.push_back('\b'); break;
                case 'n': lexical.push_back('\n'); break;
                case 'r': lexical.push_back('\r'); break;
                case 'f': lexical.push_back('\f'); break;
                case '"': lexical.push_back('"'); break;
                case '\'': lexical.push_back('\''); break;
                case '\\': lexical.push_back('\\'); break;
                case 'u': append_utf8(lexical, hex(4)); break;
                case 'U': append_utf8(lexical, hex(8)); break;
                default: fail(std::string("unknown escape \\") + e);
            }
        }
        std::string lang, datatype;
        if (pos_ < s_.size() && s_[pos_] == '@') {
            std::size_t start = ++pos_;
            while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '-')) ++pos_;
            lang = std::string(s_.substr(start, pos_ - start));
            if (lang.empty()) fail("empty language tag");
        } else if (s_.substr(pos_, 2) == "^^") {
            pos_ += 2;
            datatype = iri();
        }
        return make_literal(std::move(lexical), std::move(lang), std::move(datatype));
    }

    std::string_view s_;
    std::size_t lineno_;
    std::size_t pos_ = 0;
};

std::string escape_literal(std::string_view s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\r': out += "\\r"; break;
            case '\t': out += "\\t"; break;
            default: out.push_back(c);
        }
    }
    return out;
}

std::string term(const std::string& iri) { return iri.starts_with("_:") ? iri : "<" + iri + ">"; }

}  // namespace

TripleObject make_entity(std::string iri) {
    TripleObject o;
    o.kind = ObjectKind::entity;
    o.value = std::move(iri);
    return o;
}

TripleObject make_literal(std::string lexical, std::string lang, std::string datatype) {
    TripleObject o;
    o.kind = ObjectKind::text;
    o.value = std::move(lexical);
    o.lang = std::move(lang);
    o.datatype = std::move(datatype);
    if (o.datatype.empty()) return o;
    std::string_view dt = o.datatype;
    if (dt.starts_with(kXsd)) {
        auto local = dt.substr(kXsd.size());
        if (kNumericXsd.contains(local)) {
            if (auto v = parse_decimal(o.value)) {
                o.kind = ObjectKind::number;
                o.number = *v;
            }
        } else if (kDateXsd.contains(local)) {
            o.kind = ObjectKind::date;
        }
    } else if (auto v = parse_decimal(o.value)) {
        // custom unit datatypes such as km or m^2 carry plain numbers
        o.kind = ObjectKind::number;
        o.number = *v;
    }
    return o;
}

bool is_english(const TripleObject& o) noexcept {
    if (o.kind == ObjectKind::entity) return false;
    if (o.lang.empty()) return true;
    return o.lang.size() >= 2 && (o.lang[0] == 'e' || o.lang[0] == 'E') && (o.lang[1] == 'n' || o.lang[1] == 'N') &&
           (o.lang.size() == 2 || o.lang[2] == '-');
}

std::vector<LookupHit> rank_hits(std::vector<LookupHit> hits, double alpha, std::size_t n) {
    std::erase_if(hits, [alpha](const LookupHit& h) { return h.similarity < alpha; });
    std::sort(hits.begin(), hits.end(), [](const LookupHit& a, const LookupHit& b) {
        if (a.similarity != b.similarity) return a.similarity > b.similarity;
        return a.iri < b.iri;
    });
    if (hits.size() > n) hits.resize(n);
    return hits;
}

std::vector<Triple> parse_ntriples(std::string_view text) {
    std::vector<Triple> triples;
    std::size_t lineno = 0, start = 0;
    while (start <= text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        ++lineno;
        std::string_view line = text.substr(start, end - start);
        start = end + 1;
        auto first = line.find_first_not_of(" \t\r");
        if (first == std::string_view::npos || line[first] == '#') {
            if (end == text.size()) break;
            continue;
        }
        triples.push_back(LineParser(line, lineno).parse());
        if (end == text.size()) break;
    }
    return triples;
}

std::string to_ntriples(const std::vector<Triple>& triples) {
    std::string out;
    for (const auto& t : triples) {
        out += term(t.subject) + " <" + t.predicate + "> ";
        if (t.object.kind == ObjectKind::entity) {
            out += term(t.object.value);
        } else {
            out += '"' + escape_literal(t.object.value) + '"';
            if (!t.object.lang.empty()) out += "@" + t.object.lang;
            else if (!t.object.datatype.empty()) out += "^^<" + t.object.datatype + ">";
        }
        out += " .\n";
    }
    return out;
}

Snapshot::Snapshot(std::vector<Triple> triples, SnapshotOptions opts)
    : opts_(std::move(opts)), source_(std::move(triples)) {
    std::map<std::string, std::set<std::string>> parents;
    std::map<std::string, std::set<std::string>> asserted;
    for (const auto& t : source_) {
        if (t.predicate == opts_.subclass_property) {
            if (t.object.kind == ObjectKind::entity) parents[t.subject].insert(t.object.value);
            continue;
        }
        auto& rec = entities_[t.subject];
        rec.iri = t.subject;
        by_subject_[t.subject].push_back(t);
        if (t.predicate == opts_.type_property && t.object.kind == ObjectKind::entity)
            asserted[t.subject].insert(t.object.value);
        if (t.predicate == opts_.label_property && is_english(t.object) &&
            std::find(rec.labels.begin(), rec.labels.end(), t.object.value) == rec.labels.end())
            rec.labels.push_back(t.object.value);
    }
    for (auto& [iri, rec] : entities_) {
        std::set<std::string> closure;
        std::deque<std::string> queue;
        if (auto it = asserted.find(iri); it != asserted.end())
            queue.assign(it->second.begin(), it->second.end());
        while (!queue.empty()) {
            std::string c = std::move(queue.front());
            queue.pop_front();
            if (!closure.insert(c).second) continue;
            if (auto it = parents.find(c); it != parents.end())
                for (const auto& p : it->second) queue.push_back(p);
        }
        rec.classes.assign(closure.begin(), closure.end());
        for (const auto& c : rec.classes) by_class_[c].push_back(iri);  // entities_ is IRI-ordered
        for (const auto& label : rec.labels) {
            std::string norm = normalize_phrase(label);
            label_index_[norm.size()].emplace_back(std::move(norm), iri);
        }
    }
}

std::vector<std::string> Snapshot::entities_of_class(const std::string& class_iri) const {
    auto it = by_class_.find(class_iri);
    if (it == by_class_.end()) return {};
    return it->second;
}

std::vector<Triple> Snapshot::triples_of_subject(const std::string& entity_iri) const {
    auto it = by_subject_.find(entity_iri);
    if (it == by_subject_.end()) return {};
    return it->second;
}

std::vector<LookupHit> Snapshot::entity_lookup(std::string_view phrase, double alpha, std::size_t n) const {
    const std::string query = normalize_phrase(phrase);
    std::map<std::string, double> best;
    for (const auto& [length, labels] : label_index_) {
        if (jaro_upper_bound(query.size(), length) < alpha) continue;
        for (const auto& [label, iri] : labels) {
            double sim = jaro_similarity(query, label);
            if (sim < alpha) continue;
            auto [it, inserted] = best.emplace(iri, sim);
            if (!inserted) it->second = std::max(it->second, sim);
        }
    }
    std::vector<LookupHit> hits;
    hits.reserve(best.size());
    for (auto& [iri, sim] : best) hits.push_back({iri, sim});
    return rank_hits(std::move(hits), alpha, n);
}

std::vector<std::string> Snapshot::labels_of(const std::string& entity_iri) const {
    const auto* rec = entity(entity_iri);
    return rec ? rec->labels : std::vector<std::string>{};
}

const EntityRecord* Snapshot::entity(const std::string& iri) const {
    auto it = entities_.find(iri);
    return it == entities_.end() ? nullptr : &it->second;
}

namespace {

constexpr int kSnapshotVersion = 1;

nlohmann::json object_json(const TripleObject& o) {
    if (o.kind == ObjectKind::entity) return {{"iri", o.value}};
    nlohmann::json j = {{"lit", o.value}};
    if (!o.lang.empty()) j["lang"] = o.lang;
    if (!o.datatype.empty()) j["dt"] = o.datatype;
    return j;
}

TripleObject object_from_json(const nlohmann::json& j) {
    if (j.contains("iri")) return make_entity(j.at("iri").get<std::string>());
    return make_literal(j.at("lit").get<std::string>(), j.value("lang", ""), j.value("dt", ""));
}

}  // namespace

std::string Snapshot::to_json() const {
    nlohmann::json triples = nlohmann::json::array();
    for (const auto& t : source_) triples.push_back({t.subject, t.predicate, object_json(t.object)});
    nlohmann::json j = {{"format", "tabsema-kb-snapshot"},
                        {"version", kSnapshotVersion},
                        {"label_property", opts_.label_property},
                        {"type_property", opts_.type_property},
                        {"subclass_property", opts_.subclass_property},
                        {"entity_count", entities_.size()},
                        {"triples", std::move(triples)}};
    return j.dump();
}

Snapshot Snapshot::from_json(std::string_view text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("corrupt snapshot: ") + e.what());
    }
    if (j.value("format", "") != "tabsema-kb-snapshot") throw ParseError("not a KB snapshot file");
    if (j.value("version", -1) != kSnapshotVersion)
        throw ConfigError("unsupported snapshot version " + j.value("version", nlohmann::json(-1)).dump());
    SnapshotOptions opts{j.at("label_property"), j.at("type_property"), j.at("subclass_property")};
    std::vector<Triple> triples;
    for (const auto& t : j.at("triples"))
        triples.push_back({t.at(0).get<std::string>(), t.at(1).get<std::string>(), object_from_json(t.at(2))});
    return Snapshot(std::move(triples), std::move(opts));
}

void Snapshot::save(const std::filesystem::path& path) const { write_file_atomic(path, to_json()); }

Snapshot Snapshot::load(const std::filesystem::path& path) { return from_json(read_file(path)); }

Snapshot build_snapshot(const std::filesystem::path& ntriples_file, SnapshotOptions opts) {
    return Snapshot(parse_ntriples(read_file(ntriples_file)), std::move(opts));
}

std::vector<std::string> CountingBackend::entities_of_class(const std::string& c) const {
    ++q1_;
    return inner_.entities_of_class(c);
}

std::vector<Triple> CountingBackend::triples_of_subject(const std::string& e) const {
    ++q2_;
    return inner_.triples_of_subject(e);
}

std::vector<LookupHit> CountingBackend::entity_lookup(std::string_view phrase, double alpha,
                                                      std::size_t n) const {
    ++lookups_;
    return inner_.entity_lookup(phrase, alpha, n);
}

std::vector<std::string> CountingBackend::labels_of(const std::string& e) const {
    ++labels_;
    return inner_.labels_of(e);
}

}  // namespace tabsema::kb
