#include "tabsema/table.hpp"

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cctype>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace tabsema {

namespace {

bool all_digits(std::string_view s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) {
        return std::isdigit(static_cast<unsigned char>(c)) != 0;
    });
}

int to_int(std::string_view s) {
    int v = 0;
    std::from_chars(s.data(), s.data() + s.size(), v);
    return v;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= s.size(); ++i) {
        if (i == s.size() || s[i] == sep) {
            parts.push_back(s.substr(start, i - start));
            start = i + 1;
        }
    }
    return parts;
}

}  // namespace

bool Cell::empty() const noexcept {
    return std::all_of(raw_text.begin(), raw_text.end(),
                       [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; });
}

std::string_view to_string(ColumnKind kind) noexcept {
    switch (kind) {
        case ColumnKind::number: return "number";
        case ColumnKind::date: return "date";
        case ColumnKind::entity: break;
    }
    return "entity";
}

ColumnKind column_kind_from_string(std::string_view s) {
    if (s == "entity") return ColumnKind::entity;
    if (s == "number") return ColumnKind::number;
    if (s == "date") return ColumnKind::date;
    throw ParseError("unknown column kind '" + std::string(s) + "'");
}

ClassCatalog::ClassCatalog(std::vector<Entry> entries) : entries_(std::move(entries)) {
    std::set<std::string> seen;
    for (const auto& e : entries_) {
        if (e.class_id.empty()) throw ConfigError("empty class id in catalog");
        if (!seen.insert(e.class_id).second)
            throw ConfigError("duplicate class id '" + e.class_id + "' in catalog");
    }
}

std::optional<std::size_t> ClassCatalog::index_of(std::string_view class_id) const {
    for (std::size_t i = 0; i < entries_.size(); ++i)
        if (entries_[i].class_id == class_id) return i;
    return std::nullopt;
}

std::string ClassCatalog::hash() const {
    std::string canon;
    for (const auto& e : entries_) canon += e.class_id + '\t' + e.kb_iri + '\n';
    return to_hex(fnv1a64(canon));
}

ClassCatalog ClassCatalog::load(const std::filesystem::path& path) {
    std::vector<Entry> entries;
    auto records = parse_csv(read_file(path));
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        if (r.size() == 1 && trim(r[0]).empty()) continue;
        if (r.size() != 2) throw ParseError("catalog row needs class_id,kb_iri", i + 1);
        entries.push_back({trim(r[0]), trim(r[1])});
    }
    return ClassCatalog(std::move(entries));
}

void ClassCatalog::save(const std::filesystem::path& path) const {
    std::string out;
    for (const auto& e : entries_) out += csv_escape(e.class_id) + ',' + csv_escape(e.kb_iri) + '\n';
    write_file_atomic(path, out);
}

std::size_t argmax(const ScoreVector& scores) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < scores.size(); ++i)
        if (scores[i] > scores[best]) best = i;
    return best;
}

std::optional<double> parse_decimal(std::string_view text) {
    std::string s = trim(text);
    std::size_t i = 0;
    if (i < s.size() && (s[i] == '+' || s[i] == '-')) ++i;
    std::size_t digits = 0;
    while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i, ++digits;
    if (i < s.size() && s[i] == '.') {
        ++i;
        while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i, ++digits;
    }
    if (digits == 0) return std::nullopt;
    if (i < s.size() && (s[i] == 'e' || s[i] == 'E')) {
        ++i;
        if (i < s.size() && (s[i] == '+' || s[i] == '-')) ++i;
        std::size_t exp_digits = 0;
        while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i, ++exp_digits;
        if (exp_digits == 0) return std::nullopt;
    }
    if (i != s.size()) return std::nullopt;
    const char* first = s.data() + (s[0] == '+' ? 1 : 0);
    double value = 0;
    auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), value);
    if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
    return value;
}

std::optional<Date> parse_date(std::string_view text) {
    std::string s = trim(text);
    Date d;
    if (s.size() == 4 && all_digits(s)) {
        d.year = to_int(s);
        return d;
    }
    if (auto parts = split(s, '-'); parts.size() == 3) {
        if (parts[0].size() != 4 || !all_digits(parts[0])) return std::nullopt;
        if (parts[1].empty() || parts[1].size() > 2 || !all_digits(parts[1])) return std::nullopt;
        if (parts[2].empty() || parts[2].size() > 2 || !all_digits(parts[2])) return std::nullopt;
        d = {to_int(parts[0]), to_int(parts[1]), to_int(parts[2])};
    } else if (auto slash = split(s, '/'); slash.size() == 3) {
        if (slash[2].size() != 4 || !all_digits(slash[2])) return std::nullopt;
        if (slash[1].empty() || slash[1].size() > 2 || !all_digits(slash[1])) return std::nullopt;
        if (slash[0].empty() || slash[0].size() > 2 || !all_digits(slash[0])) return std::nullopt;
        d = {to_int(slash[2]), to_int(slash[1]), to_int(slash[0])};
    } else {
        return std::nullopt;
    }
    if (d.month < 1 || d.month > 12 || d.day < 1 || d.day > 31) return std::nullopt;
    return d;
}

ColumnKind detect_column_kind(const std::vector<Cell>& cells) {
    std::size_t nonempty = 0, numbers = 0, dates = 0;
    for (const auto& c : cells) {
        if (c.empty()) continue;
        ++nonempty;
        if (parse_decimal(c.raw_text)) ++numbers;
        if (parse_date(c.raw_text)) ++dates;
    }
    if (nonempty == 0) throw Error("empty column");
    const double n = static_cast<double>(nonempty);
    if (static_cast<double>(numbers) / n >= kKindRatioThreshold) return ColumnKind::number;
    if (static_cast<double>(dates) / n >= kKindRatioThreshold) return ColumnKind::date;
    return ColumnKind::entity;
}

std::vector<std::string> validate_micro_table(const MicroTable& mt, std::size_t m, std::size_t l) {
    std::vector<std::string> violations;
    if (mt.target.cells.size() != m) violations.emplace_back("target size");
    if (mt.target.kind != ColumnKind::entity) violations.emplace_back("target kind");
    if (mt.surrounding.size() != l) violations.emplace_back("surrounding count");
    for (std::size_t i = 0; i < mt.surrounding.size(); ++i)
        if (mt.surrounding[i].cells.size() != m)
            violations.push_back("surrounding size " + std::to_string(i));
    return violations;
}

Table make_table(std::string id, std::vector<std::vector<std::string>> columns) {
    Table t;
    t.id = std::move(id);
    std::size_t rows = 0;
    for (const auto& c : columns) rows = std::max(rows, c.size());
    for (auto& texts : columns) {
        Column col;
        col.cells.reserve(rows);
        for (auto& s : texts) col.cells.push_back({std::move(s)});
        col.cells.resize(rows);
        bool all_empty = std::all_of(col.cells.begin(), col.cells.end(),
                                     [](const Cell& c) { return c.empty(); });
        col.kind = all_empty ? ColumnKind::entity : detect_column_kind(col.cells);
        t.columns.push_back(std::move(col));
    }
    return t;
}

std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> record;
    std::string field;
    bool in_quotes = false;
    bool field_started = false;
    std::size_t line = 1, quote_line = 1;
    auto end_record = [&] {
        record.push_back(std::move(field));
        records.push_back(std::move(record));
        record.clear();
        field.clear();
        field_started = false;
    };
    for (std::size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                if (c == '\n') ++line;
                field.push_back(c);
            }
            continue;
        }
        switch (c) {
            case '"':
                if (!field.empty()) throw ParseError("stray quote in unquoted CSV field", line);
                in_quotes = true;
                quote_line = line;
                field_started = true;
                break;
            case ',':
                record.push_back(std::move(field));
                field.clear();
                field_started = true;
                break;
            case '\r':
                if (i + 1 < text.size() && text[i + 1] == '\n') break;
                field.push_back(c);
                break;
            case '\n':
                end_record();
                ++line;
                break;
            default:
                field.push_back(c);
                field_started = true;
        }
    }
    if (in_quotes) throw ParseError("unterminated quoted CSV field", quote_line);
    if (field_started || !field.empty() || !record.empty()) end_record();
    return records;
}

std::string csv_escape(std::string_view field) {
    if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

Table load_csv_table(const std::filesystem::path& path) {
    auto records = parse_csv(read_file(path));
    std::size_t width = 0;
    for (const auto& r : records) width = std::max(width, r.size());
    std::vector<std::vector<std::string>> columns(width);
    for (auto& r : records) {
        r.resize(width);
        for (std::size_t c = 0; c < width; ++c) columns[c].push_back(std::move(r[c]));
    }
    return make_table(path.stem().string(), std::move(columns));
}

std::string to_csv(const Table& table) {
    std::string out;
    for (std::size_t r = 0; r < table.rows(); ++r) {
        for (std::size_t c = 0; c < table.columns.size(); ++c) {
            if (c) out.push_back(',');
            out += csv_escape(table.columns[c].cells[r].raw_text);
        }
        // a lone empty field would otherwise read back as a blank line
        if (table.columns.size() == 1 && table.columns[0].cells[r].raw_text.empty()) out += "\"\"";
        out.push_back('\n');
    }
    return out;
}

Table load_json_table(const std::filesystem::path& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    if (!j.is_object() || !j.contains("columns") || !j["columns"].is_array())
        throw ParseError(path.string() + ": expected {\"id\", \"columns\"}");
    std::string id = j.value("id", path.stem().string());
    std::vector<std::vector<std::string>> columns;
    for (const auto& col : j["columns"]) {
        std::vector<std::string> texts;
        for (const auto& cell : col) {
            if (!cell.is_string()) throw ParseError(path.string() + ": cells must be strings");
            texts.push_back(cell.get<std::string>());
        }
        columns.push_back(std::move(texts));
    }
    return make_table(std::move(id), std::move(columns));
}

std::string to_json(const Table& table) {
    nlohmann::json j;
    j["id"] = table.id;
    j["columns"] = nlohmann::json::array();
    for (const auto& col : table.columns) {
        auto texts = nlohmann::json::array();
        for (const auto& cell : col.cells) texts.push_back(cell.raw_text);
        j["columns"].push_back(std::move(texts));
    }
    return j.dump();
}

Table load_table(const std::filesystem::path& path) {
    auto ext = path.extension().string();
    if (ext == ".json") return load_json_table(path);
    if (ext == ".csv") return load_csv_table(path);
    throw ParseError("unsupported table format: " + path.string());
}

std::vector<GoldLabel> load_gold(const std::filesystem::path& path) {
    std::vector<GoldLabel> gold;
    auto records = parse_csv(read_file(path));
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        if (r.size() == 1 && trim(r[0]).empty()) continue;
        if (r.size() != 3) throw ParseError("gold row needs table_id,column_index,class_id", i + 1);
        std::string idx = trim(r[1]);
        if (!all_digits(idx)) throw ParseError("bad column index '" + idx + "'", i + 1);
        gold.push_back({trim(r[0]), std::stoul(idx), trim(r[2])});
    }
    return gold;
}

void save_gold(const std::filesystem::path& path, const std::vector<GoldLabel>& gold) {
    std::string out;
    for (const auto& g : gold)
        out += csv_escape(g.table_id) + ',' + std::to_string(g.column_index) + ',' +
               csv_escape(g.class_id) + '\n';
    write_file_atomic(path, out);
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
    static std::atomic<std::uint64_t> counter{0};
    auto tmp = path;
    tmp += ".tmp." + to_hex(fnv1a64(std::to_string(::getpid()) + '.' + std::to_string(counter++)));
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw Error("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace tabsema
