#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tabsema/common.hpp"

namespace tabsema {

struct Cell {
    std::string raw_text;  // verbatim, never normalized here

    bool empty() const noexcept;
    friend bool operator==(const Cell&, const Cell&) = default;
};

enum class ColumnKind { entity, number, date };

std::string_view to_string(ColumnKind kind) noexcept;
ColumnKind column_kind_from_string(std::string_view s);

struct Column {
    std::vector<Cell> cells;
    ColumnKind kind = ColumnKind::entity;

    std::size_t size() const noexcept { return cells.size(); }
    friend bool operator==(const Column&, const Column&) = default;
};

struct Table {
    std::string id;
    std::vector<Column> columns;

    std::size_t rows() const noexcept { return columns.empty() ? 0 : columns.front().size(); }
};

/// One target column of m cells plus l surrounding columns of m cells each.
struct MicroTable {
    Column target;
    std::vector<Column> surrounding;

    const Cell& main_cell() const { return target.cells.at(0); }
    friend bool operator==(const MicroTable&, const MicroTable&) = default;
};

/// Ordered, fixed list of candidate classes shared by every score vector.
class ClassCatalog {
public:
    struct Entry {
        std::string class_id;
        std::string kb_iri;
        friend bool operator==(const Entry&, const Entry&) = default;
    };

    ClassCatalog() = default;
    /// Throws ConfigError on duplicate class ids.
    explicit ClassCatalog(std::vector<Entry> entries);

    std::size_t size() const noexcept { return entries_.size(); }
    const std::vector<Entry>& entries() const noexcept { return entries_; }
    const Entry& operator[](std::size_t i) const { return entries_.at(i); }
    std::optional<std::size_t> index_of(std::string_view class_id) const;
    /// Stable hash of ids and IRIs in order; bound into checkpoints.
    std::string hash() const;

    /// CSV `class_id,kb_iri` per line.
    static ClassCatalog load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;

private:
    std::vector<Entry> entries_;
};

using ScoreVector = std::vector<double>;

/// Argmax with ties broken by the lowest index.
std::size_t argmax(const ScoreVector& scores);

// ---- cell value parsing ---------------------------------------------------

/// Whole-string decimal number (optional sign, fraction and exponent).
std::optional<double> parse_decimal(std::string_view text);

struct Date {
    int year = 0;
    int month = 0;  // 0 when only the year is known
    int day = 0;
};

/// Accepts `YYYY-MM-DD`, `DD/MM/YYYY` and bare `YYYY`.
std::optional<Date> parse_date(std::string_view text);

// ---- column kinds and validation ------------------------------------------

/// Fraction of non-empty cells that must parse for a number/date verdict.
inline constexpr double kKindRatioThreshold = 0.6;

/// Number first, then date, else entity. Throws Error("empty column").
ColumnKind detect_column_kind(const std::vector<Cell>& cells);

/// Empty result means the micro table satisfies every shape invariant.
std::vector<std::string> validate_micro_table(const MicroTable& mt, std::size_t m, std::size_t l);

// ---- table IO -------------------------------------------------------------

/// Builds a table from column-major cell texts: pads short columns with empty
/// cells and detects kinds (all-empty columns become entity columns).
Table make_table(std::string id, std::vector<std::vector<std::string>> columns);

/// RFC-4180 CSV, one table row per record, no header handling.
Table load_csv_table(const std::filesystem::path& path);
std::string to_csv(const Table& table);

/// `{ "id": str, "columns": [[str,...],...] }`, column-major.
Table load_json_table(const std::filesystem::path& path);
std::string to_json(const Table& table);

/// Dispatches on extension (.csv / .json).
Table load_table(const std::filesystem::path& path);

/// Parses RFC-4180 CSV text into records.
std::vector<std::vector<std::string>> parse_csv(std::string_view text);
std::string csv_escape(std::string_view field);

struct GoldLabel {
    std::string table_id;
    std::size_t column_index = 0;
    std::string class_id;
    friend bool operator==(const GoldLabel&, const GoldLabel&) = default;
};

/// CSV rows `table_id,column_index,class_id`.
std::vector<GoldLabel> load_gold(const std::filesystem::path& path);
void save_gold(const std::filesystem::path& path, const std::vector<GoldLabel>& gold);

std::string read_file(const std::filesystem::path& path);
/// Writes to a temporary sibling and renames over the destination.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

}  // namespace tabsema
