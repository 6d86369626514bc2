#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

namespace tabsema {

/// Pretrained word vectors, read-only after construction.
class EmbeddingTable {
public:
    EmbeddingTable() = default;
    explicit EmbeddingTable(std::size_t dim) : dim_(dim) {}

    std::size_t dim() const noexcept { return dim_; }
    std::size_t size() const noexcept { return words_.size(); }

    /// Adds or replaces a word vector. Throws on dimension mismatch.
    void add(std::string word, std::span<const double> vec);
    /// Empty span for unknown words.
    std::span<const double> find(std::string_view word) const;

    /// Text format: `word v1 ... v_d` per line with an optional `count dim` header.
    static EmbeddingTable load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;

private:
    std::size_t dim_ = 0;
    std::unordered_map<std::string, std::size_t> index_;
    std::vector<std::string> words_;
    std::vector<double> data_;
};

/// Lowercased tokens split on whitespace/punctuation; cropped or padded with "" to T.
std::vector<std::string> tokenize_and_crop(std::string_view phrase, std::size_t T);

/// T x d_w matrix of word vectors; padding and unknown tokens give zero rows.
Eigen::MatrixXd embed_entity_cell(std::string_view phrase, const EmbeddingTable& emb, std::size_t T);

/// Mean vector over the non-padding tokens among the first T (zero for none).
Eigen::VectorXd mean_word_vector(std::string_view phrase, const EmbeddingTable& emb, std::size_t T);

/// Slot 0 = tanh(value / 1000), rest zero; unparseable gives zeros.
Eigen::VectorXd encode_number_cell(std::string_view text, std::size_t d0);

/// Slots (year/3000, month/12, day/31), rest zero; unparseable gives zeros.
Eigen::VectorXd encode_date_cell(std::string_view text, std::size_t d0);

}  // namespace tabsema
