#include "tabsema/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "tabsema/common.hpp"
#include "tabsema/table.hpp"

namespace tabsema {

void EmbeddingTable::add(std::string word, std::span<const double> vec) {
    if (vec.size() != dim_)
        throw Error("embedding for '" + word + "' has dimension " + std::to_string(vec.size()) +
                    ", expected " + std::to_string(dim_));
    if (auto it = index_.find(word); it != index_.end()) {
        std::copy(vec.begin(), vec.end(), data_.begin() + static_cast<std::ptrdiff_t>(it->second * dim_));
        return;
    }
    index_.emplace(word, words_.size());
    words_.push_back(std::move(word));
    data_.insert(data_.end(), vec.begin(), vec.end());
}

std::span<const double> EmbeddingTable::find(std::string_view word) const {
    if (word.empty()) return {};
    auto it = index_.find(std::string(word));
    if (it == index_.end()) return {};
    return {data_.data() + it->second * dim_, dim_};
}

EmbeddingTable EmbeddingTable::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open embeddings " + path.string());
    EmbeddingTable table;
    std::string line;
    std::size_t lineno = 0;
    std::vector<double> vec;
    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream ss(line);
        std::string word;
        if (!(ss >> word)) continue;
        vec.clear();
        std::string tok;
        while (ss >> tok) {
            auto v = parse_decimal(tok);
            if (!v) throw ParseError("bad number '" + tok + "' in embeddings", lineno);
            vec.push_back(*v);
        }
        if (lineno == 1 && vec.size() == 1 && parse_decimal(word)) {
            table.dim_ = static_cast<std::size_t>(vec[0]);  // `count dim` header
            continue;
        }
        if (table.dim_ == 0) table.dim_ = vec.size();
        if (vec.size() != table.dim_ || vec.empty())
            throw ParseError("embedding dimension mismatch", lineno);
        table.add(std::move(word), vec);
    }
    return table;
}

void EmbeddingTable::save(const std::filesystem::path& path) const {
    std::string out = std::to_string(words_.size()) + ' ' + std::to_string(dim_) + '\n';
    char buf[32];
    for (std::size_t w = 0; w < words_.size(); ++w) {
        out += words_[w];
        for (std::size_t k = 0; k < dim_; ++k) {
            std::snprintf(buf, sizeof buf, " %.17g", data_[w * dim_ + k]);
            out += buf;
        }
        out.push_back('\n');
    }
    write_file_atomic(path, out);
}

std::vector<std::string> tokenize_and_crop(std::string_view phrase, std::size_t T) {
    std::vector<std::string> tokens;
    tokens.reserve(T);
    std::istringstream ss(normalize_phrase(phrase));
    std::string tok;
    while (tokens.size() < T && ss >> tok) tokens.push_back(std::move(tok));
    tokens.resize(T);
    return tokens;
}

Eigen::MatrixXd embed_entity_cell(std::string_view phrase, const EmbeddingTable& emb, std::size_t T) {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(T),
                                                static_cast<Eigen::Index>(emb.dim()));
    auto tokens = tokenize_and_crop(phrase, T);
    for (std::size_t t = 0; t < T; ++t) {
        auto v = emb.find(tokens[t]);
        for (std::size_t k = 0; k < v.size(); ++k)
            out(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(k)) = v[k];
    }
    return out;
}

Eigen::VectorXd mean_word_vector(std::string_view phrase, const EmbeddingTable& emb, std::size_t T) {
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(emb.dim()));
    std::size_t count = 0;
    for (const auto& tok : tokenize_and_crop(phrase, T)) {
        if (tok.empty()) break;
        ++count;
        auto v = emb.find(tok);
        for (std::size_t k = 0; k < v.size(); ++k) sum[static_cast<Eigen::Index>(k)] += v[k];
    }
    if (count > 0) sum /= static_cast<double>(count);
    return sum;
}

Eigen::VectorXd encode_number_cell(std::string_view text, std::size_t d0) {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d0));
    if (auto v = parse_decimal(text); v && d0 > 0) out[0] = std::tanh(*v / 1000.0);
    return out;
}

Eigen::VectorXd encode_date_cell(std::string_view text, std::size_t d0) {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d0));
    if (d0 < 3) throw ConfigError("date encoding needs d0 >= 3");
    if (auto d = parse_date(text)) {
        out[0] = std::min(d->year / 3000.0, 1.0);
        out[1] = d->month / 12.0;
        out[2] = d->day / 31.0;
    }
    return out;
}

}  // namespace tabsema
