#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

namespace tabsema::nn {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Named slices of one flat parameter vector. Blocks are column-major matrices.
class ParamLayout {
public:
    struct Block {
        std::string name;
        Eigen::Index rows = 0;
        Eigen::Index cols = 0;
        Eigen::Index offset = 0;
        Eigen::Index size() const noexcept { return rows * cols; }
    };

    std::size_t add(std::string name, Eigen::Index rows, Eigen::Index cols = 1);
    const Block& operator[](std::size_t i) const { return blocks_.at(i); }
    const std::vector<Block>& blocks() const noexcept { return blocks_; }
    Eigen::Index total() const noexcept { return total_; }
    /// Throws if no block has this name.
    std::size_t find(const std::string& name) const;

    nlohmann::json to_json() const;

private:
    std::vector<Block> blocks_;
    Eigen::Index total_ = 0;
};

inline Eigen::Map<Eigen::MatrixXd> block(Eigen::VectorXd& flat, const ParamLayout::Block& b) {
    return {flat.data() + b.offset, b.rows, b.cols};
}
inline Eigen::Map<const Eigen::MatrixXd> block(const Eigen::VectorXd& flat,
                                               const ParamLayout::Block& b) {
    return {flat.data() + b.offset, b.rows, b.cols};
}
inline Eigen::Map<Eigen::VectorXd> vblock(Eigen::VectorXd& flat, const ParamLayout::Block& b) {
    return {flat.data() + b.offset, b.size()};
}
inline Eigen::Map<const Eigen::VectorXd> vblock(const Eigen::VectorXd& flat,
                                                const ParamLayout::Block& b) {
    return {flat.data() + b.offset, b.size()};
}

/// Numerically stable softmax.
Eigen::VectorXd softmax(const Eigen::VectorXd& logits);

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// Adam with bias-corrected first and second moment estimates.
class Adam {
public:
    struct Options {
        double learning_rate = 1e-3;
        double beta1 = 0.9;
        double beta2 = 0.999;
        double epsilon = 1e-8;
    };

    Adam(Eigen::Index size, Options opts);
    void step(Eigen::VectorXd& params, const Eigen::VectorXd& grad);
    std::int64_t steps() const noexcept { return t_; }

private:
    Options opts_;
    Eigen::VectorXd m_;
    Eigen::VectorXd v_;
    std::int64_t t_ = 0;
};

/// Fills with seeded uniform values in [-range, range).
void init_uniform(Eigen::VectorXd& params, std::uint64_t seed, double range);

/// Checkpoint container: a magic line, a one-line JSON header, then the
/// parameters as little-endian IEEE-754 doubles.
inline constexpr int kCheckpointVersion = 1;

struct CheckpointData {
    nlohmann::json header;
    Eigen::VectorXd params;
};

void write_checkpoint(const std::filesystem::path& path, const std::string& kind,
                      nlohmann::json header, const Eigen::VectorXd& params);
/// Throws ConfigError on kind/version mismatch and ParseError on corruption.
CheckpointData read_checkpoint(const std::filesystem::path& path, const std::string& kind);

/// Hash of a parameter vector's bytes; identifies a trained model.
std::string params_hash(const Eigen::VectorXd& params);

}  // namespace tabsema::nn
