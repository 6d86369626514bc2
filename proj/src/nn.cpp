#include "tabsema/nn.hpp"

#include <bit>
#include <cmath>
#include <cstring>

#include "tabsema/common.hpp"
#include "tabsema/table.hpp"

namespace tabsema::nn {

namespace {

constexpr std::string_view kMagic = "TABSEMA-CHECKPOINT";

std::uint64_t to_le(std::uint64_t v) {
    if constexpr (std::endian::native == std::endian::little) return v;
    std::uint64_t r = 0;
    for (int i = 0; i < 8; ++i) r = (r << 8) | ((v >> (8 * i)) & 0xff);
    return r;
}

std::string encode_doubles(const Eigen::VectorXd& params) {
    std::string out(static_cast<std::size_t>(params.size()) * 8, '\0');
    for (Eigen::Index i = 0; i < params.size(); ++i) {
        auto bits = to_le(std::bit_cast<std::uint64_t>(params[i]));
        std::memcpy(out.data() + i * 8, &bits, 8);
    }
    return out;
}

}  // namespace

std::size_t ParamLayout::add(std::string name, Eigen::Index rows, Eigen::Index cols) {
    blocks_.push_back({std::move(name), rows, cols, total_});
    total_ += rows * cols;
    return blocks_.size() - 1;
}

std::size_t ParamLayout::find(const std::string& name) const {
    for (std::size_t i = 0; i < blocks_.size(); ++i)
        if (blocks_[i].name == name) return i;
    throw Error("no parameter block named '" + name + "'");
}

nlohmann::json ParamLayout::to_json() const {
    auto arr = nlohmann::json::array();
    for (const auto& b : blocks_) arr.push_back({{"name", b.name}, {"rows", b.rows}, {"cols", b.cols}});
    return arr;
}

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
    Eigen::VectorXd e = (logits.array() - logits.maxCoeff()).exp();
    return e / e.sum();
}

Adam::Adam(Eigen::Index size, Options opts)
    : opts_(opts), m_(Eigen::VectorXd::Zero(size)), v_(Eigen::VectorXd::Zero(size)) {}

void Adam::step(Eigen::VectorXd& params, const Eigen::VectorXd& grad) {
    ++t_;
    m_ = opts_.beta1 * m_ + (1.0 - opts_.beta1) * grad;
    v_ = opts_.beta2 * v_ + (1.0 - opts_.beta2) * grad.cwiseProduct(grad);
    const double c1 = 1.0 - std::pow(opts_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(opts_.beta2, static_cast<double>(t_));
    params.array() -= opts_.learning_rate * (m_.array() / c1) /
                      ((v_.array() / c2).sqrt() + opts_.epsilon);
}

void init_uniform(Eigen::VectorXd& params, std::uint64_t seed, double range) {
    Rng rng(seed);
    for (Eigen::Index i = 0; i < params.size(); ++i) params[i] = rng.uniform(-range, range);
}

void write_checkpoint(const std::filesystem::path& path, const std::string& kind,
                      nlohmann::json header, const Eigen::VectorXd& params) {
    std::string body = encode_doubles(params);
    header["kind"] = kind;
    header["version"] = kCheckpointVersion;
    header["dtype"] = "f64le";
    header["count"] = params.size();
    header["checksum"] = to_hex(fnv1a64(body));
    std::string out(kMagic);
    out += '\n';
    out += header.dump();
    out += '\n';
    out += body;
    write_file_atomic(path, out);
}

CheckpointData read_checkpoint(const std::filesystem::path& path, const std::string& kind) {
    std::string raw = read_file(path);
    auto nl1 = raw.find('\n');
    if (nl1 == std::string::npos || raw.compare(0, nl1, kMagic) != 0)
        throw ParseError(path.string() + ": not a checkpoint file");
    auto nl2 = raw.find('\n', nl1 + 1);
    if (nl2 == std::string::npos) throw ParseError(path.string() + ": truncated checkpoint header");
    CheckpointData data;
    try {
        data.header = nlohmann::json::parse(raw.substr(nl1 + 1, nl2 - nl1 - 1));
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path.string() + ": corrupt checkpoint header: " + e.what());
    }
    if (data.header.value("version", -1) != kCheckpointVersion)
        throw ConfigError(path.string() + ": unsupported checkpoint version " +
                          data.header.value("version", nlohmann::json(-1)).dump());
    if (data.header.value("kind", "") != kind)
        throw ConfigError(path.string() + ": expected a '" + kind + "' checkpoint, found '" +
                          data.header.value("kind", "") + "'");
    std::string_view body(raw.data() + nl2 + 1, raw.size() - nl2 - 1);
    auto count = data.header.value("count", std::int64_t{-1});
    if (count < 0 || body.size() != static_cast<std::size_t>(count) * 8)
        throw ParseError(path.string() + ": parameter block size mismatch");
    if (data.header.value("checksum", "") != to_hex(fnv1a64(body)))
        throw ParseError(path.string() + ": checksum mismatch");
    data.params.resize(count);
    for (std::int64_t i = 0; i < count; ++i) {
        std::uint64_t bits;
        std::memcpy(&bits, body.data() + i * 8, 8);
        data.params[i] = std::bit_cast<double>(to_le(bits));
    }
    return data;
}

std::string params_hash(const Eigen::VectorXd& params) {
    return to_hex(fnv1a64(encode_doubles(params)));
}

}  // namespace tabsema::nn
