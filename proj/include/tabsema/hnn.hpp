#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "tabsema/encoder.hpp"
#include "tabsema/nn.hpp"
#include "tabsema/sampler.hpp"
#include "tabsema/table.hpp"

namespace tabsema {

/// Architecture hyperparameters and ablation switches of the hybrid network.
struct HnnConfig {
    std::size_t m = 5;   // rows per micro table
    std::size_t l = 4;   // surrounding columns
    std::size_t T = 10;  // tokens per cell
    std::size_t d_w = 300;
    std::size_t H = 150;  // GRU hidden size per direction
    std::size_t A = 50;   // attention layer size
    std::vector<std::size_t> theta1{2, 3, 4};
    std::vector<std::size_t> theta2{2, 3};
    std::size_t kappa1 = 32;
    std::size_t kappa2 = 32;
    std::size_t K = 2;
    /// When true the FC output feeds softmax directly and F == K.
    bool fc_equals_logits = true;
    std::size_t F = 100;  // only used when fc_equals_logits is false

    bool use_att_birnn = true;
    bool use_conv_column = true;
    bool use_conv_row = true;

    /// Cell embedding size: 2H with the BiRNN, otherwise the word vector size.
    std::size_t d0() const noexcept { return use_att_birnn ? 2 * H : d_w; }
    std::size_t fc_out() const noexcept { return fc_equals_logits ? K : F; }
    std::size_t pooled_dim() const noexcept;

    /// Throws ConfigError when shapes are inconsistent.
    void validate() const;

    nlohmann::json to_json() const;
    static HnnConfig from_json(const nlohmann::json& j);
};

/// Applies a named ablation: "fc", "cnn-c", "cnn-r" or "cnn-cr".
void apply_ablation(HnnConfig& cfg, const std::string& name);

/// Read-only view of one GRU direction.
struct GruRef {
    Eigen::Ref<const Eigen::MatrixXd> W_h, U_h;
    Eigen::Ref<const Eigen::VectorXd> b_h;
    Eigen::Ref<const Eigen::MatrixXd> W_z, U_z;
    Eigen::Ref<const Eigen::VectorXd> b_z;
    Eigen::Ref<const Eigen::MatrixXd> W_r, U_r;
    Eigen::Ref<const Eigen::VectorXd> b_r;
};

struct AttentionRef {
    Eigen::Ref<const Eigen::MatrixXd> W_w;
    Eigen::Ref<const Eigen::VectorXd> b_w;
    Eigen::Ref<const Eigen::VectorXd> u_w;
};

/// All learnable parameters in one flat vector, sliced by a fixed layout.
class HnnModel {
public:
    explicit HnnModel(HnnConfig cfg);

    const HnnConfig& config() const noexcept { return cfg_; }
    const nn::ParamLayout& layout() const noexcept { return layout_; }
    Eigen::VectorXd& params() noexcept { return params_; }
    const Eigen::VectorXd& params() const noexcept { return params_; }

    void init_uniform(std::uint64_t seed, double range = 0.08);

    GruRef gru(bool backward) const;
    AttentionRef attention() const;

    /// Catalog binding checked at prediction time.
    std::string catalog_hash;
    /// Run configuration fingerprint carried into every output.
    std::string fingerprint;

    /// Block indices, resolved once at construction.
    struct Slots {
        std::size_t gru[2][9]{};  // W_h U_h b_h W_z U_z b_z W_r U_r b_r
        std::size_t att_W = 0, att_b = 0, att_u = 0;
        std::vector<std::size_t> col_W, col_b, row_W, row_b;
        std::size_t fc_W = 0, fc_b = 0, out_W = 0, out_b = 0;
    };
    const Slots& slots() const noexcept { return slots_; }

private:
    HnnConfig cfg_;
    nn::ParamLayout layout_;
    Slots slots_;
    Eigen::VectorXd params_;
};

// ---- cell embedding --------------------------------------------------------

/// One GRU update: h = (1 - z) * h_prev + z * h_tilde.
Eigen::VectorXd gru_step(const Eigen::VectorXd& x, const Eigen::VectorXd& h_prev, const GruRef& p);

struct AttentionEmbedding {
    Eigen::MatrixXd states;  // T x 2H, row t = [forward h_t, backward h_t]
    Eigen::VectorXd alpha;   // attention weights, sum to one
    Eigen::VectorXd a;       // weighted sum of states
};

/// BiGRU over the T word vectors followed by attention pooling.
AttentionEmbedding birnn_attention_embed(const Eigen::MatrixXd& cell_matrix, const HnnModel& model);

/// m x (l+1) x d0 tensor stored as l+1 column matrices of shape m x d0.
/// Column 0 is the target column.
struct MicroTensor {
    std::vector<nn::RowMatrix> columns;

    std::size_t rows() const { return columns.empty() ? 0 : static_cast<std::size_t>(columns[0].rows()); }
    std::size_t depth() const { return columns.empty() ? 0 : static_cast<std::size_t>(columns[0].cols()); }
};

/// Network input before the trainable cell embedding: word matrices for
/// entity cells, fixed vectors for number/date/empty cells.
struct EncodedCell {
    bool tokens = false;
    Eigen::MatrixXd words;  // T x d_w when tokens
    Eigen::VectorXd fixed;  // d0 otherwise
};

struct EncodedMicroTable {
    std::size_t m = 0;
    std::size_t l = 0;
    std::vector<EncodedCell> cells;  // index column * m + row

    const EncodedCell& at(std::size_t column, std::size_t row) const { return cells[column * m + row]; }
};

/// Encodes a micro table. With `needed_only` the cells the convolution
/// branches never read are left as zero vectors.
EncodedMicroTable encode_micro_table(const MicroTable& mt, const EmbeddingTable& emb,
                                     const HnnConfig& cfg, bool needed_only = true);

MicroTensor embed_micro_table(const MicroTable& mt, const EmbeddingTable& emb, const HnnModel& model);
MicroTensor embed_encoded(const EncodedMicroTable& input, const HnnModel& model);

// ---- prediction -----------------------------------------------------------

struct ForwardResult {
    Eigen::VectorXd pooled;  // concatenated max-pooled conv features
    Eigen::VectorXd f_hnn;   // FC layer output
    ScoreVector y;           // softmax scores
};

ForwardResult forward(const MicroTensor& tensor, const HnnModel& model);
ForwardResult forward(const EncodedMicroTable& input, const HnnModel& model);

struct LabeledInput {
    EncodedMicroTable input;
    std::size_t label = 0;
};

struct LossAndGradients {
    double loss = 0.0;      // mean cross-entropy
    Eigen::VectorXd grads;  // same layout as HnnModel::params()
};

LossAndGradients loss_and_gradients(std::span<const LabeledInput> batch, const HnnModel& model);

// ---- training -------------------------------------------------------------

struct TrainConfig {
    double learning_rate = 1e-3;
    std::size_t batch_size = 32;
    std::size_t epochs = 100;
    std::uint64_t seed = 42;
    double init_range = 0.08;
    /// Called after every epoch with (epoch index, mean loss).
    std::function<void(std::size_t, double)> on_epoch;
};

class TrainingDiverged : public Error {
public:
    using Error::Error;
};

struct TrainResult {
    std::vector<double> loss_curve;  // mean loss per epoch
};

/// Initializes the model from cfg.seed and trains with Adam.
TrainResult train(std::span<const LabeledInput> samples, const TrainConfig& cfg, HnnModel& model);

std::vector<LabeledInput> encode_samples(const std::vector<Sample>& samples, const EmbeddingTable& emb,
                                         const HnnConfig& cfg);

// ---- persistence ----------------------------------------------------------

void save_checkpoint(const HnnModel& model, const std::filesystem::path& path);
HnnModel load_checkpoint(const std::filesystem::path& path);

/// Identifies a trained model by its header and parameter bytes.
std::string model_hash(const HnnModel& model);

}  // namespace tabsema
