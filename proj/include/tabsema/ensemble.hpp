#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tabsema/encoder.hpp"
#include "tabsema/hnn.hpp"
#include "tabsema/kb.hpp"
#include "tabsema/nn.hpp"
#include "tabsema/p2vec.hpp"

namespace tabsema {

enum class BaseKind { lr, mlp };

std::string_view to_string(BaseKind kind) noexcept;
BaseKind base_kind_from_string(std::string_view s);

struct BaseTrainConfig {
    BaseKind kind = BaseKind::mlp;
    std::size_t hidden = 64;
    double learning_rate = 1e-2;
    std::size_t epochs = 200;
    std::size_t batch_size = 32;
    std::uint64_t seed = 7;
    double init_range = 0.08;
};

/// Softmax classifier: logistic regression, or one ReLU hidden layer (MLP).
class BaseClassifier {
public:
    BaseClassifier() = default;
    BaseClassifier(BaseKind kind, std::size_t input_dim, std::size_t classes, std::size_t hidden = 64);

    BaseKind kind() const noexcept { return kind_; }
    std::size_t input_dim() const noexcept { return input_dim_; }
    std::size_t classes() const noexcept { return classes_; }
    std::size_t hidden() const noexcept { return hidden_; }
    bool trained() const noexcept { return trained_; }
    void mark_trained() noexcept { trained_ = true; }

    Eigen::VectorXd& params() noexcept { return params_; }
    const Eigen::VectorXd& params() const noexcept { return params_; }
    const nn::ParamLayout& layout() const noexcept { return layout_; }

    Eigen::VectorXd logits(const Eigen::VectorXd& x) const;
    ScoreVector predict(const Eigen::VectorXd& x) const;

    /// Mean cross-entropy over the batch and its gradient.
    double loss_and_gradient(std::span<const std::pair<Eigen::VectorXd, std::size_t>> batch,
                             Eigen::VectorXd& grad) const;

private:
    BaseKind kind_ = BaseKind::lr;
    std::size_t input_dim_ = 0, classes_ = 0, hidden_ = 0;
    nn::ParamLayout layout_;
    Eigen::VectorXd params_;
    bool trained_ = false;
};

/// Adam on cross-entropy; deterministic for a fixed seed.
BaseClassifier train_base(std::span<const std::pair<Eigen::VectorXd, std::size_t>> inputs,
                          std::size_t classes, const BaseTrainConfig& cfg);

/// Which features the base classifier sees.
enum class EnsembleMode {
    p2vec_only,  // [v]
    one,         // [mean word vector of the main cell, v]; averaged with the HNN score
    two,         // [FC output of the frozen HNN, v]
};

std::string_view to_string(EnsembleMode mode) noexcept;
EnsembleMode ensemble_mode_from_string(std::string_view s);

struct EnsembleModel {
    EnsembleMode mode = EnsembleMode::two;
    BaseClassifier base;
    std::string hnn_ref;  // model_hash of the HNN the features came from
    CandidatePropertySet properties;
    P2VecParams p2vec;
    std::string catalog_hash;
    std::string fingerprint;
};

/// Everything needed to featurize a micro table.
struct FeatureContext {
    const HnnModel* hnn = nullptr;
    const EmbeddingTable* emb = nullptr;
    const CandidatePropertySet* properties = nullptr;
    const kb::Backend* kb = nullptr;
    P2VecParams p2vec;
};

/// Base classifier input for a micro table under the given mode.
Eigen::VectorXd ensemble_features(const MicroTable& mt, EnsembleMode mode, const FeatureContext& ctx);

/// Same, reusing an already computed P2Vec and HNN forward pass.
Eigen::VectorXd ensemble_features(const MicroTable& mt, EnsembleMode mode, const FeatureContext& ctx,
                                  const PropertyVector& v, const ForwardResult& hnn_out);

/// Featurizes labeled samples and trains the base classifier.
EnsembleModel train_ensemble(const std::vector<Sample>& samples, EnsembleMode mode,
                             const FeatureContext& ctx, std::size_t classes, const BaseTrainConfig& cfg);

/// (y_hnn + y_p2vec) / 2.
ScoreVector average_scores(const ScoreVector& a, const ScoreVector& b);

ScoreVector ensemble1_score(const MicroTable& mt, const EnsembleModel& model, const FeatureContext& ctx);
/// Throws ConfigError when ctx.hnn differs from the model the base was trained on.
ScoreVector ensemble2_score(const MicroTable& mt, const EnsembleModel& model, const FeatureContext& ctx);
ScoreVector p2vec_score(const MicroTable& mt, const EnsembleModel& model, const FeatureContext& ctx);
/// Dispatches on model.mode.
ScoreVector ensemble_score(const MicroTable& mt, const EnsembleModel& model, const FeatureContext& ctx);

void save_ensemble(const EnsembleModel& model, const std::filesystem::path& path);
EnsembleModel load_ensemble(const std::filesystem::path& path);

}  // namespace tabsema
