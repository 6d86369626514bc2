#include "tabsema/ensemble.hpp"

#include <cmath>

namespace tabsema {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

std::string_view to_string(BaseKind kind) noexcept { return kind == BaseKind::lr ? "lr" : "mlp"; }

BaseKind base_kind_from_string(std::string_view s) {
    if (s == "lr") return BaseKind::lr;
    if (s == "mlp") return BaseKind::mlp;
    throw ConfigError("unknown base classifier '" + std::string(s) + "' (expected lr or mlp)");
}

std::string_view to_string(EnsembleMode mode) noexcept {
    switch (mode) {
        case EnsembleMode::p2vec_only: return "p2vec";
        case EnsembleMode::one: return "ensemble1";
        case EnsembleMode::two: break;
    }
    return "ensemble2";
}

EnsembleMode ensemble_mode_from_string(std::string_view s) {
    if (s == "p2vec") return EnsembleMode::p2vec_only;
    if (s == "ensemble1") return EnsembleMode::one;
    if (s == "ensemble2") return EnsembleMode::two;
    throw ConfigError("unknown ensemble mode '" + std::string(s) + "'");
}

BaseClassifier::BaseClassifier(BaseKind kind, std::size_t input_dim, std::size_t classes, std::size_t hidden)
    : kind_(kind), input_dim_(input_dim), classes_(classes), hidden_(kind == BaseKind::mlp ? hidden : 0) {
    if (input_dim < 1 || classes < 1) throw ConfigError("base classifier needs input and output dims >= 1");
    if (kind == BaseKind::mlp) {
        if (hidden < 1) throw ConfigError("MLP hidden size must be >= 1");
        layout_.add("W1", static_cast<Index>(input_dim), static_cast<Index>(hidden));
        layout_.add("b1", static_cast<Index>(hidden));
        layout_.add("W2", static_cast<Index>(hidden), static_cast<Index>(classes));
        layout_.add("b2", static_cast<Index>(classes));
    } else {
        layout_.add("W", static_cast<Index>(input_dim), static_cast<Index>(classes));
        layout_.add("b", static_cast<Index>(classes));
    }
    params_ = VectorXd::Zero(layout_.total());
}

VectorXd BaseClassifier::logits(const VectorXd& x) const {
    if (static_cast<std::size_t>(x.size()) != input_dim_)
        throw Error("base classifier input has dimension " + std::to_string(x.size()) + ", expected " +
                    std::to_string(input_dim_));
    if (kind_ == BaseKind::lr)
        return nn::block(params_, layout_[0]).transpose() * x + nn::vblock(params_, layout_[1]);
    VectorXd h = (nn::block(params_, layout_[0]).transpose() * x + nn::vblock(params_, layout_[1])).cwiseMax(0.0);
    return nn::block(params_, layout_[2]).transpose() * h + nn::vblock(params_, layout_[3]);
}

ScoreVector BaseClassifier::predict(const VectorXd& x) const {
    VectorXd y = nn::softmax(logits(x));
    return {y.data(), y.data() + y.size()};
}

double BaseClassifier::loss_and_gradient(std::span<const std::pair<VectorXd, std::size_t>> batch,
                                         VectorXd& grad) const {
    grad = VectorXd::Zero(params_.size());
    if (batch.empty()) return 0.0;
    const double scale = 1.0 / static_cast<double>(batch.size());
    double loss = 0.0;
    for (const auto& [x, label] : batch) {
        if (label >= classes_) throw Error("label out of range");
        VectorXd h;
        VectorXd z;
        if (kind_ == BaseKind::lr) {
            z = logits(x);
        } else {
            h = (nn::block(params_, layout_[0]).transpose() * x + nn::vblock(params_, layout_[1])).cwiseMax(0.0);
            z = nn::block(params_, layout_[2]).transpose() * h + nn::vblock(params_, layout_[3]);
        }
        const double zmax = z.maxCoeff();
        const double lse = zmax + std::log((z.array() - zmax).exp().sum());
        loss += scale * (lse - z[static_cast<Index>(label)]);
        VectorXd dz = nn::softmax(z);
        dz[static_cast<Index>(label)] -= 1.0;
        dz *= scale;
        if (kind_ == BaseKind::lr) {
            nn::block(grad, layout_[0]).noalias() += x * dz.transpose();
            nn::vblock(grad, layout_[1]) += dz;
            continue;
        }
        nn::block(grad, layout_[2]).noalias() += h * dz.transpose();
        nn::vblock(grad, layout_[3]) += dz;
        VectorXd dh = nn::block(params_, layout_[2]) * dz;
        dh = (h.array() > 0.0).select(dh, 0.0);
        nn::block(grad, layout_[0]).noalias() += x * dh.transpose();
        nn::vblock(grad, layout_[1]) += dh;
    }
    return loss;
}

BaseClassifier train_base(std::span<const std::pair<VectorXd, std::size_t>> inputs, std::size_t classes,
                          const BaseTrainConfig& cfg) {
    if (inputs.empty()) throw Error("train_base: no inputs");
    const auto dim = static_cast<std::size_t>(inputs.front().first.size());
    for (const auto& [x, label] : inputs)
        if (static_cast<std::size_t>(x.size()) != dim) throw Error("train_base: inconsistent input dimensions");
    if (cfg.batch_size == 0) throw ConfigError("batch size must be >= 1");

    BaseClassifier clf(cfg.kind, dim, classes, cfg.hidden);
    nn::init_uniform(clf.params(), cfg.seed, cfg.init_range);
    nn::Adam adam(clf.params().size(), {.learning_rate = cfg.learning_rate});
    Rng rng(cfg.seed ^ 0x2545f4914f6cdd1dULL);
    std::vector<std::size_t> order(inputs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::vector<std::pair<VectorXd, std::size_t>> batch;
    VectorXd grad;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(order);
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            batch.clear();
            for (std::size_t i = start; i < std::min(order.size(), start + cfg.batch_size); ++i)
                batch.push_back(inputs[order[i]]);
            double loss = clf.loss_and_gradient(batch, grad);
            if (!std::isfinite(loss)) throw TrainingDiverged("base classifier training diverged");
            adam.step(clf.params(), grad);
        }
    }
    clf.mark_trained();
    return clf;
}

namespace {

VectorXd concat(const VectorXd& a, const VectorXd& b) {
    VectorXd out(a.size() + b.size());
    out << a, b;
    return out;
}

const HnnModel& need_hnn(const FeatureContext& ctx) {
    if (!ctx.hnn) throw ConfigError("ensemble features need a trained HNN");
    return *ctx.hnn;
}

const EmbeddingTable& need_emb(const FeatureContext& ctx) {
    if (!ctx.emb) throw ConfigError("ensemble features need word embeddings");
    return *ctx.emb;
}

}  // namespace

VectorXd ensemble_features(const MicroTable& mt, EnsembleMode mode, const FeatureContext& ctx,
                           const PropertyVector& v, const ForwardResult& hnn_out) {
    switch (mode) {
        case EnsembleMode::p2vec_only:
            return v;
        case EnsembleMode::one: {
            const auto& emb = need_emb(ctx);
            const std::size_t T = ctx.hnn ? ctx.hnn->config().T : 10;
            return concat(mean_word_vector(mt.main_cell().raw_text, emb, T), v);
        }
        case EnsembleMode::two:
            return concat(hnn_out.f_hnn, v);
    }
    return v;
}

VectorXd ensemble_features(const MicroTable& mt, EnsembleMode mode, const FeatureContext& ctx) {
    if (!ctx.properties || !ctx.kb) throw ConfigError("ensemble features need candidate properties and a KB");
    PropertyVector v = p2vec_extract(mt, *ctx.properties, ctx.p2vec, *ctx.kb);
    ForwardResult out;
    if (mode == EnsembleMode::two) {
        const auto& hnn = need_hnn(ctx);
        out = forward(encode_micro_table(mt, need_emb(ctx), hnn.config()), hnn);
    }
    return ensemble_features(mt, mode, ctx, v, out);
}

EnsembleModel train_ensemble(const std::vector<Sample>& samples, EnsembleMode mode, const FeatureContext& ctx,
                             std::size_t classes, const BaseTrainConfig& cfg) {
    std::vector<std::pair<VectorXd, std::size_t>> inputs;
    inputs.reserve(samples.size());
    for (const auto& s : samples) inputs.emplace_back(ensemble_features(s.micro_table, mode, ctx), s.label);
    EnsembleModel model;
    model.mode = mode;
    model.base = train_base(inputs, classes, cfg);
    if (ctx.hnn) {
        model.hnn_ref = model_hash(*ctx.hnn);
        model.catalog_hash = ctx.hnn->catalog_hash;
        model.fingerprint = ctx.hnn->fingerprint;
    }
    if (ctx.properties) model.properties = *ctx.properties;
    model.p2vec = ctx.p2vec;
    return model;
}

ScoreVector average_scores(const ScoreVector& a, const ScoreVector& b) {
    if (a.size() != b.size()) throw Error("score vectors differ in length");
    ScoreVector out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = (a[i] + b[i]) / 2.0;
    return out;
}

namespace {

void require_trained(const EnsembleModel& model) {
    if (!model.base.trained()) throw Error("ensemble base classifier is untrained");
}

void require_same_hnn(const EnsembleModel& model, const FeatureContext& ctx) {
    if (model.hnn_ref != model_hash(need_hnn(ctx)))
        throw ConfigError("HNN checkpoint differs from the one the ensemble was trained on");
}

}  // namespace

ScoreVector ensemble1_score(const MicroTable& mt, const EnsembleModel& model, const FeatureContext& ctx) {
    require_trained(model);
    const auto& hnn = need_hnn(ctx);
    PropertyVector v = p2vec_extract(mt, model.properties, model.p2vec, *ctx.kb);
    ForwardResult out = forward(encode_micro_table(mt, need_emb(ctx), hnn.config()), hnn);
    ScoreVector y_p2vec = model.base.predict(ensemble_features(mt, EnsembleMode::one, ctx, v, out));
    return average_scores(out.y, y_p2vec);
}

ScoreVector ensemble2_score(const MicroTable& mt, const EnsembleModel& model, const FeatureContext& ctx) {
    require_trained(model);
    require_same_hnn(model, ctx);
    const auto& hnn = need_hnn(ctx);
    PropertyVector v = p2vec_extract(mt, model.properties, model.p2vec, *ctx.kb);
    ForwardResult out = forward(encode_micro_table(mt, need_emb(ctx), hnn.config()), hnn);
    return model.base.predict(ensemble_features(mt, EnsembleMode::two, ctx, v, out));
}

ScoreVector p2vec_score(const MicroTable& mt, const EnsembleModel& model, const FeatureContext& ctx) {
    require_trained(model);
    return model.base.predict(p2vec_extract(mt, model.properties, model.p2vec, *ctx.kb));
}

ScoreVector ensemble_score(const MicroTable& mt, const EnsembleModel& model, const FeatureContext& ctx) {
    if (!ctx.kb) throw ConfigError("ensemble scoring needs a KB");
    switch (model.mode) {
        case EnsembleMode::p2vec_only: return p2vec_score(mt, model, ctx);
        case EnsembleMode::one: return ensemble1_score(mt, model, ctx);
        case EnsembleMode::two: break;
    }
    return ensemble2_score(mt, model, ctx);
}

void save_ensemble(const EnsembleModel& model, const std::filesystem::path& path) {
    nlohmann::json header = {{"mode", std::string(to_string(model.mode))},
                             {"base", std::string(to_string(model.base.kind()))},
                             {"input_dim", model.base.input_dim()},
                             {"classes", model.base.classes()},
                             {"hidden", model.base.hidden()},
                             {"trained", model.base.trained()},
                             {"hnn_ref", model.hnn_ref},
                             {"properties", nlohmann::json::parse(model.properties.to_json())},
                             {"n_lookup", model.p2vec.n_lookup},
                             {"lookup_alpha", model.p2vec.lookup_alpha},
                             {"match_alpha", model.p2vec.match_alpha},
                             {"catalog_hash", model.catalog_hash},
                             {"fingerprint", model.fingerprint}};
    nn::write_checkpoint(path, "ensemble", std::move(header), model.base.params());
}

EnsembleModel load_ensemble(const std::filesystem::path& path) {
    auto data = nn::read_checkpoint(path, "ensemble");
    const auto& h = data.header;
    EnsembleModel model;
    try {
        model.mode = ensemble_mode_from_string(h.at("mode").get<std::string>());
        model.base = BaseClassifier(base_kind_from_string(h.at("base").get<std::string>()), h.at("input_dim"),
                                    h.at("classes"), std::max<std::size_t>(1, h.at("hidden").get<std::size_t>()));
        model.hnn_ref = h.at("hnn_ref");
        model.properties = CandidatePropertySet::from_json(h.at("properties").dump());
        model.p2vec = {h.at("n_lookup"), h.at("lookup_alpha"), h.at("match_alpha")};
        model.catalog_hash = h.value("catalog_hash", "");
        model.fingerprint = h.value("fingerprint", "");
        if (h.value("trained", false)) model.base.mark_trained();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path.string() + ": malformed ensemble header: " + e.what());
    }
    if (data.params.size() != model.base.params().size())
        throw ParseError(path.string() + ": parameter count mismatch");
    model.base.params() = std::move(data.params);
    return model;
}

}  // namespace tabsema
