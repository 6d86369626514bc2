#include <gtest/gtest.h>

#include "tabsema/ensemble.hpp"
#include "test_support.hpp"

using namespace tabsema;
using Eigen::VectorXd;

namespace {

using Inputs = std::vector<std::pair<VectorXd, std::size_t>>;

Inputs separable(std::size_t n, Rng& rng) {
    Inputs out;
    for (std::size_t i = 0; i < n; ++i) {
        VectorXd x(2);
        std::size_t label = i % 2;
        x << (label ? 1.0 : -1.0) + rng.uniform(-0.3, 0.3), rng.uniform(-1, 1);
        out.emplace_back(x, label);
    }
    return out;
}

double accuracy(const BaseClassifier& c, const Inputs& data) {
    std::size_t ok = 0;
    for (const auto& [x, y] : data) ok += argmax(c.predict(x)) == y;
    return static_cast<double>(ok) / static_cast<double>(data.size());
}

/// Tiny HNN plus a KB in which the main cell resolves to an entity whose
/// director property matches the first surrounding cell.
struct Fixture {
    HnnConfig cfg;
    HnnModel hnn;
    EmbeddingTable emb;
    kb::Snapshot kb;
    CandidatePropertySet props;
    MicroTable mt;

    Fixture() : cfg(make_cfg()), hnn(cfg), emb(4) {
        hnn.init_uniform(3, 0.3);
        std::vector<double> v = {0.1, -0.2, 0.3, 0.4};
        emb.add("alien", v);
        const std::string x = "http://x/";
        kb = kb::Snapshot({{x + "Alien", std::string(kb::kRdfsLabel), kb::make_literal("Alien", "en", "")},
                           {x + "Alien", x + "director", kb::make_entity(x + "Scott")},
                           {x + "Scott", std::string(kb::kRdfsLabel), kb::make_literal("Ridley Scott", "en", "")}});
        props = CandidatePropertySet(0.0, {{"c", {x + "director", x + "writer"}}});
        mt.target.cells = {Cell{"Alien"}, Cell{}, Cell{}};
        mt.surrounding = {Column{{Cell{"Ridley Scott"}, Cell{}, Cell{}}, ColumnKind::entity}};
    }
    static HnnConfig make_cfg() {
        auto c = testsupport::tiny_config();
        c.K = 2;
        return c;
    }
    FeatureContext ctx() const { return {&hnn, &emb, &props, &kb, {}}; }
};

}  // namespace

TEST(BaseClassifier, LogisticRegressionSeparates) {
    Rng rng(1);
    auto data = separable(40, rng);
    BaseTrainConfig cfg;
    cfg.kind = BaseKind::lr;
    auto c = train_base(data, 2, cfg);
    EXPECT_TRUE(c.trained());
    EXPECT_EQ(accuracy(c, data), 1.0);
}

TEST(BaseClassifier, MlpSeparatesAndIsDeterministic) {
    Rng rng(2);
    auto data = separable(40, rng);
    BaseTrainConfig cfg;
    auto a = train_base(data, 2, cfg);
    auto b = train_base(data, 2, cfg);
    EXPECT_EQ(accuracy(a, data), 1.0);
    EXPECT_EQ(a.params(), b.params());
}

TEST(BaseClassifier, SingleClassData) {
    Inputs data;
    Rng rng(3);
    for (int i = 0; i < 10; ++i) data.emplace_back(VectorXd::Random(3), 1);
    BaseTrainConfig cfg;
    cfg.epochs = 50;
    auto c = train_base(data, 3, cfg);
    for (int i = 0; i < 5; ++i) EXPECT_EQ(argmax(c.predict(VectorXd::Random(3))), 1u);
}

TEST(BaseClassifier, DimensionMismatch) {
    Inputs data = {{VectorXd::Zero(2), 0}, {VectorXd::Zero(3), 1}};
    EXPECT_THROW(train_base(data, 2, {}), Error);
    BaseClassifier c(BaseKind::lr, 2, 2);
    EXPECT_THROW(c.predict(VectorXd::Zero(3)), Error);
}

TEST(BaseClassifier, GradientMatchesFiniteDifferences) {
    Rng rng(4);
    auto data = separable(6, rng);
    for (auto kind : {BaseKind::lr, BaseKind::mlp}) {
        BaseClassifier c(kind, 2, 2, 5);
        nn::init_uniform(c.params(), 9, 0.5);
        VectorXd grad;
        c.loss_and_gradient(data, grad);
        for (long i = 0; i < c.params().size(); ++i) {
            VectorXd scratch;
            const double saved = c.params()[i];
            c.params()[i] = saved + 1e-5;
            double plus = c.loss_and_gradient(data, scratch);
            c.params()[i] = saved - 1e-5;
            double minus = c.loss_and_gradient(data, scratch);
            c.params()[i] = saved;
            EXPECT_LT(testsupport::relative_error(grad[i], (plus - minus) / 2e-5), 1e-4);
        }
    }
}

TEST(AverageScores, Arithmetic) {
    EXPECT_EQ(average_scores({0.2, 0.8}, {0.2, 0.8}), (ScoreVector{0.2, 0.8}));
    EXPECT_EQ(average_scores({1, 0, 0}, {0, 0, 1}), (ScoreVector{0.5, 0, 0.5}));
    Rng rng(5);
    for (int i = 0; i < 20; ++i) {
        ScoreVector a(4), b(4);
        for (auto& v : a) v = rng.uniform();
        for (auto& v : b) v = rng.uniform();
        auto y = average_scores(a, b);
        for (int k = 0; k < 4; ++k) EXPECT_NEAR(y[k], 0.5 * a[k] + 0.5 * b[k], 1e-12);
    }
    EXPECT_THROW(average_scores({1}, {0.5, 0.5}), Error);
}

TEST(Ensemble, FeatureLayouts) {
    Fixture fx;
    auto ctx = fx.ctx();
    auto v = p2vec_extract(fx.mt, fx.props, {}, fx.kb);
    EXPECT_EQ(v[0], 1.0);
    auto p2 = ensemble_features(fx.mt, EnsembleMode::p2vec_only, ctx);
    EXPECT_EQ(p2, v);
    auto one = ensemble_features(fx.mt, EnsembleMode::one, ctx);
    ASSERT_EQ(one.size(), 4 + 2);
    EXPECT_EQ(one.head(4), mean_word_vector("Alien", fx.emb, fx.cfg.T));
    auto two = ensemble_features(fx.mt, EnsembleMode::two, ctx);
    ASSERT_EQ(two.size(), 2 + 2);
    EXPECT_EQ(two.head(2), forward(encode_micro_table(fx.mt, fx.emb, fx.cfg), fx.hnn).f_hnn);
    EXPECT_EQ(two.tail(2), v);
    EXPECT_EQ(ensemble_features(fx.mt, EnsembleMode::two, ctx), two);
}

TEST(Ensemble, ZeroBaseGivesUniform) {
    Fixture fx;
    EnsembleModel model;
    model.mode = EnsembleMode::two;
    model.base = BaseClassifier(BaseKind::lr, 4, 2);
    model.base.params().setZero();
    model.base.mark_trained();
    model.hnn_ref = model_hash(fx.hnn);
    model.properties = fx.props;
    auto y = ensemble2_score(fx.mt, model, fx.ctx());
    EXPECT_DOUBLE_EQ(y[0], 0.5);
    EXPECT_DOUBLE_EQ(y[1], 0.5);
}

TEST(Ensemble, OneAveragesHnnAndBase) {
    Fixture fx;
    std::vector<Sample> samples = {{fx.mt, 0}, {fx.mt, 1}, {fx.mt, 0}};
    BaseTrainConfig cfg;
    cfg.epochs = 5;
    auto model = train_ensemble(samples, EnsembleMode::one, fx.ctx(), 2, cfg);
    auto y = ensemble1_score(fx.mt, model, fx.ctx());
    auto y_hnn = forward(encode_micro_table(fx.mt, fx.emb, fx.cfg), fx.hnn).y;
    auto y_base = model.base.predict(ensemble_features(fx.mt, EnsembleMode::one, fx.ctx()));
    for (int k = 0; k < 2; ++k) EXPECT_NEAR(y[k], (y_hnn[k] + y_base[k]) / 2, 1e-12);
    EXPECT_NEAR(y[0] + y[1], 1.0, 1e-12);
}

TEST(Ensemble, UntrainedAndMismatchedHnnAreRejected) {
    Fixture fx;
    EnsembleModel untrained;
    untrained.base = BaseClassifier(BaseKind::lr, 4, 2);
    EXPECT_THROW(ensemble2_score(fx.mt, untrained, fx.ctx()), Error);

    std::vector<Sample> samples = {{fx.mt, 0}, {fx.mt, 1}};
    BaseTrainConfig cfg;
    cfg.epochs = 2;
    auto model = train_ensemble(samples, EnsembleMode::two, fx.ctx(), 2, cfg);
    EXPECT_NO_THROW(ensemble2_score(fx.mt, model, fx.ctx()));
    HnnModel other(fx.cfg);
    other.init_uniform(99, 0.3);
    FeatureContext ctx = fx.ctx();
    ctx.hnn = &other;
    EXPECT_THROW(ensemble2_score(fx.mt, model, ctx), ConfigError);
}

TEST(Ensemble, CheckpointRoundTrip) {
    Fixture fx;
    auto dir = testsupport::temp_dir("ensemble");
    std::vector<Sample> samples = {{fx.mt, 0}, {fx.mt, 1}};
    BaseTrainConfig cfg;
    cfg.epochs = 3;
    for (auto mode : {EnsembleMode::p2vec_only, EnsembleMode::one, EnsembleMode::two}) {
        auto model = train_ensemble(samples, mode, fx.ctx(), 2, cfg);
        save_ensemble(model, dir / "e.ckpt");
        auto back = load_ensemble(dir / "e.ckpt");
        EXPECT_EQ(back.mode, mode);
        EXPECT_EQ(back.base.params(), model.base.params());
        EXPECT_EQ(back.properties.properties(), model.properties.properties());
        EXPECT_EQ(ensemble_score(fx.mt, back, fx.ctx()), ensemble_score(fx.mt, model, fx.ctx()));
    }
    EXPECT_THROW(load_checkpoint(dir / "e.ckpt"), ConfigError);
}

TEST(Ensemble, ModeNames) {
    for (auto m : {EnsembleMode::p2vec_only, EnsembleMode::one, EnsembleMode::two})
        EXPECT_EQ(ensemble_mode_from_string(to_string(m)), m);
    EXPECT_THROW(ensemble_mode_from_string("three"), ConfigError);
}
