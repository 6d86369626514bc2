#include "tabsema/hnn.hpp"

#include <cmath>
#include <limits>
#include <optional>

namespace tabsema {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using nn::RowMatrix;

namespace {

constexpr const char* kGruNames[9] = {"W_h", "U_h", "b_h", "W_z", "U_z", "b_z", "W_r", "U_r", "b_r"};

Index idx(std::size_t v) { return static_cast<Index>(v); }

}  // namespace

// ---- configuration ----------------------------------------------------------

std::size_t HnnConfig::pooled_dim() const noexcept {
    std::size_t dim = 0;
    if (use_conv_column) dim += kappa1 * theta1.size();
    if (use_conv_row) dim += kappa2 * theta2.size();
    if (!use_conv_column && !use_conv_row) dim = d0();
    return dim;
}

void HnnConfig::validate() const {
    auto fail = [](const std::string& msg) { throw ConfigError("invalid network config: " + msg); };
    if (m < 1) fail("m must be >= 1");
    if (T < 1) fail("T must be >= 1");
    if (d_w < 1) fail("d_w must be >= 1");
    if (K < 1) fail("K must be >= 1");
    if (use_att_birnn && (H < 1 || A < 1)) fail("H and A must be >= 1");
    if (d0() < 3) fail("cell embedding size must be >= 3 to hold dates");
    if (!fc_equals_logits && F < 1) fail("F must be >= 1");
    if (use_conv_column) {
        if (theta1.empty() || kappa1 < 1) fail("column convolution needs filters");
        for (auto k : theta1)
            if (k < 2 || k > m) fail("column filter height " + std::to_string(k) + " outside [2, m]");
    }
    if (use_conv_row) {
        if (theta2.empty() || kappa2 < 1) fail("row convolution needs filters");
        for (auto k : theta2)
            if (k < 2 || k > l + 1) fail("row filter width " + std::to_string(k) + " outside [2, l+1]");
    }
}

nlohmann::json HnnConfig::to_json() const {
    return {{"m", m},           {"l", l},
            {"T", T},           {"d_w", d_w},
            {"H", H},           {"A", A},
            {"theta1", theta1}, {"theta2", theta2},
            {"kappa1", kappa1}, {"kappa2", kappa2},
            {"K", K},           {"fc_equals_logits", fc_equals_logits},
            {"F", F},           {"use_att_birnn", use_att_birnn},
            {"use_conv_column", use_conv_column},
            {"use_conv_row", use_conv_row}};
}

HnnConfig HnnConfig::from_json(const nlohmann::json& j) {
    HnnConfig c;
    c.m = j.at("m");
    c.l = j.at("l");
    c.T = j.at("T");
    c.d_w = j.at("d_w");
    c.H = j.at("H");
    c.A = j.at("A");
    c.theta1 = j.at("theta1").get<std::vector<std::size_t>>();
    c.theta2 = j.at("theta2").get<std::vector<std::size_t>>();
    c.kappa1 = j.at("kappa1");
    c.kappa2 = j.at("kappa2");
    c.K = j.at("K");
    c.fc_equals_logits = j.at("fc_equals_logits");
    c.F = j.at("F");
    c.use_att_birnn = j.at("use_att_birnn");
    c.use_conv_column = j.at("use_conv_column");
    c.use_conv_row = j.at("use_conv_row");
    return c;
}

void apply_ablation(HnnConfig& cfg, const std::string& name) {
    if (name == "fc") {
        cfg.use_conv_column = cfg.use_conv_row = false;
    } else if (name == "cnn-c") {
        cfg.use_conv_column = true;
        cfg.use_conv_row = false;
    } else if (name == "cnn-r") {
        cfg.use_conv_column = false;
        cfg.use_conv_row = true;
    } else if (name == "cnn-cr") {
        cfg.use_conv_column = cfg.use_conv_row = true;
    } else {
        throw ConfigError("unknown ablation '" + name + "' (expected fc, cnn-c, cnn-r, cnn-cr)");
    }
}

// ---- model ------------------------------------------------------------------

HnnModel::HnnModel(HnnConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    const Index H = idx(cfg_.H), dw = idx(cfg_.d_w), d0 = idx(cfg_.d0());
    if (cfg_.use_att_birnn) {
        for (int dir = 0; dir < 2; ++dir) {
            std::string prefix = dir == 0 ? "gru_fwd." : "gru_bwd.";
            for (int g = 0; g < 3; ++g) {
                std::string gate = kGruNames[3 * g];
                slots_.gru[dir][3 * g] = layout_.add(prefix + kGruNames[3 * g], H, dw);
                slots_.gru[dir][3 * g + 1] = layout_.add(prefix + kGruNames[3 * g + 1], H, H);
                slots_.gru[dir][3 * g + 2] = layout_.add(prefix + kGruNames[3 * g + 2], H);
            }
        }
        slots_.att_W = layout_.add("att.W_w", idx(cfg_.A), d0);
        slots_.att_b = layout_.add("att.b_w", idx(cfg_.A));
        slots_.att_u = layout_.add("att.u_w", idx(cfg_.A));
    }
    if (cfg_.use_conv_column) {
        for (auto k : cfg_.theta1) {
            std::string name = "conv_col.k" + std::to_string(k);
            slots_.col_W.push_back(layout_.add(name + ".W", idx(cfg_.kappa1), idx(k) * d0));
            slots_.col_b.push_back(layout_.add(name + ".b", idx(cfg_.kappa1)));
        }
    }
    if (cfg_.use_conv_row) {
        for (auto k : cfg_.theta2) {
            std::string name = "conv_row.k" + std::to_string(k);
            slots_.row_W.push_back(layout_.add(name + ".W", idx(cfg_.kappa2), idx(k) * d0));
            slots_.row_b.push_back(layout_.add(name + ".b", idx(cfg_.kappa2)));
        }
    }
    slots_.fc_W = layout_.add("fc.W", idx(cfg_.pooled_dim()), idx(cfg_.fc_out()));
    slots_.fc_b = layout_.add("fc.b", idx(cfg_.fc_out()));
    if (!cfg_.fc_equals_logits) {
        slots_.out_W = layout_.add("out.W", idx(cfg_.F), idx(cfg_.K));
        slots_.out_b = layout_.add("out.b", idx(cfg_.K));
    }
    params_ = VectorXd::Zero(layout_.total());
}

void HnnModel::init_uniform(std::uint64_t seed, double range) { nn::init_uniform(params_, seed, range); }

GruRef HnnModel::gru(bool backward) const {
    if (!cfg_.use_att_birnn) throw Error("model has no recurrent layer");
    const auto& s = slots_.gru[backward ? 1 : 0];
    auto M = [&](int i) { return nn::block(params_, layout_[s[i]]); };
    auto V = [&](int i) { return nn::vblock(params_, layout_[s[i]]); };
    return GruRef{M(0), M(1), V(2), M(3), M(4), V(5), M(6), M(7), V(8)};
}

AttentionRef HnnModel::attention() const {
    if (!cfg_.use_att_birnn) throw Error("model has no attention layer");
    return AttentionRef{nn::block(params_, layout_[slots_.att_W]),
                        nn::vblock(params_, layout_[slots_.att_b]),
                        nn::vblock(params_, layout_[slots_.att_u])};
}

// ---- recurrent cell embedding ------------------------------------------------

VectorXd gru_step(const VectorXd& x, const VectorXd& h_prev, const GruRef& p) {
    if (x.size() != p.W_h.cols() || h_prev.size() != p.U_h.rows())
        throw Error("gru_step: shape mismatch");
    VectorXd z = (p.W_z * x + p.U_z * h_prev + p.b_z).unaryExpr(&nn::sigmoid);
    VectorXd r = (p.W_r * x + p.U_r * h_prev + p.b_r).unaryExpr(&nn::sigmoid);
    VectorXd h_tilde = (p.W_h * x + r.cwiseProduct(p.U_h * h_prev) + p.b_h).array().tanh().matrix();
    return (VectorXd::Ones(z.size()) - z).cwiseProduct(h_prev) + z.cwiseProduct(h_tilde);
}

namespace {

/// Activations of one GRU direction; column s belongs to step s.
struct GruTrace {
    MatrixXd h;   // H x (T+1), column 0 is the zero initial state
    MatrixXd z, r, h_tilde, uh;  // H x T
    RowMatrix x;  // T x d_w in step order
};

GruTrace gru_run(const MatrixXd& words, const GruRef& p, bool reverse) {
    const Index T = words.rows(), H = p.U_h.rows();
    GruTrace tr;
    tr.x = reverse ? RowMatrix(words.colwise().reverse()) : RowMatrix(words);
    tr.h = MatrixXd::Zero(H, T + 1);
    tr.z.resize(H, T);
    tr.r.resize(H, T);
    tr.h_tilde.resize(H, T);
    tr.uh.resize(H, T);
    MatrixXd wx_h = p.W_h * tr.x.transpose();
    MatrixXd wx_z = p.W_z * tr.x.transpose();
    MatrixXd wx_r = p.W_r * tr.x.transpose();
    for (Index s = 0; s < T; ++s) {
        auto h_prev = tr.h.col(s);
        tr.z.col(s) = (wx_z.col(s) + p.U_z * h_prev + p.b_z).unaryExpr(&nn::sigmoid);
        tr.r.col(s) = (wx_r.col(s) + p.U_r * h_prev + p.b_r).unaryExpr(&nn::sigmoid);
        tr.uh.col(s) = p.U_h * h_prev;
        tr.h_tilde.col(s) = (wx_h.col(s) + tr.r.col(s).cwiseProduct(tr.uh.col(s)) + p.b_h).array().tanh().matrix();
        tr.h.col(s + 1) = (1.0 - tr.z.col(s).array()) * h_prev.array() +
                          tr.z.col(s).array() * tr.h_tilde.col(s).array();
    }
    return tr;
}

struct GruGrads {
    Eigen::Map<MatrixXd> W_h, U_h;
    Eigen::Map<VectorXd> b_h;
    Eigen::Map<MatrixXd> W_z, U_z;
    Eigen::Map<VectorXd> b_z;
    Eigen::Map<MatrixXd> W_r, U_r;
    Eigen::Map<VectorXd> b_r;
};

GruGrads gru_grads(VectorXd& grads, const HnnModel& model, bool backward) {
    const auto& s = model.slots().gru[backward ? 1 : 0];
    const auto& L = model.layout();
    auto M = [&](int i) { return nn::block(grads, L[s[i]]); };
    auto V = [&](int i) { return nn::vblock(grads, L[s[i]]); };
    return GruGrads{M(0), M(1), V(2), M(3), M(4), V(5), M(6), M(7), V(8)};
}

/// Backpropagation through time. d_states column s is dL/dh after step s.
void gru_backward(const GruTrace& tr, const GruRef& p, const MatrixXd& d_states, GruGrads& g) {
    const Index T = tr.z.cols(), H = tr.z.rows();
    MatrixXd d_pre_h(H, T), d_pre_z(H, T), d_pre_r(H, T), d_uh(H, T);
    VectorXd carry = VectorXd::Zero(H);
    for (Index s = T - 1; s >= 0; --s) {
        VectorXd dh = d_states.col(s) + carry;
        auto h_prev = tr.h.col(s);
        auto z = tr.z.col(s).array();
        auto r = tr.r.col(s).array();
        auto ht = tr.h_tilde.col(s).array();
        VectorXd dz = dh.array() * (ht - h_prev.array());
        d_pre_h.col(s) = dh.array() * z * (1.0 - ht * ht);
        VectorXd dr = d_pre_h.col(s).array() * tr.uh.col(s).array();
        d_uh.col(s) = d_pre_h.col(s).array() * r;
        d_pre_z.col(s) = dz.array() * z * (1.0 - z);
        d_pre_r.col(s) = dr.array() * r * (1.0 - r);
        carry = dh.array() * (1.0 - z);
        carry.noalias() += p.U_h.transpose() * d_uh.col(s);
        carry.noalias() += p.U_z.transpose() * d_pre_z.col(s);
        carry.noalias() += p.U_r.transpose() * d_pre_r.col(s);
    }
    auto h_prev = tr.h.leftCols(T);
    g.W_h.noalias() += d_pre_h * tr.x;
    g.W_z.noalias() += d_pre_z * tr.x;
    g.W_r.noalias() += d_pre_r * tr.x;
    g.U_h.noalias() += d_uh * h_prev.transpose();
    g.U_z.noalias() += d_pre_z * h_prev.transpose();
    g.U_r.noalias() += d_pre_r * h_prev.transpose();
    g.b_h += d_pre_h.rowwise().sum();
    g.b_z += d_pre_z.rowwise().sum();
    g.b_r += d_pre_r.rowwise().sum();
}

struct CellTrace {
    GruTrace fwd, bwd;
    MatrixXd E;  // 2H x T, column t = e_t
    MatrixXd U;  // A x T
    VectorXd alpha;
    VectorXd a;
};

CellTrace cell_forward(const MatrixXd& words, const HnnModel& model) {
    const Index T = words.rows(), H = idx(model.config().H);
    CellTrace c;
    c.fwd = gru_run(words, model.gru(false), false);
    c.bwd = gru_run(words, model.gru(true), true);
    c.E.resize(2 * H, T);
    for (Index t = 0; t < T; ++t) {
        c.E.col(t).head(H) = c.fwd.h.col(t + 1);
        c.E.col(t).tail(H) = c.bwd.h.col(T - t);
    }
    auto att = model.attention();
    c.U = ((att.W_w * c.E).colwise() + att.b_w).array().tanh().matrix();
    c.alpha = nn::softmax(c.U.transpose() * att.u_w);
    c.a = c.E * c.alpha;
    return c;
}

void cell_backward(const CellTrace& c, const VectorXd& da, const HnnModel& model, VectorXd& grads) {
    const Index T = c.E.cols(), H = idx(model.config().H);
    auto att = model.attention();
    const auto& L = model.layout();
    const auto& s = model.slots();

    MatrixXd dE = da * c.alpha.transpose();
    VectorXd d_alpha = c.E.transpose() * da;
    VectorXd ds = c.alpha.array() * (d_alpha.array() - c.alpha.dot(d_alpha));
    nn::vblock(grads, L[s.att_u]).noalias() += c.U * ds;
    MatrixXd dU_pre = (att.u_w * ds.transpose()).array() * (1.0 - c.U.array().square());
    nn::block(grads, L[s.att_W]).noalias() += dU_pre * c.E.transpose();
    nn::vblock(grads, L[s.att_b]) += dU_pre.rowwise().sum();
    dE.noalias() += att.W_w.transpose() * dU_pre;

    MatrixXd d_fwd(H, T), d_bwd(H, T);
    for (Index t = 0; t < T; ++t) {
        d_fwd.col(t) = dE.col(t).head(H);
        d_bwd.col(T - 1 - t) = dE.col(t).tail(H);
    }
    auto gf = gru_grads(grads, model, false);
    gru_backward(c.fwd, model.gru(false), d_fwd, gf);
    auto gb = gru_grads(grads, model, true);
    gru_backward(c.bwd, model.gru(true), d_bwd, gb);
}

}  // namespace

AttentionEmbedding birnn_attention_embed(const MatrixXd& cell_matrix, const HnnModel& model) {
    if (cell_matrix.cols() != idx(model.config().d_w))
        throw Error("cell matrix width does not match the word vector size");
    auto c = cell_forward(cell_matrix, model);
    return {c.E.transpose(), std::move(c.alpha), std::move(c.a)};
}

// ---- micro table encoding -------------------------------------------------------

namespace {

bool cell_needed(const HnnConfig& cfg, std::size_t column, std::size_t row) {
    if (cfg.use_conv_column && column == 0) return true;
    if (cfg.use_conv_row && row == 0) return true;
    return !cfg.use_conv_column && !cfg.use_conv_row && column == 0 && row == 0;
}

EncodedCell encode_cell(const Cell& cell, ColumnKind kind, const EmbeddingTable& emb,
                        const HnnConfig& cfg) {
    EncodedCell out;
    const std::size_t d0 = cfg.d0();
    switch (kind) {
        case ColumnKind::number:
            out.fixed = encode_number_cell(cell.raw_text, d0);
            return out;
        case ColumnKind::date:
            out.fixed = encode_date_cell(cell.raw_text, d0);
            return out;
        case ColumnKind::entity:
            break;
    }
    auto tokens = tokenize_and_crop(cell.raw_text, cfg.T);
    if (tokens.front().empty()) {
        out.fixed = VectorXd::Zero(idx(d0));
    } else if (cfg.use_att_birnn) {
        out.tokens = true;
        out.words = embed_entity_cell(cell.raw_text, emb, cfg.T);
    } else {
        out.fixed = VectorXd::Zero(idx(d0));
        VectorXd mean = mean_word_vector(cell.raw_text, emb, cfg.T);
        out.fixed.head(mean.size()) = mean;
    }
    return out;
}

}  // namespace

EncodedMicroTable encode_micro_table(const MicroTable& mt, const EmbeddingTable& emb,
                                     const HnnConfig& cfg, bool needed_only) {
    if (auto v = validate_micro_table(mt, cfg.m, cfg.l); !v.empty())
        throw Error("invalid micro table: " + v.front());
    if (emb.dim() != cfg.d_w)
        throw ConfigError("embedding dimension " + std::to_string(emb.dim()) +
                          " does not match d_w " + std::to_string(cfg.d_w));
    EncodedMicroTable out;
    out.m = cfg.m;
    out.l = cfg.l;
    out.cells.resize((cfg.l + 1) * cfg.m);
    for (std::size_t c = 0; c <= cfg.l; ++c) {
        const Column& col = c == 0 ? mt.target : mt.surrounding[c - 1];
        for (std::size_t r = 0; r < cfg.m; ++r) {
            auto& cell = out.cells[c * cfg.m + r];
            if (needed_only && !cell_needed(cfg, c, r))
                cell.fixed = VectorXd::Zero(idx(cfg.d0()));
            else
                cell = encode_cell(col.cells[r], col.kind, emb, cfg);
        }
    }
    return out;
}

namespace {

MicroTensor embed_impl(const EncodedMicroTable& input, const HnnModel& model,
                       std::vector<std::optional<CellTrace>>* traces, bool all_cells) {
    const auto& cfg = model.config();
    if (input.m != cfg.m || input.l != cfg.l) throw Error("encoded micro table shape mismatch");
    const Index d0 = idx(cfg.d0());
    MicroTensor t;
    t.columns.assign(cfg.l + 1, RowMatrix::Zero(idx(cfg.m), d0));
    if (traces) traces->assign(input.cells.size(), std::nullopt);
    for (std::size_t c = 0; c <= cfg.l; ++c) {
        for (std::size_t r = 0; r < cfg.m; ++r) {
            if (!all_cells && !cell_needed(cfg, c, r)) continue;
            const auto& cell = input.at(c, r);
            if (!cell.tokens) {
                t.columns[c].row(idx(r)) = cell.fixed.transpose();
                continue;
            }
            auto tr = cell_forward(cell.words, model);
            t.columns[c].row(idx(r)) = tr.a.transpose();
            if (traces) (*traces)[c * cfg.m + r] = std::move(tr);
        }
    }
    return t;
}

/// Row matrix [target_1, L_{1,1}, ..., L_{l,1}].
RowMatrix main_row(const MicroTensor& t) {
    RowMatrix R(idx(t.columns.size()), t.columns[0].cols());
    for (std::size_t c = 0; c < t.columns.size(); ++c) R.row(idx(c)) = t.columns[c].row(0);
    return R;
}

struct PoolTrace {
    std::vector<Index> argmax;  // per filter
    VectorXd zmax;              // pre-activation at argmax
};

/// Valid convolution of κ filters of height k over the rows of `input`,
/// ReLU, then max over positions. Returns pooled values.
VectorXd conv_pool(const RowMatrix& input, Eigen::Index k, const Eigen::Map<const MatrixXd>& W,
                   const Eigen::Map<const VectorXd>& b, PoolTrace* trace) {
    const Index d = input.cols();
    const Index positions = input.rows() - k + 1;
    Eigen::Map<const RowMatrix, 0, Eigen::OuterStride<>> windows(input.data(), positions, k * d,
                                                               Eigen::OuterStride<>(d));
    MatrixXd Z = windows * W.transpose();  // positions x κ
    Z.rowwise() += b.transpose();
    VectorXd pooled(W.rows());
    if (trace) {
        trace->argmax.resize(static_cast<std::size_t>(W.rows()));
        trace->zmax.resize(W.rows());
    }
    for (Index f = 0; f < W.rows(); ++f) {
        Index best = 0;
        for (Index p = 1; p < positions; ++p)
            if (Z(p, f) > Z(best, f)) best = p;
        pooled[f] = std::max(Z(best, f), 0.0);
        if (trace) {
            trace->argmax[static_cast<std::size_t>(f)] = best;
            trace->zmax[f] = Z(best, f);
        }
    }
    return pooled;
}

void conv_pool_backward(const RowMatrix& input, Eigen::Index k, const Eigen::Map<const MatrixXd>& W,
                        const PoolTrace& trace, const VectorXd& d_pooled, Eigen::Map<MatrixXd> dW,
                        Eigen::Map<VectorXd> db, RowMatrix& d_input) {
    const Index d = input.cols();
    for (Index f = 0; f < W.rows(); ++f) {
        const double g = d_pooled[f];
        if (g == 0.0 || trace.zmax[f] <= 0.0) continue;
        const Index p = trace.argmax[static_cast<std::size_t>(f)];
        Eigen::Map<const Eigen::RowVectorXd> window(input.data() + p * d, k * d);
        Eigen::Map<Eigen::RowVectorXd> d_window(d_input.data() + p * d, k * d);
        dW.row(f) += g * window;
        db[f] += g;
        d_window += g * W.row(f);
    }
}

struct HeadTrace {
    RowMatrix row_input;
    std::vector<PoolTrace> col, row;
    VectorXd logits;
};

ForwardResult head_forward(const MicroTensor& t, const HnnModel& model, HeadTrace* trace) {
    const auto& cfg = model.config();
    const auto& L = model.layout();
    const auto& s = model.slots();
    const auto& P = model.params();
    if (t.columns.size() != cfg.l + 1 || t.rows() != cfg.m || t.depth() != cfg.d0())
        throw Error("micro table tensor shape mismatch");

    ForwardResult out;
    out.pooled.resize(idx(cfg.pooled_dim()));
    Index offset = 0;
    if (cfg.use_conv_column) {
        if (trace) trace->col.resize(cfg.theta1.size());
        for (std::size_t i = 0; i < cfg.theta1.size(); ++i) {
            auto W = nn::block(P, L[s.col_W[i]]);
            auto pooled = conv_pool(t.columns[0], idx(cfg.theta1[i]), W, nn::vblock(P, L[s.col_b[i]]),
                                    trace ? &trace->col[i] : nullptr);
            out.pooled.segment(offset, pooled.size()) = pooled;
            offset += pooled.size();
        }
    }
    if (cfg.use_conv_row) {
        RowMatrix R = main_row(t);
        if (trace) trace->row.resize(cfg.theta2.size());
        for (std::size_t i = 0; i < cfg.theta2.size(); ++i) {
            auto W = nn::block(P, L[s.row_W[i]]);
            auto pooled = conv_pool(R, idx(cfg.theta2[i]), W, nn::vblock(P, L[s.row_b[i]]),
                                    trace ? &trace->row[i] : nullptr);
            out.pooled.segment(offset, pooled.size()) = pooled;
            offset += pooled.size();
        }
        if (trace) trace->row_input = std::move(R);
    }
    if (!cfg.use_conv_column && !cfg.use_conv_row) out.pooled = t.columns[0].row(0).transpose();

    out.f_hnn = nn::block(P, L[s.fc_W]).transpose() * out.pooled + nn::vblock(P, L[s.fc_b]);
    VectorXd logits = out.f_hnn;
    if (!cfg.fc_equals_logits)
        logits = nn::block(P, L[s.out_W]).transpose() * out.f_hnn + nn::vblock(P, L[s.out_b]);
    VectorXd y = nn::softmax(logits);
    out.y.assign(y.data(), y.data() + y.size());
    if (trace) trace->logits = std::move(logits);
    return out;
}

}  // namespace

MicroTensor embed_encoded(const EncodedMicroTable& input, const HnnModel& model) {
    return embed_impl(input, model, nullptr, true);
}

MicroTensor embed_micro_table(const MicroTable& mt, const EmbeddingTable& emb, const HnnModel& model) {
    return embed_encoded(encode_micro_table(mt, emb, model.config(), false), model);
}

ForwardResult forward(const MicroTensor& tensor, const HnnModel& model) {
    return head_forward(tensor, model, nullptr);
}

ForwardResult forward(const EncodedMicroTable& input, const HnnModel& model) {
    return head_forward(embed_impl(input, model, nullptr, false), model, nullptr);
}

LossAndGradients loss_and_gradients(std::span<const LabeledInput> batch, const HnnModel& model) {
    if (batch.empty()) throw Error("loss_and_gradients: empty batch");
    const auto& cfg = model.config();
    const auto& L = model.layout();
    const auto& s = model.slots();
    const auto& P = model.params();
    const double scale = 1.0 / static_cast<double>(batch.size());

    LossAndGradients out;
    out.grads = VectorXd::Zero(P.size());
    VectorXd& G = out.grads;

    for (const auto& item : batch) {
        if (item.label >= cfg.K) throw Error("label out of range");
        std::vector<std::optional<CellTrace>> traces;
        HeadTrace ht;
        MicroTensor t = embed_impl(item.input, model, &traces, false);
        ForwardResult fr = head_forward(t, model, &ht);

        const double lse = std::log((ht.logits.array() - ht.logits.maxCoeff()).exp().sum()) +
                           ht.logits.maxCoeff();
        out.loss += scale * (lse - ht.logits[idx(item.label)]);

        VectorXd d_logits = Eigen::Map<const VectorXd>(fr.y.data(), idx(fr.y.size()));
        d_logits[idx(item.label)] -= 1.0;
        d_logits *= scale;

        VectorXd d_f = d_logits;
        if (!cfg.fc_equals_logits) {
            nn::block(G, L[s.out_W]).noalias() += fr.f_hnn * d_logits.transpose();
            nn::vblock(G, L[s.out_b]) += d_logits;
            d_f = nn::block(P, L[s.out_W]) * d_logits;
        }
        nn::block(G, L[s.fc_W]).noalias() += fr.pooled * d_f.transpose();
        nn::vblock(G, L[s.fc_b]) += d_f;
        VectorXd d_pooled = nn::block(P, L[s.fc_W]) * d_f;

        RowMatrix d_col = RowMatrix::Zero(idx(cfg.m), idx(cfg.d0()));
        RowMatrix d_row = RowMatrix::Zero(idx(cfg.l + 1), idx(cfg.d0()));
        Index offset = 0;
        if (cfg.use_conv_column) {
            for (std::size_t i = 0; i < cfg.theta1.size(); ++i) {
                const Index n = idx(cfg.kappa1);
                conv_pool_backward(t.columns[0], idx(cfg.theta1[i]), nn::block(P, L[s.col_W[i]]), ht.col[i],
                                   d_pooled.segment(offset, n), nn::block(G, L[s.col_W[i]]),
                                   nn::vblock(G, L[s.col_b[i]]), d_col);
                offset += n;
            }
        }
        if (cfg.use_conv_row) {
            for (std::size_t i = 0; i < cfg.theta2.size(); ++i) {
                const Index n = idx(cfg.kappa2);
                conv_pool_backward(ht.row_input, idx(cfg.theta2[i]), nn::block(P, L[s.row_W[i]]), ht.row[i],
                                   d_pooled.segment(offset, n), nn::block(G, L[s.row_W[i]]),
                                   nn::vblock(G, L[s.row_b[i]]), d_row);
                offset += n;
            }
        }
        if (!cfg.use_conv_column && !cfg.use_conv_row) d_col.row(0) = d_pooled.transpose();

        if (!cfg.use_att_birnn) continue;
        for (std::size_t c = 0; c <= cfg.l; ++c) {
            for (std::size_t r = 0; r < cfg.m; ++r) {
                const auto& tr = traces[c * cfg.m + r];
                if (!tr) continue;
                VectorXd da = VectorXd::Zero(idx(cfg.d0()));
                if (c == 0) da += d_col.row(idx(r)).transpose();
                if (r == 0) da += d_row.row(idx(c)).transpose();
                if (da.isZero(0.0)) continue;
                cell_backward(*tr, da, model, G);
            }
        }
    }
    return out;
}

// ---- training ----------------------------------------------------------------

std::vector<LabeledInput> encode_samples(const std::vector<Sample>& samples, const EmbeddingTable& emb,
                                         const HnnConfig& cfg) {
    std::vector<LabeledInput> out;
    out.reserve(samples.size());
    for (const auto& s : samples) out.push_back({encode_micro_table(s.micro_table, emb, cfg), s.label});
    return out;
}

TrainResult train(std::span<const LabeledInput> samples, const TrainConfig& cfg, HnnModel& model) {
    if (samples.empty()) throw Error("train: no samples");
    if (cfg.batch_size == 0) throw ConfigError("batch size must be >= 1");
    model.init_uniform(cfg.seed, cfg.init_range);
    nn::Adam adam(model.params().size(), {.learning_rate = cfg.learning_rate});
    Rng order_rng(cfg.seed ^ 0x5deece66dULL);
    std::vector<std::size_t> order(samples.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    TrainResult result;
    std::vector<LabeledInput> batch;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        order_rng.shuffle(order);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(order.size(), start + cfg.batch_size);
            batch.clear();
            for (std::size_t i = start; i < end; ++i) batch.push_back(samples[order[i]]);
            auto lg = loss_and_gradients(batch, model);
            if (!std::isfinite(lg.loss) || !lg.grads.allFinite())
                throw TrainingDiverged("training diverged at epoch " + std::to_string(epoch) +
                                       ", batch starting at " + std::to_string(start) +
                                       " (loss " + std::to_string(lg.loss) + ")");
            epoch_loss += lg.loss * static_cast<double>(end - start);
            adam.step(model.params(), lg.grads);
        }
        epoch_loss /= static_cast<double>(order.size());
        result.loss_curve.push_back(epoch_loss);
        if (cfg.on_epoch) cfg.on_epoch(epoch, epoch_loss);
    }
    return result;
}

// ---- persistence -----------------------------------------------------------------

void save_checkpoint(const HnnModel& model, const std::filesystem::path& path) {
    nlohmann::json header = {{"config", model.config().to_json()},
                             {"catalog_hash", model.catalog_hash},
                             {"fingerprint", model.fingerprint},
                             {"blocks", model.layout().to_json()}};
    nn::write_checkpoint(path, "hnn", std::move(header), model.params());
}

HnnModel load_checkpoint(const std::filesystem::path& path) {
    auto data = nn::read_checkpoint(path, "hnn");
    HnnModel model(HnnConfig::from_json(data.header.at("config")));
    if (data.header.at("blocks") != model.layout().to_json() ||
        data.params.size() != model.params().size())
        throw ParseError(path.string() + ": parameter layout does not match its configuration");
    model.params() = std::move(data.params);
    model.catalog_hash = data.header.value("catalog_hash", "");
    model.fingerprint = data.header.value("fingerprint", "");
    return model;
}

std::string model_hash(const HnnModel& model) {
    std::string canon = model.config().to_json().dump() + model.catalog_hash + nn::params_hash(model.params());
    return to_hex(fnv1a64(canon));
}

}  // namespace tabsema
