#include "tabsema/pipeline.hpp"

#include <algorithm>
#include <iostream>

namespace tabsema {

namespace fs = std::filesystem;

std::map<std::string, Table> load_table_dir(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw ConfigError("not a table directory: " + dir.string());
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir)) {
        auto ext = e.path().extension();
        if (e.is_regular_file() && (ext == ".csv" || ext == ".json")) files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    std::map<std::string, Table> tables;
    for (const auto& f : files) {
        Table t = load_table(f);
        std::string id = t.id;
        if (!tables.emplace(id, std::move(t)).second) throw ConfigError("duplicate table id '" + id + "'");
    }
    return tables;
}

std::vector<LabeledColumn> label_columns(const std::map<std::string, Table>& tables,
                                         const std::vector<GoldLabel>& gold) {
    std::vector<LabeledColumn> out;
    out.reserve(gold.size());
    for (const auto& g : gold) {
        auto it = tables.find(g.table_id);
        if (it == tables.end()) throw ConfigError("gold refers to unknown table '" + g.table_id + "'");
        if (g.column_index >= it->second.columns.size())
            throw ConfigError("gold column " + std::to_string(g.column_index) + " out of range in '" + g.table_id + "'");
        out.push_back({&it->second, g.column_index, g.class_id});
    }
    return out;
}

std::unique_ptr<kb::Backend> open_kb(const KbSpec& spec) {
    std::string s = spec.spec;
    if (s.empty()) {
        auto env = kb::RemoteOptions::from_env();
        if (env.endpoint.empty()) throw ConfigError("no KB given (use --kb or TABSEMA_KB_ENDPOINT)");
        s = "endpoint:" + env.endpoint;
    }
    if (s.starts_with("snapshot:")) {
        fs::path path = s.substr(9);
        if (!fs::exists(path)) throw ConfigError("KB snapshot not found: " + path.string());
        if (path.extension() == ".nt") return std::make_unique<kb::Snapshot>(kb::build_snapshot(path));
        return std::make_unique<kb::Snapshot>(kb::Snapshot::load(path));
    }
    if (s.starts_with("endpoint:")) {
        auto opts = kb::RemoteOptions::from_env();
        opts.endpoint = s.substr(9);
        opts.offline = spec.offline;
        fs::path cache = spec.cache_dir;
        if (cache.empty()) {
            const char* env = std::getenv("TABSEMA_CACHE_DIR");
            cache = env ? fs::path(env) : fs::path(".tabsema-cache");
        }
        return std::make_unique<kb::RemoteBackend>(opts, std::make_shared<kb::QueryCache>(cache));
    }
    throw ConfigError("--kb expects snapshot:PATH or endpoint:URL, got '" + s + "'");
}

std::string_view to_string(Scorer s) noexcept {
    switch (s) {
        case Scorer::hnn: return "hnn";
        case Scorer::ensemble1: return "ensemble1";
        case Scorer::ensemble2: return "ensemble2";
        case Scorer::p2vec: return "p2vec";
        case Scorer::lookup_vote: return "lookup-vote";
    }
    return "hnn";
}

Scorer scorer_from_string(std::string_view s) {
    for (Scorer c : {Scorer::hnn, Scorer::ensemble1, Scorer::ensemble2, Scorer::p2vec, Scorer::lookup_vote})
        if (to_string(c) == s) return c;
    throw ConfigError("unknown scorer '" + std::string(s) + "'");
}

namespace {

fs::path ensemble_path(const fs::path& dir, EnsembleMode mode) {
    return dir / ("ensemble-" + std::string(to_string(mode)) + ".ckpt");
}

}  // namespace

void Artifacts::save(const fs::path& dir) const {
    fs::create_directories(dir);
    if (hnn) save_checkpoint(*hnn, dir / "hnn.ckpt");
    if (properties) properties->save(dir / "properties.json");
    for (const auto& [mode, model] : ensembles) save_ensemble(model, ensemble_path(dir, mode));
    nlohmann::json j = {{"config", run.to_json()}, {"fingerprint", fingerprint}, {"loss_curve", loss_curve}};
    write_file_atomic(dir / "run.json", j.dump(2) + "\n");
}

Artifacts Artifacts::load(const fs::path& dir) {
    if (!fs::exists(dir / "hnn.ckpt")) throw ConfigError("missing checkpoint " + (dir / "hnn.ckpt").string());
    Artifacts a;
    a.hnn = load_checkpoint(dir / "hnn.ckpt");
    a.run.hnn = a.hnn->config();
    a.fingerprint = a.hnn->fingerprint;
    if (fs::exists(dir / "properties.json")) a.properties = CandidatePropertySet::load(dir / "properties.json");
    for (auto mode : {EnsembleMode::p2vec_only, EnsembleMode::one, EnsembleMode::two}) {
        auto p = ensemble_path(dir, mode);
        if (fs::exists(p)) a.ensembles.emplace(mode, load_ensemble(p));
    }
    if (fs::exists(dir / "run.json")) {
        auto j = nlohmann::json::parse(read_file(dir / "run.json"));
        a.loss_curve = j.value("loss_curve", std::vector<double>{});
    }
    return a;
}

Artifacts train_pipeline(const std::vector<LabeledColumn>& columns, const ClassCatalog& catalog,
                         const EmbeddingTable& emb, const kb::Backend* kb, const TrainRequest& req) {
    Artifacts a;
    a.run = req.run;
    a.run.hnn.d_w = emb.dim();
    a.run.hnn.K = catalog.size();
    a.run.train.seed = req.run.seed;
    a.run.base.seed = req.run.seed + 1;
    a.run.hnn.validate();
    a.fingerprint = a.run.fingerprint(catalog.hash());

    const auto& cfg = a.run.hnn;
    auto samples = build_training_set(columns, catalog, cfg.m, cfg.l);
    if (samples.empty()) throw ConfigError("no training samples");
    auto inputs = encode_samples(samples, emb, cfg);

    HnnModel model(cfg);
    model.catalog_hash = catalog.hash();
    model.fingerprint = a.fingerprint;
    TrainConfig tc = a.run.train;
    if (req.verbose)
        tc.on_epoch = [](std::size_t e, double loss) { std::clog << "epoch " << e + 1 << " loss " << loss << "\n"; };
    a.loss_curve = train(inputs, tc, model).loss_curve;
    a.hnn = std::move(model);

    if (req.ensembles.empty()) return a;
    if (!kb) throw ConfigError("ensembles need a KB");
    a.properties = mine_candidate_properties(catalog, a.run.sigma, *kb);
    FeatureContext ctx{&*a.hnn, &emb, &*a.properties, kb, a.run.p2vec};
    for (auto mode : req.ensembles) {
        if (req.verbose) std::clog << "training " << to_string(mode) << " base classifier\n";
        auto ens = train_ensemble(samples, mode, ctx, catalog.size(), a.run.base);
        ens.catalog_hash = catalog.hash();
        ens.fingerprint = a.fingerprint;
        a.ensembles.insert_or_assign(mode, std::move(ens));
    }
    return a;
}

std::vector<ColumnPrediction> predict_columns(const std::vector<LabeledColumn>& columns, const ClassCatalog& catalog,
                                              const Artifacts* artifacts, const EmbeddingTable* emb,
                                              const kb::Backend* kb, const PredictRequest& req) {
    std::vector<ColumnPrediction> out;
    out.reserve(columns.size());
    if (req.scorer == Scorer::lookup_vote) {
        if (!kb) throw ConfigError("lookup-vote needs a KB");
        LookupVoter voter(*kb, catalog);
        for (const auto& c : columns) {
            auto p = voter.vote(c.table->columns.at(c.target_index), req.alpha, req.n_lookup);
            p.table_id = c.table->id;
            p.column_index = c.target_index;
            out.push_back(std::move(p));
        }
        return out;
    }
    if (!artifacts || !artifacts->hnn) throw ConfigError("scorer needs a trained model");
    if (!emb) throw ConfigError("scorer needs word embeddings");
    const HnnModel& hnn = *artifacts->hnn;
    if (hnn.catalog_hash != catalog.hash()) throw ConfigError("catalog differs from the one the model was trained on");
    if (hnn.config().d_w != emb->dim()) throw ConfigError("embedding dimension differs from the trained model");

    WindowScorer scorer;
    if (req.scorer == Scorer::hnn) {
        scorer = hnn_scorer(hnn, *emb);
    } else {
        EnsembleMode mode = req.scorer == Scorer::ensemble1   ? EnsembleMode::one
                            : req.scorer == Scorer::ensemble2 ? EnsembleMode::two
                                                              : EnsembleMode::p2vec_only;
        auto it = artifacts->ensembles.find(mode);
        if (it == artifacts->ensembles.end())
            throw ConfigError("no trained " + std::string(to_string(mode)) + " model in the artifacts");
        if (!kb) throw ConfigError("ensemble scorers need a KB");
        if (it->second.catalog_hash != catalog.hash())
            throw ConfigError("catalog differs from the one the ensemble was trained on");
        FeatureContext ctx{&hnn, emb, &it->second.properties, kb, it->second.p2vec};
        scorer = ensemble_scorer(it->second, ctx);
    }
    const auto& cfg = hnn.config();
    for (const auto& c : columns) out.push_back(score_column(*c.table, c.target_index, scorer, cfg.m, cfg.l));
    return out;
}

}  // namespace tabsema
