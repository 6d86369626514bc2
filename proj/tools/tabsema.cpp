// tabsema: command-line front end for column type annotation.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tabsema/pipeline.hpp"
#include "tabsema/synthetic.hpp"

namespace fs = std::filesystem;
using namespace tabsema;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitParse = 2;
constexpr int kExitConfig = 3;

struct Globals {
    std::uint64_t seed = 42;
    std::string kb;
    std::string cache_dir;
    bool offline = false;
    std::size_t m = 5, l = 4, T = 10, H = 150, A = 50;
    double sigma = 0.005;
    double alpha = 0.85;
    std::size_t n_lookup = 5;
    std::string ablation;
    bool no_att_birnn = false;
    std::size_t epochs = 100;
    std::size_t batch_size = 32;
    double lr = 1e-3;
    std::string base = "mlp";
    std::size_t base_epochs = 200;
    bool verbose = false;

    RunConfig run_config() const {
        RunConfig rc;
        rc.seed = seed;
        rc.hnn.m = m;
        rc.hnn.l = l;
        rc.hnn.T = T;
        rc.hnn.H = H;
        rc.hnn.A = A;
        rc.hnn.use_att_birnn = !no_att_birnn;
        if (!ablation.empty()) apply_ablation(rc.hnn, ablation);
        rc.train.epochs = epochs;
        rc.train.batch_size = batch_size;
        rc.train.learning_rate = lr;
        rc.base.kind = base_kind_from_string(base);
        rc.base.epochs = base_epochs;
        rc.sigma = sigma;
        rc.p2vec.n_lookup = n_lookup;
        rc.p2vec.lookup_alpha = alpha;
        rc.p2vec.match_alpha = alpha;
        return rc;
    }

    KbSpec kb_spec() const { return {kb, cache_dir, offline}; }
};

/// Columns to score: gold rows when given, otherwise every entity column.
std::vector<LabeledColumn> columns_to_score(const std::map<std::string, Table>& tables, const std::string& gold) {
    if (!gold.empty()) return label_columns(tables, load_gold(gold));
    std::vector<LabeledColumn> out;
    for (const auto& [id, t] : tables)
        for (std::size_t c = 0; c < t.columns.size(); ++c)
            if (t.columns[c].kind == ColumnKind::entity) out.push_back({&t, c, ""});
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Column type annotation with a hybrid neural network and KB property features"};
    app.set_config("--config", "", "INI/TOML file of option values; command-line flags win");
    app.require_subcommand(1);
    app.fallthrough();

    Globals g;
    app.add_option("--seed", g.seed, "Random seed")->capture_default_str();
    app.add_option("--kb", g.kb, "snapshot:PATH or endpoint:URL");
    app.add_option("--cache-dir", g.cache_dir, "Remote query cache directory");
    app.add_flag("--offline", g.offline, "Answer remote queries from the cache only");
    app.add_option("--m", g.m, "Rows per micro table")->capture_default_str();
    app.add_option("--l", g.l, "Surrounding columns per micro table")->capture_default_str();
    app.add_option("--T", g.T, "Tokens per cell")->capture_default_str();
    app.add_option("--H", g.H, "GRU hidden size")->capture_default_str();
    app.add_option("--A", g.A, "Attention size")->capture_default_str();
    app.add_option("--sigma", g.sigma, "Frequent property threshold")->capture_default_str();
    app.add_option("--alpha", g.alpha, "Label similarity threshold")->capture_default_str();
    app.add_option("--n-lookup", g.n_lookup, "Entities kept per lookup")->capture_default_str();
    app.add_option("--ablation", g.ablation, "fc, cnn-c, cnn-r or cnn-cr")
        ->check(CLI::IsMember({"fc", "cnn-c", "cnn-r", "cnn-cr"}));
    app.add_flag("--no-att-birnn", g.no_att_birnn, "Average word vectors instead of the attentive BiGRU");
    app.add_option("--epochs", g.epochs, "HNN training epochs")->capture_default_str();
    app.add_option("--batch-size", g.batch_size, "HNN mini-batch size")->capture_default_str();
    app.add_option("--lr", g.lr, "HNN learning rate")->capture_default_str();
    app.add_option("--base", g.base, "Ensemble base classifier")->check(CLI::IsMember({"lr", "mlp"}));
    app.add_option("--base-epochs", g.base_epochs, "Base classifier epochs")->capture_default_str();
    app.add_flag("-v,--verbose", g.verbose, "Log progress to stderr");

    // snapshot-build
    auto* snap = app.add_subcommand("snapshot-build", "Parse N-Triples into an offline KB snapshot");
    std::string snap_in, snap_out;
    snap->add_option("ntriples", snap_in, "N-Triples file")->required();
    snap->add_option("out", snap_out, "Snapshot file")->required();

    // mine-properties
    auto* mine = app.add_subcommand("mine-properties", "Mine frequent properties of the catalog classes");
    std::string mine_catalog, mine_out;
    mine->add_option("--catalog", mine_catalog, "Class catalog CSV")->required();
    mine->add_option("--out", mine_out, "Output JSON")->required();

    // synth
    auto* synth = app.add_subcommand("synth", "Write a synthetic KB, catalog, embeddings and labeled tables");
    std::string synth_out;
    synthetic::Spec synth_spec;
    synth->add_option("--out", synth_out, "Output directory")->required();
    synth->add_option("--columns", synth_spec.columns, "Labeled columns")->capture_default_str();
    synth->add_option("--entities", synth_spec.entities_per_class, "Entities per class")->capture_default_str();

    // split
    auto* split = app.add_subcommand("split", "Split gold columns into train and test sets");
    std::string split_gold, split_train, split_test;
    double split_fraction = 0.7;
    split->add_option("--gold", split_gold, "Gold CSV")->required();
    split->add_option("--train-out", split_train, "Train gold CSV")->required();
    split->add_option("--test-out", split_test, "Test gold CSV")->required();
    split->add_option("--train-fraction", split_fraction, "Share of columns used for training")->capture_default_str();

    // train
    auto* tr = app.add_subcommand("train", "Train the HNN and optional ensembles");
    std::string tr_tables, tr_gold, tr_catalog, tr_emb, tr_out;
    std::vector<std::string> tr_ens;
    tr->add_option("--tables", tr_tables, "Table directory")->required();
    tr->add_option("--gold", tr_gold, "Gold CSV of training columns")->required();
    tr->add_option("--catalog", tr_catalog, "Class catalog CSV")->required();
    tr->add_option("--embeddings", tr_emb, "Word vectors")->required();
    tr->add_option("--out", tr_out, "Model directory")->required();
    tr->add_option("--ensembles", tr_ens, "Ensembles to train: p2vec, ensemble1, ensemble2")
        ->check(CLI::IsMember({"p2vec", "ensemble1", "ensemble2"}))
        ->delimiter(',');

    // predict
    auto* pr = app.add_subcommand("predict", "Predict column classes");
    std::string pr_model, pr_tables, pr_gold, pr_catalog, pr_emb, pr_out, pr_scorer = "hnn";
    pr->add_option("--model", pr_model, "Model directory");
    pr->add_option("--tables", pr_tables, "Table directory")->required();
    pr->add_option("--gold", pr_gold, "Columns to score (classes ignored); default every entity column");
    pr->add_option("--catalog", pr_catalog, "Class catalog CSV")->required();
    pr->add_option("--embeddings", pr_emb, "Word vectors");
    pr->add_option("--scorer", pr_scorer, "hnn, ensemble1, ensemble2, p2vec or lookup-vote")
        ->check(CLI::IsMember({"hnn", "ensemble1", "ensemble2", "p2vec", "lookup-vote"}))
        ->capture_default_str();
    pr->add_option("--out", pr_out, "Predictions CSV")->required();

    // evaluate
    auto* ev = app.add_subcommand("evaluate", "Score predictions against gold labels");
    std::string ev_pred, ev_gold, ev_catalog, ev_model, ev_report;
    bool ev_force = false;
    ev->add_option("--predictions", ev_pred, "Predictions CSV")->required();
    ev->add_option("--gold", ev_gold, "Gold CSV")->required();
    ev->add_option("--catalog", ev_catalog, "Class catalog CSV")->required();
    ev->add_option("--model", ev_model, "Model directory whose fingerprint the predictions must carry");
    ev->add_option("--report", ev_report, "Write the JSON report here");
    ev->add_flag("--force", ev_force, "Evaluate despite a fingerprint mismatch");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitParse;
    }

    try {
        if (*snap) {
            auto s = kb::build_snapshot(snap_in);
            s.save(snap_out);
            std::cout << s.entity_count() << " entities, " << s.source_triples().size() << " triples\n";
        } else if (*mine) {
            auto catalog = ClassCatalog::load(mine_catalog);
            auto kb = open_kb(g.kb_spec());
            auto props = mine_candidate_properties(catalog, g.sigma, *kb);
            props.save(mine_out);
            std::cout << props.dim() << "\n";
        } else if (*synth) {
            synth_spec.seed = g.seed;
            auto data = synthetic::generate(synth_spec);
            synthetic::write(data, synth_out);
            std::cout << data.tables.size() << " tables, " << data.triples.size() << " triples\n";
        } else if (*split) {
            auto [train_set, test_set] = split_dataset(load_gold(split_gold), {g.seed, split_fraction});
            save_gold(split_train, train_set);
            save_gold(split_test, test_set);
            std::cout << train_set.size() << " train, " << test_set.size() << " test\n";
        } else if (*tr) {
            auto catalog = ClassCatalog::load(tr_catalog);
            auto emb = EmbeddingTable::load(tr_emb);
            auto tables = load_table_dir(tr_tables);
            auto columns = label_columns(tables, load_gold(tr_gold));
            TrainRequest req{g.run_config(), {}, g.verbose};
            for (const auto& e : tr_ens) req.ensembles.push_back(ensemble_mode_from_string(e));
            std::unique_ptr<kb::Backend> kb;
            if (!req.ensembles.empty()) kb = open_kb(g.kb_spec());
            auto artifacts = train_pipeline(columns, catalog, emb, kb.get(), req);
            artifacts.save(tr_out);
            std::cout << "fingerprint " << artifacts.fingerprint << "\n";
        } else if (*pr) {
            auto catalog = ClassCatalog::load(pr_catalog);
            auto tables = load_table_dir(pr_tables);
            auto columns = columns_to_score(tables, pr_gold);
            PredictRequest req;
            req.scorer = scorer_from_string(pr_scorer);
            req.alpha = g.alpha;
            req.n_lookup = g.n_lookup;
            std::optional<Artifacts> artifacts;
            std::optional<EmbeddingTable> emb;
            std::string fingerprint = g.run_config().fingerprint(catalog.hash());
            if (req.scorer != Scorer::lookup_vote) {
                if (pr_model.empty()) throw ConfigError("--model is required for scorer " + pr_scorer);
                if (pr_emb.empty()) throw ConfigError("--embeddings is required for scorer " + pr_scorer);
                artifacts = Artifacts::load(pr_model);
                emb = EmbeddingTable::load(pr_emb);
                fingerprint = artifacts->fingerprint;
            }
            std::unique_ptr<kb::Backend> kb;
            if (req.scorer != Scorer::hnn) kb = open_kb(g.kb_spec());
            auto preds = predict_columns(columns, catalog, artifacts ? &*artifacts : nullptr,
                                         emb ? &*emb : nullptr, kb.get(), req);
            write_file_atomic(pr_out, predictions_to_csv(preds, catalog, fingerprint));
            std::cout << preds.size() << " columns\n";
        } else if (*ev) {
            auto catalog = ClassCatalog::load(ev_catalog);
            auto file = predictions_from_csv(read_file(ev_pred), catalog);
            std::string expected = ev_model.empty() ? g.run_config().fingerprint(catalog.hash())
                                                    : Artifacts::load(ev_model).fingerprint;
            if (file.fingerprint != expected) {
                std::cerr << "fingerprint mismatch: predictions " << file.fingerprint << ", expected " << expected
                          << "\n";
                if (!ev_force) return kExitConfig;
            }
            auto report = evaluate(file.predictions, load_gold(ev_gold), catalog);
            report.fingerprint = file.fingerprint;
            if (!ev_report.empty()) write_file_atomic(ev_report, report.to_json().dump(2) + "\n");
            std::cout << report.to_text();
        }
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitParse;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitError;
    }
    return kExitOk;
}
