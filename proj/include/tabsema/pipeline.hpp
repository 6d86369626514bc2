#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "tabsema/ensemble.hpp"
#include "tabsema/hnn.hpp"
#include "tabsema/kb.hpp"
#include "tabsema/kb_remote.hpp"
#include "tabsema/p2vec.hpp"
#include "tabsema/predict.hpp"
#include "tabsema/run_config.hpp"

namespace tabsema {

/// Tables keyed by id, loaded from every .csv/.json file of a directory.
std::map<std::string, Table> load_table_dir(const std::filesystem::path& dir);

/// Resolves gold rows against the loaded tables. Throws ConfigError on unknown ids.
std::vector<LabeledColumn> label_columns(const std::map<std::string, Table>& tables,
                                         const std::vector<GoldLabel>& gold);

/// Opens `snapshot:PATH` (N-Triples or saved snapshot) or `endpoint:URL`.
/// An empty spec falls back to the TABSEMA_KB_ENDPOINT environment variable.
struct KbSpec {
    std::string spec;
    std::filesystem::path cache_dir;
    bool offline = false;
};
std::unique_ptr<kb::Backend> open_kb(const KbSpec& spec);

enum class Scorer { hnn, ensemble1, ensemble2, p2vec, lookup_vote };

std::string_view to_string(Scorer s) noexcept;
Scorer scorer_from_string(std::string_view s);

/// Everything a training run produces.
struct Artifacts {
    RunConfig run;
    std::string fingerprint;
    std::optional<HnnModel> hnn;
    std::vector<double> loss_curve;
    std::optional<CandidatePropertySet> properties;
    std::map<EnsembleMode, EnsembleModel> ensembles;

    /// hnn.ckpt, properties.json, ensemble-<mode>.ckpt and run.json.
    void save(const std::filesystem::path& dir) const;
    /// Throws ConfigError when the directory holds no HNN checkpoint.
    static Artifacts load(const std::filesystem::path& dir);
};

struct TrainRequest {
    RunConfig run;
    std::vector<EnsembleMode> ensembles;
    bool verbose = false;
};

/// Trains the HNN and, when a KB is given, the requested ensembles on the
/// micro tables of the labeled columns.
Artifacts train_pipeline(const std::vector<LabeledColumn>& columns, const ClassCatalog& catalog,
                         const EmbeddingTable& emb, const kb::Backend* kb, const TrainRequest& req);

struct PredictRequest {
    Scorer scorer = Scorer::hnn;
    /// Lookup-vote thresholds.
    double alpha = 0.85;
    std::size_t n_lookup = 5;
    std::size_t m = 5, l = 4;
};

/// Scores the given columns with one pipeline; checks the catalog binding.
std::vector<ColumnPrediction> predict_columns(const std::vector<LabeledColumn>& columns, const ClassCatalog& catalog,
                                              const Artifacts* artifacts, const EmbeddingTable* emb,
                                              const kb::Backend* kb, const PredictRequest& req);

}  // namespace tabsema
