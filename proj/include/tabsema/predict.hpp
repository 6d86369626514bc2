#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tabsema/ensemble.hpp"
#include "tabsema/hnn.hpp"
#include "tabsema/kb.hpp"
#include "tabsema/table.hpp"

namespace tabsema {

/// Scores one micro table over the catalog.
using WindowScorer = std::function<ScoreVector(const MicroTable&)>;

struct ColumnPrediction {
    std::string table_id;
    std::size_t column_index = 0;
    ScoreVector score;
    std::size_t predicted_class = 0;  // argmax, lowest index on ties
    bool abstain = false;             // lookup-vote found no votes
    std::vector<ScoreVector> window_scores;
};

/// Element-wise mean of the window scores.
ScoreVector mean_scores(const std::vector<ScoreVector>& scores);

/// Scores every micro table of the column and averages the results.
ColumnPrediction score_column(const Table& table, std::size_t target_index, const WindowScorer& scorer,
                              std::size_t m, std::size_t l, bool keep_windows = false);

WindowScorer hnn_scorer(const HnnModel& model, const EmbeddingTable& emb);
WindowScorer ensemble_scorer(const EnsembleModel& model, FeatureContext ctx);

/// Lookup-Vote baseline: every entity matched to any cell votes for each
/// catalog class it belongs to. Class membership comes from one Q1 query per class.
class LookupVoter {
public:
    LookupVoter(const kb::Backend& kb, const ClassCatalog& catalog);

    /// Vote shares as the score; no votes gives a uniform score and the abstain flag.
    ColumnPrediction vote(const Column& column, double alpha, std::size_t n) const;

private:
    const kb::Backend& kb_;
    std::size_t classes_;
    std::map<std::string, std::vector<std::size_t>> membership_;
};

ColumnPrediction lookup_vote(const Column& column, const kb::Backend& kb, const ClassCatalog& catalog,
                             double alpha, std::size_t n);

struct EvalReport {
    double accuracy = 0.0;
    std::size_t correct = 0;
    std::size_t total = 0;
    std::size_t abstained = 0;
    std::vector<std::string> class_ids;
    std::vector<std::size_t> per_class_correct;
    std::vector<std::size_t> per_class_total;
    std::vector<std::vector<std::size_t>> confusion;  // [gold][predicted]
    std::string fingerprint;

    nlohmann::json to_json() const;
    std::string to_text() const;
};

/// Accuracy over gold columns; abstentions count as wrong. Throws when a
/// gold column has no prediction.
EvalReport evaluate(const std::vector<ColumnPrediction>& predictions, const std::vector<GoldLabel>& gold,
                    const ClassCatalog& catalog);

/// CSV `table_id,column_index,predicted_class,score_0..score_{K-1}` preceded by
/// a `# fingerprint=` line; abstentions leave predicted_class empty.
std::string predictions_to_csv(const std::vector<ColumnPrediction>& predictions, const ClassCatalog& catalog,
                               const std::string& fingerprint);

struct PredictionsFile {
    std::string fingerprint;
    std::vector<ColumnPrediction> predictions;
};

PredictionsFile predictions_from_csv(std::string_view text, const ClassCatalog& catalog);

}  // namespace tabsema
