#include "tabsema/predict.hpp"

#include <cstdio>
#include <sstream>

namespace tabsema {

ScoreVector mean_scores(const std::vector<ScoreVector>& scores) {
    if (scores.empty()) throw Error("mean of zero score vectors");
    ScoreVector mean(scores.front().size(), 0.0);
    for (const auto& s : scores) {
        if (s.size() != mean.size()) throw Error("score vectors differ in length");
        for (std::size_t i = 0; i < s.size(); ++i) mean[i] += s[i];
    }
    for (auto& v : mean) v /= static_cast<double>(scores.size());
    return mean;
}

ColumnPrediction score_column(const Table& table, std::size_t target_index, const WindowScorer& scorer,
                              std::size_t m, std::size_t l, bool keep_windows) {
    if (!scorer) throw Error("score_column: no scorer");
    std::vector<ScoreVector> windows;
    for (const auto& mt : extract_micro_tables(table, target_index, m, l)) windows.push_back(scorer(mt));
    ColumnPrediction p;
    p.table_id = table.id;
    p.column_index = target_index;
    p.score = mean_scores(windows);
    p.predicted_class = argmax(p.score);
    if (keep_windows) p.window_scores = std::move(windows);
    return p;
}

WindowScorer hnn_scorer(const HnnModel& model, const EmbeddingTable& emb) {
    return [&model, &emb](const MicroTable& mt) {
        return forward(encode_micro_table(mt, emb, model.config()), model).y;
    };
}

WindowScorer ensemble_scorer(const EnsembleModel& model, FeatureContext ctx) {
    return [&model, ctx](const MicroTable& mt) { return ensemble_score(mt, model, ctx); };
}

LookupVoter::LookupVoter(const kb::Backend& kb, const ClassCatalog& catalog)
    : kb_(kb), classes_(catalog.size()) {
    for (std::size_t i = 0; i < catalog.size(); ++i)
        for (const auto& e : kb.entities_of_class(catalog[i].kb_iri)) membership_[e].push_back(i);
}

ColumnPrediction LookupVoter::vote(const Column& column, double alpha, std::size_t n) const {
    std::vector<double> votes(classes_, 0.0);
    double total = 0.0;
    for (const auto& cell : column.cells) {
        if (cell.empty()) continue;
        for (const auto& hit : kb_.entity_lookup(cell.raw_text, alpha, n)) {
            auto it = membership_.find(hit.iri);
            if (it == membership_.end()) continue;
            for (auto c : it->second) {
                votes[c] += 1.0;
                total += 1.0;
            }
        }
    }
    ColumnPrediction p;
    if (total == 0.0) {
        p.abstain = true;
        p.score.assign(classes_, classes_ ? 1.0 / static_cast<double>(classes_) : 0.0);
    } else {
        p.score = votes;
        for (auto& v : p.score) v /= total;
    }
    p.predicted_class = argmax(p.score);
    return p;
}

ColumnPrediction lookup_vote(const Column& column, const kb::Backend& kb, const ClassCatalog& catalog,
                             double alpha, std::size_t n) {
    return LookupVoter(kb, catalog).vote(column, alpha, n);
}

EvalReport evaluate(const std::vector<ColumnPrediction>& predictions, const std::vector<GoldLabel>& gold,
                    const ClassCatalog& catalog) {
    std::map<std::pair<std::string, std::size_t>, const ColumnPrediction*> by_column;
    for (const auto& p : predictions) by_column[{p.table_id, p.column_index}] = &p;

    const std::size_t K = catalog.size();
    EvalReport r;
    for (const auto& e : catalog.entries()) r.class_ids.push_back(e.class_id);
    r.per_class_correct.assign(K, 0);
    r.per_class_total.assign(K, 0);
    r.confusion.assign(K, std::vector<std::size_t>(K, 0));
    for (const auto& g : gold) {
        auto it = by_column.find({g.table_id, g.column_index});
        if (it == by_column.end())
            throw Error("no prediction for gold column " + g.table_id + ":" + std::to_string(g.column_index));
        auto cls = catalog.index_of(g.class_id);
        if (!cls) throw ConfigError("gold class '" + g.class_id + "' is not in the catalog");
        const auto& p = *it->second;
        ++r.total;
        ++r.per_class_total[*cls];
        if (p.abstain) {
            ++r.abstained;
            continue;
        }
        if (p.predicted_class >= K) throw Error("prediction class index out of range");
        ++r.confusion[*cls][p.predicted_class];
        if (p.predicted_class == *cls) {
            ++r.correct;
            ++r.per_class_correct[*cls];
        }
    }
    r.accuracy = r.total ? static_cast<double>(r.correct) / static_cast<double>(r.total) : 0.0;
    return r;
}

nlohmann::json EvalReport::to_json() const {
    nlohmann::json per_class = nlohmann::json::object();
    for (std::size_t i = 0; i < class_ids.size(); ++i)
        per_class[class_ids[i]] = {
            {"correct", per_class_correct[i]},
            {"total", per_class_total[i]},
            {"accuracy", per_class_total[i] ? static_cast<double>(per_class_correct[i]) /
                                                  static_cast<double>(per_class_total[i])
                                            : 0.0}};
    return {{"accuracy", accuracy}, {"correct", correct},     {"total", total},
            {"abstained", abstained}, {"per_class", per_class}, {"classes", class_ids},
            {"confusion", confusion}, {"fingerprint", fingerprint}};
}

std::string EvalReport::to_text() const {
    std::ostringstream out;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4f", accuracy);
    out << "accuracy " << buf << " (" << correct << "/" << total << ")";
    if (abstained) out << ", " << abstained << " abstained";
    out << "\n";
    for (std::size_t i = 0; i < class_ids.size(); ++i) {
        if (!per_class_total[i]) continue;
        std::snprintf(buf, sizeof buf, "%.4f", static_cast<double>(per_class_correct[i]) /
                                                   static_cast<double>(per_class_total[i]));
        out << "  " << class_ids[i] << ": " << buf << " (" << per_class_correct[i] << "/" << per_class_total[i]
            << ")\n";
    }
    return out.str();
}

std::string predictions_to_csv(const std::vector<ColumnPrediction>& predictions, const ClassCatalog& catalog,
                               const std::string& fingerprint) {
    std::string out = "# fingerprint=" + fingerprint + "\n";
    out += "table_id,column_index,predicted_class";
    for (std::size_t i = 0; i < catalog.size(); ++i) out += ",score_" + std::to_string(i);
    out += '\n';
    char buf[32];
    for (const auto& p : predictions) {
        out += csv_escape(p.table_id) + ',' + std::to_string(p.column_index) + ',';
        if (!p.abstain) out += csv_escape(catalog[p.predicted_class].class_id);
        for (double s : p.score) {
            std::snprintf(buf, sizeof buf, ",%.17g", s);
            out += buf;
        }
        out += '\n';
    }
    return out;
}

PredictionsFile predictions_from_csv(std::string_view text, const ClassCatalog& catalog) {
    PredictionsFile file;
    std::string body;
    std::istringstream in{std::string(text)};
    std::string line;
    while (std::getline(in, line)) {
        if (line.starts_with("# fingerprint=")) {
            file.fingerprint = trim(line.substr(14));
            continue;
        }
        if (line.starts_with("#")) continue;
        body += line + '\n';
    }
    auto records = parse_csv(body);
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        if (i == 0 && !r.empty() && r[0] == "table_id") continue;
        if (r.size() == 1 && r[0].empty()) continue;
        if (r.size() != 3 + catalog.size())
            throw ParseError("prediction row has " + std::to_string(r.size()) + " fields, expected " +
                             std::to_string(3 + catalog.size()));
        ColumnPrediction p;
        p.table_id = r[0];
        auto idx = parse_decimal(r[1]);
        if (!idx || *idx < 0) throw ParseError("bad column index '" + r[1] + "'");
        p.column_index = static_cast<std::size_t>(*idx);
        for (std::size_t k = 0; k < catalog.size(); ++k) {
            auto v = parse_decimal(r[3 + k]);
            if (!v) throw ParseError("bad score '" + r[3 + k] + "'");
            p.score.push_back(*v);
        }
        if (r[2].empty()) {
            p.abstain = true;
            p.predicted_class = argmax(p.score);
        } else {
            auto cls = catalog.index_of(r[2]);
            if (!cls) throw ConfigError("predicted class '" + r[2] + "' is not in the catalog");
            p.predicted_class = *cls;
        }
        file.predictions.push_back(std::move(p));
    }
    return file;
}

}  // namespace tabsema
