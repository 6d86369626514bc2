#include <gtest/gtest.h>

#include "tabsema/predict.hpp"
#include "test_support.hpp"

using namespace tabsema;

namespace {

const std::string kX = "http://x/";

ClassCatalog two_classes() { return ClassCatalog({{"Film", kX + "Film"}, {"Book", kX + "Book"}}); }

/// Scores windows by a one-hot at the class named in the main cell.
WindowScorer one_hot_scorer(std::size_t K) {
    return [K](const MicroTable& mt) {
        ScoreVector s(K, 0.0);
        s[std::stoul(mt.main_cell().raw_text)] = 1.0;
        return s;
    };
}

kb::Snapshot vote_kb() {
    std::vector<kb::Triple> t;
    auto add = [&](const std::string& e, const std::string& cls, const std::string& label) {
        t.push_back({kX + e, std::string(kb::kRdfType), kb::make_entity(kX + cls)});
        t.push_back({kX + e, std::string(kb::kRdfsLabel), kb::make_literal(label, "en", "")});
    };
    add("Alien", "Film", "Alien");
    add("Heat", "Film", "Heat");
    add("Dune", "Book", "Dune");
    add("Emma", "Other", "Emma");
    return kb::Snapshot(t);
}

Column column(std::vector<std::string> texts) {
    Column c;
    for (auto& s : texts) c.cells.push_back(Cell{std::move(s)});
    return c;
}

}  // namespace

TEST(ScoreColumn, SingleWindowIsItsScore) {
    auto t = make_table("t", {{"1", "0", "0", "0", "0"}});
    t.columns[0].kind = ColumnKind::entity;
    auto p = score_column(t, 0, one_hot_scorer(3), 5, 4);
    EXPECT_EQ(p.score, (ScoreVector{0, 1, 0}));
    EXPECT_EQ(p.predicted_class, 1u);
}

TEST(ScoreColumn, ThreeWindowsAverage) {
    auto t = make_table("t", {{"0", "0", "2", "x", "x", "x", "x"}});
    t.columns[0].kind = ColumnKind::entity;
    auto p = score_column(t, 0, one_hot_scorer(3), 5, 1, true);
    ASSERT_EQ(p.window_scores.size(), 3u);
    EXPECT_NEAR(p.score[0], 2.0 / 3.0, 1e-15);
    EXPECT_EQ(p.score[1], 0.0);
    EXPECT_NEAR(p.score[2], 1.0 / 3.0, 1e-15);
    EXPECT_EQ(p.predicted_class, 0u);
}

TEST(ScoreColumn, NonEntityTargetIsRejected) {
    auto t = make_table("t", {{"1", "2", "3"}});
    EXPECT_THROW(score_column(t, 0, one_hot_scorer(3), 5, 1), Error);
    EXPECT_THROW(score_column(make_table("t", {{"a"}}), 0, WindowScorer{}, 5, 1), Error);
}

TEST(MeanScores, PermutationInvariantAndNormalized) {
    Rng rng(4);
    std::vector<ScoreVector> windows;
    for (int w = 0; w < 6; ++w) {
        ScoreVector s(4);
        double total = 0;
        for (auto& v : s) total += v = rng.uniform();
        for (auto& v : s) v /= total;
        windows.push_back(s);
    }
    auto mean = mean_scores(windows);
    auto shuffled = windows;
    rng.shuffle(shuffled);
    auto again = mean_scores(shuffled);
    double sum = 0;
    for (std::size_t k = 0; k < 4; ++k) {
        EXPECT_NEAR(mean[k], again[k], 1e-15);
        sum += mean[k];
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
    auto same = mean_scores({windows[0], windows[0]});
    for (std::size_t k = 0; k < 4; ++k) EXPECT_NEAR(same[k], windows[0][k], 1e-15);
}

TEST(LookupVote, UnanimousColumn) {
    auto kb = vote_kb();
    auto p = lookup_vote(column({"Alien", "Heat"}), kb, two_classes(), 0.85, 5);
    EXPECT_FALSE(p.abstain);
    EXPECT_EQ(p.predicted_class, 0u);
    EXPECT_EQ(p.score, (ScoreVector{1.0, 0.0}));
}

TEST(LookupVote, TwoToOne) {
    auto kb = vote_kb();
    auto p = lookup_vote(column({"Alien", "Dune", "Heat", "Emma", ""}), kb, two_classes(), 0.85, 5);
    // hand tally: Alien and Heat vote Film, Dune votes Book, Emma is outside the catalog
    EXPECT_EQ(p.predicted_class, 0u);
    EXPECT_NEAR(p.score[0], 2.0 / 3.0, 1e-15);
    EXPECT_NEAR(p.score[1], 1.0 / 3.0, 1e-15);
}

TEST(LookupVote, NoMatchAbstains) {
    auto kb = vote_kb();
    auto p = lookup_vote(column({"qqqq", "Emma"}), kb, two_classes(), 0.85, 5);
    EXPECT_TRUE(p.abstain);
    EXPECT_EQ(p.score, (ScoreVector{0.5, 0.5}));
}

TEST(LookupVote, OneQ1PerClass) {
    auto kb = vote_kb();
    kb::CountingBackend counting(kb);
    LookupVoter voter(counting, two_classes());
    voter.vote(column({"Alien", "Dune"}), 0.85, 5);
    voter.vote(column({"Heat"}), 0.85, 5);
    EXPECT_EQ(counting.q1(), 2u);
    EXPECT_EQ(counting.lookups(), 3u);
}

namespace {

ColumnPrediction pred(const std::string& table, std::size_t cls, bool abstain = false) {
    ColumnPrediction p;
    p.table_id = table;
    p.predicted_class = cls;
    p.score = {cls == 0 ? 0.75 : 0.25, cls == 0 ? 0.25 : 0.75};
    p.abstain = abstain;
    return p;
}

}  // namespace

TEST(Evaluate, AccuracyAndConfusion) {
    auto catalog = two_classes();
    std::vector<ColumnPrediction> preds = {pred("a", 0), pred("b", 1), pred("c", 0), pred("d", 0)};
    std::vector<GoldLabel> gold = {{"a", 0, "Film"}, {"b", 0, "Book"}, {"c", 0, "Film"}, {"d", 0, "Book"}};
    auto r = evaluate(preds, gold, catalog);
    EXPECT_EQ(r.accuracy, 0.75);
    EXPECT_EQ(r.correct, 3u);
    EXPECT_EQ(r.confusion, (std::vector<std::vector<std::size_t>>{{2, 0}, {1, 1}}));
    EXPECT_EQ(r.per_class_correct, (std::vector<std::size_t>{2, 1}));
    EXPECT_EQ(r.per_class_total, (std::vector<std::size_t>{2, 2}));
    auto j = r.to_json();
    EXPECT_EQ(j.at("accuracy"), 0.75);
    EXPECT_NE(r.to_text().find("accuracy 0.7500 (3/4)"), std::string::npos);
}

TEST(Evaluate, AllCorrectAndSelfGold) {
    auto catalog = two_classes();
    std::vector<ColumnPrediction> preds = {pred("a", 0), pred("b", 1)};
    std::vector<GoldLabel> self;
    for (const auto& p : preds) self.push_back({p.table_id, p.column_index, catalog[p.predicted_class].class_id});
    EXPECT_EQ(evaluate(preds, self, catalog).accuracy, 1.0);
}

TEST(Evaluate, AbstentionsCountAsWrong) {
    auto catalog = two_classes();
    auto r = evaluate({pred("a", 0, true), pred("b", 1)}, {{"a", 0, "Film"}, {"b", 0, "Book"}}, catalog);
    EXPECT_EQ(r.accuracy, 0.5);
    EXPECT_EQ(r.abstained, 1u);
}

TEST(Evaluate, MissingPredictionIsAnError) {
    EXPECT_THROW(evaluate({pred("a", 0)}, {{"z", 0, "Film"}}, two_classes()), Error);
}

TEST(PredictionsCsv, RoundTripsExactly) {
    auto catalog = two_classes();
    std::vector<ColumnPrediction> preds = {pred("t,1", 1), pred("t2", 0, true)};
    preds[0].score = {0.1, 0.9000000000000001};
    auto text = predictions_to_csv(preds, catalog, "abc123");
    EXPECT_TRUE(text.starts_with("# fingerprint=abc123\ntable_id,column_index,predicted_class,score_0,score_1\n"));
    auto back = predictions_from_csv(text, catalog);
    EXPECT_EQ(back.fingerprint, "abc123");
    ASSERT_EQ(back.predictions.size(), 2u);
    EXPECT_EQ(back.predictions[0].table_id, "t,1");
    EXPECT_EQ(back.predictions[0].score, preds[0].score);
    EXPECT_EQ(back.predictions[0].predicted_class, 1u);
    EXPECT_TRUE(back.predictions[1].abstain);
    EXPECT_EQ(predictions_to_csv(back.predictions, catalog, "abc123"), text);
    EXPECT_THROW(predictions_from_csv("a,0,Film\n", catalog), ParseError);
}
