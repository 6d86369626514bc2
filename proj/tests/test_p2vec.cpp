#include <gtest/gtest.h>

#include <cmath>

#include "tabsema/p2vec.hpp"
#include "test_support.hpp"

using namespace tabsema;
using namespace tabsema::kb;

namespace {

const std::string kX = "http://x/";

Triple fact(const std::string& s, const std::string& p, TripleObject o) { return {kX + s, kX + p, std::move(o)}; }
Triple typed(const std::string& s, const std::string& c) {
    return {kX + s, std::string(kRdfType), make_entity(kX + c)};
}
Triple labelled(const std::string& s, const std::string& l) {
    return {kX + s, std::string(kRdfsLabel), make_literal(l, "en", "")};
}

MicroTable row(const std::string& main, std::vector<std::string> surrounding) {
    MicroTable mt;
    mt.target.cells = {Cell{main}};
    for (auto& s : surrounding) mt.surrounding.push_back(Column{{Cell{std::move(s)}}, ColumnKind::entity});
    return mt;
}

/// Films with directors and a release date; one book with an author.
std::vector<Triple> film_kb() {
    return {typed("Alien", "Film"),
            labelled("Alien", "Alien"),
            fact("Alien", "director", make_entity(kX + "Scott")),
            fact("Alien", "releaseDate", make_literal("1979-05-25", "", std::string(kXsd) + "date")),
            fact("Alien", "budget", make_literal("11000000", "", std::string(kXsd) + "integer")),
            typed("Scott", "Person"),
            labelled("Scott", "Ridley Scott"),
            typed("Dune", "Book"),
            labelled("Dune", "Dune"),
            fact("Dune", "author", make_entity(kX + "Herbert")),
            labelled("Herbert", "Frank Herbert")};
}

}  // namespace

TEST(CellObjectMatch, NumbersNeedExactEquality) {
    Snapshot kb(film_kb());
    auto n42 = make_literal("42", "", std::string(kXsd) + "integer");
    EXPECT_TRUE(cell_object_match("42", n42, 0.85, kb));
    EXPECT_TRUE(cell_object_match("42.0", n42, 0.85, kb));
    EXPECT_FALSE(cell_object_match("42.0001", n42, 0.85, kb));
    EXPECT_FALSE(cell_object_match("forty two", n42, 0.85, kb));
}

TEST(CellObjectMatch, DatesCompareYears) {
    Snapshot kb(film_kb());
    auto d = make_literal("1997-05-12", "", std::string(kXsd) + "date");
    EXPECT_TRUE(cell_object_match("1997", d, 0.85, kb));
    EXPECT_TRUE(cell_object_match("01/01/1997", d, 0.85, kb));
    EXPECT_FALSE(cell_object_match("1998-05-12", d, 0.85, kb));
    EXPECT_FALSE(cell_object_match("n/a", d, 0.85, kb));
    EXPECT_TRUE(cell_object_match("1997", make_literal("1997-05-12T10:00:00", "", std::string(kXsd) + "dateTime"), 0.85, kb));
}

TEST(CellObjectMatch, EntitiesCompareEnglishLabels) {
    std::vector<Triple> t = {labelled("Apple", "Apple Inc."), {kX + "Apple", std::string(kRdfsLabel), make_literal("Pomme", "fr", "")}};
    Snapshot kb(t);
    auto apple = make_entity(kX + "Apple");
    double sim = testsupport::reference_jaro("apple inc", "apple inc");
    EXPECT_EQ(cell_object_match("Apple Inc", apple, 0.85, kb), sim >= 0.85);
    EXPECT_FALSE(cell_object_match("Pomme", apple, 0.85, kb));
    EXPECT_FALSE(cell_object_match("Apple Inc", make_entity(kX + "Unknown"), 0.85, kb));
}

TEST(CellObjectMatch, TextUsesJaro) {
    Snapshot kb;
    auto text = make_literal("Rock and roll", "en", "");
    EXPECT_TRUE(cell_object_match("rock & roll", text, 0.85, kb) ==
                (testsupport::reference_jaro("rock roll", "rock and roll") >= 0.85));
    EXPECT_TRUE(cell_object_match("Rock and Roll!", text, 0.85, kb));
}

TEST(CellObjectMatch, EmptyCellNeverMatches) {
    Snapshot kb;
    EXPECT_FALSE(cell_object_match("", make_literal("", "en", ""), 0.0, kb));
    EXPECT_FALSE(cell_object_match("  ", make_literal("x", "en", ""), 0.0, kb));
}

TEST(ExtractYear, Forms) {
    EXPECT_EQ(extract_year("1997-05-12"), 1997);
    EXPECT_EQ(extract_year("1997"), 1997);
    EXPECT_EQ(extract_year("1997-05"), 1997);
    EXPECT_EQ(extract_year("-0044"), -44);
    EXPECT_FALSE(extract_year("97"));
    EXPECT_FALSE(extract_year("abc"));
}

TEST(Mining, RatioThreshold) {
    std::vector<Triple> t;
    for (const char* e : {"a", "b", "c", "d"}) t.push_back(typed(e, "C"));
    t.push_back(fact("a", "p", make_literal("1", "", "")));
    t.push_back(fact("b", "p", make_literal("2", "", "")));
    Snapshot kb(t);
    ClassCatalog catalog(std::vector<ClassCatalog::Entry>{{"C", kX + "C"}});
    auto low = mine_candidate_properties(catalog, 0.4, kb);
    EXPECT_NE(low.index(kX + "p"), CandidatePropertySet::npos);
    auto high = mine_candidate_properties(catalog, 0.6, kb);
    EXPECT_EQ(high.index(kX + "p"), CandidatePropertySet::npos);
    EXPECT_EQ(high.properties(), (std::vector<std::string>{std::string(kRdfType)}));
    EXPECT_THROW(mine_candidate_properties(catalog, 1.5, kb), ConfigError);
}

TEST(Mining, SigmaZeroKeepsEverySeenProperty) {
    Snapshot kb(film_kb());
    ClassCatalog catalog({{"Film", kX + "Film"}, {"Book", kX + "Book"}, {"Nothing", kX + "Nothing"}});
    auto props = mine_candidate_properties(catalog, 0.0, kb);
    EXPECT_EQ(props.per_class().at(kX + "Film").size(), 5u);
    EXPECT_TRUE(props.per_class().at(kX + "Nothing").empty());
    EXPECT_TRUE(std::is_sorted(props.properties().begin(), props.properties().end()));
    EXPECT_EQ(props.dim(), 6u);
}

TEST(Mining, MatchesRatioOracleAndQueryCounts) {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        auto fx = testsupport::random_fixture_kb(seed);
        Snapshot snap(fx.triples);
        for (double sigma : {0.0, 0.25, 0.5, 1.0}) {
            CountingBackend counting(snap);
            auto props = mine_candidate_properties(fx.catalog, sigma, counting);
            EXPECT_EQ(props.per_class(), testsupport::oracle_mining(fx.triples, fx.catalog, sigma)) << seed;
            std::set<std::string> all;
            for (const auto& c : fx.catalog.entries()) {
                auto m = testsupport::oracle_members(fx.triples, c.kb_iri);
                all.insert(m.begin(), m.end());
            }
            EXPECT_EQ(counting.q1(), fx.catalog.size());
            EXPECT_EQ(counting.q2(), all.size());
        }
    }
}

TEST(CandidatePropertySet, JsonRoundTripAndIndex) {
    CandidatePropertySet set(0.5, {{"c1", {"p2", "p1"}}, {"c2", {"p3", "p1"}}});
    EXPECT_EQ(set.properties(), (std::vector<std::string>{"p1", "p2", "p3"}));
    EXPECT_EQ(set.index("p3"), 2u);
    EXPECT_EQ(set.index("p0"), CandidatePropertySet::npos);
    auto back = CandidatePropertySet::from_json(set.to_json());
    EXPECT_EQ(back.properties(), set.properties());
    EXPECT_EQ(back.per_class(), set.per_class());
    EXPECT_EQ(back.to_json(), set.to_json());
    EXPECT_THROW(CandidatePropertySet::from_json("{}"), ParseError);
}

TEST(P2Vec, NoLookupMatchGivesZero) {
    Snapshot kb(film_kb());
    CandidatePropertySet props(0.0, {{"f", {kX + "director"}}});
    EXPECT_EQ(p2vec_extract(row("Zzzzzz", {"Ridley Scott"}), props, {}, kb).norm(), 0.0);
}

TEST(P2Vec, SingleSlotIsOne) {
    Snapshot kb(film_kb());
    CandidatePropertySet props(0.0, {{"f", {kX + "author", kX + "director", kX + "releaseDate"}}});
    auto v = p2vec_extract(row("Alien", {"Ridley Scott", "", "unrelated"}), props, {}, kb);
    EXPECT_EQ(v[props.index(kX + "director")], 1.0);
    EXPECT_EQ(v.sum(), 1.0);
}

TEST(P2Vec, FilmRowAgreesWithBruteForce) {
    auto triples = film_kb();
    Snapshot kb(triples);
    ClassCatalog catalog({{"Film", kX + "Film"}, {"Book", kX + "Book"}});
    auto props = mine_candidate_properties(catalog, 0.0, kb);
    auto mt = row("Alien", {"Ridley Scott", "1979", "11000000"});
    auto v = p2vec_extract(mt, props, {}, kb);
    auto expect = testsupport::oracle_p2vec(triples, mt, props.properties(), 0.85, 5);
    ASSERT_EQ(static_cast<std::size_t>(v.size()), expect.size());
    for (std::size_t i = 0; i < expect.size(); ++i) EXPECT_EQ(v[static_cast<long>(i)], expect[i]);
    EXPECT_EQ(v[props.index(kX + "director")], 1.0 / std::sqrt(3.0));
    EXPECT_EQ(v[props.index(kX + "author")], 0.0);
}

TEST(P2Vec, LookupCapLimitsEntities) {
    std::vector<Triple> t = {labelled("a1", "same"), labelled("a2", "same"), fact("a2", "p", make_literal("x", "en", ""))};
    Snapshot kb(t);
    CandidatePropertySet props(0.0, {{"c", {kX + "p"}}});
    EXPECT_EQ(p2vec_extract(row("same", {"x"}), props, {1, 0.85, 0.85}, kb).norm(), 0.0);
    EXPECT_EQ(p2vec_extract(row("same", {"x"}), props, {2, 0.85, 0.85}, kb).norm(), 1.0);
}

TEST(P2Vec, JsonLine) {
    Eigen::VectorXd v(2);
    v << 0.0, 1.0;
    EXPECT_EQ(p2vec_jsonl_line("s1", v), "{\"sample_id\":\"s1\",\"v\":[0.0,1.0]}\n");
}
