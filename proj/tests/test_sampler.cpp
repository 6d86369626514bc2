#include <gtest/gtest.h>

#include "tabsema/sampler.hpp"
#include "test_support.hpp"

using namespace tabsema;

namespace {

Table numbered_table(std::size_t rows, std::size_t cols) {
    std::vector<std::vector<std::string>> columns(cols);
    for (std::size_t c = 0; c < cols; ++c)
        for (std::size_t r = 0; r < rows; ++r) columns[c].push_back("c" + std::to_string(c) + "r" + std::to_string(r));
    return make_table("t", std::move(columns));
}

}  // namespace

TEST(ExtractMicroTables, TwoWindowsForSixRows) {
    auto t = numbered_table(6, 5);
    auto windows = extract_micro_tables(t, 0, 5, 4);
    ASSERT_EQ(windows.size(), 2u);
    EXPECT_EQ(windows[1].target.cells[0].raw_text, "c0r1");
    EXPECT_EQ(windows[1].surrounding[3].cells[4].raw_text, "c4r5");
}

TEST(ExtractMicroTables, ShortColumnIsPadded) {
    auto t = numbered_table(3, 2);
    auto windows = extract_micro_tables(t, 0, 5, 4);
    ASSERT_EQ(windows.size(), 1u);
    const auto& mt = windows[0];
    EXPECT_EQ(mt.target.cells.size(), 5u);
    EXPECT_TRUE(mt.target.cells[3].empty());
    EXPECT_TRUE(mt.target.cells[4].empty());
    EXPECT_TRUE(validate_micro_table(mt, 5, 4).empty());
}

TEST(ExtractMicroTables, LoneTargetGetsEmptySurroundings) {
    auto t = numbered_table(7, 1);
    for (const auto& mt : extract_micro_tables(t, 0, 5, 4)) {
        ASSERT_EQ(mt.surrounding.size(), 4u);
        for (const auto& col : mt.surrounding)
            for (const auto& cell : col.cells) EXPECT_TRUE(cell.empty());
    }
}

TEST(ExtractMicroTables, SurroundingColumnsSkipTheTarget) {
    auto t = numbered_table(5, 4);
    auto mt = extract_micro_tables(t, 2, 5, 2).at(0);
    EXPECT_EQ(mt.target.cells[0].raw_text, "c2r0");
    EXPECT_EQ(mt.surrounding[0].cells[0].raw_text, "c0r0");
    EXPECT_EQ(mt.surrounding[1].cells[0].raw_text, "c1r0");
}

TEST(ExtractMicroTables, Errors) {
    auto t = make_table("t", {{"a", "b"}, {"1", "2"}});
    EXPECT_THROW(extract_micro_tables(t, 5, 5, 4), Error);
    EXPECT_THROW(extract_micro_tables(t, 1, 5, 4), Error);
}

TEST(BuildTrainingSet, CountsWindowsPerColumn) {
    ClassCatalog catalog({{"A", "x:A"}, {"B", "x:B"}});
    auto six = numbered_table(6, 2);
    auto five = numbered_table(5, 2);
    auto samples = build_training_set({{&six, 0, "B"}}, catalog, 5, 4);
    ASSERT_EQ(samples.size(), 2u);
    EXPECT_EQ(samples[0].label, 1u);
    EXPECT_EQ(samples[1].label, 1u);
    EXPECT_TRUE(build_training_set({}, catalog, 5, 4).empty());
    EXPECT_EQ(build_training_set({{&five, 0, "A"}, {&five, 1, "B"}}, catalog, 5, 4).size(), 2u);
    EXPECT_THROW(build_training_set({{&five, 0, "C"}}, catalog, 5, 4), ConfigError);
}

TEST(SplitDataset, FloorRule) {
    std::vector<int> ten(10), paper(411);
    auto [a, b] = split_dataset(ten, {1, 0.7});
    EXPECT_EQ(a.size(), 7u);
    EXPECT_EQ(b.size(), 3u);
    auto [c, d] = split_dataset(paper, {1, 0.7});
    EXPECT_EQ(c.size(), 287u);
    EXPECT_EQ(d.size(), 124u);
}

TEST(SplitDataset, DeterministicPartition) {
    std::vector<int> items(50);
    for (int i = 0; i < 50; ++i) items[i] = i;
    auto first = split_dataset(items, {9, 0.7});
    auto second = split_dataset(items, {9, 0.7});
    EXPECT_EQ(first, second);
    std::vector<int> all = first.first;
    all.insert(all.end(), first.second.begin(), first.second.end());
    std::sort(all.begin(), all.end());
    EXPECT_EQ(all, items);
    EXPECT_NE(split_dataset(items, {10, 0.7}).first, first.first);
    EXPECT_THROW(split_dataset(items, {1, 1.0}), ConfigError);
}

TEST(Samples, JsonlRoundTrip) {
    ClassCatalog catalog(std::vector<ClassCatalog::Entry>{{"A", "x:A"}});
    auto t = numbered_table(6, 3);
    auto samples = build_training_set({{&t, 1, "A"}}, catalog, 5, 4);
    auto back = samples_from_jsonl(samples_to_jsonl(samples));
    ASSERT_EQ(back.size(), samples.size());
    for (std::size_t i = 0; i < back.size(); ++i) {
        EXPECT_EQ(back[i].micro_table, samples[i].micro_table);
        EXPECT_EQ(back[i].label, samples[i].label);
    }
}
