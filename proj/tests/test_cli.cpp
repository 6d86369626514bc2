#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>

#include "tabsema/p2vec.hpp"
#include "tabsema/table.hpp"
#include "test_support.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run(const std::string& args, const fs::path& dir) {
    auto out = dir / "stdout.txt", err = dir / "stderr.txt";
    std::string cmd = std::string(TABSEMA_CLI) + " " + args + " >" + out.string() + " 2>" + err.string();
    int status = std::system(cmd.c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, tabsema::read_file(out), tabsema::read_file(err)};
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

const std::string kSmall = "--m 4 --l 2 --T 4 --H 6 --A 4 --epochs 2 --base-epochs 5";

class Cli : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        dir_ = testsupport::temp_dir("cli");
        auto r = run("synth --out " + (dir_ / "d").string() + " --columns 16 --entities 10", dir_);
        ASSERT_EQ(r.code, 0) << r.err;
    }
    static fs::path d(const std::string& name) { return dir_ / "d" / name; }
    static fs::path dir_;
};

fs::path Cli::dir_;

}  // namespace

TEST_F(Cli, SnapshotBuild) {
    auto r = run("snapshot-build " + d("kb.nt").string() + " " + (dir_ / "kb.snap").string(), dir_);
    EXPECT_EQ(r.code, 0) << r.err;
    EXPECT_TRUE(fs::exists(dir_ / "kb.snap"));

    write(dir_ / "empty.nt", "");
    EXPECT_EQ(run("snapshot-build " + (dir_ / "empty.nt").string() + " " + (dir_ / "e.snap").string(), dir_).code,
              0);

    write(dir_ / "bad.nt", "<http://a> <http://b> <http://c> .\n<http://a> <http://b> \"x .\n");
    r = run("snapshot-build " + (dir_ / "bad.nt").string() + " " + (dir_ / "b.snap").string(), dir_);
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("2"), std::string::npos) << r.err;
}

TEST_F(Cli, MinePropertiesMatchesOracle) {
    auto universal = [](const testsupport::FixtureKb& fx) {
        std::set<std::string> out;
        for (const auto& [cls, props] : testsupport::oracle_mining(fx.triples, fx.catalog, 1.0))
            out.insert(props.begin(), props.end());
        return out;
    };
    // a fixture where only rdf:type is held by every member of each class
    testsupport::FixtureKb fx;
    for (std::uint64_t seed = 1; seed < 100; ++seed) {
        fx = testsupport::random_fixture_kb(seed);
        if (universal(fx) == std::set<std::string>{std::string(tabsema::kb::kRdfType)}) break;
    }
    ASSERT_EQ(universal(fx).size(), 1u);
    write(dir_ / "fx.nt", tabsema::kb::to_ntriples(fx.triples));
    fx.catalog.save(dir_ / "fx.csv");
    auto mine = [&](const std::string& sigma, const std::string& out) {
        return run("--kb snapshot:" + (dir_ / "fx.nt").string() + " --sigma " + sigma + " mine-properties --catalog " +
                       (dir_ / "fx.csv").string() + " --out " + (dir_ / out).string(),
                   dir_);
    };
    std::set<std::string> expected;
    for (const auto& [cls, props] : testsupport::oracle_mining(fx.triples, fx.catalog, 0.5))
        expected.insert(props.begin(), props.end());
    auto a = mine("0.5", "p1.json");
    ASSERT_EQ(a.code, 0) << a.err;
    EXPECT_EQ(a.out, std::to_string(expected.size()) + "\n");
    auto b = mine("0.5", "p2.json");
    EXPECT_EQ(a.out, b.out);
    EXPECT_EQ(tabsema::read_file(dir_ / "p1.json"), tabsema::read_file(dir_ / "p2.json"));

    auto all = mine("1.0", "p3.json");
    EXPECT_EQ(all.code, 0);
    EXPECT_EQ(all.out, "1\n");
    EXPECT_EQ(tabsema::CandidatePropertySet::load(dir_ / "p3.json").properties(),
              (std::vector<std::string>{std::string(tabsema::kb::kRdfType)}));
}

TEST_F(Cli, MissingCheckpointIsAConfigError) {
    fs::create_directories(dir_ / "nomodel");
    auto r = run("predict --model " + (dir_ / "nomodel").string() + " --tables " + d("tables").string() +
                     " --catalog " + d("catalog.csv").string() + " --embeddings " + d("embeddings.txt").string() +
                     " --out " + (dir_ / "x.csv").string(),
                 dir_);
    EXPECT_EQ(r.code, 3) << r.err;
}

TEST_F(Cli, UnknownOptionIsAParseError) {
    EXPECT_EQ(run("train --no-such-flag", dir_).code, 2);
    EXPECT_EQ(run("", dir_).code, 2);
}

TEST_F(Cli, TrainPredictEvaluate) {
    auto model = dir_ / "model";
    auto r = run(kSmall + " train --tables " + d("tables").string() + " --gold " + d("gold.csv").string() +
                     " --catalog " + d("catalog.csv").string() + " --embeddings " + d("embeddings.txt").string() +
                     " --out " + model.string(),
                 dir_);
    ASSERT_EQ(r.code, 0) << r.err;
    auto preds = dir_ / "preds.csv";
    r = run("predict --model " + model.string() + " --tables " + d("tables").string() + " --gold " +
                d("gold.csv").string() + " --catalog " + d("catalog.csv").string() + " --embeddings " +
                d("embeddings.txt").string() + " --out " + preds.string(),
            dir_);
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(r.out, "16 columns\n");

    auto eval = "evaluate --predictions " + preds.string() + " --gold " + d("gold.csv").string() + " --catalog " +
                d("catalog.csv").string();
    r = run(eval + " --model " + model.string() + " --report " + (dir_ / "report.json").string(), dir_);
    EXPECT_EQ(r.code, 0) << r.err;
    EXPECT_TRUE(r.out.starts_with("accuracy "));
    EXPECT_TRUE(fs::exists(dir_ / "report.json"));

    // without --model the expected fingerprint comes from the (different) default flags
    r = run(eval, dir_);
    EXPECT_EQ(r.code, 3);
    EXPECT_NE(r.err.find("fingerprint mismatch"), std::string::npos);
    EXPECT_EQ(run(eval + " --force", dir_).code, 0);
}

TEST_F(Cli, ConfigFileWithFlagOverride) {
    write(dir_ / "run.ini", "seed = 9\nm = 4\nl = 2\nT = 4\nH = 6\nA = 4\nepochs = 1\n");
    auto base = "--config " + (dir_ / "run.ini").string() + " ";
    auto train = [&](const std::string& extra, const std::string& out) {
        return run(base + extra + " train --tables " + d("tables").string() + " --gold " + d("gold.csv").string() +
                       " --catalog " + d("catalog.csv").string() + " --embeddings " +
                       d("embeddings.txt").string() + " --out " + (dir_ / out).string(),
                   dir_);
    };
    auto a = train("", "c1");
    ASSERT_EQ(a.code, 0) << a.err;
    auto b = train("", "c2");
    EXPECT_EQ(a.out, b.out);
    auto c = train("--H 7", "c3");
    ASSERT_EQ(c.code, 0) << c.err;
    EXPECT_NE(a.out, c.out);
    auto run_json = tabsema::read_file(dir_ / "c3" / "run.json");
    EXPECT_NE(run_json.find("\"H\": 7"), std::string::npos) << run_json;
    EXPECT_NE(run_json.find("\"seed\": 9"), std::string::npos) << run_json;
}
