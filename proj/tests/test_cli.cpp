#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("janus_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int sh(const std::string& args) {
  std::string cmd = std::string(JANUS_CLI) + " " + args + " >/dev/null 2>&1";
  int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream f(p);
  f << text;
}

const char* kTiny =
    "[run]\nseed = 4\ngenerations = 2\npopulation_size = 10\nrandom_length = 10\n"
    "[mutation]\nnum_reorderings = 3\n[crossover]\nnum_paths = 2\npairs = 2\n";

TEST(Cli, MissingConfigIsExitTwo) {
  EXPECT_EQ(sh("run --config /no/such/file.toml"), 2);
  EXPECT_EQ(sh("run"), 2);
  EXPECT_EQ(sh("frobnicate"), 2);
  EXPECT_EQ(sh(""), 2);
}

TEST(Cli, UnknownKeyIsExitTwo) {
  fs::path dir = scratch("badkey");
  write_file(dir / "c.toml", "[run]\ngenerashuns = 3\n");
  EXPECT_EQ(sh("run --config " + (dir / "c.toml").string()), 2);
}

TEST(Cli, RunTwiceIsIdentical) {
  fs::path dir = scratch("twice");
  write_file(dir / "c.toml", kTiny);
  ASSERT_EQ(sh("run --config " + (dir / "c.toml").string() + " --out " + (dir / "a").string()), 0);
  ASSERT_EQ(sh("run --config " + (dir / "c.toml").string() + " --out " + (dir / "b").string() + " --threads 3"), 0);
  for (const char* f : {"records.jsonl", "evaluations.tsv", "progress.csv", "final_explore.txt", "final_exploit.txt"}) {
    std::string a = slurp(dir / "a" / f);
    EXPECT_FALSE(a.empty()) << f;
    EXPECT_EQ(a, slurp(dir / "b" / f)) << f;
  }
  EXPECT_TRUE(fs::exists(dir / "a" / "config.toml"));
}

TEST(Cli, GenerationsZero) {
  fs::path dir = scratch("gen0");
  write_file(dir / "c.toml", kTiny);
  ASSERT_EQ(sh("run --config " + (dir / "c.toml").string() + " --generations 0 --out " + (dir / "r").string()), 0);
  std::string rec = slurp(dir / "r" / "records.jsonl");
  EXPECT_EQ(std::count(rec.begin(), rec.end(), '\n'), 1);
  EXPECT_EQ(nlohmann::json::parse(rec)["generation"].get<int>(), 0);
}

TEST(Cli, ExternalStubEndToEnd) {
  fs::path dir = scratch("external");
  write_file(dir / "c.toml", std::string(kTiny) + "[fitness]\nkind = \"external\"\ncommand = \"" + JANUS_STUB_EVALUATOR +
                                 "\"\ntimeout_seconds = 20\n");
  ASSERT_EQ(sh("run --config " + (dir / "c.toml").string() + " --out " + (dir / "r").string()), 0);
  std::ifstream in(dir / "r" / "evaluations.tsv");
  std::string line;
  std::getline(in, line);
  int rows = 0;
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    std::string idx, smi, fit;
    std::getline(ss, idx, '\t');
    std::getline(ss, smi, '\t');
    std::getline(ss, fit, '\t');
    EXPECT_DOUBLE_EQ(std::stod(fit), -static_cast<double>(smi.size()));
    ++rows;
  }
  EXPECT_GT(rows, 10);
}

TEST(Cli, BenchLogpAndBaselineCompare) {
  fs::path dir = scratch("bench");
  write_file(dir / "c.toml", kTiny);
  ASSERT_EQ(sh("bench-logp --config " + (dir / "c.toml").string() + " --repeats 2 --out " + (dir / "b").string()), 0);
  auto rep = nlohmann::json::parse(slurp(dir / "b" / "report.json"));
  EXPECT_EQ(rep["runs"].size(), 2u);
  ASSERT_EQ(sh("baseline --config " + (dir / "c.toml").string() + " --compare " + (dir / "b" / "run_0").string() +
               " --out " + (dir / "base").string()),
            0);
  std::string csv = slurp(dir / "base" / "comparison.csv");
  EXPECT_EQ(csv.rfind("evaluations,janus_best,baseline_best\n", 0), 0u);
  std::string ev = slurp(dir / "b" / "run_0" / "evaluations.tsv");
  // one CSV row per GA evaluation (same budget)
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), std::count(ev.begin(), ev.end(), '\n'));
  EXPECT_EQ(sh("baseline --config " + (dir / "c.toml").string()), 2);
}

TEST(Cli, ConstrainedNormalizeFragmentsMetrics) {
  fs::path dir = scratch("tools");
  write_file(dir / "c.toml", kTiny);
  write_file(dir / "start.smi", "CC(=O)Nc1ccc(O)cc1\n");
  ASSERT_EQ(sh("bench-constrained --config " + (dir / "c.toml").string() + " --molecules " + (dir / "start.smi").string() +
               " --delta 0.6 --out " + (dir / "cons").string()),
            0);
  auto rep = nlohmann::json::parse(slurp(dir / "cons" / "report.json"));
  EXPECT_DOUBLE_EQ(rep["delta"].get<double>(), 0.6);

  std::string corpus = std::string(JANUS_TEST_DATA_DIR) + "/corpus.smi";
  ASSERT_EQ(sh("normalize --corpus " + corpus + " --out " + (dir / "n.json").string()), 0);
  ASSERT_EQ(sh("normalize --corpus " + corpus + " --out " + (dir / "n2.json").string()), 0);
  EXPECT_EQ(slurp(dir / "n.json"), slurp(dir / "n2.json"));
  auto n = nlohmann::json::parse(slurp(dir / "n.json"));
  EXPECT_GT(n["logp"]["std"].get<double>(), 0.0);

  write_file(dir / "norm.toml", std::string(kTiny) + "[fitness]\nscale = \"normalized\"\nnormalization_file = \"n.json\"\n");
  ASSERT_EQ(sh("run --config " + (dir / "norm.toml").string() + " --out " + (dir / "nr").string()), 0);

  ASSERT_EQ(sh("fragments --corpus " + corpus + " --out " + (dir / "f.tsv").string()), 0);
  write_file(dir / "frag.toml",
             "[run]\nseed = 4\ngenerations = 2\npopulation_size = 10\n[mutation]\nnum_reorderings = 3\n"
             "fragments_file = \"f.tsv\"\nfragment_bias = 0.5\n[crossover]\nnum_paths = 2\npairs = 2\n");
  ASSERT_EQ(sh("run --config " + (dir / "frag.toml").string() + " --out " + (dir / "fr").string()), 0);

  ASSERT_EQ(sh("metrics --generated " + (dir / "fr").string() + " --refs " + corpus + " --out " +
               (dir / "m.json").string()),
            0);
  auto m = nlohmann::json::parse(slurp(dir / "m.json"));
  EXPECT_GE(m["diversity"].get<double>(), 0.0);
  EXPECT_TRUE(m["novelty"].is_number());
  EXPECT_EQ(sh("metrics --generated /no/such/dir"), 2);
}

}  // namespace
