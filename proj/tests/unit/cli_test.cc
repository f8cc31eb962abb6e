#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "cli.h"
#include "fixtures.h"
#include "json.hpp"

namespace screensum::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Result {
  int status;
  std::string out, err;
};

Result invoke(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int status = run(args, out, err);
  return {status, out.str(), err.str()};
}

json read_json(const fs::path& p) {
  std::ifstream in(p);
  return json::parse(in);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class CliFlow : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = screensum::testing::temp_dir("cli");
    const auto r = invoke({"synth", "--episodes", "4", "--scenes", "20", "--dim", "8", "--seed", "3", "--out",
                           (dir_ / "data").string()});
    ASSERT_EQ(r.status, 0) << r.err;
  }
  static fs::path data(const std::string& f) { return dir_ / "data" / f; }
  static inline fs::path dir_;
};

TEST(Hashing, Fnv1aReferenceValues) {
  EXPECT_EQ(fnv1a(""), 0xcbf29ce484222325ull);
  EXPECT_EQ(fnv1a("a"), 0xaf63dc4c8601ec8cull);
  EXPECT_EQ(fnv1a("foobar"), 0x85944171f73967e8ull);
}

TEST(Values, RangesAndLists) {
  const auto r = parse_values("0.1:0.5:0.1");
  ASSERT_EQ(r.size(), 5u);
  EXPECT_DOUBLE_EQ(r[2], 0.3);
  EXPECT_DOUBLE_EQ(r.back(), 0.5);
  EXPECT_EQ(parse_values("0.2,0.7"), (std::vector<double>{0.2, 0.7}));
  EXPECT_ANY_THROW(parse_values("1:0:0.1"));
  EXPECT_ANY_THROW(parse_values("a,b"));
}

TEST_F(CliFlow, SynthWritesManifestWithHashes) {
  const json m = read_json(dir_ / "data" / "manifest.json");
  EXPECT_EQ(m["command"], "synth");
  for (const char* f : {"corpus.jsonl", "silver.jsonl", "embeddings.bin"}) {
    ASSERT_TRUE(m["outputs"].contains(f)) << f;
    EXPECT_EQ(m["outputs"][f], file_hash(data(f)));
  }
}

TEST_F(CliFlow, SummarizeThenEvaluate) {
  const fs::path out = dir_ / "lead";
  auto r = invoke({"summarize", "--corpus", data("corpus.jsonl").string(), "--algo", "lead", "--out", out.string()});
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_TRUE(fs::exists(out / "summaries" / "summaries.jsonl"));
  const json report = read_json(out / "report.json");
  ASSERT_TRUE(report.contains("macro_f1"));

  r = invoke({"evaluate", "--corpus", data("corpus.jsonl").string(), "--summaries",
              (out / "summaries" / "summaries.jsonl").string(), "--out", (dir_ / "eval").string()});
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_EQ(read_json(dir_ / "eval" / "report.json")["macro_f1"], report["macro_f1"]);
}

TEST_F(CliFlow, SummerUnsupWithoutCheckpointFails) {
  const auto r = invoke({"summarize", "--corpus", data("corpus.jsonl").string(), "--embeddings",
                         data("embeddings.bin").string(), "--algo", "summer-unsup", "--out", (dir_ / "x").string()});
  EXPECT_EQ(r.status, 2);
  EXPECT_NE(r.err.find("error:"), std::string::npos);
}

TEST_F(CliFlow, BadFlagsAreParseErrors) {
  EXPECT_NE(invoke({"summarize", "--corpus", data("corpus.jsonl").string(), "--algo", "nope"}).status, 0);
  EXPECT_NE(invoke({"cv", "--corpus", data("corpus.jsonl").string(), "--k", "1", "--gold-oracle"}).status, 0);
  EXPECT_NE(invoke({}).status, 0);
}

TEST_F(CliFlow, CvGoldOracle) {
  const auto r = invoke({"cv", "--corpus", data("corpus.jsonl").string(), "--gold-oracle", "--k", "2", "--out",
                         (dir_ / "gold").string()});
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_DOUBLE_EQ(read_json(dir_ / "gold" / "report.json")["macro_f1"].get<double>(), 100.0);
}

TEST_F(CliFlow, ManifestConfigReplays) {
  const fs::path a = dir_ / "sweep-a", b = dir_ / "sweep-b";
  auto r = invoke({"sweep", "--corpus", data("corpus.jsonl").string(), "--embeddings", data("embeddings.bin").string(),
                   "--param", "ratio", "--values", "0.2,0.4", "--out", a.string()});
  ASSERT_EQ(r.status, 0) << r.err;
  const json ma = read_json(a / "manifest.json");
  {
    std::ofstream cfg(dir_ / "replay.toml");
    cfg << ma["config"].get<std::string>();
  }
  r = invoke({"--config", (dir_ / "replay.toml").string(), "sweep", "--out", b.string()});
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_EQ(read_json(b / "manifest.json")["outputs"], ma["outputs"]);
}

TEST_F(CliFlow, ExecutableRuns) {
  const std::string cmd = std::string(SCREENSUM_CLI_PATH) + " --help > " + (dir_ / "help.txt").string();
  EXPECT_EQ(std::system(cmd.c_str()), 0);
  EXPECT_NE(slurp(dir_ / "help.txt").find("summarize"), std::string::npos);
}

}  // namespace
}  // namespace screensum::cli
