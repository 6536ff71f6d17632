#include <gtest/gtest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include "stablemv/experiments.hpp"
#include "stablemv/io.hpp"

using namespace stablemv;
namespace fs = std::filesystem;

namespace {

struct Run {
  int status = -1;
  std::string out, err;
};

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("stablemv_cli_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

Run cli(const std::string& args, const fs::path& dir, const std::string& env = "") {
  const fs::path out = dir / "stdout.txt", err = dir / "stderr.txt";
  const std::string cmd = env + " '" + std::string(STABLEMV_CLI_PATH) + "' " + args + " >'" + out.string() + "' 2>'" +
                          err.string() + "'";
  const int raw = std::system(cmd.c_str());
  Run r;
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  r.out = read_text_file(out);
  r.err = read_text_file(err);
  return r;
}

std::vector<fs::path> runs_in(const fs::path& root) {
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(root))
    if (e.is_directory()) out.push_back(e.path());
  return out;
}

std::size_t lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

TEST(Cli, SameConfigAndSeedAreByteIdentical) {
  const auto dir = scratch("repro");
  const std::vector<std::string> commands{
      "sample --n 500 --dim 3 --alpha 1.3 --seed 9",
      "simulate --N 200 --M 10 --paths_every 50 --seed 9",
      "picard --N 300 --M 10 --delta auto --max_iter 4 --seed 9",
      "probe --case frac --N 2000 --lags 0.05,0.3,2 --half_points 100 --grid_factor 0.1 --seed 9",
      "counterexample --N 500 --M 10 --wasserstein_points 500 --seed 9",
  };
  for (const auto& c : commands) {
    ASSERT_EQ(cli(c + " --output-root '" + (dir / "a").string() + "'", dir).status, 0) << c;
    ASSERT_EQ(cli(c + " --output-root '" + (dir / "b").string() + "'", dir).status, 0) << c;
  }
  const auto a = runs_in(dir / "a");
  ASSERT_EQ(a.size(), commands.size());
  for (const auto& p : a) {
    const auto twin = dir / "b" / p.filename();
    ASSERT_TRUE(fs::exists(twin)) << p;
    EXPECT_TRUE(compare_run_outputs(p, twin).empty()) << p;
  }
}

TEST(Cli, DifferentSeedsGiveDifferentRuns) {
  const auto dir = scratch("seeds");
  const std::string root = " --output-root '" + (dir / "r").string() + "'";
  ASSERT_EQ(cli("sample --n 20 --seed 1" + root, dir).status, 0);
  ASSERT_EQ(cli("sample --n 20 --seed 2" + root, dir).status, 0);
  const auto r = runs_in(dir / "r");
  ASSERT_EQ(r.size(), 2u);
  EXPECT_FALSE(compare_run_outputs(r[0], r[1]).empty());
}

TEST(Cli, UnknownModelNamesTheField) {
  const auto dir = scratch("model");
  const auto r = cli("simulate --model nope --output-root '" + (dir / "r").string() + "'", dir);
  EXPECT_EQ(r.status, 2);
  EXPECT_NE(r.err.find("config field 'model'"), std::string::npos) << r.err;
  EXPECT_TRUE(runs_in(dir / "r").empty());
}

TEST(Cli, ConfigFileErrorsNameNestedPaths) {
  const auto dir = scratch("nested");
  write_text_file(dir / "bad.json", R"({"schema_version": 1, "distance": {"exact_max": "big"}})");
  auto r = cli("picard --config '" + (dir / "bad.json").string() + "' --output-root '" + (dir / "r").string() + "'",
               dir);
  EXPECT_EQ(r.status, 2);
  EXPECT_NE(r.err.find("'distance.exact_max'"), std::string::npos) << r.err;

  write_text_file(dir / "typo.json", R"({"alpah": 1.2})");
  r = cli("sample --config '" + (dir / "typo.json").string() + "' --output-root '" + (dir / "r").string() + "'", dir);
  EXPECT_EQ(r.status, 2);
  EXPECT_NE(r.err.find("'alpah': unknown field"), std::string::npos) << r.err;

  write_text_file(dir / "version.json", R"({"schema_version": 7})");
  r = cli("sample --config '" + (dir / "version.json").string() + "' --output-root '" + (dir / "r").string() + "'",
          dir);
  EXPECT_EQ(r.status, 2);
  EXPECT_NE(r.err.find("'schema_version'"), std::string::npos) << r.err;
}

TEST(Cli, FlagsOverrideConfigFileOverridesDefaults) {
  const auto dir = scratch("precedence");
  write_text_file(dir / "c.json", R"({"n": 7, "dim": 2})");
  ASSERT_EQ(cli("sample --config '" + (dir / "c.json").string() + "' --n 9 --output-root '" + (dir / "r").string() +
                    "'",
                dir)
                .status,
            0);
  const auto r = runs_in(dir / "r");
  ASSERT_EQ(r.size(), 1u);
  const auto csv = read_text_file(r[0] / "samples.csv");
  EXPECT_EQ(lines(csv), 10u);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "index,x_1,x_2");
  const auto manifest = Json::parse(read_text_file(r[0] / "manifest.json"));
  EXPECT_EQ(manifest["config"]["n"], 9);
  EXPECT_EQ(manifest["config"]["dim"], 2);
  EXPECT_EQ(manifest["config"]["alpha"], 1.0);
  EXPECT_EQ(manifest["config"]["schema_version"], kConfigSchemaVersion);
  EXPECT_EQ(manifest["run_id"], r[0].filename().string());
  EXPECT_EQ(manifest["files"], Json::array({"samples.csv"}));
  EXPECT_TRUE(manifest["runtime_seconds"].is_number());
}

TEST(Cli, OutputRootFromEnvironment) {
  const auto dir = scratch("env");
  const auto root = dir / "from_env";
  ASSERT_EQ(cli("sample --n 3", dir, std::string(kOutputRootEnv) + "='" + root.string() + "'").status, 0);
  EXPECT_EQ(runs_in(root).size(), 1u);
}

TEST(Cli, WassPrintsPrimalAndDualBound) {
  const auto dir = scratch("wass");
  const std::string root = " --output-root '" + (dir / "r").string() + "'";
  write_text_file(dir / "mu.csv", "x_1\n0\n1\n2\n");
  write_text_file(dir / "nu.csv", "index,x_1\n0,0.5\n1,1.5\n2,2.5\n");
  const auto r = cli("wass --kappa 1 --mu '" + (dir / "mu.csv").string() + "' --nu '" + (dir / "nu.csv").string() +
                         "'" + root,
                     dir);
  ASSERT_EQ(r.status, 0) << r.err;
  const auto j = Json::parse(r.out.substr(0, r.out.rfind('}') + 1));
  EXPECT_NEAR(j["primal"].get<double>(), 0.5, 1e-12);
  EXPECT_LE(j["dual_lower_bound"].get<double>(), 0.5 + 1e-12);
  write_text_file(dir / "bad.csv", "x_1\n0\nzero\n");
  const auto bad = cli("wass --mu '" + (dir / "bad.csv").string() + "' --nu '" + (dir / "nu.csv").string() + "'" +
                           root,
                       dir);
  EXPECT_NE(bad.status, 0);
  EXPECT_NE(bad.err.find("bad.csv:3"), std::string::npos) << bad.err;
}

TEST(Cli, ListsRecipes) {
  const auto dir = scratch("list");
  const auto r = cli("--list-recipes", dir);
  EXPECT_EQ(r.status, 0);
  for (const char* n : {"c1_charfn", "c6_picard", "c9_counterexample", "c11_reproducibility"})
    EXPECT_NE(r.out.find(n), std::string::npos) << n;
  EXPECT_EQ(cli("--recipe c99", dir).status, 2);
}

TEST(Cli, RecipeWritesResult) {
  const auto dir = scratch("recipe");
  const auto r = cli("--recipe c4_wasserstein_exact --output-root '" + (dir / "r").string() + "'", dir);
  EXPECT_EQ(r.status, 0) << r.err;
  EXPECT_EQ(r.out.rfind("PASS c4_wasserstein_exact", 0), 0u) << r.out;
  const auto runs = runs_in(dir / "r");
  ASSERT_EQ(runs.size(), 1u);
  EXPECT_TRUE(Json::parse(read_text_file(runs[0] / "result.json"))["passed"].get<bool>());
}

TEST(Config, MergeReportsPathsAndKeepsTypes) {
  const Json defaults{{"alpha", 1.0}, {"N", 10}, {"name", "x"}, {"distance", {{"exact_max", 5}}}};
  const Json merged = merge_config(defaults, Json{{"alpha", 1}, {"distance", {{"exact_max", 7}}}});
  EXPECT_TRUE(merged["alpha"].is_number_float());
  EXPECT_EQ(merged["distance"]["exact_max"], 7);
  auto path_of = [&](const Json& over) {
    try {
      merge_config(defaults, over);
    } catch (const ConfigError& e) {
      return e.path();
    }
    return std::string("<none>");
  };
  EXPECT_EQ(path_of(Json{{"N", 1.5}}), "N");
  EXPECT_EQ(path_of(Json{{"name", 3}}), "name");
  EXPECT_EQ(path_of(Json{{"distance", {{"other", 1}}}}), "distance.other");
  EXPECT_EQ(path_of(Json{{"distance", 3}}), "distance");
  EXPECT_EQ(path_of(Json::array()), "<root>");
  EXPECT_EQ(merge_config(defaults, Json{{"N", "auto"}}, {"N"})["N"], "auto");
}

TEST(Config, RunIdDependsOnEveryResolvedField) {
  const Json a = resolve_config("sample", Json(), Json{{"seed", 1}});
  const Json b = resolve_config("sample", Json(), Json{{"seed", 2}});
  const Json c = resolve_config("sample", Json{{"seed", 1}}, Json());
  EXPECT_EQ(run_id(a), run_id(c));
  EXPECT_NE(run_id(a), run_id(b));
  EXPECT_EQ(run_id(a).size(), 12u);
  EXPECT_THROW(resolve_config("nonsense", Json(), Json()), InvalidArgument);
}

TEST(RunDirectory, UncommittedRunLeavesNothing) {
  const auto root = scratch("partial");
  {
    RunDirectory dir(root, Json{{"k", 1}});
    dir.write("a.csv", "x\n");
  }
  EXPECT_TRUE(runs_in(root).empty());
  EXPECT_TRUE(fs::is_empty(root));
  RunDirectory dir(root, Json{{"k", 1}});
  dir.write("sub/b.txt", "y");
  EXPECT_THROW(dir.write("manifest.json", "{}"), InvalidArgument);
  const auto p = dir.commit();
  EXPECT_EQ(read_text_file(p / "sub/b.txt"), "y");
  EXPECT_THROW(dir.write("c.txt", "z"), InvalidArgument);
}

TEST(Config, ShippedConfigsValidate) {
  const fs::path dir = fs::path(__FILE__).parent_path().parent_path() / "configs";
  ASSERT_TRUE(fs::is_directory(dir));
  std::size_t seen = 0;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().extension() != ".json") continue;
    ++seen;
    const Json file = load_config_file(e.path());
    bool matched = false;
    for (const auto& sc : subcommands()) {
      try {
        resolve_config(sc.name, file, Json());
        matched = true;
        break;
      } catch (const ConfigError&) {
      }
    }
    EXPECT_TRUE(matched) << e.path();
  }
  EXPECT_GE(seen, 7u);
}
