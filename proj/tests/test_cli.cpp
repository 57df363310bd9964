#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "brwlab/config.hpp"
#include "brwlab/io.hpp"

using namespace brw;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& tag) {
  const fs::path dir = fs::temp_directory_path() / ("brwlab_test_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path);
  out << content;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(BRWLAB_BIN) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

const char* kBasicConfig = R"(# test model
[model]
name = binary-gaussian
[execution]
seed = 42
walk_budget = 20000
replications = 500
workers = 2
out_dir = OUTDIR
)";

}  // namespace

TEST_CASE("config parsing: defaults, grids, and rejection of unknown keys") {
  const auto cfg = parse_config_text("[model]\nname = poisson-gaussian\nm = 1.5\n"
                                     "[experiment]\nn = 14\nz_min = 1.0\nz_max = 2.0\n"
                                     "z_step = 0.5\n[execution]\nseed = 9\n",
                                     "inline");
  CHECK(cfg.model_name == "poisson-gaussian");
  CHECK(cfg.poisson_m == 1.5);
  CHECK(cfg.n == 14);
  CHECK(cfg.seed == 9);
  const auto grid = cfg.z_grid();
  REQUIRE(grid.size() == 3);
  CHECK(grid[0] == 1.0);
  CHECK(grid[2] == 2.0);

  CHECK_THROWS_AS(parse_config_text("[model]\nbogus = 1\n", "inline"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("[nonsense]\n", "inline"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("name = x\n", "inline"), ConfigError);
  try {
    parse_config_text("[model]\nname = binary-gaussian\n\nbad_key = 3\n", "file.ini");
    CHECK(false);
  } catch (const ConfigError& e) {
    // Errors carry the file name and line number.
    CHECK(std::string(e.what()).find("file.ini:4") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_config_text("[model]\nname = binary-gaussian\n"
                                    "[execution]\nprune = sometimes\n",
                                    "inline"),
                  ConfigError);
}

TEST_CASE("config to model and policy") {
  auto cfg = parse_config_text("[model]\nname = binary-gaussian\n"
                               "[execution]\nprune = barrier\nprune_lambda = 8.5\n",
                               "inline");
  const auto model = cfg.make_model();
  CHECK(model.name == "binary-gaussian");
  const auto policy = cfg.make_policy();
  CHECK(policy.mode == PrunePolicy::Mode::Barrier);
  CHECK(policy.barrier_offset == 8.5);
  cfg.model_name = "no-such-model";
  CHECK_THROWS_AS(cfg.make_model(), ConfigError);
}

TEST_CASE("csv table formatting is stable") {
  std::vector<CsvRow> rows{{1.5, 12, 0.25, 0.001, 1000, "spine", 0xABCDULL, 42}};
  const std::string csv = csv_table(rows);
  CHECK(csv.find("z,n,estimate,stderr,replications,estimator_kind,model_hash,seed,"
                 "schema_version\n") == 0);
  CHECK(csv.find("1.5,12,0.25,0.001,1000,spine,000000000000abcd,42,1") !=
        std::string::npos);
}

TEST_CASE("atomic_write leaves no temp files behind") {
  const auto dir = temp_dir("atomic");
  atomic_write(dir / "out.json", "{}\n");
  CHECK(fs::exists(dir / "out.json"));
  CHECK_FALSE(fs::exists(dir / "out.json.tmp"));
  // Overwrite works on existing files too.
  atomic_write(dir / "out.json", "{\"a\":1}\n");
  CHECK(read_file(dir / "out.json") == "{\"a\":1}\n");
  fs::remove_all(dir);
}

TEST_CASE("cli exit codes") {
  const auto dir = temp_dir("cli");
  SUBCASE("missing config file exits 2 and writes nothing") {
    CHECK(run_cli("validate-model --config " + (dir / "absent.ini").string()) == 2);
    CHECK(fs::is_empty(dir));
  }
  SUBCASE("bad config key exits 2") {
    write_file(dir / "bad.ini", "[model]\nname = binary-gaussian\nwat = 1\n");
    CHECK(run_cli("validate-model --config " + (dir / "bad.ini").string()) == 2);
  }
  SUBCASE("validate-model on the canonical model exits 0 and emits the report") {
    std::string cfg = kBasicConfig;
    const auto out = (dir / "out").string();
    cfg.replace(cfg.find("OUTDIR"), 6, out);
    write_file(dir / "ok.ini", cfg);
    CHECK(run_cli("validate-model --config " + (dir / "ok.ini").string()) == 0);
    CHECK(fs::exists(dir / "out" / "model_report.json"));
    const std::string json = read_file(dir / "out" / "model_report.json");
    CHECK(json.find("\"all_pass\": true") != std::string::npos);
  }
  SUBCASE("validate-model flags the degenerate model with exit 1") {
    std::string cfg = kBasicConfig;
    const auto out = (dir / "out1").string();
    cfg.replace(cfg.find("OUTDIR"), 6, out);
    cfg.replace(cfg.find("binary-gaussian"), 15, "one-child-zero ");
    write_file(dir / "deg.ini", cfg);
    CHECK(run_cli("validate-model --config " + (dir / "deg.ini").string()) == 1);
  }
  SUBCASE("fixed (config, seed) reproduces outputs byte for byte") {
    std::string cfg = kBasicConfig;
    const auto out_a = (dir / "rep_a").string();
    cfg.replace(cfg.find("OUTDIR"), 6, out_a);
    write_file(dir / "rep.ini", cfg);
    REQUIRE(run_cli("validate-model --config " + (dir / "rep.ini").string()) == 0);
    const auto out_b = (dir / "rep_b").string();
    REQUIRE(run_cli("validate-model --config " + (dir / "rep.ini").string() +
                    " --out " + out_b + " --workers 7") == 0);
    CHECK(read_file(fs::path(out_a) / "model_report.json") ==
          read_file(fs::path(out_b) / "model_report.json"));
  }
  fs::remove_all(dir);
}

TEST_CASE("cli simulate writes the shared csv schema") {
  const auto dir = temp_dir("sim");
  std::string cfg = kBasicConfig;
  const auto out = (dir / "out").string();
  cfg.replace(cfg.find("OUTDIR"), 6, out);
  cfg += "[experiment]\nn = 6\nbeta = 1.0\n";
  write_file(dir / "sim.ini", cfg);
  // Keep the run tiny: the ladder build dominates otherwise.
  std::string extra = "ladder_budget = 5000\nladder_step_cap = 200000\n"
                      "renewal_reps = 20000\n";
  std::string text = read_file(dir / "sim.ini");
  text.insert(text.find("out_dir"), extra);
  write_file(dir / "sim.ini", text);
  REQUIRE(run_cli("simulate --config " + (dir / "sim.ini").string()) == 0);
  const std::string csv = read_file(dir / "out" / "simulate.csv");
  CHECK(csv.find("estimator_kind") != std::string::npos);
  CHECK(csv.find("W_n") != std::string::npos);
  CHECK(csv.find("D_n_beta") != std::string::npos);
  CHECK(fs::exists(dir / "out" / "simulate.json"));
  fs::remove_all(dir);
}
