#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "doctest.h"
#include "json.hpp"
#include "mixdyn/boxio.hpp"

using namespace mixdyn;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code = 0;
  std::string out, err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream o, e;
  Result r;
  r.code = cli::run(args, o, e);
  r.out = o.str();
  r.err = e.str();
  return r;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("mixdyn-test-cli-" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

nlohmann::json read_json(const fs::path& p) { return nlohmann::json::parse(read_text(p.string())); }

}  // namespace

TEST_CASE("fnv1a reference values") {
  CHECK(cli::fnv1a("") == 0xcbf29ce484222325ULL);
  CHECK(cli::fnv1a("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(cli::fnv1a("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("exit codes") {
  const fs::path dir = scratch("codes");
  CHECK(run({"classify", "--system", "nope", "--out", dir.string()}).code == cli::kExitConfig);
  CHECK(run({"classify", "--bogus-flag"}).code == cli::kExitConfig);
  CHECK(run({}).code == cli::kExitConfig);
  CHECK(run({"classify", "--system", "cat_map", "--depth", "8", "--box-budget", "100", "--out", dir.string()}).code ==
        cli::kExitBudget);
  CHECK(run({"verify", "--system", "cubic_interval", "--out", dir.string()}).code == cli::kExitConfig);
  const Result ok = run({"classify", "--system", "cubic_interval", "--depth", "6", "--out", dir.string()});
  CHECK(ok.code == cli::kExitOk);
  CHECK(ok.out.find("classification: Dissipative") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("flag beats config file beats default") {
  const fs::path dir = scratch("precedence");
  const fs::path cfg = dir / "cfg.json";
  std::ofstream(cfg) << R"({"system": "cubic_interval", "schedule": [{"depth": 5, "epsilon": "0.5w"}]})";
  REQUIRE(run({"classify", "--config", cfg.string(), "--out", (dir / "a").string()}).code == 0);
  CHECK(read_json(dir / "a" / "report.json")["depth"] == 5);
  REQUIRE(run({"classify", "--config", cfg.string(), "--depth", "6", "--out", (dir / "b").string()}).code == 0);
  CHECK(read_json(dir / "b" / "report.json")["depth"] == 6);
  std::ofstream(dir / "bad.json") << R"({"system": "cubic_interval", "colour": 3})";
  CHECK(run({"classify", "--config", (dir / "bad.json").string(), "--out", dir.string()}).code == cli::kExitConfig);
  fs::remove_all(dir);
}

TEST_CASE("graph cache round trip gives identical reports") {
  const fs::path dir = scratch("cache");
  const std::vector<std::string> base{"classify", "--system", "nested_rings", "--depth", "6", "--cache",
                                      (dir / "cache").string()};
  auto a = base, b = base;
  a.insert(a.end(), {"--out", (dir / "a").string()});
  b.insert(b.end(), {"--out", (dir / "b").string()});
  REQUIRE(run(a).code == 0);
  std::size_t cached = 0;
  for (const auto& e : fs::directory_iterator(dir / "cache")) cached += e.path().filename().string().rfind("graph-", 0) == 0;
  CHECK(cached == 1);
  REQUIRE(run(b).code == 0);
  CHECK(read_text((dir / "a" / "report.json").string()) == read_text((dir / "b" / "report.json").string()));
  fs::remove_all(dir);
}

TEST_CASE("command examples") {
  const fs::path dir = scratch("examples");
  SUBCASE("core-scan refutes a pure repeller at its first stage") {
    REQUIRE(run({"core-scan", "--system", "cubic_interval", "--schedule", "6:0.01,7:0.005", "--target", "0", "--out",
                 dir.string()})
                .code == 0);
    const auto cert = read_json(dir / "certificate.json");
    CHECK(cert["core_persistent"] == false);
    CHECK(cert["refuted_stage"] == 1);
  }
  SUBCASE("merge-scan overlap is 1 for the cat map and 0 for the cubic map") {
    const Result cat = run({"merge-scan", "--system", "cat_map", "--depth", "5", "--epsilon", "1w", "--sweep", "none=0,1",
                            "--format", "csv", "--out", (dir / "cat").string()});
    REQUIRE(cat.code == 0);
    CHECK(read_text((dir / "cat" / "merge_scan.csv").string()) ==
          "value,overlap,n_attractors,n_repellers,classification,note\n0,1,1,1,Conservative,\n1,1,1,1,Conservative,\n");
    REQUIRE(run({"merge-scan", "--system", "cubic_interval", "--depth", "7", "--epsilon", "0.25w", "--sweep",
                 "a=0.1:0.4:4", "--format", "json", "--out", (dir / "cubic").string()})
                .code == 0);
    for (const auto& row : read_json(dir / "cubic" / "merge_scan.json")["rows"]) {
      CHECK(row["overlap"] == 0.0);
      CHECK(row["classification"] == "Dissipative");
    }
  }
  SUBCASE("merge-scan rejects a parameter the system does not have") {
    CHECK(run({"merge-scan", "--system", "cubic_interval", "--sweep", "b=0,1", "--out", dir.string()}).code ==
          cli::kExitConfig);
  }
  SUBCASE("verify: identity passes exactly, cat map with swap fails") {
    REQUIRE(run({"verify", "--system", "identity", "--involution", "swap", "--out", (dir / "id").string()}).code == 0);
    const auto id = read_json(dir / "id" / "verify.json");
    CHECK(id["pass"] == true);
    CHECK(id["reversibility"]["max_residual"] == 0.0);
    REQUIRE(run({"verify", "--system", "cat_map", "--involution", "swap", "--out", (dir / "cat").string()}).code == 0);
    const auto cat = read_json(dir / "cat" / "verify.json");
    CHECK(cat["pass"] == false);
    CHECK(cat["reversibility"]["max_residual"].get<double>() > 0.1);
  }
  SUBCASE("noisy histogram stays inside the graph's reachable set") {
    REQUIRE(run({"noisy", "--system", "cubic_interval", "--depth", "8", "--epsilon", "1e-3", "--x0", "0.5", "--trials",
                 "4", "--format", "json", "--out", dir.string()})
                .code == 0);
    const auto doc = read_json(dir / "noisy.json");
    CHECK(doc["contained_in_reachable"] == true);
  }
  fs::remove_all(dir);
}
