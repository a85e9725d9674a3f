#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "bacon/cli.hpp"
#include "doctest.h"
#include "json.hpp"

using namespace bacon;

namespace {

namespace fs = std::filesystem;

struct Result {
  int code = 0;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "bacon");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& f) const { return (path / f).string(); }
};

const std::vector<std::string> kFastBoolean{"--tau0", "0.1", "--acceptance_threshold", "1", "--attempts", "5"};

std::vector<std::string> with(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

void collect_keys(const nlohmann::json& j, std::set<std::string>& keys) {
  if (j.is_object()) {
    for (auto it = j.begin(); it != j.end(); ++it) {
      keys.insert(it.key());
      collect_keys(it.value(), keys);
    }
  } else if (j.is_array()) {
    for (const auto& v : j) collect_keys(v, keys);
  }
}

}  // namespace

TEST_CASE("boolgen writes the repeated truth table") {
  const auto r = run({"boolgen", "--expr", "(A and B)", "--repeats", "100"});
  CHECK(r.code == kExitOk);
  std::istringstream lines(r.out);
  std::string line, header;
  std::getline(lines, header);
  CHECK(header == "A,B,label");
  int rows = 0, positives = 0;
  while (std::getline(lines, line)) {
    ++rows;
    positives += line == "1,1,1" ? 1 : 0;
  }
  CHECK(rows == 400);
  CHECK(positives == 100);
}

TEST_CASE("exit codes") {
  CHECK(run({"--help"}).code == kExitOk);
  CHECK(run({}).code == kExitConfig);
  CHECK(run({"frobnicate"}).code == kExitConfig);
  CHECK(run({"evaluate", "--model", "/nonexistent/model.json"}).code == kExitBadInput);
  CHECK(run({"boolgen", "--expr", "(A and"}).code == kExitBadInput);
  CHECK(run({"train", "--data", "/nonexistent.csv"}).code == kExitBadInput);

  TempDir dir("bacon_cli_codes");
  REQUIRE(run({"boolgen", "--expr", "A and B", "--repeats", "10", "--out", dir / "ab.csv"}).code == kExitOk);
  CHECK(run({"train", "--data", dir / "ab.csv", "--tree_layout", "balanced"}).code == kExitConfig);
  CHECK(run({"train", "--data", dir / "ab.csv", "--attempts", "0"}).code == kExitConfig);
  CHECK(run({"train", "--data", dir / "ab.csv", "--max_epochs", "5", "--attempts", "1", "--model", dir / "m.json"}).code ==
        kExitNoConvergence);
  CHECK_FALSE(fs::exists(dir / "m.json"));

  std::ofstream(dir / "bad.toml") << "no_such_key = 3\n";
  CHECK(run({"--config", dir / "bad.toml", "boolgen", "--expr", "A"}).code == kExitConfig);
  CHECK(run({"report-prompt", "--model", "/nonexistent.json", "--send"}).code == kExitBadInput);
}

TEST_CASE("train, explain, check and inspect a Boolean model") {
  TempDir dir("bacon_cli_flow");
  REQUIRE(run({"boolgen", "--expr", "(A and B) or C", "--repeats", "20", "--out", dir / "abc.csv"}).code == kExitOk);
  const auto model = dir / "m.json";
  const auto t = run(with({"train", "--data", dir / "abc.csv", "--model", model, "--log", dir / "log.csv"}, kFastBoolean));
  REQUIRE(t.code == kExitOk);
  CHECK(fs::exists(model));
  CHECK(slurp(dir / "log.csv").rfind("attempt,epoch,loss,gumbel_scale,frozen\n", 0) == 0);

  const auto e = run({"explain", "--model", model, "--out", dir / "tree.json"});
  REQUIRE(e.code == kExitOk);
  const auto tree = nlohmann::json::parse(slurp(dir / "tree.json"));
  std::set<std::string> keys;
  collect_keys(tree, keys);
  for (const auto& k : keys) CHECK(std::set<std::string>{"operator", "children", "feature", "weight"}.count(k) == 1);
  CHECK(e.out.find("expression: ") != std::string::npos);

  const auto check = run({"boolcheck", "--model", model, "--expr", "(A and B) or C"});
  CHECK(check.code == kExitOk);
  CHECK(check.out.find("equivalent: yes") != std::string::npos);
  const auto wrong = run({"--json", "boolcheck", "--model", model, "--expr", "(A or B) and C"});
  CHECK(wrong.code == kExitOk);
  CHECK(nlohmann::json::parse(wrong.out)["equivalent"] == false);

  const auto ev = run({"--json", "evaluate", "--model", model, "--subset", "all"});
  REQUIRE(ev.code == kExitOk);
  const auto metrics = nlohmann::json::parse(ev.out);
  CHECK(metrics["accuracy"] == 1.0);
  CHECK(metrics["rows"] == 160);

  const auto th = run({"--json", "thresholds", "--model", model, "--threshold-step", "0.25"});
  REQUIRE(th.code == kExitOk);
  CHECK(nlohmann::json::parse(th.out)["rows"].size() == 5);

  const auto at = run({"--json", "attribution", "--model", model});
  REQUIRE(at.code == kExitOk);
  CHECK(nlohmann::json::parse(at.out)["rows"].size() == 2);

  const auto pr = run({"prune", "--model", model, "--k", "1", "--out", dir / "pruned.json"});
  REQUIRE(pr.code == kExitOk);
  CHECK(run({"evaluate", "--model", dir / "pruned.json"}).code == kExitOk);
  CHECK(run({"explain", "--model", dir / "pruned.json"}).code == kExitOk);
  CHECK(run({"attribution", "--model", dir / "pruned.json"}).code == kExitConfig);

  const auto prompt = run({"report-prompt", "--model", model, "--context", "Toy decision."});
  CHECK(prompt.code == kExitOk);
  CHECK(prompt.out.find("Toy decision.") != std::string::npos);
  CHECK(run({"report-prompt", "--model", model, "--send"}).code == (std::getenv("BACON_REPORT_ENDPOINT") ? kExitBadInput : kExitConfig));
}

TEST_CASE("config file and flags give identical models") {
  TempDir dir("bacon_cli_config");
  REQUIRE(run({"boolgen", "--expr", "A or B", "--repeats", "10", "--out", dir / "ab.csv"}).code == kExitOk);
  std::ofstream(dir / "cfg.toml") << "tau0 = 0.1\nacceptance_threshold = 1.0\nattempts = 5\nseed = 9\n"
                                     "weight_penalty_strength = 0.001\nmax_epochs = 2000\n";
  const auto a = run({"--config", dir / "cfg.toml", "train", "--data", dir / "ab.csv", "--model", dir / "a.json"});
  const auto b = run({"--tau0", "0.1", "--acceptance_threshold", "1.0", "--attempts", "5", "--seed", "9",
                      "--weight_penalty_strength", "0.001", "--max_epochs", "2000", "train", "--data", dir / "ab.csv",
                      "--model", dir / "b.json"});
  REQUIRE(a.code == kExitOk);
  REQUIRE(b.code == kExitOk);
  CHECK(slurp(dir / "a.json") == slurp(dir / "b.json"));

  // Flags win over the file.
  const auto c = run({"--config", dir / "cfg.toml", "--seed", "10", "train", "--data", dir / "ab.csv", "--model",
                      dir / "c.json"});
  REQUIRE(c.code == kExitOk);
  CHECK(nlohmann::json::parse(slurp(dir / "c.json"))["metadata"]["seed"] == 10);
}

TEST_CASE("subcommands are deterministic") {
  TempDir dir("bacon_cli_determinism");
  REQUIRE(run({"boolgen", "--expr", "(A and B) or C", "--repeats", "10", "--out", dir / "d.csv"}).code == kExitOk);
  const auto t1 = run(with({"train", "--data", dir / "d.csv", "--model", dir / "1.json"}, kFastBoolean));
  const auto first = slurp(dir / "1.json");
  const auto t2 = run(with({"train", "--data", dir / "d.csv", "--model", dir / "1.json"}, kFastBoolean));
  REQUIRE(t1.code == kExitOk);
  REQUIRE(t2.code == kExitOk);
  CHECK(t1.out == t2.out);
  CHECK(first == slurp(dir / "1.json"));
  for (const std::vector<std::string>& cmd :
       {std::vector<std::string>{"thresholds", "--model", dir / "1.json"},
        std::vector<std::string>{"attribution", "--model", dir / "1.json"},
        std::vector<std::string>{"explain", "--model", dir / "1.json"}}) {
    CHECK(run(cmd).out == run(cmd).out);
  }
}
