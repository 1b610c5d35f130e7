#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <numeric>
#include <sstream>

#include "harvest/commands.hpp"
#include "harvest/config.hpp"
#include "harvest/histogram.hpp"
#include "harvest/output.hpp"

using namespace harvest;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("harvest_unit_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::string> data_lines(const fs::path& csv) {
  std::istringstream in(slurp(csv));
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);)
    if (!line.empty() && line[0] != '#') lines.push_back(line);
  return lines;
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(HARVESTCTL_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("minimal config fills defaults") {
  const RunConfig c = resolve_config(json{{"model", 1}, {"seed", 7}});
  CHECK(c.seed == 7);
  CHECK(c.model.horizon == 200);
  CHECK(c.model.thresholds[0] == 0.05);
  const auto& p = std::get<ParamSet1>(c.model.params);
  CHECK(p.r == 1.0);
  CHECK(p.K == 1.0);
  CHECK(p.beta == 0.25);
  CHECK(p.c == 0.1);
  CHECK(p.H == 1.0);
  CHECK(c.training.iterations == 100);
  CHECK(c.model.obs_bounds.size() == 1);
  CHECK(resolve_config(json{{"model", 4}}).training.iterations == 300);
}

TEST_CASE("config validation names the offending key") {
  try {
    resolve_config(json{{"model", 1}, {"bogus", 1}});
    FAIL("expected rejection");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("bogus") != std::string::npos);
  }
  try {
    resolve_config(json{{"model", 2}, {"training", {{"itrations", 5}}}});
    FAIL("expected rejection");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("training.itrations") != std::string::npos);
  }
  try {
    resolve_config(json{{"model", 1}, {"thresholds", 0.0}});
    FAIL("expected rejection");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("thresholds") != std::string::npos);
  }
  CHECK_THROWS_AS(resolve_config(json{{"model", 5}}), ConfigError);
  CHECK_THROWS_AS(resolve_config(json{{"model", "one"}}), ConfigError);
  CHECK_THROWS_AS(resolve_config(json{{"model", 3}, {"params", {{"sigma2", 0.1}}}}), ConfigError);
}

TEST_CASE("resolved config round-trips") {
  for (int m = 1; m <= 4; ++m) {
    const RunConfig a = resolve_config(json{{"model", m}, {"seed", 3}, {"tradeoff", {{"fractions", {0.5, 1.0}}}}});
    const json first = to_json(a);
    const RunConfig b = resolve_config(first);
    CHECK(to_json(b) == first);
    CHECK(b.model == a.model);
    CHECK(b.training == a.training);
  }
}

TEST_CASE("config files report parse errors with a position") {
  const fs::path dir = scratch("parse");
  write_file(dir / "bad.json", "{\n  \"model\": 1,\n  \"seed\": ,\n}\n");
  try {
    load_config(dir / "bad.json");
    FAIL("expected parse error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find(":3:") != std::string::npos);
  }
  write_file(dir / "ok.json", R"({"model": 2, "seed": 5, "evaluation": {"episodes": 7}})");
  const RunConfig c = load_config(dir / "ok.json", json{{"seed", 9}, {"evaluation", {{"trajectories", true}}}});
  CHECK(c.seed == 9);
  CHECK(c.eval_episodes == 7);
  CHECK(c.emit_trajectories);
  CHECK_THROWS_AS(load_config(dir / "missing.json"), ConfigError);
}

TEST_CASE("inline and file policies resolve") {
  const fs::path dir = scratch("policy");
  save_policy(ConstantMortality{Action::Constant(1, 0.1)}, dir / "p.json");
  RunConfig c = resolve_config(json{{"model", 1}, {"policy", (dir / "p.json").string()}});
  CHECK(family_name(resolve_policy(c)) == "cmort");
  c = resolve_config(json{{"model", 1}, {"policy", {{"family", "cesc"}, {"escapement", {0.4}}}}});
  CHECK(family_name(resolve_policy(c)) == "cesc");
  c = resolve_config(json{{"model", 3}, {"policy", {{"family", "cesc"}, {"escapement", {0.4}}}}});
  CHECK_THROWS_AS(resolve_policy(c), ConfigError);
}

TEST_CASE("histogram data") {
  const EvalSummary full = summarize(std::vector<double>(100, 3.0), std::vector<int>(100, 200), 200);
  const HistogramData h = emit_histogram_data(full);
  CHECK(h.pairs.size() == 100);
  REQUIRE(h.length_bins.size() == 20);
  for (std::size_t i = 0; i + 1 < h.length_bins.size(); ++i) CHECK(h.length_bins[i].count == 0);
  CHECK(h.length_bins.back().lo == 190.0);
  CHECK(h.length_bins.back().hi == 200.0);
  CHECK(h.length_bins.back().count == 100);

  std::vector<double> rewards;
  std::vector<int> lengths;
  Rng rng(1);
  std::uniform_int_distribution<int> len(1, 200);
  std::normal_distribution<double> rew(0.0, 5.0);
  for (int i = 0; i < 73; ++i) {
    rewards.push_back(rew(rng));
    lengths.push_back(len(rng));
  }
  const HistogramData mixed = emit_histogram_data(summarize(rewards, lengths, 200));
  auto total = [](const std::vector<HistogramBin>& bins) {
    return std::accumulate(bins.begin(), bins.end(), 0, [](int s, const HistogramBin& b) { return s + b.count; });
  };
  CHECK(total(mixed.length_bins) == 73);
  CHECK(total(mixed.reward_bins) == 73);
  CHECK(mixed.reward_bins.size() == 20);
  CHECK(mixed.reward_bins.front().lo == *std::min_element(rewards.begin(), rewards.end()));
  CHECK(mixed.reward_bins.back().hi == *std::max_element(rewards.begin(), rewards.end()));

  CHECK_THROWS(emit_histogram_data(EvalSummary{}));
}

TEST_CASE("number formatting and digests") {
  CHECK(format_number(0.1) == "0.1");
  CHECK(format_number(-0.0) == "0");
  CHECK(format_number(1e-20) == "1e-20");
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("CSV tables quote and check widths") {
  CsvTable t({"name", "value"});
  t.add("a,b", 1.5);
  t.add(std::string("say \"hi\""), 2);
  CHECK_THROWS(t.push({"only one"}));
  CHECK(t.render({"k=v"}) == "# k=v\nname,value\n\"a,b\",1.5\n\"say \"\"hi\"\"\",2\n");
}

TEST_CASE("bifurcation subcommand output") {
  const fs::path dir = scratch("bifurcation");
  const RunConfig c = resolve_config(json{{"model", 1}});
  std::ostringstream log;
  run_subcommand("bifurcation", c, dir, log);
  const auto lines = data_lines(dir / "equilibrium_counts.csv");
  REQUIRE(lines.size() == 52);
  std::vector<int> counts;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto a = lines[i].find(','), b = lines[i].find(',', a + 1);
    counts.push_back(std::stoi(lines[i].substr(a + 1, b - a - 1)));
  }
  int drops = 0;
  for (std::size_t i = 1; i < counts.size(); ++i) drops += counts[i - 1] == 3 && counts[i] == 1;
  CHECK(drops == 1);
  CHECK(counts.back() == 1);
  CHECK_THROWS(run_subcommand("bifurcation", resolve_config(json{{"model", 2}}), scratch("bif2"), log));
}

TEST_CASE("evaluate writes one row per episode and a consistent manifest") {
  const fs::path dir = scratch("evaluate");
  save_policy(ConstantEscapement{Action::Constant(2, 0.4)}, dir / "policy.json");
  const RunConfig c = resolve_config(json{{"model", 4}, {"seed", 2}, {"policy", (dir / "policy.json").string()}});
  std::ostringstream log;
  const fs::path out = dir / "run";
  run_subcommand("evaluate", c, out, log);
  CHECK(data_lines(out / "evaluation.csv").size() == 101);

  const json manifest = json::parse(slurp(out / "manifest.json"));
  CHECK(manifest["config"] == to_json(c));
  CHECK(manifest["seed"] == 2);
  int listed = 0;
  for (const auto& f : manifest["files"]) {
    const fs::path p = out / f["path"].get<std::string>();
    CHECK(sha256_file(p) == f["sha256"].get<std::string>());
    CHECK(fs::file_size(p) == f["bytes"].get<std::uintmax_t>());
    ++listed;
  }
  int on_disk = 0;
  for (const auto& e : fs::recursive_directory_iterator(out))
    if (e.is_regular_file() && e.path().filename() != "manifest.json") ++on_disk;
  CHECK(listed == on_disk);
}

TEST_CASE("repeated runs give byte-identical data files") {
  const RunConfig c = resolve_config(json{{"model", 3}, {"seed", 5}, {"tuning", {{"episodes", 3}, {"points", 6}}}});
  std::ostringstream log;
  const fs::path a = scratch("repeat_a"), b = scratch("repeat_b");
  run_subcommand("tune-cesc", c, a, log);
  run_subcommand("tune-cesc", c, b, log);
  for (const auto& e : fs::directory_iterator(a)) {
    if (e.path().filename() == "manifest.json") continue;
    CHECK(slurp(e.path()) == slurp(b / e.path().filename()));
  }
}

TEST_CASE("command-line tool exit status") {
  const fs::path dir = scratch("cli");
  CHECK(run_cli("bifurcation --out " + (dir / "ok").string()) == 0);
  CHECK(fs::exists(dir / "ok" / "manifest.json"));
  CHECK(run_cli("evaluate --out " + (dir / "nopolicy").string()) != 0);
  CHECK(run_cli("simulate --set bogus=1 --out " + (dir / "bad").string()) != 0);
  CHECK(run_cli("simulate --model 7 --out " + (dir / "bad").string()) != 0);
  CHECK(run_cli("no-such-command") != 0);
  CHECK(run_cli("simulate --seed 4 --set simulate.episodes=3 --out " + (dir / "sim").string()) == 0);
  CHECK(data_lines(dir / "sim" / "episodes.csv").size() == 4);
}
