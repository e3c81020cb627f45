#include <doctest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "seupred/io_util.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string bin() { return SEUPRED_BIN; }

struct CliRun {
  int exit_code = -1;
  std::string out;
};

/// Runs one subcommand; stdout is captured, stderr passes through.
CliRun run_cli(const std::string& dir, const std::string& args) {
  std::string out_path = dir + "/cli_stdout.txt";
  std::string cmd = bin() + " " + args + " >" + out_path + " 2>" + dir + "/cli_stderr.txt";
  int rc = std::system(cmd.c_str());
  CliRun r;
  r.exit_code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  if (fs::exists(out_path)) r.out = seupred::read_file(out_path);
  return r;
}

std::string fresh_dir(const std::string& tag) {
  fs::path d = fs::temp_directory_path() / ("seupred_cli_" + tag);
  fs::remove_all(d);
  fs::create_directories(d);
  return d.string();
}

json load_json(const std::string& path) { return json::parse(seupred::read_file(path)); }

}  // namespace

TEST_CASE("cli: full pipeline on a synthetic circuit") {
  std::string d = fresh_dir("pipeline");
  auto at = [&](const std::string& p) { return d + "/" + p; };

  CliRun gen = run_cli(d, "gen-circuit --seed 7 --n-ff 12 --out " + at("c.json"));
  REQUIRE(gen.exit_code == 0);
  REQUIRE(fs::exists(at("c.json")));
  CHECK(fs::exists(at("c.json.manifest.json")));

  CliRun check = run_cli(d, "netlist-check --netlist " + at("c.json"));
  REQUIRE(check.exit_code == 0);
  json ncheck = json::parse(check.out);
  CHECK(ncheck.at("ok").get<bool>());
  CHECK(ncheck.at("ff_count").get<int>() == 12);

  CliRun sim = run_cli(d, "faultsim --netlist " + at("c.json") +
                              " --cycles 24 --times 3,6,9 --seed 7 --out " + at("sim"));
  REQUIRE(sim.exit_code == 0);
  json simrep = json::parse(sim.out);
  // Exhaustive campaign: one label per (flip-flop, time) pair.
  CHECK(simrep.at("labels").get<int>() == 12 * 3);
  CHECK(simrep.at("campaign_size").get<int>() == 12 * 3);
  json labels = load_json(at("sim/labels.json"));
  CHECK(fs::exists(at("sim/golden.vcd")));
  CHECK(fs::exists(at("sim/stimulus.json")));
  CHECK(fs::exists(at("sim/run_manifest.json")));
  json sman = load_json(at("sim/run_manifest.json"));
  CHECK(sman.at("inputs").size() == 1);  // the netlist, hashed

  CliRun ds = run_cli(d, "build-dataset --netlist " + at("c.json") + " --vcd " +
                             at("sim/golden.vcd") + " --labels " + at("sim/labels.json") +
                             " --max-distance 2 --time-win-size 5"
                             " --split hybrid:0.6,0.2,0.2 --seed 1 --out " +
                             at("ds"));
  REQUIRE(ds.exit_code == 0);
  json dsrep = json::parse(ds.out);
  CHECK(dsrep.at("cells").get<int>() == 12 * 3);
  CHECK(dsrep.at("train").get<int>() + dsrep.at("val").get<int>() +
            dsrep.at("test").get<int>() ==
        12 * 3);

  CliRun tr = run_cli(d, "train --dataset " + at("ds") +
                             " --arch astgcn --hidden 4 --gnn-layers 2 --epochs 6"
                             " --seed 3 --out " +
                             at("run1"));
  REQUIRE(tr.exit_code == 0);
  json trrep = load_json(at("run1/report.json"));
  CHECK(trrep.at("kind") == "train");
  CHECK(trrep.at("history").size() <= 6);
  CHECK(trrep.at("test").at("accuracy").is_number());
  REQUIRE(fs::exists(at("run1/checkpoint/index.json")));
  REQUIRE(fs::exists(at("run1/checkpoint/spec.json")));

  CliRun pr = run_cli(d, "predict --checkpoint " + at("run1/checkpoint") + " --dataset " +
                             at("ds") + " --out " + at("preds.json"));
  REQUIRE(pr.exit_code == 0);
  json preds = load_json(at("preds.json"));
  CHECK(preds.at("predictions").size() == 3);
  CHECK(preds.at("predictions")[0].at("pred").size() == 12);
  // Consistency: the predict command reproduces the training report's
  // metrics for every mask.
  CHECK(preds.at("metrics").at("test") == trrep.at("test"));
  CHECK(preds.at("metrics").at("val") == trrep.at("val"));

  CliRun rep = run_cli(d, "report " + at("run1") + " --out " + at("agg.json"));
  REQUIRE(rep.exit_code == 0);
  json agg = load_json(at("agg.json"));
  CHECK(agg.at("count").get<int>() == 1);
  CHECK(agg.at("accuracy").at("mean").get<double>() ==
        trrep.at("test").at("accuracy").get<double>());
  CHECK(agg.at("accuracy").at("std").get<double>() == 0.0);
  CHECK(rep.out.find("accuracy") != std::string::npos);

  fs::remove_all(d);
}

TEST_CASE("cli: cross-testcase predictions match in-case ones on the same case") {
  std::string d = fresh_dir("cross");
  auto at = [&](const std::string& p) { return d + "/" + p; };

  REQUIRE(run_cli(d, "gen-circuit --seed 9 --n-ff 8 --out " + at("c.json")).exit_code == 0);
  REQUIRE(run_cli(d, "faultsim --netlist " + at("c.json") +
                         " --cycles 20 --times 4,8 --seed 2 --out " + at("sim"))
              .exit_code == 0);
  REQUIRE(run_cli(d, "build-dataset --netlist " + at("c.json") + " --vcd " +
                         at("sim/golden.vcd") + " --labels " + at("sim/labels.json") +
                         " --max-distance 2 --time-win-size 4 --split hybrid:0.7,0.3,0"
                         " --seed 5 --out " +
                         at("ds"))
              .exit_code == 0);
  REQUIRE(run_cli(d, "train --dataset " + at("ds") +
                         " --arch stgcn --hidden 4 --stgcn-blocks 1 --epochs 4 --seed 1"
                         " --out " +
                         at("run"))
              .exit_code == 0);

  CliRun in_case = run_cli(d, "predict --checkpoint " + at("run/checkpoint") + " --dataset " +
                                  at("ds") + " --out " + at("in.json"));
  REQUIRE(in_case.exit_code == 0);
  // Same circuit, same wave, same labels presented as a new test case.
  CliRun cross = run_cli(d, "predict --checkpoint " + at("run/checkpoint") +
                                " --train-dataset " + at("ds") + " --netlist " + at("c.json") +
                                " --vcd " + at("sim/golden.vcd") + " --labels " +
                                at("sim/labels.json") + " --out " + at("cross.json"));
  REQUIRE(cross.exit_code == 0);

  json in_rep = load_json(at("in.json"));
  json cross_rep = load_json(at("cross.json"));
  CHECK(cross_rep.at("cross_testcase").get<bool>());
  CHECK(in_rep.at("predictions") == cross_rep.at("predictions"));
  // All labeled cells are test cells in the cross view.
  CHECK(cross_rep.at("metrics").contains("test"));
  CHECK(!cross_rep.at("metrics").contains("train"));

  fs::remove_all(d);
}

TEST_CASE("cli: reruns are byte-identical outside the run manifest") {
  std::string d = fresh_dir("idem");
  auto at = [&](const std::string& p) { return d + "/" + p; };
  REQUIRE(run_cli(d, "gen-circuit --seed 4 --n-ff 8 --out " + at("c.json")).exit_code == 0);
  REQUIRE(run_cli(d, "faultsim --netlist " + at("c.json") +
                         " --cycles 16 --times 3,7 --seed 4 --out " + at("sim"))
              .exit_code == 0);

  std::string args = "build-dataset --netlist " + at("c.json") + " --vcd " +
                     at("sim/golden.vcd") + " --labels " + at("sim/labels.json") +
                     " --max-distance 1 --time-win-size 4 --split spatial:0.5 --seed 9 --out ";
  REQUIRE(run_cli(d, args + at("ds1")).exit_code == 0);
  REQUIRE(run_cli(d, args + at("ds2")).exit_code == 0);

  size_t compared = 0;
  for (const auto& entry : fs::directory_iterator(at("ds1"))) {
    std::string name = entry.path().filename().string();
    if (name == "run_manifest.json") continue;  // timestamps live only here
    CHECK(seupred::read_file(at("ds1/" + name)) == seupred::read_file(at("ds2/" + name)));
    ++compared;
  }
  CHECK(compared >= 6);
  fs::remove_all(d);
}

TEST_CASE("cli: exit codes distinguish validation from runtime failures") {
  std::string d = fresh_dir("codes");
  auto at = [&](const std::string& p) { return d + "/" + p; };

  seupred::write_file(at("bad.json"), "{broken");
  CHECK(run_cli(d, "netlist-check --netlist " + at("bad.json")).exit_code == 1);
  CHECK(run_cli(d, "netlist-check --netlist " + at("missing.json")).exit_code == 2);
  CHECK(run_cli(d, "train --dataset " + at("nodir") + " --out " + at("o")).exit_code == 2);

  REQUIRE(run_cli(d, "gen-circuit --seed 1 --n-ff 6 --out " + at("c.json")).exit_code == 0);
  REQUIRE(run_cli(d, "faultsim --netlist " + at("c.json") +
                         " --cycles 12 --times 3 --seed 1 --out " + at("sim"))
              .exit_code == 0);
  // Bad split spec and bad arch are validation errors.
  std::string bd = "build-dataset --netlist " + at("c.json") + " --vcd " +
                   at("sim/golden.vcd") + " --labels " + at("sim/labels.json") +
                   " --max-distance 1 --time-win-size 3 --out " + at("ds");
  CHECK(run_cli(d, bd + " --split banana:9").exit_code == 1);
  REQUIRE(run_cli(d, bd + " --split hybrid:0.8,0.2,0").exit_code == 0);
  CHECK(run_cli(d, "train --dataset " + at("ds") + " --arch lstm --out " + at("r")).exit_code ==
        1);
  // Window longer than the trace leaves no usable samples.
  CHECK(run_cli(d, "build-dataset --netlist " + at("c.json") + " --vcd " +
                       at("sim/golden.vcd") + " --labels " + at("sim/labels.json") +
                       " --max-distance 1 --time-win-size 99 --out " + at("ds99"))
            .exit_code == 1);
  // Unknown flags come back as parse errors, not crashes.
  CHECK(run_cli(d, "train --no-such-flag").exit_code == 1);
  CHECK(run_cli(d, "--help").exit_code == 0);

  fs::remove_all(d);
}
