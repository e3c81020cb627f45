// Command line entry point: one binary, one subcommand per pipeline stage.
// Machine-readable results go to files/stdout; progress and errors to
// stderr. Exit codes: 0 ok, 1 invalid input, 2 runtime failure.
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "seupred/dataset.hpp"
#include "seupred/errors.hpp"
#include "seupred/faultsim.hpp"
#include "seupred/graphgen.hpp"
#include "seupred/io_util.hpp"
#include "seupred/models.hpp"
#include "seupred/netlist.hpp"
#include "seupred/trainer.hpp"
#include "seupred/waveform.hpp"

using namespace seupred;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr const char* kToolVersion = "seupred 0.1.0";

void logf(const char* fmt, ...) {
  va_list args;
  va_start(args, fmt);
  std::vfprintf(stderr, fmt, args);
  va_end(args);
  std::fputc('\n', stderr);
}

/// Input files hashed for the run manifest, keyed by path.
struct ManifestInputs {
  ordered_json entries = ordered_json::object();

  std::string read(const std::string& path) {
    std::string bytes = read_file(path);
    entries[path] = hex64(fnv1a64(bytes.data(), bytes.size()));
    return bytes;
  }
};

/// The only place timestamps are allowed: everything else a command writes
/// must be byte-identical across reruns with the same inputs.
void write_run_manifest(const std::string& path, const std::string& command,
                        const ManifestInputs& inputs, const ordered_json& config,
                        const std::vector<std::string>& outputs) {
  ordered_json man;
  man["tool"] = kToolVersion;
  man["command"] = command;
  char stamp[32];
  std::time_t now = std::time(nullptr);
  std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  man["timestamp_utc"] = stamp;
  man["inputs"] = inputs.entries;
  man["config"] = config;
  man["outputs"] = outputs;
  write_file(path, man.dump(2) + "\n");
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir + ": " + ec.message());
}

ordered_json metrics_json(const Metrics& m) {
  ordered_json j;
  j["precision"] = m.precision;
  j["recall"] = m.recall;
  j["accuracy"] = m.accuracy;
  j["precision_defined"] = m.precision_defined;
  j["tp"] = m.tp;
  j["fp"] = m.fp;
  j["tn"] = m.tn;
  j["fn"] = m.fn;
  return j;
}

ModelSpec spec_with_window(ModelSpec spec, int time_win_size) {
  spec.time_win_size = time_win_size;
  validate_spec(spec);
  return spec;
}

WaveMatrix load_wave(const std::string& vcd_text_bytes, const Netlist& nl) {
  return parse_vcd(vcd_text_bytes, nl.net_name(nl.clock), nl.ff_names(), default_name_map(nl));
}

// ---- shared flag bundles -------------------------------------------------

struct ModelFlags {
  std::string arch = "astgcn";
  int hidden = 16;
  int e_dim = 8;
  int heads = 0;  // 0 = architecture default
  int gnn_layers = 3;
  int stgcn_blocks = 2;

  void attach(CLI::App* cmd) {
    cmd->add_option("--arch", arch, "model architecture: stgcn|astgcn|astgat")
        ->capture_default_str();
    cmd->add_option("--hidden", hidden, "hidden channel width")->capture_default_str();
    cmd->add_option("--edge-dim", e_dim, "edge embedding width")->capture_default_str();
    cmd->add_option("--heads", heads, "attention heads (astgat; 0 = default)")
        ->capture_default_str();
    cmd->add_option("--gnn-layers", gnn_layers, "spatial layers (astgcn/astgat)")
        ->capture_default_str();
    cmd->add_option("--stgcn-blocks", stgcn_blocks, "sandwich blocks (stgcn)")
        ->capture_default_str();
  }

  ModelSpec spec() const {
    ModelSpec s;
    s.arch = arch_from_name(arch);
    s.hidden = hidden;
    s.e_dim = e_dim;
    s.gnn_layers = gnn_layers;
    s.stgcn_blocks = stgcn_blocks;
    s.heads = heads > 0 ? heads : (s.arch == Arch::ASTGAT ? 2 : 1);
    return s;
  }

  ordered_json config() const {
    return {{"arch", arch},        {"hidden", hidden},
            {"edge_dim", e_dim},   {"heads", heads},
            {"gnn_layers", gnn_layers}, {"stgcn_blocks", stgcn_blocks}};
  }
};

struct TrainFlags {
  double lr = 1e-3;
  int epochs = 200;
  int patience = 20;

  void attach(CLI::App* cmd) {
    cmd->add_option("--lr", lr, "Adam learning rate")->capture_default_str();
    cmd->add_option("--epochs", epochs, "maximum training epochs")->capture_default_str();
    cmd->add_option("--patience", patience, "early-stop patience (epochs)")
        ->capture_default_str();
  }

  TrainConfig config(const ModelSpec& spec, uint64_t seed) const {
    TrainConfig c;
    c.model = spec;
    c.lr = lr;
    c.max_epochs = epochs;
    c.patience = patience;
    c.seed = seed;
    return c;
  }
};

// ---- subcommands ----------------------------------------------------------

int cmd_netlist_check(const std::string& path) {
  ManifestInputs in;
  Netlist nl = parse_netlist(in.read(path));
  ordered_json rep;
  rep["ok"] = true;
  rep["name"] = nl.name;
  rep["ff_count"] = nl.ff_count();
  rep["cells"] = nl.cells.size();
  rep["nets"] = nl.nets.size();
  rep["inputs"] = nl.inputs.size();
  rep["outputs"] = nl.outputs.size();
  std::printf("%s\n", rep.dump(2).c_str());
  return 0;
}

int cmd_gen_circuit(uint64_t seed, int n_ff, int cone_lo, int cone_hi, const std::string& out) {
  Netlist nl = gen_synthetic_circuit(seed, n_ff, cone_lo, cone_hi);
  write_file(out, serialize_netlist(nl));
  ordered_json cfg{{"seed", seed}, {"n_ff", n_ff}, {"cone_lo", cone_lo}, {"cone_hi", cone_hi}};
  write_run_manifest(out + ".manifest.json", "gen-circuit", {}, cfg, {out});
  logf("gen-circuit: wrote %s (%d flip-flops, %zu cells)", out.c_str(), nl.ff_count(),
       nl.cells.size());
  return 0;
}

int cmd_faultsim(const std::string& netlist_path, const std::string& stimulus_path, int cycles,
                 std::vector<int> times, int times_evenly, uint64_t seed, int jobs,
                 const std::string& out_dir) {
  ManifestInputs in;
  Netlist nl = parse_netlist(in.read(netlist_path));
  Stimulus stim;
  if (!stimulus_path.empty()) {
    stim = parse_stimulus(in.read(stimulus_path), nl);
  } else {
    if (cycles < 2) throw SpecInvalid("faultsim needs --stimulus or --cycles >= 2");
    stim = gen_stimulus(nl, cycles, seed);
  }
  if (times.empty()) {
    if (times_evenly < 1)
      throw SpecInvalid("faultsim needs --times or --times-evenly >= 1");
    int lo = 1, hi = stim.cycles - 1;
    if (hi < lo) throw SpecInvalid("stimulus too short for any injection time");
    for (int i = 0; i < times_evenly; ++i) {
      double f = times_evenly == 1 ? 0.5 : static_cast<double>(i) / (times_evenly - 1);
      int t = lo + static_cast<int>(std::llround(f * (hi - lo)));
      if (times.empty() || times.back() != t) times.push_back(t);
    }
  }

  ensure_dir(out_dir);
  FaultLabelSet labels = run_campaign(nl, stim, times, {}, jobs);
  SimTrace golden = simulate_golden(nl, stim);
  std::string vcd_path = out_dir + "/golden.vcd";
  std::string labels_path = out_dir + "/labels.json";
  std::string stim_path = out_dir + "/stimulus.json";
  write_vcd(golden, nl, vcd_path);
  write_file(labels_path, serialize_labels(labels));
  write_file(stim_path, serialize_stimulus(stim, nl));

  ordered_json cfg{{"times", times},   {"times_evenly", times_evenly}, {"cycles", stim.cycles},
                   {"seed", seed},     {"jobs", jobs}};
  write_run_manifest(out_dir + "/run_manifest.json", "faultsim", in, cfg,
                     {vcd_path, labels_path, stim_path});

  ordered_json rep;
  rep["n_ff"] = nl.ff_count();
  rep["times"] = times;
  rep["labels"] = labels.size();
  rep["campaign_size"] = campaign_size(static_cast<uint64_t>(nl.ff_count()), times.size());
  std::printf("%s\n", rep.dump(2).c_str());
  return 0;
}

int cmd_build_dataset(const std::string& netlist_path, const std::string& vcd_path,
                      const std::string& labels_path, int max_distance, int time_win_size,
                      const std::string& split_text, uint64_t seed, int jobs,
                      const std::string& out_dir) {
  ManifestInputs in;
  Netlist nl = parse_netlist(in.read(netlist_path));
  WaveMatrix wave = load_wave(in.read(vcd_path), nl);
  FaultLabelSet labels = parse_labels(in.read(labels_path));
  SplitSpec split = parse_split(split_text);

  SpatialGraph graph = build_spatial_graph(nl, max_distance, false, jobs);
  BatchTensors batch = batch_feature_tensors(wave, labels.injection_times, time_win_size);
  for (int t : batch.skipped)
    logf("build-dataset: window does not fit injection time %d, dropped", t);
  if (batch.tensors.empty())
    throw SpecInvalid("no injection time fits a window of " + std::to_string(time_win_size));

  SeuDataset ds = assemble(graph, batch.tensors, labels, nl.name);
  ds.seed = seed;
  ds.masks = make_split(ds, split, seed);
  validate_masks(ds);
  save_dataset(ds, out_dir);

  ordered_json cfg{{"max_distance", max_distance}, {"time_win_size", time_win_size},
                   {"split", split_to_string(split)}, {"seed", seed},
                   {"jobs", jobs}};
  write_run_manifest(out_dir + "/run_manifest.json", "build-dataset", in, cfg, {out_dir});

  auto count = [](const std::vector<uint8_t>& m) {
    size_t k = 0;
    for (uint8_t b : m) k += b;
    return k;
  };
  ordered_json rep;
  rep["circuit"] = nl.name;
  rep["cells"] = ds.grid_size();
  rep["edges"] = ds.graph.num_edges();
  rep["times"] = ds.samples.size();
  rep["train"] = count(ds.masks.train);
  rep["val"] = count(ds.masks.val);
  rep["test"] = count(ds.masks.test_unaudited());
  std::printf("%s\n", rep.dump(2).c_str());
  return 0;
}

void write_checkpoint_dir(const std::string& dir, const std::map<std::string, Tensor>& params,
                          const ModelSpec& spec) {
  save_checkpoint(params, dir);
  write_file(dir + "/spec.json", spec_to_json(spec));
}

ordered_json grid_json(const std::vector<GridPoint>& grid) {
  ordered_json arr = ordered_json::array();
  for (const auto& p : grid) {
    ordered_json e;
    e["max_distance"] = p.max_distance;
    e["time_win_size"] = p.time_win_size;
    e["val_accuracy"] = p.val.accuracy;
    e["test_accuracy"] = p.test.accuracy;
    e["gap"] = p.gap;
    arr.push_back(e);
  }
  return arr;
}

int cmd_train(const std::string& dataset_dir, const ModelFlags& mf, const TrainFlags& tf,
              uint64_t seed, const std::string& out_dir) {
  ManifestInputs in;
  SeuDataset ds = load_dataset(dataset_dir);
  TrainConfig cfg = tf.config(mf.spec(), seed);
  TrainResult res = train(ds, cfg);
  ModelSpec spec = spec_with_window(cfg.model, ds.time_win_size);

  ensure_dir(out_dir);
  write_checkpoint_dir(out_dir + "/checkpoint", res.params, spec);

  ordered_json rep;
  rep["kind"] = "train";
  rep["circuit"] = ds.circuit;
  rep["arch"] = arch_name(spec.arch);
  rep["seed"] = seed;
  rep["chosen"] = {{"max_distance", ds.max_distance}, {"time_win_size", ds.time_win_size}};
  rep["best_epoch"] = res.best_epoch;
  rep["epochs_run"] = res.history.size();
  ordered_json hist = ordered_json::array();
  for (const auto& h : res.history)
    hist.push_back({{"epoch", h.epoch},
                    {"train_loss", h.train_loss},
                    {"train_acc", h.train_acc},
                    {"val_acc", h.val_acc}});
  rep["history"] = hist;

  bool has_val = false, has_test = false;
  for (uint8_t b : ds.masks.val) has_val |= b != 0;
  for (uint8_t b : ds.masks.test_unaudited()) has_test |= b != 0;
  Metrics val, test;
  if (has_val) {
    val = evaluate(spec, res.params, ds, ds.masks.val);
    rep["val"] = metrics_json(val);
  }
  if (has_test) {
    test = evaluate(spec, res.params, ds, ds.masks.test());
    rep["test"] = metrics_json(test);
  }
  if (has_val && has_test) rep["gaps"] = {val.accuracy - test.accuracy};
  write_file(out_dir + "/report.json", rep.dump(2) + "\n");

  ordered_json cfg_json = mf.config();
  cfg_json["lr"] = tf.lr;
  cfg_json["epochs"] = tf.epochs;
  cfg_json["patience"] = tf.patience;
  cfg_json["seed"] = seed;
  cfg_json["dataset"] = dataset_dir;
  write_run_manifest(out_dir + "/run_manifest.json", "train", in, cfg_json,
                     {out_dir + "/checkpoint", out_dir + "/report.json"});

  logf("train: best epoch %d of %zu, val acc %.2f%s", res.best_epoch, res.history.size(),
       res.best_val_acc, has_test ? "" : " (no test cells)");
  if (has_test) logf("train: test accuracy %.2f", test.accuracy);
  return 0;
}

int cmd_tune(const std::string& netlist_path, const std::string& vcd_path,
             const std::string& labels_path, const ModelFlags& mf, const TrainFlags& tf,
             const std::string& split_text, uint64_t seed, std::vector<uint64_t> seeds,
             std::vector<int> md_grid, std::vector<int> win_grid, int jobs,
             const std::string& out_dir) {
  ManifestInputs in;
  Netlist nl = parse_netlist(in.read(netlist_path));
  WaveMatrix wave = load_wave(in.read(vcd_path), nl);
  FaultLabelSet labels = parse_labels(in.read(labels_path));

  TuneConfig cfg;
  cfg.model = mf.spec();
  cfg.max_distance_grid = md_grid;
  cfg.time_win_grid = win_grid;
  cfg.split = parse_split(split_text);
  cfg.train = tf.config(cfg.model, seed);
  cfg.jobs = jobs;

  ensure_dir(out_dir);
  ordered_json rep;
  std::vector<std::string> outputs = {out_dir + "/report.json"};

  if (seeds.size() <= 1) {
    if (seeds.size() == 1) cfg.train.seed = seeds[0];
    TuneResult t = tune(nl, wave, labels, nl.name, cfg);
    if (t.test_reads_before_selection != 0)
      throw SpecInvalid("test mask was read before hyperparameter selection");
    ModelSpec spec = spec_with_window(cfg.model, t.best_time_win);
    write_checkpoint_dir(out_dir + "/checkpoint", t.params, spec);
    save_dataset(t.dataset, out_dir + "/dataset");
    outputs.push_back(out_dir + "/checkpoint");
    outputs.push_back(out_dir + "/dataset");

    rep["kind"] = "tune";
    rep["circuit"] = nl.name;
    rep["arch"] = arch_name(spec.arch);
    rep["seed"] = cfg.train.seed;
    rep["chosen"] = {{"max_distance", t.best_max_distance},
                     {"time_win_size", t.best_time_win}};
    rep["val"] = metrics_json(t.val);
    rep["test"] = metrics_json(t.test);
    rep["grid"] = grid_json(t.grid);
    ordered_json gaps = ordered_json::array();
    for (const auto& p : t.grid) gaps.push_back(p.gap);
    rep["gaps"] = gaps;
    logf("tune: chose max_distance %d, time_win_size %d (val %.2f, test %.2f)",
         t.best_max_distance, t.best_time_win, t.val.accuracy, t.test.accuracy);
  } else {
    TrainReport r = repeat_experiments(nl, wave, labels, nl.name, cfg, seeds);
    rep["kind"] = "tune-repeat";
    rep["circuit"] = nl.name;
    rep["arch"] = mf.arch;
    rep["seeds"] = seeds;
    rep["diverged"] = r.diverged;
    ordered_json exps = ordered_json::array();
    for (const auto& e : r.experiments) {
      ordered_json ej;
      ej["seed"] = e.seed;
      ej["diverged"] = e.diverged;
      if (!e.diverged) {
        ej["chosen"] = {{"max_distance", e.best_max_distance},
                        {"time_win_size", e.best_time_win}};
        ej["val"] = metrics_json(e.val);
        ej["test"] = metrics_json(e.test);
        ej["gaps"] = e.gaps;
      }
      exps.push_back(ej);
    }
    rep["experiments"] = exps;
    rep["accuracy"] = {{"mean", r.accuracy.mean},
                       {"std", r.accuracy.stddev},
                       {"formatted", format_mean_std(r.accuracy)}};
    rep["precision"] = {{"mean", r.precision.mean},
                        {"std", r.precision.stddev},
                        {"formatted", format_mean_std(r.precision)}};
    rep["recall"] = {{"mean", r.recall.mean},
                     {"std", r.recall.stddev},
                     {"formatted", format_mean_std(r.recall)}};
    rep["gaps"] = r.gaps;
    if (!r.gaps.empty())
      rep["gap_box"] = {{"min", r.gap_box.min},
                        {"p25", r.gap_box.p25},
                        {"median", r.gap_box.median},
                        {"p75", r.gap_box.p75},
                        {"max", r.gap_box.max}};
    std::printf("%s", report_table(r).c_str());
  }
  write_file(out_dir + "/report.json", rep.dump(2) + "\n");

  ordered_json cfg_json = mf.config();
  cfg_json["split"] = split_text;
  cfg_json["seed"] = seed;
  cfg_json["seeds"] = seeds;
  cfg_json["max_distance_grid"] = md_grid;
  cfg_json["time_win_grid"] = win_grid;
  cfg_json["lr"] = tf.lr;
  cfg_json["epochs"] = tf.epochs;
  cfg_json["patience"] = tf.patience;
  cfg_json["jobs"] = jobs;
  write_run_manifest(out_dir + "/run_manifest.json", "tune", in, cfg_json, outputs);
  return 0;
}

struct LoadedCheckpoint {
  std::map<std::string, Tensor> params;
  ModelSpec spec;
};

LoadedCheckpoint read_checkpoint_dir(ManifestInputs& in, const std::string& dir) {
  LoadedCheckpoint c;
  c.params = load_checkpoint(dir);
  c.spec = spec_from_json(in.read(dir + "/spec.json"));
  return c;
}

ordered_json predictions_json(const SeuDataset& ds, const std::vector<int8_t>& preds) {
  ordered_json arr = ordered_json::array();
  for (size_t ti = 0; ti < ds.samples.size(); ++ti) {
    ordered_json row;
    row["t_seu"] = ds.samples[ti].t_seu;
    ordered_json p = ordered_json::array();
    for (int ff = 0; ff < ds.graph.n; ++ff) p.push_back(static_cast<int>(preds[ds.cell(ti, ff)]));
    row["pred"] = p;
    arr.push_back(row);
  }
  return arr;
}

int cmd_predict(const std::string& checkpoint_dir, const std::string& dataset_dir,
                const std::string& train_dataset_dir, const std::string& netlist_path,
                const std::string& vcd_path, const std::string& labels_path,
                const std::string& out_path) {
  ManifestInputs in;
  LoadedCheckpoint ckpt = read_checkpoint_dir(in, checkpoint_dir);

  SeuDataset ds;
  bool cross = dataset_dir.empty();
  if (!cross) {
    ds = load_dataset(dataset_dir);
  } else {
    if (train_dataset_dir.empty() || netlist_path.empty() || vcd_path.empty() ||
        labels_path.empty())
      throw SpecInvalid(
          "predict needs --dataset, or --train-dataset with --netlist/--vcd/--labels");
    SeuDataset train_ds = load_dataset(train_dataset_dir);
    Netlist nl = parse_netlist(in.read(netlist_path));
    WaveMatrix wave = load_wave(in.read(vcd_path), nl);
    FaultLabelSet labels = parse_labels(in.read(labels_path));
    ds = cross_testcase_view(train_ds, nl, wave, labels);
  }
  if (ckpt.spec.time_win_size != ds.time_win_size)
    throw SpecInvalid("checkpoint expects time_win_size " +
                      std::to_string(ckpt.spec.time_win_size) + ", dataset has " +
                      std::to_string(ds.time_win_size));

  std::vector<int8_t> preds = predict_all(ckpt.spec, ckpt.params, ds);

  ordered_json rep;
  rep["circuit"] = ds.circuit;
  rep["arch"] = arch_name(ckpt.spec.arch);
  rep["n"] = ds.graph.n;
  rep["node_names"] = ds.graph.node_names;
  rep["cross_testcase"] = cross;
  rep["predictions"] = predictions_json(ds, preds);
  auto mask_metrics = [&](const char* name, const std::vector<uint8_t>& mask) {
    for (uint8_t b : mask)
      if (b) {
        rep["metrics"][name] = metrics_json(evaluate(ckpt.spec, ckpt.params, ds, mask));
        return;
      }
  };
  mask_metrics("train", ds.masks.train);
  mask_metrics("val", ds.masks.val);
  mask_metrics("test", ds.masks.test());

  std::string text = rep.dump(2) + "\n";
  if (out_path.empty()) {
    std::printf("%s", text.c_str());
  } else {
    write_file(out_path, text);
    ordered_json cfg{{"checkpoint", checkpoint_dir},
                     {"dataset", dataset_dir},
                     {"train_dataset", train_dataset_dir}};
    write_run_manifest(out_path + ".manifest.json", "predict", in, cfg, {out_path});
  }
  return 0;
}

int cmd_report(const std::vector<std::string>& run_dirs, const std::string& out_path) {
  ManifestInputs in;
  std::vector<double> prec, rec, acc;
  std::vector<double> gaps;
  ordered_json runs = ordered_json::array();
  for (const std::string& dir : run_dirs) {
    std::string path = std::filesystem::is_directory(dir) ? dir + "/report.json" : dir;
    json rep;
    try {
      rep = json::parse(in.read(path));
    } catch (const json::exception& e) {
      throw SyntaxError(path + ": " + e.what());
    }
    std::string kind = rep.value("kind", "");
    auto take_metrics = [&](const json& m) {
      prec.push_back(m.at("precision").get<double>());
      rec.push_back(m.at("recall").get<double>());
      acc.push_back(m.at("accuracy").get<double>());
    };
    if (kind == "train" || kind == "tune") {
      if (rep.contains("test")) take_metrics(rep.at("test"));
      for (const auto& g : rep.value("gaps", json::array())) gaps.push_back(g.get<double>());
    } else if (kind == "tune-repeat") {
      for (const auto& e : rep.at("experiments")) {
        if (e.value("diverged", false)) continue;
        take_metrics(e.at("test"));
        for (const auto& g : e.value("gaps", json::array())) gaps.push_back(g.get<double>());
      }
    } else {
      throw SpecInvalid(path + ": not a seupred run report");
    }
    runs.push_back({{"path", path}, {"kind", kind}});
  }
  if (acc.empty()) throw SpecInvalid("no completed runs with test metrics to aggregate");

  AggregateStats sp = aggregate(prec), sr = aggregate(rec), sa = aggregate(acc);
  ordered_json rep;
  rep["runs"] = runs;
  rep["count"] = acc.size();
  rep["accuracy"] = {{"mean", sa.mean}, {"std", sa.stddev}, {"formatted", format_mean_std(sa)}};
  rep["precision"] = {{"mean", sp.mean}, {"std", sp.stddev}, {"formatted", format_mean_std(sp)}};
  rep["recall"] = {{"mean", sr.mean}, {"std", sr.stddev}, {"formatted", format_mean_std(sr)}};
  std::printf("runs %zu\naccuracy %s\nprecision %s\nrecall %s\n", acc.size(),
              format_mean_std(sa).c_str(), format_mean_std(sp).c_str(),
              format_mean_std(sr).c_str());
  if (!gaps.empty()) {
    BoxStats b = box_stats(gaps);
    rep["gap_box"] = {{"min", b.min}, {"p25", b.p25}, {"median", b.median},
                      {"p75", b.p75}, {"max", b.max}};
    rep["gaps"] = gaps;
    std::printf("gap min %.2f  p25 %.2f  median %.2f  p75 %.2f  max %.2f\n", b.min, b.p25,
                b.median, b.p75, b.max);
  }
  if (!out_path.empty()) {
    write_file(out_path, rep.dump(2) + "\n");
    write_run_manifest(out_path + ".manifest.json", "report", in, ordered_json::object(),
                       {out_path});
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SEU fault-simulation prediction toolkit"};
  app.require_subcommand(1);
  int default_jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));

  // netlist-check
  std::string nc_path;
  auto* nc = app.add_subcommand("netlist-check", "validate a netlist file");
  nc->add_option("--netlist", nc_path, "netlist JSON")->required();

  // gen-circuit
  uint64_t gc_seed = 0;
  int gc_ff = 64, gc_lo = 2, gc_hi = 5;
  std::string gc_out;
  auto* gc = app.add_subcommand("gen-circuit", "generate a synthetic circuit");
  gc->add_option("--seed", gc_seed, "generator seed")->capture_default_str();
  gc->add_option("--n-ff", gc_ff, "flip-flop count")->capture_default_str();
  gc->add_option("--cone-lo", gc_lo, "min cone size")->capture_default_str();
  gc->add_option("--cone-hi", gc_hi, "max cone size")->capture_default_str();
  gc->add_option("--out", gc_out, "output netlist path")->required();

  // faultsim
  std::string fs_netlist, fs_stimulus, fs_out;
  std::vector<int> fs_times;
  int fs_evenly = 0, fs_cycles = 0, fs_jobs = default_jobs;
  uint64_t fs_seed = 0;
  auto* fs = app.add_subcommand("faultsim", "run an exhaustive SEU campaign");
  fs->add_option("--netlist", fs_netlist, "netlist JSON")->required();
  fs->add_option("--stimulus", fs_stimulus, "stimulus JSON (omit to generate)");
  fs->add_option("--cycles", fs_cycles, "cycles for a generated stimulus");
  fs->add_option("--times", fs_times, "comma-separated injection times")->delimiter(',');
  fs->add_option("--times-evenly", fs_evenly, "spread this many times over the run");
  fs->add_option("--seed", fs_seed, "stimulus seed")->capture_default_str();
  fs->add_option("--jobs", fs_jobs, "worker threads")->capture_default_str();
  fs->add_option("--out", fs_out, "output directory")->required();

  // build-dataset
  std::string bd_netlist, bd_vcd, bd_labels, bd_split = "hybrid:0.6,0.2,0.2", bd_out;
  int bd_md = 6, bd_win = 20, bd_jobs = default_jobs;
  uint64_t bd_seed = 0;
  auto* bd = app.add_subcommand("build-dataset", "extract graph pairs from a campaign");
  bd->add_option("--netlist", bd_netlist, "netlist JSON")->required();
  bd->add_option("--vcd", bd_vcd, "golden waveform VCD")->required();
  bd->add_option("--labels", bd_labels, "campaign labels JSON")->required();
  bd->add_option("--max-distance", bd_md, "graph connectivity radius")->capture_default_str();
  bd->add_option("--time-win-size", bd_win, "feature window length")->capture_default_str();
  bd->add_option("--split", bd_split, "hybrid:a,b,c | spatial:f | temporal:f")
      ->capture_default_str();
  bd->add_option("--seed", bd_seed, "split seed")->capture_default_str();
  bd->add_option("--jobs", bd_jobs, "worker threads")->capture_default_str();
  bd->add_option("--out", bd_out, "dataset directory")->required();

  // train
  std::string tr_dataset, tr_out;
  uint64_t tr_seed = 0;
  ModelFlags tr_model;
  TrainFlags tr_flags;
  auto* tr = app.add_subcommand("train", "train one model on a dataset");
  tr->add_option("--dataset", tr_dataset, "dataset directory")->required();
  tr_model.attach(tr);
  tr_flags.attach(tr);
  tr->add_option("--seed", tr_seed, "init/shuffle seed")->capture_default_str();
  tr->add_option("--out", tr_out, "output directory")->required();

  // tune
  std::string tu_netlist, tu_vcd, tu_labels, tu_split = "hybrid:0.6,0.2,0.2", tu_out;
  std::vector<int> tu_md = {6, 7, 8, 9, 10};
  std::vector<int> tu_win = {20, 30, 40, 50, 60};
  std::vector<uint64_t> tu_seeds;
  uint64_t tu_seed = 0;
  int tu_jobs = default_jobs;
  ModelFlags tu_model;
  TrainFlags tu_flags;
  auto* tu = app.add_subcommand("tune", "grid-search max-distance and window");
  tu->add_option("--netlist", tu_netlist, "netlist JSON")->required();
  tu->add_option("--vcd", tu_vcd, "golden waveform VCD")->required();
  tu->add_option("--labels", tu_labels, "campaign labels JSON")->required();
  tu_model.attach(tu);
  tu_flags.attach(tu);
  tu->add_option("--split", tu_split, "hybrid:a,b,c | spatial:f | temporal:f")
      ->capture_default_str();
  tu->add_option("--max-distance-grid", tu_md, "candidate distances")->delimiter(',');
  tu->add_option("--time-win-grid", tu_win, "candidate windows")->delimiter(',');
  tu->add_option("--seed", tu_seed, "seed for a single run")->capture_default_str();
  tu->add_option("--seeds", tu_seeds, "repeat the pipeline per seed")->delimiter(',');
  tu->add_option("--jobs", tu_jobs, "worker threads")->capture_default_str();
  tu->add_option("--out", tu_out, "output directory")->required();

  // predict
  std::string pr_ckpt, pr_dataset, pr_train_ds, pr_netlist, pr_vcd, pr_labels, pr_out;
  auto* pr = app.add_subcommand("predict", "annotate a dataset or a new test case");
  pr->add_option("--checkpoint", pr_ckpt, "checkpoint directory")->required();
  pr->add_option("--dataset", pr_dataset, "dataset directory (in-case mode)");
  pr->add_option("--train-dataset", pr_train_ds, "training dataset (cross-case mode)");
  pr->add_option("--netlist", pr_netlist, "netlist JSON (cross-case mode)");
  pr->add_option("--vcd", pr_vcd, "new test case VCD (cross-case mode)");
  pr->add_option("--labels", pr_labels, "new test case labels (cross-case mode)");
  pr->add_option("--out", pr_out, "predictions JSON (stdout when omitted)");

  // report
  std::vector<std::string> rp_runs;
  std::string rp_out;
  auto* rp = app.add_subcommand("report", "aggregate run reports");
  rp->add_option("runs", rp_runs, "run directories or report files")->required();
  rp->add_option("--out", rp_out, "aggregated JSON path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*nc) return cmd_netlist_check(nc_path);
    if (*gc) return cmd_gen_circuit(gc_seed, gc_ff, gc_lo, gc_hi, gc_out);
    if (*fs)
      return cmd_faultsim(fs_netlist, fs_stimulus, fs_cycles, fs_times, fs_evenly, fs_seed,
                          fs_jobs, fs_out);
    if (*bd)
      return cmd_build_dataset(bd_netlist, bd_vcd, bd_labels, bd_md, bd_win, bd_split, bd_seed,
                               bd_jobs, bd_out);
    if (*tr) return cmd_train(tr_dataset, tr_model, tr_flags, tr_seed, tr_out);
    if (*tu)
      return cmd_tune(tu_netlist, tu_vcd, tu_labels, tu_model, tu_flags, tu_split, tu_seed,
                      tu_seeds, tu_md, tu_win, tu_jobs, tu_out);
    if (*pr)
      return cmd_predict(pr_ckpt, pr_dataset, pr_train_ds, pr_netlist, pr_vcd, pr_labels, pr_out);
    if (*rp) return cmd_report(rp_runs, rp_out);
  } catch (const ValidationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const RuntimeFailure& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return 2;
  }
  return 0;
}
