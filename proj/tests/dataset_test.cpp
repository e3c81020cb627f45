#include "seupred/dataset.hpp"

#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <numeric>

#include "seupred/errors.hpp"
#include "seupred/faultsim.hpp"
#include "seupred/io_util.hpp"
#include "seupred/rng.hpp"

using namespace seupred;

namespace {

SpatialGraph fake_graph(int n) {
  SpatialGraph g;
  g.n = n;
  g.max_distance = 1;
  g.c = 8;
  for (int i = 0; i < n; ++i) g.node_names.push_back("ff" + std::to_string(i));
  return g;
}

FeatureTensor fake_tensor(int t_seu, int t, int n) {
  FeatureTensor ten;
  ten.t_seu = t_seu;
  ten.t = t;
  ten.n = n;
  ten.x.assign(static_cast<size_t>(t) * n, 0.0f);
  for (size_t i = 0; i < ten.x.size(); ++i) ten.x[i] = static_cast<float>((i + t_seu) % 3);
  return ten;
}

FaultLabelSet fake_labels(int n, const std::vector<int>& times) {
  FaultLabelSet ls;
  ls.n_ff = n;
  ls.injection_times = times;
  for (int t : times)
    for (int ff = 0; ff < n; ++ff) ls.labels[{ff, t}] = static_cast<uint8_t>((ff + t) % 2);
  return ls;
}

SeuDataset fake_dataset(int n, int num_times, int t_win = 4) {
  std::vector<int> times;
  for (int i = 0; i < num_times; ++i) times.push_back(2 + i);
  std::vector<FeatureTensor> tensors;
  for (int t : times) tensors.push_back(fake_tensor(t, t_win, n));
  return assemble(fake_graph(n), tensors, fake_labels(n, times), "fake");
}

size_t count_set(const std::vector<uint8_t>& m) {
  return static_cast<size_t>(std::count(m.begin(), m.end(), 1));
}

WaveMatrix wave_of(const SimTrace& tr, const Netlist& nl) {
  WaveMatrix w;
  w.ff_names = nl.ff_names();
  w.cycles = tr.cycles;
  w.n = tr.n_ff;
  w.values.resize(static_cast<size_t>(w.cycles) * w.n);
  for (int c = 0; c < w.cycles; ++c)
    for (int i = 0; i < w.n; ++i) w.values[static_cast<size_t>(c) * w.n + i] = tr.ff_at(c, i);
  return w;
}

struct Pipeline {
  Netlist nl;
  Stimulus stim;
  WaveMatrix wave;
  FaultLabelSet labels;
  SeuDataset ds;
};

Pipeline run_pipeline(uint64_t seed, int n_ff, const std::vector<int>& times, int t_win,
                      int max_distance) {
  Pipeline p;
  p.nl = gen_synthetic_circuit(seed, n_ff, 2, 4);
  p.stim = gen_stimulus(p.nl, *std::max_element(times.begin(), times.end()) + t_win + 4, seed + 1);
  p.wave = wave_of(simulate_golden(p.nl, p.stim), p.nl);
  p.labels = run_campaign(p.nl, p.stim, times);
  SpatialGraph g = build_spatial_graph(p.nl, max_distance);
  BatchTensors batch = batch_feature_tensors(p.wave, times, t_win);
  REQUIRE(batch.skipped.empty());
  p.ds = assemble(g, batch.tensors, p.labels, "synth" + std::to_string(seed));
  return p;
}

std::string temp_dir(const std::string& tag) {
  auto dir = std::filesystem::temp_directory_path() / ("seupred_ds_" + tag);
  std::filesystem::remove_all(dir);
  return dir.string();
}

}  // namespace

TEST_CASE("assemble pairs each injection time with an aligned label row") {
  SeuDataset ds = fake_dataset(3, 2);
  CHECK(ds.grid_size() == 6);
  CHECK(ds.samples.size() == 2);
  CHECK(ds.injection_times() == std::vector<int>{2, 3});
  for (const auto& s : ds.samples)
    for (int ff = 0; ff < 3; ++ff) CHECK(s.labels[ff] == (ff + s.t_seu) % 2);

  // Out-of-order tensors land sorted by injection time.
  std::vector<FeatureTensor> rev = {fake_tensor(9, 4, 3), fake_tensor(5, 4, 3)};
  SeuDataset ds2 = assemble(fake_graph(3), rev, fake_labels(3, {5, 9}), "r");
  CHECK(ds2.injection_times() == std::vector<int>{5, 9});
  CHECK(ds2.samples[1].x.t_seu == 9);
}

TEST_CASE("assemble rejects node count and label coverage mismatches") {
  auto g = fake_graph(3);
  std::vector<FeatureTensor> tens = {fake_tensor(2, 4, 3)};
  CHECK_THROWS_AS(assemble(g, tens, fake_labels(4, {2}), "x"), NodeCountMismatch);
  std::vector<FeatureTensor> wrong_n = {fake_tensor(2, 4, 2)};
  CHECK_THROWS_AS(assemble(g, wrong_n, fake_labels(3, {2}), "x"), NodeCountMismatch);
  CHECK_THROWS_AS(assemble(g, tens, fake_labels(3, {7}), "x"), MissingLabels);
  std::vector<FeatureTensor> dup = {fake_tensor(2, 4, 3), fake_tensor(2, 4, 3)};
  CHECK_THROWS_AS(assemble(g, dup, fake_labels(3, {2}), "x"), SpecInvalid);
  std::vector<FeatureTensor> ragged = {fake_tensor(2, 4, 3), fake_tensor(3, 5, 3)};
  CHECK_THROWS_AS(assemble(g, ragged, fake_labels(3, {2, 3}), "x"), SpecInvalid);

  // Cells absent from the label set become unlabeled rather than an error.
  FaultLabelSet partial = fake_labels(3, {2});
  partial.labels.erase({1, 2});
  SeuDataset ds = assemble(g, tens, partial, "x");
  CHECK(ds.samples[0].labels[1] == -1);
  CHECK(ds.samples[0].labels[0] >= 0);
}

TEST_CASE("assembled dataset keeps the campaign's positive rate") {
  Pipeline p = run_pipeline(64, 64, {3, 5, 7, 9}, 4, 2);
  size_t ls_pos = 0;
  for (const auto& [site, v] : p.labels.labels) ls_pos += v;
  size_t ds_pos = 0, ds_labeled = 0;
  for (const auto& s : p.ds.samples)
    for (int8_t v : s.labels) {
      ds_labeled += v >= 0;
      ds_pos += v == 1;
    }
  CHECK(ds_labeled == p.labels.size());
  CHECK(ds_pos == ls_pos);
  CHECK(p.ds.grid_size() == 64 * 4);
}

TEST_CASE("hybrid split partitions the grid by the requested fractions") {
  // 50 flip-flops x 131 times = 6550 cells; 60/20/20 lands exactly.
  SeuDataset ds = fake_dataset(50, 131, 2);
  ds.masks = split_hybrid(ds, 0.6, 0.2, 0.2, 7);
  validate_masks(ds);
  CHECK(count_set(ds.masks.train) == 3930);
  CHECK(count_set(ds.masks.val) == 1310);
  CHECK(count_set(ds.masks.test_unaudited()) == 1310);

  SUBCASE("same seed reproduces the masks, another seed moves cells") {
    SplitMasks again = split_hybrid(ds, 0.6, 0.2, 0.2, 7);
    CHECK(again.train == ds.masks.train);
    CHECK(again.val == ds.masks.val);
    CHECK(again.test_unaudited() == ds.masks.test_unaudited());
    SplitMasks other = split_hybrid(ds, 0.6, 0.2, 0.2, 8);
    CHECK(other.train != ds.masks.train);
  }
  SUBCASE("everything-in-train and partial-coverage fractions") {
    SplitMasks all = split_hybrid(ds, 1.0, 0.0, 0.0, 3);
    CHECK(count_set(all.train) == ds.grid_size());
    SplitMasks half = split_hybrid(ds, 0.5, 0.0, 0.0, 3);
    CHECK(count_set(half.train) == 3275);
    CHECK(count_set(half.val) == 0);
  }
  SUBCASE("fractions above 1 are rejected") {
    CHECK_THROWS_AS(split_hybrid(ds, 0.8, 0.2, 0.2, 3), SpecInvalid);
    CHECK_THROWS_AS(split_hybrid(ds, -0.1, 0.5, 0.5, 3), SpecInvalid);
  }
}

TEST_CASE("hybrid split skips unlabeled cells; stratified keeps class shares") {
  auto g = fake_graph(10);
  std::vector<FeatureTensor> tens;
  for (int t = 2; t < 12; ++t) tens.push_back(fake_tensor(t, 3, 10));
  FaultLabelSet ls = fake_labels(10, {2, 3, 4, 5, 6, 7, 8, 9, 10, 11});
  for (int t = 2; t < 12; ++t) ls.labels.erase({3, t});  // ff 3 never labeled
  SeuDataset ds = assemble(g, tens, ls, "gap");

  ds.masks = split_hybrid(ds, 0.6, 0.2, 0.2, 11);
  validate_masks(ds);
  size_t covered = count_set(ds.masks.train) + count_set(ds.masks.val) +
                   count_set(ds.masks.test_unaudited());
  CHECK(covered == 90);  // 100 cells minus 10 unlabeled

  SplitMasks strat = split_hybrid(ds, 0.5, 0.25, 0.25, 11, true);
  size_t pos_tr = 0, neg_tr = 0;
  for (size_t ti = 0; ti < ds.samples.size(); ++ti)
    for (int ff = 0; ff < 10; ++ff)
      if (strat.train[ds.cell(ti, ff)]) (ds.samples[ti].labels[ff] == 1 ? pos_tr : neg_tr)++;
  // 45 cells per class; half of each class trains.
  CHECK(pos_tr == 23);
  CHECK(neg_tr == 23);
}

TEST_CASE("spatial split draws an independent flip-flop subset per time") {
  SeuDataset ds = fake_dataset(4, 2);
  ds.masks = split_spatial(ds, 0.5, 1);
  validate_masks(ds);
  for (size_t ti = 0; ti < 2; ++ti) {
    size_t tr = 0, va = 0, te = 0;
    for (int ff = 0; ff < 4; ++ff) {
      tr += ds.masks.train[ds.cell(ti, ff)];
      va += ds.masks.val[ds.cell(ti, ff)];
      te += ds.masks.test_unaudited()[ds.cell(ti, ff)];
    }
    CHECK(tr == 2);
    CHECK(va == 1);
    CHECK(te == 1);
  }

  // Resampled per time: some seed picks different train sets at the two times.
  bool differs = false;
  for (uint64_t seed = 0; seed < 20 && !differs; ++seed) {
    SplitMasks m = split_spatial(ds, 0.5, seed);
    for (int ff = 0; ff < 4; ++ff)
      if (m.train[ds.cell(0, ff)] != m.train[ds.cell(1, ff)]) differs = true;
  }
  CHECK(differs);
  CHECK_THROWS_AS(split_spatial(ds, 0.0, 1), SpecInvalid);
  CHECK_THROWS_AS(split_spatial(ds, 1.0, 1), SpecInvalid);
}

TEST_CASE("temporal split trains on whole injection times") {
  SeuDataset ds = fake_dataset(5, 4);
  ds.masks = split_temporal(ds, 0.5, 9);
  validate_masks(ds);
  int train_times = 0, val_times = 0, test_times = 0;
  for (size_t ti = 0; ti < 4; ++ti) {
    size_t tr = 0, va = 0, te = 0;
    for (int ff = 0; ff < 5; ++ff) {
      tr += ds.masks.train[ds.cell(ti, ff)];
      va += ds.masks.val[ds.cell(ti, ff)];
      te += ds.masks.test_unaudited()[ds.cell(ti, ff)];
    }
    // Each time is wholly one split.
    CHECK(tr + va + te == 5);
    CHECK(std::max({tr, va, te}) == 5);
    train_times += tr == 5;
    val_times += va == 5;
    test_times += te == 5;
  }
  CHECK(train_times == 2);
  CHECK(val_times == 1);
  CHECK(test_times == 1);
}

TEST_CASE("spatial train membership is uniform across flip-flops") {
  const int n = 10;
  const int num_times = 8;
  const double frac = 0.6;
  SeuDataset ds = fake_dataset(n, num_times);
  std::vector<size_t> hits(n, 0);
  size_t draws = 0;
  for (uint64_t seed = 0; seed < 100; ++seed) {
    SplitMasks m = split_spatial(ds, frac, seed);
    for (size_t ti = 0; ti < static_cast<size_t>(num_times); ++ti) {
      for (int ff = 0; ff < n; ++ff) hits[ff] += m.train[ds.cell(ti, ff)];
      draws += 1;
    }
  }
  for (int ff = 0; ff < n; ++ff) {
    double freq = static_cast<double>(hits[ff]) / static_cast<double>(draws);
    CHECK(freq == doctest::Approx(frac).epsilon(0.084));  // +-5 percentage points
  }
}

TEST_CASE("temporal train membership is uniform across times") {
  SeuDataset ds = fake_dataset(4, 10);
  std::vector<size_t> hits(10, 0);
  for (uint64_t seed = 0; seed < 100; ++seed) {
    SplitMasks m = split_temporal(ds, 0.5, seed);
    for (size_t ti = 0; ti < 10; ++ti) hits[ti] += m.train[ds.cell(ti, 0)];
  }
  size_t total = std::accumulate(hits.begin(), hits.end(), size_t{0});
  CHECK(total == 500);  // exactly floor(0.5 * 10) times per seed
  for (size_t ti = 0; ti < 10; ++ti) {
    double freq = static_cast<double>(hits[ti]) / 100.0;
    CHECK(freq > 0.35);
    CHECK(freq < 0.65);
  }
}

TEST_CASE("mask validation flags overlap and unlabeled coverage") {
  SeuDataset ds = fake_dataset(3, 2);
  ds.masks = split_hybrid(ds, 0.5, 0.25, 0.25, 1);
  validate_masks(ds);
  SUBCASE("overlap") {
    ds.masks.val = ds.masks.train;
    CHECK_THROWS_AS(validate_masks(ds), SpecInvalid);
  }
  SUBCASE("unlabeled cell") {
    ds.samples[0].labels[0] = -1;
    ds.masks.train.assign(ds.grid_size(), 0);
    ds.masks.val.assign(ds.grid_size(), 0);
    for (size_t i = 0; i < ds.grid_size(); ++i) ds.masks.set_test(i, 0);
    ds.masks.train[ds.cell(0, 0)] = 1;
    CHECK_THROWS_AS(validate_masks(ds), SpecInvalid);
  }
  SUBCASE("wrong grid") {
    ds.masks.train.resize(3);
    CHECK_THROWS_AS(validate_masks(ds), SpecInvalid);
  }
}

TEST_CASE("split spec strings parse and round-trip") {
  SplitSpec h = parse_split("hybrid:0.6,0.2,0.2");
  CHECK(h.kind == SplitSpec::Kind::Hybrid);
  CHECK(h.f_train == doctest::Approx(0.6));
  CHECK(!h.stratified);
  CHECK(split_to_string(h) == "hybrid:0.6,0.2,0.2");

  SplitSpec hs = parse_split("hybrid:0.5,0.25,0.25+stratified");
  CHECK(hs.stratified);
  CHECK(split_to_string(hs) == "hybrid:0.5,0.25,0.25+stratified");

  SplitSpec sp = parse_split("spatial:0.7");
  CHECK(sp.kind == SplitSpec::Kind::Spatial);
  CHECK(sp.frac == doctest::Approx(0.7));
  SplitSpec te = parse_split("temporal:0.5");
  CHECK(te.kind == SplitSpec::Kind::Temporal);

  CHECK(parse_split("hybrid").f_train == doctest::Approx(0.6));  // defaults

  CHECK_THROWS_AS(parse_split("banana:1"), SpecInvalid);
  CHECK_THROWS_AS(parse_split("hybrid:0.6,0.2"), SpecInvalid);
  CHECK_THROWS_AS(parse_split("hybrid:a,b,c"), SpecInvalid);
  CHECK_THROWS_AS(parse_split("spatial:"), SpecInvalid);
  CHECK_THROWS_AS(parse_split("spatial:0.7+stratified"), SpecInvalid);
  CHECK_THROWS_AS(parse_split("temporal:0.5x"), SpecInvalid);
}

TEST_CASE("test mask reads are audited") {
  SeuDataset ds = fake_dataset(3, 2);
  ds.masks = split_hybrid(ds, 0.6, 0.2, 0.2, 1);
  CHECK(ds.masks.test_read_count() == 0);
  (void)ds.masks.train;
  (void)ds.masks.test_unaudited();
  CHECK(ds.masks.test_read_count() == 0);
  (void)ds.masks.test();
  (void)ds.masks.test();
  CHECK(ds.masks.test_read_count() == 2);
  ds.masks.reset_test_audit();
  CHECK(ds.masks.test_read_count() == 0);
}

TEST_CASE("dataset directories round-trip every field") {
  Pipeline p = run_pipeline(12, 12, {3, 5, 8}, 5, 2);
  p.ds.seed = 42;
  p.ds.masks = split_hybrid(p.ds, 0.6, 0.2, 0.2, 42);
  std::string dir = temp_dir("roundtrip");
  save_dataset(p.ds, dir);
  SeuDataset back = load_dataset(dir);
  CHECK(dataset_equal(p.ds, back));
  CHECK(back.graph.src == p.ds.graph.src);
  CHECK(back.graph.edge_feat == p.ds.graph.edge_feat);
  CHECK(back.circuit == p.ds.circuit);

  SUBCASE("truncated features file") {
    std::string f = dir + "/features_5.bin";
    std::string bytes = read_file(f);
    write_file(f, bytes.substr(0, bytes.size() - 4));
    CHECK_THROWS_AS(load_dataset(dir), ManifestMismatch);
  }
  SUBCASE("truncated masks file") {
    std::string f = dir + "/masks.bin";
    write_file(f, read_file(f) + "x");
    CHECK_THROWS_AS(load_dataset(dir), ManifestMismatch);
  }
  SUBCASE("corrupt manifest") {
    write_file(dir + "/manifest.json", "{not json");
    CHECK_THROWS_AS(load_dataset(dir), SyntaxError);
  }
  SUBCASE("edge feature bytes changed in place") {
    std::string f = dir + "/edge_feat.bin";
    std::string bytes = read_file(f);
    REQUIRE(!bytes.empty());
    bytes[0] = static_cast<char>(bytes[0] ^ 0x3f);
    write_file(f, bytes);
    CHECK_THROWS_AS(load_dataset(dir), GraphHashMismatch);
  }
  SUBCASE("missing file") {
    std::filesystem::remove(dir + "/edges.bin");
    CHECK_THROWS_AS(load_dataset(dir), IoError);
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("cross test case view reuses the graph and marks all cells test") {
  Pipeline p = run_pipeline(13, 10, {3, 6}, 4, 2);
  p.ds.masks = split_hybrid(p.ds, 0.6, 0.2, 0.2, 5);

  // Second test case: same netlist, fresh stimulus.
  Stimulus stim2 = gen_stimulus(p.nl, 14, 99);
  WaveMatrix wave2 = wave_of(simulate_golden(p.nl, stim2), p.nl);
  FaultLabelSet labels2 = run_campaign(p.nl, stim2, {4, 7});

  SeuDataset view = cross_testcase_view(p.ds, p.nl, wave2, labels2);
  CHECK(structure_hash(view.graph) == structure_hash(p.ds.graph));
  CHECK(view.time_win_size == p.ds.time_win_size);
  CHECK(view.injection_times() == std::vector<int>{4, 7});
  CHECK(count_set(view.masks.train) == 0);
  CHECK(count_set(view.masks.val) == 0);
  CHECK(count_set(view.masks.test_unaudited()) == view.grid_size());
  CHECK(view.grid_size() == 10 * 2);

  // A structurally different circuit is rejected.
  Netlist other = gen_synthetic_circuit(14, 10, 2, 4);
  Stimulus stim3 = gen_stimulus(other, 14, 1);
  WaveMatrix wave3 = wave_of(simulate_golden(other, stim3), other);
  FaultLabelSet labels3 = run_campaign(other, stim3, {4});
  CHECK_THROWS_AS(cross_testcase_view(p.ds, other, wave3, labels3), GraphHashMismatch);
}
