#include "seupred/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>

#include <json.hpp>

#include "seupred/errors.hpp"
#include "seupred/io_util.hpp"
#include "seupred/rng.hpp"

namespace seupred {

std::vector<int> SeuDataset::injection_times() const {
  std::vector<int> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(s.t_seu);
  return out;
}

SeuDataset assemble(const SpatialGraph& graph, const std::vector<FeatureTensor>& tensors,
                    const FaultLabelSet& labels, const std::string& circuit) {
  if (labels.n_ff != graph.n)
    throw NodeCountMismatch("label set covers " + std::to_string(labels.n_ff) +
                            " flip-flops, graph has " + std::to_string(graph.n));
  SeuDataset ds;
  ds.circuit = circuit;
  ds.max_distance = graph.max_distance;
  ds.graph = graph;
  if (!tensors.empty()) ds.time_win_size = tensors.front().t;

  std::set<int> seen;
  std::set<int> labeled_times(labels.injection_times.begin(), labels.injection_times.end());
  for (const auto& ten : tensors) {
    if (ten.n != graph.n)
      throw NodeCountMismatch("feature tensor for t_seu=" + std::to_string(ten.t_seu) +
                              " has " + std::to_string(ten.n) + " nodes, graph has " +
                              std::to_string(graph.n));
    if (ten.t != ds.time_win_size || ten.m != 1)
      throw SpecInvalid("feature tensors must share one [t x n x 1] shape");
    if (!seen.insert(ten.t_seu).second)
      throw SpecInvalid("duplicate feature tensor for t_seu=" + std::to_string(ten.t_seu));
    if (labeled_times.count(ten.t_seu) == 0) throw MissingLabels(ten.t_seu);

    SeuSample s;
    s.t_seu = ten.t_seu;
    s.x = ten;
    s.labels.assign(graph.n, -1);
    for (int ff = 0; ff < graph.n; ++ff)
      if (labels.has(ff, ten.t_seu)) s.labels[ff] = static_cast<int8_t>(labels.get(ff, ten.t_seu));
    ds.samples.push_back(std::move(s));
  }
  std::sort(ds.samples.begin(), ds.samples.end(),
            [](const SeuSample& a, const SeuSample& b) { return a.t_seu < b.t_seu; });
  ds.masks = SplitMasks(ds.grid_size());
  return ds;
}

void validate_masks(const SeuDataset& ds) {
  const size_t grid = ds.grid_size();
  const auto& test = ds.masks.test_unaudited();
  if (ds.masks.train.size() != grid || ds.masks.val.size() != grid || test.size() != grid)
    throw SpecInvalid("split masks do not match the dataset grid");
  for (size_t ti = 0; ti < ds.samples.size(); ++ti) {
    for (int ff = 0; ff < ds.graph.n; ++ff) {
      size_t i = ds.cell(ti, ff);
      int hits = ds.masks.train[i] + ds.masks.val[i] + test[i];
      if (hits > 1) throw SpecInvalid("split masks overlap at cell " + std::to_string(i));
      if (hits == 1 && ds.samples[ti].labels[ff] < 0)
        throw SpecInvalid("split mask covers unlabeled cell " + std::to_string(i));
    }
  }
}

namespace {

std::vector<size_t> labeled_cells(const SeuDataset& ds) {
  std::vector<size_t> out;
  for (size_t ti = 0; ti < ds.samples.size(); ++ti)
    for (int ff = 0; ff < ds.graph.n; ++ff)
      if (ds.samples[ti].labels[ff] >= 0) out.push_back(ds.cell(ti, ff));
  return out;
}

void check_fraction(double f, const char* what) {
  if (!(f > 0.0 && f < 1.0))
    throw SpecInvalid(std::string(what) + " fraction must be in (0, 1)");
}

/// Shuffled copy of `cells`, then the leading llround shares marked
/// train/val/test in order.
void partition_cells(SplitMasks& m, std::vector<size_t> cells, double f_train, double f_val,
                     double f_test, Rng& rng) {
  rng.shuffle(cells);
  const size_t g = cells.size();
  size_t n_train = static_cast<size_t>(std::llround(f_train * static_cast<double>(g)));
  size_t n_val = static_cast<size_t>(std::llround(f_val * static_cast<double>(g)));
  size_t n_test = static_cast<size_t>(std::llround(f_test * static_cast<double>(g)));
  n_train = std::min(n_train, g);
  n_val = std::min(n_val, g - n_train);
  n_test = std::min(n_test, g - n_train - n_val);
  size_t i = 0;
  for (size_t k = 0; k < n_train; ++k) m.train[cells[i++]] = 1;
  for (size_t k = 0; k < n_val; ++k) m.val[cells[i++]] = 1;
  for (size_t k = 0; k < n_test; ++k) m.set_test(cells[i++], 1);
}

int8_t cell_label(const SeuDataset& ds, size_t cell) {
  size_t ti = cell / static_cast<size_t>(ds.graph.n);
  return ds.samples[ti].labels[cell % static_cast<size_t>(ds.graph.n)];
}

}  // namespace

SplitMasks split_hybrid(const SeuDataset& ds, double f_train, double f_val, double f_test,
                        uint64_t seed, bool stratified) {
  if (f_train < 0 || f_val < 0 || f_test < 0 || f_train + f_val + f_test > 1.0 + 1e-9)
    throw SpecInvalid("hybrid split fractions must be nonnegative and sum to at most 1");
  SplitMasks m(ds.grid_size());
  Rng rng(seed);
  auto cells = labeled_cells(ds);
  if (!stratified) {
    partition_cells(m, std::move(cells), f_train, f_val, f_test, rng);
  } else {
    std::vector<size_t> neg, pos;
    for (size_t c : cells) (cell_label(ds, c) == 1 ? pos : neg).push_back(c);
    partition_cells(m, std::move(neg), f_train, f_val, f_test, rng);
    partition_cells(m, std::move(pos), f_train, f_val, f_test, rng);
  }
  return m;
}

SplitMasks split_spatial(const SeuDataset& ds, double frac, uint64_t seed) {
  check_fraction(frac, "spatial train");
  SplitMasks m(ds.grid_size());
  Rng rng(seed);
  const size_t want = static_cast<size_t>(std::floor(frac * ds.graph.n));
  for (size_t ti = 0; ti < ds.samples.size(); ++ti) {
    std::vector<size_t> ffs;
    for (int ff = 0; ff < ds.graph.n; ++ff)
      if (ds.samples[ti].labels[ff] >= 0) ffs.push_back(static_cast<size_t>(ff));
    rng.shuffle(ffs);
    size_t n_train = std::min(want, ffs.size());
    for (size_t k = 0; k < ffs.size(); ++k) {
      size_t c = ds.cell(ti, ffs[k]);
      if (k < n_train)
        m.train[c] = 1;
      else if ((k - n_train) % 2 == 0)
        m.val[c] = 1;
      else
        m.set_test(c, 1);
    }
  }
  return m;
}

SplitMasks split_temporal(const SeuDataset& ds, double frac, uint64_t seed) {
  check_fraction(frac, "temporal train");
  SplitMasks m(ds.grid_size());
  Rng rng(seed);
  std::vector<size_t> order = rng.permutation(ds.samples.size());
  size_t n_train = static_cast<size_t>(std::floor(frac * static_cast<double>(order.size())));
  for (size_t k = 0; k < order.size(); ++k) {
    size_t ti = order[k];
    for (int ff = 0; ff < ds.graph.n; ++ff) {
      if (ds.samples[ti].labels[ff] < 0) continue;
      size_t c = ds.cell(ti, ff);
      if (k < n_train)
        m.train[c] = 1;
      else if ((k - n_train) % 2 == 0)
        m.val[c] = 1;
      else
        m.set_test(c, 1);
    }
  }
  return m;
}

SplitMasks make_split(const SeuDataset& ds, const SplitSpec& spec, uint64_t seed) {
  switch (spec.kind) {
    case SplitSpec::Kind::Hybrid:
      return split_hybrid(ds, spec.f_train, spec.f_val, spec.f_test, seed, spec.stratified);
    case SplitSpec::Kind::Spatial:
      return split_spatial(ds, spec.frac, seed);
    case SplitSpec::Kind::Temporal:
      return split_temporal(ds, spec.frac, seed);
  }
  throw SpecInvalid("unknown split kind");
}

SplitSpec parse_split(const std::string& text) {
  auto colon = text.find(':');
  std::string kind = text.substr(0, colon);
  std::string rest = colon == std::string::npos ? "" : text.substr(colon + 1);
  SplitSpec spec;
  bool strat = false;
  auto plus = rest.find('+');
  if (plus != std::string::npos) {
    if (rest.substr(plus + 1) != "stratified")
      throw SpecInvalid("unknown split modifier in '" + text + "'");
    strat = true;
    rest = rest.substr(0, plus);
  }
  auto parse_num = [&](const std::string& s) {
    try {
      size_t used = 0;
      double v = std::stod(s, &used);
      if (used != s.size()) throw SpecInvalid("bad split fraction '" + s + "'");
      return v;
    } catch (const SpecInvalid&) {
      throw;
    } catch (const std::exception&) {
      throw SpecInvalid("bad split fraction '" + s + "'");
    }
  };
  if (kind == "hybrid") {
    spec.kind = SplitSpec::Kind::Hybrid;
    spec.stratified = strat;
    if (!rest.empty()) {
      auto c1 = rest.find(',');
      auto c2 = rest.find(',', c1 == std::string::npos ? rest.size() : c1 + 1);
      if (c1 == std::string::npos || c2 == std::string::npos)
        throw SpecInvalid("hybrid split needs three fractions: '" + text + "'");
      spec.f_train = parse_num(rest.substr(0, c1));
      spec.f_val = parse_num(rest.substr(c1 + 1, c2 - c1 - 1));
      spec.f_test = parse_num(rest.substr(c2 + 1));
    }
  } else if (kind == "spatial" || kind == "temporal") {
    if (strat) throw SpecInvalid("stratified applies only to hybrid splits");
    spec.kind = kind == "spatial" ? SplitSpec::Kind::Spatial : SplitSpec::Kind::Temporal;
    if (rest.empty()) throw SpecInvalid(kind + " split needs a train fraction");
    spec.frac = parse_num(rest);
  } else {
    throw SpecInvalid("unknown split kind '" + text + "'");
  }
  return spec;
}

std::string split_to_string(const SplitSpec& spec) {
  auto num = [](double v) {
    std::string s = std::to_string(v);
    while (s.size() > 1 && s.back() == '0') s.pop_back();
    if (s.back() == '.') s.pop_back();
    return s;
  };
  switch (spec.kind) {
    case SplitSpec::Kind::Hybrid:
      return "hybrid:" + num(spec.f_train) + "," + num(spec.f_val) + "," + num(spec.f_test) +
             (spec.stratified ? "+stratified" : "");
    case SplitSpec::Kind::Spatial:
      return "spatial:" + num(spec.frac);
    case SplitSpec::Kind::Temporal:
      return "temporal:" + num(spec.frac);
  }
  return "";
}

namespace {

std::string pack_bits(const std::vector<uint8_t>& bits) {
  std::string out((bits.size() + 7) / 8, '\0');
  for (size_t i = 0; i < bits.size(); ++i)
    if (bits[i]) out[i / 8] |= static_cast<char>(1u << (i % 8));
  return out;
}

std::vector<uint8_t> unpack_bits(const std::string& bytes, size_t count, size_t offset) {
  std::vector<uint8_t> out(count, 0);
  for (size_t i = 0; i < count; ++i)
    out[i] = (static_cast<uint8_t>(bytes[offset + i / 8]) >> (i % 8)) & 1u;
  return out;
}

std::string feature_file(int t_seu) { return "features_" + std::to_string(t_seu) + ".bin"; }

FaultLabelSet labelset_of(const SeuDataset& ds) {
  FaultLabelSet ls;
  ls.n_ff = ds.graph.n;
  for (const auto& s : ds.samples) {
    ls.injection_times.push_back(s.t_seu);
    for (int ff = 0; ff < ds.graph.n; ++ff)
      if (s.labels[ff] >= 0) ls.labels[{ff, s.t_seu}] = static_cast<uint8_t>(s.labels[ff]);
  }
  return ls;
}

}  // namespace

void save_dataset(const SeuDataset& ds, const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create dataset directory " + dir + ": " + ec.message());

  std::map<std::string, std::string> files;

  std::string edges;
  edges.reserve(ds.graph.num_edges() * 8);
  for (size_t e = 0; e < ds.graph.num_edges(); ++e) {
    append_u32_le(edges, ds.graph.src[e]);
    append_u32_le(edges, ds.graph.dst[e]);
  }
  files["edges.bin"] = std::move(edges);
  files["edge_feat.bin"] = encode_f32_array(ds.graph.edge_feat);
  for (const auto& s : ds.samples) files[feature_file(s.t_seu)] = encode_f32_array(s.x.x);

  std::string masks = pack_bits(ds.masks.train);
  masks += pack_bits(ds.masks.val);
  masks += pack_bits(ds.masks.test_unaudited());
  files["masks.bin"] = std::move(masks);

  nlohmann::ordered_json man;
  man["circuit"] = ds.circuit;
  man["n"] = ds.graph.n;
  man["c"] = ds.graph.c;
  man["max_distance"] = ds.max_distance;
  man["time_win_size"] = ds.time_win_size;
  man["seed"] = ds.seed;
  man["num_edges"] = ds.graph.num_edges();
  man["injection_times"] = ds.injection_times();
  man["structure_hash"] = hex64(structure_hash(ds.graph));
  man["node_names"] = ds.graph.node_names;
  nlohmann::ordered_json sizes;
  for (const auto& [name, bytes] : files) sizes[name] = bytes.size();
  man["files"] = std::move(sizes);

  write_file(dir + "/manifest.json", man.dump(2) + "\n");
  write_file(dir + "/labels.json", serialize_labels(labelset_of(ds)));
  for (const auto& [name, bytes] : files) write_file(dir + "/" + name, bytes);
}

SeuDataset load_dataset(const std::string& dir) {
  nlohmann::json man;
  try {
    man = nlohmann::json::parse(read_file(dir + "/manifest.json"));
  } catch (const nlohmann::json::exception& e) {
    throw SyntaxError("manifest.json: " + std::string(e.what()));
  }
  SeuDataset ds;
  try {
    ds.circuit = man.at("circuit").get<std::string>();
    ds.max_distance = man.at("max_distance").get<int>();
    ds.time_win_size = man.at("time_win_size").get<int>();
    ds.seed = man.at("seed").get<uint64_t>();
    ds.graph.n = man.at("n").get<int>();
    ds.graph.c = man.at("c").get<int>();
    ds.graph.max_distance = ds.max_distance;
    ds.graph.node_names = man.at("node_names").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw SyntaxError("manifest.json: " + std::string(e.what()));
  }

  auto sizes = man.at("files");
  auto read_exact = [&](const std::string& name) {
    std::string bytes = read_file(dir + "/" + name);
    long long want = sizes.contains(name) ? sizes.at(name).get<long long>() : -1;
    if (want < 0) throw ManifestMismatch("manifest lists no size for " + name);
    if (static_cast<long long>(bytes.size()) != want)
      throw ManifestMismatch(name, want, static_cast<long long>(bytes.size()));
    return bytes;
  };

  const size_t num_edges = man.at("num_edges").get<size_t>();
  std::string edges = read_exact("edges.bin");
  if (edges.size() != num_edges * 8)
    throw ManifestMismatch("edges.bin", static_cast<long long>(num_edges * 8),
                           static_cast<long long>(edges.size()));
  ds.graph.src.resize(num_edges);
  ds.graph.dst.resize(num_edges);
  for (size_t e = 0; e < num_edges; ++e) {
    ds.graph.src[e] = read_u32_le(edges.data() + e * 8);
    ds.graph.dst[e] = read_u32_le(edges.data() + e * 8 + 4);
  }
  ds.graph.edge_feat = decode_f32_array(read_exact("edge_feat.bin"));
  if (ds.graph.edge_feat.size() != num_edges * static_cast<size_t>(ds.graph.c))
    throw ManifestMismatch("edge_feat.bin",
                           static_cast<long long>(num_edges * ds.graph.c * 4),
                           static_cast<long long>(ds.graph.edge_feat.size() * 4));

  const std::string recorded = man.at("structure_hash").get<std::string>();
  if (hex64(structure_hash(ds.graph)) != recorded)
    throw GraphHashMismatch("stored graph hashes to " + hex64(structure_hash(ds.graph)) +
                            ", manifest records " + recorded);

  FaultLabelSet ls = parse_labels(read_file(dir + "/labels.json"));
  ls.n_ff = ds.graph.n;

  std::vector<int> times = man.at("injection_times").get<std::vector<int>>();
  std::vector<FeatureTensor> tensors;
  for (int t_seu : times) {
    FeatureTensor ten;
    ten.t_seu = t_seu;
    ten.t = ds.time_win_size;
    ten.n = ds.graph.n;
    ten.m = 1;
    ten.x = decode_f32_array(read_exact(feature_file(t_seu)));
    if (ten.x.size() != static_cast<size_t>(ten.t) * ten.n)
      throw ManifestMismatch(feature_file(t_seu),
                             static_cast<long long>(static_cast<size_t>(ten.t) * ten.n * 4),
                             static_cast<long long>(ten.x.size() * 4));
    tensors.push_back(std::move(ten));
  }

  SeuDataset out = assemble(ds.graph, tensors, ls, ds.circuit);
  out.seed = ds.seed;

  std::string mask_bytes = read_exact("masks.bin");
  const size_t grid = out.grid_size();
  const size_t stride = (grid + 7) / 8;
  if (mask_bytes.size() != 3 * stride)
    throw ManifestMismatch("masks.bin", static_cast<long long>(3 * stride),
                           static_cast<long long>(mask_bytes.size()));
  out.masks = SplitMasks(grid);
  out.masks.train = unpack_bits(mask_bytes, grid, 0);
  out.masks.val = unpack_bits(mask_bytes, grid, stride);
  auto test = unpack_bits(mask_bytes, grid, 2 * stride);
  for (size_t i = 0; i < grid; ++i) out.masks.set_test(i, test[i]);
  validate_masks(out);
  return out;
}

bool dataset_equal(const SeuDataset& a, const SeuDataset& b) {
  if (a.circuit != b.circuit || a.max_distance != b.max_distance ||
      a.time_win_size != b.time_win_size || a.seed != b.seed)
    return false;
  if (structure_hash(a.graph) != structure_hash(b.graph)) return false;
  if (a.graph.node_names != b.graph.node_names) return false;
  if (a.samples.size() != b.samples.size()) return false;
  for (size_t i = 0; i < a.samples.size(); ++i) {
    const auto& sa = a.samples[i];
    const auto& sb = b.samples[i];
    if (sa.t_seu != sb.t_seu || sa.labels != sb.labels || sa.x.x != sb.x.x) return false;
  }
  return a.masks.train == b.masks.train && a.masks.val == b.masks.val &&
         a.masks.test_unaudited() == b.masks.test_unaudited();
}

SeuDataset cross_testcase_view(const SeuDataset& train_ds, const Netlist& netlist,
                               const WaveMatrix& wave, const FaultLabelSet& labels) {
  SpatialGraph fresh = build_spatial_graph(netlist, train_ds.max_distance);
  if (structure_hash(fresh) != structure_hash(train_ds.graph))
    throw GraphHashMismatch("new test case's flip-flop graph does not match the training circuit");

  BatchTensors batch = batch_feature_tensors(wave, labels.injection_times, train_ds.time_win_size);
  SeuDataset view = assemble(train_ds.graph, batch.tensors, labels, train_ds.circuit);
  view.seed = train_ds.seed;
  for (size_t ti = 0; ti < view.samples.size(); ++ti)
    for (int ff = 0; ff < view.graph.n; ++ff)
      if (view.samples[ti].labels[ff] >= 0) view.masks.set_test(view.cell(ti, ff), 1);
  return view;
}

}  // namespace seupred
