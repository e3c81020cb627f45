#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "seupred/faultsim.hpp"
#include "seupred/graphgen.hpp"
#include "seupred/waveform.hpp"

namespace seupred {

/// One graph pair: the window of golden signal values preceding an injection
/// time, plus the per-flip-flop outcome labels (-1 = unlabeled).
struct SeuSample {
  int t_seu = 0;
  FeatureTensor x;
  std::vector<int8_t> labels;
};

/// Train/val/test cell masks over the [num_times x n] grid, time-major.
/// Test-mask reads are counted so experiments can prove the test set was
/// never touched before hyperparameter selection.
class SplitMasks {
 public:
  std::vector<uint8_t> train;
  std::vector<uint8_t> val;

  SplitMasks() = default;
  explicit SplitMasks(size_t grid) : train(grid, 0), val(grid, 0), test_cells_(grid, 0) {}

  size_t grid_size() const { return train.size(); }
  void set_test(size_t i, uint8_t v) { test_cells_[i] = v; }

  const std::vector<uint8_t>& test() const {
    ++test_reads_;
    return test_cells_;
  }
  /// Serialization / invariant checking only; does not count as test access.
  const std::vector<uint8_t>& test_unaudited() const { return test_cells_; }
  long test_read_count() const { return test_reads_; }
  void reset_test_audit() const { test_reads_ = 0; }

 private:
  std::vector<uint8_t> test_cells_;
  mutable long test_reads_ = 0;
};

struct SeuDataset {
  std::string circuit;
  int max_distance = 0;
  int time_win_size = 0;
  uint64_t seed = 0;  // split seed recorded for the manifest
  SpatialGraph graph;
  std::vector<SeuSample> samples;  // ascending t_seu
  SplitMasks masks;

  size_t grid_size() const { return samples.size() * static_cast<size_t>(graph.n); }
  std::vector<int> injection_times() const;
  /// Grid cell index of (time index, ff index).
  size_t cell(size_t time_idx, size_t ff) const { return time_idx * graph.n + ff; }
};

/// Pairs each feature tensor with its label row. Tensor times must be
/// distinct and present in the label set; node counts must match the graph.
SeuDataset assemble(const SpatialGraph& graph, const std::vector<FeatureTensor>& tensors,
                    const FaultLabelSet& labels, const std::string& circuit);

/// Throws if masks overlap or cover unlabeled cells.
void validate_masks(const SeuDataset& ds);

struct SplitSpec {
  enum class Kind { Hybrid, Spatial, Temporal };
  Kind kind = Kind::Hybrid;
  double f_train = 0.6;
  double f_val = 0.2;
  double f_test = 0.2;
  double frac = 0.6;  // spatial / temporal train share
  bool stratified = false;
};

/// "hybrid:0.6,0.2,0.2" | "spatial:0.7" | "temporal:0.5"; hybrid accepts a
/// "+stratified" suffix.
SplitSpec parse_split(const std::string& text);
std::string split_to_string(const SplitSpec& spec);

/// Uniform permutation of the labeled grid cells, partitioned by fractions.
SplitMasks split_hybrid(const SeuDataset& ds, double f_train, double f_val, double f_test,
                        uint64_t seed, bool stratified = false);
/// Per injection time: an independent random floor(frac*n) flip-flops train,
/// the remainder alternating val/test.
SplitMasks split_spatial(const SeuDataset& ds, double frac, uint64_t seed);
/// floor(frac*T) whole injection times train, remaining times alternating
/// val/test.
SplitMasks split_temporal(const SeuDataset& ds, double frac, uint64_t seed);

SplitMasks make_split(const SeuDataset& ds, const SplitSpec& spec, uint64_t seed);

void save_dataset(const SeuDataset& ds, const std::string& dir);
SeuDataset load_dataset(const std::string& dir);
bool dataset_equal(const SeuDataset& a, const SeuDataset& b);

/// Re-targets a trained dataset's graph at a new test case of the same
/// circuit: fresh features and labels, every labeled cell marked test.
SeuDataset cross_testcase_view(const SeuDataset& train_ds, const Netlist& netlist,
                               const WaveMatrix& wave, const FaultLabelSet& labels);

}  // namespace seupred
