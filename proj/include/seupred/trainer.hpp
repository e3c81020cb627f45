#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "seupred/dataset.hpp"
#include "seupred/models.hpp"
#include "seupred/nn.hpp"

namespace seupred {

struct TrainConfig {
  ModelSpec model;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  int max_epochs = 200;
  int patience = 20;
  uint64_t seed = 0;
};

/// Percentages in [0, 100]. precision_defined is false when no cell was
/// predicted positive (the rate is reported as 0 but must not be averaged
/// away silently).
struct Metrics {
  double precision = 0.0;
  double recall = 0.0;
  double accuracy = 0.0;
  bool precision_defined = true;
  long tp = 0;
  long fp = 0;
  long tn = 0;
  long fn = 0;
};

struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0;
  double train_acc = 0.0;
  double val_acc = 0.0;
};

struct TrainResult {
  std::map<std::string, Tensor> params;  // best-validation snapshot
  std::vector<EpochStats> history;
  int best_epoch = -1;
  double best_val_acc = 0.0;
};

/// Full-batch gradient steps, one graph pair per injection time, times
/// shuffled each epoch. Early-stops after `patience` epochs without a new
/// best validation accuracy and returns the best-validation parameters.
/// With no validation cells the final parameters are returned instead.
/// Throws Divergence when the loss leaves the reals.
TrainResult train(const SeuDataset& ds, const TrainConfig& cfg);

/// Argmax class per grid cell, [num_times x n] time-major (-1 stays out of
/// metrics but is still predicted).
std::vector<int8_t> predict_all(const ModelSpec& spec,
                                const std::map<std::string, Tensor>& params,
                                const SeuDataset& ds);

/// Confusion-matrix metrics over the masked cells; detected is the positive
/// class. Throws EmptyMask when the mask selects nothing.
Metrics evaluate(const ModelSpec& spec, const std::map<std::string, Tensor>& params,
                 const SeuDataset& ds, const std::vector<uint8_t>& mask);

struct GridPoint {
  int max_distance = 0;
  int time_win_size = 0;
  Metrics val;
  Metrics test;  // filled only after the winner is fixed
  double gap = 0.0;  // val.accuracy - test.accuracy
};

struct TuneConfig {
  ModelSpec model;  // time_win_size is overridden per grid point
  std::vector<int> max_distance_grid = {6, 7, 8, 9, 10};
  std::vector<int> time_win_grid = {20, 30, 40, 50, 60};
  SplitSpec split;
  TrainConfig train;
  int jobs = 1;
};

struct TuneResult {
  int best_max_distance = 0;
  int best_time_win = 0;
  Metrics val;
  Metrics test;
  std::vector<GridPoint> grid;  // max_distance-major, ascending
  std::map<std::string, Tensor> params;
  SeuDataset dataset;  // rebuilt at the winning grid point
  long test_reads_before_selection = 0;  // audit; must be 0
};

/// Grid search over (max_distance, time_win_size): rebuilds the graph and
/// feature windows per point, trains, and picks the highest validation
/// accuracy (ties resolved toward the cheaper model: smaller distance, then
/// smaller window). Test metrics are computed only after the choice is
/// fixed, for every point, so generalization gaps cover the tuning runs.
TuneResult tune(const Netlist& netlist, const WaveMatrix& wave, const FaultLabelSet& labels,
                const std::string& circuit, const TuneConfig& cfg);

struct ExperimentResult {
  uint64_t seed = 0;
  bool diverged = false;
  int best_max_distance = 0;
  int best_time_win = 0;
  Metrics val;
  Metrics test;
  std::vector<double> gaps;  // one per grid point of this run
};

struct AggregateStats {
  double mean = 0.0;
  double stddev = 0.0;  // sample std, n-1 denominator
  int count = 0;
};
AggregateStats aggregate(const std::vector<double>& values);
std::string format_mean_std(const AggregateStats& s);  // "96.15 ± 1.27"

struct BoxStats {
  double min = 0.0;
  double p25 = 0.0;
  double median = 0.0;
  double p75 = 0.0;
  double max = 0.0;
};
/// Linear-interpolation percentiles over >= 1 values.
BoxStats box_stats(std::vector<double> values);

struct TrainReport {
  std::vector<ExperimentResult> experiments;
  AggregateStats precision;
  AggregateStats recall;
  AggregateStats accuracy;  // test accuracy across completed seeds
  std::vector<double> gaps;  // every grid point of every completed seed
  BoxStats gap_box;
  int diverged = 0;
};

/// Repeats the tune pipeline once per seed and aggregates test metrics as
/// mean +- sample std over the seeds that completed; diverged seeds are
/// flagged in the report rather than raised.
TrainReport repeat_experiments(const Netlist& netlist, const WaveMatrix& wave,
                               const FaultLabelSet& labels, const std::string& circuit,
                               const TuneConfig& cfg, const std::vector<uint64_t>& seeds);

std::string report_table(const TrainReport& r);

}  // namespace seupred
