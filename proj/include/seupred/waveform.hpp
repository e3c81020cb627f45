#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "seupred/netlist.hpp"

namespace seupred {

/// Flip-flop values sampled at each rising clock edge. Row r is the settled
/// value of every mapped flip-flop at edge r; column order follows ff_names.
struct WaveMatrix {
  std::vector<std::string> ff_names;
  std::string clock_name;
  int cycles = 0;
  int n = 0;
  std::vector<uint8_t> values;  // [cycles x n]

  uint8_t at(int cycle, int i) const { return values[static_cast<size_t>(cycle) * n + i]; }
};

/// Windowed node-feature tensor X, row-major [t x n x 1]. Slice 0 holds the
/// flip-flop values one cycle before the injection; slice i holds cycle
/// t_seu - 1 + i.
struct FeatureTensor {
  int t_seu = 0;
  int t = 0;
  int n = 0;
  int m = 1;
  std::vector<float> x;  // [t x n x m]

  float at(int ti, int node) const { return x[static_cast<size_t>(ti) * n + node]; }
};

/// Maps netlist flip-flop names to hierarchical VCD signal names for traces
/// produced by this repo's VCD writer ("<module>.<Q net name>").
std::map<std::string, std::string> default_name_map(const Netlist& n);

/// Parse a VCD stream and sample every mapped flip-flop at each rising edge
/// of the clock. Supported subset: $timescale/$scope/$var/$enddefinitions,
/// scalar changes, binary vector changes on 1-bit signals, $dump* sections.
/// The sampled value is the settled value after the edge's timestamp block;
/// sample_offset delays sampling by that many additional timestamp blocks.
/// clock_name and map targets are hierarchical ("top.sig"); a bare name is
/// accepted when it is unambiguous across the file.
WaveMatrix parse_vcd(const std::string& text, const std::string& clock_name,
                     const std::vector<std::string>& ff_names,
                     const std::map<std::string, std::string>& name_map,
                     int sample_offset = 0);

/// Window extraction: X[i] = wave values at cycle t_seu - 1 + i, for
/// i in [0, time_win_size). Requires t_seu >= 1 and the window to fit.
FeatureTensor build_feature_tensor(const WaveMatrix& wave, int t_seu, int time_win_size);

struct BatchTensors {
  std::vector<FeatureTensor> tensors;
  std::vector<int> skipped;  // injection times whose window did not fit
};

/// build_feature_tensor per injection time; out-of-range windows are skipped
/// and reported rather than truncated (the models need a fixed t).
BatchTensors batch_feature_tensors(const WaveMatrix& wave,
                                   const std::vector<int>& injection_times,
                                   int time_win_size);

}  // namespace seupred
