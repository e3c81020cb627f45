#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "seupred/netlist.hpp"

namespace seupred {

/// Per-cycle primary-input assignments, dense [cycles x |inputs|] in the
/// netlist's input declaration order.
struct Stimulus {
  int cycles = 0;
  std::vector<uint8_t> bits;

  uint8_t at(int cycle, int pi, int n_pi) const {
    return bits[static_cast<size_t>(cycle) * n_pi + pi];
  }
};

Stimulus parse_stimulus(const std::string& json_text, const Netlist& n);
std::string serialize_stimulus(const Stimulus& s, const Netlist& n);
Stimulus gen_stimulus(const Netlist& n, int cycles, uint64_t seed);

struct FaultSite {
  int ff_index = 0;
  int t_seu = 0;
};

/// Settled per-cycle values. Row c holds the state right after the rising
/// edge of cycle c: FF outputs post-latch (and post-flip for SEU runs),
/// primary inputs for cycle c, and primary outputs after the combinational
/// logic settles.
struct SimTrace {
  int cycles = 0;
  int n_ff = 0;
  int n_po = 0;
  int n_pi = 0;
  std::vector<uint8_t> ff;  // [cycles x n_ff]
  std::vector<uint8_t> po;  // [cycles x n_po]
  std::vector<uint8_t> pi;  // [cycles x n_pi]

  uint8_t ff_at(int c, int i) const { return ff[static_cast<size_t>(c) * n_ff + i]; }
  uint8_t po_at(int c, int i) const { return po[static_cast<size_t>(c) * n_po + i]; }
};

/// Cycle semantics: cycle 0 state = DFF init bits; at each later cycle
/// boundary every DFF latches the D value seen in the previous cycle's
/// settled combinational state; combinational logic then settles via
/// levelized evaluation.
SimTrace simulate_golden(const Netlist& n, const Stimulus& s);

/// Same as golden except the state of flip-flop site.ff_index is inverted
/// immediately after latching at cycle site.t_seu, before that cycle's
/// combinational settling. The flip persists until overwritten.
SimTrace simulate_with_seu(const Netlist& n, const Stimulus& s, FaultSite site);

enum class FaultClass : int { undetected = 0, detected = 1 };

/// Detected iff any primary output differs from golden at any cycle >= t_seu.
FaultClass classify_fault(const SimTrace& golden, const SimTrace& faulty, int t_seu);

struct FaultLabelSet {
  int n_ff = 0;
  std::vector<int> injection_times;                 // sorted ascending
  std::map<std::pair<int, int>, uint8_t> labels;    // (ff, t) -> 1 = detected

  bool has(int ff, int t) const { return labels.count({ff, t}) != 0; }
  int get(int ff, int t) const { return labels.at({ff, t}); }
  size_t size() const { return labels.size(); }
};

/// Grid size of an exhaustive campaign (the planner's sample count).
uint64_t campaign_size(uint64_t n_ff, uint64_t n_times);

/// One detected/undetected label per (ff, t) pair; ff_subset empty means all
/// flip-flops. Sites run independently (up to `jobs` threads) and results
/// are merged in (ff, t) lexicographic order, so output never depends on
/// scheduling.
FaultLabelSet run_campaign(const Netlist& n, const Stimulus& s,
                           const std::vector<int>& injection_times,
                           const std::vector<int>& ff_subset = {}, int jobs = 1);

std::string serialize_labels(const FaultLabelSet& ls);
FaultLabelSet parse_labels(const std::string& json_text);

/// IEEE-1364-subset VCD of a trace: clock plus the nets for primary inputs,
/// FF outputs, and primary outputs, one rising edge per cycle (period 10ns,
/// rising edges at 5, 15, 25, ...), change-only value emission.
std::string vcd_text(const SimTrace& tr, const Netlist& n);
void write_vcd(const SimTrace& tr, const Netlist& n, const std::string& path);

}  // namespace seupred
