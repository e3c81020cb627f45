#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "seupred/errors.hpp"

namespace seupred {

/// Gate alphabet: eight combinational types plus DFF. The combinational
/// enum order (INV..XNOR2) is also the one-hot index used by edge-feature
/// encoding, so it must not be reordered.
enum class GateType : int {
  INV = 0,
  BUF = 1,
  AND2 = 2,
  OR2 = 3,
  NAND2 = 4,
  NOR2 = 5,
  XOR2 = 6,
  XNOR2 = 7,
  DFF = 8,
};

constexpr int kCombGateTypes = 8;

inline bool is_comb(GateType t) { return t != GateType::DFF; }

inline int gate_arity(GateType t) {
  switch (t) {
    case GateType::INV:
    case GateType::BUF:
    case GateType::DFF:
      return 1;
    default:
      return 2;
  }
}

const char* gate_type_name(GateType t);
GateType gate_type_from_name(const std::string& name);  // throws UnknownGateType

struct Cell {
  std::string name;
  GateType type = GateType::BUF;
  std::vector<int> inputs;  // net ids; DFF: [D]
  int output = -1;          // net id
  int init = 0;             // DFF initial state
};

/// Immutable gate-level circuit. Net ids are dense indices into `nets`.
/// Flip-flop node order (the graph/node order used everywhere downstream)
/// is the declaration order of DFF cells.
struct Netlist {
  std::string name;
  std::vector<std::string> nets;  // id -> name
  int clock = -1;                 // net id, not driven by any cell
  std::vector<int> inputs;        // primary input net ids
  std::vector<int> outputs;       // primary output net ids (observation points)
  std::vector<Cell> cells;

  // derived at parse time
  std::vector<int> dff_cells;        // cell indices, declaration order
  std::vector<int> comb_cells;       // cell indices, declaration order
  std::vector<int> net_driver;       // net id -> driving cell index, -1 for PI/clock
  std::vector<std::vector<int>> net_consumers;  // net id -> cell indices (decl order)

  int ff_count() const { return static_cast<int>(dff_cells.size()); }
  const std::string& net_name(int id) const { return nets[id]; }
  int net_id(const std::string& name) const;  // -1 if absent
  /// Name of flip-flop node `i` (the DFF cell name).
  const std::string& ff_name(int i) const { return cells[dff_cells[i]].name; }
  std::vector<std::string> ff_names() const;
};

/// Parse and validate the canonical netlist JSON. Checks the full invariant
/// set: schema, known gate types, arities, single driver per net, no
/// undriven nets, no combinational cycles, >=1 DFF and >=1 primary output.
Netlist parse_netlist(const std::string& json_text);

/// Canonical serialization; parse(serialize(n)) == n and the byte stream is
/// deterministic (sorted keys, fixed layout).
std::string serialize_netlist(const Netlist& n);

bool operator==(const Netlist& a, const Netlist& b);

/// Topological order of combinational cells: DFF outputs and primary inputs
/// are sources, every cell appears after all its combinational drivers.
std::vector<int> levelize(const Netlist& n);  // throws CombinationalLoop

/// Deterministic random circuit: each DFF's data input is a combinational
/// cone over primary inputs and other DFF outputs; cone size drawn from
/// [cone_lo, cone_hi]. Every DFF is reachable from some primary input and
/// the result always passes parse-time validation. Out-of-range parameters
/// are clamped (n_ff >= 2, cone bounds >= 0).
Netlist gen_synthetic_circuit(uint64_t seed, int n_ff, int cone_lo, int cone_hi);

}  // namespace seupred
