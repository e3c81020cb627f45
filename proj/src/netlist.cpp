#include "seupred/netlist.hpp"

#include <algorithm>
#include <deque>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "seupred/rng.hpp"

namespace seupred {

using json = nlohmann::ordered_json;

CombinationalLoop::CombinationalLoop(const std::vector<std::string>& path)
    : ValidationError([&] {
        std::string msg = "combinational cycle:";
        for (const auto& c : path) msg += " " + c;
        return msg;
      }()),
      cycle_path(path) {}

const char* gate_type_name(GateType t) {
  switch (t) {
    case GateType::INV: return "INV";
    case GateType::BUF: return "BUF";
    case GateType::AND2: return "AND2";
    case GateType::OR2: return "OR2";
    case GateType::NAND2: return "NAND2";
    case GateType::NOR2: return "NOR2";
    case GateType::XOR2: return "XOR2";
    case GateType::XNOR2: return "XNOR2";
    case GateType::DFF: return "DFF";
  }
  return "?";
}

GateType gate_type_from_name(const std::string& name) {
  static const std::unordered_map<std::string, GateType> table = {
      {"INV", GateType::INV},     {"BUF", GateType::BUF},
      {"AND2", GateType::AND2},   {"OR2", GateType::OR2},
      {"NAND2", GateType::NAND2}, {"NOR2", GateType::NOR2},
      {"XOR2", GateType::XOR2},   {"XNOR2", GateType::XNOR2},
      {"DFF", GateType::DFF},
  };
  auto it = table.find(name);
  if (it == table.end()) throw UnknownGateType(name);
  return it->second;
}

int Netlist::net_id(const std::string& name) const {
  for (size_t i = 0; i < nets.size(); ++i)
    if (nets[i] == name) return static_cast<int>(i);
  return -1;
}

std::vector<std::string> Netlist::ff_names() const {
  std::vector<std::string> out;
  out.reserve(dff_cells.size());
  for (int c : dff_cells) out.push_back(cells[c].name);
  return out;
}

namespace {

class NetTable {
 public:
  explicit NetTable(Netlist& n) : n_(n) {}
  int intern(const std::string& name) {
    auto it = ids_.find(name);
    if (it != ids_.end()) return it->second;
    int id = static_cast<int>(n_.nets.size());
    n_.nets.push_back(name);
    ids_.emplace(name, id);
    return id;
  }

 private:
  Netlist& n_;
  std::unordered_map<std::string, int> ids_;
};

void build_derived(Netlist& n) {
  n.dff_cells.clear();
  n.comb_cells.clear();
  n.net_driver.assign(n.nets.size(), -1);
  n.net_consumers.assign(n.nets.size(), {});
  for (size_t ci = 0; ci < n.cells.size(); ++ci) {
    const Cell& c = n.cells[ci];
    if (c.type == GateType::DFF)
      n.dff_cells.push_back(static_cast<int>(ci));
    else
      n.comb_cells.push_back(static_cast<int>(ci));
    if (n.net_driver[c.output] != -1 || std::find(n.inputs.begin(), n.inputs.end(),
                                                  c.output) != n.inputs.end())
      throw MultipleDrivers(n.nets[c.output]);
    n.net_driver[c.output] = static_cast<int>(ci);
    for (int in : c.inputs) n.net_consumers[in].push_back(static_cast<int>(ci));
  }
}

void validate(Netlist& n) {
  if (n.name.empty()) throw SyntaxError("netlist name must be non-empty");
  if (n.clock < 0) throw SyntaxError("clock net is required");

  std::unordered_set<std::string> cell_names;
  for (const Cell& c : n.cells) {
    if (c.name.empty()) throw SyntaxError("cell name must be non-empty");
    if (!cell_names.insert(c.name).second)
      throw SyntaxError("duplicate cell name '" + c.name + "'");
    int want = gate_arity(c.type);
    if (static_cast<int>(c.inputs.size()) != want)
      throw ArityMismatch(c.name, want, static_cast<int>(c.inputs.size()));
    if (c.init != 0 && c.init != 1)
      throw SyntaxError("cell '" + c.name + "': init must be 0 or 1");
    if (c.type != GateType::DFF && c.init != 0)
      throw SyntaxError("cell '" + c.name + "': init only applies to DFF cells");
  }

  std::unordered_set<int> pi_set;
  for (int pi : n.inputs) {
    if (!pi_set.insert(pi).second)
      throw SyntaxError("duplicate primary input '" + n.nets[pi] + "'");
    if (pi == n.clock) throw SyntaxError("clock cannot be listed as a primary input");
  }

  build_derived(n);

  // The clock is implicit in DFF semantics; it may not carry logic.
  if (n.net_driver[n.clock] != -1)
    throw SyntaxError("clock net '" + n.nets[n.clock] + "' must not be driven by a cell");
  if (!n.net_consumers[n.clock].empty())
    throw SyntaxError("clock net '" + n.nets[n.clock] + "' must not feed cell inputs");

  for (size_t net = 0; net < n.nets.size(); ++net) {
    int id = static_cast<int>(net);
    if (id == n.clock) continue;
    bool driven = n.net_driver[id] != -1 || pi_set.count(id) != 0;
    if (!driven) throw SyntaxError("net '" + n.nets[net] + "' has no driver");
  }

  std::unordered_set<int> po_set;
  for (int po : n.outputs) {
    if (!po_set.insert(po).second)
      throw SyntaxError("duplicate primary output '" + n.nets[po] + "'");
    if (po == n.clock) throw SyntaxError("clock cannot be a primary output");
  }

  if (n.dff_cells.empty()) throw SyntaxError("netlist must contain at least one DFF");
  if (n.outputs.empty()) throw SyntaxError("netlist must declare at least one primary output");

  levelize(n);  // throws CombinationalLoop on a combinational cycle
}

}  // namespace

Netlist parse_netlist(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw SyntaxError(std::string("malformed JSON: ") + e.what());
  }
  if (!j.is_object()) throw SyntaxError("top level must be a JSON object");

  auto need = [&](const char* key) -> const json& {
    auto it = j.find(key);
    if (it == j.end()) throw SyntaxError(std::string("missing key '") + key + "'");
    return *it;
  };
  auto as_str = [](const json& v, const std::string& what) -> std::string {
    if (!v.is_string()) throw SyntaxError(what + " must be a string");
    return v.get<std::string>();
  };

  Netlist n;
  NetTable nets(n);
  n.name = as_str(need("name"), "name");
  n.clock = nets.intern(as_str(need("clock"), "clock"));

  const json& jin = need("inputs");
  if (!jin.is_array()) throw SyntaxError("inputs must be an array");
  for (const auto& v : jin) n.inputs.push_back(nets.intern(as_str(v, "input net")));

  const json& jcells = need("cells");
  if (!jcells.is_array()) throw SyntaxError("cells must be an array");
  for (const auto& jc : jcells) {
    if (!jc.is_object()) throw SyntaxError("cell entries must be objects");
    Cell c;
    auto fit = jc.find("name");
    if (fit == jc.end()) throw SyntaxError("cell missing 'name'");
    c.name = as_str(*fit, "cell name");
    fit = jc.find("type");
    if (fit == jc.end()) throw SyntaxError("cell '" + c.name + "' missing 'type'");
    c.type = gate_type_from_name(as_str(*fit, "cell type"));
    fit = jc.find("inputs");
    if (fit == jc.end() || !fit->is_array())
      throw SyntaxError("cell '" + c.name + "' missing 'inputs' array");
    for (const auto& v : *fit) c.inputs.push_back(nets.intern(as_str(v, "cell input net")));
    fit = jc.find("output");
    if (fit == jc.end()) throw SyntaxError("cell '" + c.name + "' missing 'output'");
    c.output = nets.intern(as_str(*fit, "cell output net"));
    fit = jc.find("init");
    if (fit != jc.end()) {
      if (!fit->is_number_integer())
        throw SyntaxError("cell '" + c.name + "': init must be an integer");
      c.init = fit->get<int>();
    }
    n.cells.push_back(std::move(c));
  }

  // Outputs are interned last so unknown output names still resolve; the
  // undriven-net check in validate() catches typos referencing nothing.
  const json& jout = need("outputs");
  if (!jout.is_array()) throw SyntaxError("outputs must be an array");
  for (const auto& v : jout) n.outputs.push_back(nets.intern(as_str(v, "output net")));

  validate(n);
  return n;
}

std::string serialize_netlist(const Netlist& n) {
  json j;
  j["name"] = n.name;
  j["clock"] = n.nets[n.clock];
  json jin = json::array();
  for (int pi : n.inputs) jin.push_back(n.nets[pi]);
  j["inputs"] = jin;
  json jout = json::array();
  for (int po : n.outputs) jout.push_back(n.nets[po]);
  j["outputs"] = jout;
  json jcells = json::array();
  for (const Cell& c : n.cells) {
    json jc;
    jc["name"] = c.name;
    jc["type"] = gate_type_name(c.type);
    json jci = json::array();
    for (int in : c.inputs) jci.push_back(n.nets[in]);
    jc["inputs"] = jci;
    jc["output"] = n.nets[c.output];
    if (c.type == GateType::DFF) jc["init"] = c.init;
    jcells.push_back(std::move(jc));
  }
  j["cells"] = jcells;
  return j.dump(2) + "\n";
}

bool operator==(const Netlist& a, const Netlist& b) {
  return serialize_netlist(a) == serialize_netlist(b);
}

std::vector<int> levelize(const Netlist& n) {
  // Kahn's algorithm over combinational cells only; DFF outputs and primary
  // inputs carry no combinational dependency. FIFO queue seeded in
  // declaration order keeps the result deterministic.
  std::vector<int> indeg(n.cells.size(), 0);
  for (int ci : n.comb_cells) {
    const Cell& c = n.cells[ci];
    for (int in : c.inputs) {
      int drv = n.net_driver[in];
      if (drv != -1 && is_comb(n.cells[drv].type)) indeg[ci]++;
    }
  }
  std::deque<int> ready;
  for (int ci : n.comb_cells)
    if (indeg[ci] == 0) ready.push_back(ci);
  std::vector<int> order;
  order.reserve(n.comb_cells.size());
  while (!ready.empty()) {
    int ci = ready.front();
    ready.pop_front();
    order.push_back(ci);
    for (int consumer : n.net_consumers[n.cells[ci].output]) {
      if (!is_comb(n.cells[consumer].type)) continue;
      if (--indeg[consumer] == 0) ready.push_back(consumer);
    }
  }
  if (order.size() != n.comb_cells.size()) {
    // Walk driver edges among the leftover cells to print one actual cycle.
    std::vector<int> stuck;
    for (int ci : n.comb_cells)
      if (indeg[ci] > 0) stuck.push_back(ci);
    std::unordered_set<int> stuck_set(stuck.begin(), stuck.end());
    int cur = stuck.front();
    std::vector<int> walk;
    std::unordered_map<int, int> seen_at;
    while (seen_at.find(cur) == seen_at.end()) {
      seen_at[cur] = static_cast<int>(walk.size());
      walk.push_back(cur);
      int next = -1;
      for (int in : n.cells[cur].inputs) {
        int drv = n.net_driver[in];
        if (drv != -1 && stuck_set.count(drv)) {
          next = drv;
          break;
        }
      }
      cur = next;
    }
    std::vector<std::string> path;
    for (size_t i = seen_at[cur]; i < walk.size(); ++i) path.push_back(n.cells[walk[i]].name);
    path.push_back(n.cells[cur].name);
    throw CombinationalLoop(path);
  }
  return order;
}

Netlist gen_synthetic_circuit(uint64_t seed, int n_ff, int cone_lo, int cone_hi) {
  if (n_ff < 2) n_ff = 2;
  if (cone_lo < 0) cone_lo = 0;
  if (cone_hi < cone_lo) cone_hi = cone_lo;
  Rng rng(seed);

  Netlist n;
  NetTable nets(n);
  n.name = "synth_" + std::to_string(seed) + "_" + std::to_string(n_ff);
  n.clock = nets.intern("clk");

  int n_pi = std::max(2, n_ff / 8);
  for (int i = 0; i < n_pi; ++i)
    n.inputs.push_back(nets.intern("pi" + std::to_string(i)));

  // ff_q[i] is reserved up front so cones can reference any DFF output.
  std::vector<int> ff_q(n_ff);
  for (int i = 0; i < n_ff; ++i) ff_q[i] = nets.intern("ff" + std::to_string(i) + "_q");

  int next_net = 0;
  int next_gate = 0;
  auto fresh_net = [&] { return nets.intern("w" + std::to_string(next_net++)); };

  static const GateType comb_pool[] = {GateType::INV,   GateType::BUF,  GateType::AND2,
                                       GateType::OR2,   GateType::NAND2, GateType::NOR2,
                                       GateType::XOR2,  GateType::XNOR2};

  std::vector<Cell> dffs;
  for (int i = 0; i < n_ff; ++i) {
    // Operand pool: all PIs plus outputs of earlier DFFs, with one draw
    // forced to a PI for DFF 0 so every state bit traces back to an input.
    auto draw_operand = [&]() -> int {
      uint64_t pool = static_cast<uint64_t>(n_pi + i);
      uint64_t k = rng.bounded(pool);
      if (k < static_cast<uint64_t>(n_pi)) return n.inputs[k];
      return ff_q[k - n_pi];
    };
    auto draw_pi_or_prev = [&]() -> int {
      if (i == 0) return n.inputs[rng.bounded(static_cast<uint64_t>(n_pi))];
      return draw_operand();
    };

    int cone = cone_lo + static_cast<int>(rng.bounded(
                             static_cast<uint64_t>(cone_hi - cone_lo + 1)));
    int cur = draw_pi_or_prev();
    bool pi_forced = false;
    for (int g = 0; g < cone; ++g) {
      GateType t = comb_pool[rng.bounded(8)];
      Cell c;
      c.name = "g" + std::to_string(next_gate++);
      c.type = t;
      c.inputs.push_back(cur);
      if (gate_arity(t) == 2) {
        // First 2-input gate takes a guaranteed PI-side operand to keep the
        // cone reachable regardless of earlier draws.
        if (!pi_forced && i > 0) {
          c.inputs.push_back(n.inputs[rng.bounded(static_cast<uint64_t>(n_pi))]);
          pi_forced = true;
        } else {
          c.inputs.push_back(draw_operand());
        }
      }
      c.output = fresh_net();
      cur = c.output;
      n.cells.push_back(std::move(c));
    }
    Cell ff;
    ff.name = "ff" + std::to_string(i);
    ff.type = GateType::DFF;
    ff.inputs.push_back(cur);
    ff.output = ff_q[i];
    ff.init = static_cast<int>(rng.bounded(2));
    dffs.push_back(std::move(ff));
  }
  for (Cell& ff : dffs) n.cells.push_back(std::move(ff));

  int n_po = std::max(1, n_ff / 8);
  std::vector<size_t> perm = rng.permutation(static_cast<size_t>(n_ff));
  for (int i = 0; i < n_po; ++i) n.outputs.push_back(ff_q[perm[i]]);

  // Round-trip through the parser so the returned object carries the
  // derived tables and has passed every validation rule.
  return parse_netlist(serialize_netlist(n));
}

}  // namespace seupred
