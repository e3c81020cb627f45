#include "seupred/faultsim.hpp"

#include <algorithm>
#include <set>

#include <json.hpp>

#include "seupred/io_util.hpp"
#include "seupred/rng.hpp"

namespace seupred {

using json = nlohmann::ordered_json;

Stimulus parse_stimulus(const std::string& json_text, const Netlist& n) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw SyntaxError(std::string("malformed stimulus JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("cycles") || !j.contains("inputs"))
    throw SyntaxError("stimulus must be an object with 'cycles' and 'inputs'");
  if (!j["cycles"].is_number_integer() || j["cycles"].get<long long>() < 1)
    throw SyntaxError("stimulus cycles must be a positive integer");
  Stimulus s;
  s.cycles = j["cycles"].get<int>();
  const json& jin = j["inputs"];
  if (!jin.is_object()) throw SyntaxError("stimulus 'inputs' must be an object");
  int n_pi = static_cast<int>(n.inputs.size());
  s.bits.assign(static_cast<size_t>(s.cycles) * n_pi, 0);
  std::set<std::string> known;
  for (int p = 0; p < n_pi; ++p) known.insert(n.net_name(n.inputs[p]));
  for (const auto& [key, val] : jin.items())
    if (!known.count(key))
      throw SyntaxError("stimulus drives unknown primary input '" + key + "'");
  for (int p = 0; p < n_pi; ++p) {
    const std::string& name = n.net_name(n.inputs[p]);
    if (!jin.contains(name))
      throw SyntaxError("stimulus missing primary input '" + name + "'");
    const json& arr = jin[name];
    if (!arr.is_array() || static_cast<int>(arr.size()) != s.cycles)
      throw SyntaxError("stimulus for '" + name + "' must list exactly " +
                        std::to_string(s.cycles) + " bits");
    for (int c = 0; c < s.cycles; ++c) {
      const json& b = arr[c];
      if (!b.is_number_integer() || (b.get<int>() != 0 && b.get<int>() != 1))
        throw SyntaxError("stimulus bit for '" + name + "' at cycle " +
                          std::to_string(c) + " must be 0 or 1");
      s.bits[static_cast<size_t>(c) * n_pi + p] = static_cast<uint8_t>(b.get<int>());
    }
  }
  return s;
}

std::string serialize_stimulus(const Stimulus& s, const Netlist& n) {
  int n_pi = static_cast<int>(n.inputs.size());
  json j;
  j["cycles"] = s.cycles;
  json jin = json::object();
  for (int p = 0; p < n_pi; ++p) {
    json arr = json::array();
    for (int c = 0; c < s.cycles; ++c) arr.push_back(static_cast<int>(s.at(c, p, n_pi)));
    jin[n.net_name(n.inputs[p])] = arr;
  }
  j["inputs"] = jin;
  return j.dump(2) + "\n";
}

Stimulus gen_stimulus(const Netlist& n, int cycles, uint64_t seed) {
  if (cycles < 1) cycles = 1;
  Stimulus s;
  s.cycles = cycles;
  int n_pi = static_cast<int>(n.inputs.size());
  s.bits.resize(static_cast<size_t>(cycles) * n_pi);
  Rng rng(seed);
  for (auto& b : s.bits) b = static_cast<uint8_t>(rng.bounded(2));
  return s;
}

namespace {

uint8_t eval_gate(GateType t, uint8_t a, uint8_t b) {
  switch (t) {
    case GateType::INV: return !a;
    case GateType::BUF: return a;
    case GateType::AND2: return a & b;
    case GateType::OR2: return a | b;
    case GateType::NAND2: return !(a & b);
    case GateType::NOR2: return !(a | b);
    case GateType::XOR2: return a ^ b;
    case GateType::XNOR2: return !(a ^ b);
    case GateType::DFF: break;
  }
  return 0;
}

void check_stimulus(const Netlist& n, const Stimulus& s) {
  if (s.cycles < 1) throw ShapeMismatch("stimulus must cover at least one cycle");
  if (s.bits.size() != static_cast<size_t>(s.cycles) * n.inputs.size())
    throw ShapeMismatch("stimulus table is " + std::to_string(s.bits.size()) +
                        " bits, expected " +
                        std::to_string(s.cycles * n.inputs.size()));
}

SimTrace simulate(const Netlist& n, const Stimulus& s, const FaultSite* site) {
  check_stimulus(n, s);
  int n_ff = n.ff_count();
  int n_po = static_cast<int>(n.outputs.size());
  int n_pi = static_cast<int>(n.inputs.size());
  if (site) {
    if (site->ff_index < 0 || site->ff_index >= n_ff)
      throw SiteOutOfRange("ff_index " + std::to_string(site->ff_index) +
                           " outside [0, " + std::to_string(n_ff) + ")");
    if (site->t_seu < 0 || site->t_seu >= s.cycles)
      throw SiteOutOfRange("t_seu " + std::to_string(site->t_seu) + " outside [0, " +
                           std::to_string(s.cycles) + ")");
  }

  std::vector<int> order = levelize(n);

  SimTrace tr;
  tr.cycles = s.cycles;
  tr.n_ff = n_ff;
  tr.n_po = n_po;
  tr.n_pi = n_pi;
  tr.ff.resize(static_cast<size_t>(s.cycles) * n_ff);
  tr.po.resize(static_cast<size_t>(s.cycles) * n_po);
  tr.pi = s.bits;

  std::vector<uint8_t> state(n_ff);
  for (int i = 0; i < n_ff; ++i)
    state[i] = static_cast<uint8_t>(n.cells[n.dff_cells[i]].init);
  std::vector<uint8_t> net_val(n.nets.size(), 0);

  for (int c = 0; c < s.cycles; ++c) {
    if (c > 0) {
      std::vector<uint8_t> next(n_ff);
      for (int i = 0; i < n_ff; ++i)
        next[i] = net_val[n.cells[n.dff_cells[i]].inputs[0]];
      state = std::move(next);
    }
    if (site && c == site->t_seu) state[site->ff_index] ^= 1;
    for (int i = 0; i < n_ff; ++i) net_val[n.cells[n.dff_cells[i]].output] = state[i];
    for (int p = 0; p < n_pi; ++p)
      net_val[n.inputs[p]] = s.bits[static_cast<size_t>(c) * n_pi + p];
    for (int ci : order) {
      const Cell& cell = n.cells[ci];
      uint8_t a = net_val[cell.inputs[0]];
      uint8_t b = cell.inputs.size() > 1 ? net_val[cell.inputs[1]] : 0;
      net_val[cell.output] = eval_gate(cell.type, a, b);
    }
    for (int i = 0; i < n_ff; ++i) tr.ff[static_cast<size_t>(c) * n_ff + i] = state[i];
    for (int p = 0; p < n_po; ++p)
      tr.po[static_cast<size_t>(c) * n_po + p] = net_val[n.outputs[p]];
  }
  return tr;
}

}  // namespace

SimTrace simulate_golden(const Netlist& n, const Stimulus& s) {
  return simulate(n, s, nullptr);
}

SimTrace simulate_with_seu(const Netlist& n, const Stimulus& s, FaultSite site) {
  return simulate(n, s, &site);
}

FaultClass classify_fault(const SimTrace& golden, const SimTrace& faulty, int t_seu) {
  if (golden.cycles != faulty.cycles || golden.n_po != faulty.n_po)
    throw ShapeMismatch("golden and faulty traces have different shapes");
  for (int c = std::max(t_seu, 0); c < golden.cycles; ++c)
    for (int p = 0; p < golden.n_po; ++p)
      if (golden.po_at(c, p) != faulty.po_at(c, p)) return FaultClass::detected;
  return FaultClass::undetected;
}

uint64_t campaign_size(uint64_t n_ff, uint64_t n_times) { return n_ff * n_times; }

FaultLabelSet run_campaign(const Netlist& n, const Stimulus& s,
                           const std::vector<int>& injection_times,
                           const std::vector<int>& ff_subset, int jobs) {
  check_stimulus(n, s);
  std::vector<int> times = injection_times;
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());
  for (int t : times)
    if (t < 0 || t >= s.cycles)
      throw SiteOutOfRange("injection time " + std::to_string(t) + " outside [0, " +
                           std::to_string(s.cycles) + ")");
  std::vector<int> ffs = ff_subset;
  if (ffs.empty()) {
    ffs.resize(n.ff_count());
    for (int i = 0; i < n.ff_count(); ++i) ffs[i] = i;
  } else {
    std::sort(ffs.begin(), ffs.end());
    ffs.erase(std::unique(ffs.begin(), ffs.end()), ffs.end());
    for (int f : ffs)
      if (f < 0 || f >= n.ff_count())
        throw SiteOutOfRange("ff index " + std::to_string(f) + " outside [0, " +
                             std::to_string(n.ff_count()) + ")");
  }

  FaultLabelSet ls;
  ls.n_ff = n.ff_count();
  ls.injection_times = times;
  if (times.empty() || ffs.empty()) return ls;

  SimTrace golden = simulate_golden(n, s);
  size_t total = ffs.size() * times.size();
  std::vector<uint8_t> detected(total);
  parallel_for(total, jobs, [&](size_t k) {
    FaultSite site;
    site.ff_index = ffs[k / times.size()];
    site.t_seu = times[k % times.size()];
    SimTrace faulty = simulate_with_seu(n, s, site);
    detected[k] =
        classify_fault(golden, faulty, site.t_seu) == FaultClass::detected ? 1 : 0;
  });
  for (size_t k = 0; k < total; ++k) {
    int ff = ffs[k / times.size()];
    int t = times[k % times.size()];
    ls.labels[{ff, t}] = detected[k];
  }
  return ls;
}

std::string serialize_labels(const FaultLabelSet& ls) {
  json j;
  j["injection_times"] = ls.injection_times;
  json arr = json::array();
  for (const auto& [site, det] : ls.labels)
    arr.push_back(json::array({site.first, site.second, static_cast<int>(det)}));
  j["labels"] = arr;
  return j.dump() + "\n";
}

FaultLabelSet parse_labels(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw SyntaxError(std::string("malformed labels JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("injection_times") || !j.contains("labels"))
    throw SyntaxError("labels must be an object with 'injection_times' and 'labels'");
  FaultLabelSet ls;
  const json& jt = j["injection_times"];
  if (!jt.is_array()) throw SyntaxError("injection_times must be an array");
  for (const auto& v : jt) {
    if (!v.is_number_integer()) throw SyntaxError("injection_times entries must be integers");
    ls.injection_times.push_back(v.get<int>());
  }
  std::sort(ls.injection_times.begin(), ls.injection_times.end());
  ls.injection_times.erase(
      std::unique(ls.injection_times.begin(), ls.injection_times.end()),
      ls.injection_times.end());
  std::set<int> time_set(ls.injection_times.begin(), ls.injection_times.end());
  const json& jl = j["labels"];
  if (!jl.is_array()) throw SyntaxError("labels must be an array");
  for (const auto& row : jl) {
    if (!row.is_array() || row.size() != 3)
      throw SyntaxError("each label must be a [ff, t, 0|1] triple");
    for (const auto& v : row)
      if (!v.is_number_integer()) throw SyntaxError("label triples must be integers");
    int ff = row[0].get<int>();
    int t = row[1].get<int>();
    int det = row[2].get<int>();
    if (ff < 0) throw SyntaxError("label ff index must be >= 0");
    if (!time_set.count(t))
      throw SyntaxError("label time " + std::to_string(t) +
                        " not listed in injection_times");
    if (det != 0 && det != 1) throw SyntaxError("label value must be 0 or 1");
    if (!ls.labels.emplace(std::make_pair(ff, t), static_cast<uint8_t>(det)).second)
      throw SyntaxError("duplicate label for ff " + std::to_string(ff) + ", t " +
                        std::to_string(t));
    ls.n_ff = std::max(ls.n_ff, ff + 1);
  }
  return ls;
}

namespace {

std::string vcd_id(size_t k) {
  std::string s;
  do {
    s.push_back(static_cast<char>('!' + k % 94));
    k /= 94;
  } while (k > 0);
  return s;
}

}  // namespace

std::string vcd_text(const SimTrace& tr, const Netlist& n) {
  // One var per distinct net: clock, PIs, FF outputs, then POs that are not
  // already covered. Values come from the trace column that carries the net.
  struct Sig {
    std::string name;
    int kind;  // 0 clk, 1 pi, 2 ff, 3 po
    int col;
  };
  std::vector<Sig> sigs;
  std::set<int> seen_nets;
  sigs.push_back({n.net_name(n.clock), 0, 0});
  seen_nets.insert(n.clock);
  for (int p = 0; p < tr.n_pi; ++p) {
    sigs.push_back({n.net_name(n.inputs[p]), 1, p});
    seen_nets.insert(n.inputs[p]);
  }
  for (int i = 0; i < tr.n_ff; ++i) {
    int q = n.cells[n.dff_cells[i]].output;
    if (seen_nets.insert(q).second) sigs.push_back({n.net_name(q), 2, i});
  }
  for (int p = 0; p < tr.n_po; ++p)
    if (seen_nets.insert(n.outputs[p]).second)
      sigs.push_back({n.net_name(n.outputs[p]), 3, p});

  auto value_at = [&](const Sig& s, int c) -> int {
    switch (s.kind) {
      case 1: return tr.pi[static_cast<size_t>(c) * tr.n_pi + s.col];
      case 2: return tr.ff_at(c, s.col);
      case 3: return tr.po_at(c, s.col);
      default: return 0;
    }
  };

  std::string out;
  out += "$timescale 1ns $end\n";
  out += "$scope module " + n.name + " $end\n";
  for (size_t k = 0; k < sigs.size(); ++k)
    out += "$var wire 1 " + vcd_id(k) + " " + sigs[k].name + " $end\n";
  out += "$upscope $end\n";
  out += "$enddefinitions $end\n";

  // Rising edge of cycle c at time 10c+5; the settled cycle-c values are
  // emitted in the same timestamp block. Initial dump at #0 carries clock=0
  // plus every signal's cycle-0 value, so edge 0 needs only the clock change.
  std::vector<int> last(sigs.size(), -1);
  out += "#0\n$dumpvars\n";
  out += "0" + vcd_id(0) + "\n";
  for (size_t k = 1; k < sigs.size(); ++k) {
    int v = value_at(sigs[k], 0);
    last[k] = v;
    out += std::to_string(v) + vcd_id(k) + "\n";
  }
  out += "$end\n";
  for (int c = 0; c < tr.cycles; ++c) {
    if (c > 0) out += "#" + std::to_string(10 * c) + "\n0" + vcd_id(0) + "\n";
    out += "#" + std::to_string(10 * c + 5) + "\n1" + vcd_id(0) + "\n";
    for (size_t k = 1; k < sigs.size(); ++k) {
      int v = value_at(sigs[k], c);
      if (v != last[k]) {
        last[k] = v;
        out += std::to_string(v) + vcd_id(k) + "\n";
      }
    }
  }
  out += "#" + std::to_string(10 * tr.cycles) + "\n0" + vcd_id(0) + "\n";
  return out;
}

void write_vcd(const SimTrace& tr, const Netlist& n, const std::string& path) {
  write_file(path, vcd_text(tr, n));
}

}  // namespace seupred
