#include "seupred/waveform.hpp"

#include <algorithm>
#include <cctype>
#include <string_view>
#include <unordered_map>

namespace seupred {

std::map<std::string, std::string> default_name_map(const Netlist& n) {
  std::map<std::string, std::string> m;
  for (int i = 0; i < n.ff_count(); ++i)
    m[n.ff_name(i)] = n.name + "." + n.net_name(n.cells[n.dff_cells[i]].output);
  return m;
}

namespace {

struct Tokenizer {
  std::string_view text;
  size_t pos = 0;
  int line = 1;

  bool next(std::string_view& tok) {
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) {
      if (text[pos] == '\n') ++line;
      ++pos;
    }
    if (pos >= text.size()) return false;
    size_t start = pos;
    while (pos < text.size() && !std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    tok = text.substr(start, pos - start);
    return true;
  }
};

struct VcdSignals {
  std::unordered_map<std::string, int> id_slot;           // identifier code -> slot
  std::vector<char> value;                                // slot -> current value
  std::unordered_map<std::string, std::pair<int, int>> full_name;  // name -> (slot, width)
  std::unordered_map<std::string, std::vector<int>> leaf_name;

  int slot_for_id(const std::string& id) {
    auto it = id_slot.find(id);
    if (it != id_slot.end()) return it->second;
    int slot = static_cast<int>(value.size());
    id_slot.emplace(id, slot);
    value.push_back('x');
    return slot;
  }
};

int resolve(const VcdSignals& sigs, const std::string& name, int line_for_err) {
  auto it = sigs.full_name.find(name);
  if (it != sigs.full_name.end()) {
    if (it->second.second != 1)
      throw VcdSyntaxError(line_for_err, "signal '" + name + "' is not 1 bit wide");
    return it->second.first;
  }
  if (name.find('.') == std::string::npos) {
    auto lit = sigs.leaf_name.find(name);
    if (lit != sigs.leaf_name.end()) {
      std::vector<int> slots = lit->second;
      std::sort(slots.begin(), slots.end());
      slots.erase(std::unique(slots.begin(), slots.end()), slots.end());
      if (slots.size() > 1)
        throw VcdSyntaxError(line_for_err,
                             "signal name '" + name + "' is ambiguous, use a full path");
      return slots.front();
    }
  }
  throw MissingSignal(name);
}

}  // namespace

WaveMatrix parse_vcd(const std::string& text, const std::string& clock_name,
                     const std::vector<std::string>& ff_names,
                     const std::map<std::string, std::string>& name_map,
                     int sample_offset) {
  Tokenizer tz{text};
  VcdSignals sigs;
  std::vector<std::string> scope;
  std::string_view tok;

  auto skip_until_end = [&] {
    std::string_view t;
    while (tz.next(t))
      if (t == "$end") return;
    throw VcdSyntaxError(tz.line, "unterminated $ section");
  };
  auto expect_end = [&](const char* what) {
    std::string_view t;
    if (!tz.next(t) || t != "$end")
      throw VcdSyntaxError(tz.line, std::string("expected $end after ") + what);
  };

  bool defs_done = false;
  while (!defs_done) {
    if (!tz.next(tok)) throw VcdSyntaxError(tz.line, "missing $enddefinitions");
    if (tok == "$comment" || tok == "$date" || tok == "$version" || tok == "$timescale") {
      skip_until_end();
    } else if (tok == "$scope") {
      std::string_view type, name;
      if (!tz.next(type) || !tz.next(name))
        throw VcdSyntaxError(tz.line, "truncated $scope");
      scope.emplace_back(name);
      expect_end("$scope");
    } else if (tok == "$upscope") {
      if (scope.empty()) throw VcdSyntaxError(tz.line, "$upscope without $scope");
      scope.pop_back();
      expect_end("$upscope");
    } else if (tok == "$var") {
      std::vector<std::string> parts;
      std::string_view t;
      while (tz.next(t) && t != "$end") parts.emplace_back(t);
      if (t != "$end" || parts.size() < 4)
        throw VcdSyntaxError(tz.line, "malformed $var declaration");
      int width;
      try {
        width = std::stoi(parts[1]);
      } catch (...) {
        throw VcdSyntaxError(tz.line, "bad $var width '" + parts[1] + "'");
      }
      const std::string& id = parts[2];
      const std::string& leaf = parts[3];
      int slot = sigs.slot_for_id(id);
      std::string full;
      for (const auto& s : scope) full += s + ".";
      full += leaf;
      sigs.full_name.emplace(full, std::make_pair(slot, width));
      sigs.leaf_name[leaf].push_back(slot);
    } else if (tok == "$enddefinitions") {
      expect_end("$enddefinitions");
      defs_done = true;
    } else {
      throw VcdSyntaxError(tz.line, "unexpected token '" + std::string(tok) +
                                        "' in declarations");
    }
  }

  int clk = resolve(sigs, clock_name, tz.line);
  std::vector<int> ff_slot(ff_names.size());
  for (size_t i = 0; i < ff_names.size(); ++i) {
    auto it = name_map.find(ff_names[i]);
    if (it == name_map.end()) throw MissingSignal(ff_names[i]);
    ff_slot[i] = resolve(sigs, it->second, tz.line);
  }

  WaveMatrix wave;
  wave.ff_names = ff_names;
  wave.clock_name = clock_name;
  wave.n = static_cast<int>(ff_names.size());

  long long cur_time = 0;
  char clk_at_block_start = sigs.value[clk];
  bool in_block = false;
  std::vector<int> pending;  // sample countdowns, in blocks

  auto sample_row = [&] {
    for (size_t i = 0; i < ff_slot.size(); ++i) {
      char v = sigs.value[ff_slot[i]];
      if (v != '0' && v != '1') throw NonBinaryValue(ff_names[i], cur_time);
      wave.values.push_back(static_cast<uint8_t>(v - '0'));
    }
    ++wave.cycles;
  };
  auto end_block = [&] {
    if (!in_block) return;
    for (int& p : pending) --p;
    if (clk_at_block_start == '0' && sigs.value[clk] == '1') pending.push_back(sample_offset);
    while (!pending.empty() && pending.front() <= 0) {
      sample_row();
      pending.erase(pending.begin());
    }
    in_block = false;
  };
  auto apply_change = [&](const std::string& id, char v, const std::string& raw) {
    auto it = sigs.id_slot.find(id);
    if (it == sigs.id_slot.end())
      throw VcdSyntaxError(tz.line, "value change for undeclared id '" + raw + "'");
    sigs.value[it->second] = v;
  };

  while (tz.next(tok)) {
    if (tok[0] == '#') {
      end_block();
      try {
        cur_time = std::stoll(std::string(tok.substr(1)));
      } catch (...) {
        throw VcdSyntaxError(tz.line, "bad timestamp '" + std::string(tok) + "'");
      }
      clk_at_block_start = sigs.value[clk];
      in_block = true;
    } else if (tok == "$dumpvars" || tok == "$dumpall" || tok == "$dumpon" ||
               tok == "$dumpoff" || tok == "$end") {
      continue;  // dump sections carry ordinary value changes
    } else if (tok == "$comment") {
      skip_until_end();
    } else if (tok[0] == '0' || tok[0] == '1' || tok[0] == 'x' || tok[0] == 'z' ||
               tok[0] == 'X' || tok[0] == 'Z') {
      if (tok.size() < 2)
        throw VcdSyntaxError(tz.line, "scalar change missing identifier");
      char v = static_cast<char>(std::tolower(static_cast<unsigned char>(tok[0])));
      apply_change(std::string(tok.substr(1)), v, std::string(tok));
    } else if (tok[0] == 'b' || tok[0] == 'B') {
      std::string bits(tok.substr(1));
      std::string_view id;
      if (bits.empty() || !tz.next(id))
        throw VcdSyntaxError(tz.line, "malformed vector change");
      char v;
      if (bits.size() == 1)
        v = static_cast<char>(std::tolower(static_cast<unsigned char>(bits[0])));
      else
        v = 'W';  // wide value; an error only if something samples this signal
      apply_change(std::string(id), v, std::string(tok));
    } else if (tok[0] == 'r' || tok[0] == 'R') {
      std::string_view id;
      if (!tz.next(id)) throw VcdSyntaxError(tz.line, "malformed real change");
      apply_change(std::string(id), 'W', std::string(tok));
    } else {
      throw VcdSyntaxError(tz.line, "unexpected token '" + std::string(tok) + "'");
    }
  }
  end_block();

  if (wave.values.size() != static_cast<size_t>(wave.cycles) * wave.n)
    throw VcdSyntaxError(tz.line, "internal sampling inconsistency");
  return wave;
}

FeatureTensor build_feature_tensor(const WaveMatrix& wave, int t_seu, int time_win_size) {
  if (time_win_size < 2)
    throw WindowOutOfRange("time_win_size must be at least 2, got " +
                           std::to_string(time_win_size));
  if (t_seu < 1)
    throw WindowOutOfRange("t_seu must be >= 1 (the window starts one cycle before "
                           "injection), got " + std::to_string(t_seu));
  if (t_seu - 1 + time_win_size > wave.cycles)
    throw WindowOutOfRange("window [" + std::to_string(t_seu - 1) + ", " +
                           std::to_string(t_seu - 1 + time_win_size) +
                           ") exceeds trace length " + std::to_string(wave.cycles));
  FeatureTensor ft;
  ft.t_seu = t_seu;
  ft.t = time_win_size;
  ft.n = wave.n;
  ft.m = 1;
  ft.x.resize(static_cast<size_t>(ft.t) * ft.n);
  for (int i = 0; i < ft.t; ++i)
    for (int j = 0; j < ft.n; ++j)
      ft.x[static_cast<size_t>(i) * ft.n + j] = static_cast<float>(wave.at(t_seu - 1 + i, j));
  return ft;
}

BatchTensors batch_feature_tensors(const WaveMatrix& wave,
                                   const std::vector<int>& injection_times,
                                   int time_win_size) {
  BatchTensors out;
  for (int t : injection_times) {
    try {
      out.tensors.push_back(build_feature_tensor(wave, t, time_win_size));
    } catch (const WindowOutOfRange&) {
      out.skipped.push_back(t);
    }
  }
  return out;
}

}  // namespace seupred
