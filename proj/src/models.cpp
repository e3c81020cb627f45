#include "seupred/models.hpp"

#include <cmath>

#include <json.hpp>

#include "seupred/rng.hpp"

namespace seupred {

const char* arch_name(Arch a) {
  switch (a) {
    case Arch::STGCN: return "stgcn";
    case Arch::ASTGCN: return "astgcn";
    case Arch::ASTGAT: return "astgat";
  }
  return "?";
}

Arch arch_from_name(const std::string& name) {
  if (name == "stgcn") return Arch::STGCN;
  if (name == "astgcn") return Arch::ASTGCN;
  if (name == "astgat") return Arch::ASTGAT;
  throw SpecInvalid("unknown architecture '" + name + "' (want stgcn, astgcn, or astgat)");
}

std::vector<int> stage_widths(const ModelSpec& spec) {
  if (spec.gnn_widths.empty()) return std::vector<int>(spec.gnn_layers, spec.hidden);
  return spec.gnn_widths;
}

int head_input_width(const ModelSpec& spec) {
  if (spec.arch == Arch::STGCN) return spec.hidden;
  return stage_widths(spec).back();
}

void validate_spec(const ModelSpec& spec) {
  if (spec.time_win_size < 2) throw WindowTooSmall(2, spec.time_win_size);
  if (spec.in_ch < 1 || spec.hidden < 1 || spec.e_dim < 1 || spec.heads < 1 ||
      spec.gnn_layers < 1 || spec.stgcn_blocks < 1)
    throw SpecInvalid("model widths and counts must be positive");
  if (spec.classes != 2) throw SpecInvalid("the output head is a 2-class detector");
  if (spec.aspp_dilations.empty()) throw SpecInvalid("at least one dilation rate is required");
  for (int d : spec.aspp_dilations)
    if (d < 1) throw SpecInvalid("dilation rates must be >= 1");
  if (!spec.gnn_widths.empty() &&
      spec.gnn_widths.size() != static_cast<size_t>(spec.gnn_layers))
    throw SpecInvalid("gnn_widths must list one width per layer");
  for (int w : spec.gnn_widths)
    if (w < 1) throw SpecInvalid("stage widths must be positive");
  if (spec.arch == Arch::STGCN && spec.time_win_size - 2 * spec.stgcn_blocks < 1)
    throw WindowTooSmall(2 * spec.stgcn_blocks + 1, spec.time_win_size);
  if (spec.arch == Arch::ASTGAT) {
    for (int w : stage_widths(spec))
      if (w != spec.hidden)
        throw SpecInvalid("residual connections need equal input/output widths per stage");
  }
}

std::vector<int> time_trajectory(const ModelSpec& spec) {
  validate_spec(spec);
  std::vector<int> traj = {spec.time_win_size};
  if (spec.arch == Arch::STGCN) {
    int t = spec.time_win_size;
    for (int b = 0; b < spec.stgcn_blocks; ++b) {
      t -= 2;
      traj.push_back(t);
    }
  }
  traj.push_back(1);
  return traj;
}

std::vector<ParamDef> param_table(const ModelSpec& spec, int edge_dim) {
  validate_spec(spec);
  if (edge_dim < 0) throw SpecInvalid("edge feature width must be nonnegative");
  std::vector<ParamDef> defs;
  auto conv = [&](const std::string& name, int K, int ci, int co) {
    defs.push_back({name, {K, ci, co}, K * ci, K * co});
  };
  auto mat = [&](const std::string& name, int in, int out) {
    defs.push_back({name, {in, out}, in, out});
  };

  int h = spec.hidden;
  if (spec.arch == Arch::STGCN) {
    int w_in = spec.in_ch;
    for (int b = 0; b < spec.stgcn_blocks; ++b) {
      std::string pre = "block" + std::to_string(b) + ".";
      conv(pre + "tconv_a.theta", 2, w_in, h);
      mat(pre + "gcn.theta", h, h);
      mat(pre + "gcn.theta_e", edge_dim, 1);
      conv(pre + "tconv_b.theta", 2, h, h);
      w_in = h;
    }
  } else {
    conv("aspp.conv1.theta", 1, spec.in_ch, h);
    for (size_t i = 0; i < spec.aspp_dilations.size(); ++i)
      conv("aspp.branch" + std::to_string(i) + ".theta", 2, spec.in_ch, h);
    conv("aspp.out.theta", 1,
         h * static_cast<int>(1 + spec.aspp_dilations.size()), h);
    std::vector<int> widths = stage_widths(spec);
    int w_in = h;
    for (int i = 0; i < spec.gnn_layers; ++i) {
      std::string pre = "gnn" + std::to_string(i) + ".";
      if (spec.arch == Arch::ASTGCN) {
        mat(pre + "theta", w_in, widths[i]);
        mat(pre + "theta_e", edge_dim, 1);
      } else {
        for (int j = 0; j < spec.heads; ++j) {
          std::string hp = pre + "h" + std::to_string(j) + ".";
          mat(hp + "theta", w_in, widths[i]);
          mat(hp + "theta_e", edge_dim, spec.e_dim);
          mat(hp + "a_s", widths[i], 1);
          mat(hp + "a_t", widths[i], 1);
          mat(hp + "a_e", spec.e_dim, 1);
        }
      }
      w_in = widths[i];
    }
  }

  int hw = head_input_width(spec);
  int t_rem = time_trajectory(spec)[spec.arch == Arch::STGCN ? spec.stgcn_blocks : 0];
  conv("head.tconv.theta", t_rem, hw, spec.hidden);
  mat("head.linear.w", spec.hidden, spec.classes);
  return defs;
}

std::map<std::string, Tensor> init_params(const ModelSpec& spec, int edge_dim, uint64_t seed) {
  Rng rng(seed);
  std::map<std::string, Tensor> params;
  for (const ParamDef& def : param_table(spec, edge_dim)) {
    Tensor t(def.shape);
    double limit = std::sqrt(6.0 / (def.fan_in + def.fan_out));
    for (auto& v : t.data) v = static_cast<float>((2.0 * rng.uniform() - 1.0) * limit);
    params.emplace(def.name, std::move(t));
  }
  return params;
}

std::string spec_to_json(const ModelSpec& spec) {
  nlohmann::ordered_json j;
  j["arch"] = arch_name(spec.arch);
  j["time_win_size"] = spec.time_win_size;
  j["in_ch"] = spec.in_ch;
  j["hidden"] = spec.hidden;
  j["e_dim"] = spec.e_dim;
  j["heads"] = spec.heads;
  j["gnn_layers"] = spec.gnn_layers;
  j["stgcn_blocks"] = spec.stgcn_blocks;
  j["aspp_dilations"] = spec.aspp_dilations;
  j["gnn_widths"] = spec.gnn_widths;
  j["leaky_slope"] = spec.leaky_slope;
  j["norm_after_aspp"] = spec.norm_after_aspp;
  j["norm_after_gnn"] = spec.norm_after_gnn;
  return j.dump(2) + "\n";
}

ModelSpec spec_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw SpecInvalid(std::string("model spec: ") + e.what());
  }
  if (!j.is_object()) throw SpecInvalid("model spec must be a JSON object");
  ModelSpec spec;
  auto geti = [&](const char* key, int& out) {
    if (!j.contains(key)) return;
    if (!j[key].is_number_integer()) throw SpecInvalid(std::string(key) + " must be an integer");
    out = j[key].get<int>();
  };
  auto getb = [&](const char* key, bool& out) {
    if (!j.contains(key)) return;
    if (!j[key].is_boolean()) throw SpecInvalid(std::string(key) + " must be a boolean");
    out = j[key].get<bool>();
  };
  static const char* known[] = {"arch",         "time_win_size", "in_ch",
                                "hidden",       "e_dim",         "heads",
                                "gnn_layers",   "stgcn_blocks",  "aspp_dilations",
                                "gnn_widths",   "leaky_slope",   "norm_after_aspp",
                                "norm_after_gnn"};
  for (const auto& [key, unused] : j.items()) {
    (void)unused;
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) throw SpecInvalid("unknown model spec key '" + key + "'");
  }
  if (j.contains("arch")) {
    if (!j["arch"].is_string()) throw SpecInvalid("arch must be a string");
    spec.arch = arch_from_name(j["arch"].get<std::string>());
  }
  geti("time_win_size", spec.time_win_size);
  geti("in_ch", spec.in_ch);
  geti("hidden", spec.hidden);
  geti("e_dim", spec.e_dim);
  geti("heads", spec.heads);
  geti("gnn_layers", spec.gnn_layers);
  geti("stgcn_blocks", spec.stgcn_blocks);
  if (j.contains("aspp_dilations")) {
    if (!j["aspp_dilations"].is_array()) throw SpecInvalid("aspp_dilations must be an array");
    spec.aspp_dilations.clear();
    for (const auto& d : j["aspp_dilations"]) {
      if (!d.is_number_integer()) throw SpecInvalid("aspp_dilations must hold integers");
      spec.aspp_dilations.push_back(d.get<int>());
    }
  }
  if (j.contains("gnn_widths")) {
    if (!j["gnn_widths"].is_array()) throw SpecInvalid("gnn_widths must be an array");
    spec.gnn_widths.clear();
    for (const auto& d : j["gnn_widths"]) {
      if (!d.is_number_integer()) throw SpecInvalid("gnn_widths must hold integers");
      spec.gnn_widths.push_back(d.get<int>());
    }
  }
  if (j.contains("leaky_slope")) {
    if (!j["leaky_slope"].is_number()) throw SpecInvalid("leaky_slope must be a number");
    spec.leaky_slope = j["leaky_slope"].get<float>();
  }
  getb("norm_after_aspp", spec.norm_after_aspp);
  getb("norm_after_gnn", spec.norm_after_gnn);
  validate_spec(spec);
  return spec;
}

}  // namespace seupred
