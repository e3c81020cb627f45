#pragma once

#include <map>
#include <string>
#include <vector>

#include "seupred/nn.hpp"

namespace seupred {

enum class Arch { STGCN = 0, ASTGCN = 1, ASTGAT = 2 };

const char* arch_name(Arch a);
Arch arch_from_name(const std::string& name);  // throws SpecInvalid

/// Hyperparameters shared by the three architectures. Widths and counts are
/// configurable; the defaults are desk-scale.
struct ModelSpec {
  Arch arch = Arch::STGCN;
  int time_win_size = 20;
  int in_ch = 1;
  int hidden = 16;
  int e_dim = 8;   // attention edge embedding width
  int heads = 1;   // attention heads, head-averaged
  int gnn_layers = 3;
  int stgcn_blocks = 2;
  std::vector<int> aspp_dilations = {1, 2, 4};
  std::vector<int> gnn_widths;  // per-stage override; empty = all `hidden`
  float leaky_slope = 0.2f;
  bool norm_after_aspp = true;
  bool norm_after_gnn = true;
  int classes = 2;
};

void validate_spec(const ModelSpec& spec);  // throws SpecInvalid / WindowTooSmall

std::string spec_to_json(const ModelSpec& spec);
ModelSpec spec_from_json(const std::string& text);

/// Stage output widths of the graph stack (ASTGCN / ASTGAT).
std::vector<int> stage_widths(const ModelSpec& spec);

/// Feature width entering the output head.
int head_input_width(const ModelSpec& spec);

/// Window length at each stage boundary: input, after each sandwich block,
/// after the head collapse. Only STGCN shrinks time.
std::vector<int> time_trajectory(const ModelSpec& spec);

struct ParamDef {
  std::string name;
  std::vector<int> shape;
  int fan_in;
  int fan_out;
};

/// Every learnable tensor in deterministic creation order; edge_dim is the
/// width of the spatial-graph edge feature rows.
std::vector<ParamDef> param_table(const ModelSpec& spec, int edge_dim);

/// Glorot-uniform initialization, drawn in table order from the given seed.
std::map<std::string, Tensor> init_params(const ModelSpec& spec, int edge_dim, uint64_t seed);

template <typename T>
std::map<std::string, int> bind_params(TapeT<T>& tape,
                                       const std::map<std::string, TensorT<T>>& params) {
  std::map<std::string, int> ids;
  for (const auto& [name, t] : params) ids.emplace(name, tape.input(t));
  return ids;
}

/// Full forward pass to per-node logits [n x classes]. x: [t x n x in_ch] on
/// the tape, y: [E x edge_dim] on the tape, params bound via bind_params.
template <typename T>
int model_forward(TapeT<T>& tape, const ModelSpec& spec, const GraphIndex& g, int y, int x,
                  const std::map<std::string, int>& params) {
  validate_spec(spec);
  const auto& xv = tape.val(x);
  if (xv.rank() != 3 || xv.dim(0) != spec.time_win_size || xv.dim(1) != g.n ||
      xv.dim(2) != spec.in_ch)
    throw ShapeMismatch("model input must be [time_win_size x n x in_ch]");

  auto pid = [&](const std::string& name) {
    auto it = params.find(name);
    if (it == params.end()) throw SpecInvalid("missing parameter " + name);
    return it->second;
  };
  const T eps = static_cast<T>(1e-5);
  const T slope = static_cast<T>(spec.leaky_slope);

  auto gcn_over_time = [&](int xin, int theta, int theta_e) {
    int t = tape.val(xin).dim(0);
    std::vector<int> steps;
    for (int ti = 0; ti < t; ++ti)
      steps.push_back(gcn_forward(tape, g, y, tape.slice_time(xin, ti), theta, theta_e, true));
    return tape.stack_time(steps);
  };

  int cur = x;
  switch (spec.arch) {
    case Arch::STGCN: {
      for (int b = 0; b < spec.stgcn_blocks; ++b) {
        std::string pre = "block" + std::to_string(b) + ".";
        cur = tape.temporal_conv(cur, pid(pre + "tconv_a.theta"), 1, false);
        cur = gcn_over_time(cur, pid(pre + "gcn.theta"), pid(pre + "gcn.theta_e"));
        cur = tape.temporal_conv(cur, pid(pre + "tconv_b.theta"), 1, false);
        cur = tape.layer_norm(cur, eps);
      }
      break;
    }
    case Arch::ASTGCN: {
      AsppParamIds<T> ap;
      ap.conv1 = pid("aspp.conv1.theta");
      for (size_t i = 0; i < spec.aspp_dilations.size(); ++i)
        ap.convs.push_back(pid("aspp.branch" + std::to_string(i) + ".theta"));
      ap.out_conv = pid("aspp.out.theta");
      cur = aspp_forward(tape, cur, ap, spec.aspp_dilations);
      if (spec.norm_after_aspp) cur = tape.layer_norm(cur, eps);
      for (int i = 0; i < spec.gnn_layers; ++i) {
        std::string pre = "gnn" + std::to_string(i) + ".";
        cur = gcn_over_time(cur, pid(pre + "theta"), pid(pre + "theta_e"));
        if (spec.norm_after_gnn) cur = tape.layer_norm(cur, eps);
      }
      break;
    }
    case Arch::ASTGAT: {
      AsppParamIds<T> ap;
      ap.conv1 = pid("aspp.conv1.theta");
      for (size_t i = 0; i < spec.aspp_dilations.size(); ++i)
        ap.convs.push_back(pid("aspp.branch" + std::to_string(i) + ".theta"));
      ap.out_conv = pid("aspp.out.theta");
      cur = aspp_forward(tape, cur, ap, spec.aspp_dilations);
      if (spec.norm_after_aspp) cur = tape.layer_norm(cur, eps);
      for (int i = 0; i < spec.gnn_layers; ++i) {
        std::string pre = "gnn" + std::to_string(i) + ".";
        int t = tape.val(cur).dim(0);
        std::vector<int> steps;
        for (int ti = 0; ti < t; ++ti) {
          int x2d = tape.slice_time(cur, ti);
          int acc = -1;
          for (int j = 0; j < spec.heads; ++j) {
            std::string hp = pre + "h" + std::to_string(j) + ".";
            GatParamIds<T> p{pid(hp + "theta"), pid(hp + "theta_e"), pid(hp + "a_s"),
                             pid(hp + "a_t"), pid(hp + "a_e")};
            int o = gat_forward(tape, g, y, x2d, p, slope, true);
            acc = j == 0 ? o : tape.add(acc, o);
          }
          if (spec.heads > 1) acc = tape.scale(acc, T(1) / static_cast<T>(spec.heads));
          steps.push_back(tape.add(x2d, acc));
        }
        cur = tape.stack_time(steps);
        if (spec.norm_after_gnn) cur = tape.layer_norm(cur, eps);
      }
      break;
    }
  }

  cur = tape.temporal_conv(cur, pid("head.tconv.theta"), 1, false);  // collapse to t = 1
  int flat = tape.slice_time(cur, 0);
  return tape.matmul(flat, pid("head.linear.w"));
}

}  // namespace seupred
