#include "seupred/graphgen.hpp"

#include <algorithm>
#include <deque>

#include "seupred/io_util.hpp"

namespace seupred {

std::map<int, FfPath> ff_distance_bfs(const Netlist& n, int src_ff) {
  // BFS over nets; entering a combinational cell costs one gate. DFF inputs
  // terminate paths. FIFO order plus declaration-order consumer expansion
  // makes the first path found to each destination the canonical one.
  std::map<int, FfPath> out;
  std::vector<int> ff_of_cell(n.cells.size(), -1);
  for (int i = 0; i < n.ff_count(); ++i) ff_of_cell[n.dff_cells[i]] = i;

  struct NetState {
    int dist;
    std::vector<GateType> gates;
  };
  std::vector<char> net_seen(n.nets.size(), 0);
  std::vector<char> dst_seen(n.ff_count(), 0);
  std::deque<std::pair<int, NetState>> queue;

  int start = n.cells[n.dff_cells[src_ff]].output;
  net_seen[start] = 1;
  queue.push_back({start, {0, {}}});

  while (!queue.empty()) {
    auto [net, st] = std::move(queue.front());
    queue.pop_front();
    for (int ci : n.net_consumers[net]) {
      const Cell& cell = n.cells[ci];
      if (cell.type == GateType::DFF) {
        int dst = ff_of_cell[ci];
        if (!dst_seen[dst]) {
          dst_seen[dst] = 1;
          out.emplace(dst, FfPath{st.dist, st.gates});
        }
      } else if (!net_seen[cell.output]) {
        net_seen[cell.output] = 1;
        NetState next{st.dist + 1, st.gates};
        next.gates.push_back(cell.type);
        queue.push_back({cell.output, std::move(next)});
      }
    }
  }
  return out;
}

SpatialGraph build_spatial_graph(const Netlist& n, int max_distance, bool undirected,
                                 int jobs) {
  if (max_distance < 0) max_distance = 0;
  SpatialGraph g;
  g.n = n.ff_count();
  g.max_distance = max_distance;
  g.c = max_distance * kCombGateTypes;
  g.node_names = n.ff_names();

  std::vector<std::map<int, FfPath>> per_src(g.n);
  parallel_for(static_cast<size_t>(g.n), jobs,
               [&](size_t s) { per_src[s] = ff_distance_bfs(n, static_cast<int>(s)); });

  // Assemble in (src, dst) order; map iteration is already dst-sorted.
  std::map<std::pair<uint32_t, uint32_t>, std::vector<GateType>> edges;
  for (int s = 0; s < g.n; ++s)
    for (const auto& [dst, path] : per_src[s]) {
      if (dst == s) continue;
      if (path.distance <= max_distance)
        edges.emplace(std::make_pair(static_cast<uint32_t>(s), static_cast<uint32_t>(dst)),
                      path.gates);
    }
  if (undirected) {
    auto fwd = edges;
    for (const auto& [key, gates] : fwd) {
      std::pair<uint32_t, uint32_t> rev{key.second, key.first};
      if (!edges.count(rev)) {
        std::vector<GateType> rgates(gates.rbegin(), gates.rend());
        edges.emplace(rev, std::move(rgates));
      }
    }
  }

  g.edge_feat.assign(edges.size() * static_cast<size_t>(g.c), 0.0f);
  size_t row = 0;
  for (const auto& [key, gates] : edges) {
    g.src.push_back(key.first);
    g.dst.push_back(key.second);
    for (size_t p = 0; p < gates.size(); ++p)
      g.edge_feat[row * g.c + p * kCombGateTypes + static_cast<int>(gates[p])] = 1.0f;
    ++row;
  }
  return g;
}

std::vector<GateType> decode_edge_sequence(const SpatialGraph& g, size_t edge) {
  std::vector<GateType> gates;
  bool ended = false;
  for (int p = 0; p < g.max_distance; ++p) {
    int hot = -1;
    for (int t = 0; t < kCombGateTypes; ++t) {
      float v = g.edge_feat[edge * g.c + p * kCombGateTypes + t];
      if (v == 1.0f) {
        if (hot != -1)
          throw ShapeMismatch("edge " + std::to_string(edge) + " block " +
                              std::to_string(p) + " has multiple hot entries");
        hot = t;
      } else if (v != 0.0f) {
        throw ShapeMismatch("edge " + std::to_string(edge) + " block " +
                            std::to_string(p) + " has a non-binary entry");
      }
    }
    if (hot == -1) {
      ended = true;
    } else {
      if (ended)
        throw ShapeMismatch("edge " + std::to_string(edge) + " has a gate block after a zero block");
      gates.push_back(static_cast<GateType>(hot));
    }
  }
  return gates;
}

GraphStats graph_stats(const SpatialGraph& g) {
  GraphStats st;
  st.n = g.n;
  st.num_edges = g.num_edges();
  st.density = g.n > 1 ? static_cast<double>(st.num_edges) /
                             (static_cast<double>(g.n) * (g.n - 1))
                       : 0.0;
  st.distance_hist.assign(static_cast<size_t>(g.max_distance) + 1, 0);
  for (size_t e = 0; e < g.num_edges(); ++e)
    st.distance_hist[decode_edge_sequence(g, e).size()]++;
  return st;
}

uint64_t structure_hash(const SpatialGraph& g) {
  std::string buf;
  append_u32_le(buf, static_cast<uint32_t>(g.n));
  append_u32_le(buf, static_cast<uint32_t>(g.max_distance));
  append_u32_le(buf, static_cast<uint32_t>(g.c));
  append_u32_le(buf, static_cast<uint32_t>(g.num_edges()));
  for (size_t e = 0; e < g.num_edges(); ++e) {
    append_u32_le(buf, g.src[e]);
    append_u32_le(buf, g.dst[e]);
  }
  for (float f : g.edge_feat) append_f32_le(buf, f);
  return fnv1a64(buf);
}

}  // namespace seupred
