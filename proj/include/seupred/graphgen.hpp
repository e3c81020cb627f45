#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "seupred/netlist.hpp"

namespace seupred {

/// Directed flip-flop graph. An edge (src, dst) exists iff the shortest
/// combinational path from src's output to dst's data input crosses at most
/// max_distance gates. Feature row layout: block p of width 8 one-hot
/// encodes the gate type at step p along the shortest path (source to
/// target order); blocks past the path length stay zero, so a direct wire
/// (distance 0) has an all-zero row. Self-edges are not stored; layers add
/// them implicitly.
struct SpatialGraph {
  int n = 0;
  int max_distance = 0;
  int c = 0;  // feature width, max_distance * 8
  std::vector<uint32_t> src;
  std::vector<uint32_t> dst;  // aligned with src; sorted by (src, dst)
  std::vector<float> edge_feat;  // [num_edges x c]
  std::vector<std::string> node_names;

  size_t num_edges() const { return src.size(); }
};

/// Shortest combinational path from one flip-flop's output to every
/// reachable flip-flop's data input: gate count plus the gate types along
/// one shortest path. Paths never pass through another flip-flop. Ties are
/// broken by expanding consumer cells in declaration order, first hit wins.
struct FfPath {
  int distance = 0;
  std::vector<GateType> gates;
};
std::map<int, FfPath> ff_distance_bfs(const Netlist& n, int src_ff);

SpatialGraph build_spatial_graph(const Netlist& n, int max_distance,
                                 bool undirected = false, int jobs = 1);

/// Gate sequence encoded in one feature row; checks each block is one-hot
/// or zero and that no gate block follows a zero block.
std::vector<GateType> decode_edge_sequence(const SpatialGraph& g, size_t edge);

struct GraphStats {
  int n = 0;
  size_t num_edges = 0;
  double density = 0.0;                 // num_edges / (n * (n - 1))
  std::vector<size_t> distance_hist;    // index = path length, 0..max_distance
};
GraphStats graph_stats(const SpatialGraph& g);

/// Order-stable hash of the graph structure (node count, feature width,
/// edges, features); used to confirm two datasets share a circuit.
uint64_t structure_hash(const SpatialGraph& g);

}  // namespace seupred
