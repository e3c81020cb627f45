#include <doctest.h>

#include <map>
#include <set>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "seupred/graphgen.hpp"
#include "seupred/netlist.hpp"

using namespace seupred;

namespace {

int edge_index(const SpatialGraph& g, uint32_t s, uint32_t d) {
  for (size_t e = 0; e < g.num_edges(); ++e)
    if (g.src[e] == s && g.dst[e] == d) return static_cast<int>(e);
  return -1;
}

// All-pairs shortest gate counts by Floyd-Warshall over nets, where a
// combinational cell contributes a unit-cost arc input -> output. DFFs add
// no arcs, so paths can never cross a flip-flop. Independent of the BFS.
std::vector<std::vector<int>> fw_ff_distances(const Netlist& n) {
  const int INF = 1 << 28;
  size_t v = n.nets.size();
  std::vector<std::vector<int>> d(v, std::vector<int>(v, INF));
  for (size_t i = 0; i < v; ++i) d[i][i] = 0;
  for (int ci : n.comb_cells)
    for (int in : n.cells[ci].inputs)
      d[in][n.cells[ci].output] = 1;
  for (size_t k = 0; k < v; ++k)
    for (size_t i = 0; i < v; ++i) {
      if (d[i][k] == INF) continue;
      for (size_t j = 0; j < v; ++j)
        if (d[i][k] + d[k][j] < d[i][j]) d[i][j] = d[i][k] + d[k][j];
    }
  int nf = n.ff_count();
  std::vector<std::vector<int>> out(nf, std::vector<int>(nf, INF));
  for (int s = 0; s < nf; ++s)
    for (int t = 0; t < nf; ++t) {
      int q = n.cells[n.dff_cells[s]].output;
      int dd = n.cells[n.dff_cells[t]].inputs[0];
      out[s][t] = d[q][dd];
    }
  return out;
}

}  // namespace

TEST_CASE("single BUF between flip-flops gives distance 1") {
  Netlist n = parse_netlist(sr3_json());
  std::map<int, FfPath> p = ff_distance_bfs(n, 0);
  REQUIRE(p.count(1));
  CHECK(p.at(1).distance == 1);
  CHECK(p.at(1).gates == std::vector<GateType>{GateType::BUF});
  CHECK_FALSE(p.count(2));  // blocked by f1
}

TEST_CASE("direct wire between flip-flops gives distance 0") {
  std::string text = R"({
    "name": "wire", "clock": "clk", "inputs": ["a"], "outputs": ["q1"],
    "cells": [
      {"name": "g", "type": "BUF", "inputs": ["a"], "output": "d0"},
      {"name": "f0", "type": "DFF", "inputs": ["d0"], "output": "q0"},
      {"name": "f1", "type": "DFF", "inputs": ["q0"], "output": "q1"}
    ]
  })";
  Netlist n = parse_netlist(text);
  std::map<int, FfPath> p = ff_distance_bfs(n, 0);
  REQUIRE(p.count(1));
  CHECK(p.at(1).distance == 0);
  CHECK(p.at(1).gates.empty());

  SpatialGraph g = build_spatial_graph(n, 0);
  CHECK(g.num_edges() == 1);
  CHECK(g.c == 0);
  CHECK(decode_edge_sequence(g, 0).empty());
}

TEST_CASE("two-gate path encodes one-hot blocks in source-to-target order") {
  std::string text = R"({
    "name": "two", "clock": "clk", "inputs": ["a"], "outputs": ["q2"],
    "cells": [
      {"name": "f1", "type": "DFF", "inputs": ["a"], "output": "q1"},
      {"name": "u1", "type": "AND2", "inputs": ["q1", "a"], "output": "w1"},
      {"name": "u2", "type": "INV", "inputs": ["w1"], "output": "w2"},
      {"name": "f2", "type": "DFF", "inputs": ["w2"], "output": "q2"}
    ]
  })";
  Netlist n = parse_netlist(text);
  SpatialGraph g = build_spatial_graph(n, 6);
  CHECK(g.c == 48);
  REQUIRE(g.num_edges() == 1);
  CHECK(g.src[0] == 0);
  CHECK(g.dst[0] == 1);
  std::vector<float> want(48, 0.0f);
  want[0 * 8 + static_cast<int>(GateType::AND2)] = 1.0f;
  want[1 * 8 + static_cast<int>(GateType::INV)] = 1.0f;
  CHECK(g.edge_feat == want);
  CHECK(decode_edge_sequence(g, 0) ==
        std::vector<GateType>{GateType::AND2, GateType::INV});
}

TEST_CASE("multi-hop edges appear alongside single-hop ones") {
  // f0 feeds f1 after one BUF; the same path continues through the merge
  // gate into f2, so f0 reaches f2 in two gates and f1 in one.
  std::string text = R"({
    "name": "hops", "clock": "clk", "inputs": ["a"], "outputs": ["q2"],
    "cells": [
      {"name": "f0", "type": "DFF", "inputs": ["a"], "output": "q0"},
      {"name": "b1", "type": "BUF", "inputs": ["q0"], "output": "w1"},
      {"name": "f1", "type": "DFF", "inputs": ["w1"], "output": "q1"},
      {"name": "m", "type": "AND2", "inputs": ["w1", "q1"], "output": "w2"},
      {"name": "f2", "type": "DFF", "inputs": ["w2"], "output": "q2"}
    ]
  })";
  Netlist n = parse_netlist(text);
  SpatialGraph g = build_spatial_graph(n, 2);
  std::set<std::pair<uint32_t, uint32_t>> edges;
  for (size_t e = 0; e < g.num_edges(); ++e) edges.insert({g.src[e], g.dst[e]});
  CHECK(edges == std::set<std::pair<uint32_t, uint32_t>>{{0, 1}, {0, 2}, {1, 2}});
  int e02 = edge_index(g, 0, 2);
  REQUIRE(e02 >= 0);
  CHECK(decode_edge_sequence(g, e02) ==
        std::vector<GateType>{GateType::BUF, GateType::AND2});
  int e12 = edge_index(g, 1, 2);
  CHECK(decode_edge_sequence(g, e12) == std::vector<GateType>{GateType::AND2});

  SpatialGraph tight = build_spatial_graph(n, 1);
  std::set<std::pair<uint32_t, uint32_t>> tight_edges;
  for (size_t e = 0; e < tight.num_edges(); ++e)
    tight_edges.insert({tight.src[e], tight.dst[e]});
  CHECK(tight_edges == std::set<std::pair<uint32_t, uint32_t>>{{0, 1}, {1, 2}});
}

TEST_CASE("BFS distances match the Floyd-Warshall oracle") {
  const int INF = 1 << 28;
  for (uint64_t seed : {2u, 8u, 31u}) {
    Netlist n = gen_synthetic_circuit(seed, 16, 2, 5);
    std::vector<std::vector<int>> fw = fw_ff_distances(n);
    for (int s = 0; s < n.ff_count(); ++s) {
      std::map<int, FfPath> p = ff_distance_bfs(n, s);
      for (int t = 0; t < n.ff_count(); ++t) {
        if (fw[s][t] == INF) {
          CHECK_FALSE(p.count(t));
        } else {
          REQUIRE(p.count(t));
          CHECK(p.at(t).distance == fw[s][t]);
          CHECK(p.at(t).gates.size() == static_cast<size_t>(fw[s][t]));
        }
      }
    }
  }
}

TEST_CASE("edges grow monotonically with max_distance") {
  for (uint64_t seed : {7u, 19u}) {
    Netlist n = gen_synthetic_circuit(seed, 64, 2, 6);
    std::set<std::pair<uint32_t, uint32_t>> prev;
    size_t prev_count = 0;
    for (int md = 0; md <= 10; ++md) {
      SpatialGraph g = build_spatial_graph(n, md);
      std::set<std::pair<uint32_t, uint32_t>> cur;
      for (size_t e = 0; e < g.num_edges(); ++e) cur.insert({g.src[e], g.dst[e]});
      for (const auto& e : prev) CHECK(cur.count(e));
      CHECK(cur.size() >= prev_count);
      prev = std::move(cur);
      prev_count = prev.size();
      // every stored row decodes to a sequence within the threshold
      for (size_t e = 0; e < g.num_edges(); ++e)
        CHECK(decode_edge_sequence(g, e).size() <= static_cast<size_t>(md));
    }
  }
}

TEST_CASE("edge direction follows signal flow") {
  std::string text = R"({
    "name": "oneway", "clock": "clk", "inputs": ["a"], "outputs": ["q1"],
    "cells": [
      {"name": "f0", "type": "DFF", "inputs": ["a"], "output": "q0"},
      {"name": "g", "type": "BUF", "inputs": ["q0"], "output": "d1"},
      {"name": "f1", "type": "DFF", "inputs": ["d1"], "output": "q1"}
    ]
  })";
  Netlist n = parse_netlist(text);
  SpatialGraph g = build_spatial_graph(n, 4);
  CHECK(edge_index(g, 0, 1) >= 0);
  CHECK(edge_index(g, 1, 0) == -1);

  SpatialGraph u = build_spatial_graph(n, 4, true);
  CHECK(edge_index(u, 0, 1) >= 0);
  int rev = edge_index(u, 1, 0);
  REQUIRE(rev >= 0);
  CHECK(decode_edge_sequence(u, rev) == std::vector<GateType>{GateType::BUF});
}

TEST_CASE("graph build is independent of the job count") {
  Netlist n = gen_synthetic_circuit(5, 32, 2, 5);
  SpatialGraph a = build_spatial_graph(n, 6, false, 1);
  SpatialGraph b = build_spatial_graph(n, 6, false, 4);
  CHECK(a.src == b.src);
  CHECK(a.dst == b.dst);
  CHECK(a.edge_feat == b.edge_feat);
  CHECK(structure_hash(a) == structure_hash(b));
}

TEST_CASE("graph statistics") {
  // mutual pair: density 1 over the 2-node graph
  std::string text = R"({
    "name": "pair", "clock": "clk", "inputs": ["a"], "outputs": ["q0"],
    "cells": [
      {"name": "u0", "type": "XOR2", "inputs": ["q1", "a"], "output": "d0"},
      {"name": "f0", "type": "DFF", "inputs": ["d0"], "output": "q0"},
      {"name": "u1", "type": "BUF", "inputs": ["q0"], "output": "d1"},
      {"name": "f1", "type": "DFF", "inputs": ["d1"], "output": "q1"}
    ]
  })";
  Netlist n = parse_netlist(text);
  SpatialGraph g = build_spatial_graph(n, 3);
  GraphStats st = graph_stats(g);
  CHECK(st.n == 2);
  CHECK(st.num_edges == 2);
  CHECK(st.density == doctest::Approx(1.0));
  REQUIRE(st.distance_hist.size() == 4);
  CHECK(st.distance_hist[1] == 2);

  SpatialGraph empty = build_spatial_graph(parse_netlist(sr3_json()), 3);
  GraphStats sr_stats = graph_stats(empty);
  CHECK(sr_stats.num_edges == 2);

  Netlist big = gen_synthetic_circuit(7, 64, 2, 6);
  size_t e6 = graph_stats(build_spatial_graph(big, 6)).num_edges;
  size_t e10 = graph_stats(build_spatial_graph(big, 10)).num_edges;
  CHECK(e6 <= e10);
}

TEST_CASE("structure hash separates different graphs") {
  Netlist a = gen_synthetic_circuit(1, 16, 2, 4);
  Netlist b = gen_synthetic_circuit(2, 16, 2, 4);
  SpatialGraph ga = build_spatial_graph(a, 6);
  SpatialGraph gb = build_spatial_graph(b, 6);
  SpatialGraph ga2 = build_spatial_graph(a, 6);
  CHECK(structure_hash(ga) == structure_hash(ga2));
  CHECK(structure_hash(ga) != structure_hash(gb));
  CHECK(structure_hash(ga) != structure_hash(build_spatial_graph(a, 7)));
}
