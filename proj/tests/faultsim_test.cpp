#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "oracle_util.hpp"
#include "seupred/faultsim.hpp"
#include "seupred/netlist.hpp"

using namespace seupred;
using testutil::fixpoint_simulate;

namespace {

Stimulus bits_stimulus(const std::vector<int>& si) {
  Stimulus s;
  s.cycles = static_cast<int>(si.size());
  for (int b : si) s.bits.push_back(static_cast<uint8_t>(b));
  return s;
}

}  // namespace

TEST_CASE("shift register: values shift one position per cycle") {
  Netlist n = parse_netlist(sr3_json());
  SimTrace tr = simulate_golden(n, bits_stimulus({1, 0, 0, 0, 0}));
  std::vector<std::vector<int>> want = {
      {0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {0, 0, 0}};
  for (int c = 0; c < 5; ++c)
    for (int i = 0; i < 3; ++i) CHECK(tr.ff_at(c, i) == want[c][i]);
  std::vector<int> want_po = {0, 0, 0, 1, 0};
  for (int c = 0; c < 5; ++c) CHECK(tr.po_at(c, 0) == want_po[c]);
}

TEST_CASE("one-cycle trace equals init bits") {
  Netlist n = gen_synthetic_circuit(11, 8, 1, 3);
  SimTrace tr = simulate_golden(n, gen_stimulus(n, 1, 0));
  for (int i = 0; i < n.ff_count(); ++i)
    CHECK(tr.ff_at(0, i) == n.cells[n.dff_cells[i]].init);
}

TEST_CASE("levelized simulation equals fixpoint oracle on random circuits") {
  for (uint64_t seed : {1u, 2u, 3u, 40u, 41u}) {
    Netlist n = gen_synthetic_circuit(seed, 20, 1, 5);
    Stimulus s = gen_stimulus(n, 50, seed + 100);
    SimTrace fast = simulate_golden(n, s);
    SimTrace slow = fixpoint_simulate(n, s, nullptr);
    CHECK(fast.ff == slow.ff);
    CHECK(fast.po == slow.po);
    FaultSite site{static_cast<int>(seed % n.ff_count()), static_cast<int>(seed % s.cycles)};
    SimTrace fast_f = simulate_with_seu(n, s, site);
    SimTrace slow_f = fixpoint_simulate(n, s, &site);
    CHECK(fast_f.ff == slow_f.ff);
    CHECK(fast_f.po == slow_f.po);
  }
}

TEST_CASE("SEU on a PO-disconnected flip-flop leaves the PO trace untouched") {
  // f_b's output q_b drives nothing; only f_a reaches the output.
  std::string text = R"({
    "name": "dangle", "clock": "clk", "inputs": ["a"], "outputs": ["oa"],
    "cells": [
      {"name": "f_a", "type": "DFF", "inputs": ["a"], "output": "q_a"},
      {"name": "f_b", "type": "DFF", "inputs": ["a"], "output": "q_b"},
      {"name": "g", "type": "BUF", "inputs": ["q_a"], "output": "oa"}
    ]
  })";
  Netlist n = parse_netlist(text);
  Stimulus s = gen_stimulus(n, 10, 5);
  SimTrace golden = simulate_golden(n, s);
  for (int t = 0; t < s.cycles; ++t) {
    SimTrace faulty = simulate_with_seu(n, s, {1, t});
    CHECK(faulty.po == golden.po);
    CHECK(classify_fault(golden, faulty, t) == FaultClass::undetected);
  }
}

TEST_CASE("SEU on the PO-adjacent flip-flop differs at exactly the injection cycle") {
  Netlist n = parse_netlist(sr3_json());
  Stimulus s = bits_stimulus({1, 0, 1, 1, 0, 0});
  SimTrace golden = simulate_golden(n, s);
  for (int t : {0, 2, 5}) {  // includes t = last cycle
    SimTrace faulty = simulate_with_seu(n, s, {2, t});
    for (int c = 0; c < s.cycles; ++c) {
      bool differs = faulty.po_at(c, 0) != golden.po_at(c, 0);
      CHECK(differs == (c == t));
    }
    CHECK(classify_fault(golden, faulty, t) == FaultClass::detected);
  }
}

TEST_CASE("classify_fault boundary behavior") {
  SimTrace a;
  a.cycles = 4;
  a.n_po = 1;
  a.po = {0, 0, 0, 0};
  SimTrace b = a;
  CHECK(classify_fault(a, b, 0) == FaultClass::undetected);
  b.po[2] = 1;
  CHECK(classify_fault(a, b, 2) == FaultClass::detected);
  CHECK(classify_fault(a, b, 0) == FaultClass::detected);
  // a difference strictly before the injection cycle does not count
  CHECK(classify_fault(a, b, 3) == FaultClass::undetected);
  SimTrace c = a;
  c.cycles = 3;
  c.po = {0, 0, 0};
  CHECK_THROWS_AS(classify_fault(a, c, 0), ShapeMismatch);
}

TEST_CASE("site validation") {
  Netlist n = parse_netlist(sr3_json());
  Stimulus s = bits_stimulus({1, 0, 0});
  CHECK_THROWS_AS(simulate_with_seu(n, s, {3, 0}), SiteOutOfRange);
  CHECK_THROWS_AS(simulate_with_seu(n, s, {-1, 0}), SiteOutOfRange);
  CHECK_THROWS_AS(simulate_with_seu(n, s, {0, 3}), SiteOutOfRange);
  CHECK_THROWS_AS(run_campaign(n, s, {5}), SiteOutOfRange);
}

TEST_CASE("campaign grid size arithmetic") {
  CHECK(campaign_size(3041, 40) == 121640);
  CHECK(campaign_size(2126, 20) == 42520);
  CHECK(campaign_size(2126, 46) == 97796);
  CHECK(campaign_size(0, 40) == 0);
}

TEST_CASE("3-FF shift register campaign matches hand-derived labels") {
  // A flip in stage k at cycle t reaches the output q2 at cycle t + (2 - k);
  // with 5 cycles it is detected iff that lands at or before cycle 4.
  Netlist n = parse_netlist(sr3_json());
  Stimulus s = bits_stimulus({1, 0, 0, 0, 0});
  FaultLabelSet ls = run_campaign(n, s, {1, 2, 3, 4});
  CHECK(ls.size() == 12);
  CHECK(ls.n_ff == 3);
  for (int k = 0; k < 3; ++k)
    for (int t = 1; t <= 4; ++t) {
      int want = t + (2 - k) <= 4 ? 1 : 0;
      CHECK(ls.get(k, t) == want);
    }
}

TEST_CASE("empty campaign inputs give empty label sets") {
  Netlist n = parse_netlist(sr3_json());
  Stimulus s = bits_stimulus({1, 0});
  CHECK(run_campaign(n, s, {}).size() == 0);
}

TEST_CASE("campaign result is independent of the job count") {
  Netlist n = gen_synthetic_circuit(21, 16, 1, 4);
  Stimulus s = gen_stimulus(n, 30, 2);
  std::vector<int> times = {1, 5, 9, 20, 29};
  FaultLabelSet a = run_campaign(n, s, times, {}, 1);
  FaultLabelSet b = run_campaign(n, s, times, {}, 4);
  CHECK(a.labels == b.labels);
  CHECK(a.injection_times == b.injection_times);
  CHECK(a.size() == campaign_size(16, times.size()));
}

TEST_CASE("detected labels only ever differ at or after the injection cycle") {
  Netlist n = gen_synthetic_circuit(33, 12, 1, 4);
  Stimulus s = gen_stimulus(n, 25, 3);
  SimTrace golden = simulate_golden(n, s);
  for (int ff = 0; ff < n.ff_count(); ff += 3)
    for (int t : {0, 7, 24}) {
      SimTrace faulty = simulate_with_seu(n, s, {ff, t});
      for (int c = 0; c < t; ++c)
        for (int p = 0; p < golden.n_po; ++p) REQUIRE(faulty.po_at(c, p) == golden.po_at(c, p));
    }
}

TEST_CASE("ff_subset campaigns cover exactly the requested grid") {
  Netlist n = parse_netlist(sr3_json());
  Stimulus s = bits_stimulus({1, 0, 0, 0, 0});
  FaultLabelSet ls = run_campaign(n, s, {1, 2}, {2, 0});
  CHECK(ls.size() == 4);
  CHECK(ls.has(0, 1));
  CHECK(ls.has(2, 2));
  CHECK_FALSE(ls.has(1, 1));
}

TEST_CASE("labels JSON round-trip and validation") {
  Netlist n = parse_netlist(sr3_json());
  Stimulus s = bits_stimulus({1, 0, 0, 0, 0});
  FaultLabelSet ls = run_campaign(n, s, {1, 2, 3, 4});
  FaultLabelSet back = parse_labels(serialize_labels(ls));
  CHECK(back.labels == ls.labels);
  CHECK(back.injection_times == ls.injection_times);
  CHECK(back.n_ff == ls.n_ff);

  CHECK_THROWS_AS(parse_labels("{}"), SyntaxError);
  CHECK_THROWS_AS(parse_labels(R"({"injection_times":[1],"labels":[[0,2,1]]})"), SyntaxError);
  CHECK_THROWS_AS(parse_labels(R"({"injection_times":[1],"labels":[[0,1,2]]})"), SyntaxError);
  CHECK_THROWS_AS(parse_labels(R"({"injection_times":[1],"labels":[[0,1,1],[0,1,0]]})"),
                  SyntaxError);
}

TEST_CASE("stimulus JSON round-trip and validation") {
  Netlist n = parse_netlist(sr3_json());
  Stimulus s = gen_stimulus(n, 7, 9);
  Stimulus back = parse_stimulus(serialize_stimulus(s, n), n);
  CHECK(back.cycles == s.cycles);
  CHECK(back.bits == s.bits);

  CHECK_THROWS_AS(parse_stimulus(R"({"cycles":2,"inputs":{}})", n), SyntaxError);
  CHECK_THROWS_AS(parse_stimulus(R"({"cycles":2,"inputs":{"si":[1]}})", n), SyntaxError);
  CHECK_THROWS_AS(parse_stimulus(R"({"cycles":2,"inputs":{"si":[1,2]}})", n), SyntaxError);
  CHECK_THROWS_AS(parse_stimulus(R"({"cycles":0,"inputs":{"si":[]}})", n), SyntaxError);
  CHECK_THROWS_AS(parse_stimulus(R"({"cycles":1,"inputs":{"si":[1],"zz":[1]}})", n),
                  SyntaxError);
}

// Minimal structural validator for the emitted VCD dialect, independent of
// the parser in this repo: declaration section shape, ids declared before
// use, strictly increasing timestamps, and change-only value emission.
namespace {

void check_vcd_grammar(const std::string& text) {
  std::vector<std::string> toks;
  std::string cur;
  for (char ch : text) {
    if (ch == ' ' || ch == '\n' || ch == '\t') {
      if (!cur.empty()) toks.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  if (!cur.empty()) toks.push_back(cur);

  size_t i = 0;
  auto eat = [&](const std::string& want) {
    REQUIRE(i < toks.size());
    REQUIRE(toks[i] == want);
    ++i;
  };
  eat("$timescale");
  REQUIRE(toks[i] == "1ns");
  ++i;
  eat("$end");
  eat("$scope");
  eat("module");
  ++i;  // module name
  eat("$end");
  std::set<std::string> ids;
  while (toks[i] == "$var") {
    ++i;
    eat("wire");
    eat("1");
    REQUIRE(ids.insert(toks[i]).second);
    ++i;  // id
    ++i;  // name
    eat("$end");
  }
  eat("$upscope");
  eat("$end");
  eat("$enddefinitions");
  eat("$end");

  long long last_time = -1;
  std::map<std::string, char> value;
  bool in_dump = false;
  for (; i < toks.size(); ++i) {
    const std::string& t = toks[i];
    if (t[0] == '#') {
      long long time = std::stoll(t.substr(1));
      REQUIRE(time > last_time);
      last_time = time;
    } else if (t == "$dumpvars") {
      in_dump = true;
    } else if (t == "$end") {
      REQUIRE(in_dump);
      in_dump = false;
    } else {
      REQUIRE((t[0] == '0' || t[0] == '1'));
      std::string id = t.substr(1);
      REQUIRE(ids.count(id));
      auto it = value.find(id);
      if (it != value.end()) REQUIRE(it->second != t[0]);  // change-only
      value[id] = t[0];
    }
  }
}

}  // namespace

TEST_CASE("emitted VCD passes an independent grammar check") {
  Netlist small = parse_netlist(sr3_json());
  check_vcd_grammar(vcd_text(simulate_golden(small, bits_stimulus({1, 0, 1, 0})), small));

  Netlist big = gen_synthetic_circuit(7, 64, 2, 6);
  Stimulus s = gen_stimulus(big, 20, 1);
  check_vcd_grammar(vcd_text(simulate_golden(big, s), big));
}
