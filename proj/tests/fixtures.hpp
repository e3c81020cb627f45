#pragma once

#include <string>

// Shared hand-written circuit fixtures.

// 3-stage shift register: si -> BUF -> f0 -> BUF -> f1 -> BUF -> f2 -> BUF -> so.
// All DFFs init to 0. FF node order is f0, f1, f2.
inline std::string sr3_json() {
  return R"({
    "name": "sr3",
    "clock": "clk",
    "inputs": ["si"],
    "outputs": ["so"],
    "cells": [
      {"name": "b0", "type": "BUF", "inputs": ["si"], "output": "d0"},
      {"name": "f0", "type": "DFF", "inputs": ["d0"], "output": "q0", "init": 0},
      {"name": "b1", "type": "BUF", "inputs": ["q0"], "output": "d1"},
      {"name": "f1", "type": "DFF", "inputs": ["d1"], "output": "q1", "init": 0},
      {"name": "b2", "type": "BUF", "inputs": ["q1"], "output": "d2"},
      {"name": "f2", "type": "DFF", "inputs": ["d2"], "output": "q2", "init": 0},
      {"name": "bo", "type": "BUF", "inputs": ["q2"], "output": "so"}
    ]
  })";
}

// Smallest legal circuit: one DFF whose output loops back through a BUF.
inline std::string dff_loop_json() {
  return R"({
    "name": "loop1",
    "clock": "clk",
    "inputs": ["unused_pi"],
    "outputs": ["q"],
    "cells": [
      {"name": "b", "type": "BUF", "inputs": ["q"], "output": "d"},
      {"name": "f", "type": "DFF", "inputs": ["d"], "output": "q", "init": 1}
    ]
  })";
}
