// Copyright 2026 The tricity Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance suite: one PASS/FAIL line per criterion.
//   tricity_acceptance [--only A2,A5] [--quick]

#include <chrono>
#include <cstdio>
#include <exception>
#include <set>
#include <sstream>
#include <string>

#include "acceptance.hpp"
#include "tricity/parallel.hpp"

using namespace tricity::acceptance;

int main(int argc, char** argv) {
  Options opt;
  std::set<std::string> only;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--quick") {
      opt.quick = true;
    } else if (a == "--only" && i + 1 < argc) {
      std::stringstream ss(argv[++i]);
      std::string item;
      while (std::getline(ss, item, ',')) only.insert(item);
    } else {
      std::fprintf(stderr, "usage: %s [--only A1,A2,...] [--quick]\n", argv[0]);
      return 2;
    }
  }
  struct Criterion {
    const char* id;
    Outcome (*fn)(const Options&);
  };
  const Criterion all[] = {{"A1", run_a1}, {"A2", run_a2}, {"A3", run_a3},
                           {"A4", run_a4}, {"A5", run_a5}, {"A6", run_a6},
                           {"A7", run_a7}, {"A8", run_a8}, {"A9", run_a9}};
  int failed = 0;
  for (const Criterion& c : all) {
    if (!only.empty() && !only.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.fn(opt);
    } catch (const std::exception& e) {
      o.pass = false;
      o.message = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s %s %s [%.1fs]\n", c.id, o.pass ? "PASS" : "FAIL", o.message.c_str(), secs);
    std::fflush(stdout);
    failed += !o.pass;
  }
  return failed == 0 ? 0 : 1;
}
