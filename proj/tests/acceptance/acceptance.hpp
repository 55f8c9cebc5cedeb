// Copyright 2026 The tricity Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>

namespace tricity::acceptance {

struct Options {
  bool quick = false;  // smaller fitting budgets for smoke runs
};

struct Outcome {
  bool pass = false;
  std::string message;
};

Outcome run_a1(const Options&);
Outcome run_a2(const Options&);
Outcome run_a3(const Options&);
Outcome run_a4(const Options&);
Outcome run_a5(const Options&);
Outcome run_a6(const Options&);
Outcome run_a7(const Options&);
Outcome run_a8(const Options&);
Outcome run_a9(const Options&);

}  // namespace tricity::acceptance
