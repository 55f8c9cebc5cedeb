// Copyright 2026 The tricity Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>
#include <span>

namespace tricity {

/// Caps worker parallelism for every parallel_for. 0 means logical cores.
void set_num_threads(int n);
int num_threads();

/// Number of chunks parallel_for splits [0, n) into. Depends only on n and
/// grain, never on the thread count, so per-chunk partial results reduced in
/// chunk order are identical for any --threads value.
std::size_t chunk_count(std::size_t n, std::size_t grain);

/// Calls fn(chunk, begin, end) once per chunk, possibly concurrently.
void parallel_for(std::size_t n, std::size_t grain,
                  const std::function<void(std::size_t, std::size_t, std::size_t)>& fn);

/// Pairwise (cascade) summation; result is independent of the caller's
/// partitioning and has O(log n) error growth.
double pairwise_sum(std::span<const double> v);

}  // namespace tricity
