// Copyright 2026 The mmpde Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>

namespace mmpde {

/// Worker count: MMPDE_NUM_THREADS if set, else the hardware concurrency
/// (capped at 8). MMPDE_DETERMINISTIC=1 forces 1.
int num_threads();
/// Overrides the environment for the current process (0 restores it).
void set_num_threads(int n);

/// Runs fn(begin, end) over [0, n) split in contiguous chunks. Callers
/// write to disjoint per-index outputs, so results do not depend on the
/// thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn,
                  std::size_t min_chunk = 512);

}  // namespace mmpde
