// Copyright 2026 The mmpde Authors
// SPDX-License-Identifier: Apache-2.0

#include "mmpde/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace mmpde {

namespace {

std::atomic<int> g_override{0};

int from_env() {
  if (const char* det = std::getenv("MMPDE_DETERMINISTIC"); det && std::string(det) == "1") return 1;
  if (const char* s = std::getenv("MMPDE_NUM_THREADS")) {
    const int n = std::atoi(s);
    if (n > 0) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return static_cast<int>(std::clamp(hw, 1u, 8u));
}

}  // namespace

int num_threads() {
  const int o = g_override.load();
  if (o > 0) return o;
  static const int env = from_env();
  return env;
}

void set_num_threads(int n) { g_override.store(std::max(0, n)); }

void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn, std::size_t min_chunk) {
  const std::size_t nt = std::min<std::size_t>(num_threads(), std::max<std::size_t>(1, n / std::max<std::size_t>(1, min_chunk)));
  if (nt <= 1) {
    if (n > 0) fn(0, n);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(nt);
  const std::size_t chunk = (n + nt - 1) / nt;
  for (std::size_t w = 0; w < nt; ++w) {
    const std::size_t b = w * chunk, e = std::min(n, b + chunk);
    if (b >= e) break;
    pool.emplace_back([&, w, b, e] {
      try {
        fn(b, e);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace mmpde
