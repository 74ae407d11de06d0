// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace cergo {

/// Splits [0, count) into `workers` contiguous chunks and runs
/// `body(chunk_index, begin, end)` on each, one thread per chunk.  Callers
/// reduce per-chunk results in chunk order, so the outcome does not depend
/// on scheduling.  The first exception thrown by any chunk is rethrown.
template <typename Body>
void for_each_chunk(std::size_t count, std::size_t workers, Body&& body) {
  workers = std::max<std::size_t>(1, std::min(workers, count));
  if (workers == 1) {
    body(std::size_t{0}, std::size_t{0}, count);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  {
    std::vector<std::jthread> threads;
    threads.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      std::size_t const begin = count * w / workers;
      std::size_t const end = count * (w + 1) / workers;
      threads.emplace_back([&, w, begin, end] {
        try {
          body(w, begin, end);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors) {
    if (e) {
      std::rethrow_exception(e);
    }
  }
}

}  // namespace cergo
