#pragma once

#include <cstddef>
#include <functional>

namespace srckt {

// Process-wide worker count used by every parallel loop. Results never depend
// on it: loops write into per-index slots and reductions run in index order.
void set_workers(int n);
int workers();

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

} // namespace srckt
