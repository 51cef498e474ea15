#pragma once

#include <cstddef>
#include <functional>

namespace iml {

// Caps the number of worker threads used by parallel_for. 0 restores the
// default (hardware concurrency). Results never depend on this value.
void set_max_threads(unsigned threads);
unsigned max_threads();

// Runs body(i) for i in [0, count). Work units must write to disjoint
// outputs. The first exception thrown by any unit is rethrown.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace iml
