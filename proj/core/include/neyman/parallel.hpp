#pragma once

#include <cstddef>
#include <functional>

namespace neyman {

// Worker count used by the library's parallel loops. Results never depend on it.
void set_thread_count(int n);
int thread_count();

// Runs body(k) for k in [0, n_tasks) on thread_count() workers. Exceptions are rethrown
// on the caller (the one from the lowest task index wins).
void parallel_for(std::size_t n_tasks, const std::function<void(std::size_t)>& body);

}  // namespace neyman
