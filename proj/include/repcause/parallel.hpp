#pragma once

#include <exception>

namespace repcause {

// Worker cap for every OpenMP kernel in the library. 1 is the reference
// serial mode; results are identical for any value.
void set_num_threads(int threads);
int num_threads();

// Resolves an explicit request, then REPCAUSE_THREADS, then 1.
int resolve_threads(int requested);

class ScopedThreads {
 public:
  explicit ScopedThreads(int threads) : previous_(num_threads()) { set_num_threads(threads); }
  ~ScopedThreads() { set_num_threads(previous_); }
  ScopedThreads(const ScopedThreads&) = delete;
  ScopedThreads& operator=(const ScopedThreads&) = delete;

 private:
  int previous_;
};

// Runs body(i) for i in [0, count) on up to num_threads() workers. Each
// index must write only its own output slot. The first exception thrown
// by any iteration is rethrown on the calling thread.
template <typename Body>
void parallel_for(int count, Body&& body) {
  std::exception_ptr error;
#pragma omp parallel for schedule(dynamic) num_threads(num_threads())
  for (int i = 0; i < count; ++i) {
    try {
      body(i);
    } catch (...) {
#pragma omp critical(repcause_parallel_error)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace repcause
