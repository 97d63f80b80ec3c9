#include <exception>

#include "reroute/kernels.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace reroute::kernels {

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void for_each_index_parallel(std::size_t n, const std::function<void(std::size_t)>& body,
                             int jobs) {
  const int threads = jobs > 0 ? jobs : max_threads();
  std::vector<std::exception_ptr> errors(n);
  const auto count = static_cast<long long>(n);
#pragma omp parallel for schedule(dynamic) num_threads(threads)
  for (long long i = 0; i < count; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::vector<double> evaluate_parallel(const SeqFn& fn, std::span<const TokenSeq> inputs,
                                      int jobs) {
  std::vector<double> out(inputs.size());
  for_each_index_parallel(
      inputs.size(), [&](std::size_t i) { out[i] = fn(inputs[i]); }, jobs);
  return out;
}

}  // namespace reroute::kernels
