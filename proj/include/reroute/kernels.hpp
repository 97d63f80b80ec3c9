#pragma once

#include <functional>
#include <span>
#include <vector>

#include "reroute/textcore.hpp"

// Data-parallel evaluation kernels. Each kernel has a serial reference
// implementation and an OpenMP one; both write result i from input i only,
// so their outputs are bitwise identical for a pure callback.
namespace reroute::kernels {

using SeqFn = std::function<double(const TokenSeq&)>;

struct Exec {
  // 1 = serial reference, 0 = OpenMP default team size, n > 1 = at most n threads.
  int jobs = 0;
};

std::vector<double> evaluate_serial(const SeqFn& fn, std::span<const TokenSeq> inputs);
std::vector<double> evaluate_parallel(const SeqFn& fn, std::span<const TokenSeq> inputs,
                                      int jobs = 0);

inline std::vector<double> evaluate(const SeqFn& fn, std::span<const TokenSeq> inputs,
                                    Exec exec = {}) {
  return exec.jobs == 1 ? evaluate_serial(fn, inputs) : evaluate_parallel(fn, inputs, exec.jobs);
}

// Runs body(i) for i in [0, n). Exceptions thrown by any iteration are
// rethrown on the calling thread after the loop (the first one, by index).
void for_each_index_serial(std::size_t n, const std::function<void(std::size_t)>& body);
void for_each_index_parallel(std::size_t n, const std::function<void(std::size_t)>& body,
                             int jobs = 0);

inline void for_each_index(std::size_t n, const std::function<void(std::size_t)>& body,
                           Exec exec = {}) {
  if (exec.jobs == 1) {
    for_each_index_serial(n, body);
  } else {
    for_each_index_parallel(n, body, exec.jobs);
  }
}

int max_threads();

}  // namespace reroute::kernels
