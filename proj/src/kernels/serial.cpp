#include "reroute/kernels.hpp"

namespace reroute::kernels {

std::vector<double> evaluate_serial(const SeqFn& fn, std::span<const TokenSeq> inputs) {
  std::vector<double> out(inputs.size());
  for (std::size_t i = 0; i < inputs.size(); ++i) out[i] = fn(inputs[i]);
  return out;
}

void for_each_index_serial(std::size_t n, const std::function<void(std::size_t)>& body) {
  for (std::size_t i = 0; i < n; ++i) body(i);
}

}  // namespace reroute::kernels
