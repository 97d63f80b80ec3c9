#include <cmath>
#include <cstring>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "reroute/kernels.hpp"
#include "reroute/rng.hpp"

using namespace reroute;

namespace {

std::vector<TokenSeq> random_inputs(std::size_t n) {
  Rng rng(6);
  std::vector<TokenSeq> out(n);
  for (auto& s : out) {
    for (std::uint64_t k = 0; k < 1 + rng.below(20); ++k) s.ids.push_back(static_cast<TokenId>(rng.below(500)));
  }
  return out;
}

double heavy(const TokenSeq& s) {
  double acc = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) acc += std::sin(s.ids[i] * 0.37 + static_cast<double>(i)) / (1.0 + i);
  return std::exp(-acc * acc);
}

}  // namespace

TEST_CASE("parallel evaluation is bitwise identical to the serial reference") {
  const auto inputs = random_inputs(1000);
  const auto serial = kernels::evaluate_serial(heavy, inputs);
  for (int jobs : {0, 2, 4, 7}) {
    const auto par = kernels::evaluate_parallel(heavy, inputs, jobs);
    REQUIRE(par.size() == serial.size());
    CHECK(std::memcmp(par.data(), serial.data(), serial.size() * sizeof(double)) == 0);
  }
  CHECK(kernels::evaluate(heavy, inputs, {1}) == serial);
  CHECK(kernels::evaluate_parallel(heavy, std::vector<TokenSeq>{}).empty());
}

TEST_CASE("for_each_index visits every index once") {
  std::vector<int> hits(257, 0);
  kernels::for_each_index_parallel(hits.size(), [&](std::size_t i) { hits[i] += 1; }, 3);
  for (int h : hits) CHECK(h == 1);
  kernels::for_each_index_serial(hits.size(), [&](std::size_t i) { hits[i] += 1; });
  for (int h : hits) CHECK(h == 2);
  CHECK(kernels::max_threads() >= 1);
}

TEST_CASE("the first failing index is rethrown on the caller") {
  auto body = [](std::size_t i) {
    if (i == 40 || i == 90) throw std::runtime_error("boom " + std::to_string(i));
  };
  for (int jobs : {1, 0, 4}) {
    CAPTURE(jobs);
    try {
      kernels::for_each_index(128, body, {jobs});
      FAIL("expected an exception");
    } catch (const std::runtime_error& e) {
      CHECK(std::string(e.what()) == "boom 40");
    }
  }
  const auto inputs = random_inputs(10);
  CHECK_THROWS_AS(kernels::evaluate_parallel([](const TokenSeq&) -> double { throw std::logic_error("x"); }, inputs),
                  std::logic_error);
}
