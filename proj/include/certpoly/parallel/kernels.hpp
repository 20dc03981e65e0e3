#pragma once

#include <cstdint>
#include <exception>
#include <mutex>
#include <vector>

#include "certpoly/nn/network.hpp"

namespace certpoly::parallel {

using nn::Vec;

enum class Exec { Serial, Parallel };

void set_threads(int n);
int threads();

// Runs f(i) for i in [0, n). Exceptions from any iteration are rethrown after the loop;
// with several failures the lowest index wins, so both modes report the same error.
template <class F>
void for_each_index(std::size_t n, Exec exec, F&& f) {
  if (exec == Exec::Serial || n < 2) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::exception_ptr first;
  std::size_t first_index = n;
  std::mutex m;
  const long long count = static_cast<long long>(n);
#pragma omp parallel for schedule(dynamic)
  for (long long i = 0; i < count; ++i) {
    try {
      f(static_cast<std::size_t>(i));
    } catch (...) {
      std::lock_guard<std::mutex> lock(m);
      if (static_cast<std::size_t>(i) < first_index) {
        first_index = static_cast<std::size_t>(i);
        first = std::current_exception();
      }
    }
  }
  if (first) std::rethrow_exception(first);
}

// n points uniform in the box; point i depends only on (seed, i).
std::vector<Vec> sample_box(const Vec& lo, const Vec& hi, std::size_t n, std::uint64_t seed);

std::vector<Vec> batch_forward(const nn::Network& net, const std::vector<Vec>& inputs, Exec exec);

struct MinMax {
  std::vector<Vec> lo;  // per block
  std::vector<Vec> hi;
};

// Elementwise min and max of every block's pre-activations over the inputs.
MinMax pre_activation_minmax(const nn::Network& net, const std::vector<Vec>& inputs, Exec exec);

// Number of (input, block, neuron) triples whose pre-activation leaves [lo - tol, hi + tol].
std::size_t count_range_violations(const nn::Network& net, const std::vector<Vec>& lo, const std::vector<Vec>& hi,
                                   const std::vector<Vec>& inputs, Exec exec, double tol = 0.0);

// max over inputs and outputs of |a(x) - b(x)|.
double max_output_difference(const nn::Network& a, const nn::Network& b, const std::vector<Vec>& inputs, Exec exec);

}  // namespace certpoly::parallel
