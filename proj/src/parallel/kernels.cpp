#include "certpoly/parallel/kernels.hpp"

#include <algorithm>
#include <cmath>

#include <omp.h>

#include "certpoly/common/error.hpp"
#include "certpoly/common/rng.hpp"

namespace certpoly::parallel {

void set_threads(int n) {
  if (n > 0) omp_set_num_threads(n);
}

int threads() { return omp_get_max_threads(); }

std::vector<Vec> sample_box(const Vec& lo, const Vec& hi, std::size_t n, std::uint64_t seed) {
  if (lo.size() != hi.size()) throw ShapeError("box bounds differ in size");
  std::vector<Vec> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng(stream_seed(seed, i));
    Vec x(lo.size());
    for (int j = 0; j < lo.size(); ++j) x[j] = lo[j] == hi[j] ? lo[j] : uniform(rng, lo[j], hi[j]);
    out[i] = std::move(x);
  }
  return out;
}

std::vector<Vec> batch_forward(const nn::Network& net, const std::vector<Vec>& inputs, Exec exec) {
  std::vector<Vec> out(inputs.size());
  for_each_index(inputs.size(), exec, [&](std::size_t i) { out[i] = nn::forward_output(net, inputs[i]); });
  return out;
}

MinMax pre_activation_minmax(const nn::Network& net, const std::vector<Vec>& inputs, Exec exec) {
  if (inputs.empty()) throw DomainError("no inputs to take a range over");
  // Chunked so the reduction order (and hence the result) does not depend on threads.
  const std::size_t chunk = 256;
  const std::size_t chunks = (inputs.size() + chunk - 1) / chunk;
  std::vector<MinMax> partial(chunks);
  for_each_index(chunks, exec, [&](std::size_t c) {
    MinMax& m = partial[c];
    for (std::size_t i = c * chunk; i < std::min(inputs.size(), (c + 1) * chunk); ++i) {
      const nn::Trace t = nn::forward(net, inputs[i]);
      if (m.lo.empty()) {
        m.lo = t.pre;
        m.hi = t.pre;
        continue;
      }
      for (std::size_t k = 0; k < t.pre.size(); ++k) {
        m.lo[k] = m.lo[k].cwiseMin(t.pre[k]);
        m.hi[k] = m.hi[k].cwiseMax(t.pre[k]);
      }
    }
  });
  MinMax out = partial.front();
  for (std::size_t c = 1; c < chunks; ++c)
    for (std::size_t k = 0; k < out.lo.size(); ++k) {
      out.lo[k] = out.lo[k].cwiseMin(partial[c].lo[k]);
      out.hi[k] = out.hi[k].cwiseMax(partial[c].hi[k]);
    }
  return out;
}

std::size_t count_range_violations(const nn::Network& net, const std::vector<Vec>& lo, const std::vector<Vec>& hi,
                                   const std::vector<Vec>& inputs, Exec exec, double tol) {
  if (lo.size() != hi.size() || static_cast<int>(lo.size()) > net.num_blocks())
    throw ShapeError("range list does not match the network");
  std::vector<std::size_t> counts(inputs.size(), 0);
  for_each_index(inputs.size(), exec, [&](std::size_t i) {
    const nn::Trace t = nn::forward(net, inputs[i]);
    std::size_t c = 0;
    for (std::size_t k = 0; k < lo.size(); ++k)
      for (int j = 0; j < t.pre[k].size(); ++j) {
        const double z = t.pre[k][j];
        if (!(z >= lo[k][j] - tol && z <= hi[k][j] + tol)) ++c;
      }
    counts[i] = c;
  });
  std::size_t total = 0;
  for (std::size_t c : counts) total += c;
  return total;
}

double max_output_difference(const nn::Network& a, const nn::Network& b, const std::vector<Vec>& inputs, Exec exec) {
  if (a.out_dim() != b.out_dim()) throw ShapeError("networks have different output sizes");
  std::vector<double> worst(inputs.size(), 0.0);
  for_each_index(inputs.size(), exec, [&](std::size_t i) {
    worst[i] = (nn::forward_output(a, inputs[i]) - nn::forward_output(b, inputs[i])).cwiseAbs().maxCoeff();
  });
  return worst.empty() ? 0.0 : *std::max_element(worst.begin(), worst.end());
}

}  // namespace certpoly::parallel
