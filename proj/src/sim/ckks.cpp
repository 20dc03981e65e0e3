#include "certpoly/sim/ckks.hpp"

#include <algorithm>
#include <cmath>

#include "certpoly/common/error.hpp"

namespace certpoly::sim {

SimContext::SimContext(CKKSParams params, NoiseModel noise, std::uint64_t seed, Arithmetic arithmetic)
    : params_(std::move(params)), noise_(noise), arithmetic_(arithmetic), rng_(seed) {
  params_.validate();
}

void SimContext::reset_counters() {
  ops_ = 0;
  nonscalar_ = 0;
  log_.clear();
  failure_.reset();
}

std::vector<double> SimContext::quantize(std::vector<double> v) const {
  if (arithmetic_ == Arithmetic::Exact) return v;
  const double s = std::ldexp(1.0, params_.scale_bits);
  for (double& x : v) x = std::nearbyint(x * s) / s;
  return v;
}

void SimContext::finish(SimCiphertext& ct, const char* op, double check_scale_bits, int check_level) {
  if (noise_.enabled) {
    std::normal_distribution<double> g(0.0, std::exp2(noise_.std_bits - params_.scale_bits));
    for (double& x : ct.slots) x += g(rng_);
  }
  double m = 0.0;
  bool finite = true;
  for (double x : ct.slots) {
    if (!std::isfinite(x)) finite = false;
    m = std::max(m, std::fabs(x));
  }
  const int qbits = params_.modulus_bits(check_level);
  ct.max_abs_log2 = finite ? (m > 0.0 ? std::log2(m) + check_scale_bits : -INFINITY) : INFINITY;
  const bool wrap = ct.max_abs_log2 >= qbits - 1;
  if (wrap) {
    // Centred reduction modulo Q_l, expressed in value units at the check scale.
    const double mod = std::exp2(qbits - check_scale_bits);
    for (double& x : ct.slots) x = std::isfinite(x) ? std::remainder(x, mod) : 0.0;
    if (!ct.corrupted && !failure_) failure_ = FailureValue{ops_, layer_};
    ct.corrupted = true;
  }
  if (logging_) log_.push_back(OpRecord{ops_, op, layer_, ct.level, ct.scale_bits, ct.max_abs_log2, qbits, wrap});
  ++ops_;
}

namespace {

void same_batch(const SimCiphertext& a, std::size_t n) {
  if (a.slots.size() != n) throw ShapeError("operand batch sizes differ");
}

SimCiphertext aligned(const SimCiphertext& a, int level) {
  SimCiphertext c = a;
  c.level = std::min(a.level, level);
  return c;
}

// Product at doubled scale, checked against Q_l, then rescaled back to the base scale.
SimCiphertext rescale_product(SimCiphertext c, const char* op, SimContext& ctx) {
  if (c.level < 1) throw DepthExhausted(std::string(op) + " at level 0: depth exhausted");
  const double base = ctx.params().scale_bits;
  c.scale_bits = 2.0 * base;
  ctx.finish(c, op, c.scale_bits, c.level);
  c.level -= 1;
  c.scale_bits = base;
  c.slots = ctx.quantize(std::move(c.slots));
  ctx.finish(c, "rescale", c.scale_bits, c.level);
  return c;
}

}  // namespace

SimCiphertext encode_input(const std::vector<double>& x, SimContext& ctx, int batch) {
  const int slots = ctx.params().slot_count;
  if (batch == 0) batch = slots;
  if (batch < 1 || (batch & (batch - 1)) != 0 || batch > slots || slots % batch != 0)
    throw ShapeError("batch size must be a power of two no larger than the slot count");
  if (static_cast<int>(x.size()) > batch) throw ShapeError("input has more values than slots");
  SimCiphertext ct;
  ct.slots.assign(batch, 0.0);
  std::copy(x.begin(), x.end(), ct.slots.begin());
  ct.slots = ctx.quantize(std::move(ct.slots));
  ct.scale_bits = ctx.params().scale_bits;
  ct.level = ctx.params().levels();
  ctx.finish(ct, "encode", ct.scale_bits, ct.level);
  return ct;
}

std::optional<std::vector<double>> decrypt(const SimCiphertext& ct) {
  if (ct.corrupted) return std::nullopt;
  return ct.slots;
}

SimCiphertext add(const SimCiphertext& a, const SimCiphertext& b, SimContext& ctx) {
  same_batch(a, b.slots.size());
  SimCiphertext c = aligned(a, b.level);
  c.corrupted = a.corrupted || b.corrupted;
  for (std::size_t i = 0; i < c.slots.size(); ++i) c.slots[i] += b.slots[i];
  ctx.finish(c, "add", c.scale_bits, c.level);
  return c;
}

SimCiphertext sub(const SimCiphertext& a, const SimCiphertext& b, SimContext& ctx) {
  same_batch(a, b.slots.size());
  SimCiphertext c = aligned(a, b.level);
  c.corrupted = a.corrupted || b.corrupted;
  for (std::size_t i = 0; i < c.slots.size(); ++i) c.slots[i] -= b.slots[i];
  ctx.finish(c, "sub", c.scale_bits, c.level);
  return c;
}

SimCiphertext add_plain(const SimCiphertext& a, const std::vector<double>& p, SimContext& ctx) {
  same_batch(a, p.size());
  SimCiphertext c = a;
  const std::vector<double> q = ctx.quantize(p);
  for (std::size_t i = 0; i < c.slots.size(); ++i) c.slots[i] += q[i];
  ctx.finish(c, "add_plain", c.scale_bits, c.level);
  return c;
}

SimCiphertext add_const(const SimCiphertext& a, double k, SimContext& ctx) {
  SimCiphertext c = a;
  const double q = ctx.quantize({k}).front();
  for (double& x : c.slots) x += q;
  ctx.finish(c, "add_const", c.scale_bits, c.level);
  return c;
}

SimCiphertext mult(const SimCiphertext& a, const SimCiphertext& b, SimContext& ctx) {
  same_batch(a, b.slots.size());
  SimCiphertext c = aligned(a, b.level);
  c.corrupted = a.corrupted || b.corrupted;
  for (std::size_t i = 0; i < c.slots.size(); ++i) c.slots[i] *= b.slots[i];
  ctx.count_nonscalar();
  return rescale_product(std::move(c), "mult", ctx);
}

SimCiphertext mult_plain(const SimCiphertext& a, const std::vector<double>& p, SimContext& ctx) {
  same_batch(a, p.size());
  SimCiphertext c = a;
  const std::vector<double> q = ctx.quantize(p);
  for (std::size_t i = 0; i < c.slots.size(); ++i) c.slots[i] *= q[i];
  return rescale_product(std::move(c), "mult_plain", ctx);
}

SimCiphertext mult_int(const SimCiphertext& a, long k, SimContext& ctx) {
  SimCiphertext c = a;
  for (double& x : c.slots) x *= static_cast<double>(k);
  ctx.finish(c, "mult_int", c.scale_bits, c.level);
  return c;
}

SimCiphertext rotate(const SimCiphertext& a, long k, SimContext& ctx) {
  const long n = static_cast<long>(a.slots.size());
  SimCiphertext c = a;
  const long s = ((k % n) + n) % n;
  std::rotate_copy(a.slots.begin(), a.slots.begin() + s, a.slots.end(), c.slots.begin());
  ctx.finish(c, "rotate", c.scale_bits, c.level);
  return c;
}

SimCiphertext drop_to_level(const SimCiphertext& a, int level, SimContext& ctx) {
  if (level > a.level) throw DomainError("cannot raise a ciphertext level");
  if (level < 0) throw DepthExhausted("level drop below 0: depth exhausted");
  SimCiphertext c = a;
  c.level = level;
  ctx.finish(c, "drop_level", c.scale_bits, c.level);
  return c;
}

}  // namespace certpoly::sim
