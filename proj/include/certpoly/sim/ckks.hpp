#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "certpoly/common/rng.hpp"
#include "certpoly/compiler/compiler.hpp"

namespace certpoly::sim {

using compiler::CKKSParams;

// Quantized: values are rounded to the 2^-scale grid on encoding and after every rescale.
// Exact: no rounding; levels and wraparound are still tracked.
enum class Arithmetic { Quantized, Exact };

struct NoiseModel {
  bool enabled = false;
  double std_bits = 0.0;  // per-op gaussian noise of std 2^(std_bits - scale_bits)
};

struct FailureValue {
  int first_failing_op = -1;
  int layer = -1;
};

struct OpRecord {
  int index = 0;
  std::string op;
  int layer = -1;
  int level = 0;
  double scale_bits = 0.0;
  double max_abs_log2 = 0.0;  // log2 max |value * scale|
  int modulus_bits = 0;
  bool wrapped = false;
};

// Slots hold decoded real values; the vector length is the batch size (a power of two
// dividing slot_count), and rotations are cyclic over it.
struct SimCiphertext {
  std::vector<double> slots;
  double scale_bits = 0.0;
  int level = 0;
  bool corrupted = false;
  double max_abs_log2 = -INFINITY;
};

class SimContext {
 public:
  SimContext(CKKSParams params, NoiseModel noise = {}, std::uint64_t seed = 0,
             Arithmetic arithmetic = Arithmetic::Quantized);

  const CKKSParams& params() const { return params_; }
  Arithmetic arithmetic() const { return arithmetic_; }
  const NoiseModel& noise() const { return noise_; }

  void set_layer(int layer) { layer_ = layer; }
  void set_logging(bool on) { logging_ = on; }
  const std::vector<OpRecord>& log() const { return log_; }
  const std::optional<FailureValue>& failure() const { return failure_; }
  int op_count() const { return ops_; }
  int nonscalar_mults() const { return nonscalar_; }
  void reset_counters();

  // Encoding, rounding, noise and wraparound bookkeeping shared by all ops.
  std::vector<double> quantize(std::vector<double> v) const;
  void finish(SimCiphertext& ct, const char* op, double check_scale_bits, int check_level);
  void count_nonscalar() { ++nonscalar_; }

 private:
  CKKSParams params_;
  NoiseModel noise_;
  Arithmetic arithmetic_;
  Rng rng_;
  int layer_ = -1;
  int ops_ = 0;
  int nonscalar_ = 0;
  bool logging_ = false;
  std::vector<OpRecord> log_;
  std::optional<FailureValue> failure_;
};

// Zero-pads x to `batch` slots (default: slot_count) at the top level.
SimCiphertext encode_input(const std::vector<double>& x, SimContext& ctx, int batch = 0);
// Slot values, or nullopt (failure) if the ciphertext is corrupted.
std::optional<std::vector<double>> decrypt(const SimCiphertext& ct);

SimCiphertext add(const SimCiphertext& a, const SimCiphertext& b, SimContext& ctx);
SimCiphertext sub(const SimCiphertext& a, const SimCiphertext& b, SimContext& ctx);
SimCiphertext add_plain(const SimCiphertext& a, const std::vector<double>& p, SimContext& ctx);
SimCiphertext add_const(const SimCiphertext& a, double c, SimContext& ctx);
// Ciphertext-ciphertext product followed by a rescale; consumes one level.
SimCiphertext mult(const SimCiphertext& a, const SimCiphertext& b, SimContext& ctx);
// Slotwise plaintext product followed by a rescale; consumes one level.
SimCiphertext mult_plain(const SimCiphertext& a, const std::vector<double>& p, SimContext& ctx);
// Integer scalar product; no level.
SimCiphertext mult_int(const SimCiphertext& a, long k, SimContext& ctx);
// Cyclic left shift: out[i] = a[(i + k) mod batch].
SimCiphertext rotate(const SimCiphertext& a, long k, SimContext& ctx);
SimCiphertext drop_to_level(const SimCiphertext& a, int level, SimContext& ctx);

}  // namespace certpoly::sim
