#pragma once

#include <optional>
#include <vector>

#include "certpoly/compiler/circuit.hpp"
#include "certpoly/sim/ckks.hpp"

namespace certpoly::sim {

// Expanded input, column-wise weights, repeated bias -> repeated output; one level.
SimCiphertext eval_linear_expanded(const SimCiphertext& ct, const std::vector<double>& w, const std::vector<double>& b,
                                   int n, SimContext& ctx);
// Repeated input, row-wise weights, expanded bias -> expanded output; two levels.
SimCiphertext eval_linear_repeated(const SimCiphertext& ct, const std::vector<double>& w, const std::vector<double>& b,
                                   int n, SimContext& ctx);
std::vector<double> replication_mask(int n);

struct ChebBatchResult {
  SimCiphertext ct;
  int nonscalar_mults = 0;
  int levels = 0;
};

// coeffs[k][s] is the T_k coefficient of slot s; [lo[s], hi[s]] is mapped onto [-1, 1].
// Consumes exactly chebyshev_layer_depth(degree) levels.
ChebBatchResult eval_chebyshev_batch(const SimCiphertext& ct, const std::vector<std::vector<double>>& coeffs,
                                     const std::vector<double>& lo, const std::vector<double>& hi, int degree,
                                     SimContext& ctx);

// Baby-step size 2^a and number of giant steps l used for a degree.
struct PsPlan {
  int baby_log2 = 0;
  int giant = 0;
  int predicted_mults = 0;
};
PsPlan ps_plan(int degree);

// Expanded / repeated layouts of a length-<=n vector in n*n slots, and their inverses.
std::vector<double> expand(const std::vector<double>& v, int n);
std::vector<double> repeat(const std::vector<double>& v, int n);
std::vector<double> collapse(const std::vector<double>& slots, int n, int width, compiler::Encoding enc);

struct RunResult {
  std::optional<std::vector<double>> output;  // nullopt is the failure value
  std::optional<FailureValue> failure;
  int levels_consumed = 0;
  int nonscalar_mults = 0;
  int ops = 0;
};

// Throws DepthExhausted when the chain is too short for the circuit (distinct from failure).
RunResult run_circuit(const compiler::CircuitDesc& circ, const std::vector<double>& x, SimContext& ctx);

enum class ChainFit {
  FirstModulus,  // shrink only the first modulus
  PerLevel,      // every modulus as small as possible (at least one bit each)
};

// Smallest chain under which every calibration input runs without wraparound in
// noise-free quantized arithmetic.
CKKSParams minimal_chain(const compiler::CircuitDesc& circ, const CKKSParams& params,
                         const std::vector<std::vector<double>>& calibration, ChainFit fit = ChainFit::PerLevel);

}  // namespace certpoly::sim
