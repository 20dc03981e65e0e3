#pragma once

#include <string>
#include <vector>

#include "certpoly/compiler/circuit.hpp"
#include "certpoly/nn/network.hpp"

namespace certpoly::compiler {

constexpr int kMaxChebyshevDegree = 247;

// Multiplicative depth of a batched Chebyshev evaluation of the given degree
// (3-5 -> 4, 6-13 -> 5, 14-27 -> 6, 28-59 -> 7, 60-119 -> 8, 120-247 -> 9).
int chebyshev_depth(int degree);
// Levels of a chebyshev layer: the table entry plus one for the map onto [-1, 1]; degree 0 is free.
int chebyshev_layer_depth(int degree);
int linear_depth(Encoding input);

int required_depth(const CircuitDesc& circ);
int required_depth(const nn::PolyNetwork& pnet);

struct Profile {
  int q_bits = 30;
  int scale_bits = 40;
};

Profile parse_profile(const std::string& s);  // "30,40" or "45,60"

struct CKKSParams {
  int ring_log2_N = 16;
  int slot_count = 1 << 15;
  std::vector<int> modulus_chain_bits;  // [first, q_1, ..., q_depth]
  int scale_bits = 40;
  int depth = 0;
  int dnum = 2;
  int aux_bits = 0;  // P

  int levels() const { return static_cast<int>(modulus_chain_bits.size()) - 1; }
  // log2 of q_0 * ... * q_level.
  int modulus_bits(int level) const;
  int total_bits() const { return modulus_bits(levels()) + aux_bits; }
  void validate() const;
};

// Security caps on log2(QP) for N = 2^15, 2^16, 2^17.
int security_cap_bits(int ring_log2_N);
CKKSParams select_params(int depth, int slots_needed, const Profile& profile);

std::string params_to_text(const CKKSParams& p);
CKKSParams parse_params(const std::string& text);

// Padded square dimension for a network: next power of two of its widest layer.
int circuit_dim(const nn::Network& net);
CircuitDesc compile(const nn::PolyNetwork& pnet, const CKKSParams& params);

LinearTuple pack_linear(const nn::Dense& d, int n, Encoding input);
nn::Dense unpack_linear(const LinearTuple& t, Encoding input);
ConvTuple pack_conv(const nn::Conv2D& c);
nn::Conv2D unpack_conv(const ConvTuple& t);

}  // namespace certpoly::compiler
