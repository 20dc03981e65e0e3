#pragma once

#include <optional>
#include <string>
#include <vector>

#include "certpoly/nn/dataset.hpp"
#include "certpoly/nn/network.hpp"
#include "certpoly/ranges/zonotope.hpp"

namespace certpoly::ranges {

enum class BoundsMethod { Interval, Zonotope, Sampled, Constant };
enum class Domain { Interval, Zonotope };

std::string to_string(BoundsMethod m);

struct LayerBounds {
  Vec lo;
  Vec hi;
};

// Per-block pre-activation bounds (the last entry is the network output when the
// final block has no activation).
struct BoundsReport {
  BoundsMethod method = BoundsMethod::Interval;
  double factor = 1.0;  // widen factor for sampled ranges, c for constant ranges
  std::vector<LayerBounds> layers;
  std::optional<LayerBounds> output_difference;  // bound on f_pi - f, when computed
};

std::string bounds_to_text(const BoundsReport& report);
BoundsReport parse_bounds(const std::string& text);

// The original network with additive perturbations delta in [-eps, eps] after the
// activations of substituted blocks.
class RelaxedNetwork {
 public:
  explicit RelaxedNetwork(nn::Network base);
  const nn::Network& base() const { return base_; }
  void substitute(int block, Vec eps);
  bool substituted(int block) const { return eps_[block].has_value(); }
  const std::optional<Vec>& delta_bounds(int block) const { return eps_[block]; }

 private:
  nn::Network base_;
  std::vector<std::optional<Vec>> eps_;
};

// Layer-by-layer sound propagation. Activation layers of the base network are relaxed
// (plus delta for substituted blocks); polynomial activation layers are relaxed directly.
class Propagator {
 public:
  Propagator(const nn::Network& net, Domain domain, bool parallel = true);

  int block() const { return block_; }
  // Pre-activation bounds of the current block.
  const LayerBounds& pre() const { return pre_; }
  // Apply the current block's activation (if any) with optional extra perturbation,
  // then the next block's linear map.
  void advance(const Vec* eps = nullptr);
  bool done() const { return block_ >= net_->num_blocks(); }

 private:
  void linear_step();
  void activation_step(const Vec* eps);

  const nn::Network* net_;
  Domain domain_;
  bool parallel_;
  int block_ = 0;
  LayerBounds pre_;
  // The interval chain runs in both modes; zonotope bounds are intersected with it.
  LayerBounds interval_pre_;
  LayerBounds box_;
  Zonotope zono_;
};

// Sound enclosure of the pre-activations of block `layer` over the input domain and all
// admissible deltas.
LayerBounds verified_bounds(const RelaxedNetwork& rnet, int layer, Domain domain);
BoundsReport verified_report(const RelaxedNetwork& rnet, Domain domain);
// Bounds of an arbitrary network, polynomial activations included.
BoundsReport verified_report(const nn::Network& net, Domain domain);

// Per-neuron dataset min/max, half-width scaled by widen about the midpoint.
BoundsReport sampled_ranges(const nn::Network& net, const nn::Dataset& data, double widen);
// [-c, c] for every neuron.
BoundsReport constant_ranges(const nn::Network& net, double c);

}  // namespace certpoly::ranges
