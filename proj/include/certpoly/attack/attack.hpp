#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "certpoly/nn/dataset.hpp"
#include "certpoly/nn/network.hpp"
#include "certpoly/parallel/kernels.hpp"
#include "certpoly/ranges/bounds.hpp"

namespace certpoly::attack {

using nn::Vec;

struct PerturbationSpec {
  double linf_eps = 0.0;          // additive box on every input
  double rotate_deg = 0.0;        // images only
  double translate_frac = 0.0;    // images only, fraction of the image side
  double per_feature_frac = 0.0;  // additive box of this fraction of each feature's domain width
  bool discretize = false;        // round to a 1/255 grid of the domain (straight-through gradient)
  int steps = 40;
  double step_size = 0.0;  // 0: budget / steps * 2.5 for every component
  int restarts = 3;

  void validate(bool image_input) const;
  bool empty() const {
    return linf_eps == 0.0 && rotate_deg == 0.0 && translate_frac == 0.0 && per_feature_frac == 0.0;
  }
};

struct Violation {
  int layer = 0;  // block index
  int neuron = 0;
  double margin = 0.0;  // distance outside the designed interval
};

// sum_j |z_j(x) - (l_j + u_j) / 2| with z the block-`layer` pre-activations of net.
double overflow_objective(const nn::Network& net, const ranges::BoundsReport& bounds, int layer, const Vec& x);

// First pre-activation outside its designed range, layer-major then neuron-ascending.
std::optional<Violation> check_overflow(const nn::PolyNetwork& pnet, const Vec& x);

struct AttackResult {
  bool success = false;
  std::optional<Violation> violation;
  Vec input;
  std::vector<double> objective_trace;
  int target_layer = -1;
};

// PGD against the designed ranges of pnet using gradients of the original net.
// target_layer < 0 tries every activation block deepest-first until one succeeds.
AttackResult pgd_attack(const nn::Network& net, const nn::PolyNetwork& pnet, const Vec& x0, const PerturbationSpec& spec,
                        int target_layer = -1, std::uint64_t seed = 0);

struct CampaignRow {
  std::size_t index = 0;
  AttackResult sampled;
  AttackResult certified;
};

struct CampaignReport {
  std::vector<CampaignRow> rows;
  double success_rate_sampled = 0.0;
  double success_rate_certified = 0.0;
};

CampaignReport attack_campaign(const nn::Network& net, const nn::PolyNetwork& pnet_sampled,
                               const nn::PolyNetwork& pnet_certified, const nn::Dataset& data,
                               const PerturbationSpec& spec, std::uint64_t seed,
                               parallel::Exec exec = parallel::Exec::Parallel);

std::string campaign_to_csv(const CampaignReport& report);

}  // namespace certpoly::attack
