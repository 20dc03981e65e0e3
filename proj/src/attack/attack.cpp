#include "certpoly/attack/attack.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "certpoly/attack/warp.hpp"
#include "certpoly/common/error.hpp"
#include "certpoly/common/rng.hpp"

namespace certpoly::attack {

void PerturbationSpec::validate(bool image_input) const {
  for (double b : {linf_eps, rotate_deg, translate_frac, per_feature_frac})
    if (!(b >= 0.0) || !std::isfinite(b)) throw DomainError("perturbation budgets must be finite and >= 0");
  if (steps < 0 || restarts < 1) throw DomainError("attack needs steps >= 0 and restarts >= 1");
  if (!(step_size >= 0.0)) throw DomainError("step size must be >= 0");
  if (!image_input && (rotate_deg > 0.0 || translate_frac > 0.0))
    throw DomainError("rotation and translation budgets need an image-shaped input");
}

double overflow_objective(const nn::Network& net, const ranges::BoundsReport& bounds, int layer, const Vec& x) {
  if (layer < 0 || layer >= static_cast<int>(bounds.layers.size())) throw ShapeError("objective layer has no bounds");
  const Vec z = nn::forward_pre(net, x, layer);
  const Vec c = 0.5 * (bounds.layers[layer].lo + bounds.layers[layer].hi);
  return (z - c).cwiseAbs().sum();
}

std::optional<Violation> check_overflow(const nn::PolyNetwork& pnet, const Vec& x) {
  const nn::Trace t = nn::forward(pnet, x);
  for (int k = 0; k < pnet.num_blocks(); ++k) {
    if (!pnet.has_activation(k)) continue;
    const Vec lo = pnet.designed_lo(k), hi = pnet.designed_hi(k);
    for (int j = 0; j < lo.size(); ++j) {
      const double z = t.pre[k][j];
      if (z < lo[j] || z > hi[j] || !std::isfinite(z)) return Violation{k, j, std::max(lo[j] - z, z - hi[j])};
    }
  }
  return std::nullopt;
}

namespace {

struct State {
  Vec delta;
  WarpParams warp;
};

class Perturber {
 public:
  Perturber(const nn::Network& net, const Vec& x0, const PerturbationSpec& spec)
      : net_(net), x0_(x0), spec_(spec), lo_(net.input_lo()), hi_(net.input_hi()) {
    box_ = Vec(x0.size());
    for (int i = 0; i < x0.size(); ++i) box_[i] = std::max(spec.linf_eps, spec.per_feature_frac * (hi_[i] - lo_[i]));
    if (net.input_shape()) {
      shape_ = *net.input_shape();
      max_shift_ = spec.translate_frac * std::max(shape_.width, shape_.height);
    }
    const double k = spec.steps > 0 ? 2.5 / spec.steps : 0.0;
    step_box_ = box_ * (spec.step_size > 0.0 ? spec.step_size / std::max(1e-300, box_.maxCoeff()) : k);
    step_angle_ = spec.step_size > 0.0 ? spec.step_size : spec.rotate_deg * k;
    step_shift_ = spec.step_size > 0.0 ? spec.step_size : max_shift_ * k;
  }

  bool image() const { return net_.input_shape().has_value(); }

  // gamma(x0, state): warp, add delta, clip to the domain, optionally discretize.
  Vec apply(const State& s) const {
    Vec x = x0_;
    if (image() && (s.warp.angle_deg != 0.0 || s.warp.shift_x != 0.0 || s.warp.shift_y != 0.0))
      x = warp(x0_, shape_, s.warp, lo_);
    x += s.delta;
    x = x.cwiseMax(lo_).cwiseMin(hi_);
    if (spec_.discretize)
      for (int i = 0; i < x.size(); ++i) {
        const double step = (hi_[i] - lo_[i]) / 255.0;
        if (step > 0.0) x[i] = std::clamp(lo_[i] + std::round((x[i] - lo_[i]) / step) * step, lo_[i], hi_[i]);
      }
    return x;
  }

  void project(State& s) const {
    s.delta = s.delta.cwiseMax(-box_).cwiseMin(box_);
    s.warp.angle_deg = std::clamp(s.warp.angle_deg, -spec_.rotate_deg, spec_.rotate_deg);
    s.warp.shift_x = std::clamp(s.warp.shift_x, -max_shift_, max_shift_);
    s.warp.shift_y = std::clamp(s.warp.shift_y, -max_shift_, max_shift_);
  }

  State random_start(Rng& rng) const {
    State s{Vec(x0_.size()), {}};
    for (int i = 0; i < s.delta.size(); ++i) s.delta[i] = box_[i] > 0.0 ? uniform(rng, -box_[i], box_[i]) : 0.0;
    if (spec_.rotate_deg > 0.0) s.warp.angle_deg = uniform(rng, -spec_.rotate_deg, spec_.rotate_deg);
    if (max_shift_ > 0.0) {
      s.warp.shift_x = uniform(rng, -max_shift_, max_shift_);
      s.warp.shift_y = uniform(rng, -max_shift_, max_shift_);
    }
    return s;
  }

  // One signed-gradient ascent step; the gradient is taken at the (discretized) input,
  // passing straight through rounding and clipping.
  void step(State& s, const Vec& grad_x) const {
    for (int i = 0; i < s.delta.size(); ++i)
      if (grad_x[i] != 0.0) s.delta[i] += step_box_[i] * (grad_x[i] > 0.0 ? 1.0 : -1.0);
    if (image() && (spec_.rotate_deg > 0.0 || max_shift_ > 0.0)) {
      const WarpGradient wg = warp_gradient(x0_, shape_, s.warp, lo_, grad_x);
      auto sgn = [](double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); };
      if (spec_.rotate_deg > 0.0) s.warp.angle_deg += step_angle_ * sgn(wg.angle_deg);
      if (max_shift_ > 0.0) {
        s.warp.shift_x += step_shift_ * sgn(wg.shift_x);
        s.warp.shift_y += step_shift_ * sgn(wg.shift_y);
      }
    }
    project(s);
  }

 private:
  const nn::Network& net_;
  Vec x0_;
  const PerturbationSpec& spec_;
  Vec lo_, hi_, box_, step_box_;
  nn::InputShape shape_;
  double max_shift_ = 0.0;
  double step_angle_ = 0.0;
  double step_shift_ = 0.0;
};

ranges::BoundsReport designed_report(const nn::PolyNetwork& pnet) {
  ranges::BoundsReport r;
  for (int k = 0; k < pnet.num_blocks(); ++k) {
    if (pnet.has_activation(k))
      r.layers.push_back({pnet.designed_lo(k), pnet.designed_hi(k)});
    else
      r.layers.push_back({Vec::Zero(pnet.blocks()[k].out_dim), Vec::Zero(pnet.blocks()[k].out_dim)});
  }
  return r;
}

// Every restart runs all steps; the violating iterate with the largest objective wins,
// and a successful restart ends the search.
AttackResult attack_layer(const nn::Network& net, const nn::PolyNetwork& pnet, const Vec& x0,
                          const PerturbationSpec& spec, const ranges::BoundsReport& centres, int layer,
                          std::uint64_t seed) {
  const Perturber pert(net, x0, spec);
  const Vec c = 0.5 * (centres.layers[layer].lo + centres.layers[layer].hi);
  AttackResult best;
  best.target_layer = layer;
  best.input = pert.apply(State{Vec::Zero(x0.size()), {}});
  double best_obj = -1.0;
  for (int r = 0; r < spec.restarts; ++r) {
    Rng rng(stream_seed(seed, static_cast<std::uint64_t>(r)));
    State s = r == 0 ? State{Vec::Zero(x0.size()), {}} : pert.random_start(rng);
    std::vector<double> trace;
    for (int it = 0;; ++it) {
      const Vec x = pert.apply(s);
      const Vec z = nn::forward_pre(net, x, layer);
      const double obj = (z - c).cwiseAbs().sum();
      trace.push_back(obj);
      const auto v = check_overflow(pnet, x);
      const bool better = v ? (!best.success || obj > best_obj) : (!best.success && obj > best_obj);
      if (better) {
        best_obj = obj;
        best.success = v.has_value();
        best.violation = v;
        best.input = x;
      }
      if (it >= spec.steps || spec.empty()) break;
      const Vec sign = (z - c).unaryExpr([](double e) { return e > 0.0 ? 1.0 : (e < 0.0 ? -1.0 : 0.0); });
      pert.step(s, nn::grad_input(net, x, layer, sign));
    }
    if (best.success || r == 0) best.objective_trace = trace;
    if (best.success || spec.empty()) break;
  }
  return best;
}

}  // namespace

AttackResult pgd_attack(const nn::Network& net, const nn::PolyNetwork& pnet, const Vec& x0, const PerturbationSpec& spec,
                        int target_layer, std::uint64_t seed) {
  spec.validate(net.input_shape().has_value());
  if (net.num_blocks() != pnet.num_blocks() || net.in_dim() != pnet.in_dim())
    throw ShapeError("attack: network and polynomial network differ in architecture");
  if (!net.in_domain(x0)) throw DomainError("attack start point lies outside the input domain");
  const ranges::BoundsReport centres = designed_report(pnet);
  std::vector<int> layers;
  if (target_layer >= 0) {
    if (target_layer >= net.num_blocks() || !pnet.has_activation(target_layer))
      throw ShapeError("attack target block has no designed range");
    layers.push_back(target_layer);
  } else {
    for (int k = net.num_blocks() - 1; k >= 0; --k)
      if (pnet.has_activation(k)) layers.push_back(k);
  }
  AttackResult last;
  last.input = x0;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    last = attack_layer(net, pnet, x0, spec, centres, layers[i], stream_seed(seed, i));
    if (last.success) return last;
  }
  return last;
}

CampaignReport attack_campaign(const nn::Network& net, const nn::PolyNetwork& pnet_sampled,
                               const nn::PolyNetwork& pnet_certified, const nn::Dataset& data,
                               const PerturbationSpec& spec, std::uint64_t seed, parallel::Exec exec) {
  CampaignReport rep;
  rep.rows.resize(data.rows.size());
  parallel::for_each_index(data.rows.size(), exec, [&](std::size_t i) {
    const std::uint64_t s = stream_seed(seed, i);
    rep.rows[i].index = i;
    rep.rows[i].sampled = pgd_attack(net, pnet_sampled, data.rows[i], spec, -1, s);
    rep.rows[i].certified = pgd_attack(net, pnet_certified, data.rows[i], spec, -1, s);
  });
  std::size_t a = 0, b = 0;
  for (const CampaignRow& r : rep.rows) {
    a += r.sampled.success;
    b += r.certified.success;
  }
  if (!rep.rows.empty()) {
    rep.success_rate_sampled = static_cast<double>(a) / rep.rows.size();
    rep.success_rate_certified = static_cast<double>(b) / rep.rows.size();
  }
  return rep;
}

std::string campaign_to_csv(const CampaignReport& report) {
  std::ostringstream os;
  os.precision(17);
  os << "row,design,success,layer,neuron,margin\n";
  for (const CampaignRow& r : report.rows)
    for (int d = 0; d < 2; ++d) {
      const AttackResult& a = d == 0 ? r.sampled : r.certified;
      os << r.index << ',' << (d == 0 ? "sampled" : "certified") << ',' << (a.success ? 1 : 0) << ',';
      if (a.violation)
        os << a.violation->layer << ',' << a.violation->neuron << ',' << a.violation->margin;
      else
        os << ",,";
      os << '\n';
    }
  os << "summary,sampled,," << ",," << report.success_rate_sampled << '\n';
  os << "summary,certified,," << ",," << report.success_rate_certified << '\n';
  return os.str();
}

}  // namespace certpoly::attack
