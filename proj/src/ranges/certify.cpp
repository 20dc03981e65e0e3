#include "certpoly/ranges/certify.hpp"

#include <cmath>
#include <string>

#include "certpoly/common/error.hpp"
#include "certpoly/parallel/kernels.hpp"

namespace certpoly::ranges {

int degree_for(const CertifyConfig& cfg, int activation_ordinal) {
  if (cfg.degrees.empty()) throw DomainError("no polynomial degree configured");
  const int d = cfg.degrees[std::min<std::size_t>(activation_ordinal, cfg.degrees.size() - 1)];
  if (d < 1) throw DomainError("polynomial degree must be >= 1");
  return d;
}

std::pair<double, double> padded(double lo, double hi, double min_width) {
  if (hi - lo >= min_width) return {lo, hi};
  const double mid = 0.5 * (lo + hi);
  return {rounding::down(mid - 0.5 * min_width), rounding::up(mid + 0.5 * min_width)};
}

namespace {

nn::PolyActivationLayer fit_block(const nn::ActivationLayer& act, const LayerBounds& pre, int k, int degree,
                                  const CertifyConfig& cfg, Vec& eps) {
  const auto exec = cfg.parallel ? parallel::Exec::Parallel : parallel::Exec::Serial;
  const int n = static_cast<int>(pre.lo.size());
  nn::PolyActivationLayer poly{act.act, {}, cfg.mode == FitMode::Uniform};
  auto fit = [&](double lo, double hi, int neuron) {
    const auto [a, b] = padded(lo, hi, cfg.min_width);
    try {
      return approx::fit_activation(act.act, a, b, degree, cfg.eps_q_target, cfg.fit);
    } catch (const Error& e) {
      throw Error("fit failed at block " + std::to_string(k) +
                  (neuron >= 0 ? ", neuron " + std::to_string(neuron) : std::string(", shared polynomial")) +
                  " on [" + std::to_string(a) + ", " + std::to_string(b) + "]: " + e.what());
    }
  };
  eps.resize(n);
  if (cfg.mode == FitMode::Uniform) {
    poly.polys.push_back(fit(pre.lo.minCoeff(), pre.hi.maxCoeff(), -1));
    eps.setConstant(poly.polys.front().eps_total());
  } else {
    poly.polys.resize(n);
    parallel::for_each_index(n, exec, [&](std::size_t j) {
      poly.polys[j] = fit(pre.lo[static_cast<int>(j)], pre.hi[static_cast<int>(j)], static_cast<int>(j));
    });
    for (int j = 0; j < n; ++j) eps[j] = poly.polys[j].eps_total();
  }
  return poly;
}

}  // namespace

CertifyResult certify_network(const nn::Network& net, const CertifyConfig& cfg) {
  for (int i = 0; i < net.in_dim(); ++i)
    if (!std::isfinite(net.input_lo()[i]) || !std::isfinite(net.input_hi()[i]))
      throw DomainError("certification needs a bounded input domain");
  if (!(cfg.min_width > 0.0)) throw DomainError("min_width must be positive");

  std::vector<nn::Layer> layers = net.layers();
  CertifyResult result;
  result.bounds.method = cfg.domain == Domain::Zonotope ? BoundsMethod::Zonotope : BoundsMethod::Interval;
  Propagator prop(net, cfg.domain, cfg.parallel);
  int ordinal = 0;
  while (!prop.done()) {
    const int k = prop.block();
    const LayerBounds pre = prop.pre();
    result.bounds.layers.push_back(pre);
    const nn::Layer* layer = net.activation(k);
    const auto* act = layer ? std::get_if<nn::ActivationLayer>(layer) : nullptr;
    if (!act) {
      if (layer) throw DomainError("certify_network expects an original (non-polynomial) network");
      prop.advance();
      continue;
    }
    Vec eps;
    layers[*net.blocks()[k].activation] = fit_block(*act, pre, k, degree_for(cfg, ordinal++), cfg, eps);
    prop.advance(&eps);
  }
  result.net = nn::PolyNetwork(net.with_layers(std::move(layers)));
  return result;
}

nn::PolyNetwork fit_on_bounds(const nn::Network& net, const BoundsReport& bounds, const CertifyConfig& cfg) {
  if (static_cast<int>(bounds.layers.size()) != net.num_blocks()) throw ShapeError("bounds do not match the network");
  std::vector<nn::Layer> layers = net.layers();
  int ordinal = 0;
  for (int k = 0; k < net.num_blocks(); ++k) {
    const nn::Layer* layer = net.activation(k);
    const auto* act = layer ? std::get_if<nn::ActivationLayer>(layer) : nullptr;
    if (!act) {
      if (layer) throw DomainError("fit_on_bounds expects an original (non-polynomial) network");
      continue;
    }
    Vec eps;
    layers[*net.blocks()[k].activation] = fit_block(*act, bounds.layers[k], k, degree_for(cfg, ordinal++), cfg, eps);
  }
  return nn::PolyNetwork(net.with_layers(std::move(layers)));
}

}  // namespace certpoly::ranges
