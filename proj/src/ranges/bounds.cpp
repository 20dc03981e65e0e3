#include "certpoly/ranges/bounds.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "certpoly/common/error.hpp"
#include "certpoly/parallel/kernels.hpp"
#include "certpoly/ranges/relaxation.hpp"

namespace certpoly::ranges {

using parallel::Exec;

std::string to_string(BoundsMethod m) {
  switch (m) {
    case BoundsMethod::Interval: return "interval";
    case BoundsMethod::Zonotope: return "zonotope";
    case BoundsMethod::Sampled: return "sampled";
    case BoundsMethod::Constant: return "constant";
  }
  return "unknown";
}

namespace {

BoundsMethod parse_method(const std::string& s) {
  if (s == "interval") return BoundsMethod::Interval;
  if (s == "zonotope") return BoundsMethod::Zonotope;
  if (s == "sampled") return BoundsMethod::Sampled;
  if (s == "constant") return BoundsMethod::Constant;
  throw ParseError("unknown bounds method '" + s + "'");
}

std::vector<double> to_std(const Vec& v) { return {v.data(), v.data() + v.size()}; }

Vec from_std(const std::vector<double>& v) { return Eigen::Map<const Vec>(v.data(), static_cast<long>(v.size())); }

nlohmann::ordered_json layer_json(const LayerBounds& b) {
  nlohmann::ordered_json j;
  j["lo"] = to_std(b.lo);
  j["hi"] = to_std(b.hi);
  return j;
}

LayerBounds layer_from_json(const nlohmann::ordered_json& j) {
  LayerBounds b{from_std(j.at("lo").get<std::vector<double>>()), from_std(j.at("hi").get<std::vector<double>>())};
  if (b.lo.size() != b.hi.size()) throw ParseError("bounds: lo and hi differ in length");
  for (int i = 0; i < b.lo.size(); ++i)
    if (!(b.lo[i] <= b.hi[i])) throw ParseError("bounds: lo > hi at neuron " + std::to_string(i));
  return b;
}

// Interval image of a box under x -> W x + b, including floating-point error.
LayerBounds interval_affine(const nn::Dense& d, const LayerBounds& box) {
  const Vec mid = 0.5 * (box.lo + box.hi);
  Vec rad = 0.5 * (box.hi - box.lo);
  for (int i = 0; i < rad.size(); ++i) rad[i] = std::max(rounding::up(box.hi[i] - mid[i]), rounding::up(mid[i] - box.lo[i]));
  const Mat aw = d.W.cwiseAbs();
  const Vec c = d.W * mid + d.b;
  const Vec r = aw * rad;
  const Vec err = gamma(static_cast<int>(d.W.cols()) + 2) * (aw * (mid.cwiseAbs() + rad) + d.b.cwiseAbs());
  LayerBounds out{Vec(c.size()), Vec(c.size())};
  for (int i = 0; i < c.size(); ++i) {
    const double w = rounding::up(r[i] + err[i]);
    out.lo[i] = rounding::down(c[i] - w);
    out.hi[i] = rounding::up(c[i] + w);
  }
  return out;
}

}  // namespace

std::string bounds_to_text(const BoundsReport& report) {
  nlohmann::ordered_json j;
  j["format"] = "certpoly.bounds";
  j["version"] = 1;
  j["method"] = to_string(report.method);
  j["factor"] = report.factor;
  j["layers"] = nlohmann::ordered_json::array();
  for (const LayerBounds& b : report.layers) j["layers"].push_back(layer_json(b));
  if (report.output_difference) j["output_difference"] = layer_json(*report.output_difference);
  return j.dump(1) + "\n";
}

BoundsReport parse_bounds(const std::string& text) {
  try {
    const auto j = nlohmann::ordered_json::parse(text);
    if (j.at("format").get<std::string>() != "certpoly.bounds") throw ParseError("not a bounds file");
    if (j.at("version").get<int>() != 1) throw ParseError("unsupported bounds version");
    BoundsReport r;
    r.method = parse_method(j.at("method").get<std::string>());
    r.factor = j.at("factor").get<double>();
    for (const auto& l : j.at("layers")) r.layers.push_back(layer_from_json(l));
    if (j.contains("output_difference")) r.output_difference = layer_from_json(j.at("output_difference"));
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bounds: ") + e.what());
  }
}

RelaxedNetwork::RelaxedNetwork(nn::Network base) : base_(std::move(base)), eps_(base_.num_blocks()) {}

void RelaxedNetwork::substitute(int block, Vec eps) {
  if (block < 0 || block >= base_.num_blocks()) throw ShapeError("substituted block out of range");
  if (!base_.has_activation(block)) throw ShapeError("block without activation cannot be substituted");
  if (eps.size() != base_.blocks()[block].out_dim) throw ShapeError("eps vector does not match block width");
  for (int i = 0; i < eps.size(); ++i)
    if (!(eps[i] >= 0.0)) throw DomainError("eps must be non-negative");
  eps_[block] = std::move(eps);
}

Propagator::Propagator(const nn::Network& net, Domain domain, bool parallel)
    : net_(&net), domain_(domain), parallel_(parallel) {
  const Vec& lo = net.input_lo();
  const Vec& hi = net.input_hi();
  for (int i = 0; i < lo.size(); ++i)
    if (!std::isfinite(lo[i]) || !std::isfinite(hi[i])) throw DomainError("unbounded input domain");
  box_ = {lo, hi};
  if (domain_ == Domain::Zonotope) zono_ = Zonotope::from_box(lo, hi);
  if (!done()) linear_step();
}

void Propagator::linear_step() {
  const nn::Dense d = net_->linear(block_);
  interval_pre_ = interval_affine(d, box_);
  pre_ = interval_pre_;
  if (domain_ == Domain::Zonotope) {
    zono_ = zono_.affine(d.W, d.b);
    zono_.reduce(4 * zono_.dim());
    pre_.lo = pre_.lo.cwiseMax(zono_.lower());
    pre_.hi = pre_.hi.cwiseMin(zono_.upper());
  }
}

void Propagator::activation_step(const Vec* eps) {
  const int n = static_cast<int>(pre_.lo.size());
  if (eps && eps->size() != n) throw ShapeError("eps vector does not match block width");
  const nn::Layer* layer = net_->activation(block_);
  const auto* act = layer ? std::get_if<nn::ActivationLayer>(layer) : nullptr;
  const auto* poly = layer ? std::get_if<nn::PolyActivationLayer>(layer) : nullptr;
  const Exec exec = parallel_ ? Exec::Parallel : Exec::Serial;
  auto extra = [&](int j) { return eps ? (*eps)[j] : 0.0; };

  const LayerBounds& ip = interval_pre_;
  LayerBounds post{Vec(n), Vec(n)};
  parallel::for_each_index(n, exec, [&](std::size_t jj) {
    const int j = static_cast<int>(jj);
    Interval r(ip.lo[j], ip.hi[j]);
    if (act) r = act->act.range(ip.lo[j], ip.hi[j]);
    if (poly) r = poly_offset_range(poly->poly(j).pi, 0.0, ip.lo[j], ip.hi[j]);
    post.lo[j] = rounding::down(r.lo() - extra(j));
    post.hi[j] = rounding::up(r.hi() + extra(j));
  });
  box_ = std::move(post);
  if (domain_ == Domain::Interval) return;

  Vec slope = Vec::Ones(n), mid = Vec::Zero(n), rad = Vec::Zero(n);
  if (act || poly) {
    parallel::for_each_index(n, exec, [&](std::size_t jj) {
      const int j = static_cast<int>(jj);
      const ParallelRelaxation r = act ? parallel_relaxation(act->act, pre_.lo[j], pre_.hi[j])
                                       : parallel_relaxation(poly->poly(j).pi, pre_.lo[j], pre_.hi[j]);
      slope[j] = r.slope;
      mid[j] = 0.5 * (r.offset_lo + r.offset_hi);
      rad[j] = rounding::up(std::max(r.offset_hi - mid[j], mid[j] - r.offset_lo) + extra(j));
    });
  } else if (eps) {
    for (int j = 0; j < n; ++j) rad[j] = extra(j);
  }
  zono_.apply_parallel(slope, mid, rad);
}

void Propagator::advance(const Vec* eps) {
  if (done()) throw Error("propagation already reached the output");
  if (net_->has_activation(block_) || eps) activation_step(eps);
  if (!net_->has_activation(block_) && !eps) box_ = interval_pre_;
  ++block_;
  if (!done()) linear_step();
}

LayerBounds verified_bounds(const RelaxedNetwork& rnet, int layer, Domain domain) {
  if (layer < 0 || layer >= rnet.base().num_blocks()) throw ShapeError("layer index out of range");
  Propagator p(rnet.base(), domain);
  while (p.block() < layer) {
    const auto& eps = rnet.delta_bounds(p.block());
    p.advance(eps ? &*eps : nullptr);
  }
  return p.pre();
}

BoundsReport verified_report(const RelaxedNetwork& rnet, Domain domain) {
  BoundsReport r;
  r.method = domain == Domain::Zonotope ? BoundsMethod::Zonotope : BoundsMethod::Interval;
  Propagator p(rnet.base(), domain);
  while (!p.done()) {
    r.layers.push_back(p.pre());
    const auto& eps = rnet.delta_bounds(p.block());
    p.advance(eps ? &*eps : nullptr);
  }
  return r;
}

BoundsReport verified_report(const nn::Network& net, Domain domain) { return verified_report(RelaxedNetwork(net), domain); }

BoundsReport sampled_ranges(const nn::Network& net, const nn::Dataset& data, double widen) {
  if (data.rows.empty()) throw DomainError("sampled ranges need a nonempty dataset");
  if (!(widen >= 1.0)) throw DomainError("widen factor must be >= 1");
  const parallel::MinMax mm = parallel::pre_activation_minmax(net, data.rows, Exec::Parallel);
  BoundsReport r;
  r.method = BoundsMethod::Sampled;
  r.factor = widen;
  for (std::size_t k = 0; k < mm.lo.size(); ++k) {
    const Vec mid = 0.5 * (mm.lo[k] + mm.hi[k]);
    const Vec half = 0.5 * (mm.hi[k] - mm.lo[k]);
    if (widen == 1.0)
      r.layers.push_back({mm.lo[k], mm.hi[k]});
    else
      r.layers.push_back({mid - widen * half, mid + widen * half});
  }
  return r;
}

BoundsReport constant_ranges(const nn::Network& net, double c) {
  if (!(c > 0.0) || !std::isfinite(c)) throw DomainError("constant range needs c > 0");
  BoundsReport r;
  r.method = BoundsMethod::Constant;
  r.factor = c;
  for (const nn::Block& b : net.blocks()) r.layers.push_back({Vec::Constant(b.out_dim, -c), Vec::Constant(b.out_dim, c)});
  return r;
}

}  // namespace certpoly::ranges
