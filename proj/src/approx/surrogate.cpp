#include "certpoly/approx/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <json.hpp>
#include <limits>
#include <sstream>

#include "certpoly/common/error.hpp"
#include "certpoly/nn/network_io.hpp"

namespace certpoly::approx {

using cheb::ChebPoly;
using nn::Activation;

double PiecewiseSurrogate::operator()(double x) const {
  if (x <= breakpoints.front()) return activation.left_asymptote()(x);
  if (x > breakpoints.back()) return activation.right_asymptote()(x);
  auto it = std::lower_bound(breakpoints.begin(), breakpoints.end(), x);
  const std::size_t i = static_cast<std::size_t>(it - breakpoints.begin()) - 1;
  return pieces[i](x);
}

std::vector<PiecewiseSurrogate::Segment> PiecewiseSurrogate::segments() const {
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<Segment> s;
  s.push_back({-inf, breakpoints.front(), nullptr, activation.left_asymptote()});
  for (std::size_t i = 0; i < pieces.size(); ++i) s.push_back({breakpoints[i], breakpoints[i + 1], &pieces[i], {}});
  s.push_back({breakpoints.back(), inf, nullptr, activation.right_asymptote()});
  return s;
}

namespace {

Interval residual(const Activation& act, const nn::Line& line, double x) {
  return act.enclose(Interval(x)) - (Interval(line.slope) * Interval(x) + Interval(line.intercept));
}

// Tail cut-off with certified |sigma - line| <= tol on the whole tail; returns (cut, bound).
std::pair<double, double> find_tail(const Activation& act, bool left, double tol) {
  const nn::Line line = left ? act.left_asymptote() : act.right_asymptote();
  const double c = left ? act.left_cutoff() : act.right_cutoff();
  const double dir = left ? -1.0 : 1.0;
  auto r = [&](double x) { return std::fabs(act(x) - line(x)); };
  double inside = c, outside = c;
  if (r(c) > tol) {
    double step = 1.0;
    outside = c + dir * step;
    while (r(outside) > tol) {
      inside = outside;
      step *= 2.0;
      outside = c + dir * step;
      if (step > 1e6) throw FitError("tail search diverged for " + act.name(), r(outside));
    }
    for (int i = 0; i < 200; ++i) {
      const double m = 0.5 * (inside + outside);
      if (m == inside || m == outside) break;
      (r(m) > tol ? inside : outside) = m;
    }
  }
  double cut = outside;
  double bound = residual(act, line, cut).mag();
  double nudge = 1e-6 * (1.0 + std::fabs(cut));
  for (int i = 0; bound > tol && i < 60; ++i, nudge *= 2.0) {
    cut += dir * nudge;
    bound = residual(act, line, cut).mag();
  }
  if (bound > tol) throw FitError("tail could not be certified for " + act.name(), bound);
  return {cut, bound};
}

double taylor_bound(const Activation& act, const ChebPoly& p, double lo, double hi, int order) {
  const std::size_t k = static_cast<std::size_t>(order) + 1;
  const double m = 0.5 * (lo + hi);
  const Interval h = Interval(std::max(m - lo, hi - m));
  const Jet<Interval> xm = Jet<Interval>::variable(Interval(m), k);
  const Jet<Interval> xi = Jet<Interval>::variable(Interval(lo, hi), k);
  const Jet<Interval> dm = act.taylor(xm) - p.eval_jet(xm);
  const Jet<Interval> di = act.taylor(xi) - p.eval_jet(xi);
  Interval total(0.0), hp(1.0);
  for (std::size_t j = 0; j + 1 < k; ++j) {
    total += Interval(dm[j].mag()) * hp;
    hp *= h;
  }
  total += Interval(di[k - 1].mag()) * hp;
  return total.hi();
}

double certify_range(const Activation& act, const ChebPoly& p, double lo, double hi, const SurrogateOptions& o,
                     double target, int depth) {
  const double b = taylor_bound(act, p, lo, hi, o.taylor_order);
  if (b <= target || depth >= o.max_bisections) return b;
  const double m = 0.5 * (lo + hi);
  return std::max(certify_range(act, p, lo, m, o, target, depth + 1), certify_range(act, p, m, hi, o, target, depth + 1));
}

std::vector<double> uniform_cuts(double lo, double hi, const std::vector<double>& kinks, int pieces) {
  std::vector<double> regions{lo};
  for (double k : kinks)
    if (k > lo && k < hi) regions.push_back(k);
  regions.push_back(hi);
  const double width = hi - lo;
  std::vector<double> cuts{lo};
  for (std::size_t r = 0; r + 1 < regions.size(); ++r) {
    const double a = regions[r], b = regions[r + 1];
    const int n = std::max(1, static_cast<int>(std::lround(pieces * (b - a) / width)));
    for (int i = 1; i <= n; ++i) cuts.push_back(i == n ? b : a + (b - a) * i / n);
  }
  return cuts;
}

double sampled_error(const Activation& act, const std::vector<double>& cuts, int degree) {
  double worst = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const ChebPoly p = cheb::interpolate([&act](double x) { return act(x); }, degree, cuts[i], cuts[i + 1]);
    for (int j = 0; j <= 64; ++j) {
      const double x = cuts[i] + (cuts[i + 1] - cuts[i]) * j / 64.0;
      worst = std::max(worst, std::fabs(p(x) - act(x)));
    }
  }
  return worst;
}

}  // namespace

double certify_piece(const Activation& act, const ChebPoly& p, double lo, double hi, const SurrogateOptions& opts,
                     double target) {
  double worst = 0.0;
  for (int s = 0; s < opts.subintervals; ++s) {
    const double a = (s == 0) ? lo : lo + (hi - lo) * s / opts.subintervals;
    const double b = (s == opts.subintervals - 1) ? hi : lo + (hi - lo) * (s + 1) / opts.subintervals;
    worst = std::max(worst, certify_range(act, p, a, b, opts, target, 0));
  }
  return worst;
}

PiecewiseSurrogate build_surrogate(const Activation& act, double eps_q_target, const SurrogateOptions& opts) {
  if (!(eps_q_target > 0.0)) throw DomainError("surrogate target must be positive");
  if (opts.piece_degree < 1 || opts.max_pieces < 1 || opts.subintervals < 1)
    throw DomainError("surrogate options must be positive");
  const double tol = eps_q_target * (1.0 - 1e-3);

  PiecewiseSurrogate q;
  q.activation = act;
  q.eps_target = eps_q_target;
  q.piece_degree = opts.piece_degree;

  if (act.piecewise_linear()) {
    q.breakpoints = {0.0};
    q.eps_q = 0.0;
    return q;
  }

  const auto [d0, b0] = find_tail(act, true, tol);
  const auto [dn, bn] = find_tail(act, false, tol);
  double eps_q = std::max(b0, bn);
  if (!(d0 < dn)) {
    q.breakpoints = {d0};
    q.eps_q = eps_q;
    return q;
  }

  // Cheap sampled estimate of the piece count, then certify and double on failure.
  int count = 1;
  while (count < opts.max_pieces && sampled_error(act, uniform_cuts(d0, dn, act.kinks(), count), opts.piece_degree) > 0.5 * tol)
    count = count < 16 ? count + 1 : count * 2;
  count = std::min(count, opts.max_pieces);

  double best = std::numeric_limits<double>::infinity();
  for (;;) {
    const std::vector<double> cuts = uniform_cuts(d0, dn, act.kinks(), count);
    std::vector<ChebPoly> pieces;
    double worst = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
      pieces.push_back(cheb::interpolate([&act](double x) { return act(x); }, opts.piece_degree, cuts[i], cuts[i + 1]));
      worst = std::max(worst, certify_piece(act, pieces.back(), cuts[i], cuts[i + 1], opts, tol));
      if (worst > tol) break;
    }
    if (worst <= tol) {
      q.breakpoints = cuts;
      q.pieces = std::move(pieces);
      q.eps_q = std::max(eps_q, worst);
      return q;
    }
    best = std::min(best, std::max(eps_q, worst));
    if (count >= opts.max_pieces) break;
    count = std::min(opts.max_pieces, count * 2);
  }
  throw FitError("surrogate for " + act.name() + " cannot reach the target within the piece budget", best);
}

using json = nlohmann::ordered_json;

std::string surrogate_to_text(const PiecewiseSurrogate& q) {
  json root;
  root["format"] = "certpoly.surrogate";
  root["activation"] = q.activation.name();
  root["alpha"] = q.activation.alpha();
  root["eps_target"] = q.eps_target;
  root["piece_degree"] = q.piece_degree;
  root["eps_q"] = q.eps_q;
  root["breakpoints"] = q.breakpoints;
  json pieces = json::array();
  for (const auto& p : q.pieces) pieces.push_back(p.coeffs());
  root["pieces"] = std::move(pieces);
  return root.dump(1) + "\n";
}

PiecewiseSurrogate parse_surrogate(const std::string& text) {
  try {
    const json root = json::parse(text);
    if (root.value("format", "") != "certpoly.surrogate") throw ParseError("not a certpoly.surrogate file");
    PiecewiseSurrogate q;
    q.activation = Activation::parse(root.at("activation").get<std::string>(), root.at("alpha").get<double>());
    q.eps_target = root.at("eps_target").get<double>();
    q.piece_degree = root.at("piece_degree").get<int>();
    q.eps_q = root.at("eps_q").get<double>();
    q.breakpoints = root.at("breakpoints").get<std::vector<double>>();
    const auto& pieces = root.at("pieces");
    if (q.breakpoints.empty() || pieces.size() + 1 != q.breakpoints.size() && !pieces.empty())
      throw ParseError("surrogate breakpoints do not match pieces");
    for (std::size_t i = 0; i < pieces.size(); ++i)
      q.pieces.emplace_back(pieces[i].get<std::vector<double>>(), q.breakpoints[i], q.breakpoints[i + 1]);
    return q;
  } catch (const json::exception& e) {
    throw ParseError(std::string("surrogate file: ") + e.what());
  }
}

SurrogateCache& SurrogateCache::global() {
  static SurrogateCache cache;
  return cache;
}

const PiecewiseSurrogate& SurrogateCache::get(const Activation& act, double eps_q_target, const SurrogateOptions& opts) {
  const Key key{static_cast<int>(act.kind()), act.alpha(), eps_q_target, opts.piece_degree};
  std::lock_guard<std::mutex> lock(mu_);
  auto it = entries_.find(key);
  if (it != entries_.end()) return it->second;
  std::string path;
  if (!dir_.empty()) {
    std::ostringstream name;
    name.precision(17);
    name << act.name() << '_' << act.alpha() << '_' << eps_q_target << '_' << opts.piece_degree << ".json";
    path = (std::filesystem::path(dir_) / name.str()).string();
    if (std::filesystem::exists(path)) {
      PiecewiseSurrogate q = parse_surrogate(nn::read_file(path));
      if (q.activation == act && q.eps_target == eps_q_target && q.piece_degree == opts.piece_degree)
        return entries_.emplace(key, std::move(q)).first->second;
    }
  }
  PiecewiseSurrogate q = build_surrogate(act, eps_q_target, opts);
  if (!path.empty()) {
    std::filesystem::create_directories(dir_);
    nn::write_file(path, surrogate_to_text(q));
  }
  return entries_.emplace(key, std::move(q)).first->second;
}

}  // namespace certpoly::approx
