#pragma once

#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "certpoly/cheb/chebpoly.hpp"
#include "certpoly/nn/activation.hpp"

namespace certpoly::approx {

struct SurrogateOptions {
  int piece_degree = 15;
  int max_pieces = 1024;
  int subintervals = 64;    // per piece, before adaptive bisection
  int max_bisections = 6;   // extra halvings of a failing subinterval
  int taylor_order = 20;
};

// Certified stand-in q for an activation: asymptotes outside [d_0, d_n], polynomials inside.
struct PiecewiseSurrogate {
  struct Segment {
    double lo;  // -inf for the left tail
    double hi;  // +inf for the right tail
    const cheb::ChebPoly* poly = nullptr;
    nn::Line line;
  };

  nn::Activation activation;
  std::vector<double> breakpoints;  // d_0 < ... < d_n
  std::vector<cheb::ChebPoly> pieces;  // pieces[i] lives on [d_i, d_{i+1}]
  double eps_q = 0.0;
  double eps_target = 0.0;
  int piece_degree = 15;

  double operator()(double x) const;
  std::vector<Segment> segments() const;
  double left_cut() const { return breakpoints.front(); }
  double right_cut() const { return breakpoints.back(); }
};

// Throws FitError (carrying the best bound reached) when the budget is exhausted.
PiecewiseSurrogate build_surrogate(const nn::Activation& act, double eps_q_target, const SurrogateOptions& opts = {});

// Rigorous sup |sigma - p| on [lo, hi] by interval Taylor models on subintervals.
double certify_piece(const nn::Activation& act, const cheb::ChebPoly& p, double lo, double hi,
                     const SurrogateOptions& opts, double target);

std::string surrogate_to_text(const PiecewiseSurrogate& q);
PiecewiseSurrogate parse_surrogate(const std::string& text);

// Process-wide cache keyed by (activation, eps target, piece degree); optionally backed by a directory.
class SurrogateCache {
 public:
  explicit SurrogateCache(std::string directory = {}) : dir_(std::move(directory)) {}
  const PiecewiseSurrogate& get(const nn::Activation& act, double eps_q_target, const SurrogateOptions& opts = {});

  static SurrogateCache& global();

 private:
  using Key = std::tuple<int, double, double, int>;
  std::string dir_;
  std::mutex mu_;
  std::map<Key, PiecewiseSurrogate> entries_;
};

}  // namespace certpoly::approx
