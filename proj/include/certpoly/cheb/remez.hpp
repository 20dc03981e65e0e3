#pragma once

#include <functional>
#include <vector>

#include "certpoly/cheb/chebpoly.hpp"

namespace certpoly::cheb {

struct RemezOptions {
  std::vector<double> kinks;  // points where f is not smooth; always sampled
  int max_iterations = 50;
  double rel_tol = 1e-8;
  int grid_points = 0;  // 0 picks a size from the degree
};

struct EquioscillationCertificate {
  std::vector<double> points;  // reference used for the returned polynomial
  std::vector<double> errors;  // f - p at those points
  double E = 0.0;              // max |errors|
  double sup_error = 0.0;      // measured sup error over the search grid
  int iterations = 0;
  bool converged = false;
};

struct RemezResult {
  ChebPoly poly;
  EquioscillationCertificate certificate;
};

RemezResult remez(const std::function<double(double)>& f, int n, double lo, double hi,
                  const RemezOptions& options = {});

}  // namespace certpoly::cheb
