#include "certpoly/cheb/remez.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>

#include "certpoly/common/error.hpp"

namespace certpoly::cheb {

namespace {

struct Extremum {
  double x;
  double e;
};

double golden_max(const std::function<double(double)>& g, double a, double b, double& best_x) {
  const double r = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - r * (b - a), d = a + r * (b - a);
  double gc = g(c), gd = g(d);
  for (int it = 0; it < 60 && (b - a) > 1e-15 * std::max(1.0, std::fabs(a) + std::fabs(b)); ++it) {
    if (gc > gd) {
      b = d;
      d = c;
      gd = gc;
      c = b - r * (b - a);
      gc = g(c);
    } else {
      a = c;
      c = d;
      gc = gd;
      d = a + r * (b - a);
      gd = g(d);
    }
  }
  if (gc > gd) {
    best_x = c;
    return gc;
  }
  best_x = d;
  return gd;
}

std::vector<double> solve_reference(const std::vector<double>& ref, const std::vector<double>& fref, int n,
                                    double lo, double hi, double& levelled) {
  const int m = n + 2;
  Eigen::MatrixXd a(m, m);
  Eigen::VectorXd rhs(m);
  for (int i = 0; i < m; ++i) {
    const double t = (2.0 * ref[i] - (lo + hi)) / (hi - lo);
    double tkm1 = 1.0, tk = t;
    a(i, 0) = 1.0;
    if (n >= 1) a(i, 1) = t;
    for (int k = 2; k <= n; ++k) {
      const double tn = 2.0 * t * tk - tkm1;
      tkm1 = tk;
      tk = tn;
      a(i, k) = tk;
    }
    a(i, n + 1) = (i % 2 == 0) ? 1.0 : -1.0;
    rhs(i) = fref[i];
  }
  const Eigen::VectorXd sol = a.fullPivLu().solve(rhs);
  if (!sol.allFinite()) throw NumericalError("remez reference system is singular");
  levelled = sol(n + 1);
  return std::vector<double>(sol.data(), sol.data() + n + 1);
}

}  // namespace

RemezResult remez(const std::function<double(double)>& f, int n, double lo, double hi,
                  const RemezOptions& options) {
  if (n < 0) throw DomainError("remez needs degree >= 0");
  if (!(lo < hi)) throw DomainError("remez needs lo < hi");

  const int grid_n = options.grid_points > 0 ? options.grid_points : std::max(4000, 40 * (n + 2));
  std::vector<double> grid;
  grid.reserve(grid_n + 1 + options.kinks.size());
  for (int j = 0; j <= grid_n; ++j) {
    const double t = -std::cos(std::numbers::pi * j / grid_n);
    grid.push_back(j == 0 ? lo : (j == grid_n ? hi : 0.5 * (hi - lo) * t + 0.5 * (lo + hi)));
  }
  std::vector<char> is_kink;
  for (double k : options.kinks)
    if (k > lo && k < hi) grid.push_back(k);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  is_kink.assign(grid.size(), 0);
  for (double k : options.kinks) {
    auto it = std::lower_bound(grid.begin(), grid.end(), k);
    if (it != grid.end() && *it == k) is_kink[it - grid.begin()] = 1;
  }

  std::vector<double> fgrid(grid.size());
  double fscale = 0.0;
  for (std::size_t j = 0; j < grid.size(); ++j) {
    fgrid[j] = f(grid[j]);
    if (!std::isfinite(fgrid[j])) throw NumericalError("non-finite function value in remez");
    fscale = std::max(fscale, std::fabs(fgrid[j]));
  }
  const double abs_floor = 64.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, fscale);

  std::vector<double> ref(n + 2);
  for (int i = 0; i < n + 2; ++i) {
    // Slightly asymmetric Chebyshev extrema so functions with a parity component do not
    // collapse the levelled error to zero.
    double t = (n + 1 == 0) ? 0.0 : -std::cos(std::numbers::pi * i / (n + 1));
    t += 0.05 * (1.0 - t * t);
    ref[i] = (i == 0) ? lo : (i == n + 1 ? hi : 0.5 * (hi - lo) * t + 0.5 * (lo + hi));
  }

  RemezResult best;
  double best_sup = std::numeric_limits<double>::infinity();
  std::vector<double> errs(grid.size());

  for (int iter = 1; iter <= options.max_iterations; ++iter) {
    for (int i = 1; i < n + 2; ++i)
      if (!(ref[i] > ref[i - 1])) throw NumericalError("remez reference set degenerated");
    std::vector<double> fref(n + 2);
    for (int i = 0; i < n + 2; ++i) fref[i] = f(ref[i]);
    double levelled = 0.0;
    ChebPoly p(solve_reference(ref, fref, n, lo, hi, levelled), lo, hi);

    auto err_at = [&](double x) { return f(x) - p(x); };
    for (std::size_t j = 0; j < grid.size(); ++j) errs[j] = fgrid[j] - p(grid[j]);

    std::vector<Extremum> ext;
    std::size_t j = 0;
    while (j < grid.size()) {
      const bool pos = errs[j] >= 0.0;
      std::size_t arg = j;
      std::size_t k = j;
      while (k < grid.size() && ((errs[k] >= 0.0) == pos)) {
        if (std::fabs(errs[k]) > std::fabs(errs[arg])) arg = k;
        ++k;
      }
      Extremum e{grid[arg], errs[arg]};
      const std::size_t left = std::max(arg, j + 1) - 1, right = std::min(arg + 1, k - 1);
      if (arg > 0 && arg + 1 < grid.size() && !is_kink[arg] && left < right) {
        const double s = pos ? 1.0 : -1.0;
        double xb = e.x;
        const double v = golden_max([&](double x) { return s * err_at(x); }, grid[left], grid[right], xb);
        if (v > std::fabs(e.e)) e = {xb, s * v};
      }
      ext.push_back(e);
      j = k;
    }

    double sup = 0.0;
    for (std::size_t i = 0; i < ext.size(); ++i)
      if (std::fabs(ext[i].e) > sup) {
        sup = std::fabs(ext[i].e);
      }

    EquioscillationCertificate cert;
    cert.points = ref;
    cert.errors.resize(n + 2);
    for (int i = 0; i < n + 2; ++i) {
      cert.errors[i] = fref[i] - p(ref[i]);
      cert.E = std::max(cert.E, std::fabs(cert.errors[i]));
    }
    cert.sup_error = sup;
    cert.iterations = iter;

    const bool done = sup <= abs_floor || (sup - std::fabs(levelled)) <= options.rel_tol * sup;
    if (sup < best_sup || done) {
      best_sup = sup;
      cert.converged = done;
      best = RemezResult{p, cert};
    }
    if (done) break;

    // Drop rounding-level extrema and merge same-sign neighbours; relax the threshold when
    // too few alternations survive, then pad the widest gaps as a last resort.
    auto filtered = [&](double noise) {
      std::vector<Extremum> out;
      for (const Extremum& e : ext) {
        if (std::fabs(e.e) < noise) continue;
        if (!out.empty() && (out.back().e >= 0.0) == (e.e >= 0.0)) {
          if (std::fabs(e.e) > std::fabs(out.back().e)) out.back() = e;
        } else {
          out.push_back(e);
        }
      }
      return out;
    };
    const double noise = std::max(0.5 * std::fabs(levelled), 4.0 * std::numeric_limits<double>::epsilon() * fscale);
    std::vector<Extremum> kept = filtered(noise);
    if (static_cast<int>(kept.size()) < n + 2) kept = filtered(0.5 * std::fabs(levelled));
    while (static_cast<int>(kept.size()) < n + 2) {
      double widest = -1.0;
      std::size_t at = 0;
      for (std::size_t i = 0; i <= kept.size(); ++i) {
        const double a = i == 0 ? lo : kept[i - 1].x, b = i == kept.size() ? hi : kept[i].x;
        if (b - a > widest) {
          widest = b - a;
          at = i;
        }
      }
      const double a = at == 0 ? lo : kept[at - 1].x, b = at == kept.size() ? hi : kept[at].x;
      std::size_t pick = grid.size();
      for (std::size_t g = 0; g < grid.size(); ++g)
        if (grid[g] > a && grid[g] < b && (pick == grid.size() || std::fabs(errs[g]) > std::fabs(errs[pick]))) pick = g;
      if (pick == grid.size()) break;
      kept.insert(kept.begin() + static_cast<std::ptrdiff_t>(at), Extremum{grid[pick], errs[pick]});
    }
    if (static_cast<int>(kept.size()) < n + 2) break;
    // Excess points go in adjacent pairs (keeps alternation and coverage), or one end if odd.
    while (static_cast<int>(kept.size()) > n + 2) {
      if ((kept.size() - (n + 2)) % 2 == 1) {
        if (std::fabs(kept.front().e) < std::fabs(kept.back().e))
          kept.erase(kept.begin());
        else
          kept.pop_back();
        continue;
      }
      std::size_t drop = 0;
      double weakest = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i + 1 < kept.size(); ++i) {
        const double w = std::max(std::fabs(kept[i].e), std::fabs(kept[i + 1].e));
        if (w < weakest) {
          weakest = w;
          drop = i;
        }
      }
      kept.erase(kept.begin() + static_cast<std::ptrdiff_t>(drop), kept.begin() + static_cast<std::ptrdiff_t>(drop) + 2);
    }
    for (int i = 0; i < n + 2; ++i) ref[i] = kept[i].x;
  }
  return best;
}

}  // namespace certpoly::cheb
