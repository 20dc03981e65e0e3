#include "certpoly/sim/evaluator.hpp"

#include <algorithm>
#include <cmath>

#include "certpoly/common/error.hpp"
#include "certpoly/compiler/compiler.hpp"

namespace certpoly::sim {

using compiler::Encoding;

namespace {

int log2_exact(int n) {
  if (n < 1 || (n & (n - 1)) != 0) throw ShapeError("linear dimension must be a power of two");
  int l = 0;
  while ((1 << l) < n) ++l;
  return l;
}

int ceil_log2(int v) {
  int l = 0;
  while ((1 << l) < v) ++l;
  return l;
}

}  // namespace

SimCiphertext eval_linear_expanded(const SimCiphertext& ct, const std::vector<double>& w, const std::vector<double>& b,
                                   int n, SimContext& ctx) {
  const int steps = log2_exact(n);
  SimCiphertext r = mult_plain(ct, w, ctx);
  for (int i = 0; i < steps; ++i) r = add(r, rotate(r, static_cast<long>(n) << i, ctx), ctx);
  return add_plain(r, b, ctx);
}

std::vector<double> replication_mask(int n) {
  std::vector<double> m(static_cast<std::size_t>(n) * n, 0.0);
  for (int j = 0; j < n; ++j) m[static_cast<std::size_t>(j) * n] = 1.0;
  return m;
}

SimCiphertext eval_linear_repeated(const SimCiphertext& ct, const std::vector<double>& w, const std::vector<double>& b,
                                   int n, SimContext& ctx) {
  const int steps = log2_exact(n);
  SimCiphertext r = mult_plain(ct, w, ctx);
  for (int i = 0; i < steps; ++i) r = add(r, rotate(r, 1L << i, ctx), ctx);
  r = mult_plain(r, replication_mask(n), ctx);
  for (int i = 0; i < steps; ++i) r = add(r, rotate(r, -(1L << i), ctx), ctx);
  return add_plain(r, b, ctx);
}

PsPlan ps_plan(int degree) {
  PsPlan best;
  if (degree < 1) return best;
  const int total = ceil_log2(degree + 1);
  best.predicted_mults = -1;
  for (int a = 1; a <= std::max(1, total); ++a) {
    const int l = std::max(0, total - a);
    const int m = 1 << a;
    int mults = (l >= 1 ? m : std::min(degree, m - 1)) - 1;
    mults += std::max(0, l - 1);
    // Splits of the recursive division by T_{m 2^(j-1)}.
    auto splits = [&](auto&& self, int deg, int j) -> int {
      if (j == 0 || deg < 0) return 0;
      const int g = m << (j - 1);
      if (deg < g) return self(self, deg, j - 1);
      return 1 + self(self, deg - g, j - 1) + self(self, g - 1, j - 1);
    };
    mults += splits(splits, degree, l);
    if (best.predicted_mults < 0 || mults < best.predicted_mults) best = PsPlan{a, l, mults};
  }
  return best;
}

namespace {

using Coeffs = std::vector<std::vector<double>>;  // [k][slot]

bool all_zero(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; });
}

struct Partial {
  std::optional<SimCiphertext> ct;
  std::vector<double> constant;
};

class PsEvaluator {
 public:
  PsEvaluator(const SimCiphertext& t, int degree, const PsPlan& plan, SimContext& ctx)
      : ctx_(ctx), m_(1 << plan.baby_log2), batch_(t.slots.size()) {
    const int top = plan.giant >= 1 ? m_ : std::min(degree, m_ - 1);
    powers_.resize(std::max(2, top + 1));
    powers_[1] = t;
    for (int j = 2; j <= top; ++j) {
      const int k = j / 2;
      if (j % 2 == 0) {
        powers_[j] = add_const(mult_int(mult(powers_[k], powers_[k], ctx), 2, ctx), -1.0, ctx);
      } else {
        powers_[j] = sub(mult_int(mult(powers_[k], powers_[k + 1], ctx), 2, ctx), powers_[1], ctx);
      }
    }
    giants_.push_back(powers_[std::min(top, m_)]);
    for (int j = 1; j < plan.giant; ++j) {
      const SimCiphertext& g = giants_.back();
      giants_.push_back(add_const(mult_int(mult(g, g, ctx), 2, ctx), -1.0, ctx));
    }
  }

  Partial eval(const Coeffs& c, int j) {
    const int deg = static_cast<int>(c.size()) - 1;
    if (j == 0) return leaf(c);
    const int g = m_ << (j - 1);
    if (deg < g) return eval(c, j - 1);
    Coeffs q(deg - g + 1), r(g);
    for (int k = 0; k <= deg - g; ++k) {
      q[k] = c[g + k];
      if (k > 0)
        for (double& x : q[k]) x *= 2.0;
    }
    for (int i = 0; i < g; ++i) {
      r[i] = c[i];
      if (i >= 1 && 2 * g - i <= deg)
        for (std::size_t s = 0; s < batch_; ++s) r[i][s] -= c[2 * g - i][s];
    }
    Partial pq = eval(q, j - 1);
    Partial pr = eval(r, j - 1);
    const SimCiphertext& G = giants_[j - 1];
    std::optional<SimCiphertext> prod;
    if (pq.ct) prod = mult(*pq.ct, G, ctx_);
    if (!all_zero(pq.constant)) {
      SimCiphertext s = mult_plain(G, pq.constant, ctx_);
      prod = prod ? add(*prod, s, ctx_) : s;
    }
    return combine(std::move(prod), std::move(pr));
  }

 private:
  Partial leaf(const Coeffs& c) {
    Partial p;
    p.constant = c[0];
    for (std::size_t k = 1; k < c.size(); ++k) {
      if (all_zero(c[k])) continue;
      SimCiphertext s = mult_plain(powers_[k], c[k], ctx_);
      p.ct = p.ct ? add(*p.ct, s, ctx_) : s;
    }
    return p;
  }

  Partial combine(std::optional<SimCiphertext> prod, Partial r) {
    if (prod) r.ct = r.ct ? add(*prod, *r.ct, ctx_) : *prod;
    return r;
  }

  SimContext& ctx_;
  int m_;
  std::size_t batch_;
  std::vector<SimCiphertext> powers_;
  std::vector<SimCiphertext> giants_;
};

}  // namespace

ChebBatchResult eval_chebyshev_batch(const SimCiphertext& ct, const std::vector<std::vector<double>>& coeffs,
                                     const std::vector<double>& lo, const std::vector<double>& hi, int degree,
                                     SimContext& ctx) {
  const std::size_t batch = ct.slots.size();
  if (degree < 0 || static_cast<int>(coeffs.size()) != degree + 1) throw ShapeError("coefficient table must have degree + 1 rows");
  for (const auto& row : coeffs)
    if (row.size() != batch) throw ShapeError("coefficient rows must cover every slot");
  if (lo.size() != batch || hi.size() != batch) throw ShapeError("intervals must cover every slot");
  const int start_level = ct.level;
  const int mults_before = ctx.nonscalar_mults();
  const int target = start_level - compiler::chebyshev_layer_depth(degree);
  if (target < 0) throw DepthExhausted("chebyshev layer needs more levels than remain");

  if (degree == 0) {
    SimCiphertext out = add_plain(mult_int(ct, 0, ctx), coeffs[0], ctx);
    return {out, 0, 0};
  }
  std::vector<double> a(batch), b(batch);
  for (std::size_t s = 0; s < batch; ++s) {
    if (!(lo[s] < hi[s])) throw DomainError("chebyshev interval with lo >= hi");
    a[s] = 2.0 / (hi[s] - lo[s]);
    b[s] = -(hi[s] + lo[s]) / (hi[s] - lo[s]);
  }
  const SimCiphertext t = add_plain(mult_plain(ct, a, ctx), b, ctx);
  const PsPlan plan = ps_plan(degree);
  PsEvaluator ps(t, degree, plan, ctx);
  Partial p = ps.eval(coeffs, plan.giant);
  SimCiphertext out = p.ct ? *p.ct : mult_int(t, 0, ctx);
  if (!all_zero(p.constant)) out = add_plain(out, p.constant, ctx);
  if (out.level < target) throw NumericalError("Paterson-Stockmeyer evaluation exceeded its depth budget");
  out = drop_to_level(out, target, ctx);
  return {out, ctx.nonscalar_mults() - mults_before, start_level - out.level};
}

std::vector<double> expand(const std::vector<double>& v, int n) {
  std::vector<double> out(static_cast<std::size_t>(n) * n, 0.0);
  for (std::size_t j = 0; j < v.size(); ++j)
    std::fill_n(out.begin() + static_cast<std::ptrdiff_t>(j * n), n, v[j]);
  return out;
}

std::vector<double> repeat(const std::vector<double>& v, int n) {
  std::vector<double> out(static_cast<std::size_t>(n) * n, 0.0);
  for (int blk = 0; blk < n; ++blk) std::copy(v.begin(), v.end(), out.begin() + static_cast<std::ptrdiff_t>(blk) * n);
  return out;
}

std::vector<double> collapse(const std::vector<double>& slots, int n, int width, Encoding enc) {
  std::vector<double> out(width);
  for (int j = 0; j < width; ++j) out[j] = slots[enc == Encoding::Expanded ? static_cast<std::size_t>(j) * n : j];
  return out;
}

namespace {

SimCiphertext run_linear(const SimCiphertext& ct, const compiler::LinearTuple& t, int n, Encoding enc, SimContext& ctx) {
  return enc == Encoding::Expanded ? eval_linear_expanded(ct, t.weights, t.bias, n, ctx)
                                   : eval_linear_repeated(ct, t.weights, t.bias, n, ctx);
}

}  // namespace

RunResult run_circuit(const compiler::CircuitDesc& circ, const std::vector<double>& x, SimContext& ctx) {
  circ.validate();
  const int n = circ.dim();
  const int batch = n * n;
  if (batch > ctx.params().slot_count) throw ShapeError("circuit needs more slots than the parameters provide");
  if (static_cast<int>(x.size()) != circ.in_dim()) throw ShapeError("input length does not match the circuit");
  ctx.reset_counters();
  ctx.set_layer(-1);
  SimCiphertext ct = encode_input(expand(x, n), ctx, batch);
  const int start = ct.level;
  const auto enc = circ.encodings();
  int width = circ.in_dim();
  for (std::size_t i = 0; i < circ.layers.size(); ++i) {
    ctx.set_layer(static_cast<int>(i));
    const compiler::CircuitLayer& layer = circ.layers[i];
    if (const auto* lin = std::get_if<compiler::LinearTuple>(&layer)) {
      ct = run_linear(ct, *lin, n, enc[i], ctx);
      width = lin->rows;
    } else if (const auto* conv = std::get_if<compiler::ConvTuple>(&layer)) {
      const nn::Dense d = nn::lower_conv_to_dense(compiler::unpack_conv(*conv));
      ct = run_linear(ct, compiler::pack_linear(d, n, enc[i]), n, enc[i], ctx);
      width = conv->out_size();
    } else {
      const auto& ch = std::get<compiler::ChebyshevTuple>(layer);
      std::vector<std::vector<double>> table(ch.cols, std::vector<double>(batch));
      std::vector<double> lo(batch), hi(batch);
      for (int s = 0; s < batch; ++s) {
        const int neuron = enc[i] == Encoding::Expanded ? s / n : s % n;
        lo[s] = ch.lo[neuron];
        hi[s] = ch.hi[neuron];
        for (int k = 0; k < ch.cols; ++k) table[k][s] = ch.coeff(neuron, k);
      }
      ct = eval_chebyshev_batch(ct, table, lo, hi, ch.degree(), ctx).ct;
    }
  }
  RunResult r;
  r.levels_consumed = start - ct.level;
  r.nonscalar_mults = ctx.nonscalar_mults();
  r.ops = ctx.op_count();
  r.failure = ctx.failure();
  if (auto slots = decrypt(ct)) r.output = collapse(*slots, n, width, enc.back());
  return r;
}

CKKSParams minimal_chain(const compiler::CircuitDesc& circ, const CKKSParams& params,
                         const std::vector<std::vector<double>>& calibration, ChainFit fit) {
  if (calibration.empty()) throw DomainError("minimal_chain needs calibration inputs");
  CKKSParams wide = params;
  const int extra = 1000;
  wide.modulus_chain_bits[0] += extra;
  const int levels = params.levels();
  std::vector<double> need(levels + 1, -INFINITY);  // max over records of log2|v * scale| + 1 per level
  SimContext ctx(wide, {}, 0, Arithmetic::Quantized);
  ctx.set_logging(true);
  for (const auto& x : calibration) {
    const RunResult r = run_circuit(circ, x, ctx);
    if (r.failure) throw NumericalError("calibration input fails even with a 1000-bit larger first modulus");
    for (const OpRecord& rec : ctx.log()) need[rec.level] = std::max(need[rec.level], rec.max_abs_log2 + 1.0);
  }
  CKKSParams out = params;
  if (fit == ChainFit::FirstModulus) {
    // Shift every Q_l by the same amount: the smallest first modulus with Q_l > need_l for all l.
    int first = 1;
    for (int l = 0; l <= levels; ++l)
      if (std::isfinite(need[l]))
        first = std::max(first, static_cast<int>(std::floor(need[l])) + 1 - (params.modulus_bits(l) - params.modulus_chain_bits[0]));
    out.modulus_chain_bits[0] = first;
    return out;
  }
  int q = 0;
  for (int l = 0; l <= levels; ++l) {
    int ql = std::isfinite(need[l]) ? static_cast<int>(std::floor(need[l])) + 1 : 1;
    ql = std::max(ql, q + 1);
    out.modulus_chain_bits[l] = ql - q;
    q = ql;
  }
  return out;
}

}  // namespace certpoly::sim
