#include "certpoly/compiler/compiler.hpp"

#include <json.hpp>
#include <sstream>

#include "certpoly/common/error.hpp"

namespace certpoly::compiler {

int chebyshev_depth(int degree) {
  if (degree < 0) throw DomainError("negative polynomial degree");
  if (degree > kMaxChebyshevDegree)
    throw DomainError("polynomial degree " + std::to_string(degree) + " exceeds the depth table (max 247)");
  if (degree == 0) return 0;
  if (degree <= 2) return degree + 1;
  static constexpr int upper[] = {5, 13, 27, 59, 119, 247};
  int d = 4;
  for (int u : upper) {
    if (degree <= u) return d;
    ++d;
  }
  return d;
}

int chebyshev_layer_depth(int degree) { return degree == 0 ? 0 : chebyshev_depth(degree) + 1; }

int linear_depth(Encoding input) { return input == Encoding::Expanded ? 1 : 2; }

int required_depth(const CircuitDesc& circ) {
  const auto enc = circ.encodings();
  int depth = 0;
  for (std::size_t i = 0; i < circ.layers.size(); ++i) {
    if (const auto* ch = std::get_if<ChebyshevTuple>(&circ.layers[i]))
      depth += chebyshev_layer_depth(ch->degree());
    else
      depth += linear_depth(enc[i]);
  }
  return depth;
}

int required_depth(const nn::PolyNetwork& pnet) {
  Encoding enc = Encoding::Expanded;
  int depth = 0;
  for (int k = 0; k < pnet.num_blocks(); ++k) {
    depth += linear_depth(enc);
    enc = enc == Encoding::Expanded ? Encoding::Repeated : Encoding::Expanded;
    if (const auto* p = pnet.poly_layer(k)) {
      int deg = 0;
      for (const auto& c : p->polys) deg = std::max(deg, c.pi.degree());
      depth += chebyshev_layer_depth(deg);
    } else if (pnet.has_activation(k)) {
      throw DomainError("required_depth needs polynomial activations");
    }
  }
  return depth;
}

Profile parse_profile(const std::string& s) {
  Profile p;
  char comma = 0;
  std::istringstream in(s);
  if (!(in >> p.q_bits >> comma >> p.scale_bits) || comma != ',' || !(in >> std::ws).eof())
    throw ParseError("profile must look like \"30,40\", got \"" + s + "\"");
  if (p.q_bits < 1 || p.scale_bits < 1 || p.q_bits > 60 || p.scale_bits > 60)
    throw DomainError("profile bit sizes must lie in [1, 60]");
  return p;
}

int CKKSParams::modulus_bits(int level) const {
  if (level < 0 || level > levels()) throw DomainError("level outside the modulus chain");
  int bits = 0;
  for (int i = 0; i <= level; ++i) bits += modulus_chain_bits[i];
  return bits;
}

void CKKSParams::validate() const {
  if (modulus_chain_bits.empty()) throw DomainError("empty modulus chain");
  for (int b : modulus_chain_bits)
    if (b < 1) throw DomainError("moduli must have at least one bit");
  if (slot_count < 1 || (slot_count & (slot_count - 1)) != 0) throw DomainError("slot count must be a power of two");
  if (scale_bits < 1) throw DomainError("scale must have at least one bit");
  if (depth > levels()) throw DomainError("depth exceeds the modulus chain");
}

int security_cap_bits(int ring_log2_N) {
  switch (ring_log2_N) {
    case 15: return 881;
    case 16: return 1747;
    case 17: return 3523;
    default: throw DomainError("unsupported ring size 2^" + std::to_string(ring_log2_N));
  }
}

CKKSParams select_params(int depth, int slots_needed, const Profile& profile) {
  if (depth < 1) throw DomainError("select_params needs depth >= 1");
  CKKSParams p;
  p.scale_bits = profile.scale_bits;
  p.depth = depth;
  p.modulus_chain_bits.assign(depth + 1, profile.q_bits);
  p.modulus_chain_bits[0] = profile.scale_bits + 20;
  const int q = p.modulus_bits(depth);
  p.aux_bits = (q + p.dnum - 1) / p.dnum;
  for (int logn = 15; logn <= 17; ++logn) {
    if (q + p.aux_bits > security_cap_bits(logn)) continue;
    if ((1 << (logn - 1)) < slots_needed) continue;
    p.ring_log2_N = logn;
    p.slot_count = 1 << (logn - 1);
    return p;
  }
  throw ParamsError("circuit too deep for supported parameters (depth " + std::to_string(depth) + ", " +
                    std::to_string(q + p.aux_bits) + " modulus bits, " + std::to_string(slots_needed) + " slots)");
}

std::string params_to_text(const CKKSParams& p) {
  nlohmann::ordered_json j;
  j["format"] = "certpoly.params";
  j["version"] = 1;
  j["ring_log2_N"] = p.ring_log2_N;
  j["slot_count"] = p.slot_count;
  j["modulus_chain_bits"] = p.modulus_chain_bits;
  j["scale_bits"] = p.scale_bits;
  j["depth"] = p.depth;
  j["dnum"] = p.dnum;
  j["aux_bits"] = p.aux_bits;
  j["total_bits"] = p.total_bits();
  return j.dump(2) + "\n";
}

CKKSParams parse_params(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.at("format") != "certpoly.params" || j.at("version") != 1) throw ParseError("not a certpoly.params v1 file");
    CKKSParams p;
    p.ring_log2_N = j.at("ring_log2_N");
    p.slot_count = j.at("slot_count");
    p.modulus_chain_bits = j.at("modulus_chain_bits").get<std::vector<int>>();
    p.scale_bits = j.at("scale_bits");
    p.depth = j.at("depth");
    p.dnum = j.at("dnum");
    p.aux_bits = j.at("aux_bits");
    p.validate();
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("params: ") + e.what());
  }
}

int circuit_dim(const nn::Network& net) {
  int w = net.in_dim();
  for (const nn::Block& b : net.blocks()) w = std::max({w, b.in_dim, b.out_dim});
  int n = 1;
  while (n < w) n *= 2;
  return n;
}

LinearTuple pack_linear(const nn::Dense& d, int n, Encoding input) {
  const int rows = static_cast<int>(d.W.rows()), cols = static_cast<int>(d.W.cols());
  if (rows > n || cols > n) throw ShapeError("linear layer wider than the circuit dimension");
  LinearTuple t;
  t.rows = rows;
  t.cols = cols;
  const std::size_t nn = static_cast<std::size_t>(n) * n;
  t.weights.assign(nn, 0.0);
  t.bias.assign(nn, 0.0);
  for (int j = 0; j < rows; ++j)
    for (int k = 0; k < cols; ++k)
      t.weights[input == Encoding::Expanded ? k * n + j : j * n + k] = d.W(j, k);
  for (int blk = 0; blk < n; ++blk)
    for (int j = 0; j < rows; ++j) t.bias[input == Encoding::Expanded ? blk * n + j : j * n + blk] = d.b[j];
  return t;
}

nn::Dense unpack_linear(const LinearTuple& t, Encoding input) {
  const auto n = static_cast<int>(std::llround(std::sqrt(static_cast<double>(t.weights.size()))));
  nn::Dense d{nn::Mat(t.rows, t.cols), nn::Vec(t.rows)};
  for (int j = 0; j < t.rows; ++j) {
    for (int k = 0; k < t.cols; ++k) d.W(j, k) = t.weights[input == Encoding::Expanded ? k * n + j : j * n + k];
    d.b[j] = t.bias[input == Encoding::Expanded ? j : j * n];
  }
  return d;
}

ConvTuple pack_conv(const nn::Conv2D& c) {
  ConvTuple t;
  t.kh = c.kh;
  t.kw = c.kw;
  t.stride = c.stride;
  t.padding = c.padding;
  t.kernels = c.kernels;
  t.bias.assign(c.bias.data(), c.bias.data() + c.bias.size());
  t.in_h = c.in_h;
  t.in_w = c.in_w;
  t.out_c = c.out_c;
  t.in_c = c.in_c;
  t.out_h = c.out_h();
  t.out_w = c.out_w();
  return t;
}

nn::Conv2D unpack_conv(const ConvTuple& t) {
  nn::Conv2D c;
  c.in_c = t.in_c;
  c.in_h = t.in_h;
  c.in_w = t.in_w;
  c.out_c = t.out_c;
  c.kh = t.kh;
  c.kw = t.kw;
  c.stride = t.stride;
  c.padding = t.padding;
  c.kernels = t.kernels;
  c.bias = nn::Vec::Map(t.bias.data(), static_cast<Eigen::Index>(t.bias.size()));
  c.validate();
  return c;
}

namespace {

ChebyshevTuple pack_chebyshev(const nn::PolyActivationLayer& p, int width, int n) {
  ChebyshevTuple t;
  int deg = 0;
  for (const auto& c : p.polys) deg = std::max(deg, c.pi.degree());
  t.cols = deg + 1;
  t.rows = p.shared ? 1 : n;
  t.coeffs.assign(static_cast<std::size_t>(t.rows) * t.cols, 0.0);
  t.lo.assign(n, -1.0);
  t.hi.assign(n, 1.0);
  for (int r = 0; r < (p.shared ? 1 : width); ++r) {
    const auto& c = p.polys[r].pi.coeffs();
    std::copy(c.begin(), c.end(), t.coeffs.begin() + static_cast<std::ptrdiff_t>(r) * t.cols);
  }
  for (int j = 0; j < width; ++j) {
    t.lo[j] = p.poly(j).pi.lo();
    t.hi[j] = p.poly(j).pi.hi();
  }
  return t;
}

}  // namespace

CircuitDesc compile(const nn::PolyNetwork& pnet, const CKKSParams& params) {
  params.validate();
  const int n = circuit_dim(pnet);
  if (static_cast<long long>(n) * n > params.slot_count)
    throw ShapeError("network width " + std::to_string(n) + " needs " + std::to_string(n * n) + " slots, only " +
                     std::to_string(params.slot_count) + " available");
  CircuitDesc circ;
  Encoding enc = Encoding::Expanded;
  for (int k = 0; k < pnet.num_blocks(); ++k) {
    const nn::Layer& lin = pnet.layers()[pnet.blocks()[k].linear];
    if (const auto* conv = std::get_if<nn::Conv2D>(&lin))
      circ.layers.push_back(pack_conv(*conv));
    else
      circ.layers.push_back(pack_linear(std::get<nn::Dense>(lin), n, enc));
    enc = enc == Encoding::Expanded ? Encoding::Repeated : Encoding::Expanded;
    if (const auto* p = pnet.poly_layer(k)) {
      for (const auto& c : p->polys)
        if (c.pi.degree() > kMaxChebyshevDegree) throw DomainError("polynomial degree exceeds the depth table (max 247)");
      circ.layers.push_back(pack_chebyshev(*p, pnet.blocks()[k].out_dim, n));
    } else if (pnet.has_activation(k)) {
      throw DomainError("compile needs polynomial activations");
    }
  }
  circ.validate();
  const int depth = required_depth(circ);
  if (depth > params.levels())
    throw ParamsError("circuit needs depth " + std::to_string(depth) + " but the chain has " +
                      std::to_string(params.levels()) + " levels");
  return circ;
}

}  // namespace certpoly::compiler
