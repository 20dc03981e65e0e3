#include "certpoly/compiler/circuit.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "certpoly/common/error.hpp"

namespace certpoly::compiler {

const char* to_string(Encoding e) { return e == Encoding::Expanded ? "expanded" : "repeated"; }

namespace {

int isqrt_exact(std::size_t v) {
  const auto r = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(v))));
  return r * r == v ? static_cast<int>(r) : -1;
}

bool pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

int layer_dim(const CircuitLayer& l) {
  if (const auto* lin = std::get_if<LinearTuple>(&l)) return isqrt_exact(lin->weights.size());
  if (const auto* ch = std::get_if<ChebyshevTuple>(&l)) return static_cast<int>(ch->lo.size());
  return 0;
}

}  // namespace

int CircuitDesc::dim() const {
  for (const CircuitLayer& l : layers)
    if (const int d = layer_dim(l); d > 0) return d;
  int n = 1;
  for (const CircuitLayer& l : layers)
    if (const auto* c = std::get_if<ConvTuple>(&l))
      while (n < std::max(c->in_size(), c->out_size())) n *= 2;
  return n;
}

int CircuitDesc::in_dim() const {
  for (const CircuitLayer& l : layers) {
    if (const auto* lin = std::get_if<LinearTuple>(&l)) return lin->cols;
    if (const auto* c = std::get_if<ConvTuple>(&l)) return c->in_size();
  }
  return dim();
}

int CircuitDesc::out_dim() const {
  for (auto it = layers.rbegin(); it != layers.rend(); ++it) {
    if (const auto* lin = std::get_if<LinearTuple>(&*it)) return lin->rows;
    if (const auto* c = std::get_if<ConvTuple>(&*it)) return c->out_size();
  }
  return dim();
}

std::vector<Encoding> CircuitDesc::encodings() const {
  std::vector<Encoding> out{Encoding::Expanded};
  for (const CircuitLayer& l : layers) {
    const Encoding cur = out.back();
    const bool linear = !std::holds_alternative<ChebyshevTuple>(l);
    out.push_back(linear ? (cur == Encoding::Expanded ? Encoding::Repeated : Encoding::Expanded) : cur);
  }
  return out;
}

void CircuitDesc::validate() const {
  const int n = dim();
  if (!pow2(n)) throw ShapeError("circuit dimension must be a power of two");
  const std::size_t nn = static_cast<std::size_t>(n) * n;
  int width = -1;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const std::string at = "layer " + std::to_string(i) + ": ";
    if (const auto* lin = std::get_if<LinearTuple>(&layers[i])) {
      if (lin->weights.size() != nn || lin->bias.size() != nn) throw ShapeError(at + "packed linear arrays must hold n*n values");
      if (lin->rows < 1 || lin->cols < 1 || lin->rows > n || lin->cols > n) throw ShapeError(at + "linear shape exceeds n");
      if (width >= 0 && lin->cols != width) throw ShapeError(at + "linear input width does not match the previous layer");
      width = lin->rows;
    } else if (const auto* ch = std::get_if<ChebyshevTuple>(&layers[i])) {
      if (static_cast<int>(ch->lo.size()) != n || static_cast<int>(ch->hi.size()) != n)
        throw ShapeError(at + "chebyshev intervals must hold n values");
      if (ch->cols < 1 || (ch->rows != 1 && ch->rows != n)) throw ShapeError(at + "chebyshev shape must be [1 or n, degree + 1]");
      if (ch->coeffs.size() != static_cast<std::size_t>(ch->rows) * ch->cols)
        throw ShapeError(at + "chebyshev coefficient count does not match its shape");
      for (int j = 0; j < n; ++j)
        if (!(ch->lo[j] < ch->hi[j])) throw ShapeError(at + "chebyshev interval with lo >= hi");
    } else {
      const auto& c = std::get<ConvTuple>(layers[i]);
      if (c.kh < 1 || c.kw < 1 || c.stride < 1 || c.padding < 0 || c.in_c < 1 || c.out_c < 1)
        throw ShapeError(at + "invalid conv geometry");
      if (c.out_h != (c.in_h + 2 * c.padding - c.kh) / c.stride + 1 || c.out_w != (c.in_w + 2 * c.padding - c.kw) / c.stride + 1)
        throw ShapeError(at + "conv output shape does not match its geometry");
      if (c.kernels.size() != static_cast<std::size_t>(c.out_c) * c.in_c * c.kh * c.kw ||
          c.bias.size() != static_cast<std::size_t>(c.out_c))
        throw ShapeError(at + "conv kernel or bias size mismatch");
      if (c.in_size() > n || c.out_size() > n) throw ShapeError(at + "conv exceeds the circuit dimension");
      if (width >= 0 && c.in_size() != width) throw ShapeError(at + "conv input width does not match the previous layer");
      width = c.out_size();
    }
  }
}

namespace {

// Recursive-descent recognizer for the circuit grammar; whitespace separates tokens.
class Parser {
 public:
  explicit Parser(const std::string& s) : s_(s) {}

  CircuitDesc root() {
    CircuitDesc c;
    expect('[');
    if (!peek(']')) {
      c.layers.push_back(layer());
      while (peek(',')) {
        expect(',');
        c.layers.push_back(layer());
      }
    }
    expect(']');
    ws();
    if (pos_ != s_.size()) fail("trailing characters after the root list");
    return c;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError("circuit grammar: " + what + " at byte " + std::to_string(pos_));
  }
  void ws() {
    while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\n' || s_[pos_] == '\t' || s_[pos_] == '\r')) ++pos_;
  }
  bool peek(char c) {
    ws();
    return pos_ < s_.size() && s_[pos_] == c;
  }
  void expect(char c) {
    if (!peek(c)) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  std::string tag() {
    expect('"');
    const std::size_t start = pos_;
    while (pos_ < s_.size() && s_[pos_] != '"') ++pos_;
    if (pos_ == s_.size()) fail("unterminated layer tag");
    std::string t = s_.substr(start, pos_ - start);
    ++pos_;
    return t;
  }

  bool digits() {
    const std::size_t start = pos_;
    while (pos_ < s_.size() && s_[pos_] >= '0' && s_[pos_] <= '9') ++pos_;
    return pos_ > start;
  }

  // number ::= integer | float; integer ::= ["-"] digits; float ::= ["-"] digits "." digits
  double number(bool* is_integer = nullptr) {
    ws();
    const std::size_t start = pos_;
    if (pos_ < s_.size() && s_[pos_] == '-') ++pos_;
    if (!digits()) fail("expected a number");
    bool integer = true;
    if (pos_ < s_.size() && s_[pos_] == '.') {
      ++pos_;
      if (!digits()) fail("expected digits after '.'");
      integer = false;
    }
    double v = 0.0;
    const auto r = std::from_chars(s_.data() + start, s_.data() + pos_, v);
    if (r.ec != std::errc() || r.ptr != s_.data() + pos_) fail("number out of range");
    if (is_integer) *is_integer = integer;
    return v;
  }

  int integer() {
    bool is_int = false;
    const std::size_t at = pos_;
    const double v = number(&is_int);
    if (!is_int || std::fabs(v) > 1e9) {
      pos_ = at;
      fail("expected an integer");
    }
    return static_cast<int>(v);
  }

  std::vector<double> num_array() {
    std::vector<double> out;
    expect('[');
    if (peek(']')) {
      ++pos_;
      return out;
    }
    out.push_back(number());
    while (peek(',')) {
      ++pos_;
      out.push_back(number());
    }
    expect(']');
    return out;
  }

  // shape ::= "[" number "," number "]"; shape2 has four numbers. Values must be integral sizes.
  std::vector<int> shape(int count) {
    std::vector<int> out;
    expect('[');
    for (int i = 0; i < count; ++i) {
      if (i > 0) expect(',');
      const std::size_t at = pos_;
      const double v = number();
      if (v != std::floor(v) || std::fabs(v) > 1e9) {
        pos_ = at;
        fail("shape entries must be whole numbers");
      }
      out.push_back(static_cast<int>(v));
    }
    expect(']');
    return out;
  }

  CircuitLayer layer() {
    expect('[');
    const std::string t = tag();
    expect(',');
    CircuitLayer out;
    if (t == "linear") {
      LinearTuple l;
      l.weights = num_array();
      expect(',');
      l.bias = num_array();
      expect(',');
      const auto sh = shape(2);
      l.rows = sh[0];
      l.cols = sh[1];
      out = std::move(l);
    } else if (t == "chebyshev") {
      ChebyshevTuple c;
      c.coeffs = num_array();
      expect(',');
      c.lo = num_array();
      expect(',');
      c.hi = num_array();
      expect(',');
      const auto sh = shape(2);
      c.rows = sh[0];
      c.cols = sh[1];
      out = std::move(c);
    } else if (t == "conv") {
      ConvTuple c;
      const auto k = shape(2);
      c.kh = k[0];
      c.kw = k[1];
      expect(',');
      c.stride = integer();
      expect(',');
      c.padding = integer();
      expect(',');
      c.kernels = num_array();
      expect(',');
      c.bias = num_array();
      expect(',');
      const auto in = shape(2);
      c.in_h = in[0];
      c.in_w = in[1];
      expect(',');
      const auto o = shape(4);
      c.out_c = o[0];
      c.in_c = o[1];
      c.out_h = o[2];
      c.out_w = o[3];
      out = std::move(c);
    } else {
      fail("unknown layer tag \"" + t + "\"");
    }
    expect(']');
    return out;
  }

  const std::string& s_;
  std::size_t pos_ = 0;
};

void put_array(std::string& out, const std::vector<double>& v) {
  out += '[';
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += format_number(v[i]);
  }
  out += ']';
}

void put_ints(std::string& out, std::initializer_list<int> v) {
  out += '[';
  bool first = true;
  for (int x : v) {
    if (!first) out += ',';
    first = false;
    out += std::to_string(x);
  }
  out += ']';
}

}  // namespace

std::string format_number(double v) {
  if (!std::isfinite(v)) throw DomainError("circuit numbers must be finite");
  char buf[1100];
  const auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed);
  if (r.ec != std::errc()) throw DomainError("number formatting failed");
  return std::string(buf, r.ptr);
}

void check_grammar(const std::string& text) { Parser(text).root(); }

CircuitDesc parse_circuit(const std::string& text) {
  CircuitDesc c = Parser(text).root();
  c.validate();
  return c;
}

std::string circuit_to_text(const CircuitDesc& circ) {
  std::string out = "[";
  for (std::size_t i = 0; i < circ.layers.size(); ++i) {
    out += i ? ",\n" : "\n";
    const CircuitLayer& l = circ.layers[i];
    if (const auto* lin = std::get_if<LinearTuple>(&l)) {
      out += "[\"linear\",";
      put_array(out, lin->weights);
      out += ',';
      put_array(out, lin->bias);
      out += ',';
      put_ints(out, {lin->rows, lin->cols});
    } else if (const auto* ch = std::get_if<ChebyshevTuple>(&l)) {
      out += "[\"chebyshev\",";
      put_array(out, ch->coeffs);
      out += ',';
      put_array(out, ch->lo);
      out += ',';
      put_array(out, ch->hi);
      out += ',';
      put_ints(out, {ch->rows, ch->cols});
    } else {
      const auto& c = std::get<ConvTuple>(l);
      out += "[\"conv\",";
      put_ints(out, {c.kh, c.kw});
      out += ',' + std::to_string(c.stride) + ',' + std::to_string(c.padding) + ',';
      put_array(out, c.kernels);
      out += ',';
      put_array(out, c.bias);
      out += ',';
      put_ints(out, {c.in_h, c.in_w});
      out += ',';
      put_ints(out, {c.out_c, c.in_c, c.out_h, c.out_w});
    }
    out += ']';
  }
  out += circ.layers.empty() ? "]\n" : "\n]\n";
  return out;
}

CircuitDesc load_circuit(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open circuit file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_circuit(ss.str());
}

void save_circuit(const CircuitDesc& circ, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write circuit file " + path);
  out << circuit_to_text(circ);
}

}  // namespace certpoly::compiler
