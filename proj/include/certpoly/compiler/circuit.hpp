#pragma once

#include <string>
#include <variant>
#include <vector>

namespace certpoly::compiler {

enum class Encoding { Expanded, Repeated };

const char* to_string(Encoding e);

// ["linear", weights, bias, [rows, cols]]: n*n packed weights and bias for a square
// padded dimension n; rows x cols is the unpadded matrix shape. Packing is column-wise
// (w[k*n + j] = W[j][k], bias repeated) when the input is expanded and row-wise
// (w[j*n + k] = W[j][k], bias expanded) when it is repeated.
struct LinearTuple {
  std::vector<double> weights;
  std::vector<double> bias;
  int rows = 0;
  int cols = 0;
};

// ["chebyshev", coeffs, lo, hi, [rows, cols]]: rows x cols row-major coefficients in the
// unit variable, one row per neuron (rows = n) or a single broadcast row (rows = 1);
// lo and hi hold one interval per neuron of the padded width n.
struct ChebyshevTuple {
  std::vector<double> coeffs;
  std::vector<double> lo;
  std::vector<double> hi;
  int rows = 0;
  int cols = 0;

  int degree() const { return cols - 1; }
  double coeff(int neuron, int k) const { return coeffs[static_cast<std::size_t>(rows == 1 ? 0 : neuron) * cols + k]; }
};

// ["conv", [kh, kw], stride, padding, kernels, bias, [in_h, in_w], [out_c, in_c, out_h, out_w]]
// with kernels as [out_c][in_c][kh][kw] and one bias per output channel.
struct ConvTuple {
  int kh = 1, kw = 1;
  int stride = 1;
  int padding = 0;
  std::vector<double> kernels;
  std::vector<double> bias;
  int in_h = 1, in_w = 1;
  int out_c = 1, in_c = 1, out_h = 1, out_w = 1;

  int in_size() const { return in_c * in_h * in_w; }
  int out_size() const { return out_c * out_h * out_w; }
};

using CircuitLayer = std::variant<LinearTuple, ChebyshevTuple, ConvTuple>;

struct CircuitDesc {
  std::vector<CircuitLayer> layers;

  // Padded dimension n shared by every layer (slots used = n * n).
  int dim() const;
  int in_dim() const;
  int out_dim() const;
  // Encoding consumed by each layer; the last entry is the output encoding.
  std::vector<Encoding> encodings() const;
  void validate() const;
};

// Throws ParseError with a byte offset unless text derives from the circuit grammar.
void check_grammar(const std::string& text);
CircuitDesc parse_circuit(const std::string& text);
// Canonical form: one layer per line, shortest round-trip fixed-point numbers, no spaces.
std::string circuit_to_text(const CircuitDesc& circ);
std::string format_number(double v);

CircuitDesc load_circuit(const std::string& path);
void save_circuit(const CircuitDesc& circ, const std::string& path);

}  // namespace certpoly::compiler
