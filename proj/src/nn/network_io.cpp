#include "certpoly/nn/network_io.hpp"

#include <fstream>
#include <json.hpp>
#include <sstream>

#include "certpoly/common/error.hpp"

namespace certpoly::nn {

using json = nlohmann::ordered_json;

namespace {

json vec_json(const Vec& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v(i))) throw DomainError("cannot serialize a non-finite value");
    a.push_back(v(i));
  }
  return a;
}

json vec_json(const std::vector<double>& v) { return vec_json(Eigen::Map<const Vec>(v.data(), v.size())); }

std::vector<double> doubles(const json& j, const std::string& what) {
  if (!j.is_array()) throw ParseError(what + " must be an array of numbers");
  std::vector<double> out;
  out.reserve(j.size());
  for (const auto& v : j) {
    if (!v.is_number()) throw ParseError(what + " must contain only numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

Vec to_vec(const std::vector<double>& v) { return Eigen::Map<const Vec>(v.data(), v.size()); }

int integer(const json& j, const std::string& what) {
  if (!j.is_number_integer()) throw ParseError(what + " must be an integer");
  return j.get<int>();
}

const json& field(const json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) throw ParseError(where + ": missing field '" + key + "'");
  return j.at(key);
}

json activation_json(const Activation& a) {
  json j;
  j["kind"] = a.name();
  if (a.kind() == ActivationKind::LeakyReLU || a.kind() == ActivationKind::ELU) j["alpha"] = a.alpha();
  return j;
}

Activation activation_from(const json& j, const std::string& where) {
  const json& k = field(j, "kind", where);
  if (!k.is_string()) throw ParseError(where + ": activation kind must be a string");
  double alpha = 0.0;
  if (j.contains("alpha")) alpha = j.at("alpha").get<double>();
  return Activation::parse(k.get<std::string>(), alpha);
}

}  // namespace

std::string network_to_text(const Network& net) {
  json root;
  root["format"] = "certpoly.network";
  root["version"] = 1;
  root["input_domain"] = {{"lo", vec_json(net.input_lo())}, {"hi", vec_json(net.input_hi())}};
  if (net.input_shape()) {
    const auto& s = *net.input_shape();
    root["input_shape"] = {s.channels, s.height, s.width};
  }
  json layers = json::array();
  for (const Layer& l : net.layers()) {
    json j;
    if (const auto* d = std::get_if<Dense>(&l)) {
      j["type"] = "dense";
      j["shape"] = {d->W.rows(), d->W.cols()};
      json w = json::array();
      for (Eigen::Index r = 0; r < d->W.rows(); ++r)
        for (Eigen::Index c = 0; c < d->W.cols(); ++c) w.push_back(d->W(r, c));
      j["weights"] = std::move(w);
      j["bias"] = vec_json(d->b);
    } else if (const auto* c = std::get_if<Conv2D>(&l)) {
      j["type"] = "conv2d";
      j["in_shape"] = {c->in_c, c->in_h, c->in_w};
      j["out_channels"] = c->out_c;
      j["kernel"] = {c->kh, c->kw};
      j["stride"] = c->stride;
      j["padding"] = c->padding;
      j["weights"] = vec_json(c->kernels);
      j["bias"] = vec_json(c->bias);
    } else if (const auto* a = std::get_if<ActivationLayer>(&l)) {
      j["type"] = "activation";
      const json spec = activation_json(a->act);
      for (auto& [k, v] : spec.items()) j[k] = v;
    } else {
      const auto& p = std::get<PolyActivationLayer>(l);
      j["type"] = "poly_activation";
      j["source"] = activation_json(p.source);
      j["shared"] = p.shared;
      json polys = json::array();
      for (const auto& cp : p.polys) {
        json e;
        e["domain"] = {cp.pi.lo(), cp.pi.hi()};
        e["coeffs"] = vec_json(cp.pi.coeffs());
        e["eps_pi"] = cp.eps_pi;
        e["eps_q"] = cp.eps_q;
        polys.push_back(std::move(e));
      }
      j["polys"] = std::move(polys);
    }
    layers.push_back(std::move(j));
  }
  root["layers"] = std::move(layers);
  return root.dump(1) + "\n";
}

Network parse_network(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("network file is not valid JSON: ") + e.what());
  }
  try {
    if (!root.is_object() || root.value("format", "") != "certpoly.network")
      throw ParseError("not a certpoly.network file");
    const json& dom = field(root, "input_domain", "network");
    Vec lo = to_vec(doubles(field(dom, "lo", "input_domain"), "input_domain.lo"));
    Vec hi = to_vec(doubles(field(dom, "hi", "input_domain"), "input_domain.hi"));
    std::optional<InputShape> shape;
    if (root.contains("input_shape")) {
      const json& s = root.at("input_shape");
      if (!s.is_array() || s.size() != 3) throw ParseError("input_shape must be [channels, height, width]");
      shape = InputShape{integer(s[0], "input_shape"), integer(s[1], "input_shape"), integer(s[2], "input_shape")};
    }
    std::vector<Layer> layers;
    const json& arr = field(root, "layers", "network");
    if (!arr.is_array()) throw ParseError("layers must be an array");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const json& j = arr[i];
      const std::string where = "layer " + std::to_string(i);
      const std::string type = field(j, "type", where).get<std::string>();
      if (type == "dense") {
        const json& s = field(j, "shape", where);
        if (!s.is_array() || s.size() != 2) throw ParseError(where + ": shape must be [out, in]");
        const int rows = integer(s[0], where + ".shape"), cols = integer(s[1], where + ".shape");
        const auto w = doubles(field(j, "weights", where), where + ".weights");
        if (rows < 1 || cols < 1 || w.size() != static_cast<std::size_t>(rows) * cols)
          throw ParseError(where + ": weights do not match shape");
        Dense d{Mat(rows, cols), to_vec(doubles(field(j, "bias", where), where + ".bias"))};
        for (int r = 0; r < rows; ++r)
          for (int c = 0; c < cols; ++c) d.W(r, c) = w[static_cast<std::size_t>(r) * cols + c];
        layers.emplace_back(std::move(d));
      } else if (type == "conv2d") {
        Conv2D c;
        const json& in = field(j, "in_shape", where);
        if (!in.is_array() || in.size() != 3) throw ParseError(where + ": in_shape must be [c, h, w]");
        c.in_c = integer(in[0], where);
        c.in_h = integer(in[1], where);
        c.in_w = integer(in[2], where);
        c.out_c = integer(field(j, "out_channels", where), where + ".out_channels");
        const json& k = field(j, "kernel", where);
        if (!k.is_array() || k.size() != 2) throw ParseError(where + ": kernel must be [kh, kw]");
        c.kh = integer(k[0], where);
        c.kw = integer(k[1], where);
        c.stride = integer(field(j, "stride", where), where + ".stride");
        c.padding = integer(field(j, "padding", where), where + ".padding");
        c.kernels = doubles(field(j, "weights", where), where + ".weights");
        c.bias = to_vec(doubles(field(j, "bias", where), where + ".bias"));
        layers.emplace_back(std::move(c));
      } else if (type == "activation") {
        layers.emplace_back(ActivationLayer{activation_from(j, where)});
      } else if (type == "poly_activation") {
        PolyActivationLayer p;
        p.source = activation_from(field(j, "source", where), where + ".source");
        p.shared = field(j, "shared", where).get<bool>();
        for (const json& e : field(j, "polys", where)) {
          const auto dom = doubles(field(e, "domain", where), where + ".domain");
          if (dom.size() != 2) throw ParseError(where + ": domain must be [lo, hi]");
          CertifiedActivationPoly cp{cheb::ChebPoly(doubles(field(e, "coeffs", where), where + ".coeffs"), dom[0], dom[1]),
                                     field(e, "eps_pi", where).get<double>(), field(e, "eps_q", where).get<double>()};
          p.polys.push_back(std::move(cp));
        }
        layers.emplace_back(std::move(p));
      } else {
        throw ParseError(where + ": unknown layer type '" + type + "'");
      }
    }
    return Network(std::move(layers), std::move(lo), std::move(hi), shape);
  } catch (const json::exception& e) {
    throw ParseError(std::string("network file: ") + e.what());
  } catch (const DomainError& e) {
    throw ParseError(std::string("network file: ") + e.what());
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  out << text;
}

Network load_network(const std::string& path) { return parse_network(read_file(path)); }

void save_network(const Network& net, const std::string& path) { write_file(path, network_to_text(net)); }

}  // namespace certpoly::nn
