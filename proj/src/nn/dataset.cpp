#include "certpoly/nn/dataset.hpp"

#include <json.hpp>

#include "certpoly/common/error.hpp"
#include "certpoly/nn/network_io.hpp"

namespace certpoly::nn {

using json = nlohmann::ordered_json;

Dataset parse_dataset(const std::string& text, const Vec& lo, const Vec& hi) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("dataset file is not valid JSON: ") + e.what());
  }
  if (!root.is_object() || root.value("format", "") != "certpoly.dataset") throw ParseError("not a certpoly.dataset file");
  Dataset d;
  try {
    for (const auto& r : root.at("rows")) {
      const auto v = r.get<std::vector<double>>();
      if (static_cast<Eigen::Index>(v.size()) != lo.size())
        throw ParseError("dataset row " + std::to_string(d.rows.size()) + " has the wrong length");
      Vec x = Eigen::Map<const Vec>(v.data(), v.size());
      for (Eigen::Index i = 0; i < x.size(); ++i)
        if (!(x(i) >= lo(i) && x(i) <= hi(i)))
          throw ParseError("dataset row " + std::to_string(d.rows.size()) + " lies outside the input domain");
      d.rows.push_back(std::move(x));
    }
    if (root.contains("targets")) d.targets = root.at("targets").get<std::vector<double>>();
    if (root.contains("normalization")) {
      d.norm_offset = root.at("normalization").at("offset").get<std::vector<double>>();
      d.norm_scale = root.at("normalization").at("scale").get<std::vector<double>>();
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("dataset file: ") + e.what());
  }
  if (!d.targets.empty() && d.targets.size() != d.rows.size()) throw ParseError("dataset targets do not match rows");
  return d;
}

std::string dataset_to_text(const Dataset& data) {
  json root;
  root["format"] = "certpoly.dataset";
  json rows = json::array();
  for (const auto& r : data.rows) rows.push_back(std::vector<double>(r.data(), r.data() + r.size()));
  root["rows"] = std::move(rows);
  if (!data.targets.empty()) root["targets"] = data.targets;
  if (!data.norm_offset.empty()) root["normalization"] = {{"offset", data.norm_offset}, {"scale", data.norm_scale}};
  return root.dump(1) + "\n";
}

Dataset load_dataset(const std::string& path, const Vec& lo, const Vec& hi) {
  return parse_dataset(read_file(path), lo, hi);
}

}  // namespace certpoly::nn
