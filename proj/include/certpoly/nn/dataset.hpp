#pragma once

#include <string>
#include <vector>

#include "certpoly/nn/network.hpp"

namespace certpoly::nn {

struct Dataset {
  std::vector<Vec> rows;
  std::vector<double> targets;     // optional, empty or one per row
  std::vector<double> norm_offset;  // raw = row * norm_scale + norm_offset, informational
  std::vector<double> norm_scale;

  std::size_t size() const { return rows.size(); }
};

// Rejects rows outside [lo, hi].
Dataset parse_dataset(const std::string& text, const Vec& lo, const Vec& hi);
std::string dataset_to_text(const Dataset& data);
Dataset load_dataset(const std::string& path, const Vec& lo, const Vec& hi);

}  // namespace certpoly::nn
