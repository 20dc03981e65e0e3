#pragma once

#include <string>

#include "certpoly/nn/network.hpp"

namespace certpoly::nn {

// Structured text (JSON) format; see docs/FORMATS.md. Errors are ParseError or ShapeError.
Network parse_network(const std::string& text);
std::string network_to_text(const Network& net);

Network load_network(const std::string& path);
void save_network(const Network& net, const std::string& path);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& text);

}  // namespace certpoly::nn
