#include "stair/backbone.hpp"

namespace stair {

Activation activation_from_string(const std::string& s) {
  if (s == "relu") return Activation::Relu;
  if (s == "none") return Activation::None;
  throw std::invalid_argument("unknown activation: '" + s + "' (expected relu|none)");
}

std::string to_string(Activation a) {
  return a == Activation::Relu ? "relu" : "none";
}

}  // namespace stair
