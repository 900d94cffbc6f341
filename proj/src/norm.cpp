#include "stair/norm.hpp"

namespace stair {

NormMode norm_mode_from_string(const std::string& s) {
  if (s == "full") return NormMode::Full;
  if (s == "mean_only") return NormMode::MeanOnly;
  if (s == "std_only") return NormMode::StdOnly;
  if (s == "none") return NormMode::None;
  throw std::invalid_argument("unknown norm mode: '" + s +
                              "' (expected full|mean_only|std_only|none)");
}

std::string to_string(NormMode m) {
  switch (m) {
    case NormMode::Full: return "full";
    case NormMode::MeanOnly: return "mean_only";
    case NormMode::StdOnly: return "std_only";
    case NormMode::None: return "none";
  }
  return "full";
}

}  // namespace stair
