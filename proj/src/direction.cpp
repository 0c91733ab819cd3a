#include "relightkit/direction.hpp"

#include <stdexcept>

namespace relightkit {

namespace {
constexpr std::array<std::string_view, 8> kLabels = {"N", "NE", "E", "SE", "S", "SW", "W", "NW"};
}

Direction direction_from_index(int index) {
  if (index < 0 || index > 7) throw std::out_of_range("direction index " + std::to_string(index));
  return static_cast<Direction>(index);
}

std::string_view label(Direction d) { return kLabels[static_cast<std::size_t>(index_of(d))]; }

std::optional<Direction> parse_direction(std::string_view token) {
  for (std::size_t i = 0; i < kLabels.size(); ++i)
    if (kLabels[i] == token) return static_cast<Direction>(i);
  return std::nullopt;
}

Direction direction_or_throw(std::string_view token) {
  if (auto d = parse_direction(token)) return *d;
  throw std::invalid_argument("unknown direction token " + std::string(token));
}

std::string valid_direction_list() {
  std::string out;
  for (auto l : kLabels) {
    if (!out.empty()) out += ", ";
    out += l;
  }
  return out;
}

}  // namespace relightkit
