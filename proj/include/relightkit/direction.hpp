#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace relightkit {

// Compass light position; enumerator order is clockwise from North in 45° steps.
enum class Direction : std::uint8_t { N, NE, E, SE, S, SW, W, NW };

inline constexpr std::array<Direction, 8> kAllDirections = {
    Direction::N, Direction::NE, Direction::E, Direction::SE,
    Direction::S, Direction::SW, Direction::W, Direction::NW};

constexpr int index_of(Direction d) { return static_cast<int>(d); }
constexpr int azimuth_deg(Direction d) { return 45 * index_of(d); }

Direction direction_from_index(int index);
std::string_view label(Direction d);
std::optional<Direction> parse_direction(std::string_view token);
// Throws std::invalid_argument("unknown direction token <token>").
Direction direction_or_throw(std::string_view token);
std::string valid_direction_list();

// Smallest angle between two compass positions, in {0, 45, 90, 135, 180}.
constexpr int circular_distance(Direction a, Direction b) {
  const int diff = azimuth_deg(a) > azimuth_deg(b) ? azimuth_deg(a) - azimuth_deg(b)
                                                   : azimuth_deg(b) - azimuth_deg(a);
  return diff < 360 - diff ? diff : 360 - diff;
}

// Next position clockwise.
constexpr Direction clockwise(Direction d) { return static_cast<Direction>((index_of(d) + 1) % 8); }

}  // namespace relightkit
