#pragma once

#include <array>
#include <cctype>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

#include "modeforge/error.hpp"

namespace modeforge {

/// Travel modes in the fixed class order used by every model and report.
enum class Mode : std::size_t { Car = 0, Metro = 1, Bus = 2, Walk = 3 };

inline constexpr std::size_t kNumModes = 4;

inline constexpr std::array<Mode, kNumModes> kModes = {Mode::Car, Mode::Metro,
                                                       Mode::Bus, Mode::Walk};

inline constexpr std::size_t index_of(Mode m) { return static_cast<std::size_t>(m); }

inline constexpr Mode mode_at(std::size_t i) { return static_cast<Mode>(i); }

inline const char* to_string(Mode m) {
  switch (m) {
    case Mode::Car: return "Car";
    case Mode::Metro: return "Metro";
    case Mode::Bus: return "Bus";
    case Mode::Walk: return "Walk";
  }
  return "?";
}

/// Accepts the class names plus the demand-report aliases
/// (highway/auto, rail, non-motorized/walk-bike), case-insensitive.
inline std::optional<Mode> parse_mode(std::string_view s) {
  std::string k;
  for (char c : s) k.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (k == "car" || k == "highway" || k == "auto" || k == "drive") return Mode::Car;
  if (k == "metro" || k == "rail") return Mode::Metro;
  if (k == "bus") return Mode::Bus;
  if (k == "walk" || k == "non-motorized" || k == "nonmotorized" || k == "walk/bike" ||
      k == "bike")
    return Mode::Walk;
  return std::nullopt;
}

inline Mode parse_mode_or_throw(std::string_view s) {
  auto m = parse_mode(s);
  if (!m) throw Error(ErrorKind::Parse, "unknown travel mode '" + std::string(s) + "'");
  return *m;
}

}  // namespace modeforge
