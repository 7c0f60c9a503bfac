#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

namespace persum {

enum class Perspective { Cause, Suggestion, Experience, Information, Question };

inline constexpr std::size_t kPerspectiveCount = 5;

// Declaration order of the enum.
inline constexpr std::array<Perspective, kPerspectiveCount> kAllPerspectives = {
    Perspective::Cause, Perspective::Suggestion, Perspective::Experience,
    Perspective::Information, Perspective::Question};

// Order used whenever perspectives are listed in output text.
inline constexpr std::array<Perspective, kPerspectiveCount> kOutputOrder = {
    Perspective::Experience, Perspective::Information, Perspective::Cause,
    Perspective::Suggestion, Perspective::Question};

constexpr std::size_t index_of(Perspective p) { return static_cast<std::size_t>(p); }

std::string_view to_string(Perspective p);

// Case-insensitive, surrounding whitespace ignored. nullopt for labels outside the closed set.
std::optional<Perspective> try_parse_perspective(std::string_view label);

// Throws ValidationError for unknown labels.
Perspective parse_perspective(std::string_view label);

}  // namespace persum
