#pragma once

// Bundled word stock for the synthetic systems.

#include <array>
#include <span>
#include <string_view>

namespace zerolog::data::wordstock {

using Synonyms = std::array<std::string_view, 4>;

std::span<const Synonyms> benign();
std::span<const Synonyms> failure();
std::span<const std::string_view> components();
std::span<const std::string_view> hosts();
/// Words that masked parameters normalize to.
std::span<const std::string_view> placeholders();

}  // namespace zerolog::data::wordstock
