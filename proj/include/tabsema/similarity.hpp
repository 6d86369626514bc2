#pragma once

#include <string_view>

namespace tabsema {

/// Jaro similarity in [0,1]. Matching window is floor(max(|a|,|b|)/2) - 1;
/// two empty strings are identical (1), one empty string matches nothing (0).
double jaro_similarity(std::string_view a, std::string_view b);

/// Largest Jaro value any pair of strings with these lengths can reach.
double jaro_upper_bound(std::size_t len_a, std::size_t len_b) noexcept;

}  // namespace tabsema
