#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <optional>
#include <string>

namespace stablecut {

using Int = boost::multiprecision::cpp_int;
using Rat = boost::multiprecision::cpp_rational;

// "p" when the denominator is 1, otherwise "p/q" in lowest terms
std::string rat_to_string(const Rat& r);

// accepts "p", "p/q", and plain decimals like "0.25" or "-3.5"
std::optional<Rat> rat_from_string(const std::string& s);

// fixed-point decimal rendering, rounded toward zero
std::string rat_to_decimal(const Rat& r, int digits);

}  // namespace stablecut
