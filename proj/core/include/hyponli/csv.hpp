#pragma once

#include <string>
#include <string_view>

namespace hyponli {

// Quotes a CSV field when it holds a comma, quote or line break.
std::string csv_field(std::string_view text);

// Round half away from zero at the given number of decimals.
double round_half_away(double value, int decimals);

// Fixed-point text after round_half_away; never prints "-0.00".
std::string fixed(double value, int decimals);
// As fixed(), with an explicit '+' on positive values.
std::string signed_fixed(double value, int decimals);

}  // namespace hyponli
