#include "hyponli/csv.hpp"

#include <cmath>

#include <fmt/format.h>

namespace hyponli {

std::string csv_field(std::string_view text) {
  if (text.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(text);
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

double round_half_away(double value, int decimals) {
  const double scale = std::pow(10.0, decimals);
  // Nudge by a few ulps so values printed as ...5 in the source table (and
  // stored as ...4999999) round the way a reader expects.
  const double scaled = value * scale;
  const double nudged = scaled + std::copysign(std::abs(scaled) * 4e-15, scaled);
  return std::round(nudged) / scale;
}

std::string fixed(double value, int decimals) {
  double r = round_half_away(value, decimals);
  if (r == 0.0) r = 0.0;
  return fmt::format("{:.{}f}", r, decimals);
}

std::string signed_fixed(double value, int decimals) {
  const std::string body = fixed(value, decimals);
  if (body.front() == '-') return body;
  if (round_half_away(value, decimals) == 0.0) return body;
  return "+" + body;
}

}  // namespace hyponli
