#include "ocm/units.hpp"

#include <cctype>
#include <charconv>
#include <string>

#include <fmt/format.h>

#include "ocm/errors.hpp"

namespace ocm::units {

namespace {

struct Quantity {
  double value = 0.0;
  std::string suffix;
};

Quantity split(std::string_view text) {
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) text.remove_prefix(1);
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.remove_suffix(1);
  Quantity q;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(first, last, q.value);
  if (ec != std::errc{} || ptr == first) {
    fail(ErrorKind::Usage, fmt::format("cannot parse quantity '{}'", text));
  }
  std::string_view rest(ptr, static_cast<std::size_t>(last - ptr));
  while (!rest.empty() && std::isspace(static_cast<unsigned char>(rest.front()))) rest.remove_prefix(1);
  q.suffix = std::string(rest);
  return q;
}

}  // namespace

double parse_length_um(std::string_view text, std::string_view default_suffix) {
  Quantity q = split(text);
  if (q.suffix.empty()) q.suffix = default_suffix;
  if (q.suffix == "nm") return q.value * 1e-3;
  if (q.suffix == "um" || q.suffix == "µm") return q.value;
  if (q.suffix == "mm") return q.value * 1e3;
  if (q.suffix == "cm") return q.value * 1e4;
  if (q.suffix == "m") return q.value * 1e6;
  fail(ErrorKind::Usage, fmt::format("unknown length unit in '{}'", text));
}

double parse_wavelength_nm(std::string_view text) { return parse_length_um(text, "nm") * 1e3; }

double parse_frequency_mhz(std::string_view text) {
  Quantity q = split(text);
  if (q.suffix.empty() || q.suffix == "MHz") return q.value;
  if (q.suffix == "kHz") return q.value * 1e-3;
  if (q.suffix == "Hz") return q.value * 1e-6;
  if (q.suffix == "GHz") return q.value * 1e3;
  fail(ErrorKind::Usage, fmt::format("unknown frequency unit in '{}'", text));
}

}  // namespace ocm::units
