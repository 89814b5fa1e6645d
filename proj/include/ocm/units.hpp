#pragma once

#include <string_view>

namespace ocm::units {

enum class Dimension { Length, Wavelength, Frequency };

/// Parses "50um", "1cm", "5 mm", "780nm", "0.98MHz". Lengths return um,
/// wavelengths nm, frequencies MHz. A bare number is taken in the given
/// default unit suffix.
double parse_length_um(std::string_view text, std::string_view default_suffix = "um");
double parse_wavelength_nm(std::string_view text);
double parse_frequency_mhz(std::string_view text);

}  // namespace ocm::units
