#pragma once

#include <filesystem>
#include <iosfwd>

#include "wvsort/pdw.hpp"

namespace wvsort {

/// CSV layout: header `toa_us,rf_mhz,pw_us,pa_dbm,doa_deg,label`, one pulse
/// per row, `.` decimal separator. Values are written in shortest
/// round-trip form, so a CSV round trip is lossless.
inline constexpr std::string_view kCsvHeader = "toa_us,rf_mhz,pw_us,pa_dbm,doa_deg,label";

/// Binary layout, little-endian:
///   magic "PDW1" | u32 record count | count x (f64 toa, rf, pw, pa, doa | u16 label)
inline constexpr std::string_view kBinaryMagic = "PDW1";

void write_pdw_csv(std::ostream& out, const PdwStream& stream);
PdwStream read_pdw_csv(std::istream& in, std::string_view origin = "<stream>");
void write_pdw_binary(std::ostream& out, const PdwStream& stream);
PdwStream read_pdw_binary(std::istream& in, std::string_view origin = "<stream>");

/// Dispatch on extension: `.csv` is CSV, anything else binary.
void write_pdw(const std::filesystem::path& path, const PdwStream& stream);
PdwStream read_pdw(const std::filesystem::path& path);

}  // namespace wvsort
