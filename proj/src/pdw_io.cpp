#include "wvsort/pdw_io.hpp"

#include <algorithm>
#include <cmath>
#include <array>
#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "wvsort/error.hpp"

namespace wvsort {
namespace {

constexpr std::array<std::string_view, 6> kColumns = {"toa_us", "rf_mhz", "pw_us", "pa_dbm", "doa_deg", "label"};

std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> cells;
    while (true) {
        const auto comma = line.find(',');
        auto cell = line.substr(0, comma);
        while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t')) cell.remove_prefix(1);
        while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\t' || cell.back() == '\r')) cell.remove_suffix(1);
        cells.push_back(cell);
        if (comma == std::string_view::npos) break;
        line = line.substr(comma + 1);
    }
    return cells;
}

template <typename T>
void put_le(std::ostream& out, T value) {
    std::array<unsigned char, sizeof(T)> bytes{};
    std::memcpy(bytes.data(), &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
    out.write(reinterpret_cast<const char*>(bytes.data()), sizeof(T));
}

template <typename T>
bool get_le(std::istream& in, T& value) {
    std::array<unsigned char, sizeof(T)> bytes{};
    if (!in.read(reinterpret_cast<char*>(bytes.data()), sizeof(T))) return false;
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
    std::memcpy(&value, bytes.data(), sizeof(T));
    return true;
}

bool is_csv(const std::filesystem::path& path) { return path.extension() == ".csv"; }

}  // namespace

void write_pdw_csv(std::ostream& out, const PdwStream& stream) {
    out << kCsvHeader << '\n';
    for (const auto& r : stream) {
        out << format_double(r.toa) << ',' << format_double(r.rf) << ',' << format_double(r.pw) << ','
            << format_double(r.pa) << ',' << format_double(r.doa) << ',' << r.label << '\n';
    }
}

PdwStream read_pdw_csv(std::istream& in, std::string_view origin) {
    PdwStream stream;
    std::string line;
    std::size_t line_no = 0;
    std::array<std::size_t, kColumns.size()> position{};
    bool have_header = false;
    const std::string where(origin);

    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto cells = split_commas(line);
        if (!have_header) {
            if (cells.size() != kColumns.size()) {
                for (auto name : kColumns) {
                    bool found = false;
                    for (auto cell : cells) found = found || cell == name;
                    if (!found) {
                        throw FormatError(where + ":" + std::to_string(line_no) + ": header is missing column `" +
                                          std::string(name) + "`; expected `" + std::string(kCsvHeader) + "`");
                    }
                }
                throw FormatError(where + ":" + std::to_string(line_no) + ": unexpected columns; expected `" +
                                  std::string(kCsvHeader) + "`");
            }
            std::array<bool, kColumns.size()> seen{};
            for (std::size_t c = 0; c < cells.size(); ++c) {
                std::size_t match = kColumns.size();
                for (std::size_t k = 0; k < kColumns.size(); ++k) {
                    if (cells[c] == kColumns[k]) match = k;
                }
                if (match == kColumns.size()) {
                    throw FormatError(where + ":" + std::to_string(line_no) + ": unknown column `" +
                                      std::string(cells[c]) + "`; expected `" + std::string(kCsvHeader) + "`");
                }
                if (seen[match]) {
                    throw FormatError(where + ":" + std::to_string(line_no) + ": duplicate column `" +
                                      std::string(cells[c]) + "`");
                }
                seen[match] = true;
                position[match] = c;
            }
            for (std::size_t k = 0; k < kColumns.size(); ++k) {
                if (!seen[k]) {
                    throw FormatError(where + ":" + std::to_string(line_no) + ": header is missing column `" +
                                      std::string(kColumns[k]) + "`; expected `" + std::string(kCsvHeader) + "`");
                }
            }
            have_header = true;
            continue;
        }

        if (cells.size() != kColumns.size()) {
            throw FormatError(where + ":" + std::to_string(line_no) + ": expected " + std::to_string(kColumns.size()) +
                              " fields, found " + std::to_string(cells.size()));
        }
        std::array<double, 5> values{};
        for (std::size_t k = 0; k < 5; ++k) {
            const auto parsed = parse_double(cells[position[k]]);
            if (!parsed || !std::isfinite(*parsed)) {
                throw FormatError(where + ":" + std::to_string(line_no) + ": bad value for `" +
                                  std::string(kColumns[k]) + "`");
            }
            values[k] = *parsed;
        }
        const auto label_cell = cells[position[5]];
        unsigned long label = 0;
        auto [ptr, ec] = std::from_chars(label_cell.data(), label_cell.data() + label_cell.size(), label);
        if (ec != std::errc{} || ptr != label_cell.data() + label_cell.size() || label_cell.empty() || label > 0xFFFF) {
            throw FormatError(where + ":" + std::to_string(line_no) + ": bad value for `label`");
        }
        stream.push_back({values[0], values[1], values[2], values[3], values[4], static_cast<Label>(label)});
    }
    return stream;
}

void write_pdw_binary(std::ostream& out, const PdwStream& stream) {
    if (stream.size() > 0xFFFFFFFFULL) throw FormatError("binary PDW format holds at most 2^32-1 records");
    out.write(kBinaryMagic.data(), static_cast<std::streamsize>(kBinaryMagic.size()));
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(stream.size()));
    for (const auto& r : stream) {
        put_le(out, r.toa);
        put_le(out, r.rf);
        put_le(out, r.pw);
        put_le(out, r.pa);
        put_le(out, r.doa);
        put_le<std::uint16_t>(out, r.label);
    }
}

PdwStream read_pdw_binary(std::istream& in, std::string_view origin) {
    PdwStream stream;
    const std::string where(origin);
    std::array<char, 4> magic{};
    if (!in.read(magic.data(), magic.size())) {
        if (in.gcount() == 0) return stream;
        throw FormatError(where + ": truncated header");
    }
    if (std::string_view(magic.data(), magic.size()) != kBinaryMagic) throw FormatError(where + ": bad magic, expected PDW1");
    std::uint32_t count = 0;
    if (!get_le(in, count)) throw FormatError(where + ": truncated record count");
    stream.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        PdwRecord r;
        std::uint16_t label = 0;
        if (!get_le(in, r.toa) || !get_le(in, r.rf) || !get_le(in, r.pw) || !get_le(in, r.pa) || !get_le(in, r.doa) ||
            !get_le(in, label)) {
            throw FormatError(where + ": truncated at record " + std::to_string(i));
        }
        r.label = label;
        stream.push_back(r);
    }
    return stream;
}

void write_pdw(const std::filesystem::path& path, const PdwStream& stream) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot write `" + path.string() + "`");
    if (is_csv(path)) {
        write_pdw_csv(out, stream);
    } else {
        write_pdw_binary(out, stream);
    }
}

PdwStream read_pdw(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open `" + path.string() + "`");
    return is_csv(path) ? read_pdw_csv(in, path.string()) : read_pdw_binary(in, path.string());
}

}  // namespace wvsort
