#include "wvsort/nn/checkpoint.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "wvsort/error.hpp"

namespace wvsort::nn {
namespace {

template <typename T>
void put(std::ostream& out, T value) {
    std::array<unsigned char, sizeof(T)> bytes{};
    std::memcpy(bytes.data(), &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
    out.write(reinterpret_cast<const char*>(bytes.data()), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
    std::array<unsigned char, sizeof(T)> bytes{};
    if (!in.read(reinterpret_cast<char*>(bytes.data()), sizeof(T))) throw FormatError("checkpoint: truncated");
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
    T value;
    std::memcpy(&value, bytes.data(), sizeof(T));
    return value;
}

std::string get_string(std::istream& in, std::uint32_t length) {
    std::string s(length, '\0');
    if (length && !in.read(s.data(), length)) throw FormatError("checkpoint: truncated");
    return s;
}

}  // namespace

void write_checkpoint(std::ostream& out, const Checkpoint& checkpoint) {
    out.write("WVCK", 4);
    put<std::uint32_t>(out, kCheckpointVersion);
    const std::string text = checkpoint.config.to_string();
    put<std::uint32_t>(out, static_cast<std::uint32_t>(text.size()));
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(checkpoint.tensors.size()));
    for (const auto& [name, tensor] : checkpoint.tensors) {
        put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
        out.write(name.data(), static_cast<std::streamsize>(name.size()));
        put<std::uint32_t>(out, static_cast<std::uint32_t>(tensor.rank()));
        for (auto extent : tensor.shape()) put<std::uint32_t>(out, static_cast<std::uint32_t>(extent));
        for (double v : tensor.data()) put<double>(out, v);
    }
}

Checkpoint read_checkpoint(std::istream& in) {
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, "WVCK", 4) != 0) throw FormatError("checkpoint: bad magic, expected WVCK");
    const auto version = get<std::uint32_t>(in);
    if (version != kCheckpointVersion) throw FormatError("checkpoint: unsupported version " + std::to_string(version));
    Checkpoint cp;
    cp.config = KeyValueConfig::parse(get_string(in, get<std::uint32_t>(in)), "<checkpoint>");
    const auto count = get<std::uint32_t>(in);
    for (std::uint32_t t = 0; t < count; ++t) {
        std::string name = get_string(in, get<std::uint32_t>(in));
        const auto rank = get<std::uint32_t>(in);
        Shape shape(rank);
        for (auto& e : shape) e = get<std::uint32_t>(in);
        std::vector<double> values(shape_size(shape));
        for (auto& v : values) v = get<double>(in);
        cp.tensors.emplace_back(std::move(name), Tensor::from(std::move(shape), std::move(values)));
    }
    return cp;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot write checkpoint `" + path.string() + "`");
    write_checkpoint(out, checkpoint);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open checkpoint `" + path.string() + "`");
    return read_checkpoint(in);
}

}  // namespace wvsort::nn
