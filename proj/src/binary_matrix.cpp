#include "codetopics/binary_matrix.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace codetopics::io {

namespace {

void put_u64_le(std::ostream& out, std::uint64_t v) {
    char bytes[8];
    for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out.write(bytes, 8);
}

std::uint64_t get_u64_le(const unsigned char* p) {
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
    return v;
}

}  // namespace

void write_f32_blob(const std::filesystem::path& path, const nlohmann::json& header,
                    std::span<const float> values) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    const std::string head = header.dump();
    put_u64_le(out, head.size());
    out.write(head.data(), static_cast<std::streamsize>(head.size()));
    std::vector<char> bytes(values.size() * 4);
    for (std::size_t i = 0; i < values.size(); ++i) {
        const auto bits = std::bit_cast<std::uint32_t>(values[i]);
        for (int b = 0; b < 4; ++b) bytes[4 * i + b] = static_cast<char>((bits >> (8 * b)) & 0xff);
    }
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("short write to " + path.string());
}

F32Blob read_f32_blob(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::vector<unsigned char> data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (data.size() < 8) throw std::runtime_error(path.string() + ": truncated header");
    const std::uint64_t head_len = get_u64_le(data.data());
    if (head_len > data.size() - 8) throw std::runtime_error(path.string() + ": header length exceeds file");
    F32Blob blob;
    blob.header = nlohmann::json::parse(data.begin() + 8, data.begin() + 8 + static_cast<std::ptrdiff_t>(head_len));
    const std::size_t body = data.size() - 8 - head_len;
    if (body % 4 != 0) throw std::runtime_error(path.string() + ": payload is not a whole number of floats");
    blob.values.resize(body / 4);
    const unsigned char* p = data.data() + 8 + head_len;
    for (std::size_t i = 0; i < blob.values.size(); ++i) {
        std::uint32_t bits = 0;
        for (int b = 3; b >= 0; --b) bits = (bits << 8) | p[4 * i + b];
        blob.values[i] = std::bit_cast<float>(bits);
    }
    return blob;
}

}  // namespace codetopics::io
