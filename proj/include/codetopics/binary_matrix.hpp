#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

namespace codetopics::io {

// On-disk layout shared by embedding caches and model matrices:
//   u64 little-endian N | N bytes of JSON header | float32 little-endian values
struct F32Blob {
    nlohmann::json header;
    std::vector<float> values;
};

void write_f32_blob(const std::filesystem::path& path, const nlohmann::json& header,
                    std::span<const float> values);
F32Blob read_f32_blob(const std::filesystem::path& path);

}  // namespace codetopics::io
