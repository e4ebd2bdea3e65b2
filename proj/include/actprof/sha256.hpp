#pragma once

// SHA-256 (FIPS 180-4), used for artifact digests in run manifests.

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>

namespace actprof::util {

class sha256 {
public:
    sha256() { reset(); }

    void reset();
    void update(std::span<const std::uint8_t> data);
    std::array<std::uint8_t, 32> digest();

private:
    void process_block(const std::uint8_t* block);

    std::uint32_t h_[8];
    std::uint8_t buffer_[64];
    std::size_t buffered_ = 0;
    std::uint64_t total_bits_ = 0;
};

std::string sha256_hex(std::span<const std::uint8_t> data);
std::string sha256_hex(std::string_view text);
std::string sha256_file_hex(const std::filesystem::path& path);

} // namespace actprof::util
