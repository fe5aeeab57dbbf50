#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace tem::binio {

std::uint32_t crc32(std::string_view data);

/// Accumulates a little-endian binary payload; the file trailer is the CRC32
/// of everything before it.
class Writer {
public:
    void u32(std::uint32_t v);
    void f64(double v);
    void raw(std::string_view bytes);
    void str(std::string_view s);  // u32 length + UTF-8 bytes

    /// Payload + 4-byte CRC trailer.
    std::string finish() const;
    std::uint32_t checksum() const { return crc32(buf_); }
    const std::string& payload() const { return buf_; }

private:
    std::string buf_;
};

/// Bounds-checked reader over a complete file image. Verifies the CRC trailer
/// after the structure has been parsed, so truncation and corruption are
/// reported as distinct errors.
class Reader {
public:
    Reader(std::string_view bytes, std::string what);

    void expect_magic(std::string_view magic);
    std::uint32_t u32();
    double f64();
    std::string str(std::size_t max_len = 1u << 20);

    /// Call once all fields are consumed: exactly 4 bytes (the CRC) must
    /// remain and must match the payload.
    void verify_crc();

private:
    std::string_view bytes_;
    std::size_t pos_ = 0;
    std::string what_;

    const char* take(std::size_t n);
};

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);
/// Writes to <path>.tmp then renames over path.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

}  // namespace tem::binio
