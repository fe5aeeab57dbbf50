#include "tem/binio.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include <zlib.h>

#include "tem/common.hpp"

namespace tem::binio {

std::uint32_t crc32(std::string_view data) {
    uLong c = ::crc32(0L, Z_NULL, 0);
    c = ::crc32(c, reinterpret_cast<const Bytef*>(data.data()),
                static_cast<uInt>(data.size()));
    return static_cast<std::uint32_t>(c);
}

void Writer::u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void Writer::f64(double v) {
    std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

void Writer::raw(std::string_view bytes) { buf_.append(bytes); }

void Writer::str(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    buf_.append(s);
}

std::string Writer::finish() const {
    std::string out = buf_;
    std::uint32_t c = checksum();
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((c >> (8 * i)) & 0xff));
    return out;
}

Reader::Reader(std::string_view bytes, std::string what)
    : bytes_(bytes), what_(std::move(what)) {}

const char* Reader::take(std::size_t n) {
    if (bytes_.size() < 4 || pos_ + n > bytes_.size() - 4) {
        throw Error(what_ + ": truncated file");
    }
    const char* p = bytes_.data() + pos_;
    pos_ += n;
    return p;
}

void Reader::expect_magic(std::string_view magic) {
    const char* p = take(magic.size());
    if (std::string_view(p, magic.size()) != magic) {
        throw Error(what_ + ": bad magic, not a \"" + std::string(magic) + "\" file");
    }
}

std::uint32_t Reader::u32() {
    const char* p = take(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(p[i])) << (8 * i);
    return v;
}

double Reader::f64() {
    const char* p = take(8);
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(p[i])) << (8 * i);
    return std::bit_cast<double>(bits);
}

std::string Reader::str(std::size_t max_len) {
    std::uint32_t len = u32();
    if (len > max_len) throw Error(what_ + ": truncated file");
    const char* p = take(len);
    return std::string(p, len);
}

void Reader::verify_crc() {
    if (bytes_.size() < 4 || pos_ != bytes_.size() - 4) {
        throw Error(what_ + ": truncated file");
    }
    std::uint32_t stored = 0;
    for (int i = 0; i < 4; ++i) {
        stored |= static_cast<std::uint32_t>(
                      static_cast<unsigned char>(bytes_[pos_ + i]))
                  << (8 * i);
    }
    std::uint32_t actual = crc32(bytes_.substr(0, pos_));
    if (stored != actual) throw Error(what_ + ": checksum mismatch");
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return bytes;
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("write failed: " + path.string());
}

void write_file_atomic(const std::filesystem::path& path, std::string_view bytes) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    write_file(tmp, bytes);
    std::filesystem::rename(tmp, path);
}

}  // namespace tem::binio
