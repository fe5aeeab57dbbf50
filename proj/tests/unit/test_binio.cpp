#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>

#include "tem/binio.hpp"
#include "tem/common.hpp"

using namespace tem;

TEST_CASE("crc32 matches known vectors") {
    // Standard check value for the IEEE polynomial.
    CHECK(binio::crc32("123456789") == 0xCBF43926u);
    CHECK(binio::crc32("") == 0u);
}

TEST_CASE("writer/reader round-trips every field type") {
    binio::Writer w;
    w.raw("MGIC");
    w.u32(42);
    w.f64(-0.125);
    w.f64(1e300);
    w.str("hello");
    w.str("");
    std::string bytes = w.finish();

    binio::Reader r(bytes, "test");
    r.expect_magic("MGIC");
    CHECK(r.u32() == 42);
    CHECK(r.f64() == -0.125);
    CHECK(r.f64() == 1e300);
    CHECK(r.str() == "hello");
    CHECK(r.str().empty());
    r.verify_crc();
}

TEST_CASE("doubles round-trip bit-exactly") {
    double values[] = {0.0, -0.0, 1.0 / 3.0, 2.2250738585072014e-308, 1.7976931348623157e308};
    binio::Writer w;
    for (double v : values) {
        w.f64(v);
    }
    std::string bytes = w.finish();
    binio::Reader r(bytes, "test");
    for (double v : values) {
        double got = r.f64();
        CHECK(std::memcmp(&got, &v, sizeof v) == 0);
    }
}

TEST_CASE("wrong magic is a format error") {
    binio::Writer w;
    w.raw("ABCD");
    w.u32(1);
    std::string bytes = w.finish();
    binio::Reader r(bytes, "test");
    CHECK_THROWS_WITH_AS(r.expect_magic("WXYZ"), doctest::Contains("not a \"WXYZ\" file"),
                         Error);
}

TEST_CASE("truncation and corruption are distinct errors") {
    binio::Writer w;
    w.raw("MGIC");
    w.u32(7);
    w.str("payload");
    std::string bytes = w.finish();

    SUBCASE("truncated file reports truncation") {
        std::string cut = bytes.substr(0, bytes.size() - 6);
        binio::Reader r(cut, "test");
        r.expect_magic("MGIC");
        CHECK(r.u32() == 7);
        CHECK_THROWS_WITH_AS(r.str(), doctest::Contains("truncated"), Error);
    }

    SUBCASE("flipped payload byte reports checksum mismatch") {
        std::string bad = bytes;
        bad[5] ^= 0x01;
        binio::Reader r(bad, "test");
        r.expect_magic("MGIC");
        (void)r.u32();
        (void)r.str();
        CHECK_THROWS_WITH_AS(r.verify_crc(), doctest::Contains("checksum mismatch"), Error);
    }

    SUBCASE("flipped trailer byte reports checksum mismatch") {
        std::string bad = bytes;
        bad[bad.size() - 1] ^= 0xFF;
        binio::Reader r(bad, "test");
        r.expect_magic("MGIC");
        (void)r.u32();
        (void)r.str();
        CHECK_THROWS_WITH_AS(r.verify_crc(), doctest::Contains("checksum mismatch"), Error);
    }
}

TEST_CASE("oversized string length is rejected") {
    binio::Writer w;
    w.u32(0xFFFFFFFFu);  // claimed string length far past the buffer
    std::string bytes = w.finish();
    binio::Reader r(bytes, "test");
    CHECK_THROWS_AS(r.str(), Error);
}

TEST_CASE("atomic write replaces the target completely") {
    namespace fs = std::filesystem;
    fs::path dir = fs::temp_directory_path() / "tem_binio_test";
    fs::create_directories(dir);
    fs::path target = dir / "file.bin";
    binio::write_file_atomic(target, "first");
    binio::write_file_atomic(target, "second");
    CHECK(binio::read_file(target) == "second");
    CHECK_FALSE(fs::exists(target.string() + ".tmp"));
    fs::remove_all(dir);
}

TEST_CASE("reading a missing file names the path") {
    CHECK_THROWS_WITH_AS(binio::read_file("/nonexistent/tem/file.bin"),
                         doctest::Contains("/nonexistent/tem/file.bin"), Error);
}
