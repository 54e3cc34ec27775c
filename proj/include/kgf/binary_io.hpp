#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "kgf/types.hpp"

namespace kgf {

// Little-endian binary readers/writers for the on-disk formats. The reader
// tracks its byte offset so format errors can name the exact position of the
// first bad read.

class BinaryWriter {
public:
    explicit BinaryWriter(std::ostream& out) : out_(out) {}

    void u8(std::uint8_t v) { raw(&v, 1); }
    void u32(std::uint32_t v) {
        std::uint8_t b[4];
        for (int i = 0; i < 4; ++i) b[i] = static_cast<std::uint8_t>(v >> (8 * i));
        raw(b, 4);
    }
    void u64(std::uint64_t v) {
        std::uint8_t b[8];
        for (int i = 0; i < 8; ++i) b[i] = static_cast<std::uint8_t>(v >> (8 * i));
        raw(b, 8);
    }
    void f32(float v) {
        std::uint32_t bits;
        std::memcpy(&bits, &v, 4);
        u32(bits);
    }
    void f64(double v) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, 8);
        u64(bits);
    }
    void bytes(std::string_view s) { raw(s.data(), s.size()); }
    void str(std::string_view s) {
        u32(static_cast<std::uint32_t>(s.size()));
        bytes(s);
    }
    void f32_array(const std::vector<float>& v) {
        if constexpr (std::endian::native == std::endian::little) {
            raw(v.data(), v.size() * 4);
        } else {
            for (float x : v) f32(x);
        }
    }
    std::uint64_t offset() const { return offset_; }

private:
    void raw(const void* p, std::size_t n) {
        out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
        offset_ += n;
        if (!out_) throw IoError("write failed at byte " + std::to_string(offset_));
    }
    std::ostream& out_;
    std::uint64_t offset_ = 0;
};

class BinaryReader {
public:
    explicit BinaryReader(std::istream& in, std::string name = "stream")
        : in_(in), name_(std::move(name)) {}

    std::uint8_t u8() {
        std::uint8_t v;
        raw(&v, 1);
        return v;
    }
    std::uint32_t u32() {
        std::uint8_t b[4];
        raw(b, 4);
        std::uint32_t v = 0;
        for (int i = 3; i >= 0; --i) v = (v << 8) | b[i];
        return v;
    }
    std::uint64_t u64() {
        std::uint8_t b[8];
        raw(b, 8);
        std::uint64_t v = 0;
        for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
        return v;
    }
    float f32() {
        std::uint32_t bits = u32();
        float v;
        std::memcpy(&v, &bits, 4);
        return v;
    }
    double f64() {
        std::uint64_t bits = u64();
        double v;
        std::memcpy(&v, &bits, 8);
        return v;
    }
    std::string str(std::uint32_t max_len = 1u << 24) {
        std::uint64_t at = offset_;
        std::uint32_t len = u32();
        if (len > max_len)
            throw FormatError(name_ + ": implausible string length", at);
        std::string s(len, '\0');
        raw(s.data(), len);
        return s;
    }
    void f32_array(std::vector<float>& v, std::size_t n) {
        v.resize(n);
        if constexpr (std::endian::native == std::endian::little) {
            raw(v.data(), n * 4);
        } else {
            for (std::size_t i = 0; i < n; ++i) v[i] = f32();
        }
    }
    void expect_magic(const char (&magic)[5]) {
        std::uint64_t at = offset_;
        char got[4];
        raw(got, 4);
        if (std::memcmp(got, magic, 4) != 0)
            throw FormatError(name_ + ": bad magic, expected " +
                                  std::string(magic, 4),
                              at);
    }
    // True when the stream is exactly exhausted.
    bool at_eof() {
        return in_.peek() == std::char_traits<char>::eof();
    }
    std::uint64_t offset() const { return offset_; }

private:
    void raw(void* p, std::size_t n) {
        in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(in_.gcount()) != n)
            throw FormatError(name_ + ": truncated, wanted " +
                                  std::to_string(n) + " bytes",
                              offset_);
        offset_ += n;
    }
    std::istream& in_;
    std::string name_;
    std::uint64_t offset_ = 0;
};

}  // namespace kgf
