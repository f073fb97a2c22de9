#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "gil/errors.hpp"
#include "gil/tensor.hpp"

namespace gil::io {

/// In-memory little-endian writer. Callers assemble the full byte image and
/// write it atomically, which keeps identical runs byte-identical.
struct Writer {
    std::vector<unsigned char> bytes;

    void u32(uint32_t v);
    void f32(float v);
    void f32_from(double v) { f32(static_cast<float>(v)); }
    void raw(const void* p, size_t n);
    void magic(const char m[4]) { raw(m, 4); }
};

/// Offset-tracking little-endian reader; every failure reports the byte
/// offset it happened at.
class Reader {
public:
    Reader(std::vector<unsigned char> bytes, std::string origin)
        : bytes_(std::move(bytes)), origin_(std::move(origin)) {}

    uint32_t u32();
    float f32();
    std::string str(size_t n);
    void expect_magic(const char m[4]);
    void expect_end();
    size_t offset() const { return pos_; }

private:
    void need(size_t n);
    std::vector<unsigned char> bytes_;
    std::string origin_;
    size_t pos_ = 0;
};

void write_file(const std::string& path, const std::vector<unsigned char>& bytes);
std::vector<unsigned char> read_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

/// Named tensor blocks: magic "GILM", u32 version, u32 block count, then per
/// block u32 name length + name bytes + u32 rank + dims + f32 data.
void save_named_tensors(const std::string& path,
                        const std::vector<std::pair<std::string, nn::Tensor>>& blocks);
std::vector<std::pair<std::string, nn::Tensor>> load_named_tensors(const std::string& path);

} // namespace gil::io
