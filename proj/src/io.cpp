#include "gil/io.hpp"

#include <cstring>
#include <fstream>

namespace gil::io {

void Writer::u32(uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xff));
}

void Writer::f32(float v) {
    uint32_t u;
    std::memcpy(&u, &v, 4);
    u32(u);
}

void Writer::raw(const void* p, size_t n) {
    const unsigned char* b = static_cast<const unsigned char*>(p);
    bytes.insert(bytes.end(), b, b + n);
}

void Reader::need(size_t n) {
    if (pos_ + n > bytes_.size())
        throw FormatError(origin_ + ": truncated at byte " + std::to_string(pos_) + " (need " +
                          std::to_string(n) + " more, have " + std::to_string(bytes_.size() - pos_) +
                          ")");
}

uint32_t Reader::u32() {
    need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
}

float Reader::f32() {
    uint32_t u = u32();
    float v;
    std::memcpy(&v, &u, 4);
    return v;
}

std::string Reader::str(size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
}

void Reader::expect_magic(const char m[4]) {
    need(4);
    if (std::memcmp(bytes_.data() + pos_, m, 4) != 0)
        throw FormatError(origin_ + ": bad magic at byte " + std::to_string(pos_) + ", expected '" +
                          std::string(m, 4) + "'");
    pos_ += 4;
}

void Reader::expect_end() {
    if (pos_ != bytes_.size())
        throw FormatError(origin_ + ": trailing bytes at offset " + std::to_string(pos_));
}

void write_file(const std::string& path, const std::vector<unsigned char>& bytes) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw InputError("cannot open for writing: " + path);
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw InputError("write failed: " + path);
}

std::vector<unsigned char> read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw InputError("cannot open: " + path);
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(f)),
                                     std::istreambuf_iterator<char>());
    return bytes;
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw InputError("cannot open for writing: " + path);
    f << text;
    if (!f) throw InputError("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw InputError("cannot open: " + path);
    return std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

void save_named_tensors(const std::string& path,
                        const std::vector<std::pair<std::string, nn::Tensor>>& blocks) {
    Writer w;
    w.magic("GILM");
    w.u32(1);
    w.u32(static_cast<uint32_t>(blocks.size()));
    for (const auto& [name, t] : blocks) {
        w.u32(static_cast<uint32_t>(name.size()));
        w.raw(name.data(), name.size());
        w.u32(static_cast<uint32_t>(t.shape.size()));
        for (int d : t.shape) w.u32(static_cast<uint32_t>(d));
        for (double v : t.data) w.f32_from(v);
    }
    write_file(path, w.bytes);
}

std::vector<std::pair<std::string, nn::Tensor>> load_named_tensors(const std::string& path) {
    Reader r(read_file(path), path);
    r.expect_magic("GILM");
    uint32_t version = r.u32();
    if (version != 1)
        throw FormatError(path + ": unsupported version " + std::to_string(version) + " at byte 4");
    uint32_t count = r.u32();
    std::vector<std::pair<std::string, nn::Tensor>> blocks;
    for (uint32_t i = 0; i < count; ++i) {
        uint32_t len = r.u32();
        std::string name = r.str(len);
        uint32_t rank = r.u32();
        std::vector<int> shape;
        long long numel = 1;
        for (uint32_t j = 0; j < rank; ++j) {
            uint32_t d = r.u32();
            if (d == 0)
                throw FormatError(path + ": zero dimension in block '" + name + "' at byte " +
                                  std::to_string(r.offset() - 4));
            shape.push_back(static_cast<int>(d));
            numel *= d;
        }
        std::vector<double> data;
        data.reserve(static_cast<size_t>(numel));
        for (long long j = 0; j < numel; ++j) data.push_back(static_cast<double>(r.f32()));
        blocks.emplace_back(std::move(name), nn::Tensor(std::move(shape), std::move(data)));
    }
    r.expect_end();
    return blocks;
}

} // namespace gil::io
