// SPDX-License-Identifier: Apache-2.0
//
// osa-doa: DOA estimation for hybrid massive-MIMO receive arrays with
// overlapped subarrays
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#ifndef OSA_BINIO_HPP
#define OSA_BINIO_HPP

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace osa
{

// CRC-32 (IEEE 802.3, reflected, poly 0xEDB88320). Known vector:
// crc32("123456789") == 0xCBF43926.
inline uint32_t crc32(const uint8_t *data, size_t len, uint32_t crc = 0)
{
    static const auto table = []
    {
        std::vector<uint32_t> t(256);
        for (uint32_t i = 0; i < 256; ++i)
        {
            uint32_t c = i;
            for (int k = 0; k < 8; ++k)
                c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
            t[i] = c;
        }
        return t;
    }();
    crc ^= 0xFFFFFFFFu;
    for (size_t i = 0; i < len; ++i)
        crc = table[(crc ^ data[i]) & 0xFF] ^ (crc >> 8);
    return crc ^ 0xFFFFFFFFu;
}

// FNV-1a 64-bit, used for config fingerprints in result files
inline uint64_t fnv1a64(const uint8_t *data, size_t len)
{
    uint64_t h = 0xCBF29CE484222325ULL;
    for (size_t i = 0; i < len; ++i)
    {
        h ^= data[i];
        h *= 0x100000001B3ULL;
    }
    return h;
}

inline uint64_t fnv1a64(const std::string &s)
{
    return fnv1a64(reinterpret_cast<const uint8_t *>(s.data()), s.size());
}

// Little-endian byte-buffer writer. All file formats in this project are
// explicitly little-endian regardless of host order.
class ByteWriter
{
  public:
    void u8(uint8_t v) { buf_.push_back(v); }
    void u16(uint16_t v)
    {
        for (int i = 0; i < 2; ++i)
            buf_.push_back(uint8_t(v >> (8 * i)));
    }
    void u32(uint32_t v)
    {
        for (int i = 0; i < 4; ++i)
            buf_.push_back(uint8_t(v >> (8 * i)));
    }
    void u64(uint64_t v)
    {
        for (int i = 0; i < 8; ++i)
            buf_.push_back(uint8_t(v >> (8 * i)));
    }
    void i32(int32_t v) { u32(uint32_t(v)); }
    void i64(int64_t v) { u64(uint64_t(v)); }
    void f32(float v)
    {
        uint32_t bits;
        std::memcpy(&bits, &v, 4);
        u32(bits);
    }
    void f64(double v)
    {
        uint64_t bits;
        std::memcpy(&bits, &v, 8);
        u64(bits);
    }
    void bytes(const void *p, size_t n)
    {
        const uint8_t *b = static_cast<const uint8_t *>(p);
        buf_.insert(buf_.end(), b, b + n);
    }
    void str(const std::string &s)
    {
        u32(uint32_t(s.size()));
        bytes(s.data(), s.size());
    }

    const std::vector<uint8_t> &data() const { return buf_; }
    size_t size() const { return buf_.size(); }

  private:
    std::vector<uint8_t> buf_;
};

class ByteReader
{
  public:
    ByteReader(const uint8_t *data, size_t size) : data_(data), size_(size) {}
    explicit ByteReader(const std::vector<uint8_t> &v) : data_(v.data()), size_(v.size()) {}

    uint8_t u8() { return take(1)[0]; }
    uint16_t u16()
    {
        const uint8_t *p = take(2);
        return uint16_t(p[0]) | uint16_t(p[1]) << 8;
    }
    uint32_t u32()
    {
        const uint8_t *p = take(4);
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= uint32_t(p[i]) << (8 * i);
        return v;
    }
    uint64_t u64()
    {
        const uint8_t *p = take(8);
        uint64_t v = 0;
        for (int i = 0; i < 8; ++i)
            v |= uint64_t(p[i]) << (8 * i);
        return v;
    }
    int32_t i32() { return int32_t(u32()); }
    int64_t i64() { return int64_t(u64()); }
    float f32()
    {
        uint32_t bits = u32();
        float v;
        std::memcpy(&v, &bits, 4);
        return v;
    }
    double f64()
    {
        uint64_t bits = u64();
        double v;
        std::memcpy(&v, &bits, 8);
        return v;
    }
    std::string str()
    {
        uint32_t n = u32();
        const uint8_t *p = take(n);
        return std::string(reinterpret_cast<const char *>(p), n);
    }
    const uint8_t *take(size_t n)
    {
        if (pos_ + n > size_)
            throw std::runtime_error("truncated payload: need " + std::to_string(n) +
                                     " bytes at offset " + std::to_string(pos_));
        const uint8_t *p = data_ + pos_;
        pos_ += n;
        return p;
    }
    size_t pos() const { return pos_; }
    size_t remaining() const { return size_ - pos_; }

  private:
    const uint8_t *data_;
    size_t size_;
    size_t pos_ = 0;
};

inline void write_file(const std::string &path, const std::vector<uint8_t> &bytes)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw std::runtime_error("cannot open for writing: " + path);
    out.write(reinterpret_cast<const char *>(bytes.data()), std::streamsize(bytes.size()));
    if (!out)
        throw std::runtime_error("write failed: " + path);
}

inline std::vector<uint8_t> read_file(const std::string &path)
{
    std::ifstream in(path, std::ios::binary | std::ios::ate);
    if (!in)
        throw std::runtime_error("cannot open for reading: " + path);
    const size_t size = size_t(in.tellg());
    in.seekg(0);
    std::vector<uint8_t> bytes(size);
    in.read(reinterpret_cast<char *>(bytes.data()), std::streamsize(size));
    if (!in)
        throw std::runtime_error("read failed: " + path);
    return bytes;
}

inline std::string read_text_file(const std::string &path)
{
    auto bytes = read_file(path);
    return std::string(bytes.begin(), bytes.end());
}

} // namespace osa

#endif
