#pragma once

// Little-endian binary helpers shared by the file formats.

#include "dlab/common.hpp"
#include "dlab/dataset/shard.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <type_traits>

namespace dlab::detail {

static_assert(std::endian::native == std::endian::little,
              "file formats are little-endian; big-endian hosts need byte swapping");

class BinaryWriter {
public:
    explicit BinaryWriter(const std::filesystem::path& path)
        : path_(path), out_(path, std::ios::binary | std::ios::trunc)
    {
        if (!out_) throw IoError("cannot open for writing: " + path.string());
    }

    template <typename T>
    void put(T value)
    {
        static_assert(std::is_trivially_copyable_v<T>);
        bytes(&value, sizeof(T));
    }

    void bytes(const void* data, std::size_t n)
    {
        out_.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
        if (!out_) throw IoError("write failed: " + path_.string());
    }

    void close()
    {
        out_.flush();
        if (!out_) throw IoError("flush failed: " + path_.string());
        out_.close();
    }

private:
    std::filesystem::path path_;
    std::ofstream out_;
};

class BinaryReader {
public:
    explicit BinaryReader(const std::filesystem::path& path)
        : path_(path), in_(path, std::ios::binary)
    {
        if (!in_) throw IoError("cannot open for reading: " + path.string());
        in_.seekg(0, std::ios::end);
        size_ = static_cast<std::uint64_t>(in_.tellg());
        in_.seekg(0, std::ios::beg);
    }

    template <typename T>
    T get()
    {
        static_assert(std::is_trivially_copyable_v<T>);
        T value;
        bytes(&value, sizeof(T));
        return value;
    }

    void bytes(void* data, std::size_t n)
    {
        if (remaining() < n) throw TruncatedError("truncated file: " + path_.string());
        in_.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
        if (!in_) throw TruncatedError("truncated file: " + path_.string());
        pos_ += n;
    }

    std::string string(std::size_t n)
    {
        std::string s(n, '\0');
        if (n > 0) bytes(s.data(), n);
        return s;
    }

    std::uint64_t remaining() const { return size_ - pos_; }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
    std::ifstream in_;
    std::uint64_t size_ = 0;
    std::uint64_t pos_ = 0;
};

inline void expect_magic(BinaryReader& r, const char (&magic)[5])
{
    char got[4];
    if (r.remaining() < 4) throw TruncatedError("truncated file: " + r.path().string());
    r.bytes(got, 4);
    if (std::memcmp(got, magic, 4) != 0)
        throw BadMagicError("bad magic in " + r.path().string() + ", expected " + magic);
}

}  // namespace dlab::detail
