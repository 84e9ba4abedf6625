#include "common/binary_io.hpp"

#include <cstring>

namespace pmdflow::io {

BinaryWriter::BinaryWriter(const std::filesystem::path& path)
    : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) fail(ErrorCode::Io, "cannot open '" + path.string() + "' for writing");
}

void BinaryWriter::magic(const char (&tag)[5]) { out_.write(tag, 4); }

void BinaryWriter::i32(std::int32_t v) { out_.write(reinterpret_cast<const char*>(&v), sizeof v); }

void BinaryWriter::i64(std::int64_t v) { out_.write(reinterpret_cast<const char*>(&v), sizeof v); }

void BinaryWriter::f64(double v) { out_.write(reinterpret_cast<const char*>(&v), sizeof v); }

void BinaryWriter::f64s(std::span<const double> values) {
    out_.write(reinterpret_cast<const char*>(values.data()),
               static_cast<std::streamsize>(values.size_bytes()));
}

void BinaryWriter::i32s(std::span<const std::int32_t> values) {
    out_.write(reinterpret_cast<const char*>(values.data()),
               static_cast<std::streamsize>(values.size_bytes()));
}

void BinaryWriter::close() {
    out_.flush();
    if (!out_) fail(ErrorCode::Io, "write failed for '" + path_.string() + "'");
    out_.close();
}

BinaryReader::BinaryReader(const std::filesystem::path& path)
    : path_(path), in_(path, std::ios::binary) {
    if (!in_) fail(ErrorCode::Io, "cannot open '" + path.string() + "' for reading");
}

void BinaryReader::read_raw(void* dst, std::size_t bytes) {
    in_.read(static_cast<char*>(dst), static_cast<std::streamsize>(bytes));
    if (static_cast<std::size_t>(in_.gcount()) != bytes)
        fail(ErrorCode::Io, "unexpected end of file in '" + path_.string() + "'");
}

void BinaryReader::expect_magic(const char (&tag)[5]) {
    char got[4];
    read_raw(got, 4);
    if (std::memcmp(got, tag, 4) != 0)
        fail(ErrorCode::Io, "'" + path_.string() + "' is not a " + std::string(tag, 4) + " container");
}

std::int32_t BinaryReader::i32() {
    std::int32_t v;
    read_raw(&v, sizeof v);
    return v;
}

std::int64_t BinaryReader::i64() {
    std::int64_t v;
    read_raw(&v, sizeof v);
    return v;
}

double BinaryReader::f64() {
    double v;
    read_raw(&v, sizeof v);
    return v;
}

void BinaryReader::f64s(std::span<double> values) { read_raw(values.data(), values.size_bytes()); }

std::vector<double> BinaryReader::f64s(std::size_t count) {
    std::vector<double> v(count);
    f64s(std::span<double>(v));
    return v;
}

std::vector<std::int32_t> BinaryReader::i32s(std::size_t count) {
    std::vector<std::int32_t> v(count);
    read_raw(v.data(), count * sizeof(std::int32_t));
    return v;
}

bool BinaryReader::at_end() {
    return in_.peek() == std::char_traits<char>::eof();
}

}  // namespace pmdflow::io
