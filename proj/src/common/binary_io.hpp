#pragma once

#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "common/error.hpp"

namespace pmdflow::io {

static_assert(std::endian::native == std::endian::little,
              "binary containers are little-endian; big-endian hosts need byte swapping");

/// Thin wrappers over std::fstream for the little-endian containers (grid,
/// checkpoint, ensemble, POD basis).
class BinaryWriter {
public:
    explicit BinaryWriter(const std::filesystem::path& path);

    void magic(const char (&tag)[5]);
    void i32(std::int32_t v);
    void i64(std::int64_t v);
    void f64(double v);
    void f64s(std::span<const double> values);
    void i32s(std::span<const std::int32_t> values);
    void close();

private:
    std::filesystem::path path_;
    std::ofstream out_;
};

class BinaryReader {
public:
    explicit BinaryReader(const std::filesystem::path& path);

    void expect_magic(const char (&tag)[5]);
    std::int32_t i32();
    std::int64_t i64();
    double f64();
    void f64s(std::span<double> values);
    std::vector<double> f64s(std::size_t count);
    std::vector<std::int32_t> i32s(std::size_t count);
    bool at_end();

private:
    void read_raw(void* dst, std::size_t bytes);

    std::filesystem::path path_;
    std::ifstream in_;
};

}  // namespace pmdflow::io
