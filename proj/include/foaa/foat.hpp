#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "foaa/tape.hpp"
#include "foaa/tensor.hpp"

namespace foaa::foat {

// Binary layout: "FOAT" magic, version byte, dtype byte, ndim byte, ndim
// little-endian u64 dims, then the payload as little-endian IEEE-754 doubles
// in row-major order.
inline constexpr unsigned char kMagic[4] = {0x46, 0x4F, 0x41, 0x54};
inline constexpr unsigned char kVersion = 0x01;
inline constexpr unsigned char kDtypeF64 = 0x02;

void write(std::ostream& os, const Tensor& t);
Tensor read(std::istream& is);

void write_file(const std::filesystem::path& path, const Tensor& t);
Tensor read_file(const std::filesystem::path& path);

/// Writes one FOAT file per parameter into `dir` plus a text manifest
/// (`manifest.txt`) with lines `name = file shape`.
void save_parameters(const std::filesystem::path& dir, std::span<const Parameter* const> params);

/// Loads values for every parameter listed; names and shapes must match the
/// manifest exactly. Throws ContractError on a mismatch.
void load_parameters(const std::filesystem::path& dir, std::span<Parameter* const> params);

}  // namespace foaa::foat
