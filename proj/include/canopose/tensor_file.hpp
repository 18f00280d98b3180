#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <variant>

#include "canopose/ndarray.hpp"

namespace canopose {

/// On-disk tensor: "CNPT", version 1, dtype, ndim, u32 dims, then the
/// row-major payload. Everything is little-endian.
enum class DType : std::uint8_t { Float32 = 0, UInt8 = 1, Int32 = 2 };

using AnyTensor = std::variant<NdArray<float>, NdArray<std::uint8_t>, NdArray<std::int32_t>>;

void write_tensor(std::ostream& out, const AnyTensor& tensor);
AnyTensor read_tensor(std::istream& in);

void write_tensor_file(const std::filesystem::path& path, const AnyTensor& tensor);
AnyTensor read_tensor_file(const std::filesystem::path& path);

/// Reads a float32 tensor and widens it to double.
NdArray<double> read_real_tensor(const std::filesystem::path& path);
NdArray<std::int32_t> read_int_tensor(const std::filesystem::path& path);
/// Narrows to float32 and writes.
void write_real_tensor(const std::filesystem::path& path, const NdArray<double>& tensor);

}  // namespace canopose
