#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "spectraprune/conv.hpp"
#include "spectraprune/matrix.hpp"

namespace spectraprune {

enum class Dtype { kF32, kF64 };

std::size_t itemsize(Dtype d) noexcept;
const char* descr(Dtype d) noexcept;  // "<f4" / "<f8"

/// In-memory NPY tensor. Values are always held as doubles; f32 payloads are
/// widened on read and narrowed on write.
struct TensorFile {
  Dtype dtype = Dtype::kF64;
  std::vector<std::size_t> shape;
  std::vector<double> values;  // C order

  std::size_t element_count() const noexcept;
  std::string shape_string() const;  // "(3, 4)"
  friend bool operator==(const TensorFile&, const TensorFile&) = default;
};

// Ranks accepted on read and write: 2 (matrix), 3 (signal), 4 (kernel).
inline constexpr std::size_t kMinRank = 2;
inline constexpr std::size_t kMaxRank = 4;

/// Parse NPY v1.0/v2.0 bytes. Throws ParseError with the byte offset of the
/// offending field.
TensorFile parse_npy(std::span<const std::uint8_t> bytes);

/// Serialize as NPY v1.0 (v2.0 if the header would not fit), laid out the
/// way numpy.save writes it, so numpy-written f4/f8 C-order files round-trip
/// byte for byte.
std::vector<std::uint8_t> serialize_npy(const TensorFile& t);

TensorFile read_npy(const std::filesystem::path& path);
void write_npy(const std::filesystem::path& path, const TensorFile& t);

/// Mask entries must be exactly 0 or 1; written as f32.
void write_mask(const std::filesystem::path& path, const Matrix& mask);
void write_mask(const std::filesystem::path& path, const TensorFile& mask);

TensorFile tensor_from(const Matrix& m, Dtype dtype = Dtype::kF64);
TensorFile tensor_from(const KernelTensor& t, Dtype dtype = Dtype::kF64);
TensorFile tensor_from(const SignalTensor& s, Dtype dtype = Dtype::kF64);

bool is_kernel(const TensorFile& t) noexcept;
/// 2-D files map directly; 4-D kernel files are unfolded to (C·k_h·k_w) × O.
Matrix to_matrix(const TensorFile& t);
KernelTensor to_kernel(const TensorFile& t);
SignalTensor to_signal(const TensorFile& t);

}  // namespace spectraprune
