#include "spectraprune/npy.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <optional>

#include "spectraprune/error.hpp"

namespace spectraprune {

static_assert(std::endian::native == std::endian::little,
              "NPY payloads are handled as little-endian in place");

namespace {

constexpr std::uint8_t kMagic[6] = {0x93, 'N', 'U', 'M', 'P', 'Y'};
constexpr std::size_t kAlign = 64;
// numpy reserves room so the leading axis can grow in place.
constexpr std::size_t kGrowthAxisMaxDigits = 21;

// Cursor over the ASCII header dict, e.g.
//   {'descr': '<f8', 'fortran_order': False, 'shape': (3, 4), }
class HeaderParser {
 public:
  HeaderParser(std::string_view text, std::size_t base) : text_(text), base_(base) {}

  std::size_t offset() const { return base_ + pos_; }

  void skip_ws() {
    while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t' ||
                                   text_[pos_] == '\n' || text_[pos_] == '\r'))
      ++pos_;
  }
  bool consume(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  void expect(char c) {
    if (!consume(c)) fail(std::string("expected '") + c + "'");
  }
  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError(ParseErrorKind::kBadHeader, offset(), what);
  }

  std::string string_literal() {
    skip_ws();
    if (pos_ >= text_.size() || (text_[pos_] != '\'' && text_[pos_] != '"')) fail("expected string");
    const char quote = text_[pos_++];
    const std::size_t start = pos_;
    while (pos_ < text_.size() && text_[pos_] != quote) ++pos_;
    if (pos_ >= text_.size()) fail("unterminated string");
    return std::string(text_.substr(start, pos_++ - start));
  }

  bool bool_literal() {
    skip_ws();
    if (text_.substr(pos_, 4) == "True") {
      pos_ += 4;
      return true;
    }
    if (text_.substr(pos_, 5) == "False") {
      pos_ += 5;
      return false;
    }
    fail("expected True or False");
  }

  std::vector<std::size_t> shape_tuple() {
    expect('(');
    std::vector<std::size_t> dims;
    while (!consume(')')) {
      skip_ws();
      const std::size_t start = pos_;
      std::size_t value = 0;
      while (pos_ < text_.size() && text_[pos_] >= '0' && text_[pos_] <= '9') {
        value = value * 10 + static_cast<std::size_t>(text_[pos_] - '0');
        ++pos_;
      }
      if (pos_ == start) fail("expected integer in shape");
      dims.push_back(value);
      if (!consume(',')) {
        expect(')');
        break;
      }
    }
    return dims;
  }

 private:
  std::string_view text_;
  std::size_t base_;
  std::size_t pos_ = 0;
};

std::string build_header_dict(const TensorFile& t) {
  std::string h = "{'descr': '";
  h += descr(t.dtype);
  h += "', 'fortran_order': False, 'shape': ";
  h += t.shape_string();
  h += ", }";
  h.append(kGrowthAxisMaxDigits - std::to_string(t.shape.front()).size(), ' ');
  return h;
}

void validate_shape(const std::vector<std::size_t>& shape, std::size_t offset) {
  if (shape.size() < kMinRank || shape.size() > kMaxRank) {
    throw ParseError(ParseErrorKind::kBadShape, offset,
                     "rank " + std::to_string(shape.size()) + " unsupported (expected 2 to 4)");
  }
  for (std::size_t d : shape) {
    if (d == 0) throw ParseError(ParseErrorKind::kBadShape, offset, "empty tensors unsupported");
  }
}

void check_tensor(const TensorFile& t) {
  if (t.shape.size() < kMinRank || t.shape.size() > kMaxRank) {
    throw ParameterError("tensor rank " + std::to_string(t.shape.size()) + " unsupported");
  }
  for (std::size_t d : t.shape) {
    if (d == 0) throw ParameterError("empty tensors unsupported");
  }
  if (t.values.size() != t.element_count()) {
    throw ShapeError("tensor has " + std::to_string(t.values.size()) + " values for shape " +
                     t.shape_string());
  }
}

}  // namespace

std::size_t itemsize(Dtype d) noexcept { return d == Dtype::kF32 ? 4 : 8; }
const char* descr(Dtype d) noexcept { return d == Dtype::kF32 ? "<f4" : "<f8"; }

std::size_t TensorFile::element_count() const noexcept {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return shape.empty() ? 0 : n;
}

std::string TensorFile::shape_string() const {
  std::string s = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i > 0) s += ", ";
    s += std::to_string(shape[i]);
  }
  if (shape.size() == 1) s += ",";
  return s + ")";
}

TensorFile parse_npy(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) {
    throw ParseError(ParseErrorKind::kBadMagic, 0, "not an NPY file");
  }
  const std::uint8_t major = bytes[6];
  std::size_t header_len = 0;
  std::size_t header_start = 0;
  if (major == 1) {
    if (bytes.size() < 10) throw ParseError(ParseErrorKind::kBadHeader, 8, "missing header length");
    header_len = static_cast<std::size_t>(bytes[8]) | (static_cast<std::size_t>(bytes[9]) << 8);
    header_start = 10;
  } else if (major == 2) {
    if (bytes.size() < 12) throw ParseError(ParseErrorKind::kBadHeader, 8, "missing header length");
    header_len = 0;
    for (int b = 3; b >= 0; --b) header_len = (header_len << 8) | bytes[8 + b];
    header_start = 12;
  } else {
    throw ParseError(ParseErrorKind::kUnsupportedVersion, 6,
                     "version " + std::to_string(major) + "." + std::to_string(bytes[7]));
  }
  if (bytes.size() < header_start + header_len) {
    throw ParseError(ParseErrorKind::kBadHeader, bytes.size(), "header extends past end of file");
  }

  const std::string_view text(reinterpret_cast<const char*>(bytes.data()) + header_start, header_len);
  HeaderParser p(text, header_start);
  std::optional<std::string> dtype_descr;
  std::optional<bool> fortran;
  std::optional<std::vector<std::size_t>> shape;
  std::size_t descr_offset = 0, fortran_offset = 0, shape_offset = 0;

  p.expect('{');
  while (!p.consume('}')) {
    const std::size_t key_offset = p.offset();
    const std::string key = p.string_literal();
    p.expect(':');
    p.skip_ws();
    if (key == "descr") {
      descr_offset = p.offset();
      dtype_descr = p.string_literal();
    } else if (key == "fortran_order") {
      fortran_offset = p.offset();
      fortran = p.bool_literal();
    } else if (key == "shape") {
      shape_offset = p.offset();
      shape = p.shape_tuple();
    } else {
      throw ParseError(ParseErrorKind::kBadHeader, key_offset, "unexpected key '" + key + "'");
    }
    if (!p.consume(',')) {
      p.expect('}');
      break;
    }
  }
  if (!dtype_descr || !fortran || !shape) {
    p.fail("header must define descr, fortran_order and shape");
  }

  TensorFile t;
  if (*dtype_descr == "<f8") {
    t.dtype = Dtype::kF64;
  } else if (*dtype_descr == "<f4") {
    t.dtype = Dtype::kF32;
  } else {
    throw ParseError(ParseErrorKind::kUnsupportedDtype, descr_offset,
                     "descr '" + *dtype_descr + "' (only <f4 and <f8 are supported)");
  }
  if (*fortran) throw ParseError(ParseErrorKind::kFortranOrder, fortran_offset, "");
  validate_shape(*shape, shape_offset);
  t.shape = std::move(*shape);

  const std::size_t data_start = header_start + header_len;
  const std::size_t count = t.element_count();
  const std::size_t need = count * itemsize(t.dtype);
  if (bytes.size() - data_start < need) {
    throw ParseError(ParseErrorKind::kTruncatedPayload, bytes.size(),
                     "expected " + std::to_string(need) + " payload bytes from offset " +
                         std::to_string(data_start) + ", found " +
                         std::to_string(bytes.size() - data_start));
  }
  t.values.resize(count);
  const std::uint8_t* src = bytes.data() + data_start;
  for (std::size_t k = 0; k < count; ++k) {
    double v;
    if (t.dtype == Dtype::kF64) {
      std::memcpy(&v, src + 8 * k, 8);
    } else {
      float f;
      std::memcpy(&f, src + 4 * k, 4);
      v = static_cast<double>(f);
    }
    if (!std::isfinite(v)) {
      throw ParseError(ParseErrorKind::kNonFiniteValue, data_start + k * itemsize(t.dtype),
                       "element " + std::to_string(k));
    }
    t.values[k] = v;
  }
  return t;
}

std::vector<std::uint8_t> serialize_npy(const TensorFile& t) {
  check_tensor(t);
  const std::string dict = build_header_dict(t);
  const std::size_t hlen = dict.size() + 1;  // trailing newline
  std::size_t prefix = 10;
  std::size_t pad = kAlign - ((prefix + hlen) % kAlign);
  const bool v2 = hlen + pad > 0xFFFF;
  if (v2) {
    prefix = 12;
    pad = kAlign - ((prefix + hlen) % kAlign);
  }
  const std::size_t total_header = hlen + pad;

  std::vector<std::uint8_t> out;
  out.reserve(prefix + total_header + t.values.size() * itemsize(t.dtype));
  out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
  out.push_back(v2 ? 2 : 1);
  out.push_back(0);
  for (std::size_t b = 0; b < (v2 ? 4u : 2u); ++b) {
    out.push_back(static_cast<std::uint8_t>((total_header >> (8 * b)) & 0xFF));
  }
  out.insert(out.end(), dict.begin(), dict.end());
  out.insert(out.end(), pad, ' ');
  out.push_back('\n');

  const std::size_t data_start = out.size();
  out.resize(data_start + t.values.size() * itemsize(t.dtype));
  std::uint8_t* dst = out.data() + data_start;
  for (std::size_t k = 0; k < t.values.size(); ++k) {
    if (t.dtype == Dtype::kF64) {
      std::memcpy(dst + 8 * k, &t.values[k], 8);
    } else {
      const float f = static_cast<float>(t.values[k]);
      std::memcpy(dst + 4 * k, &f, 4);
    }
  }
  return out;
}

TensorFile read_npy(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path.string(), "cannot open for reading");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError(path.string(), "read failed");
  try {
    return parse_npy(bytes);
  } catch (const ParseError& e) {
    throw ParseError(e.kind(), e.offset(),
                     e.detail().empty() ? path.string() : path.string() + ": " + e.detail());
  }
}

void write_npy(const std::filesystem::path& path, const TensorFile& t) {
  const std::vector<std::uint8_t> bytes = serialize_npy(t);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path.string(), "cannot open for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  out.flush();
  if (!out) throw IoError(path.string(), "write failed");
}

void write_mask(const std::filesystem::path& path, const TensorFile& mask) {
  for (std::size_t k = 0; k < mask.values.size(); ++k) {
    const double v = mask.values[k];
    if (v != 0.0 && v != 1.0) {
      throw ParameterError("mask entry " + std::to_string(k) + " is " + std::to_string(v) +
                           ", expected 0 or 1");
    }
  }
  TensorFile f32 = mask;
  f32.dtype = Dtype::kF32;
  write_npy(path, f32);
}

void write_mask(const std::filesystem::path& path, const Matrix& mask) {
  write_mask(path, tensor_from(mask, Dtype::kF32));
}

TensorFile tensor_from(const Matrix& m, Dtype dtype) {
  return TensorFile{dtype, {m.rows(), m.cols()}, {m.data().begin(), m.data().end()}};
}

TensorFile tensor_from(const KernelTensor& t, Dtype dtype) {
  return TensorFile{dtype,
                    {t.out_channels(), t.in_channels(), t.k_h(), t.k_w()},
                    {t.data().begin(), t.data().end()}};
}

TensorFile tensor_from(const SignalTensor& s, Dtype dtype) {
  return TensorFile{dtype, {s.channels(), s.height(), s.width()}, {s.data().begin(), s.data().end()}};
}

bool is_kernel(const TensorFile& t) noexcept { return t.shape.size() == 4; }

Matrix to_matrix(const TensorFile& t) {
  if (t.shape.size() == 2) return Matrix(t.shape[0], t.shape[1], t.values);
  if (t.shape.size() == 4) return unfold_kernel(to_kernel(t));
  throw ShapeError("expected a 2-D matrix or 4-D kernel, got shape " + t.shape_string());
}

KernelTensor to_kernel(const TensorFile& t) {
  if (t.shape.size() != 4) throw ShapeError("expected a 4-D kernel, got shape " + t.shape_string());
  return KernelTensor(t.shape[0], t.shape[1], t.shape[2], t.shape[3], t.values);
}

SignalTensor to_signal(const TensorFile& t) {
  if (t.shape.size() != 3) throw ShapeError("expected a 3-D signal, got shape " + t.shape_string());
  return SignalTensor(t.shape[0], t.shape[1], t.shape[2], t.values);
}

}  // namespace spectraprune
