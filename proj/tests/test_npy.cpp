#include <gtest/gtest.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <string>

#include "spectraprune/error.hpp"
#include "spectraprune/npy.hpp"
#include "spectraprune/sparsify.hpp"
#include "test_support.hpp"

namespace spectraprune {
namespace {

using Bytes = std::vector<std::uint8_t>;

// Header as numpy.save writes it for a (2, 2) <f8 array: 118 bytes of
// dict text padded with spaces, newline last.
std::string numpy_header_2x2() {
  std::string dict = "{'descr': '<f8', 'fortran_order': False, 'shape': (2, 2), }";
  dict.append(118 - 1 - dict.size(), ' ');
  dict.push_back('\n');
  std::string out = "\x93NUMPY";
  out.push_back('\x01');
  out.push_back('\x00');
  out.push_back(static_cast<char>(118));
  out.push_back('\x00');
  return out + dict;
}

Bytes reference_2x2() {
  const std::string h = numpy_header_2x2();
  Bytes bytes(h.begin(), h.end());
  for (double v : {1.0, 2.0, 3.0, 4.0}) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int b = 0; b < 8; ++b) bytes.push_back(static_cast<std::uint8_t>(bits >> (8 * b)));
  }
  return bytes;
}

Bytes with_header(const std::string& dict, std::size_t payload_bytes) {
  std::string h = dict;
  while ((10 + h.size() + 1) % 64 != 0) h.push_back(' ');
  h.push_back('\n');
  Bytes out = {0x93, 'N', 'U', 'M', 'P', 'Y', 1, 0,
               static_cast<std::uint8_t>(h.size() & 0xFF), static_cast<std::uint8_t>(h.size() >> 8)};
  out.insert(out.end(), h.begin(), h.end());
  out.resize(out.size() + payload_bytes, 0);
  return out;
}

ParseErrorKind parse_kind(const Bytes& b) {
  try {
    parse_npy(b);
  } catch (const ParseError& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no parse error";
  return ParseErrorKind::kBadMagic;
}

TEST(Npy, MatchesReferenceBytes) {
  const Bytes ref = reference_2x2();
  ASSERT_EQ(ref.size(), 160u);
  const TensorFile t = parse_npy(ref);
  EXPECT_EQ(t.dtype, Dtype::kF64);
  EXPECT_EQ(t.shape, (std::vector<std::size_t>{2, 2}));
  EXPECT_EQ(t.values, (std::vector<double>{1, 2, 3, 4}));
  EXPECT_EQ(serialize_npy(t), ref);
  EXPECT_EQ(serialize_npy(tensor_from(Matrix::from_rows({{1, 2}, {3, 4}}))), ref);
}

TEST(Npy, HeaderAlignmentAndShapeText) {
  const TensorFile t = tensor_from(Matrix(3, 4));
  const Bytes b = serialize_npy(t);
  const std::size_t hlen = b[8] | (b[9] << 8);
  EXPECT_EQ((10 + hlen) % 64, 0u);
  EXPECT_EQ(b[10 + hlen - 1], '\n');
  const std::string header(b.begin() + 10, b.begin() + 10 + static_cast<std::ptrdiff_t>(hlen));
  EXPECT_NE(header.find("'shape': (3, 4)"), std::string::npos);
  EXPECT_EQ(b.size(), 10 + hlen + 12 * 8);
}

TEST(Npy, FileRoundTrip) {
  testing::TempDir dir;
  const auto kernel = testing::random_kernel(3, 2, 3, 3, 4);
  for (Dtype d : {Dtype::kF64, Dtype::kF32}) {
    TensorFile t = tensor_from(kernel, d);
    write_npy(dir / "k.npy", t);
    const TensorFile back = read_npy(dir / "k.npy");
    EXPECT_EQ(back.shape, (std::vector<std::size_t>{3, 2, 3, 3}));
    EXPECT_EQ(back.dtype, d);
    EXPECT_TRUE(is_kernel(back));
    if (d == Dtype::kF64) {
      EXPECT_EQ(to_kernel(back), kernel);
    } else {
      for (std::size_t k = 0; k < back.values.size(); ++k) {
        EXPECT_EQ(back.values[k], static_cast<double>(static_cast<float>(kernel.data()[k])));
      }
    }
    EXPECT_EQ(serialize_npy(back), serialize_npy(t));
  }
}

TEST(Npy, KernelUnfoldsToMatrix) {
  const auto kernel = testing::random_kernel(4, 2, 2, 3, 5);
  EXPECT_EQ(to_matrix(tensor_from(kernel)), unfold_kernel(kernel));
  const auto signal = testing::random_signal(2, 3, 4, 6);
  EXPECT_EQ(to_signal(tensor_from(signal)), signal);
  EXPECT_THROW(to_kernel(tensor_from(Matrix(2, 2))), ShapeError);
}

TEST(Npy, ErrorKinds) {
  Bytes bad = reference_2x2();
  bad[1] = 'X';
  EXPECT_EQ(parse_kind(bad), ParseErrorKind::kBadMagic);

  Bytes v3 = reference_2x2();
  v3[6] = 3;
  EXPECT_EQ(parse_kind(v3), ParseErrorKind::kUnsupportedVersion);

  EXPECT_EQ(parse_kind(with_header("{'descr': '>f8', 'fortran_order': False, 'shape': (2, 2), }", 32)),
            ParseErrorKind::kUnsupportedDtype);
  EXPECT_EQ(parse_kind(with_header("{'descr': '<i8', 'fortran_order': False, 'shape': (2, 2), }", 32)),
            ParseErrorKind::kUnsupportedDtype);
  EXPECT_EQ(parse_kind(with_header("{'descr': '<f8', 'fortran_order': True, 'shape': (2, 2), }", 32)),
            ParseErrorKind::kFortranOrder);
  EXPECT_EQ(parse_kind(with_header("{'descr': '<f8', 'fortran_order': False, 'shape': (0,), }", 0)),
            ParseErrorKind::kBadShape);
  EXPECT_EQ(parse_kind(with_header("{'descr': '<f8', 'fortran_order': False, 'shape': (4,), }", 32)),
            ParseErrorKind::kBadShape);
  EXPECT_EQ(parse_kind(with_header("{'descr': '<f8', 'fortran_order': False, 'shape': (2, 0), }", 0)),
            ParseErrorKind::kBadShape);
  EXPECT_EQ(parse_kind(with_header("{'descr': '<f8', 'fortran_order': False, }", 0)),
            ParseErrorKind::kBadHeader);

  Bytes truncated = reference_2x2();
  truncated.resize(truncated.size() - 3);
  EXPECT_EQ(parse_kind(truncated), ParseErrorKind::kTruncatedPayload);
  const Bytes ref = reference_2x2();
  EXPECT_EQ(parse_kind(Bytes(ref.begin(), ref.begin() + 5)), ParseErrorKind::kBadMagic);
}

TEST(Npy, ErrorCarriesOffset) {
  Bytes truncated = reference_2x2();
  truncated.resize(150);
  try {
    parse_npy(truncated);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.offset(), 150u);  // where the bytes ran out
    EXPECT_NE(std::string(e.what()).find("from offset 128"), std::string::npos) << e.what();
  }
}

TEST(Npy, NonFiniteRejected) {
  Bytes b = reference_2x2();
  const auto nan = std::bit_cast<std::uint64_t>(std::numeric_limits<double>::quiet_NaN());
  for (int k = 0; k < 8; ++k) b[128 + 8 + k] = static_cast<std::uint8_t>(nan >> (8 * k));
  EXPECT_EQ(parse_kind(b), ParseErrorKind::kNonFiniteValue);
}

TEST(Npy, ReadMissingFileNamesPath) {
  testing::TempDir dir;
  try {
    read_npy(dir / "absent.npy");
    FAIL();
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("absent.npy"), std::string::npos);
  }
}

TEST(Npy, ReadParseErrorNamesPath) {
  testing::TempDir dir;
  {
    std::ofstream out(dir / "junk.npy", std::ios::binary);
    out << "not an npy file";
  }
  try {
    read_npy(dir / "junk.npy");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.kind(), ParseErrorKind::kBadMagic);
    EXPECT_NE(std::string(e.what()).find("junk.npy"), std::string::npos);
  }
}

TEST(Npy, SmallHeaderV1AndParsesV2) {
  TensorFile t;
  t.shape = {1, 1};
  t.values = {1.0};
  EXPECT_EQ(serialize_npy(t)[6], 1);
  // A rank-4 shape can never overflow v1.0, so exercise the v2.0 parser directly.
  std::string h = "{'descr': '<f8', 'fortran_order': False, 'shape': (1, 2), }";
  while ((12 + h.size() + 1) % 64 != 0) h.push_back(' ');
  h.push_back('\n');
  Bytes b = {0x93, 'N', 'U', 'M', 'P', 'Y', 2, 0, static_cast<std::uint8_t>(h.size()), 0, 0, 0};
  b.insert(b.end(), h.begin(), h.end());
  b.resize(b.size() + 16, 0);
  const TensorFile back = parse_npy(b);
  EXPECT_EQ(back.shape, (std::vector<std::size_t>{1, 2}));
}

TEST(WriteMask, BinaryF32AndReverify) {
  testing::TempDir dir;
  const Matrix a = testing::random_matrix(9, 7, 3);
  const SparsifyResult r = threshold_sparsify(a, 0.3);
  write_mask(dir / "mask.npy", r.mask);
  write_npy(dir / "sparse.npy", tensor_from(r.sparse));
  const TensorFile mask = read_npy(dir / "mask.npy");
  EXPECT_EQ(mask.dtype, Dtype::kF32);
  EXPECT_EQ(to_matrix(mask), r.mask);
  const auto [two, fro] = sparsification_error(a, to_matrix(read_npy(dir / "sparse.npy")));
  EXPECT_EQ(two, r.err_two_norm);
  EXPECT_EQ(fro, r.err_f_norm);
  EXPECT_THROW(write_mask(dir / "bad.npy", Matrix::from_rows({{0, 0.5}})), ParameterError);
}

TEST(WriteMask, OnesAndHalfKeep) {
  testing::TempDir dir;
  Matrix ones(4, 5);
  for (std::size_t k = 0; k < 20; ++k) ones(k / 5, k % 5) = 1.0;
  write_mask(dir / "ones.npy", ones);
  EXPECT_EQ(to_matrix(read_npy(dir / "ones.npy")), ones);

  const Matrix a = testing::random_matrix(7, 5, 8);
  const SparsifyResult r = threshold_sparsify(a, 0.5);
  write_mask(dir / "half.npy", r.mask);
  const Matrix mask = to_matrix(read_npy(dir / "half.npy"));
  EXPECT_EQ(count_nonzero(mask), 18u);  // round(17.5)
  Matrix applied(7, 5);
  for (std::size_t i = 0; i < 7; ++i)
    for (std::size_t j = 0; j < 5; ++j) applied(i, j) = mask(i, j) * a(i, j);
  EXPECT_EQ(applied, r.sparse);
}

}  // namespace
}  // namespace spectraprune
