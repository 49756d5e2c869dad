#include "adgda/compression.hpp"
#include "adgda/errors.hpp"
#include "adgda/rng.hpp"

#include <gtest/gtest.h>

using namespace adgda;

TEST(Delta, Values) {
  EXPECT_EQ(delta_of(CompressionSpec::identity(7)), 1.0);
  EXPECT_DOUBLE_EQ(quantization_tau(2, 4), 1.25);
  EXPECT_DOUBLE_EQ(delta_of(CompressionSpec::random_quantization(2, 4)), 0.8);
  EXPECT_DOUBLE_EQ(delta_of(CompressionSpec::top_k(1, 3)), 1.0 / 3.0);
}

TEST(MessageBits, Formulas) {
  EXPECT_EQ(message_bits(CompressionSpec::identity(100)), 3200u);
  EXPECT_EQ(message_bits(CompressionSpec::random_quantization(4, 100)), 532u);
  EXPECT_EQ(message_bits(CompressionSpec::top_k(10, 100)), 390u);
  EXPECT_EQ(message_bits(CompressionSpec::random_quantization(4, 7850)), 32u + 7850u * 5u);
  EXPECT_EQ(index_bits(100), 7);
  EXPECT_EQ(index_bits(128), 7);
  EXPECT_EQ(index_bits(129), 8);
}

TEST(Parse, Forms) {
  EXPECT_EQ(parse_compression("identity", 50), CompressionSpec::identity(50));
  EXPECT_EQ(parse_compression("quant:4", 50), CompressionSpec::random_quantization(4, 50));
  EXPECT_EQ(parse_compression("topk:10", 50), CompressionSpec::top_k(10, 50));
  EXPECT_EQ(parse_compression("topk:0.10", 50), CompressionSpec::top_k(5, 50));
  EXPECT_EQ(parse_compression("topk:0.001", 50), CompressionSpec::top_k(1, 50));
  EXPECT_EQ(to_string(CompressionSpec::random_quantization(8, 3)), "quant:8");
  EXPECT_THROW(parse_compression("quant:0", 10), ConfigError);
  EXPECT_THROW(parse_compression("topk:11", 10), ConfigError);
  EXPECT_THROW(parse_compression("zip", 10), ConfigError);
}

TEST(Compress, IdentityIsExact) {
  Rng rng(1);
  const Vec x = Vec::LinSpaced(6, -1.0, 2.0);
  const CompressedMessage msg = compress(x, CompressionSpec::identity(6), rng);
  EXPECT_EQ(msg.reconstruction, x);
  EXPECT_EQ(msg.bits, 32u * 6u);
}

TEST(Compress, TopOneExample) {
  Rng rng(1);
  const Vec x{{3.0, -1.0, 0.0}};
  const CompressedMessage msg = compress(x, CompressionSpec::top_k(1, 3), rng);
  EXPECT_EQ(msg.reconstruction, (Vec{{3.0, 0.0, 0.0}}));
  EXPECT_DOUBLE_EQ((msg.reconstruction - x).squaredNorm(), 1.0);
  EXPECT_LE(1.0, (1.0 - 1.0 / 3.0) * 10.0);
}

TEST(Compress, TopKTiesGoToSmallestIndex) {
  const Vec x{{1.0, -2.0, 2.0, 2.0, 0.5}};
  EXPECT_EQ(top_k_indices(x, 2), (std::vector<Index>{1, 2}));
}

TEST(Compress, TopKFewerNonzeros) {
  Rng rng(1);
  const Vec x{{0.0, 4.0, 0.0, 0.0}};
  const CompressedMessage msg = compress(x, CompressionSpec::top_k(3, 4), rng);
  EXPECT_EQ(msg.reconstruction, x);
  EXPECT_EQ(msg.bits, 1u * (32u + 2u));
}

TEST(Compress, ZeroVector) {
  Rng rng(1);
  const Vec zero = Vec::Zero(10);
  const CompressedMessage q = compress(zero, CompressionSpec::random_quantization(4, 10), rng);
  EXPECT_EQ(q.reconstruction, zero);
  EXPECT_EQ(q.bits, 32u);
  const CompressedMessage k = compress(zero, CompressionSpec::top_k(3, 10), rng);
  EXPECT_EQ(k.reconstruction, zero);
  EXPECT_EQ(k.bits, 0u);
}

TEST(Compress, QuantizationContractUnitVector) {
  const Index d = 100;
  Rng gen(3);
  Vec x(d);
  for (Index i = 0; i < d; ++i) x(i) = standard_normal(gen);
  x.normalize();
  const CompressionSpec spec = CompressionSpec::random_quantization(2, d);
  double mse = 0.0;
  const int draws = 10000;
  for (int r = 0; r < draws; ++r) {
    Rng rng = make_stream(1, 0, static_cast<std::uint64_t>(r), StreamPurpose::kCompression);
    mse += (compress(x, spec, rng).reconstruction - x).squaredNorm();
  }
  mse /= draws;
  EXPECT_LE(mse, (1.0 - delta_of(spec)) * 1.05);
}

TEST(Compress, QuantizationLevelsAreOnGrid) {
  const Index d = 20;
  Rng gen(5);
  Vec x(d);
  for (Index i = 0; i < d; ++i) x(i) = standard_normal(gen);
  const int bits = 3;
  const double unit = x.norm() / (8.0 * quantization_tau(bits, d));
  const Vec q = random_quantize(x, bits, gen);
  for (Index i = 0; i < d; ++i) {
    const double level = q(i) / unit;
    EXPECT_NEAR(level, std::round(level), 1e-9);
    EXPECT_TRUE(q(i) == 0.0 || (q(i) > 0) == (x(i) > 0));
    // level is floor(8|x|/||x|| + xi), xi in [0, 1)
    const double lower = std::floor(8.0 * std::abs(x(i)) / x.norm());
    EXPECT_LE(std::abs(level), lower + 1.0 + 1e-9);
    EXPECT_GE(std::abs(level), lower - 1e-9);
  }
}

TEST(Compress, ScaleEquivariantTopK) {
  Rng gen(9);
  Vec x(30);
  for (Index i = 0; i < 30; ++i) x(i) = standard_normal(gen);
  EXPECT_EQ(top_k_indices(Vec(7.5 * x), 6), top_k_indices(x, 6));
  EXPECT_LE((top_k(Vec(7.5 * x), 6) - 7.5 * top_k(x, 6)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Compress, SameStreamSameMessage) {
  Vec x = Vec::LinSpaced(50, -3.0, 1.0);
  Rng a = make_stream(4, 2, 9, StreamPurpose::kCompression);
  Rng b = make_stream(4, 2, 9, StreamPurpose::kCompression);
  const CompressionSpec spec = CompressionSpec::random_quantization(4, 50);
  EXPECT_EQ(compress(x, spec, a).reconstruction, compress(x, spec, b).reconstruction);
}
