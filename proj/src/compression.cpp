#include "adgda/compression.hpp"


namespace adgda {

CompressionSpec CompressionSpec::identity(Index dim) {
  return {CompressionKind::kIdentity, 0, 0, dim};
}

CompressionSpec CompressionSpec::random_quantization(int bits, Index dim) {
  CompressionSpec s{CompressionKind::kRandomQuantization, bits, 0, dim};
  validate(s);
  return s;
}

CompressionSpec CompressionSpec::top_k(Index k, Index dim) {
  CompressionSpec s{CompressionKind::kTopK, 0, k, dim};
  validate(s);
  return s;
}

void validate(const CompressionSpec& spec) {
  if (spec.dim < 1) throw ConfigError("compression dimension must be positive");
  switch (spec.kind) {
    case CompressionKind::kIdentity:
      break;
    case CompressionKind::kRandomQuantization:
      if (spec.bits < 1 || spec.bits > 30) throw ConfigError("quantization bits must be in [1, 30]");
      break;
    case CompressionKind::kTopK:
      if (spec.k < 1 || spec.k > spec.dim) throw ConfigError("top-K needs 1 <= K <= d");
      break;
  }
}

CompressionSpec parse_compression(std::string_view text, Index dim) {
  if (text == "identity" || text == "none") return CompressionSpec::identity(dim);
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) {
    throw ConfigError("unknown compression '" + std::string(text) + "'");
  }
  const auto head = text.substr(0, colon);
  const std::string arg(text.substr(colon + 1));
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(arg, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != arg.size() || !(value > 0.0)) {
    throw ConfigError("bad compression argument in '" + std::string(text) + "'");
  }
  if (head == "quant") {
    if (value != std::floor(value)) throw ConfigError("quantization bits must be an integer");
    return CompressionSpec::random_quantization(static_cast<int>(value), dim);
  }
  if (head == "topk") {
    Index k = 0;
    if (arg.find('.') != std::string::npos || value < 1.0) {
      if (value > 1.0) throw ConfigError("top-K fraction must be in (0, 1]");
      k = std::max<Index>(1, static_cast<Index>(std::llround(value * static_cast<double>(dim))));
    } else {
      k = static_cast<Index>(value);
    }
    return CompressionSpec::top_k(k, dim);
  }
  throw ConfigError("unknown compression '" + std::string(text) + "'");
}

std::string to_string(const CompressionSpec& spec) {
  switch (spec.kind) {
    case CompressionKind::kIdentity: return "identity";
    case CompressionKind::kRandomQuantization: return "quant:" + std::to_string(spec.bits);
    case CompressionKind::kTopK: return "topk:" + std::to_string(spec.k);
  }
  return "identity";
}

double quantization_tau(int bits, Index dim) {
  const double d = static_cast<double>(dim);
  const double levels = std::ldexp(1.0, bits);
  return 1.0 + std::min(d / (levels * levels), std::sqrt(d) / levels);
}

double delta_of(const CompressionSpec& spec) {
  switch (spec.kind) {
    case CompressionKind::kIdentity: return 1.0;
    case CompressionKind::kRandomQuantization: return 1.0 / quantization_tau(spec.bits, spec.dim);
    case CompressionKind::kTopK: return static_cast<double>(spec.k) / static_cast<double>(spec.dim);
  }
  return 1.0;
}

int index_bits(Index dim) {
  int b = 0;
  while ((Index{1} << b) < dim) ++b;
  return b;
}

std::uint64_t message_bits(const CompressionSpec& spec) {
  const auto d = static_cast<std::uint64_t>(spec.dim);
  switch (spec.kind) {
    case CompressionKind::kIdentity: return 32 * d;
    case CompressionKind::kRandomQuantization:
      return 32 + d * static_cast<std::uint64_t>(spec.bits + 1);
    case CompressionKind::kTopK:
      return static_cast<std::uint64_t>(spec.k) * (32 + static_cast<std::uint64_t>(index_bits(spec.dim)));
  }
  return 32 * d;
}

CompressedMessage compress(const Vec& x, const CompressionSpec& spec, Rng& rng) {
  CompressedMessage msg;
  switch (spec.kind) {
    case CompressionKind::kIdentity:
      msg.reconstruction = x;
      msg.bits = message_bits(spec);
      break;
    case CompressionKind::kRandomQuantization:
      msg.reconstruction = random_quantize(x, spec.bits, rng);
      msg.bits = x.squaredNorm() > 0.0 ? message_bits(spec) : 32;
      break;
    case CompressionKind::kTopK: {
      msg.reconstruction = top_k(x, spec.k);
      const auto sent = static_cast<std::uint64_t>((msg.reconstruction.array() != 0.0).count());
      msg.bits = sent * (32 + static_cast<std::uint64_t>(index_bits(spec.dim)));
      break;
    }
  }
  return msg;
}

}  // namespace adgda
