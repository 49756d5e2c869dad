#include "adgda/dataset.hpp"

#include "adgda/errors.hpp"

#include <fstream>
#include <iterator>
#include <string>

namespace adgda {

namespace {

constexpr std::uint32_t kImageMagic = 0x00000803;
constexpr std::uint32_t kLabelMagic = 0x00000801;

std::vector<unsigned char> read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t read_be32(const std::vector<unsigned char>& bytes, std::size_t offset,
                        const std::filesystem::path& path) {
  if (bytes.size() < offset + 4) throw IoError("truncated IDX header in " + path.string());
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

}  // namespace

Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels,
                 int classes) {
  const auto img = read_all(images);
  const auto lab = read_all(labels);

  if (read_be32(img, 0, images) != kImageMagic) throw IoError("bad image magic in " + images.string());
  if (read_be32(lab, 0, labels) != kLabelMagic) throw IoError("bad label magic in " + labels.string());

  const std::size_t count = read_be32(img, 4, images);
  const std::size_t rows = read_be32(img, 8, images);
  const std::size_t cols = read_be32(img, 12, images);
  const std::size_t label_count = read_be32(lab, 4, labels);
  if (count != label_count) {
    throw IoError("image count " + std::to_string(count) + " does not match label count " +
                  std::to_string(label_count));
  }
  const std::size_t pixels = rows * cols;
  if (img.size() < 16 + count * pixels) throw IoError("truncated image data in " + images.string());
  if (lab.size() < 8 + count) throw IoError("truncated label data in " + labels.string());

  Dataset d;
  d.classes = classes;
  d.features.resize(static_cast<Index>(count), static_cast<Index>(pixels));
  d.labels.resize(count);
  for (std::size_t s = 0; s < count; ++s) {
    const unsigned char* src = img.data() + 16 + s * pixels;
    for (std::size_t j = 0; j < pixels; ++j) {
      d.features(static_cast<Index>(s), static_cast<Index>(j)) = static_cast<float>(src[j]) / 255.0f;
    }
    const int label = lab[8 + s];
    if (label >= classes) {
      throw IoError("label " + std::to_string(label) + " out of range for " + std::to_string(classes) +
                    " classes");
    }
    d.labels[s] = label;
  }
  return d;
}

}  // namespace adgda
