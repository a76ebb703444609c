// IDX file ingestion (the FashionMNIST/MNIST distribution format):
// big-endian magic + dimension header followed by raw bytes. Files with a
// .gz suffix or gzip magic are decompressed transparently.
#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace qfed::data {

struct RawDataset {
  int rows = 0;
  int cols = 0;
  std::vector<std::uint8_t> pixels;  // count * rows * cols, row-major
  std::vector<std::uint8_t> labels;

  std::size_t size() const { return labels.size(); }
  std::span<const std::uint8_t> image(std::size_t i) const {
    const std::size_t px = std::size_t(rows) * std::size_t(cols);
    return {pixels.data() + i * px, px};
  }
};

class IdxError : public std::runtime_error {
 public:
  enum class Kind { Io, BadMagic, Truncated, CountMismatch };

  IdxError(Kind kind, const std::string& message) : std::runtime_error(message), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

/// Loads an image file (magic 0x00000803) and a label file (magic
/// 0x00000801) whose sample counts must agree.
RawDataset load_idx(const std::string& images_path, const std::string& labels_path);

/// Writes a dataset back out in IDX form (gzip-compressed when `gzip`);
/// used by the packaged-data generator and the format tests.
void save_idx(const RawDataset& ds, const std::string& images_path,
              const std::string& labels_path, bool gzip = false);

}  // namespace qfed::data
