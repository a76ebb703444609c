#include "qfed/idx.hpp"

#include <zlib.h>

#include <array>

namespace qfed::data {

namespace {

constexpr std::uint32_t kImagesMagic = 0x00000803;
constexpr std::uint32_t kLabelsMagic = 0x00000801;

// gzFile reads both plain and gzip-compressed files.
class Reader {
 public:
  explicit Reader(const std::string& path) : path_(path), file_(gzopen(path.c_str(), "rb")) {
    if (!file_) throw IdxError(IdxError::Kind::Io, "cannot open " + path);
  }
  ~Reader() {
    if (file_) gzclose(file_);
  }
  Reader(const Reader&) = delete;
  Reader& operator=(const Reader&) = delete;

  void read_exact(void* out, std::size_t n) {
    const int got = gzread(file_, out, unsigned(n));
    if (got < 0 || std::size_t(got) != n)
      throw IdxError(IdxError::Kind::Truncated, path_ + " is truncated");
  }

  std::uint32_t read_u32_be() {
    std::array<std::uint8_t, 4> b{};
    read_exact(b.data(), b.size());
    return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) |
           (std::uint32_t(b[2]) << 8) | std::uint32_t(b[3]);
  }

  const std::string& path() const { return path_; }

 private:
  std::string path_;
  gzFile file_;
};

class Writer {
 public:
  Writer(const std::string& path, bool gzip)
      : file_(gzopen(path.c_str(), gzip ? "wb9" : "wbT")) {
    if (!file_) throw IdxError(IdxError::Kind::Io, "cannot open " + path + " for writing");
  }
  ~Writer() {
    if (file_) gzclose(file_);
  }
  Writer(const Writer&) = delete;
  Writer& operator=(const Writer&) = delete;

  void write(const void* data, std::size_t n) {
    if (gzwrite(file_, data, unsigned(n)) != int(n))
      throw IdxError(IdxError::Kind::Io, "short write");
  }

  void write_u32_be(std::uint32_t v) {
    const std::array<std::uint8_t, 4> b{std::uint8_t(v >> 24), std::uint8_t(v >> 16),
                                        std::uint8_t(v >> 8), std::uint8_t(v)};
    write(b.data(), b.size());
  }

 private:
  gzFile file_;
};

}  // namespace

RawDataset load_idx(const std::string& images_path, const std::string& labels_path) {
  RawDataset ds;

  Reader images(images_path);
  if (images.read_u32_be() != kImagesMagic)
    throw IdxError(IdxError::Kind::BadMagic, images_path + " is not an IDX image file");
  const std::uint32_t n_images = images.read_u32_be();
  ds.rows = int(images.read_u32_be());
  ds.cols = int(images.read_u32_be());
  if (ds.rows <= 0 || ds.cols <= 0 || ds.rows > 4096 || ds.cols > 4096)
    throw IdxError(IdxError::Kind::BadMagic, images_path + " has implausible dimensions");
  ds.pixels.resize(std::size_t(n_images) * ds.rows * ds.cols);
  images.read_exact(ds.pixels.data(), ds.pixels.size());

  Reader labels(labels_path);
  if (labels.read_u32_be() != kLabelsMagic)
    throw IdxError(IdxError::Kind::BadMagic, labels_path + " is not an IDX label file");
  const std::uint32_t n_labels = labels.read_u32_be();
  if (n_labels != n_images)
    throw IdxError(IdxError::Kind::CountMismatch,
                   images_path + " and " + labels_path + " disagree on sample count");
  ds.labels.resize(n_labels);
  labels.read_exact(ds.labels.data(), ds.labels.size());
  return ds;
}

void save_idx(const RawDataset& ds, const std::string& images_path,
              const std::string& labels_path, bool gzip) {
  Writer images(images_path, gzip);
  images.write_u32_be(kImagesMagic);
  images.write_u32_be(std::uint32_t(ds.size()));
  images.write_u32_be(std::uint32_t(ds.rows));
  images.write_u32_be(std::uint32_t(ds.cols));
  images.write(ds.pixels.data(), ds.pixels.size());

  Writer labels(labels_path, gzip);
  labels.write_u32_be(kLabelsMagic);
  labels.write_u32_be(std::uint32_t(ds.size()));
  labels.write(ds.labels.data(), ds.labels.size());
}

}  // namespace qfed::data
