#include "qfed/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <stdexcept>

#include "qfed/rng.hpp"

namespace qfed::data {

RawDataset filter_binary(const RawDataset& ds, int class_a, int class_b) {
  if (class_a == class_b) throw std::invalid_argument("binary classes must be distinct");
  RawDataset out;
  out.rows = ds.rows;
  out.cols = ds.cols;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const int label = ds.labels[i];
    if (label != class_a && label != class_b) continue;
    out.labels.push_back(label == class_a ? 0 : 1);
    const auto img = ds.image(i);
    out.pixels.insert(out.pixels.end(), img.begin(), img.end());
  }
  if (out.labels.empty()) throw std::invalid_argument("no samples with the requested classes");
  return out;
}

Eigen::VectorXd preprocess(std::span<const std::uint8_t> image, int rows, int cols) {
  constexpr int kGrid = 4;
  if (rows % kGrid != 0 || cols % kGrid != 0)
    throw std::invalid_argument("image dimensions must be divisible by 4");
  if (image.size() != std::size_t(rows) * cols)
    throw std::invalid_argument("image byte count does not match dimensions");
  const int br = rows / kGrid, bc = cols / kGrid;

  Eigen::VectorXd pooled(kGrid * kGrid);
  for (int gr = 0; gr < kGrid; ++gr)
    for (int gc = 0; gc < kGrid; ++gc) {
      double sum = 0.0;
      for (int r = gr * br; r < (gr + 1) * br; ++r)
        for (int c = gc * bc; c < (gc + 1) * bc; ++c) sum += image[std::size_t(r) * cols + c];
      pooled[gr * kGrid + gc] = sum / double(br * bc);
    }

  const double norm = pooled.norm();
  if (norm <= 0.0) throw std::invalid_argument("all-zero image cannot be encoded");
  return pooled / norm;
}

Dataset preprocess_all(const RawDataset& ds) {
  Dataset out;
  out.features.resize(16, Eigen::Index(ds.size()));
  out.labels.assign(ds.labels.begin(), ds.labels.end());
  for (std::size_t i = 0; i < ds.size(); ++i)
    out.features.col(Eigen::Index(i)) = preprocess(ds.image(i), ds.rows, ds.cols);
  return out;
}

void PartitionMatrix::validate() const {
  if (d.rows() < 1 || d.cols() < 1) throw std::invalid_argument("empty partition matrix");
  if ((d.array() < 0.0).any()) throw std::invalid_argument("partition shares must be nonnegative");
  for (Eigen::Index y = 0; y < d.rows(); ++y)
    if (std::abs(d.row(y).sum() - 1.0) > 1e-9)
      throw std::invalid_argument("partition rows must sum to 1");
}

PartitionMatrix sample_partition_matrix(double alpha, int label_count, int client_count,
                                        std::mt19937_64& rng) {
  if (alpha <= 0.0) throw std::invalid_argument("dirichlet concentration must be positive");
  if (label_count < 1 || client_count < 1)
    throw std::invalid_argument("label and client counts must be positive");
  PartitionMatrix out;
  out.alpha = alpha;
  out.d.resize(label_count, client_count);
  std::gamma_distribution<double> gamma(alpha, 1.0);
  for (int y = 0; y < label_count; ++y) {
    double sum = 0.0;
    for (int m = 0; m < client_count; ++m) {
      double g = gamma(rng);
      // Guard the (measure-zero, but float-possible) all-zero row.
      if (g <= 0.0) g = std::numeric_limits<double>::min();
      out.d(y, m) = g;
      sum += g;
    }
    out.d.row(y) /= sum;
  }
  return out;
}

std::vector<std::vector<int>> partition(std::span<const int> labels, const PartitionMatrix& d,
                                        std::mt19937_64& rng) {
  d.validate();
  const int label_count = d.label_count();
  const int clients = d.client_count();
  for (int l : labels)
    if (l < 0 || l >= label_count) throw std::invalid_argument("label outside partition matrix rows");

  std::vector<std::vector<int>> assignment(clients);
  for (int y = 0; y < label_count; ++y) {
    std::vector<int> pool;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == y) pool.push_back(int(i));
    std::shuffle(pool.begin(), pool.end(), rng);

    // Largest-remainder rounding of row shares into chunk sizes.
    const int total = int(pool.size());
    std::vector<int> take(clients);
    std::vector<std::pair<double, int>> remainder(clients);
    int assigned = 0;
    for (int m = 0; m < clients; ++m) {
      const double exact = d.d(y, m) * total;
      take[m] = int(std::floor(exact));
      remainder[m] = {exact - take[m], m};
      assigned += take[m];
    }
    std::sort(remainder.begin(), remainder.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first > b.first;
      return a.second < b.second;
    });
    for (int r = 0; r < total - assigned; ++r) take[remainder[r % clients].second] += 1;

    int cursor = 0;
    for (int m = 0; m < clients; ++m) {
      for (int t = 0; t < take[m]; ++t) assignment[m].push_back(pool[cursor++]);
    }
  }
  return assignment;
}

namespace {

void stamp_rect(RawDataset& ds, std::size_t i, int r0, int r1, int c0, int c1, int value,
                std::mt19937_64& rng) {
  std::normal_distribution<double> jitter(0.0, 14.0);
  const std::size_t base = i * std::size_t(ds.rows) * ds.cols;
  for (int r = std::max(0, r0); r < std::min(ds.rows, r1); ++r)
    for (int c = std::max(0, c0); c < std::min(ds.cols, c1); ++c) {
      const double v = value + jitter(rng);
      ds.pixels[base + std::size_t(r) * ds.cols + c] =
          std::uint8_t(std::clamp(v, 0.0, 255.0));
    }
}

}  // namespace

RawDataset make_synthetic_clothing(int count, std::uint64_t seed) {
  if (count < 1) throw std::invalid_argument("sample count must be positive");
  RawDataset ds;
  ds.rows = 28;
  ds.cols = 28;
  ds.pixels.assign(std::size_t(count) * 28 * 28, 0);
  ds.labels.resize(count);

  auto rng = make_rng(seed);
  std::uniform_int_distribution<int> shift(-2, 2);
  std::uniform_int_distribution<int> bright(140, 235);
  std::uniform_int_distribution<int> speckle_pos(0, 28 * 28 - 1);
  std::uniform_int_distribution<int> speckle_val(0, 90);
  std::uniform_int_distribution<int> other_label(0, 9);
  std::uniform_real_distribution<double> u(0.0, 1.0);

  for (int i = 0; i < count; ++i) {
    const std::size_t base = std::size_t(i) * 28 * 28;
    const double kind = u(rng);
    if (kind < 0.045) {
      // Filler classes that the binary filter drops.
      int label = other_label(rng);
      while (label == 1 || label == 9) label = other_label(rng);
      ds.labels[i] = std::uint8_t(label);
      for (int s = 0; s < 160; ++s) ds.pixels[base + speckle_pos(rng)] = std::uint8_t(bright(rng));
      continue;
    }

    const int dx = shift(rng), dy = shift(rng);
    const int v = bright(rng);
    if (kind < 0.045 + 0.4775) {
      // "Trouser": two bright vertical legs spanning most rows.
      ds.labels[i] = 1;
      stamp_rect(ds, i, 2 + dy, 26 + dy, 8 + dx, 12 + dx, v, rng);
      stamp_rect(ds, i, 2 + dy, 26 + dy, 16 + dx, 20 + dx, v, rng);
      stamp_rect(ds, i, 2 + dy, 7 + dy, 8 + dx, 20 + dx, v, rng);  // waistband
    } else {
      // "Ankle boot": heavy lower-half mass with a heel block.
      ds.labels[i] = 9;
      stamp_rect(ds, i, 15 + dy, 25 + dy, 3 + dx, 24 + dx, v, rng);
      stamp_rect(ds, i, 9 + dy, 15 + dy, 14 + dx, 24 + dx, v, rng);  // shaft
      stamp_rect(ds, i, 22 + dy, 26 + dy, 3 + dx, 10 + dx, std::min(255, v + 20), rng);
    }
    for (int s = 0; s < 25; ++s) {
      const int pos = speckle_pos(rng);
      if (ds.pixels[base + pos] == 0) ds.pixels[base + pos] = std::uint8_t(speckle_val(rng));
    }
  }
  return ds;
}

std::string DataPaths::resolve(bool train, bool images) const {
  const std::optional<std::string>* explicit_path =
      train ? (images ? &train_images : &train_labels) : (images ? &test_images : &test_labels);
  if (explicit_path->has_value()) return explicit_path->value();
  const char* name = train ? (images ? "train-images-idx3-ubyte" : "train-labels-idx1-ubyte")
                           : (images ? "t10k-images-idx3-ubyte" : "t10k-labels-idx1-ubyte");
  return (std::filesystem::path(root) / name).string();
}

namespace {

std::string existing_or_gz(const std::string& path) {
  namespace fs = std::filesystem;
  if (fs::exists(path)) return path;
  if (fs::exists(path + ".gz")) return path + ".gz";
  throw IdxError(IdxError::Kind::Io, "dataset file not found: " + path + " (or .gz)");
}

}  // namespace

Dataset load_binary_dataset(const DataPaths& paths, bool train) {
  const std::string images = existing_or_gz(paths.resolve(train, true));
  const std::string labels = existing_or_gz(paths.resolve(train, false));
  const RawDataset raw = load_idx(images, labels);
  return preprocess_all(filter_binary(raw, paths.class_a, paths.class_b));
}

}  // namespace qfed::data
