// Dataset pipeline: binary class filtering, 28x28 -> 4x4 average-pool
// preprocessing with unit normalization, Dirichlet label-distribution
// sampling, and the per-label largest-remainder split across clients.
#pragma once

#include <Eigen/Core>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "qfed/idx.hpp"

namespace qfed::data {

/// Keeps only samples labeled `class_a` or `class_b`, preserving order and
/// remapping labels to a->0, b->1.
RawDataset filter_binary(const RawDataset& ds, int class_a, int class_b);

/// Average-pools an image down to a 4x4 grid (7x7 blocks for the native
/// 28x28 inputs) and L2-normalizes the 16 pooled values. Rejects all-zero
/// images, which cannot be amplitude-encoded.
Eigen::VectorXd preprocess(std::span<const std::uint8_t> image, int rows = 28, int cols = 28);

/// Preprocessed dataset: feature columns ready for amplitude encoding.
struct Dataset {
  Eigen::MatrixXd features;  // 16 x N
  std::vector<int> labels;   // values in {0, 1}

  Eigen::Index size() const { return Eigen::Index(labels.size()); }
};

Dataset preprocess_all(const RawDataset& ds);

/// Label-category distribution matrix: row y holds the client shares of
/// label y, one simplex point per row.
struct PartitionMatrix {
  Eigen::MatrixXd d;  // labels x clients
  double alpha = 1.0;

  int label_count() const { return int(d.rows()); }
  int client_count() const { return int(d.cols()); }
  void validate() const;
};

/// Samples each row independently from the symmetric Dirichlet(alpha) via
/// normalized Gamma(alpha, 1) draws.
PartitionMatrix sample_partition_matrix(double alpha, int label_count, int client_count,
                                        std::mt19937_64& rng);

/// Splits sample indices across clients: per label, a seeded shuffle then
/// contiguous chunks sized by largest-remainder rounding of the matrix row.
/// Every sample lands on exactly one client.
std::vector<std::vector<int>> partition(std::span<const int> labels, const PartitionMatrix& d,
                                        std::mt19937_64& rng);

/// Deterministic synthetic 28x28 grayscale set with two learnable classes,
/// labeled 1 ("trouser-like" vertical bars) and 9 ("boot-like" lower-half
/// mass), plus a sprinkling of other labels that binary filtering removes.
/// Stands in for FashionMNIST on machines without the real files.
RawDataset make_synthetic_clothing(int count, std::uint64_t seed);

/// Locations of the four IDX files. `root` is joined with the standard
/// FashionMNIST file names unless explicit paths are given; each candidate
/// is also tried with a .gz suffix.
struct DataPaths {
  std::string root = "data/toy";
  std::optional<std::string> train_images, train_labels, test_images, test_labels;
  int class_a = 1;
  int class_b = 9;

  std::string resolve(bool train, bool images) const;
};

/// Load + filter + preprocess in one step.
Dataset load_binary_dataset(const DataPaths& paths, bool train);

}  // namespace qfed::data
