#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ascii/types.hpp"

namespace ascii {

// A labeled table: features, labels in [1, K], and one unique string ID per
// row. IDs are what agents align on; every vertical slice of a dataset
// keeps the full ID and label columns.
struct Dataset {
  FeatureMatrix features;
  ClassVector labels;
  std::vector<std::string> sample_ids;
  std::string label_name = "label";

  size_t rows() const { return features.rows; }
  size_t cols() const { return features.cols; }
  void validate() const;  // aligned sizes, unique ids
};

// Isotropic Gaussian blobs: one cluster center per class drawn uniformly
// from [center_min, center_max]^informative, class sizes balanced within
// one sample, plus `redundant` pure-noise N(0,1) columns. Rows are
// interleaved by class and IDs are zero-padded row indices.
struct BlobSpec {
  size_t n = 0;
  int informative = 2;
  int redundant = 0;
  int classes = 2;
  double cluster_std = 1.0;
  double center_min = -10.0;
  double center_max = 10.0;
  uint64_t seed = 0;

  void validate() const;
};

Dataset generate_blobs(const BlobSpec& spec);

struct CsvOptions {
  char delimiter = ',';
  std::string label_column;                // required
  std::optional<std::string> id_column;    // default: row index
};

// Loads a delimited text file with a header row. All non-label, non-id
// columns must be numeric. Labels are mapped to 1..K by sorted distinct
// value (numeric order when every label parses as a number, lexicographic
// otherwise). Malformed cells, missing labels and duplicate IDs raise
// ParseError naming the offending row.
Dataset load_csv(const std::filesystem::path& path, const CsvOptions& options);

void save_csv(const Dataset& data, const std::filesystem::path& path,
              char delimiter = ',');

// Versioned binary snapshot with explicit little-endian 64-bit floats.
void save_dataset(const Dataset& data, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);

enum class PartitionStrategy { even, explicit_sets, random };

struct PartitionSpec {
  PartitionStrategy strategy = PartitionStrategy::even;
  int agents = 1;
  std::vector<std::vector<size_t>> assignments;  // explicit_sets only
  uint64_t seed = 0;                             // random only
};

// Column index sets per agent: `even` deals contiguous blocks with the
// remainder going to the earlier agents; `random` permutes columns first;
// `explicit_sets` takes the given disjoint non-empty sets as-is.
std::vector<std::vector<size_t>> make_column_assignments(size_t cols,
                                                         const PartitionSpec& spec);

// Vertical slices: each agent gets its feature columns plus the shared
// label and ID columns, rows in the original order.
std::vector<Dataset> partition_vertical(const Dataset& data,
                                        const PartitionSpec& spec);
Dataset select_columns(const Dataset& data, const std::vector<size_t>& columns);

// Row subset (duplicates allowed) in the given order.
Dataset select_rows(const Dataset& data, const std::vector<size_t>& rows);

// Seeded shuffle of row indices, then a split with round(n * fraction)
// training rows. The permutation depends only on (n, seed), so applying the
// same split to different vertical slices keeps rows aligned. Rejects
// splits that leave either side empty.
std::pair<Dataset, Dataset> split_train_test(const Dataset& data, double fraction,
                                             uint64_t seed);

// `count` (train, test) pairs; pair k resamples n rows with replacement
// using seed + k, re-keys IDs to fresh zero-padded indices (so IDs stay
// unique), then splits with the same derived seed.
std::vector<std::pair<Dataset, Dataset>> bootstrap_replications(
    const Dataset& data, int count, double train_fraction, uint64_t seed);

// Row resample with replacement (n rows, repeats allowed), fresh IDs.
Dataset bootstrap_resample(const Dataset& data, uint64_t seed);

std::string zero_padded_id(size_t index, size_t n);

}  // namespace ascii
