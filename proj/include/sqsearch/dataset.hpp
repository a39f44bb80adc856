#pragma once

#include "sqsearch/types.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace sqsearch {

/// Feature vectors with per-point binary class labels (multi-label allowed).
struct LabeledDataset {
  RowMatrixXd vectors;            // N x d
  LabelMatrix labels;             // N x C, every row has at least one 1
  std::vector<std::int64_t> ids;  // stable identifier per row

  std::int64_t size() const { return vectors.rows(); }
  int dim() const { return static_cast<int>(vectors.cols()); }
  int num_classes() const { return static_cast<int>(labels.cols()); }

  /// Throws std::invalid_argument when an invariant is broken.
  void validate() const;
};

enum class VectorFormat { kAuto, kFvecs, kCsv };

/// Reads an .fvecs or .csv file into an N x d matrix, row order preserved.
/// Inconsistent record dimensions and malformed records are errors.
RowMatrixXd read_vectors(const std::string& path, VectorFormat format = VectorFormat::kAuto);

void write_fvecs(const std::string& path, const RowMatrixXd& vectors);

RowMatrixXi read_ivecs(const std::string& path);
void write_ivecs(const std::string& path, const RowMatrixXi& values);

/// Parses a labels file: one line per point, comma-separated class ids in
/// [0, num_classes). Empty lines and out-of-range ids are errors.
LabelMatrix read_labels(const std::string& path, int num_classes);

/// Splits off `queries_per_class` points per class into a query set; the rest
/// become the training set. A multi-label point counts for its lowest labeled
/// class. Deterministic given `seed`.
std::pair<LabeledDataset, LabeledDataset> split_dataset(const LabeledDataset& ds,
                                                        int queries_per_class,
                                                        std::uint64_t seed);

}  // namespace sqsearch
