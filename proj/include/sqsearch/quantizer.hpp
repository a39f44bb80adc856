#pragma once

#include "sqsearch/types.hpp"

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace sqsearch {

/// M dictionaries of K elements each, living in the r-dimensional transformed
/// space. A vector is approximated by the sum of one element per dictionary.
struct Codebooks {
  int num_dicts = 0;      // M
  int dict_size = 0;      // K
  int dim = 0;            // r
  RowMatrixXd elements;   // (M*K) x r; element (m, k) is row m*K + k

  auto element(int m, int k) const { return elements.row(m * dict_size + k); }
  auto element(int m, int k) { return elements.row(m * dict_size + k); }
};

/// Dense selector indices: one element index in [0, K) per dictionary per point.
class CodeMatrix {
 public:
  CodeMatrix() = default;
  CodeMatrix(std::int64_t rows, int num_dicts)
      : rows_(rows), dicts_(num_dicts),
        data_(static_cast<std::size_t>(rows) * static_cast<std::size_t>(num_dicts), 0) {}

  std::int64_t rows() const { return rows_; }
  int dicts() const { return dicts_; }

  std::uint16_t operator()(std::int64_t n, int m) const {
    return data_[static_cast<std::size_t>(n) * dicts_ + m];
  }
  std::uint16_t& operator()(std::int64_t n, int m) {
    return data_[static_cast<std::size_t>(n) * dicts_ + m];
  }

  std::span<const std::uint16_t> row(std::int64_t n) const {
    return {data_.data() + static_cast<std::size_t>(n) * dicts_, static_cast<std::size_t>(dicts_)};
  }
  std::span<std::uint16_t> row(std::int64_t n) {
    return {data_.data() + static_cast<std::size_t>(n) * dicts_, static_cast<std::size_t>(dicts_)};
  }

  const std::vector<std::uint16_t>& data() const { return data_; }

  bool operator==(const CodeMatrix& other) const = default;

 private:
  std::int64_t rows_ = 0;
  int dicts_ = 0;
  std::vector<std::uint16_t> data_;
};

/// Sum of the selected elements, one per dictionary.
Eigen::VectorXd reconstruct(const Codebooks& cb, std::span<const std::uint16_t> code);

/// Sum over ordered pairs of distinct dictionaries of the inner products of
/// the selected elements; equals ||reconstruction||^2 - sum of element norms.
double inter_dict_product(const Codebooks& cb, std::span<const std::uint16_t> code);

/// Total squared reconstruction error of `codes` against target rows Z.
double quantization_error(const Codebooks& cb, const CodeMatrix& codes, const RowMatrixXd& Z);

/// Product-quantization training: splits the dimensions into M contiguous
/// chunks (zero-padding when M does not divide the width), clusters each chunk
/// with K centroids, and embeds each centroid at its chunk's coordinates so
/// reconstruct() applies unchanged.
std::pair<Codebooks, CodeMatrix> pq_train(const RowMatrixXd& Z, int num_dicts, int dict_size,
                                          std::uint64_t seed);

/// Warm start for longer codes: keeps existing dictionaries and code columns,
/// appends all-zero dictionaries and uniform-random code columns.
std::pair<Codebooks, CodeMatrix> extend_codebooks(const Codebooks& cb, const CodeMatrix& codes,
                                                  int new_num_dicts, std::uint64_t seed);

}  // namespace sqsearch
