#pragma once

#include "sqsearch/model.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace sqsearch {

/// Per-query table of squared distances from the transformed query to every
/// codebook element, plus the query-norm constant needed for exact distances.
struct DistanceTable {
  RowMatrixXd entries;           // M x K
  double query_norm_term = 0.0;  // (M-1) * ||q'||^2

  int num_dicts() const { return static_cast<int>(entries.rows()); }
  int dict_size() const { return static_cast<int>(entries.cols()); }
};

/// Applies the model's kernel map (when present) and the linear transform.
Eigen::VectorXd transform_query(const ModelBundle& model, const Eigen::VectorXd& query);

DistanceTable build_table(const Codebooks& cb, const Eigen::VectorXd& q_prime);

struct SearchResult {
  std::vector<std::int64_t> ids;  // ascending by score, ties by id
  std::vector<double> scores;
  std::uint64_t table_lookups = 0;
};

/// Linear scan: per point the score is the sum of M table lookups. Returns the
/// top_k smallest scores (all N when top_k exceeds N). With `exact_scores` the
/// reported values add the two scan-constant terms, using `epsilon` for the
/// cross-product; the ranking is unchanged.
SearchResult scan(const DistanceTable& table, const CodeMatrix& codes, std::int64_t top_k,
                  bool exact_scores = false, double epsilon = 0.0);

/// Squared distance between the transformed query and a reconstruction,
/// assembled from table lookups, the query-norm constant, and the exact
/// inter-dictionary product of the code.
double exact_distance(const DistanceTable& table, const Codebooks& cb,
                      std::span<const std::uint16_t> code);

/// Kendall rank correlation between two score vectors (diagnostics for
/// surrogate-vs-exact ranking agreement).
double kendall_tau(std::span<const double> a, std::span<const double> b);

}  // namespace sqsearch
