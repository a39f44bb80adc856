#pragma once

#include "sqsearch/types.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace sqsearch {

struct EvalReport {
  double map = 0.0;
  std::vector<double> per_query_ap;
  std::int64_t r_cutoff = 0;
  std::int64_t num_queries = 0;
};

/// True when the two label vectors share at least one class.
bool is_true_neighbor(std::span<const std::uint8_t> query_labels,
                      std::span<const std::uint8_t> db_labels);

std::span<const std::uint8_t> label_row(const LabelMatrix& labels, std::int64_t row);

/// Average precision over the top-R window of a ranked id list. Precision is
/// accumulated at the rank of each true neighbor and normalized by the number
/// of true neighbors retrieved within the window; zero when none are.
/// r_cutoff <= 0 means the full list.
double average_precision(const std::vector<std::int64_t>& ranked_ids,
                         std::span<const std::uint8_t> query_labels, const LabelMatrix& db_labels,
                         std::int64_t r_cutoff);

EvalReport mean_average_precision(const std::vector<std::vector<std::int64_t>>& all_ranked,
                                  const LabelMatrix& query_labels, const LabelMatrix& db_labels,
                                  std::int64_t r_cutoff);

std::string eval_report_json(const EvalReport& report);

}  // namespace sqsearch
