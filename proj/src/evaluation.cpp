#include "sqsearch/evaluation.hpp"

#include <json.hpp>

#include <algorithm>
#include <stdexcept>

namespace sqsearch {

bool is_true_neighbor(std::span<const std::uint8_t> query_labels,
                      std::span<const std::uint8_t> db_labels) {
  if (query_labels.size() != db_labels.size()) {
    throw std::invalid_argument("is_true_neighbor: label vector lengths differ");
  }
  for (std::size_t c = 0; c < query_labels.size(); ++c) {
    if (query_labels[c] != 0 && db_labels[c] != 0) return true;
  }
  return false;
}

std::span<const std::uint8_t> label_row(const LabelMatrix& labels, std::int64_t row) {
  return {labels.data() + row * labels.cols(), static_cast<std::size_t>(labels.cols())};
}

double average_precision(const std::vector<std::int64_t>& ranked_ids,
                         std::span<const std::uint8_t> query_labels, const LabelMatrix& db_labels,
                         std::int64_t r_cutoff) {
  std::int64_t window = static_cast<std::int64_t>(ranked_ids.size());
  if (r_cutoff > 0) window = std::min(window, r_cutoff);

  double precision_sum = 0.0;
  std::int64_t hits = 0;
  for (std::int64_t rank = 1; rank <= window; ++rank) {
    const std::int64_t id = ranked_ids[static_cast<std::size_t>(rank - 1)];
    if (id < 0 || id >= db_labels.rows()) {
      throw std::out_of_range("average_precision: unknown database id " + std::to_string(id));
    }
    if (is_true_neighbor(query_labels, label_row(db_labels, id))) {
      ++hits;
      precision_sum += static_cast<double>(hits) / static_cast<double>(rank);
    }
  }
  // No true neighbor retrieved in the window: defined as zero.
  if (hits == 0) return 0.0;
  return precision_sum / static_cast<double>(hits);
}

EvalReport mean_average_precision(const std::vector<std::vector<std::int64_t>>& all_ranked,
                                  const LabelMatrix& query_labels, const LabelMatrix& db_labels,
                                  std::int64_t r_cutoff) {
  const std::int64_t q_count = static_cast<std::int64_t>(all_ranked.size());
  if (q_count < 1) throw std::invalid_argument("mean_average_precision: no queries");
  if (query_labels.rows() != q_count) {
    throw std::invalid_argument("mean_average_precision: ranking and label counts differ");
  }
  if (query_labels.cols() != db_labels.cols()) {
    throw std::invalid_argument("mean_average_precision: class counts differ");
  }

  EvalReport report;
  report.r_cutoff = r_cutoff > 0 ? r_cutoff : db_labels.rows();
  report.num_queries = q_count;
  report.per_query_ap.reserve(static_cast<std::size_t>(q_count));
  double total = 0.0;
  for (std::int64_t q = 0; q < q_count; ++q) {
    const double ap = average_precision(all_ranked[static_cast<std::size_t>(q)],
                                        label_row(query_labels, q), db_labels, r_cutoff);
    report.per_query_ap.push_back(ap);
    total += ap;
  }
  report.map = total / static_cast<double>(q_count);
  return report;
}

std::string eval_report_json(const EvalReport& report) {
  nlohmann::ordered_json j;
  j["map"] = report.map;
  j["r_cutoff"] = report.r_cutoff;
  j["num_queries"] = report.num_queries;
  j["per_query_ap"] = report.per_query_ap;
  return j.dump();
}

}  // namespace sqsearch
