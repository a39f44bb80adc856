#include "sqsearch/search.hpp"

#include <algorithm>
#include <queue>
#include <stdexcept>

namespace sqsearch {

Eigen::VectorXd transform_query(const ModelBundle& model, const Eigen::VectorXd& query) {
  if (model.kernel) {
    if (query.size() != model.kernel->input_dim()) {
      throw std::invalid_argument("transform_query: query dimension " +
                                  std::to_string(query.size()) +
                                  " does not match kernel anchor dimension " +
                                  std::to_string(model.kernel->input_dim()));
    }
    RowMatrixXd one(1, query.size());
    one.row(0) = query.transpose();
    const RowMatrixXd mapped = kernel_map(one, *model.kernel);
    return model.transform.transpose() * mapped.row(0).transpose();
  }
  if (query.size() != model.transform.rows()) {
    throw std::invalid_argument("transform_query: query dimension " +
                                std::to_string(query.size()) +
                                " does not match transform input size " +
                                std::to_string(model.transform.rows()));
  }
  return model.transform.transpose() * query;
}

DistanceTable build_table(const Codebooks& cb, const Eigen::VectorXd& q_prime) {
  if (q_prime.size() != cb.dim) {
    throw std::invalid_argument("build_table: query dimension " + std::to_string(q_prime.size()) +
                                " does not match codebook dimension " + std::to_string(cb.dim));
  }
  DistanceTable table;
  table.entries.resize(cb.num_dicts, cb.dict_size);
  for (int m = 0; m < cb.num_dicts; ++m) {
    for (int k = 0; k < cb.dict_size; ++k) {
      table.entries(m, k) = (q_prime.transpose() - cb.element(m, k)).squaredNorm();
    }
  }
  table.query_norm_term = static_cast<double>(cb.num_dicts - 1) * q_prime.squaredNorm();
  return table;
}

SearchResult scan(const DistanceTable& table, const CodeMatrix& codes, std::int64_t top_k,
                  bool exact_scores, double epsilon) {
  if (top_k < 1) throw std::invalid_argument("scan: top_k must be at least 1");
  const std::int64_t n_count = codes.rows();
  if (n_count > 0 && codes.dicts() != table.num_dicts()) {
    throw std::invalid_argument("scan: code width does not match table");
  }
  const int m_count = table.num_dicts();
  top_k = std::min(top_k, n_count);

  SearchResult result;

  // Bounded max-heap keyed by (score, id): the worst kept candidate on top.
  using Entry = std::pair<double, std::int64_t>;
  std::priority_queue<Entry> heap;

  for (std::int64_t n = 0; n < n_count; ++n) {
    const auto code = codes.row(n);
    double score = 0.0;
    for (int m = 0; m < m_count; ++m) {
      score += table.entries(m, code[m]);
      ++result.table_lookups;
    }
    if (static_cast<std::int64_t>(heap.size()) < top_k) {
      heap.emplace(score, n);
    } else if (Entry(score, n) < heap.top()) {
      heap.pop();
      heap.emplace(score, n);
    }
  }

  result.ids.resize(heap.size());
  result.scores.resize(heap.size());
  for (std::size_t i = heap.size(); i-- > 0;) {
    result.ids[i] = heap.top().second;
    result.scores[i] = heap.top().first;
    heap.pop();
  }
  if (exact_scores) {
    // The two scan constants shift every score equally; ranking is unchanged.
    const double shift = epsilon - table.query_norm_term;
    for (auto& s : result.scores) s += shift;
  }
  return result;
}

double exact_distance(const DistanceTable& table, const Codebooks& cb,
                      std::span<const std::uint16_t> code) {
  if (static_cast<int>(code.size()) != table.num_dicts()) {
    throw std::invalid_argument("exact_distance: code width does not match table");
  }
  double lookup_sum = 0.0;
  for (int m = 0; m < table.num_dicts(); ++m) {
    lookup_sum += table.entries(m, code[static_cast<std::size_t>(m)]);
  }
  return lookup_sum - table.query_norm_term + inter_dict_product(cb, code);
}

double kendall_tau(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("kendall_tau: length mismatch");
  const std::size_t n = a.size();
  if (n < 2) throw std::invalid_argument("kendall_tau: need at least two items");
  std::int64_t concordant = 0, discordant = 0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double da = a[i] - a[j];
      const double db = b[i] - b[j];
      const double prod = da * db;
      if (prod > 0.0) {
        ++concordant;
      } else if (prod < 0.0) {
        ++discordant;
      }
    }
  }
  const double pairs = 0.5 * static_cast<double>(n) * static_cast<double>(n - 1);
  return static_cast<double>(concordant - discordant) / pairs;
}

}  // namespace sqsearch
