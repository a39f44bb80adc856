#include "sqsearch/quantizer.hpp"

#include "sqsearch/numerics.hpp"
#include "sqsearch/rng.hpp"

#include <algorithm>
#include <stdexcept>

namespace sqsearch {

namespace {

constexpr int kPqKmeansIters = 25;

void check_code(const Codebooks& cb, std::span<const std::uint16_t> code) {
  if (static_cast<int>(code.size()) != cb.num_dicts) {
    throw std::invalid_argument("code length " + std::to_string(code.size()) +
                                " does not match dictionary count " +
                                std::to_string(cb.num_dicts));
  }
  for (int m = 0; m < cb.num_dicts; ++m) {
    if (code[static_cast<std::size_t>(m)] >= cb.dict_size) {
      throw std::out_of_range("code index " + std::to_string(code[static_cast<std::size_t>(m)]) +
                              " out of range [0, " + std::to_string(cb.dict_size) +
                              ") in dictionary " + std::to_string(m));
    }
  }
}

}  // namespace

Eigen::VectorXd reconstruct(const Codebooks& cb, std::span<const std::uint16_t> code) {
  check_code(cb, code);
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(cb.dim);
  for (int m = 0; m < cb.num_dicts; ++m) {
    sum += cb.element(m, code[static_cast<std::size_t>(m)]).transpose();
  }
  return sum;
}

double inter_dict_product(const Codebooks& cb, std::span<const std::uint16_t> code) {
  check_code(cb, code);
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(cb.dim);
  double norms = 0.0;
  for (int m = 0; m < cb.num_dicts; ++m) {
    const auto element = cb.element(m, code[static_cast<std::size_t>(m)]);
    sum += element.transpose();
    norms += element.squaredNorm();
  }
  return sum.squaredNorm() - norms;
}

double quantization_error(const Codebooks& cb, const CodeMatrix& codes, const RowMatrixXd& Z) {
  if (codes.rows() != Z.rows()) {
    throw std::invalid_argument("quantization_error: row counts differ");
  }
  if (Z.cols() != cb.dim) {
    throw std::invalid_argument("quantization_error: dimension mismatch");
  }
  if (codes.rows() > 0 && codes.dicts() != cb.num_dicts) {
    throw std::invalid_argument("quantization_error: dictionary counts differ");
  }
  double total = 0.0;
  for (std::int64_t n = 0; n < Z.rows(); ++n) {
    total += (Z.row(n).transpose() - reconstruct(cb, codes.row(n))).squaredNorm();
  }
  return total;
}

std::pair<Codebooks, CodeMatrix> pq_train(const RowMatrixXd& Z, int num_dicts, int dict_size,
                                          std::uint64_t seed) {
  const std::int64_t n = Z.rows();
  const int dim = static_cast<int>(Z.cols());
  if (num_dicts < 1) throw std::invalid_argument("pq_train: need at least one dictionary");
  if (dict_size < 1) throw std::invalid_argument("pq_train: dictionary size must be positive");
  if (dict_size > n) {
    throw std::invalid_argument("pq_train: K = " + std::to_string(dict_size) + " exceeds N = " +
                                std::to_string(n));
  }
  if (dim < 1) throw std::invalid_argument("pq_train: empty vectors");

  // Contiguous chunks; the last chunks are zero-padded when M does not divide
  // the width, and the padding is dropped again when embedding centroids.
  const int chunk = (dim + num_dicts - 1) / num_dicts;

  Codebooks cb;
  cb.num_dicts = num_dicts;
  cb.dict_size = dict_size;
  cb.dim = dim;
  cb.elements = RowMatrixXd::Zero(static_cast<std::int64_t>(num_dicts) * dict_size, dim);
  CodeMatrix codes(n, num_dicts);

  for (int m = 0; m < num_dicts; ++m) {
    const int lo = m * chunk;
    const int live = std::max(0, std::min(chunk, dim - lo));
    RowMatrixXd chunk_data = RowMatrixXd::Zero(n, chunk);
    if (live > 0) chunk_data.leftCols(live) = Z.middleCols(lo, live);

    const auto km = kmeans(chunk_data, dict_size, kPqKmeansIters, Rng::derive(seed, m));
    for (int k = 0; k < dict_size; ++k) {
      if (live > 0) {
        cb.element(m, k).segment(lo, live) = km.centroids.row(k).head(live);
      }
    }
    for (std::int64_t i = 0; i < n; ++i) {
      codes(i, m) = static_cast<std::uint16_t>(km.assignments[static_cast<std::size_t>(i)]);
    }
  }
  return {std::move(cb), std::move(codes)};
}

std::pair<Codebooks, CodeMatrix> extend_codebooks(const Codebooks& cb, const CodeMatrix& codes,
                                                  int new_num_dicts, std::uint64_t seed) {
  if (new_num_dicts <= cb.num_dicts) {
    throw std::invalid_argument("extend_codebooks: new dictionary count " +
                                std::to_string(new_num_dicts) + " must exceed current " +
                                std::to_string(cb.num_dicts));
  }
  if (codes.dicts() != cb.num_dicts) {
    throw std::invalid_argument("extend_codebooks: codes do not match codebooks");
  }

  Codebooks extended;
  extended.num_dicts = new_num_dicts;
  extended.dict_size = cb.dict_size;
  extended.dim = cb.dim;
  extended.elements =
      RowMatrixXd::Zero(static_cast<std::int64_t>(new_num_dicts) * cb.dict_size, cb.dim);
  extended.elements.topRows(cb.elements.rows()) = cb.elements;

  Rng rng(seed);
  CodeMatrix out(codes.rows(), new_num_dicts);
  for (std::int64_t n = 0; n < codes.rows(); ++n) {
    for (int m = 0; m < cb.num_dicts; ++m) out(n, m) = codes(n, m);
  }
  // Column-by-column so each added dictionary consumes a contiguous stretch
  // of the generator stream.
  for (int m = cb.num_dicts; m < new_num_dicts; ++m) {
    for (std::int64_t n = 0; n < codes.rows(); ++n) {
      out(n, m) = static_cast<std::uint16_t>(
          rng.uniform_index(static_cast<std::size_t>(cb.dict_size)));
    }
  }
  return {std::move(extended), std::move(out)};
}

}  // namespace sqsearch
