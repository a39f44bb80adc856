#pragma once

#include "sqsearch/dataset.hpp"
#include "sqsearch/model.hpp"
#include "sqsearch/rng.hpp"

#include <cmath>
#include <vector>

namespace sqsearch::testing {

/// Gaussian class blobs: `per_class` points around each of `num_classes`
/// centers. The centers live in the first `signal_dims` coordinates (all of
/// them when signal_dims <= 0); the remaining coordinates carry zero-mean
/// noise with standard deviation `noise_dim_sigma` shared across classes.
inline LabeledDataset make_blobs(int num_classes, int per_class, int dim, double separation,
                                 double within_sigma, std::uint64_t seed, int signal_dims = 0,
                                 double noise_dim_sigma = 0.0) {
  if (signal_dims <= 0 || signal_dims > dim) signal_dims = dim;
  Rng rng(seed);
  RowMatrixXd centers(num_classes, dim);
  centers.setZero();
  for (int c = 0; c < num_classes; ++c) {
    for (int j = 0; j < signal_dims; ++j) centers(c, j) = separation * rng.normal();
  }

  const std::int64_t n = static_cast<std::int64_t>(num_classes) * per_class;
  LabeledDataset ds;
  ds.vectors.resize(n, dim);
  ds.labels = LabelMatrix::Zero(n, num_classes);
  ds.ids.resize(static_cast<std::size_t>(n));
  std::int64_t row = 0;
  for (int c = 0; c < num_classes; ++c) {
    for (int i = 0; i < per_class; ++i, ++row) {
      for (int j = 0; j < signal_dims; ++j) {
        ds.vectors(row, j) = centers(c, j) + within_sigma * rng.normal();
      }
      for (int j = signal_dims; j < dim; ++j) {
        ds.vectors(row, j) = noise_dim_sigma * rng.normal();
      }
      ds.labels(row, c) = 1;
      ds.ids[static_cast<std::size_t>(row)] = row;
    }
  }
  return ds;
}

inline RowMatrixXd random_matrix(std::int64_t rows, std::int64_t cols, Rng& rng,
                                 double scale = 1.0) {
  RowMatrixXd out(rows, cols);
  for (std::int64_t i = 0; i < rows; ++i) {
    for (std::int64_t j = 0; j < cols; ++j) out(i, j) = scale * rng.normal();
  }
  return out;
}

inline Codebooks random_codebooks(int m, int k, int r, Rng& rng, double scale = 1.0) {
  Codebooks cb;
  cb.num_dicts = m;
  cb.dict_size = k;
  cb.dim = r;
  cb.elements = random_matrix(static_cast<std::int64_t>(m) * k, r, rng, scale);
  return cb;
}

inline std::vector<std::uint16_t> random_code(int m, int k, Rng& rng) {
  std::vector<std::uint16_t> code(static_cast<std::size_t>(m));
  for (auto& c : code) c = static_cast<std::uint16_t>(rng.uniform_index(static_cast<std::size_t>(k)));
  return code;
}

/// Independent scalar-loop recomputation of the training objective. Kept free
/// of the library's matrix expressions on purpose: plain index arithmetic.
struct NaiveTerms {
  double classification = 0.0;
  double ridge = 0.0;
  double quantization = 0.0;
  double penalty = 0.0;
  double psi = 0.0;
};

inline NaiveTerms naive_objective(const ModelBundle& model, const CodeMatrix& codes,
                                  const LabeledDataset& ds) {
  const int m_count = model.codebooks.num_dicts;
  const int k_count = model.codebooks.dict_size;
  const int r = model.codebooks.dim;
  const int c_count = static_cast<int>(model.classifier.cols());
  const int d = static_cast<int>(model.transform.rows());

  NaiveTerms t;
  for (std::int64_t n = 0; n < ds.size(); ++n) {
    std::vector<double> v(static_cast<std::size_t>(r), 0.0);
    for (int m = 0; m < m_count; ++m) {
      const int k = codes(n, m);
      for (int j = 0; j < r; ++j) {
        v[static_cast<std::size_t>(j)] += model.codebooks.elements(m * k_count + k, j);
      }
    }
    for (int c = 0; c < c_count; ++c) {
      double pred = 0.0;
      for (int j = 0; j < r; ++j) pred += model.classifier(j, c) * v[static_cast<std::size_t>(j)];
      const double diff = static_cast<double>(ds.labels(n, c)) - pred;
      t.classification += diff * diff;
    }
    for (int j = 0; j < r; ++j) {
      double z = 0.0;
      for (int a = 0; a < d; ++a) z += model.transform(a, j) * ds.vectors(n, a);
      const double diff = v[static_cast<std::size_t>(j)] - z;
      t.quantization += diff * diff;
    }
    double product = 0.0;
    for (int i = 0; i < m_count; ++i) {
      for (int l = 0; l < m_count; ++l) {
        if (i == l) continue;
        double dot = 0.0;
        for (int j = 0; j < r; ++j) {
          dot += model.codebooks.elements(i * k_count + codes(n, i), j) *
                 model.codebooks.elements(l * k_count + codes(n, l), j);
        }
        product += dot;
      }
    }
    const double violation = product - model.epsilon;
    t.penalty += violation * violation;
  }
  for (int j = 0; j < r; ++j) {
    for (int c = 0; c < c_count; ++c) t.ridge += model.classifier(j, c) * model.classifier(j, c);
  }
  t.ridge *= model.hyper.lambda;
  t.quantization *= model.hyper.gamma;
  t.penalty *= model.hyper.mu;
  t.psi = t.classification + t.ridge + t.quantization + t.penalty;
  return t;
}

/// Per-point objective for one explicit code against a transformed target z,
/// same scalar style. An empty y drops the classification term entirely
/// (the label-free serving objective).
inline double naive_point_objective(const ModelBundle& model, std::span<const std::uint16_t> code,
                                    const Eigen::VectorXd& y, const Eigen::VectorXd& z) {
  const int m_count = model.codebooks.num_dicts;
  const int k_count = model.codebooks.dict_size;
  const int r = model.codebooks.dim;

  std::vector<double> v(static_cast<std::size_t>(r), 0.0);
  for (int m = 0; m < m_count; ++m) {
    for (int j = 0; j < r; ++j) {
      v[static_cast<std::size_t>(j)] +=
          model.codebooks.elements(m * k_count + code[static_cast<std::size_t>(m)], j);
    }
  }

  double cls = 0.0;
  if (y.size() > 0) {
    for (int c = 0; c < model.classifier.cols(); ++c) {
      double pred = 0.0;
      for (int j = 0; j < r; ++j) pred += model.classifier(j, c) * v[static_cast<std::size_t>(j)];
      const double diff = y(c) - pred;
      cls += diff * diff;
    }
  }

  double quant = 0.0;
  for (int j = 0; j < r; ++j) {
    const double diff = v[static_cast<std::size_t>(j)] - z(j);
    quant += diff * diff;
  }

  double product = 0.0;
  for (int i = 0; i < m_count; ++i) {
    for (int l = 0; l < m_count; ++l) {
      if (i == l) continue;
      double dot = 0.0;
      for (int j = 0; j < r; ++j) {
        dot += model.codebooks.elements(i * k_count + code[static_cast<std::size_t>(i)], j) *
               model.codebooks.elements(l * k_count + code[static_cast<std::size_t>(l)], j);
      }
      product += dot;
    }
  }
  const double violation = product - model.epsilon;
  return cls + model.hyper.gamma * quant + model.hyper.mu * violation * violation;
}

}  // namespace sqsearch::testing
