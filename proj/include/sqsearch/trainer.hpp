#pragma once

#include "sqsearch/dataset.hpp"
#include "sqsearch/lbfgs.hpp"
#include "sqsearch/model.hpp"

#include <cstdint>
#include <utility>
#include <vector>

namespace sqsearch {

struct TrainConfig {
  double gamma = 1.0;
  double mu = 0.1;
  double lambda = 1.0;
  int subspace_dim = 256;       // r
  int num_dicts = 4;            // M
  int dict_size = 256;          // K
  int outer_iters = 30;
  double rel_tol = 1e-4;
  bool learn_transform = true;  // false: transform frozen at its PCA initialization
  bool supervised = true;       // false: classifier stays zero (label-free baseline)
  std::uint64_t seed = 0;
  LbfgsConfig lbfgs;
};

struct IterationRecord {
  int iteration = 0;   // 0 is the post-initialization state
  double psi = 0.0;
  double term_classification = 0.0;
  double term_ridge = 0.0;
  double term_quantization = 0.0;
  double term_penalty = 0.0;
  double seconds = 0.0;
};

struct TrainTrace {
  std::vector<IterationRecord> records;
};

struct ObjectiveTerms {
  double psi = 0.0;
  double classification = 0.0;
  double ridge = 0.0;
  double quantization = 0.0;
  double penalty = 0.0;
};

/// Penalized training objective and its four components. `ds.vectors` must be
/// in the space the transform applies to (kernel features already applied).
ObjectiveTerms objective(const ModelBundle& model, const CodeMatrix& codes,
                         const LabeledDataset& ds);

/// Ridge-regression update of the classifier given fixed codes and codebooks.
Eigen::MatrixXd update_w(const CodeMatrix& codes, const Codebooks& cb, const LabelMatrix& labels,
                         double lambda);

/// Normal-equation update of the transform; applies an automatic ridge when
/// the Gram matrix is numerically singular.
Eigen::MatrixXd update_p(const RowMatrixXd& vectors, const CodeMatrix& codes, const Codebooks& cb);

/// Mean over points of the inter-dictionary element product.
double update_epsilon(const CodeMatrix& codes, const Codebooks& cb);

/// Gradient of the objective with respect to every codebook element,
/// shaped like Codebooks::elements.
RowMatrixXd gradient_c(const ModelBundle& model, const CodeMatrix& codes,
                       const LabeledDataset& ds);

/// Codebook update by L-BFGS over the flattened elements. Returns the input
/// unchanged when the starting gradient is already below tolerance.
Codebooks update_c(const ModelBundle& model, const CodeMatrix& codes, const LabeledDataset& ds,
                   const LbfgsConfig& lbfgs_cfg);

/// One coordinate-descent sweep over dictionaries: per point, each code index
/// is replaced by the exhaustive argmin over the K elements. Ties break to the
/// smallest index; the per-point objective never increases.
CodeMatrix update_b(const ModelBundle& model, const CodeMatrix& codes, const LabeledDataset& ds);

/// Codes for vectors without labels (serving-time indexing): minimizes the
/// quantization + penalty terms only. Applies the model's kernel map when
/// present; sweeps coordinate descent to a fixpoint from a greedy start.
CodeMatrix encode_unlabeled(const ModelBundle& model, const RowMatrixXd& vectors);

struct TrainResult {
  ModelBundle model;
  CodeMatrix codes;
  TrainTrace trace;
};

/// Alternating minimization: PCA + product-quantization initialization, then
/// iterate the classifier, transform, constant, codebook, and code updates
/// until the relative objective decrease falls below rel_tol.
TrainResult train(const LabeledDataset& ds, const TrainConfig& cfg);

struct GridEntry {
  double gamma = 0.0;
  double mu = 0.0;
  double map = 0.0;
};

struct GridSearchResult {
  double best_gamma = 0.0;
  double best_mu = 0.0;
  double best_map = 0.0;
  std::vector<GridEntry> entries;  // in grid order
};

/// Trains one model per (gamma, mu) pair on a deterministic holdout split and
/// scores each by retrieval MAP with the held-out vectors as queries. Returns
/// the argmax; ties keep the first grid entry.
GridSearchResult validate_grid(const LabeledDataset& ds, const TrainConfig& base,
                               const std::vector<std::pair<double, double>>& grid,
                               double validation_fraction, std::uint64_t seed);

}  // namespace sqsearch
