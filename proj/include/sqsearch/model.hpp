#pragma once

#include "sqsearch/kernel.hpp"
#include "sqsearch/quantizer.hpp"

#include <optional>
#include <string>

namespace sqsearch {

struct Hyperparams {
  double lambda = 1.0;  // classifier ridge weight
  double gamma = 1.0;   // quantization-error weight
  double mu = 0.1;      // constant-product penalty weight
};

/// Everything needed to index and serve: the linear transform, the composite
/// codebooks, the constant product value, the linear classifier, and the
/// optional kernel feature map applied before the transform.
struct ModelBundle {
  Eigen::MatrixXd transform;    // d x r
  Codebooks codebooks;
  double epsilon = 0.0;
  Eigen::MatrixXd classifier;   // r x C
  Hyperparams hyper;
  std::optional<KernelMap> kernel;

  int input_dim() const { return static_cast<int>(transform.rows()); }
  int subspace_dim() const { return static_cast<int>(transform.cols()); }
  int num_classes() const { return static_cast<int>(classifier.cols()); }

  /// Throws std::invalid_argument on dimensional inconsistency.
  void validate() const;
};

/// Binary model file, little-endian, CRC32-terminated. Round-trips bit-exactly.
void save_model(const ModelBundle& model, const std::string& path);
ModelBundle load_model(const std::string& path);

}  // namespace sqsearch
