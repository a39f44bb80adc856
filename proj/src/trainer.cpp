#include "sqsearch/trainer.hpp"

#include "sqsearch/evaluation.hpp"
#include "sqsearch/numerics.hpp"
#include "sqsearch/rng.hpp"
#include "sqsearch/search.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iostream>
#include <limits>
#include <stdexcept>

namespace sqsearch {

namespace {

RowMatrixXd reconstruct_all(const Codebooks& cb, const CodeMatrix& codes) {
  RowMatrixXd out(codes.rows(), cb.dim);
  for (std::int64_t n = 0; n < codes.rows(); ++n) {
    out.row(n) = reconstruct(cb, codes.row(n)).transpose();
  }
  return out;
}

void check_shapes(const ModelBundle& model, const CodeMatrix& codes, const LabeledDataset& ds) {
  model.validate();
  if (ds.vectors.cols() != model.transform.rows()) {
    throw std::invalid_argument("trainer: vector dimension " + std::to_string(ds.vectors.cols()) +
                                " does not match transform input size " +
                                std::to_string(model.transform.rows()));
  }
  if (codes.rows() != ds.size()) {
    throw std::invalid_argument("trainer: code and dataset row counts differ");
  }
  if (codes.rows() > 0 && codes.dicts() != model.codebooks.num_dicts) {
    throw std::invalid_argument("trainer: code width does not match dictionary count");
  }
  if (ds.labels.cols() != model.classifier.cols()) {
    throw std::invalid_argument("trainer: label and classifier class counts differ");
  }
}

// Shared evaluation of the penalized objective (and optionally its gradient
// with respect to the codebook elements) for a candidate element matrix.
struct EvalInput {
  const CodeMatrix& codes;
  Eigen::Ref<const RowMatrixXd> elements;  // (M*K) x r
  int num_dicts;
  int dict_size;
  const Eigen::MatrixXd& W;   // r x C; C may be 0 for the label-free objective
  const Eigen::MatrixXd& Y;   // N x C
  const RowMatrixXd& Z;       // N x r, transformed inputs
  double lambda;
  double gamma;
  double mu;
  double eps;
};

ObjectiveTerms eval_terms(const EvalInput& in, RowMatrixXd* grad) {
  const int m_count = in.num_dicts;
  const int k_count = in.dict_size;
  const int r = static_cast<int>(in.elements.cols());
  const std::int64_t n_count = in.codes.rows();

  const Eigen::VectorXd elem_sqn = in.elements.rowwise().squaredNorm();
  if (grad != nullptr) {
    grad->setZero(static_cast<std::int64_t>(m_count) * k_count, r);
  }

  double cls = 0.0, quant = 0.0, pen = 0.0;
  Eigen::VectorXd v(r), resid_q(r), resid_cls(in.W.cols()), base(r);
  for (std::int64_t n = 0; n < n_count; ++n) {
    const auto code = in.codes.row(n);
    v.setZero();
    double sqn_sum = 0.0;
    for (int m = 0; m < m_count; ++m) {
      const std::int64_t row = static_cast<std::int64_t>(m) * k_count + code[m];
      v += in.elements.row(row).transpose();
      sqn_sum += elem_sqn(row);
    }
    resid_cls.noalias() = in.W.transpose() * v;
    resid_cls -= in.Y.row(n).transpose();
    cls += resid_cls.squaredNorm();
    resid_q = v - in.Z.row(n).transpose();
    quant += resid_q.squaredNorm();
    const double violation = (v.squaredNorm() - sqn_sum) - in.eps;
    pen += violation * violation;

    if (grad != nullptr) {
      base.noalias() = 2.0 * (in.W * resid_cls);
      base += (2.0 * in.gamma) * resid_q;
      const double coef = 4.0 * in.mu * violation;
      for (int m = 0; m < m_count; ++m) {
        const std::int64_t row = static_cast<std::int64_t>(m) * k_count + code[m];
        grad->row(row) += base.transpose();
        grad->row(row) += coef * (v.transpose() - in.elements.row(row));
      }
    }
  }

  ObjectiveTerms terms;
  terms.classification = cls;
  terms.ridge = in.lambda * in.W.squaredNorm();
  terms.quantization = in.gamma * quant;
  terms.penalty = in.mu * pen;
  terms.psi = terms.classification + terms.ridge + terms.quantization + terms.penalty;
  return terms;
}

// One coordinate-descent sweep over dictionaries for every point. W may have
// zero columns, which drops the classification term. Returns changed entries.
int sweep_codes(const Codebooks& cb, const Eigen::MatrixXd& W, const Eigen::MatrixXd& Y,
                const RowMatrixXd& Z, double gamma, double mu, double eps, CodeMatrix& codes) {
  const int m_count = cb.num_dicts;
  const int k_count = cb.dict_size;
  const int r = cb.dim;
  const std::int64_t n_count = codes.rows();

  const Eigen::VectorXd elem_sqn = cb.elements.rowwise().squaredNorm();
  const Eigen::MatrixXd wte = cb.elements * W;  // (M*K) x C

  int changed = 0;
  Eigen::VectorXd v(r), wv(W.cols()), v_rest(r), wv_rest(W.cols()), cls_resid(W.cols());
  Eigen::VectorXd ez(static_cast<std::int64_t>(m_count) * k_count);
  for (std::int64_t n = 0; n < n_count; ++n) {
    auto code = codes.row(n);
    v.setZero();
    wv.setZero();
    double sqn_sum = 0.0;
    for (int m = 0; m < m_count; ++m) {
      const std::int64_t row = static_cast<std::int64_t>(m) * k_count + code[m];
      v += cb.elements.row(row).transpose();
      wv += wte.row(row).transpose();
      sqn_sum += elem_sqn(row);
    }
    const Eigen::VectorXd z = Z.row(n).transpose();
    ez.noalias() = cb.elements * z;
    const double z_sq = z.squaredNorm();

    for (int m = 0; m < m_count; ++m) {
      const std::int64_t base_row = static_cast<std::int64_t>(m) * k_count;
      const std::uint16_t cur = code[m];
      v_rest = v - cb.elements.row(base_row + cur).transpose();
      wv_rest = wv - wte.row(base_row + cur).transpose();
      const double sqn_rest = sqn_sum - elem_sqn(base_row + cur);
      const double v_rest_sq = v_rest.squaredNorm();
      const double rest_z = v_rest.dot(z);

      int best = 0;
      double best_val = std::numeric_limits<double>::infinity();
      for (int k = 0; k < k_count; ++k) {
        const std::int64_t row = base_row + k;
        const double dot_ve = cb.elements.row(row).dot(v_rest);
        // ||v_rest + e - z||^2 expanded around precomputed pieces.
        const double q =
            v_rest_sq - 2.0 * rest_z + z_sq + 2.0 * (dot_ve - ez(row)) + elem_sqn(row);
        double val = gamma * q;
        if (W.cols() > 0) {
          cls_resid = wv_rest + wte.row(row).transpose() - Y.row(n).transpose();
          val += cls_resid.squaredNorm();
        }
        const double prod = v_rest_sq + 2.0 * dot_ve - sqn_rest;
        const double violation = prod - eps;
        val += mu * violation * violation;
        if (val < best_val) {
          best_val = val;
          best = k;
        }
      }
      if (best != cur) {
        code[m] = static_cast<std::uint16_t>(best);
        const std::int64_t row = base_row + best;
        v = v_rest + cb.elements.row(row).transpose();
        wv = wv_rest + wte.row(row).transpose();
        sqn_sum = sqn_rest + elem_sqn(row);
        ++changed;
      }
    }
  }
  return changed;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

ObjectiveTerms objective(const ModelBundle& model, const CodeMatrix& codes,
                         const LabeledDataset& ds) {
  check_shapes(model, codes, ds);
  const Eigen::MatrixXd Y = ds.labels.cast<double>();
  const RowMatrixXd Z = ds.vectors * model.transform;
  EvalInput in{codes,          model.codebooks.elements, model.codebooks.num_dicts,
               model.codebooks.dict_size, model.classifier, Y, Z,
               model.hyper.lambda, model.hyper.gamma, model.hyper.mu, model.epsilon};
  return eval_terms(in, nullptr);
}

Eigen::MatrixXd update_w(const CodeMatrix& codes, const Codebooks& cb, const LabelMatrix& labels,
                         double lambda) {
  if (codes.rows() != labels.rows()) {
    throw std::invalid_argument("update_w: code and label row counts differ");
  }
  if (lambda < 0.0) throw std::invalid_argument("update_w: lambda must be nonnegative");
  const RowMatrixXd xbar = reconstruct_all(cb, codes);
  const Eigen::MatrixXd Y = labels.cast<double>();
  const Eigen::MatrixXd gram = xbar.transpose() * xbar;
  const Eigen::MatrixXd rhs = xbar.transpose() * Y;
  return solve_spd(gram, rhs, lambda);
}

Eigen::MatrixXd update_p(const RowMatrixXd& vectors, const CodeMatrix& codes,
                         const Codebooks& cb) {
  if (codes.rows() != vectors.rows()) {
    throw std::invalid_argument("update_p: code and vector row counts differ");
  }
  const RowMatrixXd xbar = reconstruct_all(cb, codes);
  const Eigen::MatrixXd gram = vectors.transpose() * vectors;
  const Eigen::MatrixXd rhs = vectors.transpose() * xbar;
  try {
    return solve_spd(gram, rhs, 0.0);
  } catch (const std::runtime_error&) {
    const double ridge = 1e-10 * gram.trace() / static_cast<double>(std::max<std::int64_t>(1, gram.rows()));
    std::cerr << "note: transform update hit a singular Gram matrix; retrying with ridge "
              << ridge << "\n";
    return solve_spd(gram, rhs, ridge);
  }
}

double update_epsilon(const CodeMatrix& codes, const Codebooks& cb) {
  if (codes.rows() < 1) throw std::invalid_argument("update_epsilon: no points");
  double total = 0.0;
  for (std::int64_t n = 0; n < codes.rows(); ++n) {
    total += inter_dict_product(cb, codes.row(n));
  }
  return total / static_cast<double>(codes.rows());
}

RowMatrixXd gradient_c(const ModelBundle& model, const CodeMatrix& codes,
                       const LabeledDataset& ds) {
  check_shapes(model, codes, ds);
  const Eigen::MatrixXd Y = ds.labels.cast<double>();
  const RowMatrixXd Z = ds.vectors * model.transform;
  EvalInput in{codes,          model.codebooks.elements, model.codebooks.num_dicts,
               model.codebooks.dict_size, model.classifier, Y, Z,
               model.hyper.lambda, model.hyper.gamma, model.hyper.mu, model.epsilon};
  RowMatrixXd grad;
  eval_terms(in, &grad);
  return grad;
}

Codebooks update_c(const ModelBundle& model, const CodeMatrix& codes, const LabeledDataset& ds,
                   const LbfgsConfig& lbfgs_cfg) {
  check_shapes(model, codes, ds);
  const Eigen::MatrixXd Y = ds.labels.cast<double>();
  const RowMatrixXd Z = ds.vectors * model.transform;
  const auto& cb = model.codebooks;
  const std::int64_t rows = cb.elements.rows();
  const std::int64_t size = rows * cb.dim;

  const auto to_terms = [&](const Eigen::VectorXd& x, RowMatrixXd* grad) {
    Eigen::Map<const RowMatrixXd> elements(x.data(), rows, cb.dim);
    EvalInput in{codes,        elements,        cb.num_dicts,       cb.dict_size,
                 model.classifier, Y, Z,
                 model.hyper.lambda, model.hyper.gamma, model.hyper.mu, model.epsilon};
    return eval_terms(in, grad);
  };

  const LbfgsObjective fn = [&](const Eigen::VectorXd& x, Eigen::VectorXd& grad_out) {
    RowMatrixXd grad;
    const auto terms = to_terms(x, &grad);
    grad_out = Eigen::Map<const Eigen::VectorXd>(grad.data(), size);
    return terms.psi;
  };

  Eigen::VectorXd x0 = Eigen::Map<const Eigen::VectorXd>(cb.elements.data(), size);
  const auto result = lbfgs_minimize(fn, std::move(x0), lbfgs_cfg);

  Codebooks updated = cb;
  updated.elements = Eigen::Map<const RowMatrixXd>(result.x.data(), rows, cb.dim);
  return updated;
}

CodeMatrix update_b(const ModelBundle& model, const CodeMatrix& codes, const LabeledDataset& ds) {
  check_shapes(model, codes, ds);
  const Eigen::MatrixXd Y = ds.labels.cast<double>();
  const RowMatrixXd Z = ds.vectors * model.transform;
  CodeMatrix out = codes;
  sweep_codes(model.codebooks, model.classifier, Y, Z, model.hyper.gamma, model.hyper.mu,
              model.epsilon, out);
  return out;
}

CodeMatrix encode_unlabeled(const ModelBundle& model, const RowMatrixXd& vectors) {
  model.validate();
  const auto& cb = model.codebooks;
  if (vectors.rows() == 0) return CodeMatrix(0, cb.num_dicts);

  const RowMatrixXd mapped = model.kernel ? kernel_map(vectors, *model.kernel) : vectors;
  if (mapped.cols() != model.transform.rows()) {
    throw std::invalid_argument("encode_unlabeled: vector dimension " +
                                std::to_string(mapped.cols()) +
                                " does not match transform input size " +
                                std::to_string(model.transform.rows()));
  }
  const RowMatrixXd Z = mapped * model.transform;
  const std::int64_t n_count = Z.rows();
  CodeMatrix codes(n_count, cb.num_dicts);

  // Greedy per-dictionary start: pick each element against the partial sum.
  const Eigen::VectorXd elem_sqn = cb.elements.rowwise().squaredNorm();
  Eigen::VectorXd v(cb.dim);
  for (std::int64_t n = 0; n < n_count; ++n) {
    v.setZero();
    const Eigen::VectorXd z = Z.row(n).transpose();
    for (int m = 0; m < cb.num_dicts; ++m) {
      const std::int64_t base_row = static_cast<std::int64_t>(m) * cb.dict_size;
      int best = 0;
      double best_val = std::numeric_limits<double>::infinity();
      for (int k = 0; k < cb.dict_size; ++k) {
        const std::int64_t row = base_row + k;
        // argmin of ||v + e - z||^2; the part constant in e is dropped.
        const double val = 2.0 * cb.elements.row(row).dot(v - z) + elem_sqn(row);
        if (val < best_val) {
          best_val = val;
          best = k;
        }
      }
      codes(n, m) = static_cast<std::uint16_t>(best);
      v += cb.elements.row(base_row + best).transpose();
    }
  }

  // Label-free coordinate descent to a fixpoint.
  const Eigen::MatrixXd w_empty(cb.dim, 0);
  const Eigen::MatrixXd y_empty(n_count, 0);
  constexpr int kMaxSweeps = 10;
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    if (sweep_codes(cb, w_empty, y_empty, Z, model.hyper.gamma, model.hyper.mu, model.epsilon,
                    codes) == 0) {
      break;
    }
  }
  return codes;
}

TrainResult train(const LabeledDataset& ds, const TrainConfig& cfg) {
  ds.validate();
  const std::int64_t n_count = ds.size();
  if (n_count < 1) throw std::invalid_argument("train: empty dataset");
  if (cfg.subspace_dim < 1 || cfg.subspace_dim > ds.dim()) {
    throw std::invalid_argument("train: subspace_dim must be in [1, d]");
  }
  if (cfg.num_dicts < 1) throw std::invalid_argument("train: need at least one dictionary");
  if (cfg.dict_size < 1 || cfg.dict_size > 65536) {
    throw std::invalid_argument("train: dictionary size out of range");
  }
  if (cfg.outer_iters < 1) throw std::invalid_argument("train: outer_iters must be >= 1");
  if (cfg.rel_tol <= 0.0) throw std::invalid_argument("train: rel_tol must be positive");
  if (cfg.gamma < 0.0 || cfg.mu < 0.0 || cfg.lambda < 0.0) {
    throw std::invalid_argument("train: gamma, mu, lambda must be nonnegative");
  }

  const auto start = std::chrono::steady_clock::now();

  const PcaModel pca = pca_fit(ds.vectors, cfg.subspace_dim);
  ModelBundle model;
  model.transform = pca.components;
  model.hyper = {cfg.lambda, cfg.gamma, cfg.mu};

  RowMatrixXd Z = ds.vectors * model.transform;
  auto [cb, codes] = pq_train(Z, cfg.num_dicts, cfg.dict_size, Rng::derive(cfg.seed, 0));
  model.codebooks = std::move(cb);
  model.epsilon = update_epsilon(codes, model.codebooks);
  model.classifier = Eigen::MatrixXd::Zero(cfg.subspace_dim, ds.num_classes());

  TrainTrace trace;
  {
    const auto terms = objective(model, codes, ds);
    trace.records.push_back({0, terms.psi, terms.classification, terms.ridge, terms.quantization,
                             terms.penalty, seconds_since(start)});
  }

  double prev_psi = trace.records.back().psi;
  for (int iter = 1; iter <= cfg.outer_iters; ++iter) {
    const auto iter_start = std::chrono::steady_clock::now();
    if (cfg.supervised) {
      model.classifier = update_w(codes, model.codebooks, ds.labels, cfg.lambda);
    }
    if (cfg.learn_transform) {
      model.transform = update_p(ds.vectors, codes, model.codebooks);
    }
    model.epsilon = update_epsilon(codes, model.codebooks);
    model.codebooks = update_c(model, codes, ds, cfg.lbfgs);
    codes = update_b(model, codes, ds);

    const auto terms = objective(model, codes, ds);
    trace.records.push_back({iter, terms.psi, terms.classification, terms.ridge,
                             terms.quantization, terms.penalty, seconds_since(iter_start)});
    const double rel = (prev_psi - terms.psi) / std::max(std::abs(prev_psi), 1e-300);
    prev_psi = terms.psi;
    if (rel < cfg.rel_tol) break;
  }

  return {std::move(model), std::move(codes), std::move(trace)};
}

namespace {

LabeledDataset gather_rows(const LabeledDataset& ds, const std::vector<std::int64_t>& rows) {
  LabeledDataset out;
  out.vectors.resize(static_cast<std::int64_t>(rows.size()), ds.vectors.cols());
  out.labels.resize(static_cast<std::int64_t>(rows.size()), ds.labels.cols());
  out.ids.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.vectors.row(static_cast<std::int64_t>(i)) = ds.vectors.row(rows[i]);
    out.labels.row(static_cast<std::int64_t>(i)) = ds.labels.row(rows[i]);
    out.ids.push_back(ds.ids.empty() ? rows[i] : ds.ids[static_cast<std::size_t>(rows[i])]);
  }
  return out;
}

}  // namespace

GridSearchResult validate_grid(const LabeledDataset& ds, const TrainConfig& base,
                               const std::vector<std::pair<double, double>>& grid,
                               double validation_fraction, std::uint64_t seed) {
  if (grid.empty()) throw std::invalid_argument("validate_grid: empty grid");
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) {
    throw std::invalid_argument("validate_grid: validation_fraction must be in (0, 1)");
  }
  ds.validate();
  const std::int64_t n_count = ds.size();
  std::int64_t val_count =
      std::clamp<std::int64_t>(std::llround(validation_fraction * static_cast<double>(n_count)),
                               1, n_count - 1);

  Rng rng(seed);
  const auto chosen = rng.sample_without_replacement(static_cast<std::size_t>(n_count),
                                                     static_cast<std::size_t>(val_count));
  std::vector<char> in_val(static_cast<std::size_t>(n_count), 0);
  for (auto idx : chosen) in_val[idx] = 1;
  std::vector<std::int64_t> train_rows, val_rows;
  for (std::int64_t i = 0; i < n_count; ++i) {
    (in_val[static_cast<std::size_t>(i)] ? val_rows : train_rows).push_back(i);
  }
  const LabeledDataset train_ds = gather_rows(ds, train_rows);
  const LabeledDataset val_ds = gather_rows(ds, val_rows);

  GridSearchResult result;
  result.best_map = -1.0;
  for (const auto& [gamma, mu] : grid) {
    TrainConfig cfg = base;
    cfg.gamma = gamma;
    cfg.mu = mu;
    const TrainResult trained = train(train_ds, cfg);

    std::vector<std::vector<std::int64_t>> rankings;
    rankings.reserve(static_cast<std::size_t>(val_ds.size()));
    for (std::int64_t q = 0; q < val_ds.size(); ++q) {
      const Eigen::VectorXd q_prime = transform_query(trained.model, val_ds.vectors.row(q).transpose());
      const DistanceTable table = build_table(trained.model.codebooks, q_prime);
      rankings.push_back(scan(table, trained.codes, train_ds.size()).ids);
    }
    const EvalReport report = mean_average_precision(rankings, val_ds.labels, train_ds.labels, 0);
    result.entries.push_back({gamma, mu, report.map});
    if (report.map > result.best_map) {
      result.best_map = report.map;
      result.best_gamma = gamma;
      result.best_mu = mu;
    }
  }
  return result;
}

}  // namespace sqsearch
