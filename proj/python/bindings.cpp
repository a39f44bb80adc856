#include "sqsearch/dataset.hpp"
#include "sqsearch/evaluation.hpp"
#include "sqsearch/kernel.hpp"
#include "sqsearch/model.hpp"
#include "sqsearch/rng.hpp"
#include "sqsearch/search.hpp"
#include "sqsearch/trainer.hpp"

#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <optional>

namespace py = pybind11;
using namespace sqsearch;

namespace {

CodeMatrix codes_from_array(const py::array_t<std::uint16_t, py::array::c_style>& array) {
  if (array.ndim() != 2) throw std::invalid_argument("codes must be a 2-D uint16 array");
  CodeMatrix codes(array.shape(0), static_cast<int>(array.shape(1)));
  const auto view = array.unchecked<2>();
  for (py::ssize_t n = 0; n < array.shape(0); ++n) {
    for (py::ssize_t m = 0; m < array.shape(1); ++m) {
      codes(n, static_cast<int>(m)) = view(n, m);
    }
  }
  return codes;
}

py::array_t<std::uint16_t> codes_to_array(const CodeMatrix& codes) {
  py::array_t<std::uint16_t> array({codes.rows(), static_cast<std::int64_t>(codes.dicts())});
  auto view = array.mutable_unchecked<2>();
  for (std::int64_t n = 0; n < codes.rows(); ++n) {
    for (int m = 0; m < codes.dicts(); ++m) view(n, m) = codes(n, m);
  }
  return array;
}

LabeledDataset dataset_from_arrays(const RowMatrixXd& vectors, const LabelMatrix& labels) {
  LabeledDataset ds;
  ds.vectors = vectors;
  ds.labels = labels;
  ds.ids.resize(static_cast<std::size_t>(vectors.rows()));
  for (std::size_t i = 0; i < ds.ids.size(); ++i) ds.ids[i] = static_cast<std::int64_t>(i);
  ds.validate();
  return ds;
}

py::dict trace_record_dict(const IterationRecord& rec) {
  py::dict d;
  d["iteration"] = rec.iteration;
  d["psi"] = rec.psi;
  d["term_classification"] = rec.term_classification;
  d["term_ridge"] = rec.term_ridge;
  d["term_quantization"] = rec.term_quantization;
  d["term_penalty"] = rec.term_penalty;
  d["seconds"] = rec.seconds;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Supervised composite quantization for semantic similarity search";

  py::class_<ModelBundle>(m, "Model")
      .def_property_readonly("input_dim", &ModelBundle::input_dim)
      .def_property_readonly("subspace_dim", &ModelBundle::subspace_dim)
      .def_property_readonly("num_classes", &ModelBundle::num_classes)
      .def_property_readonly("num_dicts",
                             [](const ModelBundle& model) { return model.codebooks.num_dicts; })
      .def_property_readonly("dict_size",
                             [](const ModelBundle& model) { return model.codebooks.dict_size; })
      .def_property_readonly("epsilon", [](const ModelBundle& model) { return model.epsilon; })
      .def_property_readonly("gamma", [](const ModelBundle& model) { return model.hyper.gamma; })
      .def_property_readonly("mu", [](const ModelBundle& model) { return model.hyper.mu; })
      .def_property_readonly("lambda_", [](const ModelBundle& model) { return model.hyper.lambda; })
      .def_property_readonly("has_kernel",
                             [](const ModelBundle& model) { return model.kernel.has_value(); })
      .def_property_readonly("transform", [](const ModelBundle& model) { return model.transform; })
      .def_property_readonly("classifier",
                             [](const ModelBundle& model) { return model.classifier; })
      .def("save", &save_model, py::arg("path"))
      .def_static("load", &load_model, py::arg("path"))
      .def("__repr__", [](const ModelBundle& model) {
        return "<sqsearch.Model d=" + std::to_string(model.input_dim()) +
               " r=" + std::to_string(model.subspace_dim()) +
               " M=" + std::to_string(model.codebooks.num_dicts) +
               " K=" + std::to_string(model.codebooks.dict_size) + ">";
      });

  m.def(
      "train",
      [](const RowMatrixXd& vectors, const LabelMatrix& labels, double gamma, double mu,
         double lambda, int r, int m_dicts, int k, int outer_iters, double rel_tol,
         bool learn_transform, bool supervised, std::uint64_t seed, int kernel_anchors) {
        LabeledDataset ds;
        std::optional<KernelMap> kernel;
        if (kernel_anchors > 0) {
          const auto anchors = sample_anchors(vectors, kernel_anchors, Rng::derive(seed, 0xA17C));
          kernel = KernelMap{anchors, compute_sigma(vectors, anchors)};
          ds = dataset_from_arrays(kernel_map(vectors, *kernel), labels);
        } else {
          ds = dataset_from_arrays(vectors, labels);
        }
        TrainConfig cfg;
        cfg.gamma = gamma;
        cfg.mu = mu;
        cfg.lambda = lambda;
        cfg.subspace_dim = r;
        cfg.num_dicts = m_dicts;
        cfg.dict_size = k;
        cfg.outer_iters = outer_iters;
        cfg.rel_tol = rel_tol;
        cfg.learn_transform = learn_transform;
        cfg.supervised = supervised;
        cfg.seed = seed;
        auto result = train(ds, cfg);
        result.model.kernel = kernel;

        py::list trace;
        for (const auto& rec : result.trace.records) trace.append(trace_record_dict(rec));
        return py::make_tuple(result.model, codes_to_array(result.codes), trace);
      },
      py::arg("vectors"), py::arg("labels"), py::kw_only(), py::arg("gamma") = 1.0,
      py::arg("mu") = 0.1, py::arg("lambda_") = 1.0, py::arg("r") = 4, py::arg("m") = 2,
      py::arg("k") = 16, py::arg("outer_iters") = 30, py::arg("rel_tol") = 1e-4,
      py::arg("learn_transform") = true, py::arg("supervised") = true, py::arg("seed") = 0,
      py::arg("kernel_anchors") = 0,
      "Train a model; returns (model, codes, trace).");

  m.def(
      "encode",
      [](const ModelBundle& model, const RowMatrixXd& vectors) {
        return codes_to_array(encode_unlabeled(model, vectors));
      },
      py::arg("model"), py::arg("vectors"),
      "Codes for unlabeled vectors (the model's kernel map is applied when present).");

  m.def(
      "search",
      [](const ModelBundle& model, const py::array_t<std::uint16_t, py::array::c_style>& codes,
         const RowMatrixXd& queries, std::int64_t top_k, bool exact) {
        const CodeMatrix code_matrix = codes_from_array(codes);
        const std::int64_t effective = std::min<std::int64_t>(top_k, code_matrix.rows());
        py::array_t<std::int64_t> ids({queries.rows(), effective});
        py::array_t<double> scores({queries.rows(), effective});
        auto id_view = ids.mutable_unchecked<2>();
        auto score_view = scores.mutable_unchecked<2>();
        for (std::int64_t q = 0; q < queries.rows(); ++q) {
          const auto q_prime = transform_query(model, queries.row(q).transpose());
          const auto table = build_table(model.codebooks, q_prime);
          const auto result = scan(table, code_matrix, top_k, exact, model.epsilon);
          for (std::int64_t i = 0; i < effective; ++i) {
            id_view(q, i) = result.ids[static_cast<std::size_t>(i)];
            score_view(q, i) = result.scores[static_cast<std::size_t>(i)];
          }
        }
        return py::make_tuple(ids, scores);
      },
      py::arg("model"), py::arg("codes"), py::arg("queries"), py::arg("top_k") = 10,
      py::arg("exact") = false,
      "Rank encoded vectors for each query; returns (ids, scores) arrays.");

  m.def(
      "mean_average_precision",
      [](const py::array_t<std::int64_t, py::array::c_style>& rankings,
         const LabelMatrix& query_labels, const LabelMatrix& db_labels, std::int64_t r_cutoff) {
        if (rankings.ndim() != 2) throw std::invalid_argument("rankings must be 2-D");
        std::vector<std::vector<std::int64_t>> ranked(
            static_cast<std::size_t>(rankings.shape(0)));
        const auto view = rankings.unchecked<2>();
        for (py::ssize_t q = 0; q < rankings.shape(0); ++q) {
          auto& row = ranked[static_cast<std::size_t>(q)];
          row.reserve(static_cast<std::size_t>(rankings.shape(1)));
          for (py::ssize_t i = 0; i < rankings.shape(1); ++i) row.push_back(view(q, i));
        }
        const auto report = mean_average_precision(ranked, query_labels, db_labels, r_cutoff);
        py::dict d;
        d["map"] = report.map;
        d["r_cutoff"] = report.r_cutoff;
        d["num_queries"] = report.num_queries;
        d["per_query_ap"] = report.per_query_ap;
        return d;
      },
      py::arg("rankings"), py::arg("query_labels"), py::arg("db_labels"), py::arg("r_cutoff") = 0,
      "Mean average precision of ranked id lists under the shared-label rule.");

  m.def(
      "read_fvecs",
      [](const std::string& path) { return read_vectors(path, VectorFormat::kFvecs); },
      py::arg("path"));
  m.def("write_fvecs", &write_fvecs, py::arg("path"), py::arg("vectors"));
  m.def("read_labels", &read_labels, py::arg("path"), py::arg("num_classes"));
}
