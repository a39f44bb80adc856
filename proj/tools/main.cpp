// sqsearch: train / encode / search / evaluate / tune for supervised
// composite quantization over dense feature vectors.

#include "sqsearch/checksum.hpp"
#include "sqsearch/dataset.hpp"
#include "sqsearch/evaluation.hpp"
#include "sqsearch/kernel.hpp"
#include "sqsearch/model.hpp"
#include "sqsearch/rng.hpp"
#include "sqsearch/search.hpp"
#include "sqsearch/trainer.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <charconv>
#include <chrono>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace {

using nlohmann::ordered_json;
using namespace sqsearch;

constexpr const char* kToolVersion = "0.1.0";

// Shortest round-trip decimal form, deterministic across runs.
std::string format_double(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

VectorFormat parse_format(const std::string& name) {
  if (name == "fvecs") return VectorFormat::kFvecs;
  if (name == "csv") return VectorFormat::kCsv;
  return VectorFormat::kAuto;
}

ordered_json input_entry(const std::string& path) {
  ordered_json j;
  j["path"] = path;
  j["crc32"] = crc32_file(path);
  return j;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open file for writing: " + path);
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path);
}

void write_manifest(const std::string& out_path, const ordered_json& manifest) {
  write_text(out_path + ".manifest.json", manifest.dump(2) + "\n");
}

void write_trace_csv(const std::string& path, const TrainTrace& trace) {
  std::string csv =
      "iteration,psi,term_classification,term_ridge,term_quantization,term_penalty,seconds\n";
  for (const auto& rec : trace.records) {
    csv += std::to_string(rec.iteration);
    csv += ',';
    csv += format_double(rec.psi);
    csv += ',';
    csv += format_double(rec.term_classification);
    csv += ',';
    csv += format_double(rec.term_ridge);
    csv += ',';
    csv += format_double(rec.term_quantization);
    csv += ',';
    csv += format_double(rec.term_penalty);
    csv += ',';
    csv += format_double(rec.seconds);
    csv += '\n';
  }
  write_text(path, csv);
}

// --- codes file (SQCB): magic, u32 N, M, K, then one byte per index ---

void save_codes(const std::string& path, const CodeMatrix& codes, int dict_size) {
  if (dict_size > 256) {
    throw std::runtime_error("codes file stores one byte per index; K must be <= 256");
  }
  std::string bytes;
  bytes.append("SQCB", 4);
  const auto append_u32 = [&](std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  };
  append_u32(static_cast<std::uint32_t>(codes.rows()));
  append_u32(static_cast<std::uint32_t>(codes.dicts()));
  append_u32(static_cast<std::uint32_t>(dict_size));
  for (std::int64_t n = 0; n < codes.rows(); ++n) {
    for (int m = 0; m < codes.dicts(); ++m) {
      bytes.push_back(static_cast<char>(codes(n, m) & 0xFF));
    }
  }
  write_text(path, bytes);
}

CodeMatrix load_codes(const std::string& path, int* dict_size_out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() < 16 || bytes.compare(0, 4, "SQCB") != 0) {
    throw std::runtime_error(path + ": not a codes file");
  }
  const auto read_u32 = [&](std::size_t at) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(bytes[at + i])) << (8 * i);
    }
    return v;
  };
  const std::uint32_t n = read_u32(4);
  const std::uint32_t m = read_u32(8);
  const std::uint32_t k = read_u32(12);
  if (bytes.size() != 16 + static_cast<std::size_t>(n) * m) {
    throw std::runtime_error(path + ": truncated codes file");
  }
  CodeMatrix codes(n, static_cast<int>(m));
  for (std::uint32_t i = 0; i < n; ++i) {
    for (std::uint32_t j = 0; j < m; ++j) {
      codes(i, static_cast<int>(j)) =
          static_cast<std::uint8_t>(bytes[16 + static_cast<std::size_t>(i) * m + j]);
    }
  }
  if (dict_size_out != nullptr) *dict_size_out = static_cast<int>(k);
  return codes;
}

std::vector<double> parse_grid(const std::string& csv) {
  std::vector<double> values;
  const char* p = csv.data();
  const char* end = p + csv.size();
  while (p < end) {
    double v = 0.0;
    const auto [next, ec] = std::from_chars(p, end, v);
    if (ec != std::errc{}) {
      throw CLI::ValidationError("grid", "malformed grid value in '" + csv + "'");
    }
    values.push_back(v);
    p = next;
    if (p < end) {
      if (*p != ',') throw CLI::ValidationError("grid", "expected ',' in grid '" + csv + "'");
      ++p;
    }
  }
  return values;
}

int bits_to_dicts(int bits, int dict_size) {
  if (dict_size < 2 || (dict_size & (dict_size - 1)) != 0 || dict_size > 65536) {
    throw CLI::ValidationError("--k", "dictionary size must be a power of two in [2, 65536]");
  }
  int bits_per_index = 0;
  for (int v = dict_size; v > 1; v >>= 1) ++bits_per_index;
  if (bits <= 0 || bits % bits_per_index != 0) {
    throw CLI::ValidationError(
        "--bits", "code length " + std::to_string(bits) + " is not a multiple of log2(K) = " +
                      std::to_string(bits_per_index));
  }
  return bits / bits_per_index;
}

struct CommonTrainArgs {
  std::string vectors_path;
  std::string labels_path;
  std::string format = "auto";
  int num_classes = 0;
  int bits = 32;
  double gamma = 1.0;
  double mu = 0.1;
  double lambda = 1.0;
  int subspace_dim = 256;
  bool subspace_dim_given = false;
  int dict_size = 256;
  int kernel_anchors = 0;
  int outer_iters = 30;
  double rel_tol = 1e-4;
  bool no_transform = false;
  std::uint64_t seed = 0;
};

void add_train_options(CLI::App* cmd, CommonTrainArgs& args) {
  cmd->add_option("--vectors", args.vectors_path, "training vectors (.fvecs or .csv)")->required();
  cmd->add_option("--labels", args.labels_path, "labels file, one line per vector")->required();
  cmd->add_option("--num-classes", args.num_classes, "number of classes")->required();
  cmd->add_option("--bits", args.bits, "code length in bits (M = bits / log2 K)");
  cmd->add_option("--gamma", args.gamma, "quantization-error weight");
  cmd->add_option("--mu", args.mu, "constant-product penalty weight");
  cmd->add_option("--lambda", args.lambda, "classifier ridge weight");
  cmd->add_option("--k", args.dict_size, "dictionary size K");
  cmd->add_option("--kernel", args.kernel_anchors,
                  "anchor count for the kernel representation (0 = off)");
  cmd->add_option("--iters", args.outer_iters, "maximum outer iterations");
  cmd->add_option("--rel-tol", args.rel_tol, "relative objective-decrease stopping tolerance");
  cmd->add_flag("--no-transform", args.no_transform,
                "freeze the transform at its PCA initialization");
  cmd->add_option("--seed", args.seed, "random seed");
  cmd->add_option("--format", args.format, "vector file format: auto, fvecs, csv")
      ->check(CLI::IsMember({"auto", "fvecs", "csv"}));
}

struct PreparedData {
  LabeledDataset ds;                // vectors in the space the transform sees
  std::optional<KernelMap> kernel;  // set when the kernel representation is on
};

PreparedData prepare_training_data(const CommonTrainArgs& args) {
  PreparedData out;
  RowMatrixXd raw = read_vectors(args.vectors_path, parse_format(args.format));
  out.ds.labels = read_labels(args.labels_path, args.num_classes);
  if (raw.rows() != out.ds.labels.rows()) {
    throw std::runtime_error("vectors and labels disagree on the number of points (" +
                             std::to_string(raw.rows()) + " vs " +
                             std::to_string(out.ds.labels.rows()) + ")");
  }
  if (args.kernel_anchors > 0) {
    const auto anchors = sample_anchors(raw, args.kernel_anchors, Rng::derive(args.seed, 0xA17C));
    const double sigma = compute_sigma(raw, anchors);
    out.kernel = KernelMap{anchors, sigma};
    out.ds.vectors = kernel_map(raw, *out.kernel);
  } else {
    out.ds.vectors = std::move(raw);
  }
  out.ds.ids.resize(static_cast<std::size_t>(out.ds.vectors.rows()));
  for (std::size_t i = 0; i < out.ds.ids.size(); ++i) out.ds.ids[i] = static_cast<std::int64_t>(i);
  return out;
}

TrainConfig make_train_config(const CommonTrainArgs& args, int effective_dim) {
  TrainConfig cfg;
  cfg.gamma = args.gamma;
  cfg.mu = args.mu;
  cfg.lambda = args.lambda;
  cfg.dict_size = args.dict_size;
  cfg.num_dicts = bits_to_dicts(args.bits, args.dict_size);
  cfg.outer_iters = args.outer_iters;
  cfg.rel_tol = args.rel_tol;
  cfg.learn_transform = !args.no_transform;
  cfg.seed = args.seed;
  cfg.subspace_dim = args.subspace_dim;
  if (!args.subspace_dim_given && cfg.subspace_dim > effective_dim) {
    std::cerr << "note: subspace dimension clamped from " << cfg.subspace_dim
              << " to the feature dimension " << effective_dim << "\n";
    cfg.subspace_dim = effective_dim;
  }
  return cfg;
}

ordered_json train_config_json(const CommonTrainArgs& args, const TrainConfig& cfg) {
  ordered_json j;
  j["gamma"] = cfg.gamma;
  j["mu"] = cfg.mu;
  j["lambda"] = cfg.lambda;
  j["r"] = cfg.subspace_dim;
  j["m"] = cfg.num_dicts;
  j["k"] = cfg.dict_size;
  j["bits"] = args.bits;
  j["kernel_anchors"] = args.kernel_anchors;
  j["outer_iters"] = cfg.outer_iters;
  j["rel_tol"] = cfg.rel_tol;
  j["learn_transform"] = cfg.learn_transform;
  j["seed"] = cfg.seed;
  return j;
}

int cmd_train(const CommonTrainArgs& args, const std::string& out_path) {
  auto prepared = prepare_training_data(args);
  const TrainConfig cfg = make_train_config(args, prepared.ds.dim());

  auto result = train(prepared.ds, cfg);
  result.model.kernel = prepared.kernel;
  save_model(result.model, out_path);
  write_trace_csv(out_path + ".trace.csv", result.trace);

  ordered_json manifest;
  manifest["tool"] = "sqsearch";
  manifest["version"] = kToolVersion;
  manifest["command"] = "train";
  manifest["config"] = train_config_json(args, cfg);
  manifest["inputs"]["vectors"] = input_entry(args.vectors_path);
  manifest["inputs"]["labels"] = input_entry(args.labels_path);
  manifest["outputs"]["model"] = out_path;
  manifest["outputs"]["trace"] = out_path + ".trace.csv";
  write_manifest(out_path, manifest);

  std::cerr << "trained " << cfg.num_dicts << "x" << cfg.dict_size << " codebooks over "
            << prepared.ds.size() << " points in " << result.trace.records.size() - 1
            << " iterations; final objective " << result.trace.records.back().psi << "\n";
  return 0;
}

int cmd_encode(const std::string& model_path, const std::string& vectors_path,
               const std::string& format, const std::string& out_path) {
  const ModelBundle model = load_model(model_path);
  const RowMatrixXd vectors = read_vectors(vectors_path, parse_format(format));
  const CodeMatrix codes = encode_unlabeled(model, vectors);
  save_codes(out_path, codes, model.codebooks.dict_size);

  ordered_json manifest;
  manifest["tool"] = "sqsearch";
  manifest["version"] = kToolVersion;
  manifest["command"] = "encode";
  manifest["inputs"]["model"] = input_entry(model_path);
  manifest["inputs"]["vectors"] = input_entry(vectors_path);
  manifest["outputs"]["codes"] = out_path;
  write_manifest(out_path, manifest);

  std::cerr << "encoded " << codes.rows() << " vectors into " << codes.dicts()
            << "-byte codes\n";
  return 0;
}

int cmd_search(const std::string& model_path, const std::string& codes_path,
               const std::string& queries_path, const std::string& format, std::int64_t top_k,
               bool exact, bool diagnostics, const std::string& out_path) {
  const ModelBundle model = load_model(model_path);
  int file_dict_size = 0;
  const CodeMatrix codes = load_codes(codes_path, &file_dict_size);
  if (codes.rows() > 0 && (codes.dicts() != model.codebooks.num_dicts ||
                           file_dict_size != model.codebooks.dict_size)) {
    throw std::runtime_error("codes file does not match the model's codebook shape");
  }
  const RowMatrixXd queries = read_vectors(queries_path, parse_format(format));

  std::string tsv = "query_id\trank\tdb_id\tscore\n";
  double preprocess_seconds = 0.0, scan_seconds = 0.0, tau_sum = 0.0;
  for (std::int64_t q = 0; q < queries.rows(); ++q) {
    const auto t0 = std::chrono::steady_clock::now();
    const Eigen::VectorXd q_prime = transform_query(model, queries.row(q).transpose());
    const DistanceTable table = build_table(model.codebooks, q_prime);
    const auto t1 = std::chrono::steady_clock::now();
    const SearchResult result = scan(table, codes, top_k, exact, model.epsilon);
    const auto t2 = std::chrono::steady_clock::now();
    preprocess_seconds += std::chrono::duration<double>(t1 - t0).count();
    scan_seconds += std::chrono::duration<double>(t2 - t1).count();

    for (std::size_t rank = 0; rank < result.ids.size(); ++rank) {
      tsv += std::to_string(q);
      tsv += '\t';
      tsv += std::to_string(rank + 1);
      tsv += '\t';
      tsv += std::to_string(result.ids[rank]);
      tsv += '\t';
      tsv += format_double(result.scores[rank]);
      tsv += '\n';
    }

    if (diagnostics && codes.rows() > 1) {
      std::vector<double> surrogate(static_cast<std::size_t>(codes.rows()));
      std::vector<double> exact_dist(static_cast<std::size_t>(codes.rows()));
      for (std::int64_t n = 0; n < codes.rows(); ++n) {
        const auto code = codes.row(n);
        double s = 0.0;
        for (int m = 0; m < codes.dicts(); ++m) s += table.entries(m, code[m]);
        surrogate[static_cast<std::size_t>(n)] = s;
        exact_dist[static_cast<std::size_t>(n)] = exact_distance(table, model.codebooks, code);
      }
      tau_sum += kendall_tau(surrogate, exact_dist);
    }
  }
  write_text(out_path, tsv);

  ordered_json manifest;
  manifest["tool"] = "sqsearch";
  manifest["version"] = kToolVersion;
  manifest["command"] = "search";
  manifest["config"]["top_k"] = top_k;
  manifest["config"]["exact"] = exact;
  manifest["inputs"]["model"] = input_entry(model_path);
  manifest["inputs"]["codes"] = input_entry(codes_path);
  manifest["inputs"]["queries"] = input_entry(queries_path);
  manifest["outputs"]["results"] = out_path;
  write_manifest(out_path, manifest);

  std::cerr << "searched " << queries.rows() << " queries over " << codes.rows() << " codes\n";
  if (queries.rows() > 0) {
    std::cerr << "query preprocessing (transform + table): " << preprocess_seconds
              << " s total, "
              << preprocess_seconds / static_cast<double>(queries.rows()) * 1e3 << " ms/query\n"
              << "linear scan: " << scan_seconds << " s total, "
              << scan_seconds / static_cast<double>(queries.rows()) * 1e3 << " ms/query\n";
  }
  if (diagnostics && queries.rows() > 0) {
    std::cerr << "mean Kendall tau, surrogate vs exact ranking: "
              << tau_sum / static_cast<double>(queries.rows()) << "\n";
  }
  return 0;
}

int cmd_evaluate(const std::string& results_path, const std::string& query_labels_path,
                 const std::string& db_labels_path, int num_classes, std::int64_t r_cutoff,
                 const std::string& out_path) {
  const LabelMatrix query_labels = read_labels(query_labels_path, num_classes);
  const LabelMatrix db_labels = read_labels(db_labels_path, num_classes);

  std::ifstream in(results_path);
  if (!in) throw std::runtime_error("cannot open file: " + results_path);
  std::map<std::int64_t, std::vector<std::pair<std::int64_t, std::int64_t>>> by_query;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (first) {
      first = false;
      if (line.rfind("query_id", 0) == 0) continue;
    }
    if (line.empty()) continue;
    std::int64_t query_id = 0, rank = 0, db_id = 0;
    const char* p = line.data();
    const char* end = p + line.size();
    auto read_field = [&](std::int64_t& value) {
      const auto [next, ec] = std::from_chars(p, end, value);
      if (ec != std::errc{} || next == end || *next != '\t') {
        throw std::runtime_error(results_path + ": malformed result line: " + line);
      }
      p = next + 1;
    };
    read_field(query_id);
    read_field(rank);
    const auto [next, ec] = std::from_chars(p, end, db_id);
    if (ec != std::errc{}) {
      throw std::runtime_error(results_path + ": malformed result line: " + line);
    }
    by_query[query_id].emplace_back(rank, db_id);
  }

  std::vector<std::int64_t> missing;
  std::vector<std::vector<std::int64_t>> rankings(static_cast<std::size_t>(query_labels.rows()));
  for (std::int64_t q = 0; q < query_labels.rows(); ++q) {
    auto it = by_query.find(q);
    if (it == by_query.end()) {
      missing.push_back(q);
      continue;
    }
    auto rows = it->second;
    std::sort(rows.begin(), rows.end());
    auto& ranked = rankings[static_cast<std::size_t>(q)];
    ranked.reserve(rows.size());
    for (const auto& [rank, id] : rows) ranked.push_back(id);
  }
  if (!missing.empty()) {
    std::string ids;
    for (std::size_t i = 0; i < missing.size() && i < 10; ++i) {
      if (i > 0) ids += ", ";
      ids += std::to_string(missing[i]);
    }
    if (missing.size() > 10) ids += ", ...";
    throw std::runtime_error(results_path + ": no results for query ids: " + ids);
  }

  if (r_cutoff > db_labels.rows()) {
    std::cerr << "warning: r-cutoff " << r_cutoff << " exceeds the database size; clamping to "
              << db_labels.rows() << "\n";
    r_cutoff = db_labels.rows();
  }
  const EvalReport report = mean_average_precision(rankings, query_labels, db_labels, r_cutoff);
  const std::string json = eval_report_json(report);
  std::cout << json << "\n";
  if (!out_path.empty()) {
    write_text(out_path, json + "\n");
    ordered_json manifest;
    manifest["tool"] = "sqsearch";
    manifest["version"] = kToolVersion;
    manifest["command"] = "evaluate";
    manifest["config"]["r_cutoff"] = r_cutoff;
    manifest["inputs"]["results"] = input_entry(results_path);
    manifest["inputs"]["query_labels"] = input_entry(query_labels_path);
    manifest["inputs"]["db_labels"] = input_entry(db_labels_path);
    manifest["outputs"]["report"] = out_path;
    write_manifest(out_path, manifest);
  }
  return 0;
}

int cmd_tune(const CommonTrainArgs& args, const std::string& gamma_grid,
             const std::string& mu_grid, double validation_fraction,
             const std::string& out_path) {
  const auto gammas = parse_grid(gamma_grid);
  const auto mus = parse_grid(mu_grid);
  if (gammas.empty() || mus.empty()) {
    throw CLI::ValidationError("--gamma-grid/--mu-grid", "grids must be non-empty");
  }
  auto prepared = prepare_training_data(args);
  const TrainConfig base = make_train_config(args, prepared.ds.dim());

  std::vector<std::pair<double, double>> grid;
  for (double g : gammas) {
    for (double m : mus) grid.emplace_back(g, m);
  }
  const GridSearchResult result =
      validate_grid(prepared.ds, base, grid, validation_fraction, Rng::derive(args.seed, 0x7E57));

  ordered_json out;
  out["best"]["gamma"] = result.best_gamma;
  out["best"]["mu"] = result.best_mu;
  out["best"]["map"] = result.best_map;
  out["grid"] = ordered_json::array();
  for (const auto& entry : result.entries) {
    ordered_json e;
    e["gamma"] = entry.gamma;
    e["mu"] = entry.mu;
    e["map"] = entry.map;
    out["grid"].push_back(e);
  }
  const std::string json = out.dump(2) + "\n";
  std::cout << json;
  if (!out_path.empty()) {
    write_text(out_path, json);
    ordered_json manifest;
    manifest["tool"] = "sqsearch";
    manifest["version"] = kToolVersion;
    manifest["command"] = "tune";
    manifest["config"] = train_config_json(args, base);
    manifest["config"]["gamma_grid"] = gammas;
    manifest["config"]["mu_grid"] = mus;
    manifest["config"]["validation_fraction"] = validation_fraction;
    manifest["inputs"]["vectors"] = input_entry(args.vectors_path);
    manifest["inputs"]["labels"] = input_entry(args.labels_path);
    manifest["outputs"]["report"] = out_path;
    write_manifest(out_path, manifest);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"supervised composite quantization for semantic similarity search"};
  app.require_subcommand(1);

  CommonTrainArgs train_args;
  std::string train_out;
  auto* train_cmd = app.add_subcommand("train", "learn a model from labeled vectors");
  add_train_options(train_cmd, train_args);
  auto* r_opt =
      train_cmd->add_option("--r", train_args.subspace_dim, "discriminative subspace dimension");
  train_cmd->add_option("--out", train_out, "output model path")->required();

  std::string encode_model, encode_vectors, encode_out, encode_format = "auto";
  auto* encode_cmd = app.add_subcommand("encode", "compress vectors into codes");
  encode_cmd->add_option("--model", encode_model)->required();
  encode_cmd->add_option("--vectors", encode_vectors)->required();
  encode_cmd->add_option("--format", encode_format)
      ->check(CLI::IsMember({"auto", "fvecs", "csv"}));
  encode_cmd->add_option("--out", encode_out)->required();

  std::string search_model, search_codes, search_queries, search_out, search_format = "auto";
  std::int64_t top_k = 10;
  bool search_exact = false, search_diag = false;
  auto* search_cmd = app.add_subcommand("search", "rank encoded vectors against queries");
  search_cmd->add_option("--model", search_model)->required();
  search_cmd->add_option("--codes", search_codes)->required();
  search_cmd->add_option("--queries", search_queries)->required();
  search_cmd->add_option("--top-k", top_k, "results per query");
  search_cmd->add_flag("--exact", search_exact, "report distances with the scan constants added");
  search_cmd->add_flag("--diagnostics", search_diag,
                       "report surrogate-vs-exact rank correlation");
  search_cmd->add_option("--format", search_format)
      ->check(CLI::IsMember({"auto", "fvecs", "csv"}));
  search_cmd->add_option("--out", search_out)->required();

  std::string eval_results, eval_qlabels, eval_dblabels, eval_out;
  int eval_classes = 0;
  std::int64_t r_cutoff = 0;
  auto* eval_cmd =
      app.add_subcommand("evaluate", "score search results by mean average precision");
  eval_cmd->add_option("--results", eval_results)->required();
  eval_cmd->add_option("--query-labels", eval_qlabels)->required();
  eval_cmd->add_option("--db-labels", eval_dblabels)->required();
  eval_cmd->add_option("--num-classes", eval_classes)->required();
  eval_cmd->add_option("--r-cutoff", r_cutoff, "evaluation window (0 = whole database)");
  eval_cmd->add_option("--out", eval_out, "also write the report to this path");

  CommonTrainArgs tune_args;
  std::string gamma_grid, mu_grid, tune_out;
  double validation_fraction = 0.1;
  auto* tune_cmd = app.add_subcommand("tune", "pick gamma and mu by held-out retrieval MAP");
  add_train_options(tune_cmd, tune_args);
  auto* tune_r_opt =
      tune_cmd->add_option("--r", tune_args.subspace_dim, "discriminative subspace dimension");
  tune_cmd->add_option("--gamma-grid", gamma_grid, "comma-separated gamma values")->required();
  tune_cmd->add_option("--mu-grid", mu_grid, "comma-separated mu values")->required();
  tune_cmd->add_option("--validation-fraction", validation_fraction);
  tune_cmd->add_option("--out", tune_out, "write the tuning report to this path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (train_cmd->parsed()) {
      train_args.subspace_dim_given = r_opt->count() > 0;
      return cmd_train(train_args, train_out);
    }
    if (encode_cmd->parsed()) {
      return cmd_encode(encode_model, encode_vectors, encode_format, encode_out);
    }
    if (search_cmd->parsed()) {
      if (top_k < 1) {
        std::cerr << "error: --top-k must be at least 1\n";
        return 2;
      }
      return cmd_search(search_model, search_codes, search_queries, search_format, top_k,
                        search_exact, search_diag, search_out);
    }
    if (eval_cmd->parsed()) {
      return cmd_evaluate(eval_results, eval_qlabels, eval_dblabels, eval_classes, r_cutoff,
                          eval_out);
    }
    if (tune_cmd->parsed()) {
      tune_args.subspace_dim_given = tune_r_opt->count() > 0;
      return cmd_tune(tune_args, gamma_grid, mu_grid, validation_fraction, tune_out);
    }
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
