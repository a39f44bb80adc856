#include "sqsearch/dataset.hpp"

#include "sqsearch/rng.hpp"

#include <algorithm>
#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace sqsearch {

namespace {

std::string read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return std::move(ss).str();
}

std::uint32_t read_u32_le(const char* p) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) {
    v |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(p[i])) << (8 * i);
  }
  return v;
}

std::int32_t read_i32_le(const char* p) { return static_cast<std::int32_t>(read_u32_le(p)); }

float read_f32_le(const char* p) {
  const std::uint32_t v = read_u32_le(p);
  float f = 0.0f;
  std::memcpy(&f, &v, 4);
  return f;
}

void append_i32_le(std::string& out, std::int32_t value) {
  auto v = static_cast<std::uint32_t>(value);
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>((v >> 8) & 0xFF));
  out.push_back(static_cast<char>((v >> 16) & 0xFF));
  out.push_back(static_cast<char>((v >> 24) & 0xFF));
}

RowMatrixXd read_fvecs(const std::string& path) {
  const std::string bytes = read_file_bytes(path);
  if (bytes.empty()) return RowMatrixXd(0, 0);

  // First pass: count records and validate dimensions.
  std::int64_t dim = -1, count = 0;
  std::size_t offset = 0;
  while (offset < bytes.size()) {
    if (bytes.size() - offset < 4) {
      throw std::runtime_error(path + ": truncated record header at byte offset " +
                               std::to_string(offset));
    }
    const std::int32_t record_dim = read_i32_le(bytes.data() + offset);
    if (record_dim <= 0) {
      throw std::runtime_error(path + ": malformed dimension field " +
                               std::to_string(record_dim) + " at byte offset " +
                               std::to_string(offset));
    }
    if (dim < 0) {
      dim = record_dim;
    } else if (record_dim != dim) {
      throw std::runtime_error(path + ": dimension mismatch at byte offset " +
                               std::to_string(offset) + ": expected " + std::to_string(dim) +
                               ", found " + std::to_string(record_dim));
    }
    const std::size_t payload = static_cast<std::size_t>(record_dim) * 4;
    if (bytes.size() - offset - 4 < payload) {
      throw std::runtime_error(path + ": truncated record payload at byte offset " +
                               std::to_string(offset));
    }
    offset += 4 + payload;
    ++count;
  }

  RowMatrixXd out(count, dim);
  offset = 0;
  for (std::int64_t i = 0; i < count; ++i) {
    offset += 4;
    for (std::int64_t j = 0; j < dim; ++j) {
      out(i, j) = static_cast<double>(read_f32_le(bytes.data() + offset));
      offset += 4;
    }
  }
  return out;
}

RowMatrixXd read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open file: " + path);

  std::vector<std::vector<double>> rows;
  std::string line;
  std::int64_t line_no = 0;
  std::int64_t dim = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() && in.peek() == std::char_traits<char>::eof()) break;
    std::vector<double> row;
    const char* p = line.data();
    const char* end = p + line.size();
    while (p < end) {
      while (p < end && (*p == ' ' || *p == '\t')) ++p;
      double value = 0.0;
      auto [next, ec] = std::from_chars(p, end, value);
      if (ec != std::errc{}) {
        throw std::runtime_error(path + ": malformed number on line " + std::to_string(line_no));
      }
      row.push_back(value);
      p = next;
      while (p < end && (*p == ' ' || *p == '\t')) ++p;
      if (p < end) {
        if (*p != ',') {
          throw std::runtime_error(path + ": expected ',' on line " + std::to_string(line_no));
        }
        ++p;
      }
    }
    if (dim < 0) {
      dim = static_cast<std::int64_t>(row.size());
    } else if (static_cast<std::int64_t>(row.size()) != dim) {
      throw std::runtime_error(path + ": dimension mismatch on line " + std::to_string(line_no) +
                               ": expected " + std::to_string(dim) + " values, found " +
                               std::to_string(row.size()));
    }
    rows.push_back(std::move(row));
  }

  RowMatrixXd out(static_cast<std::int64_t>(rows.size()), std::max<std::int64_t>(dim, 0));
  for (std::int64_t i = 0; i < out.rows(); ++i) {
    for (std::int64_t j = 0; j < out.cols(); ++j) out(i, j) = rows[i][j];
  }
  return out;
}

VectorFormat detect_format(const std::string& path) {
  const auto pos = path.find_last_of('.');
  const std::string ext = pos == std::string::npos ? "" : path.substr(pos);
  if (ext == ".csv" || ext == ".txt") return VectorFormat::kCsv;
  return VectorFormat::kFvecs;
}

}  // namespace

void LabeledDataset::validate() const {
  if (vectors.rows() != labels.rows()) {
    throw std::invalid_argument("dataset: vectors and labels row counts differ (" +
                                std::to_string(vectors.rows()) + " vs " +
                                std::to_string(labels.rows()) + ")");
  }
  if (vectors.rows() > 0 && vectors.cols() < 1) {
    throw std::invalid_argument("dataset: feature dimension must be at least 1");
  }
  if (labels.rows() > 0 && labels.cols() < 2) {
    throw std::invalid_argument("dataset: need at least 2 classes");
  }
  if (!ids.empty() && static_cast<std::int64_t>(ids.size()) != vectors.rows()) {
    throw std::invalid_argument("dataset: ids size does not match row count");
  }
  for (std::int64_t i = 0; i < labels.rows(); ++i) {
    if (labels.row(i).maxCoeff() == 0) {
      throw std::invalid_argument("dataset: row " + std::to_string(i) + " has no class label");
    }
  }
}

RowMatrixXd read_vectors(const std::string& path, VectorFormat format) {
  if (format == VectorFormat::kAuto) format = detect_format(path);
  return format == VectorFormat::kCsv ? read_csv(path) : read_fvecs(path);
}

void write_fvecs(const std::string& path, const RowMatrixXd& vectors) {
  std::string bytes;
  bytes.reserve(static_cast<std::size_t>(vectors.rows()) * (4 + vectors.cols() * 4));
  for (std::int64_t i = 0; i < vectors.rows(); ++i) {
    append_i32_le(bytes, static_cast<std::int32_t>(vectors.cols()));
    for (std::int64_t j = 0; j < vectors.cols(); ++j) {
      const float f = static_cast<float>(vectors(i, j));
      std::uint32_t v = 0;
      std::memcpy(&v, &f, 4);
      append_i32_le(bytes, static_cast<std::int32_t>(v));
    }
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open file for writing: " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed: " + path);
}

RowMatrixXi read_ivecs(const std::string& path) {
  const std::string bytes = read_file_bytes(path);
  if (bytes.empty()) return RowMatrixXi(0, 0);
  std::int64_t dim = -1, count = 0;
  std::size_t offset = 0;
  while (offset < bytes.size()) {
    if (bytes.size() - offset < 4) {
      throw std::runtime_error(path + ": truncated record header at byte offset " +
                               std::to_string(offset));
    }
    const std::int32_t record_dim = read_i32_le(bytes.data() + offset);
    if (record_dim <= 0) {
      throw std::runtime_error(path + ": malformed dimension field at byte offset " +
                               std::to_string(offset));
    }
    if (dim < 0) {
      dim = record_dim;
    } else if (record_dim != dim) {
      throw std::runtime_error(path + ": dimension mismatch at byte offset " +
                               std::to_string(offset));
    }
    const std::size_t payload = static_cast<std::size_t>(record_dim) * 4;
    if (bytes.size() - offset - 4 < payload) {
      throw std::runtime_error(path + ": truncated record payload at byte offset " +
                               std::to_string(offset));
    }
    offset += 4 + payload;
    ++count;
  }
  RowMatrixXi out(count, dim);
  offset = 0;
  for (std::int64_t i = 0; i < count; ++i) {
    offset += 4;
    for (std::int64_t j = 0; j < dim; ++j) {
      out(i, j) = read_i32_le(bytes.data() + offset);
      offset += 4;
    }
  }
  return out;
}

void write_ivecs(const std::string& path, const RowMatrixXi& values) {
  std::string bytes;
  for (std::int64_t i = 0; i < values.rows(); ++i) {
    append_i32_le(bytes, static_cast<std::int32_t>(values.cols()));
    for (std::int64_t j = 0; j < values.cols(); ++j) append_i32_le(bytes, values(i, j));
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open file for writing: " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed: " + path);
}

LabelMatrix read_labels(const std::string& path, int num_classes) {
  if (num_classes < 2) throw std::invalid_argument("read_labels: need at least 2 classes");
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open file: " + path);

  std::vector<std::vector<int>> parsed;
  std::string line;
  std::int64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      if (in.peek() == std::char_traits<char>::eof()) break;  // trailing newline
      throw std::runtime_error(path + ": empty label line " + std::to_string(line_no) +
                               " (every point needs at least one class)");
    }
    std::vector<int> classes;
    const char* p = line.data();
    const char* end = p + line.size();
    while (p < end) {
      while (p < end && (*p == ' ' || *p == '\t')) ++p;
      int value = 0;
      auto [next, ec] = std::from_chars(p, end, value);
      if (ec != std::errc{}) {
        throw std::runtime_error(path + ": malformed class id on line " + std::to_string(line_no));
      }
      if (value < 0 || value >= num_classes) {
        throw std::runtime_error(path + ": class id " + std::to_string(value) +
                                 " out of range [0, " + std::to_string(num_classes) +
                                 ") on line " + std::to_string(line_no));
      }
      classes.push_back(value);
      p = next;
      while (p < end && (*p == ' ' || *p == '\t')) ++p;
      if (p < end) {
        if (*p != ',') {
          throw std::runtime_error(path + ": expected ',' on line " + std::to_string(line_no));
        }
        ++p;
        if (p == end) {
          throw std::runtime_error(path + ": trailing ',' on line " + std::to_string(line_no));
        }
      }
    }
    if (classes.empty()) {
      throw std::runtime_error(path + ": empty label line " + std::to_string(line_no));
    }
    parsed.push_back(std::move(classes));
  }

  LabelMatrix labels = LabelMatrix::Zero(static_cast<std::int64_t>(parsed.size()), num_classes);
  for (std::int64_t i = 0; i < labels.rows(); ++i) {
    for (int c : parsed[i]) labels(i, c) = 1;
  }
  return labels;
}

std::pair<LabeledDataset, LabeledDataset> split_dataset(const LabeledDataset& ds,
                                                        int queries_per_class,
                                                        std::uint64_t seed) {
  ds.validate();
  if (queries_per_class < 0) throw std::invalid_argument("split_dataset: negative count");

  const std::int64_t n = ds.size();
  std::vector<std::int64_t> effective_ids(n);
  for (std::int64_t i = 0; i < n; ++i) effective_ids[i] = ds.ids.empty() ? i : ds.ids[i];

  auto take = [&](const std::vector<std::int64_t>& rows) {
    LabeledDataset out;
    out.vectors.resize(static_cast<std::int64_t>(rows.size()), ds.vectors.cols());
    out.labels.resize(static_cast<std::int64_t>(rows.size()), ds.labels.cols());
    out.ids.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      out.vectors.row(static_cast<std::int64_t>(i)) = ds.vectors.row(rows[i]);
      out.labels.row(static_cast<std::int64_t>(i)) = ds.labels.row(rows[i]);
      out.ids.push_back(effective_ids[rows[i]]);
    }
    return out;
  };

  if (queries_per_class == 0) {
    std::vector<std::int64_t> all(n);
    for (std::int64_t i = 0; i < n; ++i) all[i] = i;
    return {take(all), take({})};
  }

  // A multi-label point is counted under its lowest labeled class: the binary
  // label matrix does not retain the file's listing order.
  const int num_classes = ds.num_classes();
  std::vector<std::vector<std::int64_t>> members(num_classes);
  for (std::int64_t i = 0; i < n; ++i) {
    for (int c = 0; c < num_classes; ++c) {
      if (ds.labels(i, c) != 0) {
        members[c].push_back(i);
        break;
      }
    }
  }

  Rng rng(seed);
  std::vector<char> is_query(static_cast<std::size_t>(n), 0);
  for (int c = 0; c < num_classes; ++c) {
    if (static_cast<std::int64_t>(members[c].size()) <= queries_per_class) {
      throw std::invalid_argument("split_dataset: class " + std::to_string(c) + " has only " +
                                  std::to_string(members[c].size()) + " points, need more than " +
                                  std::to_string(queries_per_class));
    }
    const auto chosen = rng.sample_without_replacement(members[c].size(),
                                                       static_cast<std::size_t>(queries_per_class));
    for (auto idx : chosen) is_query[static_cast<std::size_t>(members[c][idx])] = 1;
  }

  std::vector<std::int64_t> train_rows, query_rows;
  for (std::int64_t i = 0; i < n; ++i) {
    (is_query[static_cast<std::size_t>(i)] ? query_rows : train_rows).push_back(i);
  }
  return {take(train_rows), take(query_rows)};
}

}  // namespace sqsearch
