#include "sqsearch/model.hpp"

#include "sqsearch/checksum.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace sqsearch {

namespace {

constexpr char kMagic[4] = {'S', 'Q', 'C', 'Q'};
constexpr std::uint32_t kVersion = 1;

void append_u8(std::string& out, std::uint8_t v) { out.push_back(static_cast<char>(v)); }

void append_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void append_f64(std::string& out, double value) {
  std::uint64_t bits = 0;
  std::memcpy(&bits, &value, 8);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
}

class Reader {
 public:
  Reader(const std::string& bytes, std::string path)
      : bytes_(bytes), path_(std::move(path)) {}

  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(bytes_[pos_++]);
  }

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += 4;
    return v;
  }

  double f64() {
    need(8);
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) {
      bits |= static_cast<std::uint64_t>(static_cast<std::uint8_t>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += 8;
    double value = 0.0;
    std::memcpy(&value, &bits, 8);
    return value;
  }

  void magic() {
    need(4);
    if (std::memcmp(bytes_.data() + pos_, kMagic, 4) != 0) {
      throw std::runtime_error(path_ + ": not a model file (bad magic)");
    }
    pos_ += 4;
  }

  std::size_t pos() const { return pos_; }

 private:
  void need(std::size_t count) {
    if (bytes_.size() - pos_ < count) {
      throw std::runtime_error(path_ + ": truncated model file");
    }
  }

  const std::string& bytes_;
  std::string path_;
  std::size_t pos_ = 0;
};

}  // namespace

void ModelBundle::validate() const {
  if (transform.cols() != codebooks.dim) {
    throw std::invalid_argument("model: transform columns (" + std::to_string(transform.cols()) +
                                ") differ from codebook dimension (" +
                                std::to_string(codebooks.dim) + ")");
  }
  if (classifier.rows() != codebooks.dim) {
    throw std::invalid_argument("model: classifier rows differ from codebook dimension");
  }
  if (codebooks.elements.rows() !=
      static_cast<std::int64_t>(codebooks.num_dicts) * codebooks.dict_size) {
    throw std::invalid_argument("model: codebook element count mismatch");
  }
  if (kernel && kernel->anchor_count() != transform.rows()) {
    throw std::invalid_argument("model: kernel anchor count differs from transform input size");
  }
}

void save_model(const ModelBundle& model, const std::string& path) {
  model.validate();
  const auto d = static_cast<std::uint32_t>(model.transform.rows());
  const auto r = static_cast<std::uint32_t>(model.transform.cols());
  const auto c = static_cast<std::uint32_t>(model.classifier.cols());
  const auto m = static_cast<std::uint32_t>(model.codebooks.num_dicts);
  const auto k = static_cast<std::uint32_t>(model.codebooks.dict_size);

  std::string bytes;
  bytes.reserve(64 + 8ull * (d * r + r * c + static_cast<std::uint64_t>(m) * k * r));
  bytes.append(kMagic, 4);
  append_u32(bytes, kVersion);
  append_u32(bytes, d);
  append_u32(bytes, r);
  append_u32(bytes, c);
  append_u32(bytes, m);
  append_u32(bytes, k);
  append_f64(bytes, model.epsilon);
  append_f64(bytes, model.hyper.lambda);
  append_f64(bytes, model.hyper.gamma);
  append_f64(bytes, model.hyper.mu);
  for (std::uint32_t i = 0; i < d; ++i) {
    for (std::uint32_t j = 0; j < r; ++j) append_f64(bytes, model.transform(i, j));
  }
  for (std::uint32_t i = 0; i < r; ++i) {
    for (std::uint32_t j = 0; j < c; ++j) append_f64(bytes, model.classifier(i, j));
  }
  for (std::int64_t row = 0; row < model.codebooks.elements.rows(); ++row) {
    for (std::uint32_t j = 0; j < r; ++j) append_f64(bytes, model.codebooks.elements(row, j));
  }
  if (model.kernel) {
    append_u8(bytes, 1);
    append_u32(bytes, static_cast<std::uint32_t>(model.kernel->anchor_count()));
    append_u32(bytes, static_cast<std::uint32_t>(model.kernel->input_dim()));
    append_f64(bytes, model.kernel->sigma);
    for (std::int64_t i = 0; i < model.kernel->anchors.rows(); ++i) {
      for (std::int64_t j = 0; j < model.kernel->anchors.cols(); ++j) {
        append_f64(bytes, model.kernel->anchors(i, j));
      }
    }
  } else {
    append_u8(bytes, 0);
  }
  append_u32(bytes, crc32_bytes(bytes.data(), bytes.size()));

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open file for writing: " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed: " + path);
}

ModelBundle load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  const std::string bytes = std::move(ss).str();

  if (bytes.size() < 4 + 4 + 4) throw std::runtime_error(path + ": truncated model file");
  const std::uint32_t stored_crc = [&] {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(bytes[bytes.size() - 4 + i]))
           << (8 * i);
    }
    return v;
  }();
  if (crc32_bytes(bytes.data(), bytes.size() - 4) != stored_crc) {
    throw std::runtime_error(path + ": checksum mismatch (corrupted model file)");
  }

  Reader reader(bytes, path);
  reader.magic();
  const std::uint32_t version = reader.u32();
  if (version != kVersion) {
    throw std::runtime_error(path + ": unsupported model version " + std::to_string(version));
  }
  const std::uint32_t d = reader.u32();
  const std::uint32_t r = reader.u32();
  const std::uint32_t c = reader.u32();
  const std::uint32_t m = reader.u32();
  const std::uint32_t k = reader.u32();

  ModelBundle model;
  model.epsilon = reader.f64();
  model.hyper.lambda = reader.f64();
  model.hyper.gamma = reader.f64();
  model.hyper.mu = reader.f64();
  model.transform.resize(d, r);
  for (std::uint32_t i = 0; i < d; ++i) {
    for (std::uint32_t j = 0; j < r; ++j) model.transform(i, j) = reader.f64();
  }
  model.classifier.resize(r, c);
  for (std::uint32_t i = 0; i < r; ++i) {
    for (std::uint32_t j = 0; j < c; ++j) model.classifier(i, j) = reader.f64();
  }
  model.codebooks.num_dicts = static_cast<int>(m);
  model.codebooks.dict_size = static_cast<int>(k);
  model.codebooks.dim = static_cast<int>(r);
  model.codebooks.elements.resize(static_cast<std::int64_t>(m) * k, r);
  for (std::int64_t row = 0; row < model.codebooks.elements.rows(); ++row) {
    for (std::uint32_t j = 0; j < r; ++j) model.codebooks.elements(row, j) = reader.f64();
  }
  if (reader.u8() != 0) {
    KernelMap km;
    const std::uint32_t h = reader.u32();
    const std::uint32_t dim = reader.u32();
    km.sigma = reader.f64();
    km.anchors.resize(h, dim);
    for (std::uint32_t i = 0; i < h; ++i) {
      for (std::uint32_t j = 0; j < dim; ++j) km.anchors(i, j) = reader.f64();
    }
    model.kernel = std::move(km);
  }
  if (reader.pos() != bytes.size() - 4) {
    throw std::runtime_error(path + ": trailing bytes in model file");
  }
  model.validate();
  return model;
}

}  // namespace sqsearch
