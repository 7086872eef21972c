#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <numbers>

#include "perreg/harness.hpp"

namespace perreg {

DataFormatError::DataFormatError(const std::string& path, std::uint64_t offset, const std::string& what)
    : std::runtime_error(path + ": byte " + std::to_string(offset) + ": " + what), offset_(offset) {}

namespace {

constexpr std::uint32_t kIdxImageMagic = 0x00000803;
constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

std::vector<unsigned char> read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw RunError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t read_be32(const std::vector<unsigned char>& bytes, std::size_t offset,
                        const std::filesystem::path& path) {
  if (bytes.size() < offset + 4) {
    throw DataFormatError(path.string(), bytes.size(), "truncated header (need " + std::to_string(offset + 4) + " bytes)");
  }
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

void check_magic(const std::vector<unsigned char>& bytes, std::uint32_t expected,
                 const std::filesystem::path& path) {
  if (bytes.empty()) throw DataFormatError(path.string(), 0, "empty file");
  const std::uint32_t magic = read_be32(bytes, 0, path);
  if (magic != expected) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "bad magic 0x%08x, expected 0x%08x", magic, expected);
    throw DataFormatError(path.string(), 0, buf);
  }
}

LabeledData gauss_mixture(const DatasetConfig& cfg, const Matrix& means, std::size_t n, RngStream rng) {
  LabeledData out{Matrix(n, cfg.dims), std::vector<int>(n), cfg.classes};
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = i % cfg.classes;
    out.labels[i] = static_cast<int>(c);
    for (std::size_t j = 0; j < cfg.dims; ++j) out.features(i, j) = means(c, j) + cfg.spread * rng.gaussian();
  }
  return out;
}

LabeledData two_arcs(const DatasetConfig& cfg, std::size_t n, RngStream rng) {
  LabeledData out{Matrix(n, 2), std::vector<int>(n), 2};
  for (std::size_t i = 0; i < n; ++i) {
    const int c = static_cast<int>(i % 2);
    const double t = std::numbers::pi * rng.uniform();
    double x = std::cos(t);
    double y = std::sin(t);
    if (c == 1) {
      x = 1.0 - x;
      y = 0.5 - y;
    }
    out.labels[i] = c;
    out.features(i, 0) = x + cfg.noise * rng.gaussian();
    out.features(i, 1) = y + cfg.noise * rng.gaussian();
  }
  return out;
}

LabeledData take_rows(const LabeledData& d, std::size_t begin, std::size_t end) {
  LabeledData out{Matrix(end - begin, d.features.cols()), {}, d.classes};
  for (std::size_t i = begin; i < end; ++i) {
    const auto src = d.features.row(i);
    std::copy(src.begin(), src.end(), out.features.row(i - begin).begin());
    out.labels.push_back(d.labels[i]);
  }
  return out;
}

constexpr std::uint64_t kMeansStream = 1;
constexpr std::uint64_t kTrainStream = 2;
constexpr std::uint64_t kValStream = 3;

}  // namespace

LabeledData load_idx(const std::filesystem::path& images, const std::filesystem::path& labels) {
  const auto ib = read_all(images);
  check_magic(ib, kIdxImageMagic, images);
  const std::uint32_t count = read_be32(ib, 4, images);
  const std::uint32_t rows = read_be32(ib, 8, images);
  const std::uint32_t cols = read_be32(ib, 12, images);
  const std::uint64_t pixels = std::uint64_t{rows} * cols;
  if (pixels == 0) throw DataFormatError(images.string(), 8, "zero image size");
  const std::uint64_t need = 16 + std::uint64_t{count} * pixels;
  if (ib.size() < need) {
    throw DataFormatError(images.string(), ib.size(),
                          "truncated pixel data (need " + std::to_string(need) + " bytes)");
  }

  const auto lb = read_all(labels);
  check_magic(lb, kIdxLabelMagic, labels);
  const std::uint32_t label_count = read_be32(lb, 4, labels);
  if (label_count != count) {
    throw DataFormatError(labels.string(), 4,
                          "label count " + std::to_string(label_count) + " does not match image count " +
                              std::to_string(count));
  }
  if (lb.size() < 8 + std::uint64_t{count}) {
    throw DataFormatError(labels.string(), lb.size(),
                          "truncated label data (need " + std::to_string(8 + std::uint64_t{count}) + " bytes)");
  }

  LabeledData out{Matrix(count, pixels), std::vector<int>(count), 0};
  int max_label = -1;
  for (std::uint32_t i = 0; i < count; ++i) {
    for (std::uint64_t p = 0; p < pixels; ++p) out.features(i, p) = ib[16 + i * pixels + p] / 255.0;
    out.labels[i] = lb[8 + i];
    max_label = std::max(max_label, out.labels[i]);
  }
  out.classes = static_cast<std::size_t>(max_label + 1);
  return out;
}

void standardize(LabeledData& train, LabeledData& val) {
  const std::size_t d = train.features.cols();
  if (val.features.cols() != d) throw std::domain_error("standardize: feature count mismatch");
  const double n = static_cast<double>(train.size());
  for (std::size_t j = 0; j < d; ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < train.size(); ++i) mean += train.features(i, j);
    mean /= n;
    double var = 0.0;
    for (std::size_t i = 0; i < train.size(); ++i) {
      const double c = train.features(i, j) - mean;
      var += c * c;
    }
    var /= n;
    const double sd = std::sqrt(var);
    const double inv = sd > 1e-12 ? 1.0 / sd : 0.0;
    for (std::size_t i = 0; i < train.size(); ++i) train.features(i, j) = (train.features(i, j) - mean) * inv;
    for (std::size_t i = 0; i < val.size(); ++i) val.features(i, j) = (val.features(i, j) - mean) * inv;
  }
}

DatasetSplit generate_dataset(const DatasetConfig& cfg, RngStream rng) {
  DatasetSplit split;
  switch (cfg.kind) {
    case DatasetKind::gauss_mixture: {
      if (cfg.classes < 2 || cfg.dims < 1 || cfg.train_size < 2 || cfg.val_size < 1 || !(cfg.spread >= 0.0) ||
          !(cfg.separation > 0.0)) {
        throw ConfigError("gauss_mixture: invalid parameters");
      }
      RngStream means_rng = rng.split(kMeansStream);
      Matrix means(cfg.classes, cfg.dims);
      for (double& m : means.flat()) m = cfg.separation * means_rng.gaussian();
      split.train = gauss_mixture(cfg, means, cfg.train_size, rng.split(kTrainStream));
      split.val = gauss_mixture(cfg, means, cfg.val_size, rng.split(kValStream));
      break;
    }
    case DatasetKind::two_arcs: {
      if (cfg.train_size < 2 || cfg.val_size < 1 || !(cfg.noise >= 0.0)) {
        throw ConfigError("two_arcs: invalid parameters");
      }
      split.train = two_arcs(cfg, cfg.train_size, rng.split(kTrainStream));
      split.val = two_arcs(cfg, cfg.val_size, rng.split(kValStream));
      break;
    }
    case DatasetKind::idx_files: {
      LabeledData all = load_idx(cfg.idx_images, cfg.idx_labels);
      if (cfg.val_size == 0 || cfg.val_size >= all.size() || all.size() - cfg.val_size < 2) {
        throw ConfigError("idx_files: val_size must leave at least two training samples");
      }
      const std::size_t n_train = all.size() - cfg.val_size;
      split.train = take_rows(all, 0, n_train);
      split.val = take_rows(all, n_train, all.size());
      break;
    }
  }
  standardize(split.train, split.val);
  return split;
}

}  // namespace perreg
