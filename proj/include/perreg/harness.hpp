#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "perreg/nn.hpp"
#include "perreg/regularizer.hpp"

namespace perreg {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DataFormatError : public std::runtime_error {
 public:
  DataFormatError(const std::string& path, std::uint64_t offset, const std::string& what);
  std::uint64_t offset() const { return offset_; }

 private:
  std::uint64_t offset_;
};

class RunError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class DatasetKind { gauss_mixture, two_arcs, idx_files };

struct DatasetConfig {
  DatasetKind kind = DatasetKind::gauss_mixture;
  std::size_t classes = 3;
  std::size_t dims = 10;
  std::size_t train_size = 2000;
  std::size_t val_size = 500;
  // Within-class standard deviation of the mixture.
  double spread = 1.0;
  // Class means are drawn from N(0, separation^2 I).
  double separation = 1.0;
  // Gaussian noise added to the two-arc points.
  double noise = 0.1;
  std::string idx_images;
  std::string idx_labels;
};

struct ModelConfig {
  std::vector<std::size_t> widths{64, 64, 64, 64};
  Activation activation = Activation::leaky_relu;
};

struct MethodSpec {
  std::string label;
  RegConfig reg;
};

struct ExperimentConfig {
  DatasetConfig dataset;
  ModelConfig model;
  TrainConfig train;
  // Comma list such as "none,per,l2@3e-5"; entries without an explicit
  // coefficient use `lambda`. `methods` is derived by rebuild_methods().
  std::string method_list = "none";
  double lambda = 1e-4;
  std::size_t slices = kDefaultSlices;
  RegTarget reg_target = RegTarget::post_activation;
  std::vector<MethodSpec> methods;
  std::size_t metrics_slices = kDefaultSlices;
  // Number of N(0, I) reference draws and of evaluation rows per layer.
  std::size_t gaussian_ref_size = 500;
  std::uint64_t seed = 0;
  std::filesystem::path out_dir = "out";

  // Throws ConfigError.
  void rebuild_methods();
  // Throws ConfigError.
  void validate() const;
};

// Flat "key = value" text with '#' comments. Unknown keys are errors.
// Throws ConfigError.
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig load_config_file(const std::filesystem::path& path);
// Applies one key/value pair using the same keys as the config file. Call
// rebuild_methods() afterwards when a method-related key changed.
void apply_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value);

struct DatasetSplit {
  LabeledData train;
  LabeledData val;
};

// Synthetic or file-backed data, standardized with training statistics.
// Throws ConfigError or DataFormatError.
DatasetSplit generate_dataset(const DatasetConfig& cfg, RngStream rng);

// Reads an IDX image file (magic 0x00000803) and label file (0x00000801).
// Pixels are scaled to [0, 1]; classes = max label + 1. Throws
// DataFormatError carrying the byte offset of the problem, or RunError when
// a file cannot be opened.
LabeledData load_idx(const std::filesystem::path& images, const std::filesystem::path& labels);

// Per-feature standardization using training statistics. Constant features
// become zero.
void standardize(LabeledData& train, LabeledData& val);

struct MetricsRecord {
  std::string method;
  std::size_t epoch = 0;
  std::size_t layer = 0;  // 1-based hidden-layer index
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_acc = 0.0;
  double sw1_gauss = 0.0;
  double q25 = 0.0;
  double q50 = 0.0;
  double q75 = 0.0;
  double act_mean = 0.0;
  double act_var = 0.0;
  bool abort = false;
};

inline constexpr const char* kMetricsHeader =
    "method,epoch,layer,train_loss,val_loss,val_acc,sw1_gauss,q25,q50,q75,act_mean,act_var";

std::string format_csv_row(const MetricsRecord& r);

// Linear-interpolation quantile of already sorted data.
double sorted_quantile(std::span<const double> sorted, double q);

// Distribution diagnostics of one layer: sliced W1 against fresh N(0, I)
// draws of the same size, plus quantiles, mean and sample variance of the
// tracked unit.
MetricsRecord layer_metrics(const Matrix& activations, std::size_t tracked_unit,
                            std::size_t metrics_slices, RngStream rng);

enum class RunStatus { ok, numerical_abort };

struct MethodSummary {
  std::string label;
  double final_val_acc = 0.0;
  std::vector<double> final_sw1_per_layer;
  double wall_time_s = 0.0;
};

struct ExperimentResult {
  RunStatus status = RunStatus::ok;
  std::vector<MetricsRecord> records;
  std::vector<MethodSummary> summaries;
  std::string abort_reason;
};

// Trains one identically initialized network per method and records
// per-epoch, per-layer diagnostics (epoch 0 is before training). Writes
// out_dir/metrics.csv and out_dir/summary.json unless `write_files` is
// false. Throws ConfigError, DataFormatError or RunError.
ExperimentResult run_experiment(const ExperimentConfig& cfg, bool write_files = true);

// Writes the 1-D loss profiles on x in [-3, 3] with step 0.01:
// x, per_point_loss(x) - sqrt(2/pi), per_point_grad(x), huber(x), pseudo_huber(x).
void emit_loss_curves(const std::filesystem::path& out_path);

}  // namespace perreg
