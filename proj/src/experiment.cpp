#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "perreg/baselines.hpp"
#include "perreg/harness.hpp"
#include "perreg/regularizer.hpp"
#include "perreg/sliced.hpp"

namespace perreg {
namespace {

// Named substreams of the experiment seed.
constexpr std::uint64_t kDataStream = 0xda7a;
constexpr std::uint64_t kInitStream = 0x1417;
constexpr std::uint64_t kShuffleStream = 0x5f1e;
constexpr std::uint64_t kSliceStream = 0x511ce;
constexpr std::uint64_t kMetricStream = 0x3e7c;
constexpr std::uint64_t kTrackStream = 0x7ac4;

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw RunError("cannot open " + path.string() + " for writing");
  out << text;
  out.flush();
  if (!out) throw RunError("write failed for " + path.string());
}

MetricsRecord abort_record(const std::string& method, std::size_t epoch) {
  const double nan = std::nan("");
  MetricsRecord r;
  r.method = method;
  r.epoch = epoch;
  r.layer = 0;
  r.train_loss = r.val_loss = r.val_acc = r.sw1_gauss = nan;
  r.q25 = r.q50 = r.q75 = r.act_mean = r.act_var = nan;
  r.abort = true;
  return r;
}

class NumericalAbort : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace

std::string format_csv_row(const MetricsRecord& r) {
  std::string s = r.method;
  s += ',' + std::to_string(r.epoch) + ',' + std::to_string(r.layer);
  for (double v : {r.train_loss, r.val_loss, r.val_acc, r.sw1_gauss, r.q25, r.q50, r.q75, r.act_mean, r.act_var}) {
    s += ',' + fmt(v);
  }
  return s;
}

double sorted_quantile(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw std::domain_error("sorted_quantile: empty input");
  if (!(q >= 0.0 && q <= 1.0)) throw std::domain_error("sorted_quantile: q must lie in [0, 1]");
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

MetricsRecord layer_metrics(const Matrix& activations, std::size_t tracked_unit, std::size_t metrics_slices,
                            RngStream rng) {
  if (tracked_unit >= activations.cols()) throw std::domain_error("layer_metrics: tracked unit out of range");
  if (activations.rows() < 2) throw std::domain_error("layer_metrics: need at least two rows");
  MetricsRecord r;
  Matrix reference(activations.rows(), activations.cols());
  for (double& v : reference.flat()) v = rng.gaussian();
  const SliceSet slices = SliceSet::sample(rng, metrics_slices, activations.cols());
  r.sw1_gauss = sw1_empirical(activations, reference, slices);

  auto unit = activations.column(tracked_unit);
  double mean = 0.0;
  for (double v : unit) mean += v;
  mean /= static_cast<double>(unit.size());
  double var = 0.0;
  for (double v : unit) var += (v - mean) * (v - mean);
  var /= static_cast<double>(unit.size() - 1);
  std::sort(unit.begin(), unit.end());
  r.q25 = sorted_quantile(unit, 0.25);
  r.q50 = sorted_quantile(unit, 0.50);
  r.q75 = sorted_quantile(unit, 0.75);
  r.act_mean = mean;
  r.act_var = var;
  return r;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, bool write_files) {
  cfg.validate();
  const RngStream root(cfg.seed);
  const DatasetSplit data = generate_dataset(cfg.dataset, root.split(kDataStream));
  if (data.train.classes < 2) throw ConfigError("dataset: need at least two classes");

  const std::size_t eval_rows = std::min(cfg.gaussian_ref_size, data.train.size());
  Matrix eval_x(eval_rows, data.train.features.cols());
  for (std::size_t i = 0; i < eval_rows; ++i) {
    const auto src = data.train.features.row(i);
    std::copy(src.begin(), src.end(), eval_x.row(i).begin());
  }

  std::vector<std::size_t> tracked;
  for (std::size_t l = 0; l < cfg.model.widths.size(); ++l) {
    RngStream t = root.split(kTrackStream, l);
    tracked.push_back(static_cast<std::size_t>(t.below(cfg.model.widths[l])));
  }

  ExperimentResult result;
  for (std::size_t mi = 0; mi < cfg.methods.size() && result.status == RunStatus::ok; ++mi) {
    const MethodSpec& method = cfg.methods[mi];
    const auto started = std::chrono::steady_clock::now();

    NetworkSpec spec{data.train.features.cols(), cfg.model.widths, data.train.classes, cfg.model.activation,
                     method.reg.method == RegMethod::bn};
    RngStream init_rng = root.split(kInitStream);
    Network net = init_network(spec, cfg.train.init, init_rng);

    TrainConfig tc = cfg.train;
    tc.reg = method.reg;
    tc.reg.seed = root.split(kSliceStream, mi);
    tc.seed = root.split(kShuffleStream);
    TrainState state;
    std::vector<MetricsRecord> last_epoch;

    auto record_epoch = [&](std::size_t epoch) {
      const Evaluation tr = evaluate(net, data.train);
      const Evaluation va = evaluate(net, data.val);
      if (!std::isfinite(tr.loss) || !std::isfinite(va.loss)) {
        throw NumericalAbort("non-finite loss for method " + method.label + " at epoch " + std::to_string(epoch));
      }
      const ForwardCache fc = forward(static_cast<const Network&>(net), eval_x);
      last_epoch.clear();
      for (std::size_t l = 0; l < fc.activations.size(); ++l) {
        MetricsRecord r;
        try {
          r = layer_metrics(fc.activations[l], tracked[l], cfg.metrics_slices,
                            root.split(kMetricStream, mi).split(epoch, l));
        } catch (const std::domain_error& e) {
          throw NumericalAbort("layer " + std::to_string(l + 1) + " diagnostics failed for method " + method.label +
                               " at epoch " + std::to_string(epoch) + ": " + e.what());
        }
        r.method = method.label;
        r.epoch = epoch;
        r.layer = l + 1;
        r.train_loss = tr.loss;
        r.val_loss = va.loss;
        r.val_acc = va.accuracy;
        result.records.push_back(r);
        last_epoch.push_back(r);
      }
    };

    std::size_t epoch = 0;
    try {
      record_epoch(0);
      for (epoch = 1; epoch <= cfg.train.epochs; ++epoch) {
        const double loss = train_epoch(net, data.train, tc, state, epoch);
        if (!std::isfinite(loss)) {
          throw NumericalAbort("non-finite training loss for method " + method.label + " at epoch " +
                               std::to_string(epoch));
        }
        record_epoch(epoch);
      }
    } catch (const NumericalAbort& e) {
      result.status = RunStatus::numerical_abort;
      result.abort_reason = e.what();
      result.records.push_back(abort_record(method.label, epoch));
    }

    MethodSummary summary;
    summary.label = method.label;
    if (!last_epoch.empty()) summary.final_val_acc = last_epoch.front().val_acc;
    for (const auto& r : last_epoch) summary.final_sw1_per_layer.push_back(r.sw1_gauss);
    summary.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    result.summaries.push_back(std::move(summary));
  }

  if (write_files) {
    std::error_code ec;
    std::filesystem::create_directories(cfg.out_dir, ec);
    if (ec) throw RunError("cannot create " + cfg.out_dir.string() + ": " + ec.message());
    std::string csv = std::string(kMetricsHeader) + '\n';
    for (const auto& r : result.records) csv += format_csv_row(r) + '\n';
    write_text(cfg.out_dir / "metrics.csv", csv);

    nlohmann::ordered_json summary = nlohmann::ordered_json::object();
    for (const auto& s : result.summaries) {
      summary[s.label] = {{"final_val_acc", s.final_val_acc},
                          {"final_sw1_per_layer", s.final_sw1_per_layer},
                          {"wall_time_s", s.wall_time_s}};
    }
    if (result.status == RunStatus::numerical_abort) summary["abort"] = result.abort_reason;
    write_text(cfg.out_dir / "summary.json", summary.dump(2) + '\n');
  }
  return result;
}

void emit_loss_curves(const std::filesystem::path& out_path) {
  std::string csv = "x,per_loss_shifted,per_grad,huber,pseudo_huber\n";
  for (int i = -300; i <= 300; ++i) {
    const double x = i / 100.0;
    csv += fmt(x) + ',' + fmt(per_point_loss(x) - kSqrt2OverPi) + ',' + fmt(per_point_grad(x)) + ',' +
           fmt(huber(x)) + ',' + fmt(pseudo_huber(x)) + '\n';
  }
  if (out_path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(out_path.parent_path(), ec);
  }
  write_text(out_path, csv);
}

}  // namespace perreg
