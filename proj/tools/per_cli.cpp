// Experiment runner: trains one network per method and writes metrics.csv
// and summary.json, or emits the 1-D loss curves.
//
// Exit codes: 0 success, 1 I/O failure, 2 config error, 3 data-format
// error, 4 numerical abort.

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "perreg/harness.hpp"

namespace {

constexpr int kExitRunError = 1;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumerical = 4;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Activation regularization experiments"};

  std::string config_path;
  std::optional<std::string> dataset, methods, lambda, slices, epochs, batch_size, lr, seed, out_dir;
  std::string curves_path;

  app.add_option("--config", config_path, "Flat key = value config file");
  app.add_option("--dataset", dataset, "gauss_mixture | two_arcs | idx_files");
  app.add_option("--method", methods, "Comma list of methods, e.g. none,per,l2@3e-5,bn");
  app.add_option("--lambda", lambda, "Regularization coefficient for entries without one");
  app.add_option("--slices", slices, "Monte Carlo slices per PER backward pass");
  app.add_option("--epochs", epochs, "Training epochs");
  app.add_option("--batch-size", batch_size, "Mini-batch size");
  app.add_option("--lr", lr, "Learning rate");
  app.add_option("--seed", seed, "Experiment seed");
  app.add_option("--out-dir", out_dir, "Output directory");
  app.add_option("--emit-curves", curves_path, "Write the 1-D loss curves CSV to this path and exit");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    if (!curves_path.empty()) {
      perreg::emit_loss_curves(curves_path);
      return 0;
    }

    perreg::ExperimentConfig cfg;
    if (!config_path.empty()) cfg = perreg::load_config_file(config_path);
    const std::pair<const char*, const std::optional<std::string>*> overrides[] = {
        {"dataset", &dataset}, {"methods", &methods},       {"lambda", &lambda},
        {"slices", &slices},   {"epochs", &epochs},         {"batch_size", &batch_size},
        {"lr", &lr},           {"seed", &seed},             {"out_dir", &out_dir}};
    for (const auto& [key, value] : overrides) {
      if (*value) perreg::apply_config_value(cfg, key, **value);
    }
    cfg.rebuild_methods();

    const perreg::ExperimentResult result = perreg::run_experiment(cfg);
    for (const auto& s : result.summaries) {
      std::cout << s.label << ": val_acc=" << s.final_val_acc << " sw1=[";
      for (std::size_t l = 0; l < s.final_sw1_per_layer.size(); ++l) {
        std::cout << (l ? ", " : "") << s.final_sw1_per_layer[l];
      }
      std::cout << "] time=" << s.wall_time_s << "s\n";
    }
    if (result.status == perreg::RunStatus::numerical_abort) {
      std::cerr << "numerical abort: " << result.abort_reason << '\n';
      return kExitNumerical;
    }
    return 0;
  } catch (const perreg::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const perreg::DataFormatError& e) {
    std::cerr << "data format error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRunError;
  }
}
