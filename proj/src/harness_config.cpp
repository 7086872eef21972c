#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "perreg/harness.hpp"

namespace perreg {
namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double parse_real(const std::string& key, const std::string& value) {
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(value.c_str(), &end);
  if (value.empty() || end != value.c_str() + value.size() || errno == ERANGE) {
    throw ConfigError("config: '" + key + "' expects a number, got '" + value + "'");
  }
  return v;
}

std::uint64_t parse_count(const std::string& key, const std::string& value) {
  errno = 0;
  char* end = nullptr;
  if (value.empty() || value[0] == '-') {
    throw ConfigError("config: '" + key + "' expects a nonnegative integer, got '" + value + "'");
  }
  const unsigned long long v = std::strtoull(value.c_str(), &end, 10);
  if (end != value.c_str() + value.size() || errno == ERANGE) {
    throw ConfigError("config: '" + key + "' expects a nonnegative integer, got '" + value + "'");
  }
  return v;
}

std::string format_lambda(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

}  // namespace

void ExperimentConfig::rebuild_methods() {
  const auto entries = split_list(method_list);
  if (entries.empty()) throw ConfigError("config: at least one method is required");

  struct Parsed {
    RegMethod method;
    double lambda;
  };
  std::vector<Parsed> parsed;
  std::map<RegMethod, int> occurrences;
  for (const auto& e : entries) {
    const auto at = e.find('@');
    const std::string name = trim(e.substr(0, at));
    const auto m = parse_reg_method(name);
    if (!m) throw ConfigError("config: unknown method '" + name + "'");
    double lam = lambda;
    if (at != std::string::npos) lam = parse_real("methods", trim(e.substr(at + 1)));
    if (*m == RegMethod::none || *m == RegMethod::bn) lam = 0.0;
    if (!(lam >= 0.0)) throw ConfigError("config: lambda must be nonnegative");
    parsed.push_back({*m, lam});
    ++occurrences[*m];
  }

  methods.clear();
  std::set<std::string> labels;
  for (const auto& p : parsed) {
    MethodSpec spec;
    spec.label = std::string(to_string(p.method));
    if (occurrences[p.method] > 1) spec.label += "@" + format_lambda(p.lambda);
    if (!labels.insert(spec.label).second) throw ConfigError("config: duplicate method '" + spec.label + "'");
    spec.reg.method = p.method;
    spec.reg.lambda = p.lambda;
    spec.reg.slices = slices;
    spec.reg.target = reg_target;
    methods.push_back(std::move(spec));
  }
}

void ExperimentConfig::validate() const {
  if (methods.empty()) throw ConfigError("config: at least one method is required");
  const auto& d = dataset;
  if (d.kind != DatasetKind::idx_files) {
    if (d.train_size < 2 || d.val_size < 1) throw ConfigError("config: dataset sizes must be positive");
  }
  if (d.kind == DatasetKind::gauss_mixture) {
    if (d.classes < 2 || d.dims < 1) throw ConfigError("config: gauss_mixture needs classes >= 2 and dims >= 1");
    if (!(d.spread >= 0.0) || !(d.separation > 0.0)) throw ConfigError("config: spread must be >= 0 and separation > 0");
  }
  if (d.kind == DatasetKind::two_arcs && !(d.noise >= 0.0)) throw ConfigError("config: noise must be >= 0");
  if (d.kind == DatasetKind::idx_files && (d.idx_images.empty() || d.idx_labels.empty())) {
    throw ConfigError("config: idx_files needs idx_images and idx_labels");
  }
  if (model.widths.empty()) throw ConfigError("config: at least one hidden layer is required");
  for (auto w : model.widths) {
    if (w == 0) throw ConfigError("config: hidden widths must be positive");
  }
  if (metrics_slices == 0) throw ConfigError("config: metrics_slices must be >= 1");
  if (gaussian_ref_size < 2) throw ConfigError("config: gaussian_ref_size must be >= 2");
  try {
    for (const auto& m : methods) {
      TrainConfig t = train;
      t.reg = m.reg;
      t.validate();
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

void apply_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  auto& d = cfg.dataset;
  if (key == "dataset") {
    if (value == "gauss_mixture") d.kind = DatasetKind::gauss_mixture;
    else if (value == "two_arcs") d.kind = DatasetKind::two_arcs;
    else if (value == "idx_files") d.kind = DatasetKind::idx_files;
    else throw ConfigError("config: unknown dataset '" + value + "'");
  } else if (key == "classes") {
    d.classes = parse_count(key, value);
  } else if (key == "dims") {
    d.dims = parse_count(key, value);
  } else if (key == "train_size") {
    d.train_size = parse_count(key, value);
  } else if (key == "val_size") {
    d.val_size = parse_count(key, value);
  } else if (key == "spread") {
    d.spread = parse_real(key, value);
  } else if (key == "separation") {
    d.separation = parse_real(key, value);
  } else if (key == "noise") {
    d.noise = parse_real(key, value);
  } else if (key == "idx_images") {
    d.idx_images = value;
  } else if (key == "idx_labels") {
    d.idx_labels = value;
  } else if (key == "widths") {
    cfg.model.widths.clear();
    for (const auto& w : split_list(value)) cfg.model.widths.push_back(parse_count(key, w));
  } else if (key == "activation") {
    const auto a = parse_activation(value);
    if (!a) throw ConfigError("config: unknown activation '" + value + "'");
    cfg.model.activation = *a;
  } else if (key == "epochs") {
    cfg.train.epochs = parse_count(key, value);
  } else if (key == "batch_size") {
    cfg.train.batch_size = parse_count(key, value);
  } else if (key == "lr") {
    cfg.train.lr = parse_real(key, value);
  } else if (key == "momentum") {
    cfg.train.momentum = parse_real(key, value);
  } else if (key == "grad_clip") {
    if (value == "none" || value == "off") cfg.train.grad_clip_norm.reset();
    else cfg.train.grad_clip_norm = parse_real(key, value);
  } else if (key == "init") {
    if (value == "he") cfg.train.init = InitScheme::he;
    else if (value == "glorot") cfg.train.init = InitScheme::glorot;
    else throw ConfigError("config: unknown init '" + value + "'");
  } else if (key == "seed") {
    cfg.seed = parse_count(key, value);
  } else if (key == "methods" || key == "method") {
    cfg.method_list = value;
  } else if (key == "lambda") {
    cfg.lambda = parse_real(key, value);
  } else if (key == "slices") {
    cfg.slices = parse_count(key, value);
  } else if (key == "reg_target") {
    if (value == "post") cfg.reg_target = RegTarget::post_activation;
    else if (value == "pre") cfg.reg_target = RegTarget::pre_activation;
    else throw ConfigError("config: reg_target must be 'post' or 'pre'");
  } else if (key == "metrics_slices") {
    cfg.metrics_slices = parse_count(key, value);
  } else if (key == "gaussian_ref_size") {
    cfg.gaussian_ref_size = parse_count(key, value);
  } else if (key == "out_dir") {
    cfg.out_dir = value;
  } else {
    throw ConfigError("config: unknown key '" + key + "'");
  }
}

ExperimentConfig parse_config_text(const std::string& text) {
  ExperimentConfig cfg;
  std::stringstream ss(text);
  std::string line;
  int line_no = 0;
  while (std::getline(ss, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    apply_config_value(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  cfg.rebuild_methods();
  return cfg;
}

ExperimentConfig load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

}  // namespace perreg
