#include "pinntk/config.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <utility>

#include "pinntk/errors.hpp"
#include "pinntk/multi_index.hpp"

namespace pinntk {

namespace {

// Reads fields out of one JSON object, collecting wrong-type complaints and
// unknown keys as violations instead of throwing, so a validate pass can
// report every problem at once.
class FieldReader {
 public:
  FieldReader(const nlohmann::json& obj, std::string prefix,
              std::vector<std::string>& sink)
      : obj_(obj), prefix_(std::move(prefix)), sink_(sink) {}

  template <typename T>
  bool read(const char* key, T& dst) {
    seen_.insert(key);
    auto it = obj_.find(key);
    if (it == obj_.end()) return false;
    try {
      dst = it->get<T>();
      return true;
    } catch (const nlohmann::json::exception&) {
      sink_.push_back(prefix_ + key + " has the wrong type");
      return false;
    }
  }

  bool has(const char* key) const { return obj_.contains(key); }

  const nlohmann::json* object(const char* key) {
    seen_.insert(key);
    auto it = obj_.find(key);
    if (it == obj_.end()) return nullptr;
    if (!it->is_object()) {
      sink_.push_back(prefix_ + key + " must be a JSON object");
      return nullptr;
    }
    return &*it;
  }

  // Complain about keys this config schema does not know.
  void finish() {
    for (const auto& item : obj_.items()) {
      if (!seen_.count(item.key())) {
        sink_.push_back("unknown field '" + prefix_ + item.key() + "'");
      }
    }
  }

 private:
  const nlohmann::json& obj_;
  std::string prefix_;
  std::vector<std::string>& sink_;
  std::set<std::string> seen_;
};

Parameterization parse_parameterization(const std::string& name, bool& ok) {
  ok = true;
  if (name == "ntk") return Parameterization::NtkNormal;
  if (name == "torch") return Parameterization::TorchDefault;
  ok = false;
  return Parameterization::NtkNormal;
}

}  // namespace

ExperimentConfig parse_config(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError({std::string("config is not valid JSON: ") + e.what()});
  }
  if (!j.is_object()) {
    throw ConfigError({"config must be a JSON object"});
  }

  ExperimentConfig cfg;
  cfg.echo = j;
  auto& bad = cfg.parse_violations;
  FieldReader top(j, "", bad);

  top.read("command", cfg.command);
  top.read("dim", cfg.dim);
  top.read("n", cfg.n);
  top.read("out", cfg.out);
  top.read("svg", cfg.svg);
  top.read("operators", cfg.operators);
  top.read("width_sweep", cfg.width_sweep);

  long long seed_scalar = 0;
  const bool has_seed = top.read("seed", seed_scalar);
  std::vector<long long> seed_list;
  const bool has_seeds = top.read("seeds", seed_list);
  if (has_seed && has_seeds) {
    bad.push_back("give either seed or seeds, not both");
  }
  if (has_seed) seed_list = {seed_scalar};
  for (long long s : seed_list) {
    if (s < 0) {
      bad.push_back("seed values must be non-negative");
    } else {
      cfg.seeds.push_back(static_cast<std::uint64_t>(s));
    }
  }

  std::vector<double> interval;
  if (top.read("interval", interval)) {
    if (interval.size() != 2) {
      bad.push_back("interval must be a [lo, hi] pair");
    } else {
      cfg.interval_lo = interval[0];
      cfg.interval_hi = interval[1];
    }
  }

  if (const nlohmann::json* k = top.object("kernel")) {
    cfg.has_kernel = true;
    FieldReader r(*k, "kernel.", bad);
    r.read("depth", cfg.kernel.depth);
    r.read("activation", cfg.kernel.activation);
    r.read("order", cfg.kernel.order);
    r.read("quad_nodes", cfg.kernel.quad_nodes);
    r.finish();
  }

  if (const nlohmann::json* nw = top.object("network")) {
    cfg.has_network = true;
    FieldReader r(*nw, "network.", bad);
    r.read("widths", cfg.network.widths);
    r.read("activation", cfg.network.activation);
    r.read("bias", cfg.network.use_bias);
    std::string param;
    if (r.read("parameterization", param)) {
      bool ok = false;
      cfg.network.param = parse_parameterization(param, ok);
      if (!ok) {
        bad.push_back("network.parameterization must be ntk or torch");
      }
    }
    r.finish();
  }

  if (const nlohmann::json* t = top.object("train")) {
    cfg.train.present = true;
    FieldReader r(*t, "train.", bad);
    r.read("variant", cfg.train.variant);
    r.read("optimizer", cfg.train.optimizer);
    r.read("norm", cfg.train.norm);
    r.read("a", cfg.train.freq_a);
    r.read("w", cfg.train.w);
    r.read("lr", cfg.train.lr);
    r.read("steps", cfg.train.steps);
    r.read("grid_n", cfg.train.grid_n);
    r.finish();
  }

  if (const nlohmann::json* rt = top.object("ratio")) {
    cfg.ratio.present = true;
    FieldReader r(*rt, "ratio.", bad);
    r.read("c_t", cfg.ratio.c_t);
    r.read("slack", cfg.ratio.slack);
    r.read("J", cfg.ratio.J);
    r.finish();
  }

  top.finish();
  return cfg;
}

ExperimentConfig load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot read config file " + path.string());
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) {
    throw IoError("error while reading config file " + path.string());
  }
  return parse_config(buf.str());
}

namespace {

bool known_command(const std::string& c) {
  return c == "kernel" || c == "spectrum" || c == "converge" ||
         c == "train" || c == "ratio";
}

// Checks shared by every command that instantiates operator presets.
void check_operators(const ExperimentConfig& cfg, bool against_kernel,
                     std::vector<std::string>& v) {
  if (cfg.operators.empty()) {
    v.push_back("operators must list at least one preset");
    return;
  }
  std::set<std::string> seen;
  for (size_t i = 0; i < cfg.operators.size(); ++i) {
    const std::string& name = cfg.operators[i];
    const std::string where = "operators[" + std::to_string(i) + "]";
    if (!seen.insert(name).second) {
      v.push_back(where + " repeats preset '" + name + "'");
      continue;
    }
    if (!DiffOperator::is_preset(name)) {
      v.push_back(where + " references unknown preset '" + name + "'");
      continue;
    }
    DiffOperator op = DiffOperator::identity(1);
    try {
      op = DiffOperator::preset(name, cfg.dim);
    } catch (const std::invalid_argument&) {
      v.push_back(where + ": preset '" + name +
                  "' does not support dimension " +
                  std::to_string(cfg.dim));
      continue;
    }
    if (against_kernel && cfg.has_kernel && op.order() > cfg.kernel.order) {
      v.push_back(where + ": operator order " +
                  std::to_string(op.order()) + " exceeds kernel order " +
                  std::to_string(cfg.kernel.order));
    }
  }
}

void require_kernel(const ExperimentConfig& cfg, const char* cmd,
                    std::vector<std::string>& v) {
  if (!cfg.has_kernel) {
    v.push_back(std::string("kernel section is required by the ") + cmd +
                " command");
    return;
  }
  try {
    cfg.kernel.validate();
  } catch (const std::exception& e) {
    v.push_back(std::string("kernel: ") + e.what());
  }
}

void require_network(const ExperimentConfig& cfg, const char* cmd,
                     std::vector<std::string>& v) {
  if (!cfg.has_network) {
    v.push_back(std::string("network section is required by the ") + cmd +
                " command");
    return;
  }
  try {
    cfg.network.validate();
  } catch (const std::exception& e) {
    v.push_back(std::string("network: ") + e.what());
  }
  if (!cfg.network.widths.empty() &&
      cfg.network.input_dim() != cfg.dim) {
    v.push_back("network input width " +
                std::to_string(cfg.network.input_dim()) +
                " does not match dim " + std::to_string(cfg.dim));
  }
}

// The empirical-vs-analytic pairing only makes sense when the network and
// the kernel describe the same architecture in the ntk parameterization.
void require_matched_pair(const ExperimentConfig& cfg, const char* cmd,
                          std::vector<std::string>& v) {
  if (!cfg.has_kernel || !cfg.has_network || cfg.network.widths.size() < 2) {
    return;
  }
  if (cfg.network.depth() != cfg.kernel.depth) {
    v.push_back("network depth " + std::to_string(cfg.network.depth()) +
                " does not match kernel depth " +
                std::to_string(cfg.kernel.depth));
  }
  if (cfg.network.activation != cfg.kernel.activation) {
    v.push_back("network activation " + cfg.network.activation +
                " does not match kernel activation " +
                cfg.kernel.activation);
  }
  if (cfg.network.param != Parameterization::NtkNormal) {
    v.push_back(std::string(cmd) +
                " requires the ntk parameterization");
  }
  if (cfg.network.use_bias) {
    v.push_back(std::string(cmd) +
                " requires a bias-free network (the kernel recursion has "
                "no bias term)");
  }
}

}  // namespace

std::vector<std::string> validate(const ExperimentConfig& cfg) {
  std::vector<std::string> v = cfg.parse_violations;

  if (!known_command(cfg.command)) {
    v.push_back(
        "command must be one of kernel, spectrum, converge, train, ratio");
    return v;
  }
  if (cfg.out.empty()) {
    v.push_back("out must name an output directory");
  }
  if (cfg.seeds.empty()) {
    v.push_back("seed must be given explicitly");
  }
  if (cfg.n < 1) {
    v.push_back("n must be at least 1");
  }
  if (cfg.dim < 1) {
    v.push_back("dim must be at least 1");
  }
  if (!(cfg.interval_lo < cfg.interval_hi)) {
    v.push_back("interval must satisfy lo < hi");
  }

  if (cfg.command == "kernel") {
    require_kernel(cfg, "kernel", v);
    if (cfg.dim != 1) {
      v.push_back("the kernel command supports dimension 1 only");
    }
    if (cfg.operators.size() != 1) {
      v.push_back("the kernel command takes exactly one operator");
    }
    check_operators(cfg, true, v);
  } else if (cfg.command == "spectrum") {
    require_network(cfg, "spectrum", v);
    check_operators(cfg, false, v);
    if (cfg.seeds.size() > 1) {
      v.push_back("the spectrum command uses exactly one seed");
    }
    if (cfg.n > 2000) {
      v.push_back("n exceeds the 2000-point dense eigensolver budget");
    }
  } else if (cfg.command == "converge") {
    require_kernel(cfg, "converge", v);
    require_network(cfg, "converge", v);
    require_matched_pair(cfg, "converge", v);
    check_operators(cfg, true, v);
    if (cfg.width_sweep.empty()) {
      v.push_back("width_sweep must list at least one width");
    }
    for (int w : cfg.width_sweep) {
      if (w < 1) {
        v.push_back("width_sweep entries must be positive");
        break;
      }
    }
  } else if (cfg.command == "train") {
    require_network(cfg, "train", v);
    if (!cfg.train.present) {
      v.push_back("train section is required by the train command");
    }
    if (cfg.dim != 1) {
      v.push_back("the train command supports dimension 1 only");
    }
    const TrainSection& t = cfg.train;
    const bool sine_variant = t.variant == "masked" ||
                              t.variant == "masked_second" ||
                              t.variant == "pinn";
    if (!sine_variant && t.variant != "plain") {
      v.push_back(
          "train.variant must be one of plain, masked, masked_second, pinn");
    }
    if (t.optimizer != "gd" && t.optimizer != "adam") {
      v.push_back("train.optimizer must be gd or adam");
    }
    if (t.norm != "half" && t.norm != "mean") {
      v.push_back("train.norm must be half or mean");
    }
    if (!(t.lr > 0.0)) {
      v.push_back("train.lr must be positive");
    }
    if (t.steps < 0) {
      v.push_back("train.steps must be non-negative");
    }
    if (!(t.freq_a > 0.0)) {
      v.push_back("train.a must be positive");
    }
    if (t.variant == "pinn" && !(t.w > 0.0 && t.w < 1.0)) {
      v.push_back("w must lie in (0,1)");
    }
    if (t.variant == "plain") {
      if (cfg.operators.size() != 1) {
        v.push_back("the plain variant takes exactly one operator");
      }
      check_operators(cfg, t.optimizer == "gd", v);
    }
    if (t.optimizer == "gd") {
      if (t.variant != "plain") {
        v.push_back(
            "train.optimizer gd runs the kernel-flow comparison and "
            "requires train.variant plain");
      }
      if (t.norm != "half") {
        v.push_back(
            "train.optimizer gd requires train.norm half (gradient-descent "
            "steps then match kernel-flow time step*lr)");
      }
      if (t.grid_n < 2) {
        v.push_back("train.grid_n must be at least 2");
      }
      require_kernel(cfg, "train", v);
      require_matched_pair(cfg, "train", v);
    }
  } else if (cfg.command == "ratio") {
    require_kernel(cfg, "ratio", v);
    if (cfg.dim != 1) {
      v.push_back("the ratio command supports dimension 1 only");
    }
    if (cfg.operators.size() != 1) {
      v.push_back("the ratio command takes exactly one operator");
    }
    check_operators(cfg, true, v);
    if (!cfg.ratio.present) {
      v.push_back("ratio section is required by the ratio command");
    } else {
      if (!(cfg.ratio.c_t > 0.0)) {
        v.push_back("ratio.c_t must be positive");
      }
      if (!(cfg.ratio.slack >= 0.0)) {
        v.push_back("ratio.slack must be non-negative");
      }
      if (cfg.ratio.J < 1) {
        v.push_back("ratio.J must be at least 1");
      }
      if (cfg.ratio.J > cfg.n) {
        v.push_back("ratio.J must not exceed n");
      }
    }
    if (cfg.n > 2000) {
      v.push_back("n exceeds the 2000-point dense eigensolver budget");
    }
  }

  return v;
}

}  // namespace pinntk
