#include "pinntk/experiments.hpp"

#include <Eigen/Dense>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "pinntk/analytic_kernel.hpp"
#include "pinntk/dynamics.hpp"
#include "pinntk/errors.hpp"
#include "pinntk/io.hpp"
#include "pinntk/multi_index.hpp"
#include "pinntk/network.hpp"
#include "pinntk/rng.hpp"
#include "pinntk/spectral.hpp"

namespace pinntk {

std::string version_string() { return "pinntk 0.1.0"; }

namespace {

constexpr double kTwoPi = 6.28318530717958647692;

std::filesystem::path resolve_out_dir(const std::string& out) {
  std::filesystem::path p = out;
  if (p.is_relative()) {
    const char* root = std::getenv("PINNTK_OUT_ROOT");
    if (root && *root) p = std::filesystem::path(root) / p;
  }
  return p;
}

// Runs fn(0..count-1) on up to `jobs` threads.  Entries must be
// independent; each writes to its own result slot, so the outcome does not
// depend on scheduling.
void parallel_for(int jobs, long count, const std::function<void(long)>& fn) {
  if (jobs <= 1 || count <= 1) {
    for (long i = 0; i < count; ++i) fn(i);
    return;
  }
  const int workers = static_cast<int>(std::min<long>(jobs, count));
  std::atomic<long> next{0};
  std::vector<std::exception_ptr> errors(static_cast<size_t>(workers));
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(workers));
  for (int t = 0; t < workers; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (long i = next++; i < count; i = next++) fn(i);
      } catch (...) {
        errors[static_cast<size_t>(t)] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

// Uniform samples over the configured box, drawn from a stream of their own
// so they never perturb weight initialization.
Eigen::MatrixXd sample_points(const ExperimentConfig& cfg) {
  RngStream rng(cfg.seeds[0], "samples");
  Eigen::MatrixXd X(cfg.n, cfg.dim);
  const double span = cfg.interval_hi - cfg.interval_lo;
  for (long i = 0; i < cfg.n; ++i) {
    for (int k = 0; k < cfg.dim; ++k) {
      X(i, k) = cfg.interval_lo + span * rng.uniform();
    }
  }
  return X;
}

std::function<double(double, double)> kernel_fn(const DiffOperator& op,
                                                const KernelSpec& spec) {
  return [op, spec](double x, double y) {
    Eigen::VectorXd vx(1), vy(1);
    vx[0] = x;
    vy[0] = y;
    return operator_kernel(op, spec, vx, vy);
  };
}

LossVariant variant_from_string(const std::string& s) {
  if (s == "plain") return LossVariant::Plain;
  if (s == "masked") return LossVariant::SineMasked;
  if (s == "masked_second") return LossVariant::SineMaskedSecond;
  return LossVariant::SinePinn;
}

LossNorm norm_from_string(const std::string& s) {
  return s == "half" ? LossNorm::Half : LossNorm::Mean;
}

void run_kernel(const ExperimentConfig& cfg, RunResult& res) {
  DiffOperator op = DiffOperator::preset(cfg.operators[0], 1);
  const long n = cfg.n;
  Eigen::MatrixXd X(n, 1);
  const double h = (cfg.interval_hi - cfg.interval_lo) / double(n);
  for (long i = 0; i < n; ++i) X(i, 0) = cfg.interval_lo + (i + 0.5) * h;

  Eigen::MatrixXd K = analytic_operator_gram(op, cfg.kernel, X);
  std::vector<std::vector<std::string>> rows;
  rows.reserve(static_cast<size_t>(n * n));
  for (long i = 0; i < n; ++i) {
    for (long j = 0; j < n; ++j) {
      rows.push_back({std::to_string(i + 1), std::to_string(j + 1),
                      format_full(X(i, 0)), format_full(X(j, 0)),
                      format_full(K(i, j))});
    }
  }
  write_csv(res.out_dir / "kernel.csv", {"i", "j", "x", "xp", "value"}, rows);
  res.outputs.push_back("kernel.csv");
  res.summary["max_abs_value"] = K.cwiseAbs().maxCoeff();
}

void run_spectrum(const ExperimentConfig& cfg, RunResult& res) {
  const std::uint64_t seed = cfg.seeds[0];
  Eigen::MatrixXd X = sample_points(cfg);
  RngStream init_rng(seed, "init");
  NetworkParams params = init_params(cfg.network, init_rng);

  const std::vector<std::string> header = {"index", "eigenvalue",
                                           "normalized", "label"};
  std::vector<std::vector<std::string>> combined;
  std::vector<std::pair<std::string, Eigen::VectorXd>> curves;
  for (const std::string& name : cfg.operators) {
    DiffOperator op = DiffOperator::preset(name, cfg.dim);
    Eigen::MatrixXd G = empirical_gram(cfg.network, params, op, X);
    Eigen::VectorXd eig = sym_eigvals(G);
    if (!(eig[0] > 0.0)) {
      throw NumericalError("leading eigenvalue of the " + name +
                           " Gram is not positive; cannot normalize");
    }
    Eigen::VectorXd norm = eig / eig[0];
    const std::string label = name + " m=" +
                              std::to_string(cfg.network.widths[1]) +
                              " seed=" + std::to_string(seed);
    std::vector<std::vector<std::string>> rows;
    rows.reserve(static_cast<size_t>(eig.size()));
    for (Eigen::Index j = 0; j < eig.size(); ++j) {
      rows.push_back({std::to_string(j + 1), format_full(eig[j]),
                      format_full(norm[j]), label});
      combined.push_back(rows.back());
    }
    const std::string fname = "spectrum_" + name + ".csv";
    write_csv(res.out_dir / fname, header, rows);
    res.outputs.push_back(fname);
    curves.emplace_back(name, norm);
    res.summary["decay_index_1e-6"][name] = decay_index(norm, 1e-6);
  }
  write_csv(res.out_dir / "spectrum_combined.csv", header, combined);
  res.outputs.push_back("spectrum_combined.csv");
  if (cfg.svg) {
    write_text_file(res.out_dir / "spectrum.svg", spectrum_svg(curves));
    res.outputs.push_back("spectrum.svg");
  }
}

void run_converge(const ExperimentConfig& cfg, int jobs, RunResult& res) {
  Eigen::MatrixXd X = sample_points(cfg);

  std::vector<DiffOperator> ops;
  std::vector<Eigen::MatrixXd> analytic;
  std::vector<double> amax;
  for (const std::string& name : cfg.operators) {
    ops.push_back(DiffOperator::preset(name, cfg.dim));
    analytic.push_back(analytic_operator_gram(ops.back(), cfg.kernel, X));
    amax.push_back(analytic.back().cwiseAbs().maxCoeff());
  }

  const long O = static_cast<long>(ops.size());
  const long W = static_cast<long>(cfg.width_sweep.size());
  const long S = static_cast<long>(cfg.seeds.size());
  const long total = O * W * S;
  std::vector<double> sup_err(static_cast<size_t>(total), 0.0);

  auto entry = [&](long e) {
    const long oi = e / (W * S);
    const long wi = (e / S) % W;
    const long si = e % S;
    const int m = cfg.width_sweep[static_cast<size_t>(wi)];
    NetworkConfig net = cfg.network;
    for (size_t l = 1; l + 1 < net.widths.size(); ++l) net.widths[l] = m;
    RngStream rng(cfg.seeds[static_cast<size_t>(si)],
                  "init-w" + std::to_string(m));
    NetworkParams params = init_params(net, rng);
    Eigen::MatrixXd G =
        empirical_gram(net, params, ops[static_cast<size_t>(oi)], X);
    sup_err[static_cast<size_t>(e)] =
        (G - analytic[static_cast<size_t>(oi)]).cwiseAbs().maxCoeff();
  };
  // First entry runs alone so shared lazily-built tables (jet layouts,
  // activation series) are warm before threads fan out.
  entry(0);
  parallel_for(jobs, total - 1, [&](long i) { entry(i + 1); });

  std::vector<std::vector<std::string>> rows;
  for (long wi = 0; wi < W; ++wi) {
    for (long oi = 0; oi < O; ++oi) {
      double mean = 0.0;
      for (long si = 0; si < S; ++si) {
        mean += sup_err[static_cast<size_t>((oi * W + wi) * S + si)];
      }
      mean /= double(S);
      rows.push_back({std::to_string(cfg.width_sweep[static_cast<size_t>(wi)]),
                      cfg.operators[static_cast<size_t>(oi)],
                      format_full(mean),
                      format_full(amax[static_cast<size_t>(oi)]),
                      format_full(mean / amax[static_cast<size_t>(oi)])});
    }
  }
  write_csv(res.out_dir / "converge.csv",
            {"width", "operator", "mean_sup_error", "analytic_max",
             "relative"},
            rows);
  res.outputs.push_back("converge.csv");

  for (long oi = 0; oi < O; ++oi) {
    std::vector<double> rel;
    bool monotone = true;
    for (long wi = 0; wi < W; ++wi) {
      double mean = 0.0;
      for (long si = 0; si < S; ++si) {
        mean += sup_err[static_cast<size_t>((oi * W + wi) * S + si)];
      }
      mean /= double(S);
      rel.push_back(mean / amax[static_cast<size_t>(oi)]);
      if (wi > 0 && rel[size_t(wi)] > rel[size_t(wi) - 1]) monotone = false;
    }
    const std::string& name = cfg.operators[static_cast<size_t>(oi)];
    res.summary["relative"][name] = rel;
    res.summary["monotone_non_increasing"][name] = monotone;
  }
}

void run_train(const ExperimentConfig& cfg, RunResult& res) {
  const TrainSection& t = cfg.train;
  Eigen::MatrixXd X = sample_points(cfg);
  RngStream init_rng(cfg.seeds[0], "init");
  NetworkParams params = init_params(cfg.network, init_rng);
  const std::vector<long> cps = geometric_checkpoints(t.steps);

  std::vector<std::vector<std::string>> rows;
  if (t.optimizer == "gd") {
    TrainingProblem prob;
    prob.X = X;
    prob.variant = LossVariant::Plain;
    prob.norm = LossNorm::Half;
    prob.op = DiffOperator::preset(cfg.operators[0], 1);
    prob.freq_a = t.freq_a;
    prob.Y.resize(cfg.n);
    for (long i = 0; i < cfg.n; ++i) {
      prob.Y[i] = std::sin(kTwoPi * t.freq_a * X(i, 0));
    }
    Eigen::MatrixXd grid(t.grid_n, 1);
    for (int g = 0; g < t.grid_n; ++g) {
      grid(g, 0) = cfg.interval_lo + (cfg.interval_hi - cfg.interval_lo) *
                                         double(g) / double(t.grid_n - 1);
    }
    CompareResult cmp = compare_dynamics(prob, cfg.network, params,
                                         cfg.kernel, t.lr, t.steps, grid, cps);
    for (size_t k = 0; k < cmp.steps.size(); ++k) {
      rows.push_back({std::to_string(cmp.steps[k]), format_full(cmp.times[k]),
                      format_full(cmp.losses[k]),
                      format_full(cmp.sup_deviation[k])});
    }
    res.summary["lambda_min"] = cmp.lambda_min;
    res.summary["final_loss"] = cmp.losses.back();
    double dev_max = 0.0;
    for (double d : cmp.sup_deviation) dev_max = std::max(dev_max, d);
    res.summary["max_sup_deviation"] = dev_max;
    res.summary["final_sup_deviation"] = cmp.sup_deviation.back();
  } else {
    TrainingProblem prob;
    if (t.variant == "plain") {
      prob.X = X;
      prob.variant = LossVariant::Plain;
      prob.norm = norm_from_string(t.norm);
      prob.op = DiffOperator::preset(cfg.operators[0], 1);
      prob.freq_a = t.freq_a;
      prob.Y.resize(cfg.n);
      for (long i = 0; i < cfg.n; ++i) {
        prob.Y[i] = std::sin(kTwoPi * t.freq_a * X(i, 0));
      }
    } else {
      prob = make_sine_problem(variant_from_string(t.variant), X, t.freq_a,
                               t.w, norm_from_string(t.norm));
    }
    AdamOptions opts;
    opts.lr = t.lr;
    Trajectory traj = adam_train(prob, cfg.network, params, opts, t.steps,
                                 cps, nullptr);
    for (size_t k = 0; k < traj.steps.size(); ++k) {
      rows.push_back({std::to_string(traj.steps[k]),
                      format_full(traj.times[k]), format_full(traj.losses[k]),
                      "nan"});
    }
    res.summary["final_loss"] = traj.losses.back();
  }
  write_csv(res.out_dir / "train.csv",
            {"step", "time", "loss", "sup_deviation"}, rows);
  res.outputs.push_back("train.csv");
}

void run_ratio(const ExperimentConfig& cfg, RunResult& res) {
  DiffOperator id = DiffOperator::identity(1);
  DiffOperator op = DiffOperator::preset(cfg.operators[0], 1);
  const int n = static_cast<int>(cfg.n);
  Eigen::VectorXd lam = nystrom_eigs(NystromProblem::uniform_interval(
      kernel_fn(id, cfg.kernel), cfg.interval_lo, cfg.interval_hi, n));
  Eigen::VectorXd mu = nystrom_eigs(NystromProblem::uniform_interval(
      kernel_fn(op, cfg.kernel), cfg.interval_lo, cfg.interval_hi, n));

  for (long j = 0; j < cfg.ratio.J; ++j) {
    if (!(lam[j] > 0.0)) {
      throw NumericalError("plain kernel spectrum is not positive at index " +
                           std::to_string(j + 1) +
                           "; the ratio bound cannot be tested");
    }
    if (!(mu[j] > 0.0)) {
      throw NumericalError(
          "operator kernel spectrum is not positive at index " +
          std::to_string(j + 1) + "; the ratio bound cannot be tested");
    }
  }
  RatioBoundResult r =
      ratio_bound_check(lam, mu, cfg.ratio.c_t, cfg.ratio.slack, cfg.ratio.J);

  std::vector<std::vector<std::string>> rows;
  rows.reserve(static_cast<size_t>(n));
  for (int j = 0; j < n; ++j) {
    rows.push_back({std::to_string(j + 1), format_full(lam[j]),
                    format_full(mu[j]), format_full(lam[j] / mu[j])});
  }
  write_csv(res.out_dir / "ratio.csv", {"j", "lambda", "mu", "ratio"}, rows);
  res.outputs.push_back("ratio.csv");
  res.summary["max_ratio"] = r.max_ratio;
  res.summary["arg_j"] = r.arg_j;
  res.summary["bound"] = r.bound;
  res.summary["pass"] = r.pass;
}

}  // namespace

RunResult run_experiment(const ExperimentConfig& cfg, int jobs) {
  std::vector<std::string> violations = validate(cfg);
  if (!violations.empty()) {
    throw ConfigError(std::move(violations));
  }
  if (jobs < 1) jobs = 1;

  const auto t0 = std::chrono::steady_clock::now();
  RunResult res;
  res.out_dir = resolve_out_dir(cfg.out);
  ensure_dir(res.out_dir);

  if (cfg.command == "kernel") {
    run_kernel(cfg, res);
  } else if (cfg.command == "spectrum") {
    run_spectrum(cfg, res);
  } else if (cfg.command == "converge") {
    run_converge(cfg, jobs, res);
  } else if (cfg.command == "train") {
    run_train(cfg, res);
  } else {
    run_ratio(cfg, res);
  }

  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  nlohmann::json manifest;
  manifest["command"] = cfg.command;
  manifest["config"] = cfg.echo;
  manifest["seeds"] = cfg.seeds;
  manifest["version"] = version_string();
  manifest["wall_time_sec"] = wall;
  manifest["outputs"] = res.outputs;
  manifest["summary"] = res.summary;
  write_text_file(res.out_dir / "manifest.json", manifest.dump(2) + "\n");
  return res;
}

}  // namespace pinntk
