#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "sketchls/data_io.hpp"
#include "sketchls/solvers.hpp"
#include "sketchls/theory.hpp"

namespace sketchls {

namespace cli_detail {

/// Bad flag combinations detected after parsing; exits with code 1 like any
/// other usage error.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Derived stream for the second sketch of two-sketch methods (and the
/// Monte-Carlo width draws), so one --seed pins every random choice.
inline std::uint64_t derived_seed(std::uint64_t seed, std::uint64_t stream) {
  return seed ^ (0x9E3779B97F4A7C15ull * (stream + 1));
}

inline DatasetFormat format_from(const std::string& flag, const std::string& path) {
  if (flag == "libsvm") return DatasetFormat::LibsvmText;
  if (flag == "csv") return DatasetFormat::DenseCsv;
  // infer from the extension
  return path.size() >= 4 && path.substr(path.size() - 4) == ".csv"
             ? DatasetFormat::DenseCsv
             : DatasetFormat::LibsvmText;
}

inline bool needs_m(const std::string& method) {
  return method == "cs" || method == "hs" || method == "ihs" ||
         method == "acc-ihs" || method == "ipds" || method == "acc-ipds";
}

inline bool needs_d(const std::string& method) {
  return method == "rp" || method == "drp" || method == "idrp" ||
         method == "acc-idrp" || method == "acc-idrp-dual" ||
         method == "ipds" || method == "acc-ipds";
}

inline std::vector<std::uint64_t> parse_seed_range(const std::string& spec) {
  const auto pos = spec.find("..");
  if (pos == std::string::npos || pos == 0 || pos + 2 >= spec.size())
    throw UsageError("--seeds expects a range a..b");
  std::uint64_t lo = 0, hi = 0;
  try {
    lo = std::stoull(spec.substr(0, pos));
    hi = std::stoull(spec.substr(pos + 2));
  } catch (const std::exception&) {
    throw UsageError("--seeds expects a numeric range a..b");
  }
  if (hi < lo) throw UsageError("--seeds range is empty");
  std::vector<std::uint64_t> out;
  for (std::uint64_t s = lo; s <= hi; ++s) out.push_back(s);
  return out;
}

/// trace.csv -> trace.<seed>.csv (suffix appended when there is no extension)
inline std::string seed_trace_path(const std::string& path, std::uint64_t seed) {
  const auto dot = path.find_last_of('.');
  const auto slash = path.find_last_of("/\\");
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash))
    return path + "." + std::to_string(seed) + ".csv";
  return path.substr(0, dot) + "." + std::to_string(seed) + path.substr(dot);
}

inline SolveReport run_method(const RidgeProblem& prob, const std::string& method,
                              std::size_t m, std::size_t d, std::uint64_t seed,
                              const SolverConfig& cfg) {
  const auto make_pi = [&] {
    return make_sketch(SketchKind::Gaussian, prob.n(), m, seed);
  };
  const auto make_r = [&](std::uint64_t stream) {
    return make_sketch(SketchKind::Gaussian, prob.p(), d, derived_seed(seed, stream));
  };

  if (method == "exact")
    return closed_form_report(prob, ClosedFormMethod::Original, nullptr, cfg);
  if (method == "cs") {
    const SketchOperator pi = make_pi();
    return closed_form_report(prob, ClosedFormMethod::ClassicalSketch, &pi, cfg);
  }
  if (method == "hs") {
    const SketchOperator pi = make_pi();
    return closed_form_report(prob, ClosedFormMethod::HessianSketch, &pi, cfg);
  }
  if (method == "rp") {
    const SketchOperator r = make_sketch(SketchKind::Gaussian, prob.p(), d, seed);
    return closed_form_report(prob, ClosedFormMethod::RandomProjection, &r, cfg);
  }
  if (method == "drp") {
    const SketchOperator r = make_sketch(SketchKind::Gaussian, prob.p(), d, seed);
    return closed_form_report(prob, ClosedFormMethod::DualRandomProjection, &r, cfg);
  }
  if (method == "ihs") return ihs(prob, make_pi(), cfg);
  if (method == "acc-ihs") return acc_ihs(prob, make_pi(), cfg);
  if (method == "idrp")
    return idrp(prob, make_sketch(SketchKind::Gaussian, prob.p(), d, seed), cfg);
  if (method == "acc-idrp")
    return acc_idrp(prob, make_sketch(SketchKind::Gaussian, prob.p(), d, seed),
                    AccIdrpVariant::PrimalVersion, cfg);
  if (method == "acc-idrp-dual")
    return acc_idrp(prob, make_sketch(SketchKind::Gaussian, prob.p(), d, seed),
                    AccIdrpVariant::DualVersion, cfg);
  if (method == "ipds") return ipds(prob, make_pi(), make_r(1), cfg);
  if (method == "acc-ipds") return acc_ipds(prob, make_pi(), make_r(1), cfg);
  throw UsageError("unknown method '" + method + "'");
}

inline std::string summary_line(const SolveReport& rep, std::uint64_t seed) {
  const SolveRecord& last = rep.trace.back();
  std::string out = "method=" + rep.method + " seed=" + std::to_string(seed) +
                    " status=" + to_string(rep.status) +
                    " iterations=" + std::to_string(last.iter) +
                    " subproblems=" + std::to_string(last.subproblems) +
                    " objective=" + detail::format_real(last.objective);
  if (last.err_x) out += " err_X=" + detail::format_real(*last.err_x);
  if (last.err_2) out += " err_2=" + detail::format_real(*last.err_2);
  return out;
}

inline void zero_wall_times(SolveReport& rep) {
  for (SolveRecord& r : rep.trace) r.wall_ns = 0;
}

inline int cmd_gen(const std::string& kind, std::size_t n, std::size_t p,
                   std::size_t rank, double noise_std, std::uint64_t seed,
                   const std::string& out_path) {
  SyntheticSpec spec;
  spec.n = n;
  spec.p = p;
  spec.noise_std = noise_std;
  spec.seed = seed;
  if (kind == "lowrank") {
    if (rank == 0) throw UsageError("gen --kind lowrank requires --rank");
    spec.kind = SyntheticKind::LowRank;
    spec.rank = rank;
  } else {
    spec.kind = SyntheticKind::Ar1;
    spec.decay_exponent_divisor = kind == "ar1-ill" ? 10.0 : 1.0;
  }
  const SyntheticData data = gen_synthetic(spec);
  save_dataset_csv(data.X, data.y, out_path);
  std::cout << "wrote " << out_path << " n=" << n << " p=" << p << "\n";
  return 0;
}

inline int cmd_run(const std::string& method, const std::string& data_path,
                   const std::string& format_flag, std::optional<double> lambda_flag,
                   std::size_t m, std::size_t d, std::uint64_t seed,
                   const std::string& seeds_flag, std::size_t iters, double tol,
                   double inner_tol, bool reference, const std::string& trace_path,
                   bool wall_clock, bool allow_large_dual) {
  if (needs_m(method) && m == 0)
    throw UsageError("method '" + method + "' requires --m");
  if (needs_d(method) && d == 0)
    throw UsageError("method '" + method + "' requires --d");

  const Dataset data = load_dataset(data_path, format_from(format_flag, data_path));
  RidgeProblem prob;
  prob.X = std::move(data.X);
  prob.y = std::move(data.y);
  prob.lambda = lambda_flag ? *lambda_flag
                            : 1.0 / std::sqrt(static_cast<double>(prob.n()));

  SolverConfig cfg;
  cfg.outer.max_iters = iters;
  cfg.outer.tol = tol;
  cfg.inner.tol = inner_tol;
  cfg.allow_large_dual = allow_large_dual;
  if (reference) cfg.reference = ridge_exact(prob, RidgeForm::Auto, allow_large_dual);

  std::vector<std::uint64_t> seeds =
      seeds_flag.empty() ? std::vector<std::uint64_t>{seed}
                         : parse_seed_range(seeds_flag);
  const bool fan_out = !seeds_flag.empty();

  std::vector<std::string> summaries(seeds.size());
  std::vector<std::string> failures(seeds.size());
  std::atomic<std::size_t> next{0};
  std::atomic<int> exit_code{0};

  auto worker = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= seeds.size()) break;
      try {
        SolveReport rep = run_method(prob, method, m, d, seeds[i], cfg);
        if (!wall_clock) zero_wall_times(rep);
        const std::string path =
            fan_out ? seed_trace_path(trace_path, seeds[i]) : trace_path;
        write_trace(rep, path);
        summaries[i] = summary_line(rep, seeds[i]);
        if (rep.status == RunStatus::Diverged || rep.status == RunStatus::Breakdown) {
          failures[i] = to_string(rep.status);
          exit_code.store(2);
        }
      } catch (const std::exception& e) {
        failures[i] = e.what();
        summaries[i] = "method=" + method + " seed=" + std::to_string(seeds[i]) +
                       " status=error";
        exit_code.store(2);
      }
    }
  };

  const std::size_t workers =
      std::min<std::size_t>(seeds.size(),
                            std::max(1u, std::thread::hardware_concurrency()));
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t i = 0; i < workers; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  for (const std::string& s : summaries) std::cout << s << "\n";
  for (std::size_t i = 0; i < seeds.size(); ++i)
    if (!failures[i].empty())
      std::cerr << "seed " << seeds[i] << ": " << failures[i] << "\n";
  return exit_code.load();
}

inline void print_kv(const std::string& key, double value) {
  std::cout << key << "=" << detail::format_real(value) << "\n";
}

inline int cmd_verify(const std::string& data_path, const std::string& format_flag,
                      std::size_t m, std::size_t d, std::uint64_t seed,
                      std::size_t trials, std::optional<double> lambda_flag,
                      double delta, bool allow_large_dual) {
  const Dataset data = load_dataset(data_path, format_from(format_flag, data_path));
  RidgeProblem prob;
  prob.X = std::move(data.X);
  prob.y = std::move(data.y);
  prob.lambda = lambda_flag ? *lambda_flag
                            : 1.0 / std::sqrt(static_cast<double>(prob.n()));

  const std::size_t n = prob.n(), p = prob.p();
  std::cout << "n=" << n << "\n" << "p=" << p << "\n";
  print_kv("lambda", prob.lambda);

  const SketchOperator pi = make_sketch(SketchKind::Gaussian, n, m, seed);
  const SketchOperator r_op =
      make_sketch(SketchKind::Gaussian, p, d, derived_seed(seed, 1));
  const PrimalDualPair star = ridge_exact(prob, RidgeForm::Auto, allow_large_dual);

  // spectral split of X: head rank and tail magnitude
  const std::size_t kmax = std::min(n, p);
  const SvdResult svd = thin_svd(prob.X, kmax);
  std::size_t rank = 0;
  const double cutoff =
      svd.singular_values.empty() ? 0.0 : 1e-10 * svd.singular_values.front();
  for (double s : svd.singular_values)
    if (s > cutoff) ++rank;
  const double sigma_r1 = rank < kmax ? svd.singular_values[rank] : 0.0;
  std::cout << "rank=" << rank << "\n";
  print_kv("sigma_r1", sigma_r1);

  print_kv("rho1_hs", rho1(prob.X, pi));
  Vec xw = matvec(prob.X, star.w);
  const double xw_norm = norm2(xw);
  if (xw_norm > 0.0) xw = scaled(xw, 1.0 / xw_norm);
  print_kv("rho2_hs", rho2(prob.X, pi, xw));

  print_kv("rho1_drp", rho1(prob.X, r_op));
  Vec xta = tmatvec(prob.X, star.alpha);
  const double xta_norm = norm2(xta);
  if (xta_norm > 0.0) xta = scaled(xta, 1.0 / xta_norm);
  print_kv("rho2_drp", rho2(prob.X, r_op, xta));

  const auto [wc, wc_se] =
      gaussian_width_mc(prob.X, SubspaceSet::ColumnSpace, trials, derived_seed(seed, 2));
  const auto [wr, wr_se] =
      gaussian_width_mc(prob.X, SubspaceSet::RowSpace, trials, derived_seed(seed, 3));
  print_kv("width_col", wc);
  print_kv("width_col_stderr", wc_se);
  print_kv("width_sq_col", wc * wc);
  print_kv("width_row", wr);
  print_kv("width_row_stderr", wr_se);
  print_kv("width_sq_row", wr * wr);

  if (p <= kMaxKappaDim)
    print_kv("kappa_hs", kappa_sketch(prob, pi, TheorySide::HS));
  else
    std::cout << "kappa_hs=unavailable\n";
  if (n <= kMaxKappaDim)
    print_kv("kappa_drp", kappa_sketch(prob, r_op, TheorySide::DRP));
  else
    std::cout << "kappa_drp=unavailable\n";

  // tail-orthogonality ratios of w* (the bound inputs the theory leaves to
  // the caller)
  double tail_x_sq = 0.0, tail_v_sq = 0.0;
  for (std::size_t i = rank; i < kmax; ++i) {
    double vi_w = 0.0;
    for (std::size_t j = 0; j < p; ++j) vi_w += svd.V(j, i) * star.w[j];
    tail_v_sq += vi_w * vi_w;
    tail_x_sq += svd.singular_values[i] * svd.singular_values[i] * vi_w * vi_w;
  }
  const double w2 = norm2(star.w);
  const double rho_orth_hs = xw_norm > 0.0 ? std::sqrt(tail_x_sq) / xw_norm : 0.0;
  const double rho_orth_drp = w2 > 0.0 ? std::sqrt(tail_v_sq) / w2 : 0.0;
  print_kv("rho_orth_hs", rho_orth_hs);
  print_kv("rho_orth_drp", rho_orth_drp);

  const auto print_constants = [&](const std::string& tag,
                                   const LowRankBoundConstants& c) {
    print_kv(tag + "_eps", c.eps);
    print_kv(tag + "_tau", c.tau);
    print_kv(tag + "_upsilon", c.upsilon);
    print_kv(tag + "_bound", c.bound);
    std::cout << tag << "_thresholds_met=" << (c.thresholds_met ? 1 : 0) << "\n";
  };
  if (rank >= 1 && rank < n)
    print_constants("lowrank_hs",
                    lowrank_bound_constants(m, rank, n, delta, sigma_r1, prob.lambda,
                                            n, TheorySide::HS, rho_orth_hs));
  else
    std::cout << "lowrank_hs=unavailable\n";
  if (rank >= 1 && rank < p)
    print_constants("lowrank_drp",
                    lowrank_bound_constants(d, rank, p, delta, sigma_r1, prob.lambda,
                                            n, TheorySide::DRP, rho_orth_drp));
  else
    std::cout << "lowrank_drp=unavailable\n";
  return 0;
}

}  // namespace cli_detail

/// Entry point shared by the binary and the tests. `args` excludes the
/// program name. Exit codes: 0 success, 1 usage error, 2 runtime or solver
/// failure.
inline int run_cli(std::vector<std::string> args) {
  CLI::App app{"Sketched solvers for L2-regularized least squares"};
  app.name("sketchls");
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "Generate a synthetic dataset (DenseCsv)");
  std::string gen_kind;
  std::size_t gen_n = 0, gen_p = 0, gen_rank = 0;
  double gen_noise = 1.0;
  std::uint64_t gen_seed = 0;
  std::string gen_out;
  gen->add_option("--kind", gen_kind, "ar1, ar1-ill, or lowrank")
      ->required()
      ->check(CLI::IsMember({"ar1", "ar1-ill", "lowrank"}));
  gen->add_option("--n", gen_n, "sample count")->required();
  gen->add_option("--p", gen_p, "feature count")->required();
  gen->add_option("--rank", gen_rank, "rank for --kind lowrank");
  gen->add_option("--noise-std", gen_noise, "noise standard deviation");
  gen->add_option("--seed", gen_seed, "generator seed");
  gen->add_option("--out", gen_out, "output CSV path")->required();

  // run
  auto* run = app.add_subcommand("run", "Run a solver and write its trace CSV");
  std::string run_method, run_data, run_format, run_seeds, run_trace;
  double run_tol = 1e-10, run_inner_tol = 1e-10;
  std::optional<double> run_lambda;
  std::size_t run_m = 0, run_d = 0, run_iters = 100;
  std::uint64_t run_seed = 0;
  bool run_reference = false, run_wall = false, run_large_dual = false;
  run->add_option("--method", run_method, "solver to run")
      ->required()
      ->check(CLI::IsMember({"exact", "cs", "rp", "hs", "drp", "ihs", "acc-ihs",
                             "idrp", "acc-idrp", "acc-idrp-dual", "ipds",
                             "acc-ipds"}));
  run->add_option("--data", run_data, "dataset path")->required();
  run->add_option("--format", run_format, "libsvm or csv (default: by extension)")
      ->check(CLI::IsMember({"libsvm", "csv"}));
  run->add_option("--lambda", run_lambda, "regularizer (default 1/sqrt(n))");
  run->add_option("--m", run_m, "sample-sketch dimension");
  run->add_option("--d", run_d, "projection dimension");
  run->add_option("--seed", run_seed, "sketch seed");
  run->add_option("--seeds", run_seeds, "seed range a..b, one trace per seed");
  run->add_option("--iters", run_iters, "outer iteration cap");
  run->add_option("--tol", run_tol,
                  "stop tolerance (err_X with --reference, else relative gradient)");
  run->add_option("--inner-tol", run_inner_tol, "inner-loop step tolerance");
  run->add_flag("--reference", run_reference,
                "solve exactly first and emit err_X/err_2 columns");
  run->add_option("--trace", run_trace, "trace CSV path")->required();
  run->add_flag("--wall-clock", run_wall,
                "write real wall-clock nanoseconds (traces stop being "
                "byte-reproducible)");
  run->add_flag("--allow-large-dual", run_large_dual,
                "lift the n > 5000 dual-solve guard");

  // verify
  auto* verify = app.add_subcommand(
      "verify", "Print sketch-quality diagnostics and bound constants");
  std::string ver_data, ver_format;
  std::size_t ver_m = 0, ver_d = 0, ver_trials = 200;
  std::uint64_t ver_seed = 0;
  std::optional<double> ver_lambda;
  double ver_delta = 0.1;
  bool ver_large_dual = false;
  verify->add_option("--data", ver_data, "dataset path")->required();
  verify->add_option("--format", ver_format, "libsvm or csv (default: by extension)")
      ->check(CLI::IsMember({"libsvm", "csv"}));
  verify->add_option("--m", ver_m, "sample-sketch dimension")->required();
  verify->add_option("--d", ver_d, "projection dimension")->required();
  verify->add_option("--seed", ver_seed, "sketch seed");
  verify->add_option("--trials", ver_trials, "Monte-Carlo trials for the width");
  verify->add_option("--lambda", ver_lambda, "regularizer (default 1/sqrt(n))");
  verify->add_option("--delta", ver_delta, "failure probability for the constants");
  verify->add_flag("--allow-large-dual", ver_large_dual,
                   "lift the n > 5000 dual-solve guard");

  try {
    std::reverse(args.begin(), args.end());
    app.parse(std::move(args));
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  }

  try {
    if (app.got_subcommand(gen))
      return cli_detail::cmd_gen(gen_kind, gen_n, gen_p, gen_rank, gen_noise,
                                 gen_seed, gen_out);
    if (app.got_subcommand(run))
      return cli_detail::cmd_run(run_method, run_data, run_format, run_lambda,
                                 run_m, run_d, run_seed, run_seeds, run_iters,
                                 run_tol, run_inner_tol, run_reference, run_trace,
                                 run_wall, run_large_dual);
    return cli_detail::cmd_verify(ver_data, ver_format, ver_m, ver_d, ver_seed,
                                  ver_trials, ver_lambda, ver_delta,
                                  ver_large_dual);
  } catch (const cli_detail::UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace sketchls
