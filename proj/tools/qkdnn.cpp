// qkdnn: key-rate solver, data campaigns and the neural surrogate.
//
// Exit codes: 0 success (solve: converged), 2 solve stopped at the iteration
// cap or stagnated, 1 runtime error, 64 usage error.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "qkdnn/datagen.hpp"
#include "qkdnn/errors.hpp"
#include "qkdnn/evaluation.hpp"
#include "qkdnn/kernels.hpp"
#include "qkdnn/solver.hpp"
#include "qkdnn/surrogate.hpp"

namespace {

using namespace qkdnn;

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitMaxIter = 2;
constexpr int kExitUsage = 64;

struct UsageError : Error {
  using Error::Error;
};

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

/// `key = value` lines become `--key value` tokens spliced where --config appeared,
/// so flags given after it on the command line win.
std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < args.size(); ++i) {
    std::string path;
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) throw UsageError("--config needs a file");
      path = args[++i];
    } else if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
    } else {
      out.push_back(args[i]);
      continue;
    }
    std::ifstream in(path);
    if (!in) throw UsageError("cannot read config file " + path);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      const std::string t = trim(line.substr(0, line.find('#')));
      if (t.empty()) continue;
      const auto eq = t.find('=');
      if (eq == std::string::npos) throw ParseError(path + ": expected key = value", line_no);
      const std::string key = trim(t.substr(0, eq));
      const std::string value = trim(t.substr(eq + 1));
      if (key.empty()) throw ParseError(path + ": empty key", line_no);
      out.push_back("--" + key);
      if (value != "true") out.push_back(value);
    }
  }
  return out;
}

void write_file_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + tmp + " for writing");
    out << content;
    out.flush();
    if (!out) throw Error("failed to write " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    std::remove(tmp.c_str());
    throw Error("cannot move output into place at " + path);
  }
}

struct ParamArgs {
  channel::ProtocolParams p;
  std::vector<double> probs{0.25, 0.25, 0.25, 0.25};

  void add(CLI::App* app, bool with_nc) {
    app->add_option("--L", p.L, "distance in km")->check(CLI::NonNegativeNumber);
    app->add_option("--mu", p.mu, "mean photon number of each coherent state")->check(CLI::PositiveNumber);
    app->add_option("--xi", p.xi, "excess noise (shot-noise units)")->check(CLI::NonNegativeNumber);
    app->add_option("--beta", p.beta, "reconciliation efficiency")->check(CLI::Range(0.0, 1.0));
    app->add_option("--delta-c", p.delta_c, "postselection threshold")->check(CLI::NonNegativeNumber);
    app->add_option("--probs", probs, "state probabilities p0,p1,p2,p3")->expected(4)->delimiter(',');
    if (with_nc) app->add_option("--nc", p.nc, "photon-number cutoff")->check(CLI::Range(1, 40));
  }
  channel::ProtocolParams get() {
    for (std::size_t k = 0; k < 4; ++k) p.probs[k] = probs[k];
    try {
      p.validate();
    } catch (const InvalidArgument& e) {
      throw UsageError(e.what());
    }
    return p;
  }
};

// ---------------------------------------------------------------- solve

struct SolveArgs {
  ParamArgs params;
  double tol = 1e-6;
  int max_iter = 300;
};

int run_solve(SolveArgs& a) {
  const channel::ProtocolParams p = a.params.get();
  solver::KeyRateOptions opts;
  opts.fw.tol = a.tol;
  opts.fw.max_iter = a.max_iter;
  const auto t0 = std::chrono::steady_clock::now();
  const solver::KeyRateReport r = solver::key_rate(p, opts);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::cout << "key_rate: " << fmt17(r.key_rate) << '\n'
            << "certified_lower_bound: " << fmt17(r.certified_lower_bound) << '\n'
            << "primal_objective: " << fmt17(r.primal_objective) << '\n'
            << "fw_gap: " << fmt17(r.fw_gap) << '\n'
            << "p_pass: " << fmt17(r.p_pass) << '\n'
            << "delta_ec: " << fmt17(r.delta_ec) << '\n'
            << "iterations: " << r.iterations << '\n'
            << "status: " << solver::to_string(r.status) << '\n'
            << "target_adjustment: " << fmt17(r.target_adjustment) << '\n'
            << "constraint_residual: " << fmt17(r.constraint_residual) << '\n'
            << "wall_seconds: " << secs << '\n';
  switch (r.status) {
    case solver::SolveStatus::converged: return kExitOk;
    case solver::SolveStatus::max_iterations:
    case solver::SolveStatus::stagnated: return kExitMaxIter;
    case solver::SolveStatus::infeasible: return kExitError;
  }
  return kExitError;
}

// ---------------------------------------------------------------- gen-data

struct GenArgs {
  std::string preset = "desk";
  std::vector<double> xi_values, L_values;
  int samplings = 0, instances = 0, nc = 0, restarts = 0;
  double jitter = -1.0, mu_first = -1.0, mu_last = -1.0, mu_step = -1.0;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int threads = 0;
  std::string work_dir, out, train_out, test_out;
  double test_fraction = 0.05;
  std::uint64_t split_seed = 7;
};

datagen::GridSpec build_spec(const GenArgs& a) {
  datagen::GridSpec s;
  try {
    s = datagen::preset(a.preset);
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }
  if (!a.xi_values.empty()) {
    s.xi_values = a.xi_values;
    s.extra_bands.clear();
  }
  if (!a.L_values.empty()) s.L_values = a.L_values;
  if (a.samplings > 0) s.samplings_per_point = a.samplings;
  if (a.instances > 0) s.instances_per_sampling = a.instances;
  if (a.nc > 0) s.nc = a.nc;
  if (a.restarts > 0) s.restart_budget = a.restarts;
  if (a.jitter >= 0.0) s.xi_jitter = a.jitter;
  if (a.mu_first > 0.0 || a.mu_last > 0.0 || a.mu_step > 0.0) {
    const double first = a.mu_first > 0.0 ? a.mu_first : s.mu_sweep.front();
    const double last = a.mu_last > 0.0 ? a.mu_last : s.mu_sweep.back();
    const double step = a.mu_step > 0.0 ? a.mu_step : 0.01;
    s.mu_sweep = datagen::linspace_step(first, last, step);
  }
  if (a.seed_set) s.master_seed = a.seed;
  try {
    s.validate();
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }
  return s;
}

int run_gen(GenArgs& a) {
  const datagen::GridSpec spec = build_spec(a);
  datagen::GenerateOptions opts;
  opts.threads = a.threads > 0 ? a.threads : datagen::default_threads();
  if (!a.work_dir.empty()) opts.work_dir = a.work_dir;
  const auto t0 = std::chrono::steady_clock::now();
  opts.progress = [&](std::size_t done, std::size_t total, const datagen::GridPoint& pt, bool resumed) {
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cerr << "[" << done << "/" << total << "] xi=" << pt.xi_grid << " L=" << pt.L
              << (resumed ? " (resumed)" : "") << " " << secs << " s\n";
  };
  const datagen::Dataset data = datagen::generate_dataset(spec, datagen::default_solver(), opts);
  datagen::save_dataset(data, a.out);
  std::cerr << "wrote " << data.size() << " samples to " << a.out << '\n';
  if (!a.train_out.empty() || !a.test_out.empty()) {
    const datagen::Split split = datagen::split_dataset(data, a.test_fraction, a.split_seed);
    if (!a.train_out.empty()) datagen::save_dataset(split.train, a.train_out);
    if (!a.test_out.empty()) datagen::save_dataset(split.test, a.test_out);
    std::cerr << "split: " << split.train.size() << " train / " << split.test.size() << " test\n";
  }
  return kExitOk;
}

// ---------------------------------------------------------------- train

struct TrainArgs {
  std::string data, out, log;
  surrogate::LossHyperparams hp;
  surrogate::TrainOptions opt;
  bool quiet = false;
};

int run_train(TrainArgs& a) {
  try {
    a.hp.validate();
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }
  const datagen::Dataset data = datagen::load_dataset(a.data);
  if (data.empty()) throw UsageError("dataset " + a.data + " is empty");
  std::vector<surrogate::Features> xs;
  std::vector<double> ys;
  for (const datagen::Sample& s : data) {
    xs.push_back(s.features);
    ys.push_back(s.label);
  }
  std::ostringstream log;
  log << "epoch,train_loss,validation_loss\n";
  const surrogate::TrainResult r = surrogate::train(xs, ys, a.hp, a.opt, [&](const surrogate::EpochRecord& e) {
    log << e.epoch << ',' << fmt17(e.train_loss) << ',' << fmt17(e.validation_loss) << '\n';
    if (!a.quiet) std::cerr << "epoch " << e.epoch << " train " << e.train_loss << " val " << e.validation_loss << '\n';
  });
  surrogate::save_model(r.model, a.out);
  if (!a.log.empty()) write_file_atomic(a.log, log.str());
  std::cout << "epochs_run: " << r.model.meta.epochs_run << '\n'
            << "best_epoch: " << r.model.meta.best_epoch << '\n'
            << "validation_loss: " << fmt17(r.model.meta.final_validation_loss) << '\n'
            << "kernels: " << kernels::to_string(kernels::active().isa) << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------- predict

struct PredictArgs {
  std::string model, features, out;
  ParamArgs params;
};

int run_predict(PredictArgs& a, bool have_params) {
  const surrogate::ModelBundle model = surrogate::load_model(a.model);
  std::ostringstream os;
  if (!a.features.empty()) {
    std::ifstream in(a.features);
    if (!in) throw Error("cannot open " + a.features);
    const std::vector<channel::FeatureVector> rows = datagen::load_features(in);
    os << "key_rate\n";
    for (double y : surrogate::predict_batch(model, rows)) os << fmt17(y) << '\n';
  } else {
    if (!have_params) throw UsageError("predict needs --features or protocol parameters (--L, --mu, --xi)");
    os << fmt17(surrogate::predict(model, channel::assemble_features(a.params.get()))) << '\n';
  }
  if (a.out.empty()) {
    std::cout << os.str();
  } else {
    write_file_atomic(a.out, os.str());
  }
  return kExitOk;
}

// ---------------------------------------------------------------- eval

struct EvalArgs {
  std::string model, data, out_dir;
};

int run_eval(EvalArgs& a) {
  const surrogate::ModelBundle model = surrogate::load_model(a.model);
  const datagen::Dataset data = datagen::load_dataset(a.data);
  const evaluation::EvalReport r = evaluation::evaluate(model, data);
  const evaluation::DeviationStats& s = r.overall;
  std::cout << "n_samples: " << r.n_samples << '\n'
            << "secure_fraction: " << fmt17(s.secure_fraction) << '\n'
            << "within_25_percent: " << fmt17(s.within_25) << '\n'
            << "deviation_min: " << fmt17(s.min) << '\n'
            << "deviation_max: " << fmt17(s.max) << '\n'
            << "deviation_mean: " << fmt17(s.mean) << '\n'
            << "deviation_median: " << fmt17(s.median) << '\n';
  if (!a.out_dir.empty()) {
    std::filesystem::create_directories(a.out_dir);
    const std::filesystem::path dir(a.out_dir);
    std::ostringstream dev, hist, grid;
    evaluation::write_deviations_csv(r, data, dev);
    evaluation::write_histogram_csv(r, hist);
    evaluation::write_per_grid_csv(r, grid);
    write_file_atomic((dir / "deviations.csv").string(), dev.str());
    write_file_atomic((dir / "histogram.csv").string(), hist.str());
    write_file_atomic((dir / "per_grid.csv").string(), grid.str());
  }
  return kExitOk;
}

// ---------------------------------------------------------------- bench

struct BenchArgs {
  std::string model, out;
  std::vector<std::string> points{"0.008:5"};
  ParamArgs params;
  evaluation::BenchOptions opt;
};

int run_bench(BenchArgs& a) {
  const surrogate::ModelBundle model = surrogate::load_model(a.model);  // load time is not measured
  channel::ProtocolParams base = a.params.get();
  std::vector<evaluation::BenchRow> rows;
  for (const std::string& pt : a.points) {
    const auto colon = pt.find(':');
    if (colon == std::string::npos) throw UsageError("bench point '" + pt + "' is not xi:L");
    channel::ProtocolParams p = base;
    try {
      p.xi = std::stod(pt.substr(0, colon));
      p.L = std::stod(pt.substr(colon + 1));
    } catch (const std::exception&) {
      throw UsageError("bench point '" + pt + "' is not xi:L");
    }
    rows.push_back(evaluation::bench_point(model, p, a.opt));
    const evaluation::BenchRow& r = rows.back();
    std::cerr << "xi=" << r.xi << " L=" << r.L << " solver " << r.solver_seconds << " s, surrogate "
              << r.surrogate_seconds << " s, log10 ratio " << r.log10_ratio << " (" << r.status << ")\n";
  }
  std::ostringstream os;
  evaluation::write_bench_csv(rows, os);
  if (a.out.empty()) {
    std::cout << os.str();
  } else {
    write_file_atomic(a.out, os.str());
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Discrete-modulation CV-QKD key rates: numerical solver and neural surrogate"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "help for every subcommand");

  SolveArgs solve_args;
  CLI::App* solve = app.add_subcommand("solve", "compute one key rate");
  solve_args.params.add(solve, true);
  solve->add_option("--tol", solve_args.tol, "Frank-Wolfe gap tolerance")->check(CLI::PositiveNumber);
  solve->add_option("--max-iter", solve_args.max_iter, "Frank-Wolfe iteration cap")->check(CLI::PositiveNumber);

  GenArgs gen_args;
  CLI::App* gen = app.add_subcommand("gen-data", "label a grid campaign with the solver");
  gen->add_option("--preset", gen_args.preset, "paper, desk or reduced");
  gen->add_option("--xi-values", gen_args.xi_values, "comma-separated noise grid")->delimiter(',');
  gen->add_option("--L-values", gen_args.L_values, "comma-separated distance grid")->delimiter(',');
  gen->add_option("--samplings", gen_args.samplings, "samplings per grid point")->check(CLI::PositiveNumber);
  gen->add_option("--instances", gen_args.instances, "kept instances per sampling")->check(CLI::PositiveNumber);
  gen->add_option("--nc", gen_args.nc, "photon-number cutoff")->check(CLI::Range(1, 40));
  gen->add_option("--restarts", gen_args.restarts, "redraw budget per sampling")->check(CLI::PositiveNumber);
  gen->add_option("--jitter", gen_args.jitter, "half-width of the noise jitter")->check(CLI::NonNegativeNumber);
  gen->add_option("--mu-first", gen_args.mu_first)->check(CLI::PositiveNumber);
  gen->add_option("--mu-last", gen_args.mu_last)->check(CLI::PositiveNumber);
  gen->add_option("--mu-step", gen_args.mu_step)->check(CLI::PositiveNumber);
  gen->add_option("--seed", gen_args.seed, "master seed");
  gen->add_option("--threads", gen_args.threads, "worker threads (default: QKDNN_THREADS or 1)")
      ->check(CLI::NonNegativeNumber);
  gen->add_option("--work-dir", gen_args.work_dir, "per-point part files and resume markers");
  gen->add_option("--out", gen_args.out, "dataset CSV")->required();
  gen->add_option("--train-out", gen_args.train_out, "stratified training split");
  gen->add_option("--test-out", gen_args.test_out, "stratified test split");
  gen->add_option("--test-fraction", gen_args.test_fraction)->check(CLI::Range(0.0, 1.0));
  gen->add_option("--split-seed", gen_args.split_seed);

  TrainArgs train_args;
  CLI::App* train = app.add_subcommand("train", "fit the surrogate to a dataset");
  train->add_option("--data", train_args.data, "training dataset CSV")->required();
  train->add_option("--out", train_args.out, "model file")->required();
  train->add_option("--log", train_args.log, "per-epoch loss CSV");
  train->add_option("--gamma", train_args.hp.gamma);
  train->add_option("--epsilon", train_args.hp.epsilon);
  train->add_option("--seed", train_args.opt.seed);
  train->add_option("--epochs", train_args.opt.epochs)->check(CLI::PositiveNumber);
  train->add_option("--batch-size", train_args.opt.batch_size)->check(CLI::PositiveNumber);
  train->add_option("--lr", train_args.opt.learning_rate)->check(CLI::PositiveNumber);
  train->add_option("--dropout", train_args.opt.dropout)->check(CLI::Range(0.0, 0.99));
  train->add_option("--patience", train_args.opt.patience)->check(CLI::PositiveNumber);
  train->add_option("--validation-fraction", train_args.opt.validation_fraction)->check(CLI::Range(0.0, 0.99));
  train->add_flag("--quiet", train_args.quiet);

  PredictArgs predict_args;
  CLI::App* predict = app.add_subcommand("predict", "surrogate key rates");
  predict->add_option("--model", predict_args.model)->required();
  predict->add_option("--features", predict_args.features, "CSV whose first columns are f00..f28");
  predict->add_option("--out", predict_args.out);
  predict_args.params.add(predict, false);

  EvalArgs eval_args;
  CLI::App* eval = app.add_subcommand("eval", "compare surrogate predictions with labels");
  eval->add_option("--model", eval_args.model)->required();
  eval->add_option("--data", eval_args.data, "labeled dataset CSV")->required();
  eval->add_option("--out-dir", eval_args.out_dir, "deviations.csv, histogram.csv, per_grid.csv");

  BenchArgs bench_args;
  CLI::App* bench = app.add_subcommand("bench", "solver vs surrogate wall time");
  bench->add_option("--model", bench_args.model)->required();
  bench->add_option("--points", bench_args.points, "xi:L pairs")->delimiter(',');
  bench->add_option("--solver-runs", bench_args.opt.solver_runs)->check(CLI::PositiveNumber);
  bench->add_option("--surrogate-reps", bench_args.opt.surrogate_reps)->check(CLI::PositiveNumber);
  bench->add_option("--out", bench_args.out, "report CSV");
  bench_args.params.add(bench, true);
  bench_args.params.p.nc = 4;

  // Later duplicates (command line after --config) override earlier ones.
  for (CLI::App* sub : app.get_subcommands([](CLI::App*) { return true; })) {
    for (CLI::Option* opt : sub->get_options()) {
      if (opt->get_expected_max() == 1) opt->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    }
  }

  try {
    std::vector<std::string> args(argv + 1, argv + argc);
    args = expand_config(args);
    std::reverse(args.begin(), args.end());  // CLI11 consumes the vector from the back
    app.parse(args);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (solve->parsed()) return run_solve(solve_args);
    if (gen->parsed()) {
      gen_args.seed_set = gen->count("--seed") > 0;
      return run_gen(gen_args);
    }
    if (train->parsed()) return run_train(train_args);
    if (predict->parsed()) {
      const bool have_params = predict->count("--L") + predict->count("--mu") + predict->count("--xi") > 0;
      return run_predict(predict_args, have_params);
    }
    if (eval->parsed()) return run_eval(eval_args);
    if (bench->parsed()) return run_bench(bench_args);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitUsage;
}
