// ddosnet: command-line entry points for the flow-classification pipeline.
//
// Exit codes: 0 success, 1 usage/config error, 2 data error, 3 check failure.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "ddosnet/ddosnet.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitCheck = 3;

struct CommonFlags {
  std::string config;
  std::string data;
  std::string model;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<double> threshold;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "Pipeline config JSON");
  cmd->add_option("--data", f.data, "Flow CSV");
  cmd->add_option("--model", f.model, "Model file");
  cmd->add_option("--out", f.out, "Output path");
  cmd->add_option("--seed", f.seed, "Override every seed in the config");
  cmd->add_option("--threshold", f.threshold, "Detection threshold");
}

ddosnet::PipelineConfig resolve_config(const CommonFlags& f) {
  ddosnet::PipelineConfig cfg = f.config.empty() ? ddosnet::PipelineConfig{} : ddosnet::load_config(f.config);
  if (f.seed) cfg.set_seed(*f.seed);
  if (f.threshold) cfg.train.threshold = *f.threshold;
  if (!f.data.empty()) cfg.data_path = f.data;
  if (!f.model.empty()) cfg.model_path = f.model;
  if (!f.out.empty()) cfg.out_path = f.out;
  cfg.validate();
  return cfg;
}

std::string require(const std::string& value, const char* flag) {
  if (value.empty()) throw ddosnet::ConfigError(std::string("missing required ") + flag);
  return value;
}

int cmd_synth(const CommonFlags& f) {
  const auto cfg = resolve_config(f);
  const auto out = require(cfg.out_path, "--out");
  ddosnet::write_synthetic_flows(out, cfg.synth);
  std::cout << "wrote " << cfg.synth.n_majority + cfg.synth.n_minority << " rows (" << cfg.synth.n_minority
            << " DDoS) to " << out << '\n';
  return kExitOk;
}

int cmd_train(const CommonFlags& f) {
  const auto cfg = resolve_config(f);
  const auto data = require(cfg.data_path, "--data");
  const auto model_path = require(cfg.model_path, "--model");
  std::filesystem::path out_dir = cfg.out_path.empty()
                                      ? std::filesystem::absolute(model_path).parent_path()
                                      : std::filesystem::path(cfg.out_path);
  std::filesystem::create_directories(out_dir);

  const auto res = ddosnet::train_pipeline(cfg, data);
  for (const auto& w : res.warnings) std::cerr << "warning: " << w << '\n';
  for (const auto& c : res.dropped_columns) std::cerr << "dropped non-numeric column '" << c << "'\n";

  ddosnet::save_model(model_path, res.bundle);
  {
    std::ofstream curve(out_dir / "train_curve.csv", std::ios::binary);
    ddosnet::write_train_report_csv(curve, res.report);
  }
  {
    std::ofstream kv(out_dir / "eval.txt", std::ios::binary);
    ddosnet::write_eval_kv(kv, res.test_eval);
  }
  std::cout << "rows: loaded " << res.rows_loaded << ", after NaN drop " << res.rows_after_nan_drop << ", train "
            << res.train_rows << ", test " << res.test_rows << " (" << res.test_attack << " DDoS)\n"
            << "SMOTE: " << res.synthetic_rows << " synthetic rows, balanced set " << res.balanced_rows << "\n";
  std::cerr << "training wall time " << res.report.wall_seconds << " s\n";
  ddosnet::write_eval_table(std::cout, res.test_eval);
  std::cout << "model written to " << model_path << "; reports in " << out_dir.string() << '\n';
  return kExitOk;
}

int cmd_evaluate(const CommonFlags& f) {
  const auto cfg = resolve_config(f);
  const auto bundle = ddosnet::load_model(require(cfg.model_path, "--model"));
  const double threshold = f.threshold ? *f.threshold : bundle.threshold;
  const auto report = ddosnet::evaluate_file(bundle, require(cfg.data_path, "--data"), cfg.data, threshold);
  ddosnet::write_eval_table(std::cout, report);
  if (!cfg.out_path.empty()) {
    std::ofstream kv(cfg.out_path, std::ios::binary);
    if (!kv) throw ddosnet::DataError("cannot write '" + cfg.out_path + "'");
    ddosnet::write_eval_kv(kv, report);
  }
  return kExitOk;
}

int cmd_predict(const CommonFlags& f) {
  const auto cfg = resolve_config(f);
  const auto bundle = ddosnet::load_model(require(cfg.model_path, "--model"));
  const double threshold = f.threshold ? *f.threshold : bundle.threshold;
  const auto out_path = require(cfg.out_path, "--out");
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw ddosnet::DataError("cannot write '" + out_path + "'");
  const auto s = ddosnet::predict_file(bundle, require(cfg.data_path, "--data"), cfg.data, threshold, out);
  std::cout << "scored " << s.rows_scored << " of " << s.rows_in << " rows, " << s.flagged << " flagged as DDoS\n";
  if (s.rows_scored < s.rows_in) std::cerr << s.rows_in - s.rows_scored << " rows skipped (NaN features)\n";
  return kExitOk;
}

int cmd_gradcheck(const CommonFlags& f, std::optional<double> tol) {
  const auto cfg = resolve_config(f);
  const double tolerance = tol ? *tol : cfg.gradcheck.tolerance;
  const auto results = ddosnet::run_gradcheck(cfg, tolerance);
  bool ok = true;
  for (const auto& r : results) {
    std::cout << "loss " << r.loss << '\n';
    for (const auto& t : r.report.tensors) {
      const bool pass = t.worst_rel_error < tolerance;
      std::cout << "  " << (pass ? "ok  " : "FAIL") << "  " << t.name << "  size=" << t.size
                << "  max_rel_err=" << t.worst_rel_error << '\n';
    }
    ok = ok && r.report.passed();
  }
  std::cout << (ok ? "gradient check passed" : "gradient check FAILED") << " (tolerance " << tolerance << ")\n";
  return ok ? kExitOk : kExitCheck;
}

int cmd_print_default_config(const CommonFlags& f) {
  ddosnet::PipelineConfig cfg;
  if (f.seed) cfg.set_seed(*f.seed);
  const auto text = ddosnet::to_json(cfg).dump(2) + "\n";
  if (f.out.empty()) {
    std::cout << text;
  } else {
    std::ofstream out(f.out, std::ios::binary);
    if (!out) throw ddosnet::DataError("cannot write '" + f.out + "'");
    out << text;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DDoS flow classifier: SMOTE + attention residual network"};
  app.require_subcommand(1);

  CommonFlags flags;
  std::optional<double> tol;
  auto* synth = app.add_subcommand("synth", "Write a seeded synthetic flow CSV");
  auto* train = app.add_subcommand("train", "Run the full pipeline and save a model");
  auto* evaluate = app.add_subcommand("evaluate", "Score a labeled CSV with a saved model");
  auto* predict = app.add_subcommand("predict", "Write per-row probabilities and labels");
  auto* gradcheck = app.add_subcommand("gradcheck", "Check analytic gradients against finite differences");
  auto* defaults = app.add_subcommand("print-default-config", "Print the default config JSON");
  for (auto* c : {synth, train, evaluate, predict, gradcheck, defaults}) add_common(c, flags);
  gradcheck->add_option("--tol", tol, "Relative-error tolerance");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*synth) return cmd_synth(flags);
    if (*train) return cmd_train(flags);
    if (*evaluate) return cmd_evaluate(flags);
    if (*predict) return cmd_predict(flags);
    if (*gradcheck) return cmd_gradcheck(flags, tol);
    if (*defaults) return cmd_print_default_config(flags);
  } catch (const ddosnet::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}
