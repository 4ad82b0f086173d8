#include "imti/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>

#include <CLI11.hpp>

#include "imti/checkpoint.hpp"
#include "imti/common.hpp"
#include "imti/gradcheck.hpp"
#include "imti/metrics.hpp"
#include "imti/runconfig.hpp"
#include "imti/synth.hpp"
#include "imti/trainer.hpp"

namespace imti {

namespace {

namespace fs = std::filesystem;

struct CommonArgs {
  std::string config_path;
  std::string manifest_path;
  std::string checkpoint_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
};

RunConfig resolve_config(const CommonArgs& a) {
  RunConfig cfg = a.config_path.empty() ? default_run_config() : load_run_config(a.config_path);
  if (a.seed) {
    cfg.train.seed = *a.seed;
    cfg.synth.seed = *a.seed;
    cfg.gradcheck.seed = *a.seed;
  }
  return cfg;
}

fs::path prepare_out(const CommonArgs& a) {
  if (a.out_dir.empty()) throw ValidationError("--out is required");
  fs::create_directories(a.out_dir);
  return a.out_dir;
}

void dump_effective(const fs::path& out, const RunConfig& cfg) {
  write_effective_config(out / "effective.cfg", cfg);
}

ModelConfig fit_to_dataset(ModelConfig m, const Dataset& ds) {
  if (m.embedding_dim == 0) m.embedding_dim = ds.embedding_dim;
  if (m.embedding_dim != ds.embedding_dim)
    throw ValidationError(strf("config embedding_dim %zu but dataset has %zu", m.embedding_dim,
                               ds.embedding_dim));
  m.validate();
  return m;
}

std::map<std::string, std::array<double, 4>> predict_all(const Dataset& ds,
                                                         const std::vector<std::size_t>& idx,
                                                         const ParameterSet& params,
                                                         const ModelConfig& cfg) {
  std::map<std::string, std::array<double, 4>> out;
  for (std::size_t i : idx) {
    const PredictionBundle pb = predict_utterance(ds.items[i], params, cfg);
    std::array<double, 4> scores;
    for (std::size_t k = 0; k < 4; ++k) scores[k] = pb.targets[k].utterance;
    out.emplace(ds.items[i].id, scores);
  }
  return out;
}

int cmd_synth_data(const CommonArgs& a) {
  RunConfig cfg = resolve_config(a);
  const fs::path out = prepare_out(a);
  synth_dataset(cfg.synth, cfg.model.stft, out);
  dump_effective(out, cfg);
  std::cout << "wrote " << (cfg.synth.n_train + cfg.synth.n_val + cfg.synth.n_test)
            << " utterances to " << out.string() << "\n";
  return 0;
}

int cmd_train(const CommonArgs& a) {
  if (a.manifest_path.empty()) throw ValidationError("--manifest is required");
  RunConfig cfg = resolve_config(a);
  const fs::path out = prepare_out(a);

  const Dataset ds = load_dataset(a.manifest_path, cfg.model.stft);
  cfg.model = fit_to_dataset(cfg.model, ds);
  dump_effective(out, cfg);

  const TrainResult result = train_loop(cfg.train, cfg.model, ds);
  write_train_log_csv(out / "train_log.csv", result.log);

  Checkpoint ckpt;
  ckpt.config = cfg.model;
  ckpt.params = result.best_params;
  ckpt.optimizer = result.best_opt;
  save_checkpoint(out / "best.ckpt", ckpt);

  std::cout << strf("trained %zu epochs; best epoch %zu with val loss %s\n", result.log.size(),
                    result.best_epoch, format_double(result.best_val_loss).c_str())
            << "wrote " << (out / "best.ckpt").string() << " and " << (out / "train_log.csv").string()
            << "\n";
  return 0;
}

struct LoadedModel {
  Checkpoint ckpt;
  Dataset ds;
  RunConfig cfg;
};

LoadedModel load_for_inference(const CommonArgs& a) {
  if (a.checkpoint_path.empty()) throw ValidationError("--checkpoint is required");
  if (a.manifest_path.empty()) throw ValidationError("--manifest is required");
  LoadedModel lm;
  lm.ckpt = load_checkpoint(a.checkpoint_path);
  lm.cfg = resolve_config(a);
  lm.cfg.model = lm.ckpt.config;  // the checkpoint owns the model section
  lm.ds = load_dataset(a.manifest_path, lm.ckpt.config.stft);
  if (lm.ckpt.config.embedding_dim != lm.ds.embedding_dim)
    throw ValidationError(strf("checkpoint was trained with embedding_dim %zu but dataset has %zu",
                               lm.ckpt.config.embedding_dim, lm.ds.embedding_dim));
  return lm;
}

int cmd_evaluate(const CommonArgs& a) {
  LoadedModel lm = load_for_inference(a);
  const fs::path out = prepare_out(a);
  dump_effective(out, lm.cfg);

  const std::vector<std::size_t> test_idx = lm.ds.split_indices(Split::test);
  if (test_idx.size() < 2) throw ValidationError("evaluate needs at least 2 test utterances");
  const auto preds = predict_all(lm.ds, test_idx, lm.ckpt.params, lm.ckpt.config);

  std::vector<ManifestEntry> test_entries;
  std::vector<ManifestEntry> all = load_manifest(a.manifest_path);
  for (const ManifestEntry& e : all)
    if (e.split == Split::test) test_entries.push_back(e);

  std::vector<ScatterRow> scatter;
  const EvalReport report = evaluate_report(test_entries, preds, &scatter);
  write_report_csv(out / "report.csv", report);
  write_scatter_csv(out / "scatter.csv", scatter);
  std::cout << format_report_table(report) << "wrote " << (out / "report.csv").string() << " and "
            << (out / "scatter.csv").string() << "\n";
  return 0;
}

int cmd_predict(const CommonArgs& a) {
  LoadedModel lm = load_for_inference(a);
  const fs::path out = prepare_out(a);
  dump_effective(out, lm.cfg);

  std::vector<std::size_t> idx(lm.ds.items.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  const auto preds = predict_all(lm.ds, idx, lm.ckpt.params, lm.ckpt.config);

  const fs::path csv = out / "predictions.csv";
  std::ofstream f(csv, std::ios::binary);
  if (!f) throw ValidationError("cannot write predictions: " + csv.string());
  f << "id";
  for (const std::string& t : target_names()) f << ",pred_" << t;
  f << '\n';
  for (const UtteranceData& u : lm.ds.items) {
    const std::array<double, 4>& s = preds.at(u.id);
    f << u.id;
    for (std::size_t k = 0; k < 4; ++k) f << ',' << format_double(s[k]);
    f << '\n';
  }
  if (!f) throw ValidationError("write failed: " + csv.string());
  std::cout << "wrote " << csv.string() << " (" << lm.ds.items.size() << " utterances)\n";
  return 0;
}

int cmd_gradcheck(const CommonArgs& a) {
  RunConfig cfg = resolve_config(a);
  const fs::path out = prepare_out(a);
  if (cfg.model.embedding_dim == 0) cfg.model.embedding_dim = cfg.synth.embedding_dim;
  cfg.model.validate();
  dump_effective(out, cfg);

  const GradCheckReport report = model_gradcheck(cfg.model, cfg.train.loss, cfg.gradcheck);
  write_gradcheck_csv(out / "gradcheck.csv", report);

  const GradCheckBlock& worst = report.worst();
  std::cout << strf("checked %zu blocks; worst %s with max rel err %s (tol %s)\n", report.blocks.size(),
                    worst.name.c_str(), format_double(worst.max_rel_err).c_str(),
                    format_double(report.tol).c_str());
  if (!report.passed()) {
    std::cerr << "gradient check FAILED\n";
    return 1;
  }
  std::cout << "gradient check passed\n";
  return 0;
}

int cmd_export_scatter(const CommonArgs& a) {
  LoadedModel lm = load_for_inference(a);
  const fs::path out = prepare_out(a);
  dump_effective(out, lm.cfg);

  const std::vector<std::size_t> test_idx = lm.ds.split_indices(Split::test);
  if (test_idx.empty()) throw ValidationError("export-scatter needs a non-empty test split");
  const auto preds = predict_all(lm.ds, test_idx, lm.ckpt.params, lm.ckpt.config);

  std::vector<ScatterRow> scatter;
  for (std::size_t i : test_idx) {
    const UtteranceData& u = lm.ds.items[i];
    for (std::size_t k = 0; k < 4; ++k)
      scatter.push_back({u.id, target_names()[k], u.targets[k], preds.at(u.id)[k]});
  }
  write_scatter_csv(out / "scatter.csv", scatter);
  std::cout << "wrote " << (out / "scatter.csv").string() << " (" << scatter.size() << " rows)\n";
  return 0;
}

}  // namespace

int run_command(const std::vector<std::string>& args) {
  CLI::App app{"multi-target speech intelligibility predictor"};
  app.require_subcommand(1);

  CommonArgs a;
  std::uint64_t seed_val = 0;
  int (*handler)(const CommonArgs&) = nullptr;

  const auto add_sub = [&](const char* name, const char* desc, bool manifest, bool checkpoint,
                           int (*fn)(const CommonArgs&)) {
    CLI::App* sub = app.add_subcommand(name, desc);
    sub->add_option("--config", a.config_path, "key=value config file");
    if (manifest) sub->add_option("--manifest", a.manifest_path, "JSON-Lines dataset manifest");
    if (checkpoint) sub->add_option("--checkpoint", a.checkpoint_path, "model checkpoint");
    sub->add_option("--out", a.out_dir, "output directory")->required();
    CLI::Option* s = sub->add_option("--seed", seed_val, "seed override");
    sub->callback([&a, &handler, &seed_val, s, fn] {
      if (s->count()) a.seed = seed_val;
      handler = fn;
    });
  };

  add_sub("synth-data", "generate a synthetic dataset", false, false, &cmd_synth_data);
  add_sub("train", "train a model", true, false, &cmd_train);
  add_sub("evaluate", "score a checkpoint on the test split", true, true, &cmd_evaluate);
  add_sub("predict", "write per-utterance predictions", true, true, &cmd_predict);
  add_sub("gradcheck", "finite-difference gradient verification", false, false, &cmd_gradcheck);
  add_sub("export-scatter", "truth/prediction pairs for plotting", true, true, &cmd_export_scatter);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());  // CLI11 wants them reversed
    app.parse(std::move(reversed));
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (!handler) throw ValidationError("no subcommand selected");
    return handler(a);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace imti
