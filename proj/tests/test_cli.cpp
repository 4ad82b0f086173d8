#include <doctest.h>

#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "imti/checkpoint.hpp"
#include "imti/cli.hpp"
#include "imti/common.hpp"
#include "imti/runconfig.hpp"
#include "test_util.hpp"

using namespace imti;
namespace fs = std::filesystem;

namespace {

// The CLI talks on stdout/stderr; keep the test log clean and make the
// messages assertable.
struct CaptureStreams {
  std::ostringstream out, err;
  std::streambuf* old_out;
  std::streambuf* old_err;

  CaptureStreams() : old_out(std::cout.rdbuf(out.rdbuf())), old_err(std::cerr.rdbuf(err.rdbuf())) {}
  ~CaptureStreams() {
    std::cout.rdbuf(old_out);
    std::cerr.rdbuf(old_err);
  }
};

int run(const std::vector<std::string>& args, std::string* out_text = nullptr,
        std::string* err_text = nullptr) {
  CaptureStreams cap;
  const int code = run_command(args);
  if (out_text) *out_text = cap.out.str();
  if (err_text) *err_text = cap.err.str();
  return code;
}

// full architecture at tiny widths, sized so a whole synth/train/evaluate
// round stays in the second range
const char* micro_config_text() {
  return "model.embedding_dim = 0\n"
         "model.cnn_channels = 4,8,12,16\n"
         "model.recurrent_hidden = 16\n"
         "model.fc_width = 16\n"
         "model.adapter_width = 16\n"
         "model.stft_fft = 128\n"
         "model.stft_hop = 128\n"
         "model.lfb_bands = 16\n"
         "model.lfb_kernel_len = 65\n"
         "train.learning_rate = 0.002\n"
         "train.max_epochs = 2\n"
         "train.patience = 2\n"
         "train.seed = 3\n"
         "synth.n_train = 3\n"
         "synth.n_val = 2\n"
         "synth.n_test = 2\n"
         "synth.embedding_dim = 8\n"
         "synth.t_min = 6\n"
         "synth.t_max = 9\n"
         "synth.seed = 4\n"
         "gradcheck.coords_per_block = 4\n"
         "gradcheck.seed = 14\n";
}

std::size_t count_lines(const std::string& text) {
  std::size_t n = 0;
  for (char c : text)
    if (c == '\n') ++n;
  return n;
}

}  // namespace

TEST_CASE("cli rejects malformed invocations") {
  std::string err;
  CHECK(run({}) == 1);
  CHECK(run({"frobnicate", "--out", "x"}) == 1);
  CHECK(run({"synth-data"}) == 1);  // --out is required
  CHECK(run({"--help"}) == 0);

  CHECK(run({"train", "--out", "/tmp/imti-cli-noop"}, nullptr, &err) == 1);
  CHECK(err.find("--manifest is required") != std::string::npos);
  CHECK(run({"evaluate", "--manifest", "m.jsonl", "--out", "/tmp/imti-cli-noop"}, nullptr, &err) == 1);
  CHECK(err.find("--checkpoint is required") != std::string::npos);
}

TEST_CASE("cli rejects broken configs and missing inputs") {
  testutil::TempDir dir("cli-bad");
  testutil::write_text(dir / "typo.cfg", "model.embedding_dmi = 4\n");
  std::string err;
  CHECK(run({"synth-data", "--config", (dir / "typo.cfg").string(), "--out", (dir / "out").string()},
            nullptr, &err) == 1);
  CHECK(err.find("unknown key") != std::string::npos);

  CHECK(run({"evaluate", "--checkpoint", (dir / "nope.ckpt").string(), "--manifest",
             (dir / "nope.jsonl").string(), "--out", (dir / "out2").string()},
            nullptr, &err) == 1);
  CHECK(err.find("cannot open") != std::string::npos);
}

TEST_CASE("cli synth, train, evaluate, predict round") {
  testutil::TempDir dir("cli-round");
  const auto cfg_path = dir / "micro.cfg";
  testutil::write_text(cfg_path, micro_config_text());
  const std::string cfg = cfg_path.string();

  const fs::path data = dir / "data";
  std::string out;
  REQUIRE(run({"synth-data", "--config", cfg, "--out", data.string()}, &out) == 0);
  CHECK(out.find("wrote 7 utterances") != std::string::npos);
  CHECK(fs::exists(data / "manifest.jsonl"));
  CHECK(fs::exists(data / "utt0000.emb"));
  CHECK(fs::exists(data / "utt0006.wav"));
  CHECK(fs::exists(data / "effective.cfg"));

  // the effective config is a faithful, reloadable dump
  const RunConfig eff = load_run_config(data / "effective.cfg");
  CHECK(render_run_config(eff) == testutil::read_text(data / "effective.cfg"));
  CHECK(eff.synth.seed == 4);
  CHECK(eff.train.max_epochs == 2);

  const fs::path trained = dir / "trained";
  const std::string manifest = (data / "manifest.jsonl").string();
  REQUIRE(run({"train", "--config", cfg, "--manifest", manifest, "--out", trained.string()}, &out) == 0);
  CHECK(out.find("best epoch") != std::string::npos);
  CHECK(fs::exists(trained / "best.ckpt"));
  CHECK(fs::exists(trained / "train_log.csv"));
  CHECK(count_lines(testutil::read_text(trained / "train_log.csv")) == 3);  // header + 2 epochs

  // the stored model knows its embedding width even though the config said 0
  const Checkpoint ckpt = load_checkpoint(trained / "best.ckpt");
  CHECK(ckpt.config.embedding_dim == 8);
  CHECK(ckpt.optimizer.has_value());

  const fs::path evald = dir / "eval";
  const std::string ckpt_arg = (trained / "best.ckpt").string();
  REQUIRE(run({"evaluate", "--config", cfg, "--manifest", manifest, "--checkpoint", ckpt_arg, "--out",
               evald.string()},
              &out) == 0);
  CHECK(fs::exists(evald / "report.csv"));
  CHECK(fs::exists(evald / "scatter.csv"));
  const std::string report = testutil::read_text(evald / "report.csv");
  CHECK(report.rfind("target,lcc,srcc,mse,count\n", 0) == 0);
  CHECK(count_lines(report) == 5);
  CHECK(count_lines(testutil::read_text(evald / "scatter.csv")) == 1 + 2 * 4);

  const fs::path pred = dir / "pred";
  REQUIRE(run({"predict", "--config", cfg, "--manifest", manifest, "--checkpoint", ckpt_arg, "--out",
               pred.string()},
              &out) == 0);
  const std::string preds = testutil::read_text(pred / "predictions.csv");
  CHECK(preds.rfind("id,pred_intelligibility,pred_cer_whisper,pred_cer_google,pred_stoi\n", 0) == 0);
  CHECK(count_lines(preds) == 1 + 7);
  CHECK(preds.find("utt0003,") != std::string::npos);

  const fs::path scat = dir / "scatter";
  REQUIRE(run({"export-scatter", "--config", cfg, "--manifest", manifest, "--checkpoint", ckpt_arg,
               "--out", scat.string()},
              &out) == 0);
  const std::string sc = testutil::read_text(scat / "scatter.csv");
  CHECK(sc.rfind("id,target,truth,prediction\n", 0) == 0);
  CHECK(count_lines(sc) == 1 + 2 * 4);
}

TEST_CASE("cli synth output is deterministic and seed-overridable") {
  testutil::TempDir dir("cli-seed");
  const auto cfg_path = dir / "micro.cfg";
  testutil::write_text(cfg_path, micro_config_text());
  const std::string cfg = cfg_path.string();

  const fs::path a = dir / "a", b = dir / "b", c = dir / "c";
  REQUIRE(run({"synth-data", "--config", cfg, "--out", a.string()}) == 0);
  REQUIRE(run({"synth-data", "--config", cfg, "--out", b.string()}) == 0);
  REQUIRE(run({"synth-data", "--config", cfg, "--out", c.string(), "--seed", "123"}) == 0);

  CHECK(testutil::read_bytes(a / "manifest.jsonl") == testutil::read_bytes(b / "manifest.jsonl"));
  CHECK(testutil::read_bytes(a / "utt0002.emb") == testutil::read_bytes(b / "utt0002.emb"));
  CHECK(testutil::read_bytes(a / "utt0002.wav") == testutil::read_bytes(b / "utt0002.wav"));
  CHECK(testutil::read_bytes(a / "utt0002.emb") != testutil::read_bytes(c / "utt0002.emb"));

  const RunConfig eff = load_run_config(c / "effective.cfg");
  CHECK(eff.synth.seed == 123);
  CHECK(eff.train.seed == 123);
  CHECK(eff.gradcheck.seed == 123);
}

TEST_CASE("cli gradcheck exit codes") {
  testutil::TempDir dir("cli-gc");
  const auto cfg_path = dir / "micro.cfg";
  testutil::write_text(cfg_path, micro_config_text());

  std::string out;
  const fs::path ok = dir / "ok";
  REQUIRE(run({"gradcheck", "--config", cfg_path.string(), "--out", ok.string()}, &out) == 0);
  CHECK(out.find("gradient check passed") != std::string::npos);
  CHECK(fs::exists(ok / "gradcheck.csv"));

  // an impossible tolerance must flip the exit code
  testutil::write_text(dir / "strict.cfg",
                       std::string(micro_config_text()) + "gradcheck.tol = 1e-18\n");
  std::string err;
  const fs::path bad = dir / "bad";
  CHECK(run({"gradcheck", "--config", (dir / "strict.cfg").string(), "--out", bad.string()}, &out,
            &err) == 1);
  CHECK(err.find("FAILED") != std::string::npos);
}
