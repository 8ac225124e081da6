// Copyright 2026 the f0spoof authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// f0spoof: batch CLI for the F0-subband fake-speech-detection pipeline.
// Subcommands: synth, extract, train, score, evaluate, pitch-hist.
// Exit codes: 0 success, 1 data error, 2 config error, 3 numeric abort.

#include <atomic>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <mutex>
#include <set>
#include <thread>

#include <CLI11.hpp>

#include "f0spoof/checkpoint.hpp"
#include "f0spoof/pitch.hpp"
#include "f0spoof/train.hpp"

namespace {

using nlohmann::json;

int g_log_level = 1;  // 0 quiet, 1 info, 2 debug (env F0SPOOF_LOG)

void log_info(const std::string& msg) {
  if (g_log_level >= 1) std::cerr << msg << std::endl;
}
void log_debug(const std::string& msg) {
  if (g_log_level >= 2) std::cerr << msg << std::endl;
}

void init_log_level() {
  const char* env = std::getenv("F0SPOOF_LOG");
  if (!env) return;
  std::string v = env;
  if (v == "quiet" || v == "0")
    g_log_level = 0;
  else if (v == "debug" || v == "2")
    g_log_level = 2;
}

// Every artifact-producing command drops the exact resolved configuration
// next to its output so runs are self-describing.
void write_config_echo(const std::filesystem::path& path, const json& cfg) {
  std::ofstream os(path);
  if (!os) throw f0spoof::DataError("cannot write config echo '" + path.string() + "'");
  os << cfg.dump(2) << '\n';
}

struct CommonOpts {
  std::string protocol, wav_dir, feature_dir, checkpoint, scores, tdcf_params;
  std::string variant = "sr-la";
  int scale = 8;
  std::vector<int> channels{16, 32, 64, 128, 256};
  int epochs = 32;
  double lr = 3e-4;
  int batch = 32;
  uint64_t seed = 1;
  bool deterministic = false;
  int threads = 1;
};

f0spoof::ModelConfig make_model_config(const CommonOpts& o) {
  f0spoof::ModelConfig cfg;
  cfg.variant = f0spoof::parse_variant(o.variant);
  cfg.scale = o.scale;
  if (o.channels.size() != 5)
    throw f0spoof::ConfigError("--channels needs exactly 5 values (stem + 4 stages)");
  cfg.stage_channels = o.channels;
  cfg.validate();
  return cfg;
}

f0spoof::OptimizerConfig make_opt_config(const CommonOpts& o) {
  f0spoof::OptimizerConfig cfg;
  cfg.epochs = o.epochs;
  cfg.learning_rate = o.lr;
  cfg.batch_size = o.batch;
  cfg.seed = o.seed;
  cfg.validate();
  return cfg;
}

int effective_threads(const CommonOpts& o) {
  if (o.deterministic) return 1;  // bit-exact runs are fully sequential
  return std::max(1, o.threads);
}

// ---------------------------------------------------------------------------

int cmd_synth(const CommonOpts& o, const std::string& out_dir, int n_bonafide, int n_spoof,
              double duration, const std::string& split, const std::string& prefix) {
  f0spoof::SynthSpec spec;
  spec.n_bonafide = n_bonafide;
  spec.n_spoof = n_spoof;
  spec.duration_s = duration;
  spec.seed = o.seed;
  spec.split = split;
  spec.prefix = prefix;
  auto entries = f0spoof::generate_synthetic_dataset(spec, out_dir);
  write_config_echo(std::filesystem::path(out_dir) / "synth_config.json",
                    {{"command", "synth"},
                     {"n_bonafide", spec.n_bonafide},
                     {"n_spoof", spec.n_spoof},
                     {"duration_s", spec.duration_s},
                     {"seed", spec.seed},
                     {"split", spec.split},
                     {"prefix", spec.prefix}});
  log_info("synth: wrote " + std::to_string(entries.size()) + " utterances to " + out_dir);
  return 0;
}

int cmd_extract(const CommonOpts& o) {
  auto proto = f0spoof::parse_protocol(o.protocol);
  std::filesystem::create_directories(o.feature_dir);
  const std::filesystem::path wav_dir = o.wav_dir;
  const std::filesystem::path out_dir = o.feature_dir;

  std::atomic<size_t> next{0};
  std::atomic<int> extracted{0}, skipped{0};
  std::mutex fail_mutex;
  std::vector<std::string> failures;

  auto worker = [&]() {
    for (;;) {
      const size_t i = next.fetch_add(1);
      if (i >= proto.entries.size()) return;
      const auto& e = proto.entries[i];
      const auto wav_path = wav_dir / (e.utt_id + ".wav");
      const auto out_path = out_dir / (e.utt_id + ".f0sb");
      try {
        std::error_code ec;
        // idempotent rerun: skip caches newer than their source WAV
        if (std::filesystem::exists(out_path, ec) && std::filesystem::exists(wav_path, ec) &&
            std::filesystem::last_write_time(out_path, ec) >=
                std::filesystem::last_write_time(wav_path, ec) &&
            !ec) {
          ++skipped;
          continue;
        }
        f0spoof::write_feature_cache(out_path,
                                     f0spoof::extract_feature(f0spoof::read_wav(wav_path)));
        ++extracted;
        log_debug("extract: " + e.utt_id);
      } catch (const std::exception& ex) {
        std::lock_guard<std::mutex> lock(fail_mutex);
        failures.push_back(e.utt_id + ": " + ex.what());
      }
    }
  };

  const int n_threads = effective_threads(o);
  std::vector<std::thread> pool;
  for (int t = 1; t < n_threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  write_config_echo(out_dir / "extract_config.json",
                    {{"command", "extract"},
                     {"protocol", o.protocol},
                     {"wav_dir", o.wav_dir},
                     {"window_length", 1728},
                     {"hop_length", 130},
                     {"window", "blackman"},
                     {"band_hz", {0.0, 400.0}},
                     {"target_frames", 600},
                     {"threads", n_threads}});

  std::cout << "extract: " << extracted << " extracted, " << skipped << " skipped, "
            << failures.size() << " failed (of " << proto.entries.size() << ")" << std::endl;
  if (!failures.empty()) {
    for (const auto& f : failures) std::cerr << "extract failure: " << f << std::endl;
    return 1;
  }
  return 0;
}

int cmd_train(const CommonOpts& o, const std::string& dev_protocol) {
  auto model_cfg = make_model_config(o);
  auto opt_cfg = make_opt_config(o);
  auto train_set = f0spoof::load_dataset(o.protocol, o.feature_dir);
  auto dev_set = f0spoof::load_dataset(dev_protocol, o.feature_dir);

  f0spoof::SrlaRes2Net<float> model(model_cfg, o.seed);
  auto result = f0spoof::train_model(model, train_set, dev_set, opt_cfg, {},
                                     g_log_level >= 1 ? &std::cerr : nullptr);
  f0spoof::save_checkpoint(o.checkpoint, model);
  write_config_echo(o.checkpoint + ".config.json",
                    {{"command", "train"},
                     {"model", model_cfg.to_json()},
                     {"optimizer",
                      {{"learning_rate", opt_cfg.learning_rate},
                       {"batch_size", opt_cfg.batch_size},
                       {"epochs", opt_cfg.epochs},
                       {"beta1", opt_cfg.beta1},
                       {"beta2", opt_cfg.beta2},
                       {"eps", opt_cfg.eps},
                       {"weight_decay", opt_cfg.weight_decay},
                       {"seed", opt_cfg.seed}}},
                     {"deterministic", o.deterministic},
                     {"protocol", o.protocol},
                     {"dev_protocol", dev_protocol},
                     {"feature_dir", o.feature_dir},
                     {"best_epoch", result.best_epoch},
                     {"best_dev_eer", result.best_dev_eer}});
  std::cout << "train: best epoch " << result.best_epoch << " dev_eer " << result.best_dev_eer
            << ", checkpoint " << o.checkpoint << std::endl;
  return 0;
}

int cmd_score(const CommonOpts& o) {
  auto model = f0spoof::load_checkpoint(o.checkpoint);
  auto data = f0spoof::load_dataset(o.protocol, o.feature_dir);
  auto records = f0spoof::score_dataset(model, data, o.batch);
  f0spoof::write_score_file(o.scores, records);
  write_config_echo(o.scores + ".config.json",
                    {{"command", "score"},
                     {"checkpoint", o.checkpoint},
                     {"protocol", o.protocol},
                     {"feature_dir", o.feature_dir},
                     {"batch_size", o.batch},
                     {"model", model.config().to_json()}});
  std::cout << "score: wrote " << records.size() << " scores to " << o.scores << std::endl;
  return 0;
}

int cmd_evaluate(const CommonOpts& o, const std::string& report_path, const std::string& det_path) {
  auto records = f0spoof::read_score_file(o.scores);
  f0spoof::TdcfParams params;
  if (!o.tdcf_params.empty()) params = f0spoof::read_tdcf_params(o.tdcf_params);
  auto result = f0spoof::evaluate_scores(records, params);

  json report = {{"eer", result.eer},
                 {"threshold", result.threshold},
                 {"min_tdcf", result.min_tdcf},
                 {"per_attack", json::object()}};
  for (const auto& [attack, eer] : result.per_attack) report["per_attack"][attack] = eer;
  std::cout << report.dump(2) << std::endl;
  if (!report_path.empty()) {
    std::ofstream os(report_path);
    if (!os) throw f0spoof::DataError("evaluate: cannot write '" + report_path + "'");
    os << report.dump(2) << '\n';
  }
  if (!det_path.empty()) f0spoof::write_det_csv(det_path, records);
  return 0;
}

int cmd_pitch_hist(const CommonOpts& o, const std::string& out_csv, double bin_width) {
  auto proto = f0spoof::parse_protocol(o.protocol);
  const std::filesystem::path wav_dir = o.wav_dir;
  std::vector<f0spoof::F0Track> bona, spoof;
  for (const auto& e : proto.entries) {
    auto track = f0spoof::estimate_f0(f0spoof::read_wav(wav_dir / (e.utt_id + ".wav")));
    (e.key == f0spoof::Key::Bonafide ? bona : spoof).push_back(std::move(track));
  }
  auto h_bona = f0spoof::f0_histogram(bona, bin_width);
  auto h_spoof = f0spoof::f0_histogram(spoof, bin_width);

  std::set<int64_t> bins;
  for (const auto& [k, v] : h_bona.counts) bins.insert(k);
  for (const auto& [k, v] : h_spoof.counts) bins.insert(k);

  std::ofstream os(out_csv);
  if (!os) throw f0spoof::DataError("pitch-hist: cannot write '" + out_csv + "'");
  os << "bin_low_hz,bin_high_hz,bonafide_count,spoof_count\n";
  for (int64_t b : bins) {
    auto count = [&](const f0spoof::F0Histogram& h) {
      auto it = h.counts.find(b);
      return it == h.counts.end() ? uint64_t(0) : it->second;
    };
    os << b * bin_width << ',' << (b + 1) * bin_width << ',' << count(h_bona) << ','
       << count(h_spoof) << '\n';
  }
  std::cout << "pitch-hist: " << h_bona.total() << " bonafide and " << h_spoof.total()
            << " spoof voiced frames -> " << out_csv << std::endl;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  init_log_level();
  CLI::App app{"F0-subband fake speech detection toolkit"};
  app.require_subcommand(1);
  CommonOpts o;

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a deterministic synthetic dataset");
  std::string synth_out, synth_split = "train", synth_prefix = "SY";
  int n_bonafide = 10, n_spoof = 10;
  double duration = 1.6875;
  synth->add_option("--out", synth_out, "Output dataset directory")->required();
  synth->add_option("--n-bonafide", n_bonafide, "Bonafide utterance count");
  synth->add_option("--n-spoof", n_spoof, "Spoof utterance count");
  synth->add_option("--duration", duration, "Utterance length in seconds");
  synth->add_option("--split", synth_split, "Split tag (train/dev/eval)");
  synth->add_option("--prefix", synth_prefix, "Utterance id prefix");
  synth->add_option("--seed", o.seed, "RNG seed");

  // extract
  auto* extract = app.add_subcommand("extract", "Extract 45x600 F0-subband features");
  extract->add_option("--protocol", o.protocol, "Protocol file")->required();
  extract->add_option("--wav-dir", o.wav_dir, "Directory of <utt>.wav files")->required();
  extract->add_option("--feature-dir", o.feature_dir, "Feature cache directory")->required();
  extract->add_option("--threads", o.threads, "Worker threads");
  extract->add_flag("--deterministic", o.deterministic, "Sequential, bit-exact execution");

  // train
  auto* train = app.add_subcommand("train", "Train a model on cached features");
  std::string dev_protocol;
  train->add_option("--protocol", o.protocol, "Training protocol")->required();
  train->add_option("--dev-protocol", dev_protocol, "Dev protocol for model selection")
      ->required();
  train->add_option("--feature-dir", o.feature_dir, "Feature cache directory")->required();
  train->add_option("--checkpoint", o.checkpoint, "Output checkpoint path")->required();
  train->add_option("--variant", o.variant, "Model variant")
      ->check(CLI::IsMember({"sr-la", "sr-se", "sr", "la", "se", "plain", "resnet"}));
  train->add_option("--scale", o.scale, "Res2Net scale n");
  train->add_option("--channels", o.channels, "Stem + 4 stage channel counts")->expected(5);
  train->add_option("--epochs", o.epochs, "Training epochs");
  train->add_option("--lr", o.lr, "Learning rate");
  train->add_option("--batch", o.batch, "Batch size");
  train->add_option("--seed", o.seed, "RNG seed");
  train->add_flag("--deterministic", o.deterministic, "Sequential, bit-exact execution");
  train->add_option("--threads", o.threads, "Worker threads");

  // score
  auto* score = app.add_subcommand("score", "Score cached features with a checkpoint");
  score->add_option("--protocol", o.protocol, "Protocol file")->required();
  score->add_option("--feature-dir", o.feature_dir, "Feature cache directory")->required();
  score->add_option("--checkpoint", o.checkpoint, "Model checkpoint")->required();
  score->add_option("--scores", o.scores, "Output score file")->required();
  score->add_option("--batch", o.batch, "Batch size");
  score->add_option("--threads", o.threads, "Worker threads");
  score->add_flag("--deterministic", o.deterministic, "Sequential, bit-exact execution");

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "EER / min t-DCF report from a score file");
  std::string report_path, det_path;
  evaluate->add_option("--scores", o.scores, "Score file")->required();
  evaluate->add_option("--tdcf-params", o.tdcf_params, "t-DCF parameter file (key=value)");
  evaluate->add_option("--report", report_path, "Also write the JSON report here");
  evaluate->add_option("--det", det_path, "Also write DET operating points as CSV");

  // pitch-hist
  auto* pitch = app.add_subcommand("pitch-hist", "F0 histogram of a corpus (CSV)");
  std::string hist_out;
  double bin_width = 10.0;
  pitch->add_option("--protocol", o.protocol, "Protocol file")->required();
  pitch->add_option("--wav-dir", o.wav_dir, "Directory of <utt>.wav files")->required();
  pitch->add_option("--out", hist_out, "Output CSV path")->required();
  pitch->add_option("--bin-width", bin_width, "Histogram bin width in Hz");

  try {
    app.parse(argc, argv);
    if (synth->parsed())
      return cmd_synth(o, synth_out, n_bonafide, n_spoof, duration, synth_split, synth_prefix);
    if (extract->parsed()) return cmd_extract(o);
    if (train->parsed()) return cmd_train(o, dev_protocol);
    if (score->parsed()) return cmd_score(o);
    if (evaluate->parsed()) return cmd_evaluate(o, report_path, det_path);
    if (pitch->parsed()) return cmd_pitch_hist(o, hist_out, bin_width);
    return 2;
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;  // bad flags are config errors
  } catch (const f0spoof::ConfigError& e) {
    std::cerr << "config error: " << e.what() << std::endl;
    return 2;
  } catch (const f0spoof::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << std::endl;
    return 3;
  } catch (const f0spoof::DataError& e) {
    std::cerr << "data error: " << e.what() << std::endl;
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 1;
  }
}
