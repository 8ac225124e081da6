// Copyright 2026 the f0spoof authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// End-to-end subprocess tests for the f0spoof tool. The binary path comes
// from the F0SPOOF_BIN environment variable (set by CMake).

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

std::string bin() {
  const char* p = std::getenv("F0SPOOF_BIN");
  REQUIRE_MESSAGE(p != nullptr, "F0SPOOF_BIN must point at the f0spoof binary");
  return p;
}

struct RunResult {
  int exit_code = -1;
  std::string out, err;
};

std::string slurp(const fs::path& p) {
  std::ifstream is(p);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

RunResult run(const std::string& args) {
  static int counter = 0;
  auto dir = fs::temp_directory_path();
  auto out = dir / ("f0spoof_cli_out_" + std::to_string(counter));
  auto err = dir / ("f0spoof_cli_err_" + std::to_string(counter));
  ++counter;
  std::string cmd = bin() + " " + args + " > " + out.string() + " 2> " + err.string();
  int status = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  fs::remove(out);
  fs::remove(err);
  return r;
}

fs::path fresh_dir(const std::string& name) {
  auto dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("synth -> extract -> train -> score -> evaluate pipeline") {
  auto root = fresh_dir("f0spoof_cli_pipeline");
  const std::string train_dir = (root / "train").string();
  const std::string dev_dir = (root / "dev").string();
  const std::string feats = (root / "feats").string();

  auto synth_train = run("synth --out " + train_dir +
                         " --n-bonafide 8 --n-spoof 8 --split train --seed 1");
  REQUIRE_MESSAGE(synth_train.exit_code == 0, synth_train.err);
  auto synth_dev =
      run("synth --out " + dev_dir + " --n-bonafide 6 --n-spoof 6 --split dev --seed 1");
  REQUIRE(synth_dev.exit_code == 0);
  CHECK(fs::exists(root / "train" / "protocol.txt"));
  CHECK(fs::exists(root / "train" / "synth_config.json"));

  for (const std::string& d : {train_dir, dev_dir}) {
    auto ex = run("extract --protocol " + d + "/protocol.txt --wav-dir " + d +
                  "/wav --feature-dir " + feats);
    REQUIRE_MESSAGE(ex.exit_code == 0, ex.err);
    CHECK(ex.out.find("0 failed") != std::string::npos);
  }
  CHECK(fs::exists(root / "feats" / "extract_config.json"));

  SUBCASE("extract rerun skips up-to-date caches") {
    auto again = run("extract --protocol " + train_dir + "/protocol.txt --wav-dir " + train_dir +
                     "/wav --feature-dir " + feats);
    CHECK(again.exit_code == 0);
    CHECK(again.out.find("0 extracted, 16 skipped") != std::string::npos);
  }

  SUBCASE("train, score, and evaluate") {
    const std::string ckpt = (root / "m.ckpt").string();
    auto tr = run("train --protocol " + train_dir + "/protocol.txt --dev-protocol " + dev_dir +
                  "/protocol.txt --feature-dir " + feats + " --checkpoint " + ckpt +
                  " --channels 4 8 16 32 64 --scale 4 --epochs 2 --batch 8 --seed 1" +
                  " --deterministic");
    REQUIRE_MESSAGE(tr.exit_code == 0, tr.err);
    CHECK(fs::exists(ckpt));
    CHECK(tr.out.find("best epoch") != std::string::npos);
    CHECK(tr.err.find("epoch 1 loss ") != std::string::npos);

    auto echo = nlohmann::json::parse(slurp(ckpt + ".config.json"));
    CHECK(echo["model"]["scale"] == 4);
    CHECK(echo["optimizer"]["epochs"] == 2);
    CHECK(echo.contains("best_dev_eer"));

    const std::string scores = (root / "dev.scores").string();
    auto sc = run("score --protocol " + dev_dir + "/protocol.txt --feature-dir " + feats +
                  " --checkpoint " + ckpt + " --scores " + scores);
    REQUIRE_MESSAGE(sc.exit_code == 0, sc.err);
    CHECK(sc.out.find("wrote 12 scores") != std::string::npos);

    // scoring is reproducible from the checkpoint
    auto sc2 = run("score --protocol " + dev_dir + "/protocol.txt --feature-dir " + feats +
                   " --checkpoint " + ckpt + " --scores " + scores + ".again");
    REQUIRE(sc2.exit_code == 0);
    CHECK(slurp(scores) == slurp(scores + ".again"));

    const std::string report = (root / "report.json").string();
    auto ev = run("evaluate --scores " + scores + " --report " + report + " --det " +
                  (root / "det.csv").string());
    REQUIRE_MESSAGE(ev.exit_code == 0, ev.err);
    auto j = nlohmann::json::parse(slurp(report));
    CHECK(j["eer"].get<double>() >= 0.0);
    CHECK(j["eer"].get<double>() <= 1.0);
    CHECK(j.contains("min_tdcf"));
    CHECK(j["per_attack"].contains("A01"));
    CHECK(slurp(root / "det.csv").find("far") != std::string::npos);
  }

  fs::remove_all(root);
}

TEST_CASE("evaluate reproduces the hand-checked EER of 1/3") {
  auto root = fresh_dir("f0spoof_cli_eer");
  {
    std::ofstream os(root / "hand.scores");
    os << "B1 - bonafide 0.9\n"
       << "B2 - bonafide 0.8\n"
       << "B3 - bonafide 0.3\n"
       << "S1 A01 spoof 0.7\n"
       << "S2 A01 spoof 0.2\n"
       << "S3 A01 spoof 0.1\n";
  }
  auto ev = run("evaluate --scores " + (root / "hand.scores").string());
  REQUIRE_MESSAGE(ev.exit_code == 0, ev.err);
  auto j = nlohmann::json::parse(ev.out);
  CHECK(j["eer"].get<double>() == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  fs::remove_all(root);
}

TEST_CASE("pitch-hist writes a csv histogram") {
  auto root = fresh_dir("f0spoof_cli_hist");
  REQUIRE(run("synth --out " + root.string() + " --n-bonafide 3 --n-spoof 3 --seed 7").exit_code ==
          0);
  auto ph = run("pitch-hist --protocol " + (root / "protocol.txt").string() + " --wav-dir " +
                (root / "wav").string() + " --out " + (root / "hist.csv").string() +
                " --bin-width 20");
  REQUIRE_MESSAGE(ph.exit_code == 0, ph.err);
  auto csv = slurp(root / "hist.csv");
  CHECK(csv.rfind("bin_low_hz,bin_high_hz,bonafide_count,spoof_count\n", 0) == 0);
  CHECK(csv.size() > 60);  // at least one data row
  fs::remove_all(root);
}

TEST_CASE("exit codes distinguish data and config errors") {
  auto root = fresh_dir("f0spoof_cli_codes");
  {
    std::ofstream os(root / "protocol.txt");
    os << "SPK U_MISSING - - bonafide\nSPK U_ALSO - A01 spoof\n";
  }
  // missing wavs -> data error
  auto ex = run("extract --protocol " + (root / "protocol.txt").string() + " --wav-dir " +
                root.string() + " --feature-dir " + (root / "feats").string());
  CHECK(ex.exit_code == 1);
  CHECK(ex.out.find("2 failed") != std::string::npos);

  // unknown flag -> config error
  CHECK(run("evaluate --scores x --no-such-flag").exit_code == 2);
  // unknown subcommand -> config error
  CHECK(run("frobnicate").exit_code == 2);
  // bad channel count -> config error
  CHECK(run("train --protocol p --dev-protocol d --feature-dir f --checkpoint c"
            " --channels 1 2 3")
            .exit_code == 2);
  // missing score file -> data error
  CHECK(run("evaluate --scores " + (root / "nope.scores").string()).exit_code == 1);
  fs::remove_all(root);
}
