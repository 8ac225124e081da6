// Copyright 2026 the f0spoof authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "f0spoof/dataio.hpp"
#include "f0spoof/metrics.hpp"
#include "f0spoof/pitch.hpp"

using namespace f0spoof;

namespace {

std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

double track_stddev(const F0Track& t) {
  double sum = 0.0, sq = 0.0;
  int n = 0;
  for (size_t i = 0; i < t.f0_hz.size(); ++i) {
    if (!t.voicing[i]) continue;
    sum += t.f0_hz[i];
    sq += t.f0_hz[i] * t.f0_hz[i];
    ++n;
  }
  if (n == 0) return 0.0;
  double mean = sum / n;
  return std::sqrt(std::max(0.0, sq / n - mean * mean));
}

}  // namespace

TEST_CASE("wav pcm16 round trip is within one LSB") {
  auto dir = temp_dir("f0spoof_wav_test");
  Waveform w;
  w.sample_rate = 16000;
  for (int i = 0; i < 2000; ++i)
    w.samples.push_back(0.6 * std::sin(2.0 * M_PI * 220.0 * i / 16000.0));
  write_wav_pcm16(dir / "a.wav", w);
  auto back = read_wav(dir / "a.wav");
  REQUIRE(back.samples.size() == w.samples.size());
  CHECK(back.sample_rate == 16000);
  for (size_t i = 0; i < w.samples.size(); ++i)
    CHECK(std::abs(back.samples[i] - w.samples[i]) <= 1.0 / 32768.0);
  std::filesystem::remove_all(dir);
}

TEST_CASE("wav writer clamps out-of-range samples") {
  auto dir = temp_dir("f0spoof_wav_clamp");
  Waveform w{{1.5, -1.5, 0.0}, 16000};
  write_wav_pcm16(dir / "c.wav", w);
  auto back = read_wav(dir / "c.wav");
  CHECK(back.samples[0] == doctest::Approx(32767.0 / 32768.0));
  CHECK(back.samples[1] == doctest::Approx(-1.0));
  std::filesystem::remove_all(dir);
}

TEST_CASE("wav reader rejects stereo, wrong rate, and junk") {
  auto dir = temp_dir("f0spoof_wav_bad");
  {
    // minimal stereo header
    std::ofstream os(dir / "stereo.wav", std::ios::binary);
    const uint8_t hdr[] = {'R', 'I', 'F', 'F', 36, 0,   0,   0,   'W', 'A', 'V', 'E',
                           'f', 'm', 't', ' ', 16, 0,   0,   0,   1,   0,   2,   0,
                           0x80, 0x3e, 0, 0,   0,  0xfa, 0,   0,   4,   0,   16,  0,
                           'd', 'a', 't', 'a', 0,  0,    0,   0};
    os.write(reinterpret_cast<const char*>(hdr), sizeof(hdr));
  }
  CHECK_THROWS_AS(read_wav(dir / "stereo.wav"), DataError);

  Waveform w{{0.0, 0.1}, 8000};
  write_wav_pcm16(dir / "8k.wav", w);
  CHECK_THROWS_AS(read_wav(dir / "8k.wav", 16000), DataError);
  CHECK_NOTHROW(read_wav(dir / "8k.wav", 8000));

  {
    std::ofstream os(dir / "junk.wav", std::ios::binary);
    os << "this is not audio";
  }
  CHECK_THROWS_AS(read_wav(dir / "junk.wav"), DataError);
  CHECK_THROWS_AS(read_wav(dir / "missing.wav"), DataError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("protocol parse and write round trip with counts") {
  auto dir = temp_dir("f0spoof_proto_test");
  std::vector<ProtocolEntry> entries = {
      {"LA_0001", "LA_T_0000001", "-", Key::Bonafide},
      {"LA_0001", "LA_T_0000002", "A01", Key::Spoof},
      {"LA_0002", "LA_T_0000003", "A06", Key::Spoof},
  };
  write_protocol(dir / "p.txt", entries);
  auto proto = parse_protocol(dir / "p.txt");
  REQUIRE(proto.entries.size() == 3);
  CHECK(proto.bonafide_count == 1);
  CHECK(proto.spoof_count == 2);
  CHECK(proto.entries[1].system_id == "A01");
  CHECK(proto.entries[0].key == Key::Bonafide);
  std::filesystem::remove_all(dir);
}

TEST_CASE("protocol parser flags malformed lines with line numbers") {
  auto dir = temp_dir("f0spoof_proto_bad");
  auto expect_throw_mentioning = [&](const std::string& content, const std::string& token) {
    std::ofstream(dir / "p.txt") << content;
    try {
      parse_protocol(dir / "p.txt");
      FAIL("expected DataError for: ", content);
    } catch (const DataError& e) {
      CHECK(std::string(e.what()).find(token) != std::string::npos);
    }
  };
  expect_throw_mentioning("SPK U1 -\n", "line 1");                       // too few fields
  expect_throw_mentioning("SPK U1 - - bonafide extra\n", "line 1");      // trailing token
  expect_throw_mentioning("SPK U1 - - real\n", "real");                  // bad key
  expect_throw_mentioning("SPK U1 - A01 bonafide\n", "line 1");          // key/system mismatch
  expect_throw_mentioning("SPK U1 - - bonafide\nSPK U2 - - nope\n", "line 2");
  std::filesystem::remove_all(dir);
}

TEST_CASE("synthetic generator is deterministic per (seed, split, index)") {
  SynthSpec spec;
  spec.seed = 42;
  auto a = synth_utterance(spec, 3, true);
  auto b = synth_utterance(spec, 3, true);
  CHECK(a.samples == b.samples);  // bitwise

  auto other_index = synth_utterance(spec, 4, true);
  CHECK(a.samples != other_index.samples);
  spec.split = "dev";
  auto other_split = synth_utterance(spec, 3, true);
  CHECK(a.samples != other_split.samples);
  spec.split = "train";
  spec.seed = 43;
  CHECK(a.samples != synth_utterance(spec, 3, true).samples);
}

TEST_CASE("synthetic utterances have the requested length and are bounded") {
  SynthSpec spec;
  auto w = synth_utterance(spec, 0, true);
  CHECK(w.samples.size() == 27000);  // 1.6875 s at 16 kHz
  CHECK(w.sample_rate == 16000);
  double peak = 0.0;
  for (double s : w.samples) peak = std::max(peak, std::abs(s));
  CHECK(peak == doctest::Approx(0.7).epsilon(1e-9));
}

TEST_CASE("bonafide contours move; spoof contours are flat") {
  SynthSpec spec;
  spec.seed = 5;
  int moving = 0, flat = 0;
  for (int i = 0; i < 8; ++i) {
    auto bona = estimate_f0(synth_utterance(spec, i, true));
    auto fake = estimate_f0(synth_utterance(spec, i, false));
    REQUIRE(bona.voiced_count() > 20);
    REQUIRE(fake.voiced_count() > 20);
    if (track_stddev(bona) > 2.0) ++moving;
    if (track_stddev(fake) < 2.0) ++flat;
  }
  CHECK(moving >= 7);
  CHECK(flat >= 7);
}

TEST_CASE("generated dataset writes wavs, protocol, and separable features") {
  auto dir = temp_dir("f0spoof_synth_test");
  SynthSpec spec;
  spec.n_bonafide = 10;
  spec.n_spoof = 10;
  spec.seed = 2;
  auto entries = generate_synthetic_dataset(spec, dir);
  REQUIRE(entries.size() == 20);
  auto proto = parse_protocol(dir / "protocol.txt");
  CHECK(proto.bonafide_count == 10);
  CHECK(proto.spoof_count == 10);
  for (const auto& e : proto.entries)
    CHECK(std::filesystem::exists(dir / "wav" / (e.utt_id + ".wav")));

  // crude spectral-flatness score over the F0 band separates the classes:
  // a moving contour smears energy across the 0-400 Hz bins over time
  std::vector<ScoreRecord> records;
  for (const auto& e : proto.entries) {
    auto feat = extract_feature(read_wav(dir / "wav" / (e.utt_id + ".wav")));
    // per-bin temporal variance, averaged
    double score = 0.0;
    for (int f = 0; f < feat.dim(0); ++f) {
      double s = 0.0, sq = 0.0;
      for (int t = 0; t < feat.dim(1); ++t) {
        double v = feat.data[static_cast<size_t>(f) * feat.dim(1) + t];
        s += v;
        sq += v * v;
      }
      double m = s / feat.dim(1);
      score += sq / feat.dim(1) - m * m;
    }
    records.push_back({e.utt_id, e.system_id, e.key, score});
  }
  CHECK(compute_eer(records).eer < 0.10);
  std::filesystem::remove_all(dir);
}
