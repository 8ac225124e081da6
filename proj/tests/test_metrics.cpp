// Copyright 2026 the f0spoof authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>

#include "f0spoof/metrics.hpp"

using namespace f0spoof;

namespace {

std::vector<ScoreRecord> make_records(const std::vector<double>& bona,
                                      const std::vector<double>& spoof) {
  std::vector<ScoreRecord> r;
  int i = 0;
  for (double s : bona) r.push_back({"B" + std::to_string(i++), "-", Key::Bonafide, s});
  for (double s : spoof) r.push_back({"S" + std::to_string(i++), "A01", Key::Spoof, s});
  return r;
}

// Independent O(n^2) oracle: direct counting at every candidate threshold,
// then linear interpolation at the first FRR-FAR sign change.
struct OraclePoint {
  double thr, far, frr;
};

std::vector<OraclePoint> oracle_points(const std::vector<ScoreRecord>& records) {
  std::vector<double> cands;
  double lo = records[0].score, hi = records[0].score;
  for (const auto& r : records) {
    cands.push_back(r.score);
    lo = std::min(lo, r.score);
    hi = std::max(hi, r.score);
  }
  cands.push_back(lo - 1.0);
  cands.push_back(hi + 1.0);
  std::sort(cands.begin(), cands.end());
  cands.erase(std::unique(cands.begin(), cands.end()), cands.end());
  std::vector<OraclePoint> pts;
  for (double t : cands) {
    int fa = 0, fr = 0, nb = 0, ns = 0;
    for (const auto& r : records) {
      if (r.key == Key::Spoof) {
        ++ns;
        if (r.score >= t) ++fa;
      } else {
        ++nb;
        if (r.score < t) ++fr;
      }
    }
    pts.push_back({t, double(fa) / ns, double(fr) / nb});
  }
  return pts;
}

double oracle_eer(const std::vector<ScoreRecord>& records) {
  auto pts = oracle_points(records);
  for (size_t i = 0; i + 1 < pts.size(); ++i) {
    double d0 = pts[i].frr - pts[i].far;
    double d1 = pts[i + 1].frr - pts[i + 1].far;
    if (d0 == 0.0) return pts[i].frr;
    if (d0 < 0.0 && d1 >= 0.0) {
      if (d1 == 0.0) return pts[i + 1].frr;
      double a = d0 / (d0 - d1);
      double far = pts[i].far + a * (pts[i + 1].far - pts[i].far);
      double frr = pts[i].frr + a * (pts[i + 1].frr - pts[i].frr);
      return 0.5 * (far + frr);
    }
  }
  REQUIRE(false);
  return -1.0;
}

double oracle_min_tdcf(const std::vector<ScoreRecord>& records, const TdcfParams& p) {
  const double c1 = p.pi_tar * (p.c_miss_cm - p.c_miss_asv * p.p_miss_asv) -
                    p.pi_non * p.c_fa_asv * p.p_fa_asv;
  const double c2 = p.c_fa_cm * p.pi_spoof * (1.0 - p.p_miss_spoof_asv);
  double best = 1e300;
  for (const auto& pt : oracle_points(records))
    best = std::min(best, (c1 * pt.frr + c2 * pt.far) / std::min(c1, c2));
  return best;
}

}  // namespace

TEST_CASE("hand case gives EER exactly 1/3") {
  auto r = make_records({0.9, 0.8, 0.3}, {0.7, 0.2, 0.1});
  auto e = compute_eer(r);
  CHECK(e.eer == 1.0 / 3.0);  // exact, no tolerance
}

TEST_CASE("perfect separation gives EER 0") {
  auto r = make_records({0.9, 0.8, 0.7}, {0.3, 0.2, 0.1});
  CHECK(compute_eer(r).eer == 0.0);
}

TEST_CASE("inverted scores give EER 1") {
  auto r = make_records({0.1, 0.2}, {0.8, 0.9});
  CHECK(compute_eer(r).eer == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("EER matches the exhaustive oracle on 100 random sets") {
  std::mt19937 rng(7);
  std::uniform_int_distribution<int> n_dist(2, 25);
  std::uniform_real_distribution<double> s_dist(-3.0, 3.0);
  std::uniform_int_distribution<int> dup(0, 3);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> bona, spoof;
    int nb = n_dist(rng), ns = n_dist(rng);
    for (int i = 0; i < nb; ++i) bona.push_back(s_dist(rng));
    for (int i = 0; i < ns; ++i) spoof.push_back(s_dist(rng));
    // inject ties between the classes
    if (dup(rng) == 0 && !bona.empty()) spoof.push_back(bona.front());
    auto r = make_records(bona, spoof);
    CAPTURE(trial);
    CHECK(compute_eer(r).eer == doctest::Approx(oracle_eer(r)).epsilon(1e-12));
  }
}

TEST_CASE("EER is invariant to record order and monotone score transforms") {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> s_dist(-2.0, 2.0);
  std::vector<double> bona, spoof;
  for (int i = 0; i < 20; ++i) bona.push_back(s_dist(rng));
  for (int i = 0; i < 15; ++i) spoof.push_back(s_dist(rng));
  auto r = make_records(bona, spoof);
  const double base = compute_eer(r).eer;

  auto shuffled = r;
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  CHECK(compute_eer(shuffled).eer == doctest::Approx(base).epsilon(1e-12));

  auto transformed = r;
  for (auto& rec : transformed) rec.score = 5.0 * rec.score + 2.0;
  CHECK(compute_eer(transformed).eer == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("EER rejects single-class input") {
  std::vector<ScoreRecord> only_bona = make_records({0.5, 0.6}, {});
  CHECK_THROWS_AS(compute_eer(only_bona), DataError);
}

TEST_CASE("min t-DCF matches the exhaustive oracle on 100 random sets") {
  TdcfParams params;
  std::mt19937 rng(13);
  std::uniform_int_distribution<int> n_dist(2, 25);
  std::uniform_real_distribution<double> s_dist(-3.0, 3.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> bona, spoof;
    int nb = n_dist(rng), ns = n_dist(rng);
    for (int i = 0; i < nb; ++i) bona.push_back(s_dist(rng));
    for (int i = 0; i < ns; ++i) spoof.push_back(s_dist(rng));
    auto r = make_records(bona, spoof);
    CAPTURE(trial);
    CHECK(compute_min_tdcf(r, params) ==
          doctest::Approx(oracle_min_tdcf(r, params)).epsilon(1e-12));
  }
}

TEST_CASE("min t-DCF of a perfect system is 0; of the default decision is <= 1") {
  TdcfParams params;
  CHECK(compute_min_tdcf(make_records({0.9, 0.8}, {0.2, 0.1}), params) == 0.0);
  // accept-all or reject-all is always available, so the normalized cost is <= 1
  auto r = make_records({0.1, 0.9, 0.4}, {0.5, 0.3, 0.8});
  CHECK(compute_min_tdcf(r, params) <= 1.0 + 1e-12);
}

TEST_CASE("t-DCF parameter validation") {
  TdcfParams p;
  CHECK_NOTHROW(p.validate());
  p.pi_tar = 0.5;  // priors no longer sum to 1
  CHECK_THROWS_AS(p.validate(), ConfigError);
}

TEST_CASE("per-attack EER pools all bonafide with each attack") {
  std::vector<ScoreRecord> r = make_records({0.9, 0.8, 0.3}, {});
  int i = 0;
  for (double s : {0.7, 0.2, 0.1}) r.push_back({"SA" + std::to_string(i++), "A01", Key::Spoof, s});
  for (double s : {0.01, 0.02, 0.03})
    r.push_back({"SB" + std::to_string(i++), "A02", Key::Spoof, s});
  auto per = per_attack_eer(r);
  REQUIRE(per.size() == 2);
  CHECK(per.at("A01") == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(per.at("A02") == 0.0);
}

TEST_CASE("score file round trip") {
  auto dir = std::filesystem::temp_directory_path() / "f0spoof_metrics_test";
  std::filesystem::create_directories(dir);
  auto r = make_records({0.25, -1.5}, {0.125});
  write_score_file(dir / "s.txt", r);
  auto back = read_score_file(dir / "s.txt");
  REQUIRE(back.size() == r.size());
  for (size_t i = 0; i < r.size(); ++i) {
    CHECK(back[i].utt_id == r[i].utt_id);
    CHECK(back[i].attack_id == r[i].attack_id);
    CHECK(back[i].key == r[i].key);
    CHECK(back[i].score == doctest::Approx(r[i].score).epsilon(1e-9));
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("t-DCF parameter file round trip and validation") {
  auto dir = std::filesystem::temp_directory_path() / "f0spoof_tdcf_test";
  std::filesystem::create_directories(dir);
  TdcfParams p;
  p.c_fa_cm = 7.5;
  p.p_miss_spoof_asv = 0.125;
  write_tdcf_params(dir / "p.txt", p);
  auto back = read_tdcf_params(dir / "p.txt");
  CHECK(back.c_fa_cm == doctest::Approx(7.5).epsilon(1e-12));
  CHECK(back.p_miss_spoof_asv == doctest::Approx(0.125).epsilon(1e-12));

  {
    std::ofstream os(dir / "bad.txt");
    os << "no_such_key=1\n";
  }
  CHECK_THROWS_AS(read_tdcf_params(dir / "bad.txt"), ConfigError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("evaluate_scores assembles the full report") {
  auto r = make_records({0.9, 0.8, 0.3}, {0.7, 0.2, 0.1});
  auto res = evaluate_scores(r, TdcfParams{});
  CHECK(res.eer == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(res.min_tdcf == doctest::Approx(oracle_min_tdcf(r, TdcfParams{})).epsilon(1e-12));
  CHECK(res.per_attack.count("A01") == 1);
}
