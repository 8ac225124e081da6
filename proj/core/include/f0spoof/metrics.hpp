// Copyright 2026 the f0spoof authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#ifndef F0SPOOF_METRICS_HPP
#define F0SPOOF_METRICS_HPP

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "f0spoof/dataio.hpp"

namespace f0spoof {

// Higher score = more bonafide.
struct ScoreRecord {
  std::string utt_id;
  std::string attack_id;  // "-" for bonafide
  Key key = Key::Bonafide;
  double score = 0.0;
};

struct EerResult {
  double eer = 0.0;
  double threshold = 0.0;
};

// EER from the ROC via linear interpolation between the adjacent operating
// points where FRR - FAR changes sign (accept iff score >= threshold).
EerResult compute_eer(const std::vector<ScoreRecord>& records);

// ASVspoof-2019 constrained tandem cost: the countermeasure is cascaded
// with a fixed ASV operating point, and the cost
//   t-DCF(s) = C1 * P_miss_cm(s) + C2 * P_fa_cm(s)
// is swept over the CM threshold and normalized by the default-decision
// cost min(C1, C2).
struct TdcfParams {
  double c_miss_cm = 1.0;
  double c_fa_cm = 10.0;
  double c_miss_asv = 1.0;
  double c_fa_asv = 10.0;
  double pi_tar = 0.9405;
  double pi_non = 0.0095;
  double pi_spoof = 0.05;
  double p_miss_asv = 0.01;
  double p_fa_asv = 0.01;
  double p_miss_spoof_asv = 0.05;

  void validate() const;
  double c1() const { return pi_tar * (c_miss_cm - c_miss_asv * p_miss_asv) - pi_non * c_fa_asv * p_fa_asv; }
  double c2() const { return c_fa_cm * pi_spoof * (1.0 - p_miss_spoof_asv); }
};

double compute_min_tdcf(const std::vector<ScoreRecord>& records, const TdcfParams& params);

// EER of (all bonafide) vs each attack's spoof records. Attacks with zero
// records are omitted (a warning is appended to `warnings` when given).
std::map<std::string, double> per_attack_eer(const std::vector<ScoreRecord>& records,
                                             std::vector<std::string>* warnings = nullptr);

struct EvalResult {
  double eer = 0.0;
  double threshold = 0.0;
  double min_tdcf = 0.0;
  std::map<std::string, double> per_attack;
};

EvalResult evaluate_scores(const std::vector<ScoreRecord>& records, const TdcfParams& params);

// Score file: one record per line, `UTT_ID ATTACK_ID KEY SCORE`.
std::vector<ScoreRecord> read_score_file(const std::filesystem::path& path);
void write_score_file(const std::filesystem::path& path, const std::vector<ScoreRecord>& records);

// t-DCF parameter file: `key=value` lines, '#' comments.
TdcfParams read_tdcf_params(const std::filesystem::path& path);
void write_tdcf_params(const std::filesystem::path& path, const TdcfParams& params);

// Raw DET operating points (threshold, FAR, FRR) for external plotting.
void write_det_csv(const std::filesystem::path& path, const std::vector<ScoreRecord>& records);

}  // namespace f0spoof

#endif  // F0SPOOF_METRICS_HPP
