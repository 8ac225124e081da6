// Copyright 2026 the f0spoof authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#include <algorithm>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "f0spoof/metrics.hpp"

namespace f0spoof {

namespace {

struct RocSweep {
  // Operating points at thresholds just below each distinct score, plus the
  // "reject everything" endpoint. accept iff score >= threshold.
  std::vector<double> thresholds;
  std::vector<double> far;  // spoof accepted
  std::vector<double> frr;  // bonafide rejected
};

RocSweep sweep(const std::vector<ScoreRecord>& records) {
  std::vector<double> bona, spoof;
  for (const auto& r : records)
    (r.key == Key::Bonafide ? bona : spoof).push_back(r.score);
  if (bona.empty() || spoof.empty())
    throw DataError("metrics: need at least one bonafide and one spoof score");
  std::sort(bona.begin(), bona.end());
  std::sort(spoof.begin(), spoof.end());

  std::vector<double> ts;
  ts.reserve(bona.size() + spoof.size() + 2);
  for (double s : bona) ts.push_back(s);
  for (double s : spoof) ts.push_back(s);
  std::sort(ts.begin(), ts.end());
  ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
  // accept-all endpoint below the minimum, reject-all endpoint above the max
  ts.insert(ts.begin(), ts.front() - 1.0);
  ts.push_back(ts.back() + 1.0);

  RocSweep out;
  out.thresholds = ts;
  out.far.resize(ts.size());
  out.frr.resize(ts.size());
  for (size_t i = 0; i < ts.size(); ++i) {
    const double t = ts[i];
    // spoof accepted: score >= t
    auto sp = std::lower_bound(spoof.begin(), spoof.end(), t);
    out.far[i] = static_cast<double>(spoof.end() - sp) / spoof.size();
    // bonafide rejected: score < t
    auto bo = std::lower_bound(bona.begin(), bona.end(), t);
    out.frr[i] = static_cast<double>(bo - bona.begin()) / bona.size();
  }
  return out;
}

}  // namespace

EerResult compute_eer(const std::vector<ScoreRecord>& records) {
  RocSweep roc = sweep(records);
  for (size_t i = 0; i + 1 < roc.thresholds.size(); ++i) {
    const double d0 = roc.frr[i] - roc.far[i];
    const double d1 = roc.frr[i + 1] - roc.far[i + 1];
    if (d0 == 0.0) return {roc.frr[i], roc.thresholds[i]};
    if (d0 < 0.0 && d1 >= 0.0) {
      if (d1 == 0.0) return {roc.frr[i + 1], roc.thresholds[i + 1]};
      // linear interpolation between the two operating points
      const double a = d0 / (d0 - d1);  // in (0, 1]
      const double eer = roc.far[i] + a * (roc.far[i + 1] - roc.far[i]);
      const double frr = roc.frr[i] + a * (roc.frr[i + 1] - roc.frr[i]);
      const double thr = roc.thresholds[i] + a * (roc.thresholds[i + 1] - roc.thresholds[i]);
      return {0.5 * (eer + frr), thr};
    }
  }
  // FRR - FAR is monotone nondecreasing over the sweep, so this is unreachable
  throw NumericError("metrics: EER sweep found no crossing");
}

void TdcfParams::validate() const {
  auto in01 = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (c_miss_cm <= 0.0 || c_fa_cm <= 0.0 || c_miss_asv < 0.0 || c_fa_asv < 0.0)
    throw ConfigError("t-DCF: costs must be positive");
  if (!in01(pi_tar) || !in01(pi_non) || !in01(pi_spoof))
    throw ConfigError("t-DCF: priors must lie in [0, 1]");
  if (std::abs(pi_tar + pi_non + pi_spoof - 1.0) > 1e-6)
    throw ConfigError("t-DCF: priors must sum to 1");
  if (!in01(p_miss_asv) || !in01(p_fa_asv) || !in01(p_miss_spoof_asv))
    throw ConfigError("t-DCF: ASV error rates must lie in [0, 1]");
  if (c1() <= 0.0 || c2() <= 0.0)
    throw ConfigError("t-DCF: constants C1 and C2 must both be positive at this operating point");
}

double compute_min_tdcf(const std::vector<ScoreRecord>& records, const TdcfParams& params) {
  params.validate();
  const double C1 = params.c1();
  const double C2 = params.c2();
  const double norm = std::min(C1, C2);
  RocSweep roc = sweep(records);
  double best = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < roc.thresholds.size(); ++i) {
    // P_miss_cm = bonafide rejected = FRR, P_fa_cm = spoof accepted = FAR
    best = std::min(best, (C1 * roc.frr[i] + C2 * roc.far[i]) / norm);
  }
  return best;
}

std::map<std::string, double> per_attack_eer(const std::vector<ScoreRecord>& records,
                                             std::vector<std::string>* warnings) {
  std::vector<ScoreRecord> bona;
  std::map<std::string, std::vector<ScoreRecord>> by_attack;
  std::set<std::string> seen;
  for (const auto& r : records) {
    if (r.key == Key::Bonafide) {
      bona.push_back(r);
    } else {
      by_attack[r.attack_id].push_back(r);
      seen.insert(r.attack_id);
    }
  }
  std::map<std::string, double> out;
  for (auto& [attack, spoofs] : by_attack) {
    if (spoofs.empty()) {
      if (warnings)
        warnings->push_back("per-attack EER: attack '" + attack + "' has no scores; skipped");
      continue;
    }
    std::vector<ScoreRecord> pool = bona;
    pool.insert(pool.end(), spoofs.begin(), spoofs.end());
    out[attack] = compute_eer(pool).eer;
  }
  return out;
}

EvalResult evaluate_scores(const std::vector<ScoreRecord>& records, const TdcfParams& params) {
  EvalResult res;
  EerResult e = compute_eer(records);
  res.eer = e.eer;
  res.threshold = e.threshold;
  res.min_tdcf = compute_min_tdcf(records, params);
  res.per_attack = per_attack_eer(records);
  return res;
}

std::vector<ScoreRecord> read_score_file(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw DataError("scores: cannot open '" + path.string() + "'");
  std::vector<ScoreRecord> out;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    std::istringstream ss(line);
    ScoreRecord r;
    std::string key;
    if (!(ss >> r.utt_id)) continue;
    if (!(ss >> r.attack_id >> key >> r.score))
      throw DataError("scores: malformed line " + std::to_string(lineno) + " in '" +
                      path.string() + "'");
    if (key == "bonafide")
      r.key = Key::Bonafide;
    else if (key == "spoof")
      r.key = Key::Spoof;
    else
      throw DataError("scores: unknown key '" + key + "' on line " + std::to_string(lineno) +
                      " in '" + path.string() + "'");
    if (!std::isfinite(r.score))
      throw DataError("scores: non-finite score on line " + std::to_string(lineno) + " in '" +
                      path.string() + "'");
    out.push_back(std::move(r));
  }
  return out;
}

void write_score_file(const std::filesystem::path& path, const std::vector<ScoreRecord>& records) {
  std::ofstream os(path);
  if (!os) throw DataError("scores: cannot write '" + path.string() + "'");
  os.precision(9);
  for (const auto& r : records)
    os << r.utt_id << ' ' << r.attack_id << ' ' << key_name(r.key) << ' ' << r.score << '\n';
  if (!os) throw DataError("scores: short write to '" + path.string() + "'");
}

TdcfParams read_tdcf_params(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw DataError("t-DCF: cannot open parameter file '" + path.string() + "'");
  TdcfParams p;
  std::map<std::string, double*> fields = {
      {"c_miss_cm", &p.c_miss_cm},
      {"c_fa_cm", &p.c_fa_cm},
      {"c_miss_asv", &p.c_miss_asv},
      {"c_fa_asv", &p.c_fa_asv},
      {"pi_tar", &p.pi_tar},
      {"pi_non", &p.pi_non},
      {"pi_spoof", &p.pi_spoof},
      {"p_miss_asv", &p.p_miss_asv},
      {"p_fa_asv", &p.p_fa_asv},
      {"p_miss_spoof_asv", &p.p_miss_spoof_asv},
  };
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::string trimmed;
    for (char c : line)
      if (!std::isspace(static_cast<unsigned char>(c))) trimmed += c;
    if (trimmed.empty()) continue;
    auto eq = trimmed.find('=');
    if (eq == std::string::npos)
      throw ConfigError("t-DCF: expected key=value on line " + std::to_string(lineno) + " of '" +
                        path.string() + "'");
    std::string key = trimmed.substr(0, eq);
    auto it = fields.find(key);
    if (it == fields.end())
      throw ConfigError("t-DCF: unknown parameter '" + key + "' on line " +
                        std::to_string(lineno) + " of '" + path.string() + "'");
    try {
      *it->second = std::stod(trimmed.substr(eq + 1));
    } catch (const std::exception&) {
      throw ConfigError("t-DCF: bad value for '" + key + "' on line " + std::to_string(lineno) +
                        " of '" + path.string() + "'");
    }
  }
  p.validate();
  return p;
}

void write_tdcf_params(const std::filesystem::path& path, const TdcfParams& p) {
  std::ofstream os(path);
  if (!os) throw DataError("t-DCF: cannot write '" + path.string() + "'");
  os.precision(12);
  os << "c_miss_cm=" << p.c_miss_cm << "\nc_fa_cm=" << p.c_fa_cm
     << "\nc_miss_asv=" << p.c_miss_asv << "\nc_fa_asv=" << p.c_fa_asv << "\npi_tar=" << p.pi_tar
     << "\npi_non=" << p.pi_non << "\npi_spoof=" << p.pi_spoof << "\np_miss_asv=" << p.p_miss_asv
     << "\np_fa_asv=" << p.p_fa_asv << "\np_miss_spoof_asv=" << p.p_miss_spoof_asv << "\n";
}

void write_det_csv(const std::filesystem::path& path, const std::vector<ScoreRecord>& records) {
  RocSweep roc = sweep(records);
  std::ofstream os(path);
  if (!os) throw DataError("metrics: cannot write '" + path.string() + "'");
  os.precision(9);
  os << "threshold,far,frr\n";
  for (size_t i = 0; i < roc.thresholds.size(); ++i)
    os << roc.thresholds[i] << ',' << roc.far[i] << ',' << roc.frr[i] << '\n';
}

}  // namespace f0spoof
