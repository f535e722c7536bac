#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <set>
#include <vector>

// Brute-force metric definitions, written independently of the library:
// per-sample loops, covariance MCC, all-pairs AUC, per-threshold AP.
namespace kite::test::oracle {

struct Instance {
  std::size_t n = 0, m = 0;
  std::vector<double> scores;  // n x m, rows sum to 1
  std::vector<std::int32_t> truths;
  std::vector<std::int32_t> preds;  // argmax of scores
};

inline Instance random_instance(std::mt19937_64& rng, std::size_t max_n = 50, std::size_t max_m = 10) {
  Instance in;
  in.n = std::uniform_int_distribution<std::size_t>(1, max_n)(rng);
  in.m = std::uniform_int_distribution<std::size_t>(2, max_m)(rng);
  std::uniform_int_distribution<int> cls(0, static_cast<int>(in.m) - 1);
  // Coarse score levels so ties occur.
  std::uniform_int_distribution<int> level(0, 6);
  for (std::size_t i = 0; i < in.n; ++i) {
    in.truths.push_back(cls(rng));
    std::vector<double> row(in.m);
    double s = 0;
    for (auto& v : row) {
      v = 1.0 + level(rng);
      s += v;
    }
    row[static_cast<std::size_t>(in.truths.back())] += level(rng);
    s = 0;
    for (auto v : row) s += v;
    std::size_t best = 0;
    for (std::size_t c = 0; c < in.m; ++c) {
      row[c] /= s;
      if (row[c] > row[best]) best = c;
    }
    in.preds.push_back(static_cast<std::int32_t>(best));
    in.scores.insert(in.scores.end(), row.begin(), row.end());
  }
  return in;
}

inline double accuracy(const Instance& in) {
  double ok = 0;
  for (std::size_t i = 0; i < in.n; ++i) ok += in.preds[i] == in.truths[i];
  return ok / static_cast<double>(in.n);
}

struct ClassCounts {
  double tp = 0, fp = 0, fn = 0;
};

inline ClassCounts counts(const Instance& in, std::size_t c) {
  ClassCounts k;
  const auto ci = static_cast<std::int32_t>(c);
  for (std::size_t i = 0; i < in.n; ++i) {
    if (in.preds[i] == ci && in.truths[i] == ci) k.tp += 1;
    if (in.preds[i] == ci && in.truths[i] != ci) k.fp += 1;
    if (in.preds[i] != ci && in.truths[i] == ci) k.fn += 1;
  }
  return k;
}

struct Averages {
  double f1_w = 0, f1_m = 0, p_w = 0, p_m = 0, r_w = 0, r_m = 0;
};

inline Averages averages(const Instance& in) {
  Averages a;
  double classes_present = 0;
  for (std::size_t c = 0; c < in.m; ++c) {
    const auto k = counts(in, c);
    const double support = k.tp + k.fn;
    const double f1 = (k.tp + 0.5 * (k.fp + k.fn)) == 0 ? 0 : k.tp / (k.tp + 0.5 * (k.fp + k.fn));
    const double p = (k.tp + k.fp) == 0 ? 0 : k.tp / (k.tp + k.fp);
    const double r = support == 0 ? 0 : k.tp / support;
    a.f1_w += support * f1 / static_cast<double>(in.n);
    a.p_w += support * p / static_cast<double>(in.n);
    a.r_w += support * r / static_cast<double>(in.n);
    if (support > 0) {
      classes_present += 1;
      a.f1_m += f1;
      a.p_m += p;
      a.r_m += r;
    }
  }
  a.f1_m /= classes_present;
  a.p_m /= classes_present;
  a.r_m /= classes_present;
  return a;
}

// Covariance form over one-hot truth and prediction matrices.
inline double mcc(const Instance& in) {
  std::vector<double> xbar(in.m, 0), ybar(in.m, 0);
  for (std::size_t i = 0; i < in.n; ++i) {
    xbar[static_cast<std::size_t>(in.truths[i])] += 1.0 / static_cast<double>(in.n);
    ybar[static_cast<std::size_t>(in.preds[i])] += 1.0 / static_cast<double>(in.n);
  }
  double cxy = 0, cxx = 0, cyy = 0;
  for (std::size_t i = 0; i < in.n; ++i) {
    for (std::size_t k = 0; k < in.m; ++k) {
      const double x = (in.truths[i] == static_cast<std::int32_t>(k) ? 1.0 : 0.0) - xbar[k];
      const double y = (in.preds[i] == static_cast<std::int32_t>(k) ? 1.0 : 0.0) - ybar[k];
      cxy += x * y;
      cxx += x * x;
      cyy += y * y;
    }
  }
  return (cxx == 0 || cyy == 0) ? 0.0 : cxy / std::sqrt(cxx * cyy);
}

// P(score+ > score-) + P(tie)/2 over all positive/negative pairs.
inline double pairwise_auc(const std::vector<double>& s, const std::vector<std::uint8_t>& pos) {
  double wins = 0, pairs = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!pos[i]) continue;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (pos[j]) continue;
      pairs += 1;
      wins += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
    }
  }
  return pairs == 0 ? 0.0 : wins / pairs;
}

// Sum over distinct thresholds t (descending) of (R(t) - R(prev)) * P(t),
// with R and P computed from scratch for "score >= t".
inline double threshold_ap(const std::vector<double>& s, const std::vector<std::uint8_t>& pos) {
  std::set<double, std::greater<double>> thresholds(s.begin(), s.end());
  double total_pos = 0;
  for (auto p : pos) total_pos += p;
  if (total_pos == 0 || total_pos == static_cast<double>(s.size())) return 0.0;
  double ap = 0, prev_r = 0;
  for (double t : thresholds) {
    double tp = 0, sel = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s[i] >= t) {
        sel += 1;
        tp += pos[i];
      }
    }
    const double r = tp / total_pos;
    ap += (r - prev_r) * (tp / sel);
    prev_r = r;
  }
  return ap;
}

inline void flatten(const Instance& in, std::vector<double>& s, std::vector<std::uint8_t>& pos) {
  s = in.scores;
  pos.assign(in.n * in.m, 0);
  for (std::size_t i = 0; i < in.n; ++i) pos[i * in.m + static_cast<std::size_t>(in.truths[i])] = 1;
}

}  // namespace kite::test::oracle
