#include "kite/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "kite/common/error.hpp"
#include "kite/common/text.hpp"

namespace kite::metrics {

std::uint64_t ConfusionMatrix::total() const { return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0}); }

std::uint64_t ConfusionMatrix::correct() const {
  std::uint64_t s = 0;
  for (std::size_t c = 0; c < classes_; ++c) s += at(c, c);
  return s;
}

std::uint64_t ConfusionMatrix::fp(std::size_t c) const {
  std::uint64_t s = 0;
  for (std::size_t t = 0; t < classes_; ++t)
    if (t != c) s += at(t, c);
  return s;
}

std::uint64_t ConfusionMatrix::fn(std::size_t c) const {
  std::uint64_t s = 0;
  for (std::size_t p = 0; p < classes_; ++p)
    if (p != c) s += at(c, p);
  return s;
}

ConfusionMatrix confusion(std::span<const std::int32_t> preds, std::span<const std::int32_t> truths,
                          std::size_t classes) {
  if (preds.size() != truths.size()) {
    throw ShapeError("confusion: " + std::to_string(preds.size()) + " predictions for " +
                     std::to_string(truths.size()) + " truths");
  }
  if (preds.empty()) throw ShapeError("confusion: no samples");
  ConfusionMatrix cm(classes);
  for (std::size_t i = 0; i < preds.size(); ++i) {
    for (auto v : {preds[i], truths[i]}) {
      if (v < 0 || static_cast<std::size_t>(v) >= classes) {
        throw IndexError("confusion: class " + std::to_string(v) + " outside [0, " + std::to_string(classes) + ")");
      }
    }
    ++cm.at(static_cast<std::size_t>(truths[i]), static_cast<std::size_t>(preds[i]));
  }
  return cm;
}

double f1_per_class(const ConfusionMatrix& cm, std::size_t c) {
  const double tp = static_cast<double>(cm.tp(c));
  const double denom = tp + 0.5 * static_cast<double>(cm.fp(c) + cm.fn(c));
  return denom == 0 ? 0.0 : tp / denom;
}

double precision_per_class(const ConfusionMatrix& cm, std::size_t c) {
  const auto d = cm.tp(c) + cm.fp(c);
  return d == 0 ? 0.0 : static_cast<double>(cm.tp(c)) / static_cast<double>(d);
}

double recall_per_class(const ConfusionMatrix& cm, std::size_t c) {
  const auto d = cm.support(c);
  return d == 0 ? 0.0 : static_cast<double>(cm.tp(c)) / static_cast<double>(d);
}

double mcc(const ConfusionMatrix& cm) {
  const std::size_t m = cm.classes();
  const double s = static_cast<double>(cm.total());
  const double c = static_cast<double>(cm.correct());
  double pt = 0, pp = 0, tt = 0;
  for (std::size_t k = 0; k < m; ++k) {
    const double p = static_cast<double>(cm.tp(k) + cm.fp(k));
    const double t = static_cast<double>(cm.support(k));
    pt += p * t;
    pp += p * p;
    tt += t * t;
  }
  const double denom = std::sqrt(s * s - pp) * std::sqrt(s * s - tt);
  return denom == 0 ? 0.0 : (c * s - pt) / denom;
}

MetricReport aggregate(const ConfusionMatrix& cm) {
  MetricReport r;
  r.samples = cm.total();
  const double n = static_cast<double>(cm.total());
  r.accuracy = n == 0 ? 0.0 : static_cast<double>(cm.correct()) / n;
  std::size_t present = 0;
  for (std::size_t c = 0; c < cm.classes(); ++c) {
    const double sup = static_cast<double>(cm.support(c));
    const double f1 = f1_per_class(cm, c), p = precision_per_class(cm, c), rc = recall_per_class(cm, c);
    r.f1_weighted += sup * f1;
    r.precision_weighted += sup * p;
    r.recall_weighted += sup * rc;
    if (sup == 0) continue;
    ++present;
    r.f1_macro += f1;
    r.precision_macro += p;
    r.recall_macro += rc;
  }
  if (n > 0) {
    r.f1_weighted /= n;
    r.precision_weighted /= n;
    r.recall_weighted /= n;
  }
  if (present > 0) {
    r.f1_macro /= static_cast<double>(present);
    r.precision_macro /= static_cast<double>(present);
    r.recall_macro /= static_cast<double>(present);
  }
  r.mcc = mcc(cm);
  return r;
}

namespace {

// Cumulative (tp, fp) after each group of equal scores, highest first.
std::vector<std::pair<std::size_t, std::size_t>> sweep(std::span<const double> scores,
                                                       std::span<const std::uint8_t> positive) {
  if (scores.size() != positive.size()) throw ShapeError("curve: scores and labels differ in length");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] > scores[b]; });
  std::vector<std::pair<std::size_t, std::size_t>> out;
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (positive[order[i]]) {
      ++tp;
    } else {
      ++fp;
    }
    if (i + 1 == order.size() || scores[order[i + 1]] != scores[order[i]]) out.emplace_back(tp, fp);
  }
  return out;
}

}  // namespace

Curve binary_roc(std::span<const double> scores, std::span<const std::uint8_t> positive) {
  const auto steps = sweep(scores, positive);
  Curve c{0, {}, 0.0};
  if (steps.empty()) return c;
  const double pos = static_cast<double>(steps.back().first), neg = static_cast<double>(steps.back().second);
  if (pos == 0 || neg == 0) return c;
  c.points.push_back({0.0, 0.0});
  for (auto [tp, fp] : steps) {
    const CurvePoint p{static_cast<double>(fp) / neg, static_cast<double>(tp) / pos};
    const auto& q = c.points.back();
    c.area += (p.x - q.x) * (p.y + q.y) / 2;
    c.points.push_back(p);
  }
  return c;
}

Curve binary_pr(std::span<const double> scores, std::span<const std::uint8_t> positive) {
  const auto steps = sweep(scores, positive);
  Curve c{0, {}, 0.0};
  if (steps.empty()) return c;
  const double pos = static_cast<double>(steps.back().first), neg = static_cast<double>(steps.back().second);
  if (pos == 0 || neg == 0) return c;
  double prev_recall = 0;
  for (auto [tp, fp] : steps) {
    const double recall = static_cast<double>(tp) / pos;
    const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    c.area += (recall - prev_recall) * precision;
    prev_recall = recall;
    c.points.push_back({recall, precision});
  }
  return c;
}

CurveSet one_vs_rest_curves(std::span<const double> scores, std::span<const std::int32_t> truths,
                            std::size_t classes) {
  const std::size_t n = truths.size();
  if (classes == 0 || scores.size() != n * classes) {
    throw ShapeError("curves: expected " + std::to_string(n) + " x " + std::to_string(classes) + " scores, got " +
                     std::to_string(scores.size()));
  }
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0;
    for (std::size_t c = 0; c < classes; ++c) s += scores[i * classes + c];
    if (!(std::abs(s - 1.0) <= 1e-4)) {
      throw NumericError("curves: score row " + std::to_string(i) + " sums to " + format_real(s) + ", not 1");
    }
    if (truths[i] < 0 || static_cast<std::size_t>(truths[i]) >= classes) {
      throw IndexError("curves: class " + std::to_string(truths[i]) + " outside [0, " + std::to_string(classes) + ")");
    }
  }
  CurveSet set;
  std::vector<double> col(n);
  std::vector<std::uint8_t> pos(n);
  std::size_t counted = 0;
  for (std::size_t c = 0; c < classes; ++c) {
    for (std::size_t i = 0; i < n; ++i) {
      col[i] = scores[i * classes + c];
      pos[i] = static_cast<std::size_t>(truths[i]) == c;
    }
    auto roc = binary_roc(col, pos);
    if (roc.points.empty()) continue;
    auto pr = binary_pr(col, pos);
    roc.label = pr.label = static_cast<int>(c);
    set.auc_macro += roc.area;
    set.aupr_macro += pr.area;
    ++counted;
    set.roc.push_back(std::move(roc));
    set.pr.push_back(std::move(pr));
  }
  if (counted > 0) {
    set.auc_macro /= static_cast<double>(counted);
    set.aupr_macro /= static_cast<double>(counted);
  }
  std::vector<std::uint8_t> flat_pos(n * classes);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < classes; ++c) flat_pos[i * classes + c] = static_cast<std::size_t>(truths[i]) == c;
  auto roc = binary_roc(scores, flat_pos);
  auto pr = binary_pr(scores, flat_pos);
  roc.label = pr.label = -1;
  set.auc_micro = roc.area;
  set.aupr_micro = pr.area;
  set.roc.push_back(std::move(roc));
  set.pr.push_back(std::move(pr));
  return set;
}

MetricReport evaluate(std::span<const double> scores, std::span<const std::int32_t> truths, std::size_t classes,
                      CurveSet* curves) {
  auto set = one_vs_rest_curves(scores, truths, classes);
  std::vector<std::int32_t> preds(truths.size());
  for (std::size_t i = 0; i < truths.size(); ++i) {
    const auto row = scores.subspan(i * classes, classes);
    preds[i] = static_cast<std::int32_t>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  auto r = aggregate(confusion(preds, truths, classes));
  r.auc = set.auc_micro;
  r.aupr = set.aupr_micro;
  r.auc_macro = set.auc_macro;
  r.aupr_macro = set.aupr_macro;
  if (curves) *curves = std::move(set);
  return r;
}

nlohmann::ordered_json to_json(const MetricReport& r) {
  nlohmann::ordered_json j;
  j["samples"] = r.samples;
  j["accuracy"] = r.accuracy;
  j["f1_weighted"] = r.f1_weighted;
  j["f1_macro"] = r.f1_macro;
  j["mcc"] = r.mcc;
  j["precision_weighted"] = r.precision_weighted;
  j["precision_macro"] = r.precision_macro;
  j["recall_weighted"] = r.recall_weighted;
  j["recall_macro"] = r.recall_macro;
  j["aupr"] = r.aupr;
  j["auc"] = r.auc;
  j["aupr_macro"] = r.aupr_macro;
  j["auc_macro"] = r.auc_macro;
  return j;
}

namespace {

std::string curves_csv(const std::vector<Curve>& curves, const char* header) {
  std::string out = header;
  for (const auto& c : curves) {
    const std::string label = c.label < 0 ? "micro" : std::to_string(c.label);
    for (const auto& p : c.points) out += label + "," + format_real(p.x) + "," + format_real(p.y) + "\n";
  }
  return out;
}

}  // namespace

std::string roc_csv(const CurveSet& curves) { return curves_csv(curves.roc, "class,fpr,tpr\n"); }
std::string pr_csv(const CurveSet& curves) { return curves_csv(curves.pr, "class,recall,precision\n"); }

}  // namespace kite::metrics
