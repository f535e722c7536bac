#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace kite::metrics {

class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t classes) : classes_(classes), counts_(classes * classes, 0) {}

  std::size_t classes() const { return classes_; }
  std::uint64_t& at(std::size_t truth, std::size_t pred) { return counts_[truth * classes_ + pred]; }
  std::uint64_t at(std::size_t truth, std::size_t pred) const { return counts_[truth * classes_ + pred]; }
  std::uint64_t total() const;
  std::uint64_t correct() const;
  std::uint64_t tp(std::size_t c) const { return at(c, c); }
  std::uint64_t fp(std::size_t c) const;  // predicted c, truth differs
  std::uint64_t fn(std::size_t c) const;  // truth c, predicted differs
  std::uint64_t tn(std::size_t c) const { return total() - tp(c) - fp(c) - fn(c); }
  std::uint64_t support(std::size_t c) const { return tp(c) + fn(c); }

 private:
  std::size_t classes_;
  std::vector<std::uint64_t> counts_;
};

// Throws ShapeError on a length mismatch or empty input, IndexError on a
// class index outside [0, classes).
ConfusionMatrix confusion(std::span<const std::int32_t> preds, std::span<const std::int32_t> truths,
                          std::size_t classes);

// TP / (TP + (FP + FN) / 2); 0 when the class never occurs nor is predicted.
double f1_per_class(const ConfusionMatrix& cm, std::size_t c);
double precision_per_class(const ConfusionMatrix& cm, std::size_t c);
double recall_per_class(const ConfusionMatrix& cm, std::size_t c);

// Multi-class Matthews correlation from the full confusion matrix; 0 when
// either marginal is degenerate.
double mcc(const ConfusionMatrix& cm);

struct MetricReport {
  std::size_t samples = 0;
  double accuracy = 0;
  double f1_weighted = 0;
  double f1_macro = 0;
  double mcc = 0;
  double precision_weighted = 0;
  double precision_macro = 0;
  double recall_weighted = 0;
  double recall_macro = 0;
  double aupr = 0;  // micro-averaged
  double auc = 0;   // micro-averaged
  double aupr_macro = 0;
  double auc_macro = 0;
};

// Label-based fields only; curve fields stay 0. Weighted means use class
// support, macro means skip classes with zero support.
MetricReport aggregate(const ConfusionMatrix& cm);

struct CurvePoint {
  double x;
  double y;
};

struct Curve {
  int label;  // class index, or -1 for the micro average
  std::vector<CurvePoint> points;
  double area;
};

// Descending-threshold sweep with equal scores grouped. ROC points are
// (fpr, tpr) from (0, 0) to (1, 1) with trapezoidal area; PR points are
// (recall, precision) with step-wise area sum (R_k - R_{k-1}) P_k. Both
// return area 0 and no points when positives or negatives are absent.
Curve binary_roc(std::span<const double> scores, std::span<const std::uint8_t> positive);
Curve binary_pr(std::span<const double> scores, std::span<const std::uint8_t> positive);

struct CurveSet {
  std::vector<Curve> roc;  // per class with both outcomes present, then micro
  std::vector<Curve> pr;
  double auc_micro = 0;
  double auc_macro = 0;
  double aupr_micro = 0;
  double aupr_macro = 0;
};

// scores: N x M row-major class probabilities, each row summing to 1 within
// 1e-4 (NumericError otherwise).
CurveSet one_vs_rest_curves(std::span<const double> scores, std::span<const std::int32_t> truths,
                            std::size_t classes);

// Argmax predictions, confusion, aggregates and curve areas in one report.
MetricReport evaluate(std::span<const double> scores, std::span<const std::int32_t> truths, std::size_t classes,
                      CurveSet* curves = nullptr);

nlohmann::ordered_json to_json(const MetricReport& r);
std::string roc_csv(const CurveSet& curves);
std::string pr_csv(const CurveSet& curves);

}  // namespace kite::metrics
