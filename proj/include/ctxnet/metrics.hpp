#pragma once

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace ctxnet {

struct PredictionRecord {
  std::string id;
  std::vector<double> confidence;  // one per category
  std::vector<int> labels;         // ground truth indicators
};

/// How confidences become predicted label sets.
struct Binarization {
  enum class Kind { kThreshold, kTopK };
  Kind kind = Kind::kThreshold;
  double threshold = 0.5;  // predicted when confidence > threshold
  int k = 3;               // k highest per sample, lower category first on ties

  static Binarization at_threshold(double t) { return {Kind::kThreshold, t, 3}; }
  static Binarization top_k(int k) { return {Kind::kTopK, 0.5, k}; }
  std::string describe() const;
};

enum class Averaging { kMacro, kMicro };

struct PrecisionRecall {
  double precision = 0, recall = 0, f1 = 0;
};

/// Harmonic mean, 0 when p + r == 0.
double f1_score(double precision, double recall);

/// Non-interpolated AP for one category: mean of precision@k over the ranks
/// of positive samples, ranked by descending confidence then sample id.
/// nullopt when the category has no positive sample.
std::optional<double> average_precision(int category, const std::vector<PredictionRecord>& records);

struct MeanAP {
  double value = 0;
  std::vector<int> excluded;  // categories without positives
};
MeanAP mean_average_precision(const std::vector<PredictionRecord>& records);

/// Binarized predictions per record, one indicator per category.
std::vector<std::vector<int>> binarize(const std::vector<PredictionRecord>& records, const Binarization& b);

/// Macro: per-category P/R averaged, F1 from the averaged P and R. A category
/// with no actual and no predicted positives scores P = R = 1. Micro: pooled
/// counts over every (sample, category) pair.
PrecisionRecall precision_recall_f1(const std::vector<PredictionRecord>& records, const Binarization& b,
                                    Averaging averaging);

struct ClassMetrics {
  int category = 0;
  std::optional<double> ap;  // empty for excluded categories
  double precision = 0, recall = 0, f1 = 0;
  bool vacuous = false;  // no actual and no predicted positives
};

struct MetricsReport {
  double map = 0;
  PrecisionRecall macro;
  PrecisionRecall micro;
  std::vector<ClassMetrics> per_class;
  std::vector<int> excluded_classes;
  std::string binarization;
  std::string ap_convention = "non-interpolated precision at positive ranks";
};

MetricsReport build_report(const std::vector<PredictionRecord>& records, const Binarization& b);

/// JSON with keys mAP, F1_C, P_C, R_C, F1_O, P_O, R_O, per_class,
/// excluded_classes, binarization, ap_convention.
nlohmann::ordered_json report_to_json(const MetricsReport& report, const std::vector<std::string>& class_names);
MetricsReport report_from_json(const nlohmann::json& j, const std::vector<std::string>& class_names);

/// Plain-text table in the column order mAP | F1-C | P-C | R-C | F1-O | P-O | R-O,
/// values as percentages with one decimal.
std::string render_table_header();
std::string render_table_row(const std::string& label, const MetricsReport& report);
std::string render_table(const std::string& label, const MetricsReport& report);

}  // namespace ctxnet
