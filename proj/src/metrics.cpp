#include "ctxnet/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <stdexcept>

namespace ctxnet {

std::string Binarization::describe() const {
  if (kind == Kind::kTopK) return "top_k=" + std::to_string(k);
  char buf[64];
  std::snprintf(buf, sizeof buf, "threshold=%g", threshold);
  return buf;
}

double f1_score(double p, double r) { return p + r > 0 ? 2.0 * p * r / (p + r) : 0.0; }

namespace {

std::size_t category_count(const std::vector<PredictionRecord>& records) {
  if (records.empty()) throw std::invalid_argument("metrics: no records");
  const std::size_t c = records.front().confidence.size();
  for (const auto& r : records) {
    if (r.confidence.size() != c || r.labels.size() != c) {
      throw std::invalid_argument("metrics: record '" + r.id + "' has inconsistent category count");
    }
  }
  return c;
}

struct Counts {
  long tp = 0, fp = 0, fn = 0;
};

}  // namespace

std::optional<double> average_precision(int category, const std::vector<PredictionRecord>& records) {
  const std::size_t C = category_count(records);
  if (category < 0 || static_cast<std::size_t>(category) >= C) throw std::invalid_argument("average_precision: bad category");
  const auto c = static_cast<std::size_t>(category);
  std::vector<std::size_t> order(records.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const double ca = records[a].confidence[c], cb = records[b].confidence[c];
    if (ca != cb) return ca > cb;
    return records[a].id < records[b].id;
  });
  double sum = 0;
  long hits = 0;
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    if (records[order[rank]].labels[c]) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(rank + 1);
    }
  }
  if (hits == 0) return std::nullopt;
  return sum / static_cast<double>(hits);
}

MeanAP mean_average_precision(const std::vector<PredictionRecord>& records) {
  const std::size_t C = category_count(records);
  MeanAP out;
  double sum = 0;
  int included = 0;
  for (std::size_t c = 0; c < C; ++c) {
    const auto ap = average_precision(static_cast<int>(c), records);
    if (ap) {
      sum += *ap;
      ++included;
    } else {
      out.excluded.push_back(static_cast<int>(c));
    }
  }
  if (included == 0) throw std::invalid_argument("mean_average_precision: no category has a positive sample");
  out.value = sum / included;
  return out;
}

std::vector<std::vector<int>> binarize(const std::vector<PredictionRecord>& records, const Binarization& b) {
  const std::size_t C = category_count(records);
  if (b.kind == Binarization::Kind::kTopK && (b.k < 1 || static_cast<std::size_t>(b.k) > C)) {
    throw std::invalid_argument("binarize: top_k " + std::to_string(b.k) + " outside [1, " + std::to_string(C) + "]");
  }
  std::vector<std::vector<int>> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    std::vector<int> pred(C, 0);
    if (b.kind == Binarization::Kind::kThreshold) {
      for (std::size_t c = 0; c < C; ++c) pred[c] = r.confidence[c] > b.threshold;
    } else {
      std::vector<std::size_t> order(C);
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t c) { return r.confidence[a] > r.confidence[c]; });
      for (int i = 0; i < b.k; ++i) pred[order[static_cast<std::size_t>(i)]] = 1;
    }
    out.push_back(std::move(pred));
  }
  return out;
}

namespace {

std::vector<Counts> per_class_counts(const std::vector<PredictionRecord>& records,
                                     const std::vector<std::vector<int>>& pred) {
  const std::size_t C = records.front().confidence.size();
  std::vector<Counts> counts(C);
  for (std::size_t i = 0; i < records.size(); ++i) {
    for (std::size_t c = 0; c < C; ++c) {
      const int y = records[i].labels[c], p = pred[i][c];
      counts[c].tp += (y && p);
      counts[c].fp += (!y && p);
      counts[c].fn += (y && !p);
    }
  }
  return counts;
}

ClassMetrics class_prf(const Counts& k) {
  ClassMetrics m;
  if (k.tp + k.fp + k.fn == 0) {
    m.precision = m.recall = m.f1 = 1.0;
    m.vacuous = true;
    return m;
  }
  m.precision = k.tp + k.fp > 0 ? static_cast<double>(k.tp) / static_cast<double>(k.tp + k.fp) : 0.0;
  m.recall = k.tp + k.fn > 0 ? static_cast<double>(k.tp) / static_cast<double>(k.tp + k.fn) : 0.0;
  m.f1 = f1_score(m.precision, m.recall);
  return m;
}

}  // namespace

PrecisionRecall precision_recall_f1(const std::vector<PredictionRecord>& records, const Binarization& b,
                                    Averaging averaging) {
  const auto pred = binarize(records, b);
  const auto counts = per_class_counts(records, pred);
  PrecisionRecall out;
  if (averaging == Averaging::kMacro) {
    for (const auto& k : counts) {
      const ClassMetrics m = class_prf(k);
      out.precision += m.precision;
      out.recall += m.recall;
    }
    out.precision /= static_cast<double>(counts.size());
    out.recall /= static_cast<double>(counts.size());
  } else {
    Counts total;
    for (const auto& k : counts) {
      total.tp += k.tp;
      total.fp += k.fp;
      total.fn += k.fn;
    }
    out.precision = total.tp + total.fp > 0 ? static_cast<double>(total.tp) / static_cast<double>(total.tp + total.fp) : 0.0;
    out.recall = total.tp + total.fn > 0 ? static_cast<double>(total.tp) / static_cast<double>(total.tp + total.fn) : 0.0;
  }
  out.f1 = f1_score(out.precision, out.recall);
  return out;
}

MetricsReport build_report(const std::vector<PredictionRecord>& records, const Binarization& b) {
  const std::size_t C = category_count(records);
  MetricsReport report;
  const MeanAP map = mean_average_precision(records);
  report.map = map.value;
  report.excluded_classes = map.excluded;
  report.macro = precision_recall_f1(records, b, Averaging::kMacro);
  report.micro = precision_recall_f1(records, b, Averaging::kMicro);
  report.binarization = b.describe();
  const auto counts = per_class_counts(records, binarize(records, b));
  for (std::size_t c = 0; c < C; ++c) {
    ClassMetrics m = class_prf(counts[c]);
    m.category = static_cast<int>(c);
    m.ap = average_precision(static_cast<int>(c), records);
    report.per_class.push_back(m);
  }
  return report;
}

nlohmann::ordered_json report_to_json(const MetricsReport& r, const std::vector<std::string>& names) {
  auto name_of = [&](int c) {
    return static_cast<std::size_t>(c) < names.size() ? names[static_cast<std::size_t>(c)] : std::to_string(c);
  };
  nlohmann::ordered_json j;
  j["mAP"] = r.map;
  j["F1_C"] = r.macro.f1;
  j["P_C"] = r.macro.precision;
  j["R_C"] = r.macro.recall;
  j["F1_O"] = r.micro.f1;
  j["P_O"] = r.micro.precision;
  j["R_O"] = r.micro.recall;
  nlohmann::ordered_json per_class = nlohmann::ordered_json::array();
  for (const auto& m : r.per_class) {
    nlohmann::ordered_json e;
    e["class"] = name_of(m.category);
    e["AP"] = m.ap ? nlohmann::ordered_json(*m.ap) : nlohmann::ordered_json(nullptr);
    e["P"] = m.precision;
    e["R"] = m.recall;
    e["F1"] = m.f1;
    if (m.vacuous) e["vacuous"] = true;
    per_class.push_back(e);
  }
  j["per_class"] = per_class;
  nlohmann::ordered_json excluded = nlohmann::ordered_json::array();
  for (int c : r.excluded_classes) excluded.push_back(name_of(c));
  j["excluded_classes"] = excluded;
  j["binarization"] = r.binarization;
  j["ap_convention"] = r.ap_convention;
  return j;
}

MetricsReport report_from_json(const nlohmann::json& j, const std::vector<std::string>& names) {
  auto index_of = [&](const std::string& n) {
    for (std::size_t i = 0; i < names.size(); ++i)
      if (names[i] == n) return static_cast<int>(i);
    return std::stoi(n);
  };
  auto unit = [](const nlohmann::json& v, const char* key) {
    const double x = v.at(key).get<double>();
    if (!(x >= 0.0 && x <= 1.0)) throw std::invalid_argument(std::string("report: ") + key + " outside [0,1]");
    return x;
  };
  MetricsReport r;
  r.map = unit(j, "mAP");
  r.macro = {unit(j, "P_C"), unit(j, "R_C"), unit(j, "F1_C")};
  r.micro = {unit(j, "P_O"), unit(j, "R_O"), unit(j, "F1_O")};
  for (const auto& e : j.at("per_class")) {
    ClassMetrics m;
    m.category = index_of(e.at("class").get<std::string>());
    if (!e.at("AP").is_null()) m.ap = unit(e, "AP");
    m.precision = unit(e, "P");
    m.recall = unit(e, "R");
    m.f1 = unit(e, "F1");
    m.vacuous = e.value("vacuous", false);
    r.per_class.push_back(m);
  }
  for (const auto& e : j.at("excluded_classes")) r.excluded_classes.push_back(index_of(e.get<std::string>()));
  r.binarization = j.at("binarization").get<std::string>();
  r.ap_convention = j.at("ap_convention").get<std::string>();
  return r;
}

std::string render_table_header() {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-16s|%6s |%6s |%6s |%6s |%6s |%6s |%6s", "Method", "mAP", "F1-C", "P-C", "R-C", "F1-O",
                "P-O", "R-O");
  return buf;
}

std::string render_table_row(const std::string& label, const MetricsReport& r) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-16s|%6.1f |%6.1f |%6.1f |%6.1f |%6.1f |%6.1f |%6.1f", label.c_str(), 100 * r.map,
                100 * r.macro.f1, 100 * r.macro.precision, 100 * r.macro.recall, 100 * r.micro.f1,
                100 * r.micro.precision, 100 * r.micro.recall);
  return buf;
}

std::string render_table(const std::string& label, const MetricsReport& r) {
  const std::string header = render_table_header();
  return header + "\n" + std::string(header.size(), '-') + "\n" + render_table_row(label, r) + "\n";
}

}  // namespace ctxnet
