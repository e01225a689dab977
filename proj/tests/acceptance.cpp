// Acceptance runner: one PASS/FAIL line per criterion; exit 0 iff all pass.

#include "ctxnet/checkpoint.hpp"
#include "ctxnet/data.hpp"
#include "ctxnet/losses.hpp"
#include "ctxnet/metrics.hpp"
#include "ctxnet/train.hpp"
#include "ctxnet/verify.hpp"
#include "oracles.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <sstream>

using namespace ctxnet;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

int g_failures = 0;

void report(const std::string& name, double limit_s, const std::function<Outcome()>& fn) {
  const auto t0 = Clock::now();
  Outcome o;
  try {
    o = fn();
  } catch (const std::exception& e) {
    o = {false, std::string("threw: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
  const bool in_time = secs <= limit_s;
  const bool pass = o.pass && in_time;
  if (!pass) ++g_failures;
  std::ostringstream os;
  os.precision(4);
  os << (pass ? "PASS" : "FAIL") << "  " << name << "  " << o.detail << " [" << secs << " s";
  if (!in_time) os << " > " << limit_s << " s limit";
  os << "]";
  std::cout << os.str() << std::endl;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

// ---- loss oracles ----

struct LossCase {
  std::string what;
  double got, want;
};

Outcome loss_oracles() {
  const double eps = kProbEpsilon;
  const double edge = -std::log(1.0 - eps);  // closed form of a confident correct term at the clamp
  LossConfig squash;
  LossConfig literal;
  literal.sigma_mode = SigmaMode::kLiteral;
  literal.sigma_factor = 0.5;
  LossConfig unit;
  unit.alpha = unit.beta = unit.gamma = 1;
  LossConfig mixed;
  mixed.alpha = 0.5;
  mixed.beta = 2;
  mixed.gamma = 1;

  const std::vector<double> zeros{0, 0}, limit{1e3, -1e3, -1e3}, one{1};
  const std::vector<int> y10{1, 0}, y100{1, 0, 0}, y1{1};
  const std::vector<LossCase> cases{
      {"smooth_l1(0)", smooth_l1(0), 0},
      {"smooth_l1(0.5)", smooth_l1(0.5), 0.125},
      {"smooth_l1(2)", smooth_l1(2), 1.5},
      {"smooth_l1(-1)", smooth_l1(-1), 0.5},
      {"location equal", location_loss({0.3, -0.2, 0.1, 0.4}, {0.3, -0.2, 0.1, 0.4}), 0},
      {"location (0.5,0,0,0)", location_loss({0.5, 0, 0, 0}, {0, 0, 0, 0}), 0.125},
      {"location (2,2,2,2)", location_loss({2, 2, 2, 2}, {0, 0, 0, 0}), 6.0},
      {"patch p=1 y=1", patch_loss(1.0, 1), edge},
      {"patch p=0.5 y=1", patch_loss(0.5, 1), std::log(2.0)},
      {"patch p=0.9 y=0", patch_loss(0.9, 0), -std::log(0.1)},
      {"label squash zeros", label_loss(zeros, y10, squash), 2 * std::log(2.0)},
      {"label squash limit", label_loss(limit, y100, squash), 3 * edge},
      {"label literal sigma 0.5", label_loss(one, y1, literal), std::log(2.0)},
      {"total unit (1,2,3,4)", total_loss(1, 2, 3, 4, unit).total, 10},
      {"total mixed (1,1,1,1)", total_loss(1, 1, 1, 1, mixed).total, 4.5},
      {"total zeros", total_loss(0, 0, 0, 0, mixed).total, 0},
  };
  double worst = 0;
  std::string bad;
  for (const LossCase& c : cases) {
    const double err = std::abs(c.got - c.want);
    if (!(err <= 1e-9) && bad.empty()) bad = c.what;
    worst = std::max(worst, err);
  }
  return {bad.empty(), std::to_string(cases.size()) + " examples, max abs error " + sci(worst) +
                           (bad.empty() ? "" : ", first miss: " + bad)};
}

// ---- gradients ----

Outcome gradient_suite() {
  std::vector<CheckReport> reports = operator_gradchecks(7);
  double worst_op = 0;
  std::string bad;
  for (const CheckReport& r : reports) {
    worst_op = std::max(worst_op, r.max_rel_error);
    if (!r.pass() && bad.empty()) bad = r.name;
  }
  const CheckReport micro = micro_model_gradcheck(7);
  if (!micro.pass() && bad.empty()) bad = micro.name;
  std::ostringstream os;
  os << reports.size() << " operators max rel " << worst_op << " (<= " << kOperatorTolerance << "), micro-model "
     << micro.max_rel_error << " (<= " << kMicroModelTolerance << ")";
  if (!bad.empty()) os << ", first miss: " << bad;
  return {bad.empty(), os.str()};
}

// ---- metrics ----

Outcome metrics_oracle() {
  const oracle::Sweep prf = oracle::prf_enumeration();
  const oracle::Sweep ap = oracle::ap_random_sets(1000, 2024);
  std::string detail = "P/R/F1 " + std::to_string(prf.cases) + " sets exact, AP/mAP " + std::to_string(ap.cases) +
                       " sets max error " + sci(ap.worst);
  if (!prf.ok()) detail += ", P/R/F1 miss: " + prf.first_failure;
  if (!ap.ok()) detail += ", AP miss: " + ap.first_failure;
  return {prf.ok() && ap.ok() && ap.cases >= 1000, detail};
}

// ---- geometry ----

Outcome geometry_suite() {
  constexpr int n = 10000;
  const std::pair<const char*, oracle::Sweep> sweeps[] = {
      {"iou", oracle::iou_symmetry_and_bounds(n, 11)},
      {"encode/decode", oracle::encode_decode_roundtrip(n, 12)},
      {"expansion", oracle::expansion_containment_and_monotonicity(n, 13)},
      {"nms", oracle::nms_pairwise_bound(n, 14)},
  };
  bool ok = true;
  std::string detail;
  for (const auto& [name, s] : sweeps) {
    ok = ok && s.ok() && s.cases >= n;
    detail += std::string(detail.empty() ? "" : ", ") + name + " " + std::to_string(s.cases);
    if (!s.ok()) detail += " (miss: " + s.first_failure + ")";
  }
  return {ok, detail + " cases"};
}

// ---- end-to-end ----

struct Run {
  TrainResult result;
  std::string checkpoint;
  MetricsReport object, context, fused;
  std::string report_json;  // all three branches
};

std::vector<std::uint8_t> read_bytes(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), {}};
}

Run acceptance_run(const std::string& data_dir, const std::string& run_dir) {
  fs::create_directories(run_dir);
  const std::vector<Sample> train_set = load_dataset(data_dir + "/train");
  const std::vector<Sample> val_set = load_dataset(data_dir + "/val");
  const RunConfig config;
  Model model(config.model, config.seed);
  Run run;
  run.checkpoint = run_dir + "/model.ckpt";
  run.result = train(model, config, train_set, val_set, {run.checkpoint, {}});

  RunConfig loaded;
  const Model trained = load_model(run.checkpoint, &loaded);
  const std::vector<std::string> names(kCategoryNames.begin(), kCategoryNames.end());
  nlohmann::ordered_json all;
  const std::pair<const char*, MetricsReport*> branches[] = {
      {"object", &run.object}, {"context", &run.context}, {"fused", &run.fused}};
  const BranchSelect selects[] = {BranchSelect::kObject, BranchSelect::kContext, BranchSelect::kFused};
  for (int b = 0; b < 3; ++b) {
    *branches[b].second = build_report(predict_records(trained, loaded.loss, val_set, selects[b]), loaded.binarization);
    all[branches[b].first] = report_to_json(*branches[b].second, names);
  }
  run.report_json = all.dump(2);
  std::ofstream(run_dir + "/report.json") << run.report_json << "\n";
  return run;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ctxnet acceptance suite"};
  std::string work = (fs::temp_directory_path() / "ctxnet_acceptance").string();
  bool skip_training = false;
  app.add_option("--work", work, "Scratch directory for the dataset and runs");
  app.add_flag("--skip-training", skip_training, "Only the fast suites");
  CLI11_PARSE(app, argc, argv);

  report("loss oracle suite", 1.0, loss_oracles);
  report("gradient suite", 120.0, gradient_suite);
  report("metrics oracle", 60.0, metrics_oracle);
  report("geometry property suite", 60.0, geometry_suite);
  if (skip_training) return g_failures == 0 ? 0 : 1;

  const std::string data_dir = work + "/data";
  fs::remove_all(work);
  DatasetSpec spec;  // 2000/500, 64x64, six categories, seed 42
  generate_dataset(spec, data_dir);

  Run a, b;
  bool have_a = false;
  report("end-to-end synthetic run", 30 * 60.0, [&]() -> Outcome {
    a = acceptance_run(data_dir, work + "/run_a");
    have_a = true;
    const std::size_t epochs = a.result.log.size();
    const bool ok = epochs <= 30 && a.fused.map >= 0.90 && a.fused.micro.f1 >= 0.85;
    return {ok, "val mAP " + fmt(a.fused.map) + " (>= 0.90), F1-O " + fmt(a.fused.micro.f1) + " (>= 0.85), " +
                    std::to_string(epochs) + " epochs"};
  });
  report("context-benefit ablation", 60.0, [&]() -> Outcome {
    if (!have_a) return {false, "no acceptance run"};
    const double r_obj = a.object.per_class[kDot].recall, r_fused = a.fused.per_class[kDot].recall;
    const bool ok = r_fused - r_obj >= 0.05 && a.fused.map >= a.object.map;
    return {ok, "dot recall fused " + fmt(r_fused) + " vs object " + fmt(r_obj) + " (gap >= 0.05), mAP fused " +
                    fmt(a.fused.map) + " vs object " + fmt(a.object.map)};
  });
  report("determinism", 30 * 60.0, [&]() -> Outcome {
    if (!have_a) return {false, "no acceptance run"};
    b = acceptance_run(data_dir, work + "/run_b");
    const bool same_ckpt = read_bytes(a.checkpoint) == read_bytes(b.checkpoint);
    const bool same_report = a.report_json == b.report_json;
    return {same_ckpt && same_report, std::string("checkpoints ") + (same_ckpt ? "identical" : "differ") +
                                          ", reports " + (same_report ? "identical" : "differ")};
  });
  report("staged-training contract", 60.0, [&]() -> Outcome {
    if (!have_a) return {false, "no acceptance run"};
    const auto& bb = a.result.backbone_after_phase;
    if (bb.size() != 3) return {false, "expected three phases"};
    const bool frozen = bb[0] == bb[1];
    const bool moved = bb[1] != bb[2];
    return {frozen && moved, std::string("backbone ") + (frozen ? "unchanged" : "changed") + " in phase 1, " +
                                 (moved ? "changed" : "unchanged") + " in phase 2"};
  });
  return g_failures == 0 ? 0 : 1;
}
