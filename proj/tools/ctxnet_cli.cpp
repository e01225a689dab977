#include "ctxnet/annotate.hpp"
#include "ctxnet/checkpoint.hpp"
#include "ctxnet/config.hpp"
#include "ctxnet/data.hpp"
#include "ctxnet/metrics.hpp"
#include "ctxnet/ppm.hpp"
#include "ctxnet/train.hpp"
#include "ctxnet/verify.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace ctxnet;

namespace {

std::vector<std::string> class_names() { return {kCategoryNames.begin(), kCategoryNames.end()}; }

// Config file, then --set key=value pairs (values parsed as JSON, else as strings).
struct ConfigFlags {
  std::string path;
  std::vector<std::string> overrides;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", path, "JSON run config; defaults apply when absent")->check(CLI::ExistingFile);
    cmd->add_option("--set", overrides, "Override one config key, e.g. --set lr=0.001");
  }

  RunConfig resolve(nlohmann::json j = nlohmann::json::object()) const {
    if (!path.empty()) {
      std::ifstream is(path);
      nlohmann::json file;
      try {
        is >> file;
      } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument("config '" + path + "': " + e.what());
      }
      if (!file.is_object()) throw std::invalid_argument("config '" + path + "': expected a JSON object");
      j.update(file);
    }
    for (const std::string& kv : overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos || eq == 0) throw std::invalid_argument("--set expects key=value, got '" + kv + "'");
      const std::string value = kv.substr(eq + 1);
      nlohmann::json parsed = nlohmann::json::parse(value, nullptr, false);
      j[kv.substr(0, eq)] = parsed.is_discarded() ? nlohmann::json(value) : parsed;
    }
    try {
      return run_config_from_json(j);
    } catch (const nlohmann::json::exception& e) {
      throw std::invalid_argument(std::string("config: ") + e.what());
    }
  }
};

void write_text(const std::string& path, const std::string& text) {
  if (path.empty()) return;
  if (fs::path(path).has_parent_path()) fs::create_directories(fs::path(path).parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write '" + path + "'");
  os << text;
}

void check_image_size(const std::vector<Sample>& samples, const ModelConfig& model) {
  for (const Sample& s : samples) {
    if (s.image.dim(1) != model.image_size || s.image.dim(2) != model.image_size) {
      throw std::invalid_argument("sample '" + s.id + "' is " + shape_str(s.image.shape()) +
                                  " but the model expects image_size " + std::to_string(model.image_size));
    }
  }
}

// Flags layer over the checkpoint's own config; the result must still fit its parameters.
Model load_checked(const std::string& checkpoint, const ConfigFlags& flags, RunConfig& config) {
  const Checkpoint ckpt = load_checkpoint(checkpoint);
  nlohmann::json base;
  try {
    base = nlohmann::json::parse(ckpt.config);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("checkpoint '" + checkpoint + "' has an unreadable config: " + e.what());
  }
  config = flags.resolve(base);
  Model model(config.model, config.seed);
  try {
    load_into(model.params(), ckpt);
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument("architecture mismatch with checkpoint '" + checkpoint + "': " + e.what());
  }
  return model;
}

int cmd_generate(const DatasetSpec& spec, const std::string& out) {
  const DatasetSummary s = generate_dataset(spec, out);
  std::printf("wrote %d train / %d val samples to %s\n", s.num_train, s.num_val, out.c_str());
  for (int c = 0; c < kNumCategories; ++c) std::printf("  %-9s %d\n", kCategoryNames[c], s.category_counts[c]);
  return 0;
}

int cmd_train(const ConfigFlags& flags, const std::string& data, const std::string& checkpoint,
              const std::string& log_path) {
  const RunConfig config = flags.resolve();
  const auto train_set = load_dataset((fs::path(data) / "train").string());
  const auto val_set = load_dataset((fs::path(data) / "val").string());
  check_image_size(train_set, config.model);
  check_image_size(val_set, config.model);

  std::ofstream log;
  if (!log_path.empty()) {
    if (fs::path(log_path).has_parent_path()) fs::create_directories(fs::path(log_path).parent_path());
    log.open(log_path, std::ios::trunc);
    if (!log) throw std::runtime_error("cannot write '" + log_path + "'");
  }
  if (fs::path(checkpoint).has_parent_path()) fs::create_directories(fs::path(checkpoint).parent_path());

  Model model(config.model, config.seed);
  TrainOptions opts;
  opts.checkpoint_path = checkpoint;
  opts.on_epoch = [&](const EpochLog& e) {
    const std::string line = to_json(e).dump();
    if (log.is_open()) log << line << '\n' << std::flush;
    std::cout << line << '\n' << std::flush;
  };
  const TrainResult r = train(model, config, train_set, val_set, opts);
  std::printf("best val mAP %.4f at epoch %d; checkpoint %s\n", r.best_val_map, r.best_epoch, checkpoint.c_str());
  return 0;
}

int cmd_eval(const ConfigFlags& flags, const std::string& checkpoint, const std::string& split,
             const std::string& branch, const std::string& report_path, const std::string& table_path) {
  RunConfig config;
  const Model model = load_checked(checkpoint, flags, config);
  const auto samples = load_dataset(split);
  check_image_size(samples, config.model);
  const auto records = predict_records(model, config.loss, samples, branch_from_string(branch));
  const MetricsReport report = build_report(records, config.binarization);
  const std::string table = render_table(branch, report);
  write_text(report_path, report_to_json(report, class_names()).dump(2) + "\n");
  write_text(table_path, table);
  std::cout << table;
  return 0;
}

int cmd_predict(const ConfigFlags& flags, const std::string& checkpoint, const std::string& image_path,
                const std::string& out) {
  RunConfig config;
  const Model model = load_checked(checkpoint, flags, config);
  Image8 image;
  try {
    image = read_ppm(image_path);
  } catch (const std::exception& e) {
    throw std::invalid_argument(e.what());
  }
  if (image.width != config.model.image_size || image.height != config.model.image_size) {
    throw std::invalid_argument("image '" + image_path + "' is " + std::to_string(image.width) + "x" +
                                std::to_string(image.height) + "; model expects " +
                                std::to_string(config.model.image_size));
  }
  const ImagePrediction p = model.predict(image_to_tensor(image), config.loss);
  for (int c = 0; c < kNumCategories; ++c) std::printf("%-9s %.4f\n", kCategoryNames[c], p.fused[c]);
  std::string labels;
  for (int c : p.labels) labels += (labels.empty() ? "" : ", ") + std::string(kCategoryNames[c]);
  std::printf("labels: {%s}\n", labels.c_str());
  if (!out.empty()) {
    if (fs::path(out).has_parent_path()) fs::create_directories(fs::path(out).parent_path());
    write_ppm(out, annotate(image, p.detections));
  }
  return 0;
}

int cmd_gradcheck(std::uint64_t seed) {
  std::vector<CheckReport> reports = operator_gradchecks(seed);
  reports.push_back(micro_model_gradcheck(seed));
  bool ok = true;
  for (const CheckReport& r : reports) {
    std::printf("%-28s max_rel_err %.3e  tol %.0e  n=%-3d %s\n", r.name.c_str(), r.max_rel_error, r.tolerance,
                r.checked, r.pass() ? "ok" : "FAIL");
    ok = ok && r.pass();
  }
  return ok ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-branch context-aware multi-label classifier on synthetic shapes"};
  app.require_subcommand(1);

  DatasetSpec spec;
  std::string gen_out;
  auto* gen = app.add_subcommand("generate", "Render a synthetic dataset");
  gen->add_option("--out", gen_out, "Output directory")->required();
  gen->add_option("--num-train", spec.num_train);
  gen->add_option("--num-val", spec.num_val);
  gen->add_option("--size", spec.image_size, "Image side in pixels");
  gen->add_option("--min-objects", spec.min_objects);
  gen->add_option("--max-objects", spec.max_objects);
  gen->add_option("--dot-probability", spec.dot_probability);
  gen->add_option("--seed", spec.seed);

  ConfigFlags train_flags;
  std::string train_data, train_ckpt = "run/model.ckpt", train_log = "run/train_log.jsonl";
  auto* tr = app.add_subcommand("train", "Staged training; writes the best-val checkpoint");
  train_flags.attach(tr);
  tr->add_option("--data", train_data, "Dataset directory holding train/ and val/")->required();
  tr->add_option("--checkpoint", train_ckpt);
  tr->add_option("--log", train_log, "Per-epoch JSONL log");

  ConfigFlags eval_flags;
  std::string eval_ckpt, eval_split, eval_branch = "fused", eval_report, eval_table;
  auto* ev = app.add_subcommand("eval", "Metrics report for one split");
  eval_flags.attach(ev);
  ev->add_option("--checkpoint", eval_ckpt)->required();
  ev->add_option("--split", eval_split, "Split directory holding manifest.jsonl")->required();
  ev->add_option("--branch", eval_branch)->check(CLI::IsMember({"object", "context", "fused"}));
  ev->add_option("--report", eval_report, "JSON report path");
  ev->add_option("--table", eval_table, "Text table path");

  ConfigFlags pred_flags;
  std::string pred_ckpt, pred_image, pred_out;
  auto* pr = app.add_subcommand("predict", "Label one PPM image and draw its patches");
  pred_flags.attach(pr);
  pr->add_option("--checkpoint", pred_ckpt)->required();
  pr->add_option("--image", pred_image)->required();
  pr->add_option("--out", pred_out, "Annotated PPM output");

  std::uint64_t gc_seed = 1;
  auto* gc = app.add_subcommand("gradcheck", "Finite-difference gradient checks");
  gc->add_option("--seed", gc_seed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (*gen) return cmd_generate(spec, gen_out);
    if (*tr) return cmd_train(train_flags, train_data, train_ckpt, train_log);
    if (*ev) return cmd_eval(eval_flags, eval_ckpt, eval_split, eval_branch, eval_report, eval_table);
    if (*pr) return cmd_predict(pred_flags, pred_ckpt, pred_image, pred_out);
    if (*gc) return cmd_gradcheck(gc_seed);
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
