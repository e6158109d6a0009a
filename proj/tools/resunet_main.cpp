// Command-line front end: phantom | preprocess | train | predict | evaluate |
// report. Every command takes an optional TOML/JSON config file; explicit
// flags override config values. Output directories are claimed via their run
// manifest and refused when one already exists unless --force is given.

#include <CLI11.hpp>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "resunet/resunet.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace resunet;

namespace {

json load_cfg(const std::string& path) {
  if (path.empty()) return json::object();
  return load_config(path);
}

std::vector<View> parse_views(const std::string& spec) {
  std::vector<View> views;
  std::string cur;
  std::istringstream is(spec);
  while (std::getline(is, cur, ',')) {
    if (!cur.empty()) views.push_back(view_from_string(cur));
  }
  require(!views.empty(), ErrorKind::ConfigError, "no views given");
  return views;
}

// ---------------------------------------------------------------- phantom --

int run_phantom(const std::string& config_path, const std::string& out_dir,
                const std::map<std::string, std::string>& overrides, bool force) {
  const json cfg = load_cfg(config_path);
  auto get_i = [&](const char* key, std::int64_t dflt) {
    auto it = overrides.find(key);
    if (it != overrides.end()) return static_cast<std::int64_t>(std::stoll(it->second));
    return config_get<std::int64_t>(cfg, std::string("phantom.") + key, dflt);
  };
  auto get_f = [&](const char* key, double dflt) {
    auto it = overrides.find(key);
    if (it != overrides.end()) return std::stod(it->second);
    return config_get<double>(cfg, std::string("phantom.") + key, dflt);
  };

  PhantomSpec spec;
  const std::int64_t dim = get_i("dim", 64);
  spec.dims = {static_cast<int>(get_i("dim_d", dim)), static_cast<int>(get_i("dim_h", dim)),
               static_cast<int>(get_i("dim_w", dim))};
  spec.seed = static_cast<std::uint64_t>(get_i("seed", 1234));
  spec.p_tumor = get_f("p_tumor", spec.p_tumor);
  spec.p_tc = get_f("p_tc", spec.p_tc);
  spec.p_et = get_f("p_et", spec.p_et);
  spec.noise_sigma = get_f("noise_sigma", spec.noise_sigma);
  spec.bias_strength = get_f("bias_strength", spec.bias_strength);
  const int n_cases = static_cast<int>(get_i("cases", 10));
  const int holdout = static_cast<int>(get_i("holdout", 0));
  require(n_cases >= 1, ErrorKind::ConfigError, "need at least one case");
  require(holdout >= 0 && holdout < n_cases, ErrorKind::ConfigError,
          "holdout must be smaller than the cohort");

  claim_output_dir(out_dir, force);
  json effective{{"command", "phantom"},
                 {"cases", n_cases},
                 {"holdout", holdout},
                 {"dims", spec.dims},
                 {"seed", spec.seed},
                 {"p_tumor", spec.p_tumor},
                 {"p_tc", spec.p_tc},
                 {"p_et", spec.p_et},
                 {"noise_sigma", spec.noise_sigma},
                 {"bias_strength", spec.bias_strength}};
  for (int i = 0; i < n_cases; ++i) {
    const MultiModalCase cse = generate_phantom(spec, i);
    std::string root = out_dir;
    if (holdout > 0) root = (fs::path(out_dir) / (i < n_cases - holdout ? "train" : "test")).string();
    write_case(root, cse);
  }
  write_run_manifest(out_dir, "phantom", effective, spec.seed);
  std::printf("wrote %d cases under %s\n", n_cases, out_dir.c_str());
  return 0;
}

// ------------------------------------------------------------- preprocess --

int run_preprocess(const std::string& config_path, const std::string& in_dir,
                   const std::string& out_dir, std::string views_arg, int patch_size,
                   double val_frac, bool patient_split, std::uint64_t seed, bool force,
                   bool have_patch, bool have_frac, bool have_seed, bool have_views) {
  const json cfg = load_cfg(config_path);
  if (!have_patch) patch_size = static_cast<int>(config_get<std::int64_t>(cfg, "preprocess.patch_size", patch_size));
  if (!have_frac) val_frac = config_get<double>(cfg, "preprocess.val_frac", val_frac);
  if (!have_seed) seed = static_cast<std::uint64_t>(config_get<std::int64_t>(cfg, "preprocess.seed", static_cast<std::int64_t>(seed)));
  if (!have_views) views_arg = config_get<std::string>(cfg, "preprocess.views", views_arg);
  if (!patient_split) patient_split = config_get<bool>(cfg, "preprocess.patient_split", false);
  const std::vector<View> views = parse_views(views_arg);
  require(val_frac > 0.0 && val_frac < 1.0, ErrorKind::ConfigError,
          "val fraction must be in (0, 1)");

  claim_output_dir(out_dir, force);
  const std::vector<CasePaths> cases = discover_cases(in_dir);

  // patient-wise split is shared across views; per-sample splits are drawn
  // per view over that view's patches
  std::vector<bool> case_is_train;
  if (patient_split) {
    Rng rng = Rng::derive(seed, {streams::kSplit});
    case_is_train = split_train_val(cases.size(), 1.0 - val_frac, rng);
  }

  json stats;
  stats["cases"] = json::object();
  struct ViewBatch {
    std::vector<PatchSample> samples;
    std::vector<std::size_t> case_of;
  };
  std::map<int, ViewBatch> batches;

  for (std::size_t ci = 0; ci < cases.size(); ++ci) {
    MultiModalCase cse = read_case(cases[ci]);
    require(cse.labels.has_value(), ErrorKind::MissingLabels,
            "case '" + cse.case_id + "' has no segmentation");
    const auto mstats = normalize_case(cse);
    json case_stats;
    for (int m = 0; m < kNumModalities; ++m) {
      const auto& s = mstats[static_cast<std::size_t>(m)];
      case_stats[modality_suffix(static_cast<Modality>(m)) + 1] = {
          {"mean", s.mean}, {"stddev", s.stddev}, {"nonzero", s.nonzero}};
    }
    stats["cases"][cse.case_id] = std::move(case_stats);
    for (const View v : views) {
      auto& batch = batches[view_axis(v)];
      for (auto& p : extract_patches(cse, v, patch_size)) {
        batch.samples.push_back(std::move(p));
        batch.case_of.push_back(ci);
      }
    }
  }

  json counts = json::object(), dist = json::object();
  for (const View v : views) {
    auto& batch = batches[view_axis(v)];
    require(batch.samples.size() >= 2, ErrorKind::TooFewSamples,
            std::string("not enough patches for view ") + to_string(v));
    std::vector<bool> is_train;
    if (patient_split) {
      is_train.resize(batch.samples.size());
      for (std::size_t i = 0; i < batch.samples.size(); ++i)
        is_train[i] = case_is_train[batch.case_of[i]];
    } else {
      Rng rng = Rng::derive(seed, {streams::kSplit, static_cast<std::uint64_t>(view_axis(v))});
      is_train = split_train_val(batch.samples.size(), 1.0 - val_frac, rng);
    }
    const std::string dir = (fs::path(out_dir) / (std::string("patches_") + to_string(v))).string();
    fs::create_directories(dir);
    PatchStoreWriter writer(dir, patch_size, kNumModalities);
    for (std::size_t i = 0; i < batch.samples.size(); ++i) {
      const PatchSample& p = batch.samples[i];
      writer.add(p.image, p.mask,
                 {p.case_id, p.view, p.slice_index, is_train[i] ? "train" : "val"});
    }
    writer.finalize();
    PatchStore store(dir);
    const auto frac = class_distribution(store);
    counts[to_string(v)] = batch.samples.size();
    dist[to_string(v)] = frac;
  }
  stats["patch_counts"] = std::move(counts);
  stats["class_distribution"] = std::move(dist);
  {
    std::ofstream os(fs::path(out_dir) / "stats.json");
    require(os.good(), ErrorKind::IoError, "cannot write stats.json");
    os << stats.dump(2) << "\n";
  }

  json effective{{"command", "preprocess"}, {"in", in_dir},
                 {"patch_size", patch_size}, {"val_frac", val_frac},
                 {"patient_split", patient_split}, {"views", views_arg},
                 {"seed", seed}};
  write_run_manifest(out_dir, "preprocess", effective, seed);
  std::printf("wrote patches for %zu views under %s\n", views.size(), out_dir.c_str());
  return 0;
}

// ------------------------------------------------------------------ train --

int run_train(const std::string& config_path, std::string patches_dir,
              std::string out_dir, std::string view_arg, TrainConfig tc,
              bool no_augment, bool force, const std::map<std::string, bool>& have) {
  const json cfg = load_cfg(config_path);
  if (patches_dir.empty()) patches_dir = config_get<std::string>(cfg, "train.patches", "");
  if (out_dir.empty()) out_dir = config_get<std::string>(cfg, "train.out", "");
  require(!patches_dir.empty(), ErrorKind::UsageError, "train needs --patches or train.patches");
  require(!out_dir.empty(), ErrorKind::UsageError, "train needs --out or train.out");
  auto maybe_i = [&](const char* key, int cur) {
    return have.at(key) ? cur : static_cast<int>(config_get<std::int64_t>(cfg, std::string("train.") + key, cur));
  };
  auto maybe_f = [&](const char* key, double cur) {
    return have.at(key) ? cur : config_get<double>(cfg, std::string("train.") + key, cur);
  };
  tc.epochs = maybe_i("epochs", tc.epochs);
  tc.batch_size = maybe_i("batch", tc.batch_size);
  tc.net.base_filters = maybe_i("base-filters", tc.net.base_filters);
  tc.net.depth = maybe_i("depth", tc.net.depth);
  tc.learning_rate = maybe_f("lr", tc.learning_rate);
  tc.l2 = maybe_f("l2", tc.l2);
  if (!have.at("seed"))
    tc.seed = static_cast<std::uint64_t>(
        config_get<std::int64_t>(cfg, "train.seed", static_cast<std::int64_t>(tc.seed)));
  if (!have.at("view")) view_arg = config_get<std::string>(cfg, "train.view", view_arg);
  if (!no_augment) no_augment = config_get<bool>(cfg, "train.no_augment", false);
  tc.augment = !no_augment;
  if (view_arg == "per_view_ensemble") view_arg = "all";
  if (view_arg == "mixed_views") view_arg = "mixed";

  claim_output_dir(out_dir, force);
  const std::uint64_t base_seed = tc.seed;

  std::vector<std::string> jobs;
  if (view_arg == "all")
    jobs = {"axial", "sagittal", "coronal"};
  else
    jobs = {view_arg};

  for (std::size_t ji = 0; ji < jobs.size(); ++ji) {
    const std::string& job = jobs[ji];
    TrainData data;
    if (job == "mixed") {
      for (const View v : kAllViews) {
        PatchStore store((fs::path(patches_dir) / (std::string("patches_") + to_string(v))).string());
        append_store(data, store);
      }
      tc.seed = base_seed;
    } else {
      const View v = view_from_string(job);
      PatchStore store((fs::path(patches_dir) / (std::string("patches_") + to_string(v))).string());
      append_store(data, store);
      tc.seed = base_seed + static_cast<std::uint64_t>(view_axis(v));
    }
    ResUNet<float> net;
    const TrainHistory history = train_model(net, data, tc);
    const std::string ckpt = (fs::path(out_dir) / (job + ".ckpt")).string();
    save_checkpoint(ckpt, net, job);
    {
      std::ofstream os(fs::path(out_dir) / (job + "_history.csv"));
      require(os.good(), ErrorKind::IoError, "cannot write history");
      os << "epoch,train_loss,val_loss,seconds\n";
      for (const auto& e : history.epochs) {
        char buf[96];
        std::snprintf(buf, sizeof buf, "%d,%.6f,", e.epoch, e.train_loss);
        os << buf;
        if (e.val_loss) {
          std::snprintf(buf, sizeof buf, "%.6f", *e.val_loss);
          os << buf;
        }
        std::snprintf(buf, sizeof buf, ",%.3f", e.seconds);
        os << buf << '\n';
      }
    }
    std::printf("trained %s: %zu train / %zu val patches, final loss %.4f -> %s\n",
                job.c_str(), data.train_idx.size(), data.val_idx.size(),
                history.epochs.back().train_loss, ckpt.c_str());
  }

  json effective{{"command", "train"},       {"patches", patches_dir},
                 {"view", view_arg},         {"epochs", tc.epochs},
                 {"batch", tc.batch_size},   {"lr", tc.learning_rate},
                 {"l2", tc.l2},              {"base_filters", tc.net.base_filters},
                 {"depth", tc.net.depth},    {"augment", tc.augment},
                 {"seed", base_seed}};
  write_run_manifest(out_dir, "train", effective, base_seed);
  return 0;
}

// ---------------------------------------------------------------- predict --

int run_predict(const std::string& models_dir, const std::string& in_dir,
                const std::string& out_dir, int batch, bool force) {
  claim_output_dir(out_dir, force);
  ModelSet set = ModelSet::load_dir(models_dir);
  const std::vector<CasePaths> cases = discover_cases(in_dir);
  for (const auto& paths : cases) {
    NiftiInfo ref;
    MultiModalCase cse = read_case(paths, &ref);
    normalize_case(cse);
    const LabelVolume pred = predict_ensemble(set, cse, batch);
    const std::string out =
        (fs::path(out_dir) / (paths.case_id + "_pred.nii.gz")).string();
    write_nifti_labels(out, pred, &ref);
    std::printf("predicted %s\n", paths.case_id.c_str());
  }
  json effective{{"command", "predict"}, {"models", models_dir},
                 {"in", in_dir},         {"batch", batch},
                 {"n_models", set.models.size()}};
  write_run_manifest(out_dir, "predict", effective, 0);
  return 0;
}

// --------------------------------------------------------------- evaluate --

int run_evaluate(const std::string& pred_dir, const std::string& truth_dir,
                 const std::string& out_dir, bool force) {
  claim_output_dir(out_dir, force);
  const std::vector<CasePaths> cases = discover_cases(truth_dir);
  std::vector<CaseResult> results;
  for (const auto& paths : cases) {
    require(!paths.seg.empty(), ErrorKind::MissingLabels,
            "case '" + paths.case_id + "' has no ground truth");
    NiftiInfo info;
    const LabelVolume truth = read_nifti_labels(paths.seg, &info);
    const std::string pred_path =
        (fs::path(pred_dir) / (paths.case_id + "_pred.nii.gz")).string();
    require(fs::exists(pred_path), ErrorKind::IoError,
            "missing prediction: " + pred_path);
    const LabelVolume pred = read_nifti_labels(pred_path);
    const std::array<double, 3> spacing = {info.spacing[0], info.spacing[1],
                                           info.spacing[2]};
    results.push_back({paths.case_id, evaluate_case(pred, truth, spacing)});
  }
  write_cases_csv((fs::path(out_dir) / "cases.csv").string(), results);
  write_summary_csv((fs::path(out_dir) / "summary.csv").string(), results);
  write_boxplot_json((fs::path(out_dir) / "boxplot.json").string(), results);
  json effective{{"command", "evaluate"}, {"pred", pred_dir}, {"truth", truth_dir},
                 {"cases", results.size()}};
  write_run_manifest(out_dir, "evaluate", effective, 0);
  std::printf("evaluated %zu cases -> %s\n", results.size(), out_dir.c_str());
  return 0;
}

// ----------------------------------------------------------------- report --

std::vector<std::vector<std::string>> read_csv(const std::string& path) {
  std::ifstream is(path);
  require(is.good(), ErrorKind::IoError, "cannot open: " + path);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string> row;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) row.push_back(cell);
    rows.push_back(std::move(row));
  }
  return rows;
}

int run_report(const std::string& eval_dir, const std::string& out_file) {
  const auto summary = read_csv((fs::path(eval_dir) / "summary.csv").string());
  const auto cases = read_csv((fs::path(eval_dir) / "cases.csv").string());
  require(summary.size() > 1 && cases.size() > 1, ErrorKind::EmptyCohort,
          "evaluation outputs are empty");

  std::size_t n_cases = 0;
  {
    std::string prev;
    for (std::size_t i = 1; i < cases.size(); ++i) {
      require(cases[i].size() >= 4, ErrorKind::CorruptHeader, "bad cases.csv row");
      if (cases[i][0] != prev) {
        ++n_cases;
        prev = cases[i][0];
      }
    }
  }

  std::ofstream os(out_file);
  require(os.good(), ErrorKind::IoError, "cannot open for writing: " + out_file);
  os << "# Segmentation evaluation\n\n";
  os << "Cases evaluated: " << n_cases << "\n\n";
  os << "| region | metric | mean | stddev | median | q1 | q3 |\n";
  os << "|---|---|---|---|---|---|---|\n";
  for (std::size_t i = 1; i < summary.size(); ++i) {
    const auto& r = summary[i];
    require(r.size() >= 10, ErrorKind::CorruptHeader, "bad summary.csv row");
    os << "| " << r[0] << " | " << r[1] << " | " << r[3] << " | " << r[4] << " | " << r[5]
       << " | " << r[6] << " | " << r[7] << " |\n";
  }
  os << "\n## Per-case Dice\n\n| case | wt | tc | et |\n|---|---|---|---|\n";
  {
    std::string cur;
    std::array<std::string, 3> dice;
    auto flush = [&] {
      if (!cur.empty())
        os << "| " << cur << " | " << dice[0] << " | " << dice[1] << " | " << dice[2]
           << " |\n";
    };
    for (std::size_t i = 1; i < cases.size(); ++i) {
      const auto& r = cases[i];
      if (r[0] != cur) {
        flush();
        cur = r[0];
        dice = {};
      }
      if (r[2] != "dice") continue;
      for (std::size_t g = 0; g < 3; ++g)
        if (r[1] == kRegionNames[g]) dice[g] = r[3];
    }
    flush();
  }
  require(os.good(), ErrorKind::IoError, "write failed: " + out_file);
  std::printf("wrote %s\n", out_file.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-view residual U-Net segmentation toolkit"};
  app.require_subcommand(1);

  // phantom
  auto* ph = app.add_subcommand("phantom", "Generate a synthetic cohort");
  std::string ph_out, ph_config;
  bool ph_force = false;
  std::map<std::string, std::string> ph_over;
  ph->add_option("--out", ph_out, "Output cohort directory")->required();
  ph->add_option("--config", ph_config, "Config file (TOML or JSON)");
  ph->add_flag("--force", ph_force, "Overwrite existing outputs");
  for (const char* key : {"cases", "holdout", "dim", "dim_d", "dim_h", "dim_w", "seed"}) {
    std::string name = std::string("--") + key;
    if (name == "--cases") name += ",--n";
    if (name == "--dim") name += ",--dims";
    ph->add_option_function<std::string>(
        name, [&ph_over, key](const std::string& v) { ph_over[key] = v; });
  }
  for (const char* key : {"p_tumor", "p_tc", "p_et", "noise_sigma", "bias_strength"}) {
    ph->add_option_function<std::string>(
        std::string("--") + key, [&ph_over, key](const std::string& v) { ph_over[key] = v; });
  }

  // preprocess
  auto* pp = app.add_subcommand("preprocess", "Normalize cases and extract patches");
  std::string pp_in, pp_out, pp_config, pp_views = "axial,sagittal,coronal";
  int pp_patch = 64;
  double pp_frac = 0.2;
  bool pp_patient = false, pp_force = false;
  std::uint64_t pp_seed = 1234;
  pp->add_option("--in", pp_in, "Cohort directory")->required();
  pp->add_option("--out", pp_out, "Output directory")->required();
  pp->add_option("--config", pp_config, "Config file (TOML or JSON)");
  auto* o_patch = pp->add_option("--patch-size", pp_patch, "Patch side length");
  auto* o_frac = pp->add_option("--val-frac", pp_frac, "Validation fraction");
  auto* o_views = pp->add_option("--views", pp_views, "Comma-separated views");
  auto* o_pseed = pp->add_option("--seed", pp_seed, "Split seed");
  pp->add_flag("--patient-split", pp_patient, "Split by case instead of by patch");
  pp->add_flag("--force", pp_force, "Overwrite existing outputs");

  // train
  auto* tr = app.add_subcommand("train", "Train segmentation models");
  std::string tr_patches, tr_out, tr_config, tr_view = "all";
  TrainConfig tr_cfg;
  tr_cfg.net.base_filters = 8;
  tr_cfg.epochs = 10;
  bool tr_noaug = false, tr_force = false;
  tr->add_option("--patches", tr_patches, "Preprocess output directory (flag or config)");
  tr->add_option("--out", tr_out, "Checkpoint directory (flag or config)");
  tr->add_option("--config", tr_config, "Config file (TOML or JSON)");
  auto* o_view = tr->add_option("--view,--regime", tr_view,
                                "axial|sagittal|coronal|mixed|all; the regime names "
                                "per_view_ensemble and mixed_views are synonyms");
  auto* o_epochs = tr->add_option("--epochs", tr_cfg.epochs, "Training epochs");
  auto* o_batch = tr->add_option("--batch", tr_cfg.batch_size, "Batch size");
  auto* o_lr = tr->add_option("--lr", tr_cfg.learning_rate, "Learning rate");
  auto* o_l2 = tr->add_option("--l2", tr_cfg.l2, "L2 penalty on conv kernels");
  auto* o_base = tr->add_option("--base-filters", tr_cfg.net.base_filters, "First-level width");
  auto* o_depth = tr->add_option("--depth", tr_cfg.net.depth, "Downsampling levels");
  auto* o_tseed = tr->add_option("--seed", tr_cfg.seed, "Training seed");
  tr->add_flag("--no-augment", tr_noaug, "Disable training augmentation");
  tr->add_flag("--force", tr_force, "Overwrite existing outputs");

  // predict
  auto* pr = app.add_subcommand("predict", "Segment cases with a model ensemble");
  std::string pr_models, pr_in, pr_out;
  int pr_batch = 8;
  bool pr_force = false;
  pr->add_option("--models", pr_models, "Checkpoint directory")->required();
  pr->add_option("--in", pr_in, "Cohort directory")->required();
  pr->add_option("--out", pr_out, "Output directory")->required();
  pr->add_option("--batch", pr_batch, "Slices per forward pass");
  pr->add_flag("--force", pr_force, "Overwrite existing outputs");

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "Score predictions against ground truth");
  std::string ev_pred, ev_truth, ev_out;
  bool ev_force = false;
  ev->add_option("--pred", ev_pred, "Prediction directory")->required();
  ev->add_option("--truth,--gt", ev_truth, "Cohort directory with ground truth")->required();
  ev->add_option("--out", ev_out, "Output directory")->required();
  ev->add_flag("--force", ev_force, "Overwrite existing outputs");

  // report
  auto* rp = app.add_subcommand("report", "Render evaluation results as markdown");
  std::string rp_eval, rp_out = "report.md";
  rp->add_option("--eval", rp_eval, "Evaluation directory")->required();
  rp->add_option("--out", rp_out, "Report file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (ph->parsed()) return run_phantom(ph_config, ph_out, ph_over, ph_force);
    if (pp->parsed())
      return run_preprocess(pp_config, pp_in, pp_out, pp_views, pp_patch, pp_frac,
                            pp_patient, pp_seed, pp_force, o_patch->count() > 0,
                            o_frac->count() > 0, o_pseed->count() > 0, o_views->count() > 0);
    if (tr->parsed()) {
      std::map<std::string, bool> have{
          {"epochs", o_epochs->count() > 0}, {"batch", o_batch->count() > 0},
          {"lr", o_lr->count() > 0},         {"l2", o_l2->count() > 0},
          {"base-filters", o_base->count() > 0}, {"depth", o_depth->count() > 0},
          {"seed", o_tseed->count() > 0},    {"view", o_view->count() > 0}};
      return run_train(tr_config, tr_patches, tr_out, tr_view, tr_cfg, tr_noaug, tr_force, have);
    }
    if (pr->parsed()) return run_predict(pr_models, pr_in, pr_out, pr_batch, pr_force);
    if (ev->parsed()) return run_evaluate(ev_pred, ev_truth, ev_out, ev_force);
    if (rp->parsed()) return run_report(rp_eval, rp_out);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return e.kind() == ErrorKind::UsageError ? 2 : 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: internal: %s\n", e.what());
    return 1;
  }
  return 0;
}
