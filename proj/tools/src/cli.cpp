/*
 * Copyright 2026 The gldet Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "gldet/cli/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "gldet/cli/config.hpp"
#include "gldet/dataset.hpp"
#include "gldet/detector.hpp"
#include "gldet/error.hpp"
#include "gldet/evaluator.hpp"
#include "gldet/image.hpp"
#include "gldet/psm.hpp"
#include "gldet/rng.hpp"
#include "gldet/trainer.hpp"

namespace gldet::cli {

namespace fs = std::filesystem;

namespace {

// Stream tag for the model initialisation seed.
constexpr std::uint64_t kModelInitStream = 0x6d6f64656cULL;

std::string Escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') {
      out += '\\';
      out += c;
    } else if (c == '\n') {
      out += "\\n";
    } else {
      out += c;
    }
  }
  return out;
}

void PrintError(std::ostream& err, const std::string& kind, const std::string& message) {
  err << "error: kind=" << kind << " message=\"" << Escape(message) << "\"\n";
}

// Options shared by every subcommand.
struct CommonOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::vector<std::string> overrides;
  std::string output_dir;
};

void AddCommon(CLI::App* cmd, CommonOptions& o, bool output_required) {
  cmd->add_option("--config", o.config_path, "Flat key = value config file")
      ->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seed, "Seed (overrides the 'seed' key)");
  cmd->add_option("--workers", o.workers, "Worker threads for loading and scoring")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--set", o.overrides, "Override a config key, key=value (repeatable)");
  auto* out = cmd->add_option("--output-dir", o.output_dir, "Directory for all outputs");
  if (output_required) out->required();
}

// Defaults, then config file, then --set, then dedicated flags.
ConfigStore BuildStore(const CommonOptions& o,
                       const std::vector<std::pair<std::string, std::string>>& flags) {
  ConfigStore store;
  if (!o.config_path.empty()) store.LoadFile(o.config_path);
  for (const std::string& s : o.overrides) store.ApplyOverride(s);
  for (const auto& [k, v] : flags) store.Set(k, v);
  if (o.seed) store.Set("seed", std::to_string(*o.seed));
  if (o.workers) store.Set("workers", std::to_string(*o.workers));
  return store;
}

template <typename T>
void MaybeFlag(std::vector<std::pair<std::string, std::string>>& flags,
               const std::string& key, const std::optional<T>& value) {
  if (!value) return;
  if constexpr (std::is_same_v<T, std::string>) {
    flags.emplace_back(key, *value);
  } else {
    std::ostringstream ss;
    ss << *value;
    flags.emplace_back(key, ss.str());
  }
}

void PrepareOutput(const std::string& dir, const ConfigStore& store) {
  fs::create_directories(dir);
  store.WriteSnapshot(fs::path(dir) / kSnapshotName);
}

std::string FormatRect(const Rect& r) {
  return std::to_string(r.x) + "," + std::to_string(r.y) + "," + std::to_string(r.w) +
         "," + std::to_string(r.h);
}

std::string FormatProbability(double p) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", p);
  return buf;
}

// Thrown inside a command for misuse that CLI11 cannot detect.
struct UsageError : ArgumentError {
  using ArgumentError::ArgumentError;
};

}  // namespace

int Run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"gldet: global and local feature detector for synthesized images", "gldet"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "gldet 0.1.0");

  // gen-toy
  CommonOptions gen_common;
  std::optional<int> gen_n_real, gen_n_fake, gen_image_size, gen_artifact_size;
  auto* gen = app.add_subcommand("gen-toy", "Generate the procedural toy dataset");
  AddCommon(gen, gen_common, true);
  gen->add_option("--n-real", gen_n_real, "Real images (toy.n_real)");
  gen->add_option("--n-fake", gen_n_fake, "Fake images (toy.n_fake)");
  gen->add_option("--image-size", gen_image_size, "Image side in pixels (toy.image_size)");
  gen->add_option("--artifact-size", gen_artifact_size,
                  "Planted checkerboard side (toy.artifact_size)");

  // train
  CommonOptions train_common;
  std::string train_manifest, train_val, train_init;
  std::optional<int> train_epochs, train_batch;
  std::optional<double> train_lr;
  std::optional<std::string> train_arch;
  auto* train = app.add_subcommand("train", "Train a detector");
  AddCommon(train, train_common, true);
  train->add_option("--manifest", train_manifest, "Training manifest")
      ->required()
      ->check(CLI::ExistingFile);
  train->add_option("--val-manifest", train_val, "Validation manifest scored per epoch")
      ->check(CLI::ExistingFile);
  train->add_option("--checkpoint", train_init, "Initialise weights from a checkpoint")
      ->check(CLI::ExistingFile);
  train->add_option("--epochs", train_epochs, "Epochs (train.epochs)");
  train->add_option("--batch-size", train_batch, "Minibatch size (train.batch_size)");
  train->add_option("--lr", train_lr, "Adam learning rate (train.lr)");
  train->add_option("--architecture", train_arch, "Backbone (model.architecture)");

  // eval
  CommonOptions eval_common;
  std::string eval_ckpt, eval_manifest;
  auto* eval = app.add_subcommand("eval", "Score a manifest and write the AP report");
  AddCommon(eval, eval_common, true);
  eval->add_option("--checkpoint", eval_ckpt, "Model checkpoint")
      ->required()
      ->check(CLI::ExistingFile);
  eval->add_option("--manifest", eval_manifest, "Test manifest")
      ->required()
      ->check(CLI::ExistingFile);

  // detect
  CommonOptions det_common;
  std::string det_ckpt;
  std::vector<std::string> det_images;
  bool det_proposals = false;
  auto* detect = app.add_subcommand("detect", "Score single images");
  AddCommon(detect, det_common, false);
  detect->add_option("--checkpoint", det_ckpt, "Model checkpoint")
      ->required()
      ->check(CLI::ExistingFile);
  detect->add_option("--image", det_images, "Image to score (repeatable)")
      ->required()
      ->check(CLI::ExistingFile);
  detect->add_flag("--dump-proposals", det_proposals,
                   "Write proposals.jsonl into --output-dir");

  // robustness
  CommonOptions rob_common;
  std::string rob_ckpt, rob_manifest;
  std::optional<std::string> rob_blur, rob_jpeg;
  auto* rob = app.add_subcommand("robustness", "Blur and JPEG robustness sweep");
  AddCommon(rob, rob_common, true);
  rob->add_option("--checkpoint", rob_ckpt, "Model checkpoint")
      ->required()
      ->check(CLI::ExistingFile);
  rob->add_option("--manifest", rob_manifest, "Test manifest")
      ->required()
      ->check(CLI::ExistingFile);
  rob->add_option("--blur-sigmas", rob_blur, "Comma list (robustness.blur_sigmas)");
  rob->add_option("--jpeg-qualities", rob_jpeg, "Comma list (robustness.jpeg_qualities)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForVersion& e) {
    out << e.what() << "\n";
    return kExitOk;
  } catch (const CLI::Success&) {
    out << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    PrintError(err, "usage", e.what());
    return kExitUsage;
  }

  // Config assembly errors are usage errors; everything later is runtime.
  ConfigStore store;
  std::vector<std::pair<std::string, std::string>> flags;
  const CommonOptions* common = nullptr;
  try {
    if (gen->parsed()) {
      MaybeFlag(flags, "toy.n_real", gen_n_real);
      MaybeFlag(flags, "toy.n_fake", gen_n_fake);
      MaybeFlag(flags, "toy.image_size", gen_image_size);
      MaybeFlag(flags, "toy.artifact_size", gen_artifact_size);
      common = &gen_common;
    } else if (train->parsed()) {
      MaybeFlag(flags, "train.epochs", train_epochs);
      MaybeFlag(flags, "train.batch_size", train_batch);
      MaybeFlag(flags, "train.lr", train_lr);
      MaybeFlag(flags, "model.architecture", train_arch);
      common = &train_common;
    } else if (eval->parsed()) {
      common = &eval_common;
    } else if (detect->parsed()) {
      if (det_proposals && det_common.output_dir.empty()) {
        throw UsageError("--dump-proposals requires --output-dir");
      }
      common = &det_common;
    } else {
      MaybeFlag(flags, "robustness.blur_sigmas", rob_blur);
      MaybeFlag(flags, "robustness.jpeg_qualities", rob_jpeg);
      common = &rob_common;
    }
    store = BuildStore(*common, flags);
    // Parse every typed key up front so bad values fail as usage errors.
    MakeToyConfig(store);
    MakeDetectorConfig(store);
    MakeTrainConfig(store);
    MakeRobustnessConfig(store);
  } catch (const IoError& e) {
    PrintError(err, e.kind(), e.what());
    return kExitRuntime;
  } catch (const Error& e) {
    PrintError(err, "usage", e.what());
    return kExitUsage;
  }

  try {
    const int workers = static_cast<int>(store.GetInt("workers"));
    const fs::path out_dir = common->output_dir;

    if (gen->parsed()) {
      PrepareOutput(out_dir, store);
      const fs::path manifest = GenerateToyDataset(MakeToyConfig(store), out_dir);
      out << "manifest " << manifest.string() << "\n";
    } else if (train->parsed()) {
      const DetectorConfig dc = MakeDetectorConfig(store);
      const TrainConfig base = MakeTrainConfig(store);
      DetectorModel model = train_init.empty()
                                ? DetectorModel(dc, DeriveSeed(base.seed, {kModelInitStream}))
                                : DetectorModel::Load(train_init);
      if (!(model.config() == dc)) {
        throw ValidationError("checkpoint model config differs from the effective config");
      }
      PrepareOutput(out_dir, store);
      TrainConfig cfg = base;
      cfg.output_dir = out_dir;
      std::optional<fs::path> val;
      if (!train_val.empty()) val = train_val;
      const TrainResult result = Train(model, train_manifest, cfg, val);
      const fs::path final_path = out_dir / "model.ckpt";
      model.Save(final_path);
      const TrainLogRecord& last = result.epochs.back();
      out << "checkpoint " << final_path.string() << " steps " << last.step << " loss "
          << last.loss << " train_accuracy " << last.train_accuracy;
      if (last.val_ap) out << " val_ap " << *last.val_ap;
      out << "\n";
    } else if (eval->parsed()) {
      const DetectorModel model = DetectorModel::Load(eval_ckpt);
      PrepareOutput(out_dir, store);
      const std::vector<ScoredImage> scored = ScoreManifest(model, eval_manifest, workers);
      EvalReport report = BuildReport(scored);
      report.config = {{"checkpoint", eval_ckpt},
                       {"manifest", eval_manifest},
                       {"model", model.config().ToJson()}};
      for (const std::string& w : report.warnings) err << "warning: " << w << "\n";
      WriteScoreDump(out_dir / "scores.jsonl", scored);
      WriteReport(out_dir / "report.json", report);
      out << "global_ap " << report.global_ap;
      if (report.total_map) out << " total_map " << *report.total_map;
      out << " n_images " << report.n_images << "\n";
    } else if (detect->parsed()) {
      const DetectorModel model = DetectorModel::Load(det_ckpt);
      std::ofstream proposals;
      if (!out_dir.empty()) {
        PrepareOutput(out_dir, store);
        if (det_proposals) {
          proposals.open(out_dir / "proposals.jsonl", std::ios::trunc);
          if (!proposals) throw IoError("cannot write proposals.jsonl");
        }
      }
      for (const std::string& path : det_images) {
        const Detection d = model.Forward(LoadImage(path));
        out << path << "\t" << FormatProbability(d.score);
        for (const PatchProposal& p : d.proposals) out << "\t" << FormatRect(p.crop_rect);
        out << "\n";
        if (proposals.is_open()) WriteProposalRecord(proposals, path, d.proposals);
      }
    } else {
      const DetectorModel model = DetectorModel::Load(rob_ckpt);
      PrepareOutput(out_dir, store);
      const RobustnessCurves curves =
          RobustnessSweep(model, rob_manifest, MakeRobustnessConfig(store), workers);
      WriteCurveCsv(out_dir / "blur_curve.csv", "sigma", curves.blur);
      WriteCurveCsv(out_dir / "jpeg_curve.csv", "quality", curves.jpeg);
      EvalReport report;
      report.robustness = curves;
      nlohmann::json j = {{"unperturbed_global_ap", curves.unperturbed_global_ap}};
      for (const auto& [name, curve] :
           {std::pair{"blur", &curves.blur}, std::pair{"jpeg", &curves.jpeg}}) {
        nlohmann::json arr = nlohmann::json::array();
        for (const CurvePoint& p : *curve) {
          arr.push_back({{"parameter", p.parameter}, {"global_ap", p.global_ap}});
        }
        j[name] = arr;
      }
      std::ofstream f(out_dir / "robustness.json", std::ios::trunc);
      if (!f) throw IoError("cannot write robustness.json");
      f << j.dump(2) << "\n";
      out << "unperturbed_global_ap " << curves.unperturbed_global_ap << "\n";
    }
  } catch (const Error& e) {
    PrintError(err, e.kind(), e.what());
    return kExitRuntime;
  } catch (const std::exception& e) {
    PrintError(err, "internal", e.what());
    return kExitRuntime;
  }
  return kExitOk;
}

int Run(int argc, const char* const* argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return Run(args, std::cout, std::cerr);
}

}  // namespace gldet::cli
