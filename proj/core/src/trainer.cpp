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

#include "gldet/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "gldet/dataset.hpp"
#include "gldet/error.hpp"
#include "gldet/evaluator.hpp"
#include "gldet/parallel.hpp"
#include "gldet/rng.hpp"

namespace gldet {

namespace fs = std::filesystem;

namespace {

// Fixed number of gradient accumulators; sample p of a batch always lands in
// slot p % kGradientSlots.
constexpr int kGradientSlots = 8;

double Softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

}  // namespace

void TrainConfig::Validate() const {
  if (batch_size < 1) throw ArgumentError("batch_size must be >= 1");
  if (!(base_lr > 0.0)) throw ArgumentError("base_lr must be > 0");
  if (epochs < 0) throw ArgumentError("epochs must be >= 0");
  augmentation.Validate();
}

nlohmann::json TrainLogRecord::ToJson() const {
  nlohmann::json j = {{"kind", kind == Kind::kStep ? "step" : "epoch"},
                      {"epoch", epoch},
                      {"step", step},
                      {"loss", loss},
                      {"train_accuracy", train_accuracy},
                      {"wall_time", wall_time}};
  if (val_ap) j["val_ap"] = *val_ap;
  return j;
}

double BceLoss(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw ArgumentError("scores and labels differ in length");
  if (scores.empty()) throw ArgumentError("BCE of an empty batch");
  double sum = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const double s = scores[i];
    sum -= labels[i] == 1 ? std::log(s) : std::log1p(-s);
  }
  return sum / static_cast<double>(scores.size());
}

double BceWithLogits(std::span<const double> logits, std::span<const int> labels) {
  if (logits.size() != labels.size()) throw ArgumentError("logits and labels differ in length");
  if (logits.empty()) throw ArgumentError("BCE of an empty batch");
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    sum += Softplus(logits[i]) - labels[i] * logits[i];
  }
  return sum / static_cast<double>(logits.size());
}

TrainResult Train(DetectorModel& model, const fs::path& manifest, const TrainConfig& cfg,
                  const std::optional<fs::path>& val_manifest,
                  const TrainCallback& on_record) {
  cfg.Validate();
  const std::vector<ManifestEntry> entries = ReadManifest(manifest);
  if (entries.empty()) throw ValidationError("training manifest is empty");
  const bool has_real = std::any_of(entries.begin(), entries.end(),
                                    [](const auto& e) { return e.label == Label::kReal; });
  const bool has_fake = std::any_of(entries.begin(), entries.end(),
                                    [](const auto& e) { return e.label == Label::kFake; });
  if (!has_real || !has_fake) {
    throw ValidationError("training manifest must contain both real and fake images");
  }

  std::ofstream log;
  fs::path ckpt_dir;
  if (!cfg.output_dir.empty()) {
    ckpt_dir = cfg.output_dir / "checkpoints";
    fs::create_directories(ckpt_dir);
    log.open(cfg.output_dir / "train_log.jsonl", std::ios::trunc);
    if (!log) throw IoError("cannot write training log in '" + cfg.output_dir.string() + "'");
  }
  auto emit = [&](const TrainLogRecord& r) {
    if (log.is_open()) log << r.ToJson().dump() << '\n' << std::flush;
    if (on_record) on_record(r);
  };

  Adam<float> opt_global(model.global_backbone().parameters().size(), cfg.adam);
  std::optional<Adam<float>> opt_local;
  if (!model.shares_weights()) {
    opt_local.emplace(model.local_backbone().parameters().size(), cfg.adam);
  }
  Adam<double> opt_fusion(model.fusion().parameters().size(), cfg.adam);

  std::vector<DetectorGradients> slots(kGradientSlots, model.ZeroGradients());
  DetectorGradients total = model.ZeroGradients();

  const auto start = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  };

  TrainResult result;
  int global_step = 0;
  const std::size_t n = entries.size();
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle_rng = MakeRng(cfg.seed, {static_cast<std::uint64_t>(epoch), 0x5u});
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    double epoch_loss = 0.0;
    std::size_t epoch_correct = 0;
    for (std::size_t b0 = 0; b0 < n; b0 += cfg.batch_size) {
      const std::size_t b1 = std::min(n, b0 + static_cast<std::size_t>(cfg.batch_size));
      const std::size_t batch = b1 - b0;
      std::vector<double> logits(batch);
      std::vector<int> labels(batch);
      for (auto& s : slots) s.SetZero();

      const std::size_t used_slots = std::min<std::size_t>(kGradientSlots, batch);
      ParallelFor(used_slots, cfg.workers, [&](int, std::size_t slot) {
        for (std::size_t p = slot; p < batch; p += kGradientSlots) {
          const std::size_t idx = order[b0 + p];
          const ManifestEntry& e = entries[idx];
          Rng aug_rng = MakeRng(cfg.seed, {static_cast<std::uint64_t>(epoch), idx, 0xa7u});
          const Image img = ApplyAugmentPlan(LoadImage(ResolveEntryPath(manifest, e)),
                                             DrawAugmentPlan(cfg.augmentation, aug_rng));
          DetectorTrace trace;
          const Detection d = model.Forward(img, &trace);
          const int y = static_cast<int>(e.label);
          logits[p] = d.logit;
          labels[p] = y;
          const double d_logit = (d.score - y) / static_cast<double>(batch);
          model.Backward(trace, d_logit, slots[slot]);
        }
      });

      const double loss = BceWithLogits(logits, labels);
      if (!std::isfinite(loss)) {
        throw NumericError("non-finite loss at epoch " + std::to_string(epoch + 1) +
                           ", step " + std::to_string(global_step + 1));
      }
      total = slots[0];
      for (std::size_t s = 1; s < used_slots; ++s) total.Add(slots[s]);
      opt_global.Step(model.global_backbone().parameters().values(), total.global, cfg.base_lr);
      if (opt_local) {
        opt_local->Step(model.local_backbone().parameters().values(), total.local, cfg.base_lr);
      }
      opt_fusion.Step(model.fusion().parameters().values(), total.fusion, cfg.base_lr);

      std::size_t correct = 0;
      for (std::size_t p = 0; p < batch; ++p) {
        correct += static_cast<std::size_t>((logits[p] > 0.0) == (labels[p] == 1));
      }
      epoch_loss += loss * static_cast<double>(batch);
      epoch_correct += correct;
      ++global_step;

      TrainLogRecord r;
      r.kind = TrainLogRecord::Kind::kStep;
      r.epoch = epoch + 1;
      r.step = global_step;
      r.loss = loss;
      r.train_accuracy = static_cast<double>(correct) / static_cast<double>(batch);
      r.wall_time = elapsed();
      result.steps.push_back(r);
      emit(r);
    }

    TrainLogRecord r;
    r.kind = TrainLogRecord::Kind::kEpoch;
    r.epoch = epoch + 1;
    r.step = global_step;
    r.loss = epoch_loss / static_cast<double>(n);
    r.train_accuracy = static_cast<double>(epoch_correct) / static_cast<double>(n);
    if (val_manifest) r.val_ap = GlobalAp(ScoreManifest(model, *val_manifest, cfg.workers));
    if (!ckpt_dir.empty()) {
      char name[32];
      std::snprintf(name, sizeof(name), "epoch_%03d.ckpt", epoch + 1);
      model.Save(ckpt_dir / name);
    }
    r.wall_time = elapsed();
    result.epochs.push_back(r);
    emit(r);
  }
  return result;
}

}  // namespace gldet
