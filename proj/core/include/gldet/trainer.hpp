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

#ifndef GLDET_TRAINER_HPP_
#define GLDET_TRAINER_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gldet/augment.hpp"
#include "gldet/detector.hpp"
#include "gldet/optim.hpp"

namespace gldet {

struct TrainConfig {
  int batch_size = 64;
  double base_lr = 1e-4;
  int epochs = 1;
  std::uint64_t seed = 0;
  AugmentationConfig augmentation;
  AdamOptions adam;
  int workers = 1;
  // Log and per-epoch checkpoints go here when non-empty.
  std::filesystem::path output_dir;

  void Validate() const;
};

struct TrainLogRecord {
  enum class Kind { kStep, kEpoch };
  Kind kind = Kind::kStep;
  int epoch = 0;
  int step = 0;  // global optimizer step count after this record
  double loss = 0.0;
  double train_accuracy = 0.0;
  std::optional<double> val_ap;
  double wall_time = 0.0;  // seconds since training started

  nlohmann::json ToJson() const;
};

struct TrainResult {
  std::vector<TrainLogRecord> steps;
  std::vector<TrainLogRecord> epochs;
};

// Mean binary cross-entropy of probabilities in (0, 1).
double BceLoss(std::span<const double> scores, std::span<const int> labels);
// Same objective evaluated from logits: softplus(z) - y z.
double BceWithLogits(std::span<const double> logits, std::span<const int> labels);

using TrainCallback = std::function<void(const TrainLogRecord&)>;

// Minibatch Adam on the BCE objective. Every epoch reshuffles from
// (seed, epoch) and redraws which samples get blur + JPEG augmentation.
// Gradients are reduced in a fixed order, so the loss trajectory depends
// only on the seed and not on `workers`.
TrainResult Train(DetectorModel& model, const std::filesystem::path& manifest,
                  const TrainConfig& cfg,
                  const std::optional<std::filesystem::path>& val_manifest = std::nullopt,
                  const TrainCallback& on_record = {});

}  // namespace gldet

#endif  // GLDET_TRAINER_HPP_
