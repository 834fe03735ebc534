#pragma once

// Curriculum training loop. Each step draws a fresh batch of tasks at the
// current (d_cur, k_cur), zeroes all but the first d_cur feature coordinates,
// and takes one Adam step on the loss averaged over every query position of
// every prompt in the batch.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "icl/checkpoint.hpp"
#include "icl/parallel.hpp"
#include "icl/random.hpp"
#include "icl/tasks.hpp"
#include "icl/transformer.hpp"

namespace icl {

struct CurriculumConfig {
  bool enabled = true;
  std::size_t period = 2000;
  std::size_t d_start = 5;
  std::size_t k_start = 11;
  std::size_t d_step = 1;
  std::size_t k_step = 2;
  friend bool operator==(const CurriculumConfig&, const CurriculumConfig&) = default;
};

struct TrainConfig {
  ModelConfig model;
  TaskConfig task;  ///< template; its k is replaced by the curriculum's k_cur
  std::size_t batch_size = 64;
  std::size_t total_steps = 2000;
  CurriculumConfig curriculum;
  double lr = 3e-4;
  std::size_t eval_every = 100;
  std::size_t checkpoint_every = 0;  ///< 0: only the final state
  std::uint64_t seed = 0;
  std::size_t jobs = 1;

  [[nodiscard]] std::size_t k_max() const noexcept { return 2 * task.d + 1; }

  void validate() const {
    task.validate();
    model.validate();
    if (batch_size == 0) throw InvalidInput("train.batch_size must be >= 1");
    if (curriculum.enabled && curriculum.period == 0) throw InvalidInput("train.curriculum_period must be >= 1");
    if (!(lr > 0.0)) throw InvalidInput("train.lr must be > 0");
    if (model.d_input != task.d) throw InvalidInput("model.d_input must equal task.d");
    if (model.max_seq < 2 * k_max() + 1) {
      throw InvalidInput("model.max_seq must be >= 2(2d+1)+1 = " + std::to_string(2 * k_max() + 1));
    }
  }
};

struct CurriculumState {
  std::size_t d_cur = 0;
  std::size_t k_cur = 0;
  std::size_t step = 0;
  friend bool operator==(const CurriculumState&, const CurriculumState&) = default;
};

[[nodiscard]] inline CurriculumState schedule_at(std::size_t step, const TrainConfig& cfg) {
  const std::size_t d = cfg.task.d;
  const std::size_t k_cap = cfg.k_max();
  if (!cfg.curriculum.enabled) return {d, k_cap, step};
  const std::size_t m = step / cfg.curriculum.period;
  // Saturating arithmetic: m can be huge for very large steps.
  auto grow = [m](std::size_t start, std::size_t inc, std::size_t cap) {
    if (start >= cap) return cap;
    if (inc == 0) return start;
    return m >= (cap - start + inc - 1) / inc ? cap : start + m * inc;
  };
  return {grow(cfg.curriculum.d_start, cfg.curriculum.d_step, d), grow(cfg.curriculum.k_start, cfg.curriculum.k_step, k_cap),
          step};
}

struct MetricRow {
  std::size_t step = 0;
  std::size_t d_cur = 0;
  std::size_t k_cur = 0;
  double loss = 0.0;
  friend bool operator==(const MetricRow&, const MetricRow&) = default;
};

/// Fresh initial state: parameters, zeroed Adam moments and the data stream.
[[nodiscard]] inline ModelState init_state(const TrainConfig& cfg) {
  cfg.validate();
  ModelState s;
  s.params = init_params(cfg.model, derive_seed(cfg.seed, 1));
  s.optimizer = make_adam(s.params, cfg.lr);
  s.step = 0;
  s.rng = Rng(cfg.seed, 2).state();
  return s;
}

/// One task at the curriculum position; features masked to d_cur before
/// labels are formed.
[[nodiscard]] inline TaskInstance sample_training_task(const TrainConfig& cfg, const CurriculumState& cur,
                                                       std::uint64_t seed) {
  TaskConfig t = cfg.task;
  t.k = cur.k_cur;
  t.seed = seed;
  return build_task(t, cur.d_cur);
}

[[nodiscard]] inline std::vector<TaskInstance> sample_training_batch(const TrainConfig& cfg,
                                                                     const CurriculumState& cur, Rng& rng) {
  std::vector<std::uint64_t> seeds(cfg.batch_size);
  for (auto& s : seeds) s = rng.next_u64();
  std::vector<TaskInstance> batch(cfg.batch_size);
  parallel_for(batch.size(), cfg.jobs, [&](std::size_t i) { batch[i] = sample_training_task(cfg, cur, seeds[i]); });
  return batch;
}

struct BatchGradient {
  double loss = 0.0;
  std::vector<double> grads;
};

/// Mean loss over every query position of every full-length prompt, and its
/// gradient. Per-example gradients are summed in batch order regardless of
/// `jobs`, so the result is independent of the thread count.
[[nodiscard]] inline BatchGradient batch_loss_and_grad(const Parameters& params, std::span<const TaskInstance> batch,
                                                       std::size_t k, std::size_t jobs = 1) {
  if (batch.empty()) throw InvalidInput("batch_loss_and_grad: empty batch");
  const LossKind kind = params.config.loss;
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  BatchGradient out;
  out.grads.assign(params.values.size(), 0.0);

  jobs = std::max<std::size_t>(1, std::min(jobs, batch.size()));
  std::vector<std::vector<double>> buffers(jobs, std::vector<double>(params.values.size()));
  std::vector<double> losses(batch.size());
  for (std::size_t begin = 0; begin < batch.size(); begin += jobs) {
    const std::size_t count = std::min(jobs, batch.size() - begin);
    parallel_for(count, jobs, [&](std::size_t slot) {
      const std::size_t i = begin + slot;
      const PromptSequence prompt = assemble_prompt(batch[i], k);
      const ForwardTrace tr = forward_trace(params, prompt);
      losses[i] = loss(tr.predictions, prompt.targets, kind);
      Vector g = loss_grad(tr.predictions, prompt.targets, kind);
      for (auto& v : g) v *= inv_b;
      auto& buf = buffers[slot];
      std::fill(buf.begin(), buf.end(), 0.0);
      backward_accumulate(params, tr, g, buf);
    });
    for (std::size_t slot = 0; slot < count; ++slot) {
      const auto& buf = buffers[slot];
      for (std::size_t j = 0; j < buf.size(); ++j) out.grads[j] += buf[j];
    }
  }
  for (double l : losses) out.loss += l;
  out.loss *= inv_b;
  return out;
}

struct TrainHooks {
  std::function<void(const MetricRow&)> on_log;
  /// Called with the state after `state.step` completed steps.
  std::function<void(const ModelState&)> on_checkpoint;
};

struct TrainResult {
  ModelState state;
  std::vector<MetricRow> log;
  std::vector<double> step_losses;  ///< one entry per step executed in this call
};

/// Continues `state` until cfg.total_steps. Resuming from a checkpoint taken
/// at step s reproduces the uninterrupted trajectory exactly.
[[nodiscard]] inline TrainResult train(const TrainConfig& cfg, ModelState state, const TrainHooks& hooks = {}) {
  cfg.validate();
  if (state.params.config != cfg.model) throw InvalidInput("train: checkpoint model config differs from train config");
  TrainResult result;
  Rng rng = Rng::from_state(state.rng);
  bool saved_last = false;
  while (state.step < cfg.total_steps) {
    const CurriculumState cur = schedule_at(state.step, cfg);
    const auto batch = sample_training_batch(cfg, cur, rng);
    BatchGradient bg = batch_loss_and_grad(state.params, batch, cur.k_cur, cfg.jobs);
    if (!std::isfinite(bg.loss)) {
      throw NumericFailure("train: non-finite loss at step " + std::to_string(state.step));
    }
    result.step_losses.push_back(bg.loss);
    if (cfg.eval_every > 0 && state.step % cfg.eval_every == 0) {
      MetricRow row{state.step, cur.d_cur, cur.k_cur, bg.loss};
      result.log.push_back(row);
      if (hooks.on_log) hooks.on_log(row);
    }
    adam_step(state.params, bg.grads, state.optimizer);
    ++state.step;
    state.rng = rng.state();
    saved_last = false;
    if (cfg.checkpoint_every > 0 && state.step % cfg.checkpoint_every == 0 && hooks.on_checkpoint) {
      hooks.on_checkpoint(state);
      saved_last = true;
    }
  }
  if (!saved_last && hooks.on_checkpoint) hooks.on_checkpoint(state);
  result.state = std::move(state);
  return result;
}

[[nodiscard]] inline TrainResult train(const TrainConfig& cfg, const TrainHooks& hooks = {}) {
  return train(cfg, init_state(cfg), hooks);
}

}  // namespace icl
