#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "tem/common.hpp"
#include "tem/corpus.hpp"
#include "tem/encoder.hpp"

namespace tem {

struct TrainConfig {
    int batch_size = 5;
    int epochs = 50;
    double peak_lr = 2e-3;
    double weight_decay = 0.01;
    double warmup_fraction = 0.1;
    double similarity_scale = 20.0;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    std::uint64_t seed = 0;
};

/// Throws on out-of-range fields. batch_size >= 2: in-batch negatives need
/// at least one negative.
void validate_config(const TrainConfig& config);

struct TrainBatch {
    std::vector<std::string> anchors;
    std::vector<std::string> positives;
};

struct TensorMoments {
    Matrix m;
    Matrix v;
};

struct OptimizerState {
    std::int64_t step = 0;
    TensorMoments token_emb;
    TensorMoments projection;
};

OptimizerState init_optimizer(const EncoderModel& model);

struct BatchLoss {
    double loss = 0.0;
    std::vector<double> per_sample;
};

/// Loss from a precomputed score matrix S (rows: anchors, cols: positives):
/// per-sample -S_ii + logsumexp_j S_ij, batch mean. Row-wise max shift.
BatchLoss mnr_loss_from_scores(const Matrix& scores);

/// In-batch-negatives ranking loss: S_ij = scale * (q_i . p_j) over the
/// encoded anchor/positive unit vectors; each sample's positive competes
/// against every other sample's positive in the batch.
BatchLoss mnr_loss(const EncoderModel& model, const TrainBatch& batch, double scale);

struct LossGrads {
    double loss = 0.0;
    std::vector<double> per_sample;
    Matrix d_token_emb;
    Matrix d_projection;
};

/// Analytic gradients of the batch loss for every trainable tensor.
/// Vocabulary rows not touched by the batch have exactly zero gradient.
LossGrads mnr_loss_grad(const EncoderModel& model, const TrainBatch& batch, double scale);

/// One bias-corrected update of a single tensor. Decay is decoupled and
/// multiplicative: w <- w*(1 - lr*weight_decay) - lr*mhat/(sqrt(vhat)+eps),
/// so a zero-gradient step shrinks weights by exactly (1 - lr*weight_decay).
/// step_t is the 1-based optimizer step shared by all tensors.
void adamw_step(Matrix& weights, const Matrix& grads, TensorMoments& moments,
                std::int64_t step_t, double lr, const TrainConfig& config);

/// Applies adamw_step to both model tensors under one incremented step count.
void optimizer_step(EncoderModel& model, const LossGrads& grads, OptimizerState& state,
                    double lr, const TrainConfig& config);

/// Piecewise-linear schedule: up from 0 to peak_lr over w warmup steps, then
/// down to exactly 0 at step T. w = round(warmup_fraction*T) clamped to
/// [1, T-1] when warmup_fraction > 0, else 0.
double lr_at_step(std::int64_t t, std::int64_t total_steps, const TrainConfig& config);

/// Rendered descriptors of the sample's relevant files, file_id order,
/// joined by a blank line. This is the positive context the anchor question
/// is trained to match.
std::string positive_context_text(const Corpus& corpus, const QuerySample& sample);

/// Partition of sample indices into batches of size <= batch_size with no
/// duplicate positive text inside any batch. A sample whose positive already
/// appears in the open batch is deferred to the next one; nothing is dropped.
std::vector<std::vector<int>> build_epoch_batches(const std::vector<int>& order,
                                                  const std::vector<std::string>& positive_texts,
                                                  int batch_size);

struct StepRecord {
    std::int64_t step = 0;
    int epoch = 0;
    double lr = 0.0;
    double loss = 0.0;
};

struct TrainResult {
    EncoderModel model;
    std::vector<StepRecord> history;
};

/// Full fine-tuning run. All epochs are planned up front (per-epoch seeded
/// shuffle + batch partition) so the schedule length is known exactly;
/// batches of size 1 are skipped (the loss needs at least one negative).
TrainResult train(const EncoderModel& model, const std::vector<QuerySample>& samples,
                  const Corpus& corpus, const TrainConfig& config);

/// CSV with header step,epoch,lr,loss.
void write_loss_csv(const std::vector<StepRecord>& history, const std::filesystem::path& path);

}  // namespace tem
