#include "tem/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>
#include <unordered_set>

#include "tem/binio.hpp"

namespace tem {

namespace {

// Forward pass intermediates for one batch side, kept for backprop.
struct Forward {
    std::vector<Vector> pooled;     // d_tok
    std::vector<Vector> unit;       // d_out, normalized (or e1 fallback)
    std::vector<double> norm;       // pre-normalization length
    std::vector<bool> fallback;     // degenerate text, no gradient flows
};

Forward run_forward(const EncoderModel& model, const std::vector<std::vector<int>>& ids_list) {
    Forward fw;
    fw.pooled.reserve(ids_list.size());
    fw.unit.reserve(ids_list.size());
    for (const std::vector<int>& ids : ids_list) {
        Vector pooled = Vector::Zero(model.d_tok());
        if (!ids.empty()) {
            for (int id : ids) {
                pooled += model.token_emb.row(id).transpose();
            }
            pooled /= static_cast<double>(ids.size());
        }
        Vector projected = model.projection.transpose() * pooled;
        double norm = projected.norm();
        bool degenerate = !(norm > 1e-290) || !std::isfinite(norm);
        fw.pooled.push_back(std::move(pooled));
        fw.unit.push_back(degenerate ? Vector(Vector::Unit(model.d_out(), 0))
                                     : Vector(projected / norm));
        fw.norm.push_back(norm);
        fw.fallback.push_back(degenerate);
    }
    return fw;
}

// Scores use the raw dot product, not the clamped similarity: the loss must
// stay differentiable at dots that round a hair past +-1.
Matrix score_matrix(const Forward& anchors, const Forward& positives, double scale) {
    int n = static_cast<int>(anchors.unit.size());
    Matrix s(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            s(i, j) = scale * anchors.unit[i].dot(positives.unit[j]);
        }
    }
    return s;
}

std::vector<std::vector<int>> batch_ids(const Vocabulary& vocab,
                                        const std::vector<std::string>& texts) {
    std::vector<std::vector<int>> ids;
    ids.reserve(texts.size());
    for (const std::string& t : texts) {
        ids.push_back(text_to_ids(vocab, t));
    }
    return ids;
}

void check_batch(const TrainBatch& batch) {
    if (batch.anchors.size() != batch.positives.size()) {
        throw Error("batch has " + std::to_string(batch.anchors.size()) + " anchors but " +
                    std::to_string(batch.positives.size()) + " positives");
    }
    if (batch.anchors.size() < 2) {
        throw Error("batch needs at least 2 samples for in-batch negatives");
    }
}

// Backprop from d(loss)/d(unit embedding) of one text down to the weights.
void backprop_text(const EncoderModel& model, const Forward& fw, int idx,
                   const std::vector<int>& ids, const Vector& d_unit,
                   Matrix& d_token_emb, Matrix& d_projection) {
    if (fw.fallback[idx] || ids.empty()) {
        return;
    }
    // e = v / ||v||: dL/dv = (g - (g.e)e) / ||v||
    const Vector& e = fw.unit[idx];
    Vector d_projected = (d_unit - d_unit.dot(e) * e) / fw.norm[idx];
    d_projection += fw.pooled[idx] * d_projected.transpose();
    Vector d_pooled = model.projection * d_projected;
    double inv = 1.0 / static_cast<double>(ids.size());
    for (int id : ids) {
        d_token_emb.row(id) += inv * d_pooled.transpose();
    }
}

LossGrads loss_grads_from_ids(const EncoderModel& model,
                              const std::vector<std::vector<int>>& anchor_ids,
                              const std::vector<std::vector<int>>& positive_ids,
                              double scale, bool want_grads) {
    int n = static_cast<int>(anchor_ids.size());
    Forward anchors = run_forward(model, anchor_ids);
    Forward positives = run_forward(model, positive_ids);
    Matrix scores = score_matrix(anchors, positives, scale);
    BatchLoss bl = mnr_loss_from_scores(scores);

    LossGrads out;
    out.loss = bl.loss;
    out.per_sample = std::move(bl.per_sample);
    if (!want_grads) {
        return out;
    }

    // dL/dS = (softmax(S) - I) / n, rows shifted by their max for stability.
    Matrix g(n, n);
    for (int i = 0; i < n; ++i) {
        double mx = scores.row(i).maxCoeff();
        double z = 0.0;
        for (int j = 0; j < n; ++j) {
            z += std::exp(scores(i, j) - mx);
        }
        for (int j = 0; j < n; ++j) {
            g(i, j) = std::exp(scores(i, j) - mx) / z;
        }
        g(i, i) -= 1.0;
    }
    g /= static_cast<double>(n);

    out.d_token_emb = Matrix::Zero(model.token_emb.rows(), model.token_emb.cols());
    out.d_projection = Matrix::Zero(model.projection.rows(), model.projection.cols());
    for (int i = 0; i < n; ++i) {
        Vector d_unit = Vector::Zero(model.d_out());
        for (int j = 0; j < n; ++j) {
            d_unit += scale * g(i, j) * positives.unit[j];
        }
        backprop_text(model, anchors, i, anchor_ids[i], d_unit, out.d_token_emb,
                      out.d_projection);
    }
    for (int j = 0; j < n; ++j) {
        Vector d_unit = Vector::Zero(model.d_out());
        for (int i = 0; i < n; ++i) {
            d_unit += scale * g(i, j) * anchors.unit[i];
        }
        backprop_text(model, positives, j, positive_ids[j], d_unit, out.d_token_emb,
                      out.d_projection);
    }
    return out;
}

void check_shapes(const Matrix& weights, const Matrix& grads, const TensorMoments& moments) {
    auto same = [&](const Matrix& m) {
        return m.rows() == weights.rows() && m.cols() == weights.cols();
    };
    if (!same(grads) || !same(moments.m) || !same(moments.v)) {
        throw Error("optimizer shape mismatch");
    }
}

}  // namespace

void validate_config(const TrainConfig& config) {
    if (config.batch_size < 2) {
        throw Error("batch_size must be >= 2, got " + std::to_string(config.batch_size));
    }
    if (config.epochs < 1) {
        throw Error("epochs must be >= 1, got " + std::to_string(config.epochs));
    }
    if (!(config.peak_lr > 0.0)) {
        throw Error("peak_lr must be positive");
    }
    if (!(config.weight_decay >= 0.0)) {
        throw Error("weight_decay must be nonnegative");
    }
    if (!(config.warmup_fraction >= 0.0) || config.warmup_fraction >= 1.0) {
        throw Error("warmup_fraction must be in [0, 1)");
    }
    if (!(config.similarity_scale > 0.0)) {
        throw Error("similarity_scale must be positive");
    }
    if (!(config.adam_beta1 >= 0.0) || config.adam_beta1 >= 1.0 ||
        !(config.adam_beta2 >= 0.0) || config.adam_beta2 >= 1.0) {
        throw Error("adam betas must be in [0, 1)");
    }
    if (!(config.adam_eps > 0.0)) {
        throw Error("adam_eps must be positive");
    }
}

OptimizerState init_optimizer(const EncoderModel& model) {
    OptimizerState state;
    state.token_emb.m = Matrix::Zero(model.token_emb.rows(), model.token_emb.cols());
    state.token_emb.v = state.token_emb.m;
    state.projection.m = Matrix::Zero(model.projection.rows(), model.projection.cols());
    state.projection.v = state.projection.m;
    return state;
}

BatchLoss mnr_loss_from_scores(const Matrix& scores) {
    if (scores.rows() != scores.cols()) {
        throw Error("score matrix must be square");
    }
    int n = static_cast<int>(scores.rows());
    if (n < 2) {
        throw Error("batch needs at least 2 samples for in-batch negatives");
    }
    BatchLoss out;
    out.per_sample.reserve(n);
    for (int i = 0; i < n; ++i) {
        double mx = scores.row(i).maxCoeff();
        double z = 0.0;
        for (int j = 0; j < n; ++j) {
            z += std::exp(scores(i, j) - mx);
        }
        double li = -(scores(i, i) - mx) + std::log(z);
        out.per_sample.push_back(li);
        out.loss += li;
    }
    out.loss /= static_cast<double>(n);
    return out;
}

BatchLoss mnr_loss(const EncoderModel& model, const TrainBatch& batch, double scale) {
    check_batch(batch);
    LossGrads lg = loss_grads_from_ids(model, batch_ids(model.vocab, batch.anchors),
                                       batch_ids(model.vocab, batch.positives), scale,
                                       /*want_grads=*/false);
    return BatchLoss{lg.loss, std::move(lg.per_sample)};
}

LossGrads mnr_loss_grad(const EncoderModel& model, const TrainBatch& batch, double scale) {
    check_batch(batch);
    return loss_grads_from_ids(model, batch_ids(model.vocab, batch.anchors),
                               batch_ids(model.vocab, batch.positives), scale,
                               /*want_grads=*/true);
}

void adamw_step(Matrix& weights, const Matrix& grads, TensorMoments& moments,
                std::int64_t step_t, double lr, const TrainConfig& config) {
    if (step_t < 1) {
        throw Error("optimizer step count must be >= 1");
    }
    check_shapes(weights, grads, moments);
    moments.m = config.adam_beta1 * moments.m + (1.0 - config.adam_beta1) * grads;
    moments.v = config.adam_beta2 * moments.v + (1.0 - config.adam_beta2) * grads.cwiseProduct(grads);
    double bc1 = 1.0 - std::pow(config.adam_beta1, static_cast<double>(step_t));
    double bc2 = 1.0 - std::pow(config.adam_beta2, static_cast<double>(step_t));
    Matrix update =
        ((moments.m / bc1).array() / ((moments.v / bc2).array().sqrt() + config.adam_eps))
            .matrix();
    // Multiplicative decoupled decay first: a zero-gradient step is exactly
    // w * (1 - lr*weight_decay).
    weights *= 1.0 - lr * config.weight_decay;
    weights -= lr * update;
}

void optimizer_step(EncoderModel& model, const LossGrads& grads, OptimizerState& state,
                    double lr, const TrainConfig& config) {
    state.step += 1;
    adamw_step(model.token_emb, grads.d_token_emb, state.token_emb, state.step, lr, config);
    adamw_step(model.projection, grads.d_projection, state.projection, state.step, lr, config);
}

double lr_at_step(std::int64_t t, std::int64_t total_steps, const TrainConfig& config) {
    if (total_steps < 1) {
        throw Error("schedule needs at least one step");
    }
    if (t < 0 || t > total_steps) {
        throw Error("step " + std::to_string(t) + " outside schedule of " +
                    std::to_string(total_steps));
    }
    std::int64_t w = 0;
    // total_steps == 1 leaves no room for warmup: the final step must land
    // on lr 0.
    if (config.warmup_fraction > 0.0 && total_steps > 1) {
        w = std::llround(config.warmup_fraction * static_cast<double>(total_steps));
        w = std::clamp<std::int64_t>(w, 1, total_steps - 1);
    }
    if (w > 0 && t <= w) {
        return config.peak_lr * static_cast<double>(t) / static_cast<double>(w);
    }
    return config.peak_lr * static_cast<double>(total_steps - t) /
           static_cast<double>(total_steps - w);
}

std::string positive_context_text(const Corpus& corpus, const QuerySample& sample) {
    std::vector<std::string> ids = sample.relevant_files;
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    std::string out;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (i > 0) {
            out += "\n\n";
        }
        out += render_descriptor_text(corpus.at(ids[i]));
    }
    return out;
}

std::vector<std::vector<int>> build_epoch_batches(const std::vector<int>& order,
                                                  const std::vector<std::string>& positive_texts,
                                                  int batch_size) {
    if (batch_size < 2) {
        throw Error("batch_size must be >= 2, got " + std::to_string(batch_size));
    }
    for (int idx : order) {
        if (idx < 0 || static_cast<std::size_t>(idx) >= positive_texts.size()) {
            throw Error("sample index " + std::to_string(idx) + " out of range");
        }
    }
    std::vector<std::vector<int>> batches;
    std::vector<int> pending = order;
    while (!pending.empty()) {
        std::vector<int> batch;
        std::vector<int> deferred;
        std::unordered_set<std::string_view> seen;
        std::size_t consumed = 0;
        for (; consumed < pending.size() && static_cast<int>(batch.size()) < batch_size;
             ++consumed) {
            int idx = pending[consumed];
            std::string_view text = positive_texts[static_cast<std::size_t>(idx)];
            if (seen.count(text)) {
                deferred.push_back(idx);
            } else {
                seen.insert(text);
                batch.push_back(idx);
            }
        }
        std::vector<int> next = std::move(deferred);
        next.insert(next.end(), pending.begin() + static_cast<std::ptrdiff_t>(consumed),
                    pending.end());
        batches.push_back(std::move(batch));
        pending = std::move(next);
    }
    return batches;
}

TrainResult train(const EncoderModel& model, const std::vector<QuerySample>& samples,
                  const Corpus& corpus, const TrainConfig& config) {
    validate_config(config);
    if (samples.size() < static_cast<std::size_t>(config.batch_size)) {
        throw Error("need at least " + std::to_string(config.batch_size) + " samples, got " +
                    std::to_string(samples.size()));
    }

    int count = static_cast<int>(samples.size());
    std::vector<std::string> positive_texts;
    std::vector<std::vector<int>> anchor_ids;
    std::vector<std::vector<int>> positive_ids;
    positive_texts.reserve(samples.size());
    for (const QuerySample& sample : samples) {
        positive_texts.push_back(positive_context_text(corpus, sample));
        anchor_ids.push_back(text_to_ids(model.vocab, sample.question));
        positive_ids.push_back(text_to_ids(model.vocab, positive_texts.back()));
    }

    // Plan every epoch up front so the schedule horizon counts exactly the
    // batches that will step the optimizer.
    struct PlannedBatch {
        int epoch;
        std::vector<int> indices;
    };
    std::vector<PlannedBatch> plan;
    Rng rng(config.seed);
    std::vector<int> order(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        order[static_cast<std::size_t>(i)] = i;
    }
    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        rng.shuffle(order);
        for (std::vector<int>& batch :
             build_epoch_batches(order, positive_texts, config.batch_size)) {
            if (batch.size() >= 2) {
                plan.push_back(PlannedBatch{epoch, std::move(batch)});
            }
        }
    }
    if (plan.empty()) {
        throw Error("no trainable batches: every batch collapsed to a single positive");
    }

    TrainResult result;
    result.model = model;
    OptimizerState state = init_optimizer(result.model);
    auto total_steps = static_cast<std::int64_t>(plan.size());
    for (std::int64_t t = 1; t <= total_steps; ++t) {
        const PlannedBatch& pb = plan[static_cast<std::size_t>(t - 1)];
        std::vector<std::vector<int>> batch_anchor_ids;
        std::vector<std::vector<int>> batch_positive_ids;
        batch_anchor_ids.reserve(pb.indices.size());
        for (int idx : pb.indices) {
            batch_anchor_ids.push_back(anchor_ids[static_cast<std::size_t>(idx)]);
            batch_positive_ids.push_back(positive_ids[static_cast<std::size_t>(idx)]);
        }
        double lr = lr_at_step(t, total_steps, config);
        LossGrads grads = loss_grads_from_ids(result.model, batch_anchor_ids,
                                              batch_positive_ids, config.similarity_scale,
                                              /*want_grads=*/true);
        optimizer_step(result.model, grads, state, lr, config);
        result.history.push_back(StepRecord{t, pb.epoch, lr, grads.loss});
    }
    return result;
}

void write_loss_csv(const std::vector<StepRecord>& history, const std::filesystem::path& path) {
    std::ostringstream out;
    out << "step,epoch,lr,loss\n";
    out << std::setprecision(17);
    for (const StepRecord& rec : history) {
        out << rec.step << ',' << rec.epoch << ',' << rec.lr << ',' << rec.loss << '\n';
    }
    binio::write_file(path, out.str());
}

}  // namespace tem
