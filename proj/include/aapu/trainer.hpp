#ifndef AAPU_TRAINER_HPP
#define AAPU_TRAINER_HPP

/// The full training loop: stratified minibatch SGD against the
/// configured risk estimator, learning-rate schedule, per-epoch
/// large-loss selection (aaPU), and the baseline modes.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "aapu/common.hpp"
#include "aapu/data.hpp"
#include "aapu/losses.hpp"
#include "aapu/net.hpp"
#include "aapu/risk.hpp"
#include "aapu/selection.hpp"

namespace aapu {

enum class Method { PN, UPU, NNPU, NNPU_PLUS_P, AAPU };

inline const char* to_string(Method m) {
    switch (m) {
        case Method::PN: return "pn";
        case Method::UPU: return "upu";
        case Method::NNPU: return "nnpu";
        case Method::NNPU_PLUS_P: return "nnpu_plus_p";
        case Method::AAPU: return "aapu";
    }
    return "?";
}

inline Method method_from_string(const std::string& s) {
    if (s == "pn") return Method::PN;
    if (s == "upu") return Method::UPU;
    if (s == "nnpu") return Method::NNPU;
    if (s == "nnpu_plus_p") return Method::NNPU_PLUS_P;
    if (s == "aapu") return Method::AAPU;
    throw ConfigError("unknown method '" + s + "'");
}

struct SelectionSchedule {
    unsigned start_epoch = 0;
    unsigned per_epoch = 0;  // n_s
    // With fresh picks every epoch adds n_s new indices; without, the
    // top-k may land on already-selected points and the union absorbs
    // them, so S grows only while the loss ranking keeps shifting.
    bool fresh_picks = true;
};

struct TrainConfig {
    Method method = Method::NNPU;
    RiskConfig risk;
    MlpSpec spec;
    unsigned epochs = 1;
    int batch_size = 128;
    std::vector<std::pair<unsigned, double>> lr_schedule;  // (start_epoch, lr)
    double weight_decay = 0.0;
    SelectionSchedule selection;   // AAPU only
    unsigned oracle_extra_p = 0;   // NNPU_PLUS_P only
    std::uint64_t seed = 0;
    std::vector<unsigned> record_histogram_epochs;

    void validate() const {
        risk.validate();
        spec.validate();
        if (epochs < 1) throw ConfigError("TrainConfig: epochs must be >= 1");
        if (batch_size < 2) throw ConfigError("TrainConfig: batch_size must be >= 2");
        if (lr_schedule.empty() || lr_schedule.front().first != 1)
            throw ConfigError("TrainConfig: lr schedule must start at epoch 1");
        for (std::size_t i = 1; i < lr_schedule.size(); ++i)
            if (lr_schedule[i].first <= lr_schedule[i - 1].first)
                throw ConfigError("TrainConfig: lr schedule epochs must increase");
        for (const auto& [e, lr] : lr_schedule)
            if (lr <= 0.0) throw ConfigError("TrainConfig: non-positive lr");
        if (weight_decay < 0.0)
            throw ConfigError("TrainConfig: negative weight decay");
    }

    double learning_rate(unsigned epoch) const {
        double lr = lr_schedule.front().second;
        for (const auto& [start, rate] : lr_schedule)
            if (start <= epoch) lr = rate;
        return lr;
    }
};

struct EpochRecord {
    unsigned epoch = 0;
    double objective_mean = 0.0;
    double negative_part_mean = 0.0;
    double clamp_fraction = 0.0;
    double test_error = 0.0;
    unsigned selected_total = 0;
    std::optional<double> selection_purity;
    std::optional<double> selection_recall;
};

struct TrainResult {
    MlpParams params;
    std::vector<EpochRecord> records;
    std::vector<LossHistogram> histograms;
    SelectionState selection;
};

/// Test zero-one error plus the per-point margins y * g(x).
inline std::pair<double, Vector> evaluate(const MlpParams& params,
                                          const PUDataset& data) {
    if (data.test_features.cols() != params.spec.layer_dims.front())
        throw ShapeError("evaluate: feature dim mismatch");
    const Vector scores = eval_scores(params, data.test_features);
    Vector margins(scores.size());
    double err = 0.0;
    for (Eigen::Index i = 0; i < scores.size(); ++i) {
        margins[i] = data.test_labels[i] * scores[i];
        err += zero_one_loss(margins[i]);
    }
    return {err / static_cast<double>(scores.size()), margins};
}

/// Purity and recall of the selected set against hidden ground truth.
/// An empty selection yields nullopt markers, not zeros.
inline std::pair<std::optional<double>, std::optional<double>>
selection_diagnostics(const SelectionState& state, const std::vector<int>& truth) {
    if (state.selected_indices.empty()) return {std::nullopt, std::nullopt};
    int tp = 0;
    for (int idx : state.selected_indices) {
        if (idx < 0 || idx >= static_cast<int>(truth.size()))
            throw ContractError("selection_diagnostics: index out of range");
        if (truth[idx] > 0) ++tp;
    }
    int total_pos = 0;
    for (int t : truth)
        if (t > 0) ++total_pos;
    const double purity = static_cast<double>(tp) / state.selected_indices.size();
    std::optional<double> recall;
    if (total_pos > 0) recall = static_cast<double>(tp) / total_pos;
    return {purity, recall};
}

namespace detail {

inline Matrix gather_rows(const Matrix& src, const std::vector<int>& idx) {
    Matrix out(idx.size(), src.cols());
    for (std::size_t i = 0; i < idx.size(); ++i) out.row(i) = src.row(idx[i]);
    return out;
}

}  // namespace detail

inline TrainResult train(const TrainConfig& cfg, const PUDataset& data) {
    cfg.validate();
    if (data.dim() != cfg.spec.layer_dims.front())
        throw ConfigError("train: dataset dim " + std::to_string(data.dim()) +
                          " != network input dim " +
                          std::to_string(cfg.spec.layer_dims.front()));
    if (cfg.method == Method::PN || cfg.method == Method::NNPU_PLUS_P) {
        if (!data.unlabeled_truth)
            throw ConfigError(std::string("train: method ") +
                              to_string(cfg.method) +
                              " requires unlabeled ground truth");
    }
    if (cfg.method == Method::AAPU && cfg.selection.per_epoch == 0)
        std::cerr << "warning: aapu with n_s = 0 degenerates to nnpu\n";

    // Effective positive pool. NNPU_PLUS_P adds oracle positives drawn
    // from the unlabeled pool's true positives; PN splits the unlabeled
    // pool by its hidden labels into extra positives and the negatives.
    Matrix positives = data.positives;
    Matrix negatives;  // PN only
    if (cfg.method == Method::NNPU_PLUS_P) {
        std::vector<int> true_pos;
        for (int i = 0; i < data.n_u(); ++i)
            if ((*data.unlabeled_truth)[i] > 0) true_pos.push_back(i);
        std::mt19937_64 rng(mix_seed(cfg.seed, 0xA110C8));
        std::shuffle(true_pos.begin(), true_pos.end(), rng);
        const auto extra = std::min<std::size_t>(cfg.oracle_extra_p, true_pos.size());
        Matrix aug(positives.rows() + extra, positives.cols());
        aug.topRows(positives.rows()) = positives;
        for (std::size_t i = 0; i < extra; ++i)
            aug.row(positives.rows() + i) = data.unlabeled.row(true_pos[i]);
        positives = std::move(aug);
    } else if (cfg.method == Method::PN) {
        std::vector<int> pos_idx, neg_idx;
        for (int i = 0; i < data.n_u(); ++i)
            ((*data.unlabeled_truth)[i] > 0 ? pos_idx : neg_idx).push_back(i);
        if (neg_idx.empty())
            throw ConfigError("train: PN mode needs at least one true negative");
        Matrix aug(positives.rows() + pos_idx.size(), positives.cols());
        aug.topRows(positives.rows()) = positives;
        for (std::size_t i = 0; i < pos_idx.size(); ++i)
            aug.row(positives.rows() + i) = data.unlabeled.row(pos_idx[i]);
        positives = std::move(aug);
        negatives = detail::gather_rows(data.unlabeled, neg_idx);
    }
    const bool pn_mode = cfg.method == Method::PN;
    const Matrix& neg_pool = pn_mode ? negatives : data.unlabeled;

    MlpSpec spec = cfg.spec;
    spec.seed = mix_seed(cfg.seed, 0x1217);
    MlpParams params = init(spec);
    AdamState adam = make_adam_state(params);
    std::mt19937_64 dropout_rng(mix_seed(cfg.seed, 0xD201));

    SelectionState sel;
    sel.start_epoch = cfg.selection.start_epoch;
    sel.per_epoch = cfg.selection.per_epoch;
    const bool do_selection = cfg.method == Method::AAPU && sel.per_epoch > 0;
    std::unordered_set<int> positive_duplicates;
    if (do_selection)
        positive_duplicates = duplicate_of_positive(data.positives, data.unlabeled);

    TrainResult result;
    for (unsigned epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const double lr = cfg.learning_rate(epoch);
        const int n_s = static_cast<int>(sel.selected_indices.size());
        MinibatchPlan plan = make_minibatches(
            static_cast<int>(positives.rows()), static_cast<int>(neg_pool.rows()),
            n_s, cfg.batch_size, mix_seed(cfg.seed, epoch));

        double obj_sum = 0.0, neg_sum = 0.0;
        int clamped_batches = 0;
        for (const Minibatch& mb : plan.batches) {
            const int bp = static_cast<int>(mb.p_indices.size());
            const int bs = static_cast<int>(mb.s_indices.size());
            const int bu = static_cast<int>(mb.u_indices.size());
            Matrix batch(bp + bs + bu, data.dim());
            for (int i = 0; i < bp; ++i)
                batch.row(i) = positives.row(mb.p_indices[i]);
            for (int i = 0; i < bs; ++i)
                batch.row(bp + i) =
                    data.unlabeled.row(sel.selected_indices[mb.s_indices[i]]);
            for (int i = 0; i < bu; ++i)
                batch.row(bp + bs + i) = neg_pool.row(mb.u_indices[i]);

            ForwardCache cache;
            const Vector scores =
                forward(params, batch, Mode::Train, &cache, &dropout_rng);
            const Vector sp = scores.segment(0, bp);
            const Vector ss = scores.segment(bp, bs);
            const Vector su = scores.segment(bp + bs, bu);

            RiskOutput risk;
            switch (cfg.method) {
                case Method::PN:
                    risk = pn_risk(sp, su, cfg.risk);
                    break;
                case Method::UPU:
                    risk = upu_risk(sp, su, cfg.risk);
                    break;
                case Method::NNPU:
                case Method::NNPU_PLUS_P:
                    risk = nnpu_objective(sp, su, cfg.risk);
                    break;
                case Method::AAPU:
                    risk = aapu_objective(sp, ss, su, cfg.risk);
                    break;
            }
            if (!std::isfinite(risk.value))
                throw NumericError("non-finite objective at epoch " +
                                       std::to_string(epoch),
                                   epoch);

            Vector dscore(bp + bs + bu);
            dscore.segment(0, bp) = risk.dscore_p;
            if (bs > 0) dscore.segment(bp, bs) = risk.dscore_s;
            dscore.segment(bp + bs, bu) = risk.dscore_u;
            const MlpGrads grads = backward(params, cache, dscore);
            adam_step(params, grads, adam, lr, cfg.weight_decay);

            obj_sum += risk.value;
            neg_sum += risk.negative_part;
            if (risk.clamped) ++clamped_batches;
        }

        // Selection runs after the epoch's batches; picks take effect
        // from the next epoch onward.
        std::optional<UnlabeledLossVector> lu;
        if (do_selection && epoch >= sel.start_epoch &&
            sel.selected_indices.size() < static_cast<std::size_t>(data.n_u())) {
            lu = unlabeled_losses(params, data.unlabeled, cfg.risk.loss, epoch);
            std::unordered_set<int> excluded = positive_duplicates;
            if (cfg.selection.fresh_picks)
                for (int idx : sel.selected_indices) excluded.insert(idx);
            const auto picks = select_top_k(
                *lu, static_cast<int>(sel.per_epoch), excluded);
            sel = update_selected(std::move(sel), picks, epoch, data.n_u());
        }
        if (std::find(cfg.record_histogram_epochs.begin(),
                      cfg.record_histogram_epochs.end(),
                      epoch) != cfg.record_histogram_epochs.end()) {
            if (!lu)
                lu = unlabeled_losses(params, data.unlabeled, cfg.risk.loss, epoch);
            const std::vector<int>* truth =
                data.unlabeled_truth ? &*data.unlabeled_truth : nullptr;
            result.histograms.push_back(loss_histogram(*lu, truth));
        }

        EpochRecord rec;
        rec.epoch = epoch;
        const double nb = static_cast<double>(plan.batches.size());
        rec.objective_mean = obj_sum / nb;
        rec.negative_part_mean = pn_mode ? 0.0 : neg_sum / nb;
        rec.clamp_fraction = clamped_batches / nb;
        rec.test_error = evaluate(params, data).first;
        rec.selected_total = static_cast<unsigned>(sel.selected_indices.size());
        if (data.unlabeled_truth && cfg.method == Method::AAPU) {
            auto [purity, recall] =
                selection_diagnostics(sel, *data.unlabeled_truth);
            rec.selection_purity = purity;
            rec.selection_recall = recall;
        }
        result.records.push_back(rec);
    }

    result.params = std::move(params);
    result.selection = std::move(sel);
    return result;
}

}  // namespace aapu

#endif
