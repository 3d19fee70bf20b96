#ifndef AAPU_SELECTION_HPP
#define AAPU_SELECTION_HPP

/// Large-loss sample selection over the unlabeled pool: per-epoch loss
/// vectors, top-k picks with exclusions, permanent accumulation of the
/// selected set, and the 100-bin loss histograms.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "aapu/common.hpp"
#include "aapu/losses.hpp"
#include "aapu/net.hpp"

namespace aapu {

struct UnlabeledLossVector {
    Vector losses;            // length n_u, entries l(-g(x_i))
    unsigned epoch = 0;
    LossKind loss_kind = LossKind::Logistic;
};

struct SelectionState {
    std::vector<int> selected_indices;  // insertion order, no duplicates
    unsigned start_epoch = 0;
    unsigned per_epoch = 0;             // n_s

    bool contains(int idx) const {
        return std::find(selected_indices.begin(), selected_indices.end(), idx) !=
               selected_indices.end();
    }
};

struct LossHistogram {
    static constexpr int kBins = 100;
    std::vector<double> bin_edges;             // kBins + 1, strictly increasing
    std::vector<unsigned> counts_total;        // kBins
    std::optional<std::vector<unsigned>> counts_true_p, counts_true_n;
    unsigned epoch = 0;
};

/// Scores the whole unlabeled pool in Eval mode and records each point's
/// surrogate loss under an assumed negative label.
inline UnlabeledLossVector unlabeled_losses(const MlpParams& params,
                                            const Matrix& unlabeled,
                                            LossKind loss_kind,
                                            unsigned epoch = 0) {
    if (loss_kind != LossKind::Sigmoid && loss_kind != LossKind::Logistic)
        throw ConfigError("unlabeled_losses: need a differentiable surrogate");
    UnlabeledLossVector lu;
    lu.epoch = epoch;
    lu.loss_kind = loss_kind;
    const Vector scores = eval_scores(params, unlabeled);
    lu.losses.resize(scores.size());
    for (Eigen::Index i = 0; i < scores.size(); ++i)
        lu.losses[i] = loss_value(loss_kind, -scores[i]);
    return lu;
}

/// k indices with the largest losses among non-excluded candidates,
/// ordered by descending loss, ties broken by ascending index.
inline std::vector<int> select_top_k(const UnlabeledLossVector& lu, int k,
                                     const std::unordered_set<int>& excluded) {
    std::vector<int> candidates;
    candidates.reserve(lu.losses.size());
    for (int i = 0; i < static_cast<int>(lu.losses.size()); ++i)
        if (!excluded.count(i)) candidates.push_back(i);
    const int take = std::min<int>(std::max(k, 0), static_cast<int>(candidates.size()));
    std::partial_sort(candidates.begin(), candidates.begin() + take,
                      candidates.end(), [&](int a, int b) {
                          if (lu.losses[a] != lu.losses[b])
                              return lu.losses[a] > lu.losses[b];
                          return a < b;
                      });
    candidates.resize(take);
    return candidates;
}

/// Permanent union update of the selected set.
inline SelectionState update_selected(SelectionState state,
                                      const std::vector<int>& new_indices,
                                      unsigned epoch, int n_u) {
    (void)epoch;
    for (int idx : new_indices) {
        if (idx < 0 || idx >= n_u)
            throw ContractError("update_selected: index " + std::to_string(idx) +
                                " out of range");
        if (!state.contains(idx)) state.selected_indices.push_back(idx);
    }
    return state;
}

/// 100-bin histogram of the unlabeled losses. Sigmoid losses are binned
/// over [0,1]; logistic losses over the observed [min,max] range. The
/// right edge is inclusive for the last bin only.
inline LossHistogram loss_histogram(const UnlabeledLossVector& lu,
                                    const std::vector<int>* ground_truth = nullptr) {
    if (lu.losses.size() == 0)
        throw DataError("loss_histogram: empty loss vector");
    if (ground_truth &&
        static_cast<Eigen::Index>(ground_truth->size()) != lu.losses.size())
        throw ShapeError("loss_histogram: ground-truth length mismatch");

    LossHistogram h;
    h.epoch = lu.epoch;
    double lo, hi;
    if (lu.loss_kind == LossKind::Sigmoid) {
        lo = 0.0;
        hi = 1.0;
    } else {
        lo = lu.losses.minCoeff();
        hi = lu.losses.maxCoeff();
        if (lo == hi) hi = lo + 1.0;  // degenerate range: all mass lands in bin 0
    }
    const double width = (hi - lo) / LossHistogram::kBins;
    h.bin_edges.resize(LossHistogram::kBins + 1);
    for (int b = 0; b <= LossHistogram::kBins; ++b)
        h.bin_edges[b] = lo + width * b;
    h.bin_edges.back() = hi;

    h.counts_total.assign(LossHistogram::kBins, 0);
    if (ground_truth) {
        h.counts_true_p.emplace(LossHistogram::kBins, 0);
        h.counts_true_n.emplace(LossHistogram::kBins, 0);
    }
    for (Eigen::Index i = 0; i < lu.losses.size(); ++i) {
        const double v = lu.losses[i];
        int b = static_cast<int>((v - lo) / width);
        b = std::clamp(b, 0, LossHistogram::kBins - 1);
        h.counts_total[b] += 1;
        if (ground_truth) {
            if ((*ground_truth)[i] > 0) (*h.counts_true_p)[b] += 1;
            else (*h.counts_true_n)[b] += 1;
        }
    }
    return h;
}

/// CSV export: bin_left, bin_right, count_total, count_true_p, count_true_n
/// (class columns left empty when no ground truth was recorded).
inline void write_histogram_csv(const LossHistogram& h, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open for writing: " + path);
    out << "bin_left,bin_right,count_total,count_true_p,count_true_n\n";
    char buf[128];
    for (int b = 0; b < LossHistogram::kBins; ++b) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%u,", h.bin_edges[b],
                      h.bin_edges[b + 1], h.counts_total[b]);
        out << buf;
        if (h.counts_true_p)
            out << (*h.counts_true_p)[b] << ',' << (*h.counts_true_n)[b];
        else
            out << ',';
        out << '\n';
    }
}

/// Indices of unlabeled rows whose feature vectors are byte-identical to
/// some positive row; the literal "not in X_p" exclusion.
inline std::unordered_set<int> duplicate_of_positive(const Matrix& positives,
                                                     const Matrix& unlabeled) {
    std::unordered_set<std::uint64_t> pos_hashes;
    std::vector<double> row(positives.cols());
    for (Eigen::Index i = 0; i < positives.rows(); ++i) {
        for (Eigen::Index j = 0; j < positives.cols(); ++j)
            row[j] = positives(i, j);
        pos_hashes.insert(fnv1a(row.data(), row.size() * sizeof(double)));
    }
    std::unordered_set<int> dup;
    row.resize(unlabeled.cols());
    for (Eigen::Index i = 0; i < unlabeled.rows(); ++i) {
        for (Eigen::Index j = 0; j < unlabeled.cols(); ++j)
            row[j] = unlabeled(i, j);
        if (pos_hashes.count(fnv1a(row.data(), row.size() * sizeof(double))))
            dup.insert(static_cast<int>(i));
    }
    return dup;
}

}  // namespace aapu

#endif
