#ifndef AAPU_RISK_HPP
#define AAPU_RISK_HPP

/// Empirical risk estimators over score vectors: supervised PN, unbiased
/// PU (uPU), non-negative PU (nnPU) and the adaptively augmented
/// objective (aaPU). Each returns the objective value plus the gradient
/// signal with respect to every score group.

#include <string>

#include "aapu/common.hpp"
#include "aapu/losses.hpp"

namespace aapu {

enum class Estimator { PN, UPU, NNPU, AAPU };

struct RiskConfig {
    Estimator estimator = Estimator::NNPU;
    LossKind loss = LossKind::Logistic;
    double prior = 0.5;        // pi = P(Y = +1)
    double nnpu_beta = 0.0;
    double nnpu_gamma = 1.0;
    // When true, the augmented positive sum is divided by n_p alone
    // (the literal published form) instead of by the count of terms.
    bool literal_normalization = false;

    void validate() const {
        if (!(prior > 0.0 && prior < 1.0))
            throw ConfigError("RiskConfig: prior must lie strictly in (0,1)");
        if (loss != LossKind::Sigmoid && loss != LossKind::Logistic)
            throw ConfigError("RiskConfig: loss must be sigmoid or logistic");
        if (nnpu_beta < 0.0) throw ConfigError("RiskConfig: beta must be >= 0");
        if (nnpu_gamma <= 0.0) throw ConfigError("RiskConfig: gamma must be > 0");
    }
};

struct RiskOutput {
    double value = 0.0;
    Vector dscore_p, dscore_s, dscore_u;
    bool clamped = false;
    // Unclamped value of R_u - pi * R_p^-; its sign drives the ascent branch.
    double negative_part = 0.0;
};

namespace detail {

inline void require_nonempty(const Vector& v, const char* name) {
    if (v.size() == 0)
        throw DataError(std::string("risk: empty score vector ") + name);
}

// Positive-class term sum over scores s: mean of l(s), with gradient.
inline double mean_pos_loss(const Vector& s, LossKind kind, double coeff,
                            Vector& dscore) {
    double acc = 0.0;
    dscore = Vector::Zero(s.size());
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        acc += loss_value(kind, s[i]);
        dscore[i] = coeff * loss_grad(kind, s[i]);
    }
    return acc;
}

// Sum of l(-s) with gradient of coeff * sum w.r.t. s.
inline double sum_neg_loss(const Vector& s, LossKind kind, double coeff,
                           Vector& dscore) {
    double acc = 0.0;
    dscore = Vector::Zero(s.size());
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        acc += loss_value(kind, -s[i]);
        dscore[i] = -coeff * loss_grad(kind, -s[i]);
    }
    return acc;
}

}  // namespace detail

/// Fully supervised risk, Eq.-(5)-style: pi * mean l(s_p) + (1-pi) * mean l(-s_n).
/// The negative group's gradients are returned in dscore_u.
inline RiskOutput pn_risk(const Vector& scores_p, const Vector& scores_n,
                          const RiskConfig& cfg) {
    cfg.validate();
    detail::require_nonempty(scores_p, "scores_p");
    detail::require_nonempty(scores_n, "scores_n");
    const double pi = cfg.prior;
    const double np = static_cast<double>(scores_p.size());
    const double nn = static_cast<double>(scores_n.size());
    RiskOutput out;
    out.value = (pi / np) * detail::mean_pos_loss(scores_p, cfg.loss, pi / np,
                                                  out.dscore_p) +
                ((1.0 - pi) / nn) *
                    detail::sum_neg_loss(scores_n, cfg.loss, (1.0 - pi) / nn,
                                         out.dscore_u);
    out.dscore_s = Vector::Zero(0);
    return out;
}

/// Unbiased PU risk: pi * mean l(s_p) + [mean l(-s_u) - pi * mean l(-s_p)].
/// The bracketed term is reported as negative_part; no clamping.
inline RiskOutput upu_risk(const Vector& scores_p, const Vector& scores_u,
                           const RiskConfig& cfg) {
    cfg.validate();
    detail::require_nonempty(scores_p, "scores_p");
    detail::require_nonempty(scores_u, "scores_u");
    const double pi = cfg.prior;
    const double np = static_cast<double>(scores_p.size());
    const double nu = static_cast<double>(scores_u.size());
    RiskOutput out;
    Vector dpos, dneg_p;
    const double pos = detail::mean_pos_loss(scores_p, cfg.loss, pi / np, dpos);
    const double neg_u =
        detail::sum_neg_loss(scores_u, cfg.loss, 1.0 / nu, out.dscore_u);
    const double neg_p =
        detail::sum_neg_loss(scores_p, cfg.loss, pi / np, dneg_p);
    out.negative_part = neg_u / nu - (pi / np) * neg_p;
    out.value = (pi / np) * pos + out.negative_part;
    out.dscore_p = dpos - dneg_p;  // minus: the correction is subtracted
    out.dscore_s = Vector::Zero(0);
    return out;
}

namespace detail {

// Shared nnPU/aaPU body. scores_s contributes only to the positive term.
inline RiskOutput nonneg_pu(const Vector& scores_p, const Vector& scores_s,
                            const Vector& scores_u, const RiskConfig& cfg) {
    cfg.validate();
    require_nonempty(scores_p, "scores_p");
    require_nonempty(scores_u, "scores_u");
    const double pi = cfg.prior;
    const double np = static_cast<double>(scores_p.size());
    const double ns = static_cast<double>(scores_s.size());
    const double nu = static_cast<double>(scores_u.size());
    // Positive-term normalizer: count of terms actually summed, or the
    // literal n_p divisor when configured.
    const double denom = cfg.literal_normalization ? np : np + ns;

    RiskOutput out;
    Vector dpos_p, dpos_s, dneg_p;
    double pos = mean_pos_loss(scores_p, cfg.loss, pi / denom, dpos_p);
    if (ns > 0) pos += mean_pos_loss(scores_s, cfg.loss, pi / denom, dpos_s);
    else dpos_s = Vector::Zero(0);
    const double neg_u = sum_neg_loss(scores_u, cfg.loss, 1.0 / nu, out.dscore_u);
    const double neg_p = sum_neg_loss(scores_p, cfg.loss, pi / np, dneg_p);

    out.negative_part = neg_u / nu - (pi / np) * neg_p;
    out.value = (pi / denom) * pos + std::max(0.0, out.negative_part);
    out.clamped = out.negative_part < -cfg.nnpu_beta;
    if (out.clamped) {
        // Gradient ascent on the violating term only, scaled by gamma.
        const double g = -cfg.nnpu_gamma;
        out.dscore_p = g * (-dneg_p);
        out.dscore_u *= g;
        out.dscore_s = Vector::Zero(scores_s.size());
    } else {
        out.dscore_p = dpos_p - dneg_p;
        out.dscore_s = dpos_s;
    }
    return out;
}

}  // namespace detail

/// Non-negative PU risk with the practical descent/ascent rule: descent
/// on the unclamped objective while negative_part >= -beta, otherwise a
/// gamma-scaled ascent step on negative_part alone.
inline RiskOutput nnpu_objective(const Vector& scores_p, const Vector& scores_u,
                                 const RiskConfig& cfg) {
    return detail::nonneg_pu(scores_p, Vector(), scores_u, cfg);
}

/// Augmented objective: selected scores join the positive term only; the
/// negative-risk correction uses the original positives exclusively.
inline RiskOutput aapu_objective(const Vector& scores_p, const Vector& scores_s,
                                 const Vector& scores_u, const RiskConfig& cfg) {
    return detail::nonneg_pu(scores_p, scores_s, scores_u, cfg);
}

}  // namespace aapu

#endif
