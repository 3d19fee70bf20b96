#ifndef AAPU_LOSSES_HPP
#define AAPU_LOSSES_HPP

/// Surrogate losses of the margin t*g(x) and their derivatives, plus the
/// zero-one loss for evaluation.

#include <cmath>
#include <stdexcept>
#include <string>

#include "aapu/common.hpp"

namespace aapu {

enum class LossKind { Sigmoid, Logistic, ZeroOne };

inline const char* to_string(LossKind k) {
    switch (k) {
        case LossKind::Sigmoid: return "sigmoid";
        case LossKind::Logistic: return "logistic";
        case LossKind::ZeroOne: return "zero_one";
    }
    return "?";
}

namespace detail {
inline void require_finite(double m) {
    if (!std::isfinite(m))
        throw std::invalid_argument("loss: non-finite margin " +
                                    std::to_string(m));
}
// 1/(1+exp(-z)) without overflow for large |z|.
inline double stable_sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}
}  // namespace detail

/// 1/(1+exp(m)); decreasing in the margin, range (0,1).
inline double sigmoid_loss(double m) {
    detail::require_finite(m);
    return detail::stable_sigmoid(-m);
}

/// ln(1+exp(-m)); branchless stable form, never overflows and never
/// underflows to 0 for margins representable in double.
inline double logistic_loss(double m) {
    detail::require_finite(m);
    return std::max(-m, 0.0) + std::log1p(std::exp(-std::abs(m)));
}

inline double zero_one_loss(double m) {
    detail::require_finite(m);
    return m < 0.0 ? 1.0 : 0.0;  // tie at m == 0 counts as correct
}

inline double loss_value(LossKind kind, double m) {
    switch (kind) {
        case LossKind::Sigmoid: return sigmoid_loss(m);
        case LossKind::Logistic: return logistic_loss(m);
        case LossKind::ZeroOne: return zero_one_loss(m);
    }
    throw std::invalid_argument("loss_value: bad kind");
}

/// dl/dm. Always negative: both surrogates decrease in the margin.
inline double loss_grad(LossKind kind, double m) {
    detail::require_finite(m);
    switch (kind) {
        case LossKind::Sigmoid: {
            const double s = detail::stable_sigmoid(m);
            return -s * (1.0 - s);
        }
        case LossKind::Logistic:
            return -detail::stable_sigmoid(-m);
        case LossKind::ZeroOne:
            throw std::domain_error("loss_grad: zero-one loss is not differentiable");
    }
    throw std::invalid_argument("loss_grad: bad kind");
}

}  // namespace aapu

#endif
