#include <cmath>
#include <limits>
#include <random>

#include <doctest.h>

#include "aapu/losses.hpp"

using namespace aapu;

TEST_CASE("sigmoid loss values") {
    CHECK(sigmoid_loss(0.0) == doctest::Approx(0.5).epsilon(1e-15));
    // frozen from high-precision evaluation of 1/(1+e)
    CHECK(sigmoid_loss(1.0) == doctest::Approx(0.2689414213699951).epsilon(1e-12));
    CHECK(sigmoid_loss(-1.0) == doctest::Approx(0.7310585786300049).epsilon(1e-12));
}

TEST_CASE("logistic loss values and overflow safety") {
    CHECK(logistic_loss(0.0) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
    // ln(1+e^-50); must stay positive, not underflow to 0
    const double tail = logistic_loss(50.0);
    CHECK(tail > 0.0);
    CHECK(tail == doctest::Approx(1.9287498479639178e-22).epsilon(1e-9));
    // naive exp(50) would overflow the sum; stable form returns ~50
    CHECK(std::abs(logistic_loss(-50.0) - 50.0) < 1e-9);
    CHECK(std::isfinite(logistic_loss(-700.0)));
    CHECK(std::isfinite(logistic_loss(700.0)));
}

TEST_CASE("zero-one loss and the tie rule") {
    CHECK(zero_one_loss(-0.3) == 1.0);
    CHECK(zero_one_loss(0.3) == 0.0);
    CHECK(zero_one_loss(0.0) == 0.0);  // tie counts as correct
}

TEST_CASE("analytic gradients") {
    CHECK(loss_grad(LossKind::Logistic, 0.0) == doctest::Approx(-0.5).epsilon(1e-15));
    CHECK(loss_grad(LossKind::Sigmoid, 0.0) == doctest::Approx(-0.25).epsilon(1e-15));
    CHECK(loss_grad(LossKind::Logistic, 50.0) ==
          doctest::Approx(-1.928749847963918e-22).epsilon(1e-9));
    CHECK_THROWS_AS(loss_grad(LossKind::ZeroOne, 0.5), std::domain_error);
}

TEST_CASE("non-finite margins are rejected") {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    const double inf = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(sigmoid_loss(nan), std::invalid_argument);
    CHECK_THROWS_AS(logistic_loss(inf), std::invalid_argument);
    CHECK_THROWS_AS(zero_one_loss(-inf), std::invalid_argument);
    CHECK_THROWS_AS(loss_grad(LossKind::Sigmoid, nan), std::invalid_argument);
}

TEST_CASE("gradient matches central finite differences") {
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> dm(-30.0, 30.0);
    for (int i = 0; i < 200; ++i) {
        const double m = dm(rng);
        for (LossKind k : {LossKind::Sigmoid, LossKind::Logistic}) {
            const double h = 1e-5 * std::max(1.0, std::abs(m));
            const double fd = (loss_value(k, m + h) - loss_value(k, m - h)) / (2 * h);
            const double g = loss_grad(k, m);
            CHECK(std::abs(fd - g) <= 1e-6 * std::max(1.0, std::abs(g)));
            CHECK(g < 0.0);
        }
    }
}

TEST_CASE("sigmoid symmetry and softplus identity") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> dm(-500.0, 500.0);
    for (int i = 0; i < 500; ++i) {
        const double m = dm(rng);
        if (std::abs(m) < 40.0)
            CHECK(std::abs(sigmoid_loss(m) + sigmoid_loss(-m) - 1.0) <= 1e-15);
        CHECK(std::abs((logistic_loss(m) - logistic_loss(-m)) - (-m)) <= 1e-9);
    }
    CHECK(std::abs(sigmoid_loss(3.25) + sigmoid_loss(-3.25) - 1.0) <= 1e-15);
}

TEST_CASE("surrogates decrease monotonically in the margin") {
    // Stay where the sigmoid is resolvable in double precision; beyond
    // |m| ~ 36 it saturates to exactly 0 or 1.
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> dm(-20.0, 20.0);
    for (int i = 0; i < 300; ++i) {
        double m1 = dm(rng), m2 = dm(rng);
        if (std::abs(m1 - m2) < 1e-6) continue;
        if (m1 > m2) std::swap(m1, m2);
        CHECK(sigmoid_loss(m1) > sigmoid_loss(m2));
        CHECK(logistic_loss(m1) > logistic_loss(m2));
    }
}
