#include <cmath>
#include <random>
#include <vector>

#include <doctest.h>

#include "aapu/checkpoint.hpp"
#include "aapu/net.hpp"

using namespace aapu;

namespace {

// Flat view of all trainable doubles in a parameter set, paired with the
// matching gradient locations.
struct ParamView {
    std::vector<double*> params;
    std::vector<const double*> grads;
};

ParamView flatten(MlpParams& p, const MlpGrads& g) {
    ParamView v;
    for (std::size_t l = 0; l < p.linear.size(); ++l) {
        for (Eigen::Index i = 0; i < p.linear[l].weight.size(); ++i) {
            v.params.push_back(p.linear[l].weight.data() + i);
            v.grads.push_back(g.linear[l].weight.data() + i);
        }
        for (Eigen::Index i = 0; i < p.linear[l].bias.size(); ++i) {
            v.params.push_back(p.linear[l].bias.data() + i);
            v.grads.push_back(g.linear[l].bias.data() + i);
        }
    }
    for (std::size_t l = 0; l < p.bn.size(); ++l) {
        if (!p.bn[l]) continue;
        for (Eigen::Index i = 0; i < p.bn[l]->scale.size(); ++i) {
            v.params.push_back(p.bn[l]->scale.data() + i);
            v.grads.push_back(g.bn[l]->dscale.data() + i);
        }
        for (Eigen::Index i = 0; i < p.bn[l]->shift.size(); ++i) {
            v.params.push_back(p.bn[l]->shift.data() + i);
            v.grads.push_back(g.bn[l]->dshift.data() + i);
        }
    }
    return v;
}

double loss_at(MlpParams& p, const Matrix& x, const Vector& dscore) {
    // Fresh Train-mode forward; running-stat updates do not affect scores.
    const Vector s = forward(p, x, Mode::Train);
    return dscore.dot(s);
}

// Max relative error between analytic and central-difference gradients.
double gradient_check(const MlpSpec& spec, std::uint64_t data_seed) {
    MlpParams p = init(spec);
    std::mt19937_64 rng(data_seed);
    std::normal_distribution<double> dn(0.0, 1.0);
    // Zero-init biases can park a pre-activation exactly on the ReLU kink
    // (a fully dead previous layer feeds exact zeros); jitter them so the
    // finite-difference probe stays on one side.
    for (auto& lp : p.linear)
        for (Eigen::Index i = 0; i < lp.bias.size(); ++i)
            lp.bias[i] = 0.05 * dn(rng);
    const int n = 6;
    Matrix x(n, spec.layer_dims.front());
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = dn(rng);
    Vector dscore(n);
    for (int i = 0; i < n; ++i) dscore[i] = dn(rng);

    ForwardCache cache;
    forward(p, x, Mode::Train, &cache);
    const MlpGrads g = backward(p, cache, dscore);
    ParamView v = flatten(p, g);

    double worst = 0.0;
    const double h = 1e-5;
    for (std::size_t k = 0; k < v.params.size(); ++k) {
        double* w = v.params[k];
        const double orig = *w;
        *w = orig + h;
        const double up = loss_at(p, x, dscore);
        *w = orig - h;
        const double down = loss_at(p, x, dscore);
        *w = orig;
        const double fd = (up - down) / (2 * h);
        const double an = *v.grads[k];
        const double rel = std::abs(fd - an) / std::max(1.0, std::abs(an));
        worst = std::max(worst, rel);
    }
    return worst;
}

}  // namespace

TEST_CASE("init is deterministic and sets the documented defaults") {
    const MlpSpec spec = MlpSpec::make({2, 4, 1}, true, 0.0, 7);
    const MlpParams a = init(spec);
    const MlpParams b = init(spec);
    for (std::size_t l = 0; l < a.linear.size(); ++l) {
        CHECK(a.linear[l].weight == b.linear[l].weight);
        CHECK(a.linear[l].bias.isZero(0.0));
    }
    REQUIRE(a.bn[0]);
    CHECK(a.bn[0]->scale.isConstant(1.0));
    CHECK(a.bn[0]->shift.isZero(0.0));
    CHECK(a.bn[0]->running_mean.isZero(0.0));
    CHECK(a.bn[0]->running_var.isConstant(1.0));
}

TEST_CASE("invalid specs are rejected") {
    CHECK_THROWS_AS(init(MlpSpec::make({2}, false, 0.0, 7)), ConfigError);
    CHECK_THROWS_AS(init(MlpSpec::make({2, 4, 3}, false, 0.0, 7)), ConfigError);
    CHECK_THROWS_AS(init(MlpSpec::make({2, 4, 1}, false, 1.0, 7)), ConfigError);
}

TEST_CASE("zero network scores zero; Eval forward is deterministic") {
    MlpParams p = init(MlpSpec::make({3, 5, 1}, false, 0.0, 1));
    for (auto& lp : p.linear) {
        lp.weight.setZero();
        lp.bias.setZero();
    }
    Matrix x(4, 3);
    x.setRandom();
    CHECK(eval_scores(p, x).isZero(0.0));

    MlpParams q = init(MlpSpec::make({3, 8, 1}, true, 0.0, 3));
    const Vector s1 = eval_scores(q, x);
    const Vector s2 = eval_scores(q, x);
    CHECK(s1 == s2);
}

TEST_CASE("single linear layer matches hand arithmetic") {
    MlpParams p = init(MlpSpec::make({2, 1}, false, 0.0, 0));
    p.linear[0].weight << 1.0, 2.0;
    p.linear[0].bias << 0.5;
    Matrix x(1, 2);
    x << 3.0, -1.0;
    CHECK(eval_scores(p, x)[0] == doctest::Approx(1.5).epsilon(1e-15));

    ForwardCache cache;
    forward(p, x, Mode::Train, &cache);
    Vector dscore(1);
    dscore << 1.0;
    const MlpGrads g = backward(p, cache, dscore);
    CHECK(g.linear[0].weight(0, 0) == doctest::Approx(3.0));
    CHECK(g.linear[0].weight(0, 1) == doctest::Approx(-1.0));
    CHECK(g.linear[0].bias[0] == doctest::Approx(1.0));
}

TEST_CASE("zero dscore gives exactly zero gradients") {
    MlpParams p = init(MlpSpec::make({2, 6, 4, 1}, true, 0.0, 5));
    Matrix x(5, 2);
    x.setRandom();
    ForwardCache cache;
    forward(p, x, Mode::Train, &cache);
    const MlpGrads g = backward(p, cache, Vector::Zero(5));
    for (const auto& lp : g.linear) {
        CHECK(lp.weight.isZero(0.0));
        CHECK(lp.bias.isZero(0.0));
    }
    for (const auto& b : g.bn)
        if (b) {
            CHECK(b->dscale.isZero(0.0));
            CHECK(b->dshift.isZero(0.0));
        }
}

TEST_CASE("backward matches finite differences with and without batch norm") {
    for (bool bn : {false, true}) {
        for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
            const MlpSpec spec = MlpSpec::make({2, 5, 3, 1}, bn, 0.0, seed);
            CHECK(gradient_check(spec, seed * 101) < 1e-4);
        }
    }
}

TEST_CASE("shape and mode contract errors") {
    MlpParams p = init(MlpSpec::make({2, 4, 1}, true, 0.0, 1));
    Matrix bad(3, 5);
    bad.setZero();
    CHECK_THROWS_AS(forward(p, bad, Mode::Eval), ShapeError);

    Matrix one(1, 2);
    one.setZero();
    CHECK_THROWS_AS(forward(p, one, Mode::Train), ShapeError);  // bn, batch 1
    CHECK_NOTHROW(forward(p, one, Mode::Eval));

    Matrix x(4, 2);
    x.setRandom();
    ForwardCache eval_cache;
    forward(p, x, Mode::Eval, &eval_cache);
    CHECK_THROWS_AS(backward(p, eval_cache, Vector::Zero(4)), ContractError);
    ForwardCache cache;
    forward(p, x, Mode::Train, &cache);
    CHECK_THROWS_AS(backward(p, cache, Vector::Zero(3)), ShapeError);
}

TEST_CASE("adam: zero grads leave params unchanged and bump the step") {
    MlpParams p = init(MlpSpec::make({2, 3, 1}, false, 0.0, 9));
    const MlpParams before = p;
    AdamState st = make_adam_state(p);
    ForwardCache cache;
    Matrix x(2, 2);
    x.setRandom();
    forward(p, x, Mode::Train, &cache);
    const MlpGrads zero = backward(p, cache, Vector::Zero(2));
    adam_step(p, zero, st, 0.1, 0.0);
    CHECK(st.step == 1);
    for (std::size_t l = 0; l < p.linear.size(); ++l)
        CHECK(p.linear[l].weight == before.linear[l].weight);
}

TEST_CASE("adam: bias-corrected first step moves by ~lr") {
    MlpParams p = init(MlpSpec::make({1, 1}, false, 0.0, 0));
    p.linear[0].weight(0, 0) = 0.0;
    AdamState st = make_adam_state(p);
    MlpGrads g;
    g.linear.resize(1);
    g.linear[0].weight = Matrix::Constant(1, 1, 1.0);
    g.linear[0].bias = Vector::Zero(1);
    g.bn.assign(0, std::nullopt);
    adam_step(p, g, st, 0.1, 0.0);
    CHECK(p.linear[0].weight(0, 0) == doctest::Approx(-0.1).epsilon(1e-6));
}

TEST_CASE("adam: weight decay alone shrinks the parameter") {
    MlpParams p = init(MlpSpec::make({1, 1}, false, 0.0, 0));
    p.linear[0].weight(0, 0) = 1.0;
    AdamState st = make_adam_state(p);
    MlpGrads g;
    g.linear.resize(1);
    g.linear[0].weight = Matrix::Zero(1, 1);
    g.linear[0].bias = Vector::Zero(1);
    adam_step(p, g, st, 0.01, 0.05);
    // effective gradient 0.05 pushes the weight down
    CHECK(p.linear[0].weight(0, 0) < 1.0);
}

TEST_CASE("running statistics approach the batch statistics geometrically") {
    MlpParams p = init(MlpSpec::make({2, 3, 1}, true, 0.0, 13));
    Matrix x(8, 2);
    std::mt19937_64 rng(3);
    std::normal_distribution<double> dn(2.0, 1.5);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = dn(rng);

    // One pass to learn what the batch statistics are.
    ForwardCache cache;
    forward(p, x, Mode::Train, &cache);
    const Vector batch_mean =
        (cache.layers[0].pre_bn.colwise().mean()).transpose();

    const int extra = 20;
    for (int i = 0; i < extra; ++i) forward(p, x, Mode::Train);
    const double shrink = std::pow(1.0 - kBatchNormMomentum, extra + 1);
    const Vector expected =
        batch_mean + shrink * (Vector::Zero(3) - batch_mean);
    CHECK((p.bn[0]->running_mean - expected).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("dropout zeroes activations at the configured rate") {
    const double rate = 0.3;
    MlpParams p = init(MlpSpec::make({1, 1000, 1}, false, rate, 21));
    Matrix x = Matrix::Constant(64, 1, 1.0);
    // Push every pre-activation positive so only dropout can zero things.
    p.linear[0].bias.setConstant(10.0);
    std::mt19937_64 rng(99);
    ForwardCache cache;
    forward(p, x, Mode::Train, &cache, &rng);
    const auto& mask = cache.layers[0].dropout_mask;
    REQUIRE(mask.size() == 64 * 1000);
    const double zeros =
        static_cast<double>((mask.array() == 0.0).count()) / mask.size();
    const double se = std::sqrt(rate * (1 - rate) / mask.size());
    CHECK(std::abs(zeros - rate) < 3 * se);
    // surviving entries carry the inverted scale
    CHECK(mask.maxCoeff() == doctest::Approx(1.0 / (1.0 - rate)));
    // Eval mode applies no dropout and needs no rng
    CHECK_NOTHROW(forward(p, x, Mode::Eval));
}

TEST_CASE("checkpoint round-trips bit-exactly") {
    MlpParams p = init(MlpSpec::make({3, 6, 4, 1}, true, 0.1, 77));
    p.bn[0]->running_mean.setRandom();
    p.bn[0]->running_var = p.bn[0]->running_var.array() + 0.25;
    const std::string path = "checkpoint_test.bin";
    save_checkpoint(p, path);
    const MlpParams q = load_checkpoint(path);
    CHECK(q.spec.layer_dims == p.spec.layer_dims);
    CHECK(q.spec.use_batchnorm == p.spec.use_batchnorm);
    CHECK(q.spec.dropout_rates == p.spec.dropout_rates);
    CHECK(q.spec.seed == p.spec.seed);
    for (std::size_t l = 0; l < p.linear.size(); ++l) {
        CHECK(q.linear[l].weight == p.linear[l].weight);
        CHECK(q.linear[l].bias == p.linear[l].bias);
    }
    for (std::size_t l = 0; l < p.bn.size(); ++l) {
        REQUIRE(static_cast<bool>(q.bn[l]) == static_cast<bool>(p.bn[l]));
        if (p.bn[l]) {
            CHECK(q.bn[l]->scale == p.bn[l]->scale);
            CHECK(q.bn[l]->running_mean == p.bn[l]->running_mean);
            CHECK(q.bn[l]->running_var == p.bn[l]->running_var);
        }
    }
    std::remove(path.c_str());
}
