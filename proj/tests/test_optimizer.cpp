#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "vad/optimizer.hpp"

using namespace vad;

TEST_CASE("dual_loss is the weighted sum from the loss-weight table") {
    CHECK(dual_loss(0.0, 0.0, {0.75f, 1.0f}) == 0.0);
    CHECK(dual_loss(0.4, 0.2, {0.75f, 1.0f}) == doctest::Approx(0.5));
    CHECK(dual_loss(0.4, 0.2, {1.0f, 1.0f}) == doctest::Approx(0.6));
    CHECK_THROWS_AS(dual_loss(0.1, 0.1, {0.0f, 0.0f}), std::invalid_argument);
    CHECK_THROWS_AS(dual_loss(0.1, 0.1, {-1.0f, 1.0f}), std::invalid_argument);
}

TEST_CASE("dual_loss linearity and stream-swap symmetry") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 2.0);
    for (int i = 0; i < 50; ++i) {
        const double a = u(rng), b = u(rng), c = u(rng);
        const DualLossWeights w{static_cast<float>(u(rng)), static_cast<float>(u(rng) + 0.01)};
        CHECK(dual_loss(a + c, b, w) ==
              doctest::Approx(dual_loss(a, b, w) + c * static_cast<double>(w.w_image)));
        const DualLossWeights swapped{w.w_flow, w.w_image};
        CHECK(dual_loss(a, b, w) == doctest::Approx(dual_loss(b, a, swapped)));
    }
}

TEST_CASE("adam: zero gradient leaves parameters unchanged") {
    std::mt19937_64 rng(5);
    std::vector<Tensor> params{oracle::rand_tensor({4, 3}, rng)};
    const Tensor before = params[0];
    AdamState st = AdamState::init(params);
    adam_step(params, {Tensor::zeros({4, 3})}, st);
    for (std::size_t i = 0; i < before.data.size(); ++i) CHECK(params[0].data[i] == before.data[i]);
}

TEST_CASE("adam: first-step magnitude follows the closed form") {
    // with zero moments, g=1: mhat=1, vhat=1, step = lr/(1+eps)
    std::vector<Tensor> params{Tensor::scalar(0.0f)};
    AdamState st = AdamState::init(params);  // lr 2e-4, beta1 0.5
    adam_step(params, {Tensor::scalar(1.0f)}, st);
    const double expected = 2e-4 / (1.0 + 1e-8);
    CHECK(std::abs(params[0].data[0] + expected) < 1e-9);
    CHECK(st.t == 1);
}

TEST_CASE("adam: repeated identical gradients move monotonically against g") {
    std::vector<Tensor> params{Tensor::scalar(1.0f)};
    AdamState st = AdamState::init(params);
    float prev = params[0].data[0];
    for (int i = 0; i < 5; ++i) {
        adam_step(params, {Tensor::scalar(2.0f)}, st);
        CHECK(params[0].data[0] < prev);
        prev = params[0].data[0];
    }
}

TEST_CASE("adam: non-finite gradient rejects the step with a diagnostic") {
    std::vector<Tensor> params{Tensor::scalar(1.0f)};
    AdamState st = AdamState::init(params);
    Tensor bad = Tensor::scalar(std::nanf(""));
    CHECK_THROWS_AS(adam_step(params, {bad}, st), std::runtime_error);
    CHECK(params[0].data[0] == 1.0f);
    CHECK(st.t == 0);
}

TEST_CASE("adam: gradient scaling keeps the step sign pattern") {
    std::mt19937_64 rng(7);
    const Tensor g = oracle::rand_tensor({10}, rng);
    for (float scale : {0.1f, 1.0f, 25.0f}) {
        std::vector<Tensor> params{Tensor::zeros({10})};
        AdamState st = AdamState::init(params);
        Tensor gs = g;
        for (auto& v : gs.data) v *= scale;
        adam_step(params, {gs}, st);
        for (std::size_t i = 0; i < g.data.size(); ++i) {
            if (g.data[i] > 0.0f) CHECK(params[0].data[i] < 0.0f);
            if (g.data[i] < 0.0f) CHECK(params[0].data[i] > 0.0f);
        }
    }
}

TEST_CASE("sgd: examples and scalar-loop oracle") {
    std::vector<Tensor> params{Tensor::scalar(1.0f)};
    sgd_step(params, {Tensor::scalar(0.0f)}, 0.0005f);
    CHECK(params[0].data[0] == 1.0f);
    sgd_step(params, {Tensor::scalar(2.0f)}, 0.0005f);
    CHECK(params[0].data[0] == doctest::Approx(0.999f));

    std::mt19937_64 rng(11);
    const Tensor p0 = oracle::rand_tensor({32}, rng);
    const Tensor g = oracle::rand_tensor({32}, rng);
    std::vector<Tensor> ps{p0};
    sgd_step(ps, {g}, 0.05f);
    for (std::size_t i = 0; i < p0.data.size(); ++i)
        CHECK(ps[0].data[i] == doctest::Approx(p0.data[i] - 0.05f * g.data[i]));
}

TEST_CASE("adam state shape mismatch is rejected") {
    std::vector<Tensor> params{Tensor::zeros({3})};
    AdamState st = AdamState::init(params);
    CHECK_THROWS_AS(adam_step(params, {Tensor::zeros({4})}, st), std::invalid_argument);
}
