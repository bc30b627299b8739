#include <doctest.h>

#include <cmath>

#include "fd_harness.hpp"
#include "oracles.hpp"
#include "vad/ops.hpp"
#include "vad/tape.hpp"

using namespace vad;

namespace {
NodeId leaf_of(Tape& t, const Tensor& v, bool grad = false) { return t.leaf(v, grad); }
}  // namespace

TEST_CASE("tensor shape bookkeeping") {
    Tensor t({2, 3, 4});
    CHECK(t.numel() == 24);
    CHECK_THROWS(Tensor({2, 0, 4}));
    CHECK_THROWS(Tensor({2, 2}, std::vector<float>{1.0f, 2.0f, 3.0f}));
}

TEST_CASE("conv2d identity kernel preserves input") {
    std::mt19937_64 rng(7);
    const Tensor x = oracle::rand_tensor({2, 4, 5, 1}, rng);
    Tensor k({1, 1, 1, 1}, std::vector<float>{1.0f});
    Tape t;
    const NodeId out = conv2d(t, leaf_of(t, x), leaf_of(t, k));
    CHECK(t.value(out).shape == x.shape);
    for (std::size_t i = 0; i < x.data.size(); ++i) CHECK(t.value(out).data[i] == x.data[i]);
}

TEST_CASE("conv2d ones/valid matches the frozen naive-oracle value") {
    const Tensor x({1, 3, 3, 1}, 1.0f);
    const Tensor k({2, 2, 1, 1}, 1.0f);
    Conv2dOpts o;
    o.padding = Padding::Valid;
    Tape t;
    const NodeId out = conv2d(t, leaf_of(t, x), leaf_of(t, k), o);
    CHECK(t.value(out).shape == std::vector<int>{1, 2, 2, 1});
    // the naive quadruple loop gives 4.0 at every output cell
    const Tensor ref = oracle::conv2d_naive(x, k, {1, 1}, {1, 1}, Padding::Valid);
    for (int i = 0; i < 4; ++i) {
        CHECK(ref.data[static_cast<std::size_t>(i)] == doctest::Approx(4.0));
        CHECK(t.value(out).data[static_cast<std::size_t>(i)] == doctest::Approx(4.0));
    }
}

TEST_CASE("dilated 3x3 conv2d touches only dilated offsets of an impulse") {
    Tensor x({1, 9, 9, 1}, 0.0f);
    x.data[static_cast<std::size_t>(x.at4(0, 4, 4, 0))] = 1.0f;
    const Tensor k({3, 3, 1, 1}, 1.0f);
    Conv2dOpts o;
    o.dilation = {2, 2};
    Tape t;
    const NodeId out = conv2d(t, leaf_of(t, x), leaf_of(t, k), o);
    const Tensor ref = oracle::conv2d_naive(x, k, {1, 1}, {2, 2}, Padding::Same);
    const Tensor& got = t.value(out);
    REQUIRE(got.shape == ref.shape);
    for (int y = 0; y < 9; ++y)
        for (int xx = 0; xx < 9; ++xx) {
            const float v = got.data[got.at4(0, y, xx, 0)];
            CHECK(v == doctest::Approx(ref.data[ref.at4(0, y, xx, 0)]));
            // receptive field is 5x5 with taps on even offsets only
            const bool dilated_tap = std::abs(y - 4) % 2 == 0 && std::abs(xx - 4) % 2 == 0 &&
                                     std::abs(y - 4) <= 2 && std::abs(xx - 4) <= 2;
            CHECK(v == (dilated_tap ? 1.0f : 0.0f));
        }
}

TEST_CASE("conv2d rejects channel mismatch naming both shapes") {
    Tape t;
    const NodeId x = t.leaf(Tensor({1, 3, 3, 2}, 0.5f), false);
    const NodeId k = t.leaf(Tensor({3, 3, 4, 8}, 0.1f), false);
    try {
        conv2d(t, x, k);
        FAIL("expected invalid_argument");
    } catch (const std::invalid_argument& e) {
        const std::string msg = e.what();
        CHECK(msg.find("(1,3,3,2)") != std::string::npos);
        CHECK(msg.find("(3,3,4,8)") != std::string::npos);
    }
}

TEST_CASE("conv2d agrees with the naive quadruple loop on random tensors") {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 8; ++trial) {
        const int ci = 1 + static_cast<int>(rng() % 3);
        const int co = 1 + static_cast<int>(rng() % 3);
        const Tensor x = oracle::rand_tensor({2, 6, 7, ci}, rng);
        const Tensor k = oracle::rand_tensor({3, 3, ci, co}, rng);
        Conv2dOpts o;
        o.stride = {1 + static_cast<int>(rng() % 2), 1 + static_cast<int>(rng() % 2)};
        o.dilation = {1 + static_cast<int>(rng() % 2), 1};
        o.padding = (rng() % 2) ? Padding::Same : Padding::Valid;
        Tape t;
        const NodeId out = conv2d(t, leaf_of(t, x), leaf_of(t, k), o);
        const Tensor ref = oracle::conv2d_naive(x, k, o.stride, o.dilation, o.padding);
        REQUIRE(t.value(out).shape == ref.shape);
        for (std::size_t i = 0; i < ref.data.size(); ++i)
            CHECK(t.value(out).data[i] == doctest::Approx(ref.data[i]).epsilon(1e-4));
    }
}

TEST_CASE("conv3d identity and ones-kernel examples") {
    std::mt19937_64 rng(3);
    const Tensor x = oracle::rand_tensor({1, 2, 3, 3, 1}, rng);
    Tensor k1({1, 1, 1, 1, 1}, std::vector<float>{1.0f});
    Tape t;
    const NodeId same = conv3d(t, leaf_of(t, x), leaf_of(t, k1));
    for (std::size_t i = 0; i < x.data.size(); ++i) CHECK(t.value(same).data[i] == x.data[i]);

    const Tensor ones({1, 2, 2, 2, 1}, 1.0f);
    const Tensor k2({2, 2, 2, 1, 1}, 1.0f);
    Conv3dOpts o;
    o.padding = Padding::Valid;
    const NodeId scalar8 = conv3d(t, leaf_of(t, ones), leaf_of(t, k2), o);
    CHECK(t.value(scalar8).shape == std::vector<int>{1, 1, 1, 1, 1});
    CHECK(t.value(scalar8).data[0] == doctest::Approx(8.0));
}

TEST_CASE("conv3d same-padding stride (1,2,2) halves H and W only") {
    Tape t;
    const NodeId x = t.leaf(Tensor({1, 8, 24, 32, 1}, 0.3f), false);
    const NodeId k = t.leaf(Tensor({3, 3, 3, 1, 4}, 0.1f), false);
    Conv3dOpts o;
    o.stride = {1, 2, 2};
    const NodeId out = conv3d(t, x, k, o);
    CHECK(t.value(out).shape == std::vector<int>{1, 8, 12, 16, 4});
}

TEST_CASE("conv3d agrees with the naive loop") {
    std::mt19937_64 rng(11);
    const Tensor x = oracle::rand_tensor({1, 4, 5, 6, 2}, rng);
    const Tensor k = oracle::rand_tensor({3, 3, 3, 2, 2}, rng);
    Conv3dOpts o;
    o.stride = {2, 1, 2};
    Tape t;
    const NodeId out = conv3d(t, leaf_of(t, x), leaf_of(t, k), o);
    const Tensor ref = oracle::conv3d_naive(x, k, o.stride, o.padding);
    REQUIRE(t.value(out).shape == ref.shape);
    for (std::size_t i = 0; i < ref.data.size(); ++i)
        CHECK(t.value(out).data[i] == doctest::Approx(ref.data[i]).epsilon(1e-4));
}

TEST_CASE("upsample_nearest basics") {
    Tape t;
    std::mt19937_64 rng(5);
    const Tensor x = oracle::rand_tensor({1, 2, 3, 2}, rng);
    const NodeId id1 = upsample_nearest2d(t, leaf_of(t, x), 1);
    for (std::size_t i = 0; i < x.data.size(); ++i) CHECK(t.value(id1).data[i] == x.data[i]);

    const Tensor one({1, 1, 1, 1}, std::vector<float>{3.0f});
    const NodeId up = upsample_nearest2d(t, leaf_of(t, one), 2);
    CHECK(t.value(up).shape == std::vector<int>{1, 2, 2, 1});
    for (float v : t.value(up).data) CHECK(v == 3.0f);

    CHECK_THROWS_AS(upsample_nearest2d(t, leaf_of(t, one), 0), std::invalid_argument);
    CHECK_THROWS_AS(upsample_nearest2d(t, leaf_of(t, one), -2), std::invalid_argument);
}

TEST_CASE("conv_transpose2d is the adjoint of conv2d on randomized shapes") {
    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 12; ++trial) {
        const int B = 1 + static_cast<int>(rng() % 2);
        const int H = 4 + static_cast<int>(rng() % 3);
        const int W = 5 + static_cast<int>(rng() % 4);
        const int ci = 1 + static_cast<int>(rng() % 3);
        const int co = 1 + static_cast<int>(rng() % 3);
        Conv2dOpts o;
        o.stride = {1 + static_cast<int>(rng() % 2), 1 + static_cast<int>(rng() % 2)};
        o.padding = (rng() % 2) ? Padding::Same : Padding::Valid;
        const Tensor x = oracle::rand_tensor({B, H, W, ci}, rng);
        const Tensor k = oracle::rand_tensor({3, 3, ci, co}, rng);

        Tape t;
        const NodeId cx = conv2d(t, leaf_of(t, x), leaf_of(t, k), o);
        const Tensor y = oracle::rand_tensor(t.value(cx).shape, rng);
        const NodeId cty = conv_transpose2d(t, leaf_of(t, y), leaf_of(t, k), o, {H, W});
        const double lhs = oracle::inner(t.value(cx), y);
        const double rhs = oracle::inner(x, t.value(cty));
        CHECK(std::abs(lhs - rhs) <= 1e-5 * std::max({std::abs(lhs), std::abs(rhs), 1.0}));
    }
}

TEST_CASE("activations: fixed points, slope, saturation") {
    Tape t;
    const Tensor z({5}, std::vector<float>{0.0f, -1.0f, 1.0f, 20.0f, -20.0f});
    const NodeId lr = leaky_relu(t, leaf_of(t, z), 0.2f);
    CHECK(t.value(lr).data[0] == 0.0f);
    CHECK(t.value(lr).data[1] == doctest::Approx(-0.2f));
    CHECK(t.value(lr).data[2] == 1.0f);
    CHECK_THROWS_AS(leaky_relu(t, leaf_of(t, z), 1.0f), std::invalid_argument);
    CHECK_THROWS_AS(leaky_relu(t, leaf_of(t, z), -0.1f), std::invalid_argument);

    const NodeId sg = sigmoid(t, leaf_of(t, z));
    CHECK(t.value(sg).data[0] == doctest::Approx(0.5));
    CHECK(std::abs(t.value(sg).data[3] - 1.0f) < 1e-8);
    CHECK(std::abs(t.value(sg).data[4] - 0.0f) < 1e-8);
    CHECK(t.value(sg).all_finite());
    for (float v : t.value(sg).data) {
        CHECK(v > 0.0f);
        CHECK(v < 1.0f);
    }
}

TEST_CASE("mse examples and naive-oracle agreement") {
    Tape t;
    std::mt19937_64 rng(9);
    const Tensor x = oracle::rand_tensor({3, 4}, rng);
    CHECK(t.scalar(mse(t, leaf_of(t, x), leaf_of(t, x))) == 0.0);

    const Tensor a({2}, std::vector<float>{0.0f, 1.0f});
    const Tensor b({2}, std::vector<float>{1.0f, 0.0f});
    CHECK(t.scalar(mse(t, leaf_of(t, a), leaf_of(t, b))) == doctest::Approx(1.0));

    const Tensor p = oracle::rand_tensor({4, 5, 2}, rng);
    const Tensor q = oracle::rand_tensor({4, 5, 2}, rng);
    CHECK(t.scalar(mse(t, leaf_of(t, p), leaf_of(t, q))) ==
          doctest::Approx(oracle::mse_naive(p, q)).epsilon(1e-6));

    const Tensor bad({3}, 0.0f);
    CHECK_THROWS_AS(mse(t, leaf_of(t, p), leaf_of(t, bad)), std::invalid_argument);
}

TEST_CASE("backward: mse(x,x) has zero gradient and scaling is linear") {
    std::mt19937_64 rng(17);
    const Tensor x = oracle::rand_tensor({2, 3, 4, 1}, rng);
    {
        Tape t;
        const NodeId xi = t.leaf(x, true);
        const NodeId l = mse(t, xi, xi);
        t.backward(l);
        for (float g : t.grad(xi).data) CHECK(g == 0.0f);
    }
    const Tensor y = oracle::rand_tensor({2, 3, 4, 1}, rng);
    Tensor g1, g3;
    {
        Tape t;
        const NodeId xi = t.leaf(x, true);
        const NodeId l = mse(t, xi, t.leaf(y, false));
        t.backward(l);
        g1 = t.grad(xi);
    }
    {
        Tape t;
        const NodeId xi = t.leaf(x, true);
        const NodeId l = scale(t, mse(t, xi, t.leaf(y, false)), 3.0f);
        t.backward(l);
        g3 = t.grad(xi);
    }
    for (std::size_t i = 0; i < g1.data.size(); ++i)
        CHECK(g3.data[i] == doctest::Approx(3.0f * g1.data[i]));
}

TEST_CASE("backward: unreachable parameters get zero gradients") {
    Tape t;
    std::mt19937_64 rng(2);
    const NodeId used = t.leaf(oracle::rand_tensor({2, 2}, rng), true);
    const NodeId unused = t.leaf(oracle::rand_tensor({3, 3}, rng), true);
    const NodeId loss = mse(t, used, t.leaf(Tensor({2, 2}, 0.0f), false));
    t.backward(loss);
    CHECK(t.grad(used).all_finite());
    const Tensor gz = t.grad(unused);
    CHECK(gz.shape == std::vector<int>{3, 3});
    for (float g : gz.data) CHECK(g == 0.0f);
}

TEST_CASE("finite differences agree for every layer type (spot seeds)") {
    for (std::uint64_t seed : {101ULL, 202ULL, 303ULL}) {
        for (const auto& r : fdh::run_layer_checks(seed)) {
            INFO(r.name << " seed " << seed);
            CHECK(r.rel_err < 1e-3);
        }
    }
}

TEST_CASE("reshape round-trip is the identity on data") {
    std::mt19937_64 rng(31);
    const Tensor x = oracle::rand_tensor({2, 3, 4, 5}, rng);
    Tape t;
    const NodeId a = t.leaf(x, false);
    const NodeId b = reshape(t, a, {6, 20});
    const NodeId c = reshape(t, b, {2, 3, 4, 5});
    CHECK(t.value(c).shape == x.shape);
    for (std::size_t i = 0; i < x.data.size(); ++i) CHECK(t.value(c).data[i] == x.data[i]);
}

TEST_CASE("determinism: identical inputs give bit-identical conv outputs") {
    std::mt19937_64 rng(41);
    const Tensor x = oracle::rand_tensor({2, 8, 9, 3}, rng);
    const Tensor k = oracle::rand_tensor({3, 3, 3, 4}, rng);
    Tensor out1, out2;
    {
        Tape t;
        out1 = t.value(conv2d(t, t.leaf(x, false), t.leaf(k, false)));
    }
    {
        Tape t;
        out2 = t.value(conv2d(t, t.leaf(x, false), t.leaf(k, false)));
    }
    REQUIRE(out1.data.size() == out2.data.size());
    for (std::size_t i = 0; i < out1.data.size(); ++i) CHECK(out1.data[i] == out2.data[i]);
}

TEST_CASE("f64 accumulation mode matches f32 within float tolerance") {
    std::mt19937_64 rng(51);
    const Tensor x = oracle::rand_tensor({1, 6, 6, 2}, rng);
    const Tensor k = oracle::rand_tensor({3, 3, 2, 2}, rng);
    Tensor fast, slow;
    {
        Tape t;
        fast = t.value(conv2d(t, t.leaf(x, false), t.leaf(k, false)));
    }
    {
        AccumModeGuard guard(AccumMode::F64);
        Tape t;
        slow = t.value(conv2d(t, t.leaf(x, false), t.leaf(k, false)));
    }
    for (std::size_t i = 0; i < fast.data.size(); ++i)
        CHECK(fast.data[i] == doctest::Approx(slow.data[i]).epsilon(1e-5));
}
