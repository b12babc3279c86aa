#include <gtest/gtest.h>

#include "helpers.hpp"

using namespace qflow;
using qtest::make_params;

TEST(Forward, HandEvaluatedRelu) {
    const Params p = make_params({{1, -1}}, {{2}});
    const Vector x{3, 1};
    EXPECT_EQ(forward(p, x), Vector{4});
}

TEST(Forward, ZeroInputGivesZeroWithoutBias) {
    Rng rng(3);
    const Params p = qtest::gaussian_params(rng, 3, 2, 5);
    EXPECT_EQ(forward(p, Vector(3, 0.0)), Vector(2, 0.0));
}

TEST(Forward, LeakySlopeOneIsLinear) {
    Params p = make_params({{1, 0}, {0, 1}}, {{1, 1}});
    p.activation = Activation::leaky_relu(1.0);
    EXPECT_EQ(forward(p, Vector{-1, 2}), Vector{1});
}

TEST(Forward, BiasesEnterBothLayers) {
    Params p = make_params({{1}}, {{2}});
    p.b1 = Vector{-0.5};
    p.b2 = Vector{3};
    EXPECT_DOUBLE_EQ(forward(p, Vector{2})[0], 2 * 1.5 + 3);
    EXPECT_DOUBLE_EQ(forward(p, Vector{0})[0], 3);
}

TEST(Forward, RejectsWrongInputLength) {
    const Params p = make_params({{1, -1}}, {{2}});
    EXPECT_THROW(forward(p, Vector{1}), ShapeError);
}

TEST(NeuronForward, HandEvaluated) {
    const Params p = make_params({{1, 0}, {0, 1}}, {{1, 2}});
    EXPECT_EQ(neuron_forward(p, 1, Vector{5, 3}), Vector{6});
}

TEST(NeuronForward, ZeroOutputColumn) {
    const Params p = make_params({{1, 4}, {2, 1}}, {{0, 2}});
    EXPECT_EQ(neuron_forward(p, 0, Vector{5, 3}), Vector{0});
}

TEST(NeuronForward, UndefinedWithBiases) {
    Params p = make_params({{1}}, {{1}});
    p.b1 = Vector{0};
    p.b2 = Vector{0};
    EXPECT_THROW(neuron_forward(p, 0, Vector{1}), UnsupportedModeError);
}

TEST(NeuronForward, SumsToForward) {
    Rng rng(11);
    for (int t = 0; t < 50; ++t) {
        const Params p = qtest::gaussian_params(rng, 3, 2, 4);
        const Vector x = qtest::gaussian_vector(rng, 3);
        Vector total(2, 0.0);
        for (std::size_t k = 0; k < 4; ++k) {
            const Vector part = neuron_forward(p, k, x);
            for (std::size_t j = 0; j < 2; ++j) total[j] += part[j];
        }
        EXPECT_LT(qtest::max_abs_diff(total, forward(p, x)), 1e-12);
    }
}

TEST(Forward, PositivelyHomogeneousWithoutBias) {
    Rng rng(12);
    for (int t = 0; t < 50; ++t) {
        const Params p = qtest::gaussian_params(rng, 2, 1, 3);
        const Vector x = qtest::gaussian_vector(rng, 2);
        const double a = rng.uniform(0.0, 5.0);
        Vector ax = x;
        for (double& v : ax) v *= a;
        EXPECT_NEAR(forward(p, ax)[0], a * forward(p, x)[0], 1e-12 * (1 + std::abs(forward(p, ax)[0])));
    }
}

TEST(Bilinear, PythagoreanZero) {
    const Params p = make_params({{3, 4}}, {{5}});
    EXPECT_EQ(bilinear(p, p, 0), 0.0);
}

TEST(Bilinear, HandEvaluated) {
    const Params p = make_params({{1, 0}}, {{2}});
    EXPECT_EQ(bilinear(p, p, 0), -3.0);
}

TEST(Bilinear, BiasJoinsInputBlock) {
    Params p = make_params({{1, 0}}, {{1}});
    p.b1 = Vector{2};
    p.b2 = Vector{7}; // b2 belongs to no neuron and does not enter the form
    EXPECT_EQ(bilinear(p, p, 0), 4.0);
}

TEST(Bilinear, SymmetricAndBilinear) {
    Rng rng(5);
    for (int t = 0; t < 30; ++t) {
        const bool bias = t % 2 == 0;
        const Params a = qtest::gaussian_params(rng, 3, 2, 3, bias);
        const Params b = qtest::gaussian_params(rng, 3, 2, 3, bias);
        const Params c = qtest::gaussian_params(rng, 3, 2, 3, bias);
        for (std::size_t k = 0; k < 3; ++k) {
            EXPECT_NEAR(bilinear(a, b, k), bilinear(b, a, k), 1e-12);
            EXPECT_NEAR(bilinear(axpy(2.5, b, c), a, k), 2.5 * bilinear(b, a, k) + bilinear(c, a, k), 1e-11);
        }
    }
}

TEST(Bilinear, LayoutMismatch) {
    const Params a = make_params({{1, 0}}, {{1}});
    const Params b = make_params({{1, 0, 0}}, {{1}});
    EXPECT_THROW(bilinear(a, b, 0), ShapeError);
}

TEST(Charges, HandEvaluated) {
    const Params p = make_params({{1, 0}, {0, 2}}, {{3, 1}});
    EXPECT_EQ(charges(p), (Vector{-8, 3}));
}

TEST(Charges, NonNegativeWithZeroOutput) {
    Rng rng(8);
    Params p = qtest::gaussian_params(rng, 3, 2, 4);
    for (double& w : p.w2.data()) w = 0.0;
    for (double c : charges(p)) EXPECT_GE(c, 0.0);
}

TEST(Charges, BalancedNetworkHasZeroCharges) {
    const Params p = make_params({{3, 4}, {0, 1}}, {{5, -1}});
    EXPECT_EQ(charges(p), (Vector{0, 0}));
}

TEST(Validate, RejectsBadShapes) {
    Params p = make_params({{1, 0}}, {{1, 2}});
    EXPECT_THROW(validate(p), ShapeError);
    p = make_params({{1, 0}}, {{1}});
    p.b1 = Vector{0};
    EXPECT_THROW(validate(p), ShapeError);
    p.b2 = Vector{0, 0};
    EXPECT_THROW(validate(p), ShapeError);
}

TEST(Validate, RejectsNonFinite) {
    Params p = make_params({{1, NAN}}, {{1}});
    EXPECT_THROW(validate(p), DomainError);
}

TEST(Activation, LeakySlopeRange) {
    EXPECT_THROW(Activation::leaky_relu(-0.1), DomainError);
    EXPECT_THROW(Activation::leaky_relu(1.5), DomainError);
    const Activation a = Activation::leaky_relu(0.2);
    EXPECT_DOUBLE_EQ(a(-2.0), -0.4);
    EXPECT_EQ(a.derivative(0.0), 0.0);
    EXPECT_EQ(a.derivative(0.0, 1.0), 1.0);
}

TEST(Rng, SameSeedSameStream) {
    Rng a(42, Stream::w1), b(42, Stream::w1), c(42, Stream::w2);
    for (int i = 0; i < 100; ++i) {
        const auto x = a.next_u64();
        EXPECT_EQ(x, b.next_u64());
        EXPECT_NE(x, c.next_u64());
    }
}

TEST(Rng, BelowStaysInRange) {
    Rng r(1);
    for (int i = 0; i < 1000; ++i) EXPECT_LT(r.below(7), 7u);
}
