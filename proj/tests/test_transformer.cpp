#include "dota/transformer.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace dota;
using dota::test::random_tensor;

namespace {

EncoderConfig small_config(std::size_t layers = 1) {
    EncoderConfig cfg;
    cfg.layers = layers;
    cfg.heads = 2;
    cfg.d_model = 8;
    cfg.d_ff = 12;
    return cfg;
}

EncoderParams random_params(const EncoderConfig& cfg, Prng& rng) {
    EncoderParams p = EncoderParams::init(cfg, rng);
    for (auto& t : p.tensors(""))
        if (t.name.find("ln") == std::string::npos || t.name.find("bias") != std::string::npos)
            for (auto& v : t.tensor->values()) v += rng.uniform(-0.2, 0.2);
    return p;
}

}  // namespace

TEST(PositionalEncoding, FirstRowAlternatesZeroOne) {
    const Tensor pe = sinusoidal_pe(16, 64);
    for (std::size_t j = 0; j < 64; ++j) EXPECT_EQ(pe(0, j), j % 2 == 0 ? 0.0 : 1.0);
}

TEST(PositionalEncoding, SecondRowFirstColumnIsSinOne) { EXPECT_NEAR(sinusoidal_pe(2, 8)(1, 0), std::sin(1.0), 1e-12); }

TEST(PositionalEncoding, ClosedFormAndRange) {
    const Tensor pe = sinusoidal_pe(20, 10);
    for (std::size_t t = 0; t < 20; ++t)
        for (std::size_t i = 0; i < 5; ++i) {
            const double angle = static_cast<double>(t) / std::pow(10000.0, 2.0 * i / 10.0);
            EXPECT_NEAR(pe(t, 2 * i), std::sin(angle), 1e-12);
            EXPECT_NEAR(pe(t, 2 * i + 1), std::cos(angle), 1e-12);
        }
    for (double v : pe.values()) EXPECT_LE(std::abs(v), 1.0);
}

TEST(PositionalEncoding, OddWidthRejected) { EXPECT_THROW(sinusoidal_pe(4, 7), ConfigError); }

TEST(EncoderConfig, HeadsMustDivideWidth) {
    EncoderConfig cfg = small_config();
    cfg.heads = 3;
    EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(Attention, SingleTokenIsProjectedValue) {
    const EncoderConfig cfg = small_config();
    Prng rng(1);
    const EncoderParams p = random_params(cfg, rng);
    const Tensor x = random_tensor({1, 8}, rng);
    const auto& l = p.layers[0];
    Tensor v = matmul(x, l.wv);
    add_row_bias(v, l.bv);
    Tensor expected = matmul(v, l.wo);
    add_row_bias(expected, l.bo);
    EXPECT_LE(test::rel_error(multi_head_attention(x, p, 0), expected), 1e-12);
}

TEST(Attention, WeightsAreDistributions) {
    const EncoderConfig cfg = small_config();
    for (int seed = 0; seed < 10; ++seed) {
        Prng rng(seed);
        const EncoderParams p = random_params(cfg, rng);
        AttentionContext ctx;
        multi_head_attention(random_tensor({6, 8}, rng, -4, 4), p, 0, &ctx);
        ASSERT_EQ(ctx.weights.size(), 2u);
        for (const auto& a : ctx.weights)
            for (std::size_t r = 0; r < 6; ++r) {
                double s = 0.0;
                for (double v : a.row(r)) {
                    EXPECT_GE(v, 0.0);
                    s += v;
                }
                EXPECT_NEAR(s, 1.0, 1e-12);
            }
    }
}

TEST(Attention, PermutationEquivariant) {
    const EncoderConfig cfg = small_config();
    Prng rng(2);
    const EncoderParams p = random_params(cfg, rng);
    const Tensor x = random_tensor({5, 8}, rng);
    const std::size_t perm[5] = {3, 0, 4, 1, 2};
    Tensor px({5, 8});
    for (std::size_t t = 0; t < 5; ++t)
        for (std::size_t j = 0; j < 8; ++j) px(t, j) = x(perm[t], j);
    const Tensor y = multi_head_attention(x, p, 0), py = multi_head_attention(px, p, 0);
    for (std::size_t t = 0; t < 5; ++t)
        for (std::size_t j = 0; j < 8; ++j) EXPECT_NEAR(py(t, j), y(perm[t], j), 1e-12);
}

TEST(Attention, DuplicateTokensGetIdenticalOutputs) {
    const EncoderConfig cfg = small_config();
    Prng rng(3);
    const EncoderParams p = random_params(cfg, rng);
    Tensor x = random_tensor({4, 8}, rng);
    for (std::size_t j = 0; j < 8; ++j) x(3, j) = x(1, j);
    const Tensor y = multi_head_attention(x, p, 0);
    for (std::size_t j = 0; j < 8; ++j) EXPECT_EQ(y(1, j), y(3, j));
}

TEST(Encoder, ZeroLayersIsIdentity) {
    EncoderConfig cfg = small_config(0);
    Prng rng(4);
    const EncoderParams p = EncoderParams::init(cfg, rng);
    const Tensor x = random_tensor({3, 8}, rng);
    EXPECT_EQ(encoder_forward(x, p), x);
}

TEST(Encoder, ZeroSublayerWeightsLeaveResidual) {
    const EncoderConfig cfg = small_config(2);
    Prng rng(5);
    EncoderParams p = EncoderParams::zeros(cfg);
    for (auto& l : p.layers) {
        l.ln1_gain.fill(1.0);
        l.ln2_gain.fill(1.0);
    }
    const Tensor x = random_tensor({4, 8}, rng);
    EXPECT_EQ(encoder_forward(x, p), x);
}

TEST(Encoder, DefaultShapePreserved) {
    EncoderConfig cfg;
    Prng rng(6);
    const EncoderParams p = EncoderParams::init(cfg, rng);
    EXPECT_EQ(encoder_forward(random_tensor({16, 64}, rng), p).shape(), (Shape{16, 64}));
}

TEST(Attention, BackwardMatchesFiniteDifferences) {
    const EncoderConfig cfg = small_config();
    for (int seed = 0; seed < test::kGradSeeds; ++seed) {
        Prng rng(300 + seed);
        EncoderParams p = random_params(cfg, rng);
        const Tensor x = random_tensor({4, 8}, rng);
        AttentionContext ctx;
        const Tensor y = multi_head_attention(x, p, 0, &ctx);
        const Tensor w = random_tensor(y.shape(), rng);
        EncoderParams grads = EncoderParams::zeros(cfg);
        const Tensor gx = multi_head_attention_backward(w, p, 0, ctx, grads);
        EXPECT_LE(test::rel_error(gx, test::numeric_grad([&](const Tensor& v) { return test::dot(w, multi_head_attention(v, p, 0)); }, x)),
                  test::kGradTol);
        auto& l = p.layers[0];
        auto& g = grads.layers[0];
        for (auto [param, grad] : {std::pair{&l.wq, &g.wq}, {&l.bq, &g.bq}, {&l.wk, &g.wk}, {&l.bk, &g.bk},
                                   {&l.wv, &g.wv}, {&l.bv, &g.bv}, {&l.wo, &g.wo}, {&l.bo, &g.bo}}) {
            const Tensor original = *param;
            auto loss = [&](const Tensor& v) {
                *param = v;
                const double r = test::dot(w, multi_head_attention(x, p, 0));
                *param = original;
                return r;
            };
            EXPECT_LE(test::rel_error(*grad, test::numeric_grad(loss, original)), test::kGradTol) << "seed " << seed;
        }
    }
}

TEST(Encoder, BackwardMatchesFiniteDifferencesWithFrozenDropout) {
    const EncoderConfig cfg = small_config(2);
    for (int seed = 0; seed < test::kGradSeeds; ++seed) {
        Prng rng(400 + seed);
        EncoderParams p = random_params(cfg, rng);
        const Tensor x = random_tensor({4, 8}, rng);
        const double rate = seed % 2 == 0 ? 0.0 : 0.3;
        DropoutSites sampling = DropoutSites::sampling(rate, Prng(seed));
        EncoderContext ctx;
        const Tensor y = encoder_forward(x, p, sampling, &ctx);
        const std::vector<Tensor> masks = sampling.masks();
        auto run = [&](const Tensor& input) {
            DropoutSites replay = DropoutSites::replay(rate, masks);
            return encoder_forward(input, p, replay);
        };
        EXPECT_EQ(run(x), y);
        const Tensor w = random_tensor(y.shape(), rng);
        EncoderParams grads = EncoderParams::zeros(cfg);
        const Tensor gx = encoder_backward(w, p, ctx, grads);
        EXPECT_LE(test::rel_error(gx, test::numeric_grad([&](const Tensor& v) { return test::dot(w, run(v)); }, x)),
                  test::kGradTol)
            << "seed " << seed;
        auto params = p.tensors("");
        auto grad_list = grads.tensors("");
        for (std::size_t t = 0; t < params.size(); ++t) {
            Tensor& target = *params[t].tensor;
            const Tensor original = target;
            auto loss = [&](const Tensor& v) {
                target = v;
                const double r = test::dot(w, run(x));
                target = original;
                return r;
            };
            EXPECT_LE(test::rel_error(*grad_list[t].tensor, test::numeric_grad(loss, original)), test::kGradTol)
                << params[t].name << " seed " << seed;
        }
    }
}
