#include "dota/checkpoint.hpp"
#include "dota/image_io.hpp"
#include "dota/recognize.hpp"
#include "dota/run_config.hpp"
#include "dota/train.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>

using namespace dota;
namespace fs = std::filesystem;

namespace {

std::vector<Sample> make_set(std::size_t n, std::uint64_t seed, const std::vector<std::string>& words) {
    Prng rng(seed);
    std::vector<Sample> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(synth_render(words[i % words.size()], rng, DistortConfig{}));
    return out;
}

// Every weight equal across runs, compared bit for bit.
bool same_params(ModelParams a, ModelParams b) {
    auto ta = a.tensors(), tb = b.tensors();
    if (ta.size() != tb.size()) return false;
    for (std::size_t i = 0; i < ta.size(); ++i)
        if (!(*ta[i].tensor == *tb[i].tensor)) return false;
    return a.dropout.rate == b.dropout.rate;
}

fs::path scratch_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("dota_pipeline_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

ModelConfig tiny_config() {
    ModelConfig cfg;
    cfg.image_height = 8;
    cfg.image_width = 16;
    cfg.backbone.channels = {2, 3, 3, 4};
    cfg.backbone.strides = {1, 1, 2, 1};
    cfg.encoder.layers = 1;
    cfg.encoder.heads = 2;
    cfg.encoder.d_model = 8;
    cfg.encoder.d_ff = 8;
    cfg.labels = 5;
    return cfg;
}

}  // namespace

TEST(Alphabet, EncodeMeat) {
    LabelSeq expected(16, kPadLabel);
    expected[0] = 12;
    expected[1] = 4;
    expected[2] = 0;
    expected[3] = 19;
    EXPECT_EQ(encode_target("meat"), expected);
}

TEST(Alphabet, FullLengthHasNoPad) {
    const LabelSeq l = encode_target("abcdefghij012345");
    EXPECT_EQ(std::count(l.begin(), l.end(), kPadLabel), 0);
}

TEST(Alphabet, OverlongAndUnsupportedRefused) {
    EXPECT_THROW(encode_target("abcdefghijklmnopq"), RefusalError);
    EXPECT_THROW(encode_target("a-b"), RefusalError);
}

TEST(Alphabet, RoundTripLowercases) {
    for (const char* s : {"Parisian", "ROUTE66", "x", ""}) EXPECT_EQ(decode_labels(encode_target(s)), fold_case(s));
}

TEST(Alphabet, Bijection) {
    for (int l = 0; l < kPadLabel; ++l) EXPECT_EQ(label_of(symbol_of(l)), l);
    EXPECT_THROW(symbol_of(kPadLabel), DimensionError);
}

TEST(Synth, CleanRenderMatchesFontColumns) {
    Prng rng(1);
    const Sample s = synth_render("ab", rng, DistortConfig::none());
    for (std::size_t i = 0; i < 2; ++i) {
        const auto& rows = glyph_rows("ab"[i]);
        for (std::size_t r = 0; r < kGlyphHeight; ++r)
            for (std::size_t c = 0; c < kGlyphWidth; ++c) {
                const bool ink = (rows[r] >> (kGlyphWidth - 1 - c)) & 1U;
                const std::size_t y = 12 + r, x = kLeftMargin + i * 7 + c;
                EXPECT_DOUBLE_EQ(s.image(0, y, x), ink ? kInkLevel : kBackgroundLevel) << i << " " << r << " " << c;
            }
    }
    double ink_total = 0.0;
    for (double v : s.image.values()) ink_total += v > 0.5;
    double expected = 0.0;
    for (char ch : std::string("ab"))
        for (auto row : glyph_rows(ch)) expected += __builtin_popcount(row);
    EXPECT_EQ(ink_total, expected);
}

TEST(Synth, DeterministicGivenSeed) {
    Prng a(7), b(7);
    EXPECT_EQ(synth_render("coffee", a, DistortConfig{}).image, synth_render("coffee", b, DistortConfig{}).image);
}

TEST(Synth, NoiseDeltaWithinHalfNormalBand) {
    DistortConfig noisy = DistortConfig::none();
    noisy.noise_sigma = 0.1;
    double delta = 0.0;
    std::size_t count = 0;
    for (int seed = 0; count < 10000; ++seed) {
        Prng r1(seed), r2(seed);
        const Tensor clean = synth_render("market", r1, DistortConfig::none()).image;
        const Tensor noised = synth_render("market", r2, noisy).image;
        for (std::size_t i = 0; i < clean.size() && count < 10000; ++i, ++count) delta += std::abs(noised[i] - clean[i]);
    }
    delta /= 10000.0;
    EXPECT_GE(delta, 0.06);
    EXPECT_LE(delta, 0.10);
}

TEST(Synth, PixelRangeAndFoldedText) {
    Prng rng(3);
    for (int i = 0; i < 20; ++i) {
        const Sample s = synth_render("Route66", rng, DistortConfig{});
        EXPECT_EQ(s.text, "route66");
        for (double v : s.image.values()) ASSERT_TRUE(v >= 0.0 && v <= 1.0);
    }
}

TEST(Synth, RefusesBadWords) {
    Prng rng(4);
    EXPECT_THROW(synth_render("a b", rng, DistortConfig{}), RefusalError);
    EXPECT_THROW(synth_render("", rng, DistortConfig{}), RefusalError);
    EXPECT_THROW(synth_render("abcdefghijklmnopq", rng, DistortConfig{}), RefusalError);
}

TEST(Forward, DefaultShape) {
    const ModelConfig cfg;
    const ModelParams p = ModelParams::init(cfg, 1);
    Prng rng(2);
    EXPECT_EQ(forward(synth_render("meat", rng, DistortConfig{}).image, cfg, p).shape(), (Shape{16, 37}));
}

TEST(Forward, EvaluationIsDeterministic) {
    const ModelConfig cfg;
    const ModelParams p = ModelParams::init(cfg, 1);
    Prng rng(2);
    const Tensor img = synth_render("meat", rng, DistortConfig{}).image;
    EXPECT_EQ(forward(img, cfg, p), forward(img, cfg, p));
}

TEST(Forward, ZeroImageYieldsHeadBias) {
    const ModelConfig cfg;
    ModelParams p = ModelParams::init(cfg, 3);
    p.head_weight.fill(0.0);
    Prng rng(4);
    for (auto& v : p.head_bias.values()) v = rng.uniform(-1, 1);
    const Emissions e = forward(Tensor({1, 32, 128}), cfg, p);
    for (std::size_t t = 0; t < 16; ++t)
        for (std::size_t l = 0; l < 37; ++l) EXPECT_EQ(e(t, l), p.head_bias[l]);
}

TEST(Forward, WrongImageShapeRejected) {
    const ModelConfig cfg;
    const ModelParams p = ModelParams::init(cfg, 1);
    EXPECT_THROW(forward(Tensor({1, 32, 64}), cfg, p), DimensionError);
}

TEST(Model, EndToEndGradientMatchesFiniteDifferences) {
    const ModelConfig cfg = tiny_config();
    for (int seed = 0; seed < 4; ++seed) {
        ModelParams p = ModelParams::init(cfg, 50 + seed);
        Prng rng(60 + seed);
        for (auto& t : p.tensors())
            for (auto& v : t.tensor->values()) v += rng.uniform(-0.1, 0.1);
        const Tensor image = test::random_tensor({1, 8, 16}, rng, 0, 1);
        LabelSeq labels(8);
        for (auto& l : labels) l = static_cast<int>(rng.below(5));
        for (bool use_crf : {true, false}) {
            DropoutSites sampling = DropoutSites::sampling(0.2, Prng(seed));
            ModelParams grads = ModelParams::zeros(cfg);
            loss_and_grad(image, labels, cfg, p, use_crf, sampling, grads);
            const std::vector<Tensor> masks = sampling.masks();
            auto loss = [&]() {
                DropoutSites replay = DropoutSites::replay(0.2, masks);
                ModelParams unused = ModelParams::zeros(cfg);
                return loss_and_grad(image, labels, cfg, p, use_crf, replay, unused);
            };
            auto params = p.tensors();
            auto glist = grads.tensors();
            for (std::size_t t = 0; t < params.size(); ++t) {
                Tensor& target = *params[t].tensor;
                const Tensor original = target;
                const Tensor numeric = test::numeric_grad(
                    [&](const Tensor& v) {
                        target = v;
                        const double r = loss();
                        target = original;
                        return r;
                    },
                    original);
                EXPECT_LE(test::rel_error(*glist[t].tensor, numeric), test::kGradTol)
                    << params[t].name << " seed " << seed << " crf " << use_crf;
            }
        }
    }
}

TEST(Train, OneEpochSmoke) {
    const auto set = make_set(4, 1, {"meat", "state"});
    TrainConfig tc;
    tc.epochs = 1;
    tc.batch_size = 2;
    const TrainResult r = train(set, set, ModelConfig{}, tc);
    ASSERT_EQ(r.history.size(), 1u);
    EXPECT_EQ(r.history[0].epoch, 1u);
    EXPECT_TRUE(std::isfinite(r.history[0].train_loss));
}

TEST(Train, FixedSeedIsDeterministic) {
    const auto set = make_set(4, 2, {"carp", "india"});
    TrainConfig tc;
    tc.epochs = 2;
    tc.batch_size = 3;
    tc.seed = 9;
    const TrainResult a = train(set, set, ModelConfig{}, tc), b = train(set, set, ModelConfig{}, tc);
    EXPECT_TRUE(same_params(a.params, b.params));
    for (std::size_t i = 0; i < 2; ++i) EXPECT_EQ(a.history[i].train_loss, b.history[i].train_loss);
}

TEST(Train, CallbackCanStopEarly) {
    const auto set = make_set(2, 3, {"meat"});
    TrainConfig tc;
    tc.epochs = 5;
    const TrainResult r = train(set, set, ModelConfig{}, tc, nullptr, [](const EpochMetrics& m) { return m.epoch < 2; });
    EXPECT_EQ(r.history.size(), 2u);
}

TEST(Train, RejectsInvalidConfig) {
    const auto set = make_set(2, 3, {"meat"});
    TrainConfig tc;
    tc.learning_rate = 0.0;
    EXPECT_THROW(train(set, set, ModelConfig{}, tc), ConfigError);
    tc = TrainConfig{};
    tc.batch_size = 0;
    EXPECT_THROW(train(set, set, ModelConfig{}, tc), ConfigError);
    EXPECT_THROW(train({}, set, ModelConfig{}, TrainConfig{}), ConfigError);
}

TEST(Train, DivergenceNamesBatchSeed) {
    auto set = make_set(2, 3, {"meat"});
    set[1].image[5] = std::numeric_limits<double>::quiet_NaN();
    TrainConfig tc;
    tc.epochs = 1;
    tc.batch_size = 1;
    try {
        train(set, set, ModelConfig{}, tc);
        FAIL() << "expected divergence";
    } catch (const TrainingDiverged& e) {
        EXPECT_NE(std::string(e.what()).find("batch seed"), std::string::npos);
    }
}

TEST(Train, MetricsStayWithinControllerBounds) {
    const auto set = make_set(4, 4, {"meat", "carp"});
    TrainConfig tc;
    tc.epochs = 3;
    tc.batch_size = 4;
    const TrainResult r = train(set, set, ModelConfig{}, tc);
    ASSERT_EQ(r.history.size(), 3u);
    for (const auto& m : r.history) {
        EXPECT_GE(m.dropout_rate, tc.dropout.p_min);
        EXPECT_LE(m.dropout_rate, tc.dropout.p_max);
        EXPECT_GE(m.lr, tc.learning_rate * tc.lr_floor_ratio);
    }
}

TEST(Train, MemorizesTenSamples) {
    const auto set = make_set(10, 5, {"meat", "state", "carp", "india", "market", "express", "mosser", "brothers",
                                      "taqueria", "parisian"});
    TrainConfig tc;
    tc.epochs = 200;
    tc.batch_size = 10;
    tc.seed = 1;
    const ModelConfig cfg;
    const double initial = evaluate(set, cfg, ModelParams::init(cfg, tc.seed), true).loss;
    double final_loss = initial;
    train(set, set, cfg, tc, nullptr, [&](const EpochMetrics& m) {
        final_loss = m.val_loss;
        return m.val_loss >= 0.1 * initial;
    });
    EXPECT_LT(final_loss, 0.1 * initial);
}

TEST(Recognize, OneHotStateDecodes) {
    const LabelSeq target = encode_target("state");
    Tensor e({16, 37});
    for (std::size_t t = 0; t < 16; ++t) e(t, static_cast<std::size_t>(target[t])) = 5.0;
    EXPECT_EQ(decode_labels(decode_path(e, CrfParams::zeros(37), true).labels), "state");
    EXPECT_EQ(decode_labels(decode_path(e, CrfParams::zeros(37), false).labels), "state");
}

TEST(Recognize, AllPadIsEmpty) {
    Tensor e({16, 37});
    for (std::size_t t = 0; t < 16; ++t) e(t, kPadLabel) = 1.0;
    EXPECT_EQ(decode_labels(decode_path(e, CrfParams::zeros(37), true).labels), "");
}

TEST(Recognize, LexiconCorrectsNearMiss) {
    // All-zero weights give flat emissions; start and transition scores then
    // spell "staie" (every letter has a unique successor) followed by PAD.
    const ModelConfig cfg;
    ModelParams p = ModelParams::zeros(cfg);
    const LabelSeq spelled = encode_target("staie");
    p.crf.start[static_cast<std::size_t>(spelled[0])] = 10.0;
    for (std::size_t t = 0; t + 1 < 16; ++t)
        p.crf.transitions(static_cast<std::size_t>(spelled[t]), static_cast<std::size_t>(spelled[t + 1])) = 10.0;
    const Tensor image({1, 32, 128});
    ASSERT_EQ(recognize(image, cfg, p, true), "staie");
    const Lexicon lex({"PARISIAN", "BROTHERS", "STATE", "CARP", "EXPRESS", "INDIA", "MARKET", "MEAT", "TAQUERIA",
                       "MOSSER"});
    EXPECT_EQ(recognize(image, cfg, p, true, &lex), "STATE");
    EXPECT_EQ(recognize(image, cfg, p, true, &lex, 0), "staie");
}

TEST(WordAccuracy, Examples) {
    EXPECT_EQ(word_accuracy({"a", "b"}, {"a", "b"}), 1.0);
    EXPECT_EQ(word_accuracy({"Meat"}, {"MEAT"}), 1.0);
    EXPECT_EQ(word_accuracy({"a", "b", "c", "x"}, {"a", "b", "c", "d"}), 0.75);
    EXPECT_THROW(word_accuracy({"a"}, {"a", "b"}), DimensionError);
    EXPECT_THROW(word_accuracy({}, {}), DimensionError);
}

TEST(GradCam, ShapeRangeAndDeterminism) {
    const ModelConfig cfg;
    const ModelParams p = ModelParams::init(cfg, 5);
    Prng rng(6);
    const Tensor img = synth_render("coffee", rng, DistortConfig{}).image;
    const Tensor h = grad_cam(img, cfg, p, true);
    EXPECT_EQ(h.shape(), (Shape{4, 16}));
    for (double v : h.values()) {
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
    }
    EXPECT_EQ(h, grad_cam(img, cfg, p, true));
}

TEST(GradCam, FlatMapIsAllZero) {
    const ModelConfig cfg;
    const ModelParams p = ModelParams::zeros(cfg);
    const Tensor h = grad_cam(Tensor({1, 32, 128}), cfg, p, true);
    for (double v : h.values()) EXPECT_EQ(v, 0.0);
}

TEST(GradCam, UpsampleNearest) {
    Tensor m({2, 2});
    m(0, 1) = 1.0;
    const Tensor u = upsample_nearest(m, 4, 6);
    EXPECT_EQ(u(1, 2), 0.0);
    EXPECT_EQ(u(1, 3), 1.0);
    EXPECT_EQ(u(3, 5), 0.0);
}

TEST(Checkpoint, SaveLoadSaveIsByteIdentical) {
    RunConfig rc;
    rc.train.seed = 77;
    ModelParams p = ModelParams::init(rc.model, 8);
    p.dropout.rate = 0.14;
    const auto bytes = checkpoint_bytes(rc, p);
    const Checkpoint c = parse_checkpoint(bytes);
    EXPECT_EQ(checkpoint_bytes(c.config, c.params), bytes);
    EXPECT_TRUE(same_params(c.params, p));
    EXPECT_EQ(c.config.train.seed, 77u);

    const fs::path dir = scratch_dir("ckpt");
    checkpoint_save(dir / "a.ckpt", rc, p);
    const Checkpoint loaded = checkpoint_load(dir / "a.ckpt");
    checkpoint_save(dir / "b.ckpt", loaded.config, loaded.params);
    std::ifstream a(dir / "a.ckpt", std::ios::binary), b(dir / "b.ckpt", std::ios::binary);
    EXPECT_EQ(std::string(std::istreambuf_iterator<char>(a), {}), std::string(std::istreambuf_iterator<char>(b), {}));
}

TEST(Checkpoint, LayoutHeader) {
    const RunConfig rc;
    const auto bytes = checkpoint_bytes(rc, ModelParams::zeros(rc.model));
    ASSERT_GT(bytes.size(), 12u);
    EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "DOTA");
    EXPECT_EQ(bytes[4], 1u);
    EXPECT_EQ(bytes[5] | bytes[6] | bytes[7], 0u);
    const std::uint32_t len = bytes[8] | bytes[9] << 8 | bytes[10] << 16 | static_cast<std::uint32_t>(bytes[11]) << 24;
    const auto json = nlohmann::json::parse(std::string(bytes.begin() + 12, bytes.begin() + 12 + len));
    EXPECT_TRUE(json.contains("model"));
}

TEST(Checkpoint, TruncationNamesField) {
    const RunConfig rc;
    const auto bytes = checkpoint_bytes(rc, ModelParams::zeros(rc.model));
    EXPECT_THROW(parse_checkpoint({bytes.begin(), bytes.begin() + 2}), CheckpointError);
    for (std::size_t cut : {std::size_t{6}, std::size_t{10}, bytes.size() / 2, bytes.size() - 1}) {
        const std::vector<std::uint8_t> head(bytes.begin(), bytes.begin() + static_cast<long>(cut));
        try {
            parse_checkpoint(head);
            FAIL() << "accepted truncated checkpoint at " << cut;
        } catch (const CheckpointError& e) {
            EXPECT_FALSE(e.field().empty());
            EXPECT_NE(std::string(e.what()).find("truncated"), std::string::npos) << e.what();
        }
    }
}

TEST(Checkpoint, BadMagicAndVersion) {
    const RunConfig rc;
    auto bytes = checkpoint_bytes(rc, ModelParams::zeros(rc.model));
    auto bad_magic = bytes;
    bad_magic[0] = 'X';
    try {
        parse_checkpoint(bad_magic);
        FAIL();
    } catch (const CheckpointError& e) {
        EXPECT_EQ(e.field(), "magic");
    }
    bytes[4] = 2;
    try {
        parse_checkpoint(bytes);
        FAIL();
    } catch (const UnsupportedCheckpointVersion& e) {
        EXPECT_EQ(e.version(), 2u);
        EXPECT_EQ(e.field(), "version");
    }
}

TEST(Checkpoint, TrailingBytesRejected) {
    const RunConfig rc;
    auto bytes = checkpoint_bytes(rc, ModelParams::zeros(rc.model));
    bytes.push_back(0);
    EXPECT_THROW(parse_checkpoint(bytes), CheckpointError);
}

TEST(RunConfig, DefaultsRoundTrip) {
    const RunConfig rc = parse_run_config("{}");
    EXPECT_EQ(rc.model.encoder.d_model, 64u);
    EXPECT_EQ(rc.train.learning_rate, 1e-3);
    EXPECT_EQ(to_json_string(parse_run_config(to_json_string(rc))), to_json_string(rc));
}

TEST(RunConfig, OverridesApply) {
    const RunConfig rc = parse_run_config(
        R"({"train":{"epochs":3,"use_crf":false,"dropout":{"rate":0.2}},"model":{"backbone":{"deformable_stages":[]}}})");
    EXPECT_EQ(rc.train.epochs, 3u);
    EXPECT_FALSE(rc.train.use_crf);
    EXPECT_EQ(rc.train.dropout.rate, 0.2);
    EXPECT_TRUE(rc.model.backbone.deformable_stages.empty());
}

TEST(RunConfig, UnknownKeyNamed) {
    try {
        parse_run_config(R"({"train":{"epoch":3}})");
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("train.epoch"), std::string::npos) << e.what();
    }
}

TEST(RunConfig, WrongTypesAndInvalidValuesRejected) {
    EXPECT_THROW(parse_run_config(R"({"train":{"epochs":"3"}})"), ConfigError);
    EXPECT_THROW(parse_run_config(R"({"train":{"epochs":-1}})"), ConfigError);
    EXPECT_THROW(parse_run_config(R"({"train":{"learning_rate":0}})"), ConfigError);
    EXPECT_THROW(parse_run_config(R"({"model":{"encoder":{"heads":3}}})"), ConfigError);
    EXPECT_THROW(parse_run_config("[1,2]"), ConfigError);
    EXPECT_THROW(parse_run_config("{not json"), ConfigError);
}

TEST(RunConfig, MetricsLineKeys) {
    EpochMetrics m;
    m.epoch = 2;
    m.val_acc = 0.5;
    const auto j = nlohmann::json::parse(metrics_json_line(m));
    for (const char* key : {"epoch", "train_loss", "val_loss", "val_acc", "dropout_rate", "lr"}) EXPECT_TRUE(j.contains(key));
    EXPECT_EQ(j.size(), 6u);
    EXPECT_EQ(j["epoch"], 2);
}

TEST(ImageIo, PgmRoundTrip) {
    const fs::path dir = scratch_dir("pgm");
    Prng rng(9);
    const Tensor img = synth_render("meat", rng, DistortConfig{}).image;
    write_pgm(dir / "x.pgm", img);
    const Tensor back = read_pgm(dir / "x.pgm");
    ASSERT_EQ(back.shape(), img.shape());
    for (std::size_t i = 0; i < img.size(); ++i) EXPECT_NEAR(back[i], img[i], 0.5 / 255.0 + 1e-12);
}

TEST(ImageIo, PgmCommentsAccepted) {
    const fs::path dir = scratch_dir("pgm_comment");
    {
        std::ofstream out(dir / "c.pgm", std::ios::binary);
        out << "P5\n# note\n2 1\n255\n";
        out.put(static_cast<char>(0));
        out.put(static_cast<char>(255));
    }
    const Tensor t = read_pgm(dir / "c.pgm");
    EXPECT_EQ(t.shape(), (Shape{1, 1, 2}));
    EXPECT_EQ(t[0], 0.0);
    EXPECT_EQ(t[1], 1.0);
}

TEST(ImageIo, RejectsAsciiPgm) {
    const fs::path dir = scratch_dir("pgm_ascii");
    {
        std::ofstream out(dir / "a.pgm");
        out << "P2\n1 1\n255\n0\n";
    }
    EXPECT_THROW(read_pgm(dir / "a.pgm"), IoError);
}

TEST(ImageIo, DatasetLoadsAndFoldsCase) {
    const fs::path dir = scratch_dir("dataset");
    Prng rng(10);
    write_pgm(dir / "0.pgm", synth_render("meat", rng, DistortConfig{}).image);
    {
        std::ofstream out(dir / "labels.tsv");
        out << "0.pgm\tMEAT\n";
    }
    const auto set = load_dataset(dir);
    ASSERT_EQ(set.size(), 1u);
    EXPECT_EQ(set[0].text, "meat");
}

TEST(ImageIo, MalformedLineNamed) {
    const fs::path dir = scratch_dir("dataset_bad");
    Prng rng(10);
    write_pgm(dir / "0.pgm", synth_render("meat", rng, DistortConfig{}).image);
    {
        std::ofstream out(dir / "labels.tsv");
        out << "0.pgm\tmeat\nno tab here\n";
    }
    try {
        load_dataset(dir);
        FAIL();
    } catch (const IoError& e) {
        EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
    }
}

TEST(ImageIo, MissingLabelsFile) { EXPECT_THROW(load_dataset(scratch_dir("dataset_empty")), IoError); }
