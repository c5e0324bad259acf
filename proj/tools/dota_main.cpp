// Command-line front end: gen, train, eval, recognize, saliency.
// Exit codes: 0 success, 2 input or configuration error, 3 training divergence.

#include "dota/checkpoint.hpp"
#include "dota/image_io.hpp"
#include "dota/recognize.hpp"
#include "dota/run_config.hpp"
#include "dota/train.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdio>
#ifdef __GLIBC__
#include <malloc.h>
#endif
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

namespace fs = std::filesystem;
using namespace dota;

namespace {

constexpr int kExitInput = 2;
constexpr int kExitDiverged = 3;

RunConfig config_or_default(const std::string& path) { return path.empty() ? RunConfig{} : load_run_config(path); }

std::optional<Lexicon> lexicon_or_none(const std::string& path) {
    if (path.empty()) return std::nullopt;
    return Lexicon::load(path);
}

Tensor load_image(const std::string& path, const ModelConfig& cfg) {
    Tensor image = read_pgm(path);
    if (image.dim(1) != cfg.image_height || image.dim(2) != cfg.image_width) {
        throw DimensionError(path + ": expected " + std::to_string(cfg.image_width) + "x" +
                             std::to_string(cfg.image_height) + " image, got " + std::to_string(image.dim(2)) + "x" +
                             std::to_string(image.dim(1)));
    }
    return image;
}

int cmd_gen(const std::string& config_path, const std::string& out_dir, std::size_t count,
            const std::string& lexicon_path, std::uint64_t seed) {
    const RunConfig cfg = config_or_default(config_path);
    const Lexicon lexicon = Lexicon::load(lexicon_path);
    if (lexicon.empty()) throw ConfigError("lexicon " + lexicon_path + " has no words");
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create " + out_dir + ": " + ec.message());
    std::ofstream tsv(fs::path(out_dir) / "labels.tsv", std::ios::binary | std::ios::trunc);
    if (!tsv) throw IoError("cannot write " + (fs::path(out_dir) / "labels.tsv").string());

    Prng rng(seed);
    for (std::size_t i = 0; i < count; ++i) {
        const std::string& word = lexicon.words()[rng.below(lexicon.size())];
        const Sample s = synth_render(word, rng, cfg.distort);
        char name[32];
        std::snprintf(name, sizeof name, "%06zu.pgm", i);
        write_pgm(fs::path(out_dir) / name, s.image);
        tsv << name << '\t' << s.text << '\n';
    }
    if (!tsv.flush()) throw IoError("write failed for labels.tsv");
    return 0;
}

int cmd_train(const std::string& config_path, const std::string& data, const std::string& val,
              const std::string& out_checkpoint, std::optional<std::uint64_t> seed) {
    RunConfig cfg = config_or_default(config_path);
    if (seed) cfg.train.seed = *seed;
    const auto train_set = load_dataset(data);
    const auto val_set = load_dataset(val);
    const auto lexicon = lexicon_or_none(cfg.lexicon_path);
    const TrainResult result =
        train(train_set, val_set, cfg.model, cfg.train, lexicon ? &*lexicon : nullptr, [](const EpochMetrics& m) {
            std::cout << metrics_json_line(m) << '\n' << std::flush;
            return true;
        });
    checkpoint_save(out_checkpoint, cfg, result.params);
    return 0;
}

int cmd_eval(const std::string& checkpoint, const std::string& data, const std::string& lexicon_path, bool ablate_crf) {
    const Checkpoint ck = checkpoint_load(checkpoint);
    const auto set = load_dataset(data);
    if (set.empty()) throw ConfigError(data + " holds no samples");
    const auto lexicon = lexicon_or_none(lexicon_path);
    const bool crf = ck.config.train.use_crf && !ablate_crf;
    std::vector<std::string> truth;
    for (const auto& s : set) truth.push_back(s.text);
    const double acc =
        word_accuracy(predict_all(set, ck.config.model, ck.params, crf, lexicon ? &*lexicon : nullptr), truth);
    const nlohmann::json out = {
        {"n", set.size()}, {"word_accuracy", acc}, {"with_lexicon", lexicon.has_value()}, {"crf", crf}};
    std::cout << out.dump() << '\n';
    return 0;
}

int cmd_recognize(const std::string& checkpoint, const std::string& image_path, const std::string& lexicon_path) {
    const Checkpoint ck = checkpoint_load(checkpoint);
    const Tensor image = load_image(image_path, ck.config.model);
    const auto lexicon = lexicon_or_none(lexicon_path);
    std::cout << recognize(image, ck.config.model, ck.params, ck.config.train.use_crf, lexicon ? &*lexicon : nullptr)
              << '\n';
    return 0;
}

int cmd_saliency(const std::string& checkpoint, const std::string& image_path, const std::string& out) {
    const Checkpoint ck = checkpoint_load(checkpoint);
    const Tensor image = load_image(image_path, ck.config.model);
    const Tensor heat = grad_cam(image, ck.config.model, ck.params, ck.config.train.use_crf);
    write_pgm(out, upsample_nearest(heat, ck.config.model.image_height, ck.config.model.image_width));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
#ifdef __GLIBC__
    // Serve multi-MB conv buffers from the heap rather than mmap.
    mallopt(M_MMAP_THRESHOLD, 32 << 20);
    mallopt(M_TRIM_THRESHOLD, 256 << 20);
#endif
    CLI::App app{"Deformable-convolution transformer text recognizer"};
    app.require_subcommand(1);

    std::string config, out_dir, lexicon, data, val, checkpoint, image, out;
    std::size_t count = 0;
    std::uint64_t seed = 0;
    std::optional<std::uint64_t> train_seed;
    bool ablate_crf = false;

    auto* gen = app.add_subcommand("gen", "Render a synthetic dataset");
    gen->add_option("--config", config, "RunConfig JSON (distortion settings)")->check(CLI::ExistingFile);
    gen->add_option("--out-dir", out_dir, "Output directory")->required();
    gen->add_option("--count", count, "Number of samples")->required();
    gen->add_option("--lexicon", lexicon, "Word list, one per line")->required();
    gen->add_option("--seed", seed, "Random seed");

    auto* tr = app.add_subcommand("train", "Train a model; metrics go to stdout");
    tr->add_option("--config", config, "RunConfig JSON");
    tr->add_option("--data", data, "Training dataset directory")->required();
    tr->add_option("--val", val, "Validation dataset directory")->required();
    tr->add_option("--out-checkpoint", out, "Checkpoint to write")->required();
    tr->add_option("--seed", train_seed, "Overrides train.seed");

    auto* ev = app.add_subcommand("eval", "Word accuracy on a dataset");
    ev->add_option("--checkpoint", checkpoint)->required();
    ev->add_option("--data", data)->required();
    ev->add_option("--lexicon", lexicon);
    ev->add_flag("--ablate-crf", ablate_crf, "Decode with zero transitions");

    auto* rec = app.add_subcommand("recognize", "Print the recognized word");
    rec->add_option("--checkpoint", checkpoint)->required();
    rec->add_option("--image", image)->required();
    rec->add_option("--lexicon", lexicon);

    auto* sal = app.add_subcommand("saliency", "Write a Grad-CAM heatmap as PGM");
    sal->add_option("--checkpoint", checkpoint)->required();
    sal->add_option("--image", image)->required();
    sal->add_option("--out", out)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitInput;
    }

    try {
        if (*gen) return cmd_gen(config, out_dir, count, lexicon, seed);
        if (*tr) return cmd_train(config, data, val, out, train_seed);
        if (*ev) return cmd_eval(checkpoint, data, lexicon, ablate_crf);
        if (*rec) return cmd_recognize(checkpoint, image, lexicon);
        if (*sal) return cmd_saliency(checkpoint, image, out);
    } catch (const TrainingDiverged& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitDiverged;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInput;
    }
    return kExitInput;
}
