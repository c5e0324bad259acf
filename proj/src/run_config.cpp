#include "dota/run_config.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <set>
#include <sstream>

namespace dota {

using nlohmann::json;

namespace {

// Reads a JSON object field by field, remembering which keys were consumed.
class Reader {
public:
    Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(where() + " must be an object");
    }

    template <typename T>
    void get(const char* key, T& out) {
        seen_.insert(key);
        auto it = j_.find(key);
        if (it == j_.end()) return;
        try {
            out = it->template get<T>();
        } catch (const json::exception&) {
            throw ConfigError(path_ + "." + key + " has the wrong type");
        }
    }

    void get(const char* key, std::size_t& out) {
        seen_.insert(key);
        auto it = j_.find(key);
        if (it == j_.end()) return;
        if (!it->is_number_unsigned()) throw ConfigError(path_ + "." + key + " must be a nonnegative integer");
        out = it->get<std::size_t>();
    }

    void get(const char* key, double& out) {
        seen_.insert(key);
        auto it = j_.find(key);
        if (it == j_.end()) return;
        if (!it->is_number()) throw ConfigError(path_ + "." + key + " must be a number");
        out = it->get<double>();
    }

    const json* child(const char* key) {
        seen_.insert(key);
        auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }

    std::string sub(const char* key) const { return path_ + "." + key; }

    void finish() const {
        for (const auto& [key, value] : j_.items()) {
            if (!seen_.count(key)) throw ConfigError("unknown key " + path_ + "." + key);
        }
    }

private:
    std::string where() const { return path_.empty() ? "config" : path_; }

    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

void read_backbone(const json& j, const std::string& path, BackboneConfig& b) {
    Reader r(j, path);
    r.get("channels", b.channels);
    r.get("strides", b.strides);
    r.get("deformable_stages", b.deformable_stages);
    r.finish();
}

void read_encoder(const json& j, const std::string& path, EncoderConfig& e) {
    Reader r(j, path);
    r.get("layers", e.layers);
    r.get("heads", e.heads);
    r.get("d_model", e.d_model);
    r.get("d_ff", e.d_ff);
    r.get("ln_eps", e.ln_eps);
    r.finish();
}

void read_model(const json& j, const std::string& path, ModelConfig& m) {
    Reader r(j, path);
    r.get("image_height", m.image_height);
    r.get("image_width", m.image_width);
    r.get("labels", m.labels);
    if (const json* b = r.child("backbone")) read_backbone(*b, r.sub("backbone"), m.backbone);
    if (const json* e = r.child("encoder")) read_encoder(*e, r.sub("encoder"), m.encoder);
    r.finish();
}

void read_dropout(const json& j, const std::string& path, AdaptiveDropoutState& d) {
    Reader r(j, path);
    r.get("rate", d.rate);
    r.get("p_min", d.p_min);
    r.get("p_max", d.p_max);
    r.get("delta", d.delta);
    r.get("tau_high", d.tau_high);
    r.get("tau_low", d.tau_low);
    r.finish();
}

void read_train(const json& j, const std::string& path, TrainConfig& t) {
    Reader r(j, path);
    r.get("epochs", t.epochs);
    r.get("batch_size", t.batch_size);
    r.get("learning_rate", t.learning_rate);
    r.get("beta1", t.beta1);
    r.get("beta2", t.beta2);
    r.get("adam_eps", t.adam_eps);
    r.get("seed", t.seed);
    r.get("use_crf", t.use_crf);
    r.get("use_retrieval", t.use_retrieval);
    r.get("plateau_patience", t.plateau_patience);
    r.get("lr_floor_ratio", t.lr_floor_ratio);
    if (const json* d = r.child("dropout")) read_dropout(*d, r.sub("dropout"), t.dropout);
    r.finish();
}

void read_distort(const json& j, const std::string& path, DistortConfig& d) {
    Reader r(j, path);
    r.get("jitter_px", d.jitter_px);
    r.get("shear", d.shear);
    r.get("noise_sigma", d.noise_sigma);
    r.get("contrast_min", d.contrast_min);
    r.get("contrast_max", d.contrast_max);
    r.finish();
}

void read_paths(const json& j, const std::string& path, RunConfig& c) {
    Reader r(j, path);
    r.get("lexicon", c.lexicon_path);
    r.finish();
}

}  // namespace

void RunConfig::validate() const {
    model.validate();
    train.validate();
    distort.validate();
}

RunConfig parse_run_config(std::string_view json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    RunConfig c;
    Reader r(j, "config");
    if (const json* m = r.child("model")) read_model(*m, "config.model", c.model);
    if (const json* t = r.child("train")) read_train(*t, "config.train", c.train);
    if (const json* d = r.child("distort")) read_distort(*d, "config.distort", c.distort);
    if (const json* p = r.child("paths")) read_paths(*p, "config.paths", c);
    r.finish();
    c.validate();
    return c;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read config file " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_run_config(ss.str());
}

std::string to_json_string(const RunConfig& c) {
    const auto& b = c.model.backbone;
    const auto& e = c.model.encoder;
    const auto& t = c.train;
    const auto& d = t.dropout;
    json j = {
        {"model",
         {{"image_height", c.model.image_height},
          {"image_width", c.model.image_width},
          {"labels", c.model.labels},
          {"backbone",
           {{"channels", b.channels}, {"strides", b.strides}, {"deformable_stages", b.deformable_stages}}},
          {"encoder",
           {{"layers", e.layers}, {"heads", e.heads}, {"d_model", e.d_model}, {"d_ff", e.d_ff}, {"ln_eps", e.ln_eps}}}}},
        {"train",
         {{"epochs", t.epochs},
          {"batch_size", t.batch_size},
          {"learning_rate", t.learning_rate},
          {"beta1", t.beta1},
          {"beta2", t.beta2},
          {"adam_eps", t.adam_eps},
          {"seed", t.seed},
          {"use_crf", t.use_crf},
          {"use_retrieval", t.use_retrieval},
          {"plateau_patience", t.plateau_patience},
          {"lr_floor_ratio", t.lr_floor_ratio},
          {"dropout",
           {{"rate", d.rate},
            {"p_min", d.p_min},
            {"p_max", d.p_max},
            {"delta", d.delta},
            {"tau_high", d.tau_high},
            {"tau_low", d.tau_low}}}}},
        {"distort",
         {{"jitter_px", c.distort.jitter_px},
          {"shear", c.distort.shear},
          {"noise_sigma", c.distort.noise_sigma},
          {"contrast_min", c.distort.contrast_min},
          {"contrast_max", c.distort.contrast_max}}},
        {"paths", {{"lexicon", c.lexicon_path}}},
    };
    return j.dump();
}

std::string metrics_json_line(const EpochMetrics& m) {
    const json j = {{"epoch", m.epoch},       {"train_loss", m.train_loss},     {"val_loss", m.val_loss},
                    {"val_acc", m.val_acc},   {"dropout_rate", m.dropout_rate}, {"lr", m.lr}};
    return j.dump();
}

}  // namespace dota
