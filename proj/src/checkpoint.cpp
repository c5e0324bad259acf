#include "dota/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace dota {

CheckpointError::CheckpointError(std::string field, const std::string& detail)
    : std::runtime_error("corrupt checkpoint (" + field + "): " + detail), field_(std::move(field)) {}

UnsupportedCheckpointVersion::UnsupportedCheckpointVersion(std::uint32_t version)
    : CheckpointError("version", "unsupported format version " + std::to_string(version) + ", expected " +
                                     std::to_string(kCheckpointVersion)),
      version_(version) {}

namespace {

constexpr char kMagic[4] = {'D', 'O', 'T', 'A'};
constexpr const char* kRateName = "dropout.rate";

class Writer {
public:
    void raw(const void* p, std::size_t n) {
        const auto* b = static_cast<const std::uint8_t*>(p);
        out.insert(out.end(), b, b + n);
    }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void f64(double d) {
        const auto v = std::bit_cast<std::uint64_t>(d);
        for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void str(const std::string& s) {
        u32(static_cast<std::uint32_t>(s.size()));
        raw(s.data(), s.size());
    }
    void tensor(const std::string& name, const Tensor& t) {
        str(name);
        u32(static_cast<std::uint32_t>(t.rank()));
        for (std::size_t d : t.shape()) u32(static_cast<std::uint32_t>(d));
        for (double v : t.values()) f64(v);
    }

    std::vector<std::uint8_t> out;
};

class Parser {
public:
    explicit Parser(const std::vector<std::uint8_t>& b) : b_(b) {}

    void need(std::size_t n, const std::string& field) const {
        if (b_.size() - pos_ < n) throw CheckpointError(field, "file truncated");
    }
    std::uint32_t u32(const std::string& field) {
        need(4, field);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b_[pos_ + i]) << (8 * i);
        pos_ += 4;
        return v;
    }
    double f64(const std::string& field) {
        need(8, field);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b_[pos_ + i]) << (8 * i);
        pos_ += 8;
        return std::bit_cast<double>(v);
    }
    std::string str(const std::string& field) {
        const std::uint32_t n = u32(field);
        need(n, field);
        std::string s(reinterpret_cast<const char*>(b_.data() + pos_), n);
        pos_ += n;
        return s;
    }
    void tensor(const std::string& expected_name, Tensor& t) {
        const std::string field = "tensor " + expected_name;
        const std::string name = str(field + " name");
        if (name != expected_name) throw CheckpointError(field, "found tensor named '" + name + "'");
        const std::uint32_t rank = u32(field + " rank");
        if (rank != t.rank()) throw CheckpointError(field, "rank " + std::to_string(rank) + " does not match config");
        Shape shape;
        for (std::uint32_t i = 0; i < rank; ++i) shape.push_back(u32(field + " dims"));
        if (shape != t.shape()) {
            throw CheckpointError(field, "shape " + shape_string(shape) + ", config implies " + shape_string(t.shape()));
        }
        need(8 * t.size(), field + " payload");
        for (auto& v : t.values()) v = f64(field);
    }
    bool done() const { return pos_ == b_.size(); }
    bool magic() {
        if (b_.size() < 4 || std::memcmp(b_.data(), kMagic, 4) != 0) return false;
        pos_ = 4;
        return true;
    }

private:
    const std::vector<std::uint8_t>& b_;
    std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> checkpoint_bytes(const RunConfig& config, const ModelParams& params) {
    Writer w;
    w.raw(kMagic, 4);
    w.u32(kCheckpointVersion);
    w.str(to_json_string(config));
    ModelParams copy = params;
    for (const auto& [name, tensor] : copy.tensors()) w.tensor(name, *tensor);
    w.tensor(kRateName, Tensor({1}, std::vector<double>{params.dropout.rate}));
    return std::move(w.out);
}

Checkpoint parse_checkpoint(const std::vector<std::uint8_t>& bytes) {
    Parser p(bytes);
    if (!p.magic()) throw CheckpointError("magic", "expected \"DOTA\"");
    const std::uint32_t version = p.u32("version");
    if (version != kCheckpointVersion) throw UnsupportedCheckpointVersion(version);
    Checkpoint ck;
    try {
        ck.config = parse_run_config(p.str("config"));
    } catch (const ConfigError& e) {
        throw CheckpointError("config", e.what());
    }
    ck.params = ModelParams::zeros(ck.config.model);
    ck.params.dropout = ck.config.train.dropout;
    for (const auto& [name, tensor] : ck.params.tensors()) p.tensor(name, *tensor);
    Tensor rate({1});
    p.tensor(kRateName, rate);
    ck.params.dropout.rate = rate[0];
    if (!p.done()) throw CheckpointError("trailer", "unexpected bytes after the last tensor");
    return ck;
}

void checkpoint_save(const std::filesystem::path& path, const RunConfig& config, const ModelParams& params) {
    const auto bytes = checkpoint_bytes(config, params);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw CheckpointError("path", "cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw CheckpointError("path", "write failed for " + path.string());
}

Checkpoint checkpoint_load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CheckpointError("path", "cannot read " + path.string());
    const std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    return parse_checkpoint(bytes);
}

}  // namespace dota
