#include "dota/tensor.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace dota {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;

std::size_t element_count(const Shape& shape) {
    std::size_t n = 1;
    for (auto d : shape) {
        if (d == 0) throw DimensionError("tensor dimensions must be positive, got " + shape_string(shape));
        n *= d;
    }
    return n;
}

void require_matrix(const Tensor& t, const char* what) {
    if (t.rank() != 2) {
        throw DimensionError(std::string(what) + " must be a matrix, got " + shape_string(t.shape()));
    }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() != b.shape()) {
        throw DimensionError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                             shape_string(b.shape()));
    }
}

ConstMatrixMap as_matrix(const Tensor& t) {
    return ConstMatrixMap(t.data(), static_cast<Eigen::Index>(t.dim(0)), static_cast<Eigen::Index>(t.dim(1)));
}

MatrixMap as_matrix(Tensor& t) {
    return MatrixMap(t.data(), static_cast<Eigen::Index>(t.dim(0)), static_cast<Eigen::Index>(t.dim(1)));
}

}  // namespace

std::string shape_string(const Shape& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ',';
        os << shape[i];
    }
    os << ']';
    return os.str();
}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)) {
    data_.assign(shape_.empty() ? 0 : element_count(shape_), fill);
}

Tensor::Tensor(Shape shape, std::vector<double> values) : shape_(std::move(shape)), data_(std::move(values)) {
    const std::size_t expected = shape_.empty() ? 0 : element_count(shape_);
    if (expected != data_.size()) {
        throw DimensionError("tensor of shape " + shape_string(shape_) + " needs " + std::to_string(expected) +
                             " values, got " + std::to_string(data_.size()));
    }
}

Tensor::Tensor(std::initializer_list<std::size_t> shape, std::initializer_list<double> values)
    : Tensor(Shape(shape), std::vector<double>(values)) {}

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<double>> rows) {
    const std::size_t m = rows.size();
    const std::size_t n = m ? rows.begin()->size() : 0;
    std::vector<double> values;
    values.reserve(m * n);
    for (const auto& r : rows) {
        if (r.size() != n) throw DimensionError("ragged matrix initializer");
        values.insert(values.end(), r.begin(), r.end());
    }
    return Tensor({m, n}, std::move(values));
}

Tensor Tensor::identity(std::size_t n) {
    Tensor t({n, n});
    for (std::size_t i = 0; i < n; ++i) t(i, i) = 1.0;
    return t;
}

void Tensor::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

Tensor Tensor::reshaped(Shape shape) const {
    if (element_count(shape) != data_.size()) {
        throw DimensionError("cannot reshape " + shape_string(shape_) + " to " + shape_string(shape));
    }
    return Tensor(std::move(shape), data_);
}

Tensor& Tensor::operator+=(const Tensor& other) {
    require_same_shape(*this, other, "add");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
    return *this;
}

Tensor& Tensor::operator-=(const Tensor& other) {
    require_same_shape(*this, other, "subtract");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
    return *this;
}

Tensor& Tensor::operator*=(double scale) {
    for (auto& v : data_) v *= scale;
    return *this;
}

void Tensor::add_scaled(const Tensor& other, double scale) {
    require_same_shape(*this, other, "add_scaled");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += scale * other.data_[i];
}

bool Tensor::all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

double Tensor::sum() const { return std::accumulate(data_.begin(), data_.end(), 0.0); }

double Tensor::max_abs() const {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::abs(v));
    return m;
}

Tensor operator+(Tensor a, const Tensor& b) { return a += b; }
Tensor operator-(Tensor a, const Tensor& b) { return a -= b; }
Tensor operator*(double scale, Tensor a) { return a *= scale; }

Tensor matmul(const Tensor& a, const Tensor& b) {
    require_matrix(a, "matmul lhs");
    require_matrix(b, "matmul rhs");
    if (a.dim(1) != b.dim(0)) {
        throw DimensionError("matmul: inner dimensions differ, " + shape_string(a.shape()) + " x " +
                             shape_string(b.shape()));
    }
    Tensor c({a.dim(0), b.dim(1)});
    as_matrix(c).noalias() = as_matrix(a) * as_matrix(b);
    return c;
}

Tensor matmul_tn(const Tensor& a, const Tensor& b) {
    require_matrix(a, "matmul_tn lhs");
    require_matrix(b, "matmul_tn rhs");
    if (a.dim(0) != b.dim(0)) {
        throw DimensionError("matmul_tn: leading dimensions differ, " + shape_string(a.shape()) + " vs " +
                             shape_string(b.shape()));
    }
    Tensor c({a.dim(1), b.dim(1)});
    as_matrix(c).noalias() = as_matrix(a).transpose() * as_matrix(b);
    return c;
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
    require_matrix(a, "matmul_nt lhs");
    require_matrix(b, "matmul_nt rhs");
    if (a.dim(1) != b.dim(1)) {
        throw DimensionError("matmul_nt: trailing dimensions differ, " + shape_string(a.shape()) + " vs " +
                             shape_string(b.shape()));
    }
    Tensor c({a.dim(0), b.dim(0)});
    as_matrix(c).noalias() = as_matrix(a) * as_matrix(b).transpose();
    return c;
}

Tensor transpose(const Tensor& a) {
    require_matrix(a, "transpose");
    Tensor t({a.dim(1), a.dim(0)});
    for (std::size_t i = 0; i < a.dim(0); ++i)
        for (std::size_t j = 0; j < a.dim(1); ++j) t(j, i) = a(i, j);
    return t;
}

void add_row_bias(Tensor& x, const Tensor& bias) {
    require_matrix(x, "add_row_bias input");
    if (bias.size() != x.dim(1)) {
        throw DimensionError("add_row_bias: bias " + shape_string(bias.shape()) + " vs rows of " +
                             shape_string(x.shape()));
    }
    for (std::size_t i = 0; i < x.dim(0); ++i) {
        auto r = x.row(i);
        for (std::size_t j = 0; j < r.size(); ++j) r[j] += bias[j];
    }
}

Tensor sum_rows(const Tensor& x) {
    require_matrix(x, "sum_rows input");
    Tensor s({x.dim(1)});
    for (std::size_t i = 0; i < x.dim(0); ++i) {
        auto r = x.row(i);
        for (std::size_t j = 0; j < r.size(); ++j) s[j] += r[j];
    }
    return s;
}

Tensor relu(const Tensor& x) {
    Tensor y = x;
    for (auto& v : y.values()) v = v > 0.0 ? v : 0.0;
    return y;
}

Tensor relu_backward(const Tensor& grad_out, const Tensor& forward_output) {
    require_same_shape(grad_out, forward_output, "relu_backward");
    Tensor g = grad_out;
    for (std::size_t i = 0; i < g.size(); ++i)
        if (!(forward_output[i] > 0.0)) g[i] = 0.0;
    return g;
}

Tensor softmax_rows(const Tensor& x) {
    require_matrix(x, "softmax_rows input");
    Tensor y(x.shape());
    for (std::size_t i = 0; i < x.dim(0); ++i) {
        auto in = x.row(i);
        auto out = y.row(i);
        const double m = *std::max_element(in.begin(), in.end());
        double z = 0.0;
        for (std::size_t j = 0; j < in.size(); ++j) {
            out[j] = std::exp(in[j] - m);
            z += out[j];
        }
        for (auto& v : out) v /= z;
    }
    return y;
}

Tensor softmax_rows_backward(const Tensor& y, const Tensor& grad_y) {
    require_same_shape(y, grad_y, "softmax_rows_backward");
    Tensor g(y.shape());
    for (std::size_t i = 0; i < y.dim(0); ++i) {
        auto yr = y.row(i);
        auto gr = grad_y.row(i);
        double dot = 0.0;
        for (std::size_t j = 0; j < yr.size(); ++j) dot += yr[j] * gr[j];
        auto out = g.row(i);
        for (std::size_t j = 0; j < yr.size(); ++j) out[j] = yr[j] * (gr[j] - dot);
    }
    return g;
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps) {
    if (x.rank() != 1) throw DimensionError("layer_norm expects a vector, got " + shape_string(x.shape()));
    return layer_norm_rows(x.reshaped({1, x.size()}), gain, bias, eps).reshaped({x.size()});
}

Tensor layer_norm_rows(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps,
                       LayerNormContext* ctx) {
    require_matrix(x, "layer_norm input");
    const std::size_t n = x.dim(1);
    if (gain.size() != n || bias.size() != n) {
        throw DimensionError("layer_norm: gain/bias " + shape_string(gain.shape()) + "/" +
                             shape_string(bias.shape()) + " vs width " + std::to_string(n));
    }
    Tensor y(x.shape());
    Tensor normalized(x.shape());
    std::vector<double> inv_std(x.dim(0));
    for (std::size_t i = 0; i < x.dim(0); ++i) {
        auto in = x.row(i);
        const double mean = std::accumulate(in.begin(), in.end(), 0.0) / static_cast<double>(n);
        double var = 0.0;
        for (double v : in) var += (v - mean) * (v - mean);
        var /= static_cast<double>(n);
        const double denom = std::sqrt(var + eps);
        inv_std[i] = denom > 0.0 ? 1.0 / denom : 0.0;
        auto nr = normalized.row(i);
        auto out = y.row(i);
        for (std::size_t j = 0; j < n; ++j) {
            nr[j] = (in[j] - mean) * inv_std[i];
            out[j] = gain[j] * nr[j] + bias[j];
        }
    }
    if (ctx) {
        ctx->normalized = std::move(normalized);
        ctx->inv_std = std::move(inv_std);
    }
    return y;
}

LayerNormGrads layer_norm_rows_backward(const Tensor& grad_out, const Tensor& gain, const LayerNormContext& ctx) {
    require_same_shape(grad_out, ctx.normalized, "layer_norm_backward");
    const std::size_t rows = grad_out.dim(0);
    const std::size_t n = grad_out.dim(1);
    LayerNormGrads g{Tensor(grad_out.shape()), Tensor({n}), Tensor({n})};
    std::vector<double> gx(n);
    for (std::size_t i = 0; i < rows; ++i) {
        auto go = grad_out.row(i);
        auto xh = ctx.normalized.row(i);
        double mean_g = 0.0;
        double mean_gx = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            g.gain[j] += go[j] * xh[j];
            g.bias[j] += go[j];
            gx[j] = go[j] * gain[j];
            mean_g += gx[j];
            mean_gx += gx[j] * xh[j];
        }
        mean_g /= static_cast<double>(n);
        mean_gx /= static_cast<double>(n);
        auto gi = g.input.row(i);
        for (std::size_t j = 0; j < n; ++j) gi[j] = ctx.inv_std[i] * (gx[j] - mean_g - xh[j] * mean_gx);
    }
    return g;
}

Tensor finite_diff_grad(const ScalarFunction& f, const Tensor& x, double h) {
    if (!(h > 0.0)) throw ConfigError("finite_diff_grad: step must be positive");
    Tensor grad(x.shape());
    Tensor probe = x;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double orig = probe[i];
        probe[i] = orig + h;
        const double up = f(probe);
        probe[i] = orig - h;
        const double down = f(probe);
        probe[i] = orig;
        grad[i] = (up - down) / (2.0 * h);
    }
    return grad;
}

double max_relative_error(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "max_relative_error");
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double scale = std::max({1.0, std::abs(a[i]), std::abs(b[i])});
        worst = std::max(worst, std::abs(a[i] - b[i]) / scale);
    }
    return worst;
}

std::uint64_t Prng::mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

Prng Prng::derive(std::uint64_t seed, std::uint64_t index) {
    return Prng(mix(seed ^ mix(index + 0x9E3779B97F4A7C15ULL)));
}

std::uint64_t Prng::next_u64() {
    state_ += 0x9E3779B97F4A7C15ULL;
    return mix(state_);
}

double Prng::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

std::uint64_t Prng::below(std::uint64_t n) {
    if (n == 0) throw ConfigError("Prng::below: empty range");
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
        const std::uint64_t r = next_u64();
        if (r >= threshold) return r % n;
    }
}

double Prng::normal() {
    // 1 - uniform() lies in (0, 1], so the log is finite.
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

void glorot_uniform(Tensor& t, std::size_t fan_in, std::size_t fan_out, Prng& rng) {
    const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    fill_uniform(t, -a, a, rng);
}

void fill_uniform(Tensor& t, double lo, double hi, Prng& rng) {
    for (auto& v : t.values()) v = rng.uniform(lo, hi);
}

}  // namespace dota
