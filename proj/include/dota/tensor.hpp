#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace dota {

/// Raised when operand shapes do not agree.
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised for invalid layer or run configuration.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when an operation declines an input it cannot handle.
class RefusalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

using Shape = std::vector<std::size_t>;

std::string shape_string(const Shape& shape);

/**
 * Dense row-major tensor of doubles.
 *
 * Every dimension is positive and data().size() always equals the product
 * of the shape. A default-constructed tensor is empty (rank 0, no data).
 */
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape shape, double fill = 0.0);
    Tensor(Shape shape, std::vector<double> values);
    Tensor(std::initializer_list<std::size_t> shape, std::initializer_list<double> values);

    static Tensor zeros_like(const Tensor& other) { return Tensor(other.shape_); }
    /// Row vector [n] or matrix [rows, cols] from nested initializers.
    static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows);
    static Tensor identity(std::size_t n);

    const Shape& shape() const noexcept { return shape_; }
    std::size_t rank() const noexcept { return shape_.size(); }
    std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    std::span<double> values() noexcept { return data_; }
    std::span<const double> values() const noexcept { return data_; }
    double* data() noexcept { return data_.data(); }
    const double* data() const noexcept { return data_.data(); }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * shape_[1] + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * shape_[1] + j]; }
    double& operator()(std::size_t i, std::size_t j, std::size_t k) {
        return data_[(i * shape_[1] + j) * shape_[2] + k];
    }
    double operator()(std::size_t i, std::size_t j, std::size_t k) const {
        return data_[(i * shape_[1] + j) * shape_[2] + k];
    }
    double& operator()(std::size_t i, std::size_t j, std::size_t k, std::size_t l) {
        return data_[((i * shape_[1] + j) * shape_[2] + k) * shape_[3] + l];
    }
    double operator()(std::size_t i, std::size_t j, std::size_t k, std::size_t l) const {
        return data_[((i * shape_[1] + j) * shape_[2] + k) * shape_[3] + l];
    }

    /// Row i of a matrix as a span.
    std::span<double> row(std::size_t i) { return {data_.data() + i * shape_[1], shape_[1]}; }
    std::span<const double> row(std::size_t i) const {
        return {data_.data() + i * shape_[1], shape_[1]};
    }

    void fill(double value);
    Tensor reshaped(Shape shape) const;

    Tensor& operator+=(const Tensor& other);
    Tensor& operator-=(const Tensor& other);
    Tensor& operator*=(double scale);
    /// this += scale * other
    void add_scaled(const Tensor& other, double scale);

    bool all_finite() const;
    double sum() const;
    double max_abs() const;

    friend bool operator==(const Tensor&, const Tensor&) = default;

private:
    Shape shape_;
    std::vector<double> data_;
};

/// Non-owning (name, tensor) handle used to enumerate parameter sets.
struct NamedTensor {
    std::string name;
    Tensor* tensor;
};
using NamedTensors = std::vector<NamedTensor>;

Tensor operator+(Tensor a, const Tensor& b);
Tensor operator-(Tensor a, const Tensor& b);
Tensor operator*(double scale, Tensor a);

/// C = A B for A [m,k], B [k,n].
Tensor matmul(const Tensor& a, const Tensor& b);
/// C = A^T B for A [k,m], B [k,n].
Tensor matmul_tn(const Tensor& a, const Tensor& b);
/// C = A B^T for A [m,k], B [n,k].
Tensor matmul_nt(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);

/// Adds the row vector `bias` [n] to every row of `x` [m,n].
void add_row_bias(Tensor& x, const Tensor& bias);
/// Column sums of x [m,n] -> [n].
Tensor sum_rows(const Tensor& x);

Tensor relu(const Tensor& x);
/// grad_out masked by (forward_output > 0).
Tensor relu_backward(const Tensor& grad_out, const Tensor& forward_output);

/// Row-wise softmax with per-row max subtraction.
Tensor softmax_rows(const Tensor& x);
/// Gradient w.r.t. the softmax input given its output y and grad_y.
Tensor softmax_rows_backward(const Tensor& y, const Tensor& grad_y);

/// y = gain * (x - mean) / sqrt(var + eps) + bias, population variance.
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps);

struct LayerNormContext {
    Tensor normalized;  // (x - mean) * inv_std, per row
    std::vector<double> inv_std;
};

struct LayerNormGrads {
    Tensor input;
    Tensor gain;
    Tensor bias;
};

/// layer_norm applied independently to each row of x [T,d].
Tensor layer_norm_rows(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps,
                       LayerNormContext* ctx = nullptr);
LayerNormGrads layer_norm_rows_backward(const Tensor& grad_out, const Tensor& gain,
                                        const LayerNormContext& ctx);

using ScalarFunction = std::function<double(const Tensor&)>;

/// Central-difference gradient of f at x with step h.
Tensor finite_diff_grad(const ScalarFunction& f, const Tensor& x, double h);

/// max_i |a_i - b_i| / max(1, |a_i|, |b_i|)
double max_relative_error(const Tensor& a, const Tensor& b);

/**
 * splitmix64 generator. The stream is fixed so that a seed reproduces the
 * same draws on every platform.
 */
class Prng {
public:
    explicit Prng(std::uint64_t seed = 0) : state_(seed) {}

    /// Independent stream for (seed, index), e.g. one per worker or sample.
    static Prng derive(std::uint64_t seed, std::uint64_t index);
    static std::uint64_t mix(std::uint64_t z);

    std::uint64_t next_u64();
    /// Uniform in [0, 1) with 53 bits of resolution.
    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n);
    /// Standard normal via Box-Muller.
    double normal();

    std::uint64_t state() const noexcept { return state_; }

private:
    std::uint64_t state_;
};

/// Fills t with uniform(-a, a), a = sqrt(6 / (fan_in + fan_out)).
void glorot_uniform(Tensor& t, std::size_t fan_in, std::size_t fan_out, Prng& rng);
/// Fills t with uniform(lo, hi).
void fill_uniform(Tensor& t, double lo, double hi, Prng& rng);

}  // namespace dota
