#include "dota/deform_conv.hpp"

#include <algorithm>
#include <cmath>

namespace dota {

namespace {

void require_chw(const Tensor& t, const char* what) {
    if (t.rank() != 3) throw DimensionError(std::string(what) + " must be [C,H,W], got " + shape_string(t.shape()));
}

// Bilinear read of one fractional coordinate: the four floor-cell corners,
// their interpolation weights and whether each lies inside the map.
struct BilinearCell {
    long y0 = 0;
    long x0 = 0;
    double ly = 0.0;
    double lx = 0.0;
    bool valid[4] = {false, false, false, false};  // (y0,x0) (y0,x1) (y1,x0) (y1,x1)
    std::size_t index[4] = {0, 0, 0, 0};

    BilinearCell(double y, double x, std::size_t height, std::size_t width) {
        const double fy = std::floor(y);
        const double fx = std::floor(x);
        ly = y - fy;
        lx = x - fx;
        // Far outside the map every corner is invalid; clamp before the
        // integer conversion so huge offsets stay well defined.
        const double limit = static_cast<double>(std::max(height, width)) + 2.0;
        y0 = static_cast<long>(std::clamp(fy, -limit, limit));
        x0 = static_cast<long>(std::clamp(fx, -limit, limit));
        const long h = static_cast<long>(height);
        const long w = static_cast<long>(width);
        for (int c = 0; c < 4; ++c) {
            const long yy = y0 + (c >> 1);
            const long xx = x0 + (c & 1);
            valid[c] = yy >= 0 && yy < h && xx >= 0 && xx < w;
            index[c] = valid[c] ? static_cast<std::size_t>(yy * w + xx) : 0;
        }
    }

    double weight(int c) const {
        const double wy = (c >> 1) ? ly : 1.0 - ly;
        const double wx = (c & 1) ? lx : 1.0 - lx;
        return wy * wx;
    }

    double read(const double* map) const {
        double v = 0.0;
        for (int c = 0; c < 4; ++c)
            if (valid[c]) v += weight(c) * map[index[c]];
        return v;
    }

    double corner(const double* map, int c) const { return valid[c] ? map[index[c]] : 0.0; }
};

// Outputs o in [first, second) whose input index o*stride + tap - padding lies in [0, extent).
std::pair<std::size_t, std::size_t> valid_outputs(std::size_t out, std::size_t extent, std::size_t stride,
                                                  std::size_t tap, std::size_t padding) {
    const std::size_t lo = tap >= padding ? 0 : (padding - tap + stride - 1) / stride;
    const std::size_t hi = extent + padding > tap ? std::min(out, (extent + padding - tap - 1) / stride + 1) : 0;
    return {std::min(lo, hi), hi};
}

Tensor weights_matrix(const ConvKernel& kernel) {
    const std::size_t k = kernel.size();
    return kernel.weights.reshaped({kernel.out_channels(), kernel.in_channels() * k * k});
}

Tensor add_bias_and_shape(Tensor out_mat, const ConvKernel& kernel, std::size_t out_h, std::size_t out_w) {
    const std::size_t plane = out_h * out_w;
    for (std::size_t co = 0; co < kernel.out_channels(); ++co) {
        double* row = out_mat.data() + co * plane;
        for (std::size_t p = 0; p < plane; ++p) row[p] += kernel.bias[co];
    }
    return out_mat.reshaped({kernel.out_channels(), out_h, out_w});
}

Tensor bias_grad(const Tensor& grad_out, std::size_t channels) {
    Tensor g({channels});
    const std::size_t plane = grad_out.size() / channels;
    for (std::size_t c = 0; c < channels; ++c) {
        double s = 0.0;
        const double* row = grad_out.data() + c * plane;
        for (std::size_t p = 0; p < plane; ++p) s += row[p];
        g[c] = s;
    }
    return g;
}

}  // namespace

ConvKernel ConvKernel::zeros(std::size_t out_channels, std::size_t in_channels, std::size_t k,
                             std::size_t stride, std::size_t padding) {
    ConvKernel kernel{Tensor({out_channels, in_channels, k, k}), Tensor({out_channels}), stride, padding};
    kernel.validate();
    return kernel;
}

void ConvKernel::validate() const {
    if (weights.rank() != 4) throw ConfigError("conv weights must be [C_out,C_in,k,k], got " + shape_string(weights.shape()));
    if (weights.dim(2) != weights.dim(3)) throw ConfigError("conv kernel must be square, got " + shape_string(weights.shape()));
    if (weights.dim(2) % 2 == 0) throw ConfigError("conv kernel size must be odd, got " + std::to_string(weights.dim(2)));
    if (bias.rank() != 1 || bias.dim(0) != weights.dim(0)) {
        throw ConfigError("conv bias " + shape_string(bias.shape()) + " does not match " + shape_string(weights.shape()));
    }
    if (stride == 0) throw ConfigError("conv stride must be positive");
}

std::size_t conv_output_size(std::size_t in, std::size_t k, std::size_t stride, std::size_t padding) {
    const std::size_t padded = in + 2 * padding;
    if (stride == 0 || padded < k) {
        throw ConfigError("convolution does not fit: extent " + std::to_string(in) + ", kernel " +
                          std::to_string(k) + ", stride " + std::to_string(stride) + ", padding " +
                          std::to_string(padding));
    }
    return (padded - k) / stride + 1;
}

double bilinear_sample(std::span<const double> map, std::size_t height, std::size_t width, double y, double x) {
    if (map.size() != height * width) throw DimensionError("bilinear_sample: map size does not match extent");
    return BilinearCell(y, x, height, width).read(map.data());
}

double bilinear_sample(const Tensor& map, double y, double x) {
    if (map.rank() != 2) throw DimensionError("bilinear_sample expects [H,W], got " + shape_string(map.shape()));
    return bilinear_sample(map.values(), map.dim(0), map.dim(1), y, x);
}

Tensor conv2d(const Tensor& input, const ConvKernel& kernel, ConvContext* ctx) {
    require_chw(input, "conv2d input");
    kernel.validate();
    if (input.dim(0) != kernel.in_channels()) {
        throw DimensionError("conv2d: input " + shape_string(input.shape()) + " vs kernel " +
                             shape_string(kernel.weights.shape()));
    }
    const std::size_t cin = input.dim(0), h = input.dim(1), w = input.dim(2), k = kernel.size();
    const std::size_t oh = conv_output_size(h, k, kernel.stride, kernel.padding);
    const std::size_t ow = conv_output_size(w, k, kernel.stride, kernel.padding);
    const std::size_t plane = oh * ow;

    const std::size_t s = kernel.stride, pad = kernel.padding;
    Tensor columns({cin * k * k, plane});
    for (std::size_t c = 0; c < cin; ++c) {
        const double* src = input.data() + c * h * w;
        for (std::size_t i = 0; i < k; ++i) {
            const auto [ylo, yhi] = valid_outputs(oh, h, s, i, pad);
            for (std::size_t j = 0; j < k; ++j) {
                const auto [xlo, xhi] = valid_outputs(ow, w, s, j, pad);
                double* dst = columns.data() + ((c * k + i) * k + j) * plane;
                for (std::size_t oy = ylo; oy < yhi; ++oy) {
                    const double* srow = src + (oy * s + i - pad) * w;
                    double* drow = dst + oy * ow;
                    for (std::size_t ox = xlo; ox < xhi; ++ox) drow[ox] = srow[ox * s + j - pad];
                }
            }
        }
    }

    Tensor out = add_bias_and_shape(matmul(weights_matrix(kernel), columns), kernel, oh, ow);
    if (ctx) {
        ctx->columns = std::move(columns);
        ctx->input_shape = input.shape();
        ctx->out_height = oh;
        ctx->out_width = ow;
    }
    return out;
}

ConvGrads conv2d_backward(const Tensor& grad_out, const ConvKernel& kernel, const ConvContext& ctx,
                          bool need_input) {
    const std::size_t cout = kernel.out_channels(), k = kernel.size();
    const std::size_t plane = ctx.out_height * ctx.out_width;
    if (grad_out.size() != cout * plane) {
        throw DimensionError("conv2d_backward: grad " + shape_string(grad_out.shape()) + " vs output [" +
                             std::to_string(cout) + "," + std::to_string(ctx.out_height) + "," +
                             std::to_string(ctx.out_width) + "]");
    }
    const Tensor g = grad_out.reshaped({cout, plane});
    ConvGrads grads;
    grads.weights = matmul_nt(g, ctx.columns).reshaped(kernel.weights.shape());
    grads.bias = bias_grad(grad_out, cout);
    if (!need_input) return grads;

    const Tensor gcols = matmul_tn(weights_matrix(kernel), g);
    const std::size_t cin = ctx.input_shape[0], h = ctx.input_shape[1], w = ctx.input_shape[2];
    const std::size_t s = kernel.stride, pad = kernel.padding;
    grads.input = Tensor(ctx.input_shape);
    for (std::size_t c = 0; c < cin; ++c) {
        double* dst = grads.input.data() + c * h * w;
        for (std::size_t i = 0; i < k; ++i) {
            const auto [ylo, yhi] = valid_outputs(ctx.out_height, h, s, i, pad);
            for (std::size_t j = 0; j < k; ++j) {
                const auto [xlo, xhi] = valid_outputs(ctx.out_width, w, s, j, pad);
                const double* src = gcols.data() + ((c * k + i) * k + j) * plane;
                for (std::size_t oy = ylo; oy < yhi; ++oy) {
                    double* drow = dst + (oy * s + i - pad) * w;
                    const double* srow = src + oy * ctx.out_width;
                    for (std::size_t ox = xlo; ox < xhi; ++ox) drow[ox * s + j - pad] += srow[ox];
                }
            }
        }
    }
    return grads;
}

OffsetField offset_predict(const Tensor& input, const ConvKernel& offset_kernel, std::size_t main_kernel_size,
                           ConvContext* ctx) {
    offset_kernel.validate();
    const std::size_t expected = 2 * main_kernel_size * main_kernel_size;
    if (offset_kernel.out_channels() != expected) {
        throw ConfigError("offset kernel has " + std::to_string(offset_kernel.out_channels()) +
                          " output channels, expected " + std::to_string(expected));
    }
    return OffsetField{conv2d(input, offset_kernel, ctx)};
}

Tensor deform_conv(const Tensor& input, const ConvKernel& kernel, const OffsetField& offsets, DeformContext* ctx) {
    require_chw(input, "deform_conv input");
    kernel.validate();
    if (input.dim(0) != kernel.in_channels()) {
        throw DimensionError("deform_conv: input " + shape_string(input.shape()) + " vs kernel " +
                             shape_string(kernel.weights.shape()));
    }
    const std::size_t cin = input.dim(0), h = input.dim(1), w = input.dim(2), k = kernel.size();
    const std::size_t taps = k * k;
    const std::size_t oh = conv_output_size(h, k, kernel.stride, kernel.padding);
    const std::size_t ow = conv_output_size(w, k, kernel.stride, kernel.padding);
    const Shape expected{2 * taps, oh, ow};
    if (offsets.offsets.shape() != expected) {
        throw DimensionError("deform_conv: offsets " + shape_string(offsets.offsets.shape()) + ", expected " +
                             shape_string(expected));
    }
    const std::size_t plane = oh * ow;
    const std::size_t map = h * w;

    Tensor columns({cin * taps, plane});
    for (std::size_t n = 0; n < taps; ++n) {
        const double* dy = offsets.offsets.data() + (2 * n) * plane;
        const double* dx = offsets.offsets.data() + (2 * n + 1) * plane;
        const double base_i = static_cast<double>(n / k) - static_cast<double>(kernel.padding);
        const double base_j = static_cast<double>(n % k) - static_cast<double>(kernel.padding);
        for (std::size_t p = 0; p < plane; ++p) {
            const double y = static_cast<double>((p / ow) * kernel.stride) + base_i + dy[p];
            const double x = static_cast<double>((p % ow) * kernel.stride) + base_j + dx[p];
            const BilinearCell cell(y, x, h, w);
            for (std::size_t c = 0; c < cin; ++c) {
                columns.data()[(c * taps + n) * plane + p] = cell.read(input.data() + c * map);
            }
        }
    }

    Tensor out = add_bias_and_shape(matmul(weights_matrix(kernel), columns), kernel, oh, ow);
    if (ctx) {
        ctx->input = input;
        ctx->offsets = offsets.offsets;
        ctx->columns = std::move(columns);
        ctx->out_height = oh;
        ctx->out_width = ow;
    }
    return out;
}

DeformGrads deform_conv_backward(const Tensor& grad_out, const ConvKernel& kernel, const DeformContext& ctx) {
    const std::size_t cout = kernel.out_channels(), k = kernel.size(), taps = k * k;
    const std::size_t plane = ctx.out_height * ctx.out_width;
    if (grad_out.size() != cout * plane) {
        throw DimensionError("deform_conv_backward: grad " + shape_string(grad_out.shape()) +
                             " does not match the forward output");
    }
    const Tensor g = grad_out.reshaped({cout, plane});
    DeformGrads grads;
    grads.weights = matmul_nt(g, ctx.columns).reshaped(kernel.weights.shape());
    grads.bias = bias_grad(grad_out, cout);

    const Tensor gcols = matmul_tn(weights_matrix(kernel), g);
    const std::size_t cin = ctx.input.dim(0), h = ctx.input.dim(1), w = ctx.input.dim(2);
    const std::size_t map = h * w;
    const std::size_t ow = ctx.out_width;
    grads.input = Tensor(ctx.input.shape());
    grads.offsets = Tensor(ctx.offsets.shape());

    for (std::size_t n = 0; n < taps; ++n) {
        const double* dy = ctx.offsets.data() + (2 * n) * plane;
        const double* dx = ctx.offsets.data() + (2 * n + 1) * plane;
        double* gdy = grads.offsets.data() + (2 * n) * plane;
        double* gdx = grads.offsets.data() + (2 * n + 1) * plane;
        const double base_i = static_cast<double>(n / k) - static_cast<double>(kernel.padding);
        const double base_j = static_cast<double>(n % k) - static_cast<double>(kernel.padding);
        for (std::size_t p = 0; p < plane; ++p) {
            const double y = static_cast<double>((p / ow) * kernel.stride) + base_i + dy[p];
            const double x = static_cast<double>((p % ow) * kernel.stride) + base_j + dx[p];
            const BilinearCell cell(y, x, h, w);
            double acc_y = 0.0;
            double acc_x = 0.0;
            for (std::size_t c = 0; c < cin; ++c) {
                const double gc = gcols.data()[(c * taps + n) * plane + p];
                if (gc == 0.0) continue;
                const double* src = ctx.input.data() + c * map;
                double* dst = grads.input.data() + c * map;
                for (int q = 0; q < 4; ++q)
                    if (cell.valid[q]) dst[cell.index[q]] += gc * cell.weight(q);
                const double v00 = cell.corner(src, 0), v01 = cell.corner(src, 1);
                const double v10 = cell.corner(src, 2), v11 = cell.corner(src, 3);
                acc_y += gc * ((1.0 - cell.lx) * (v10 - v00) + cell.lx * (v11 - v01));
                acc_x += gc * ((1.0 - cell.ly) * (v01 - v00) + cell.ly * (v11 - v10));
            }
            gdy[p] = acc_y;
            gdx[p] = acc_x;
        }
    }
    return grads;
}

}  // namespace dota
