#include "wvsort/nn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "wvsort/error.hpp"

namespace wvsort::nn {
namespace {

void require(bool ok, const std::string& what) {
    if (!ok) throw ShapeError(what);
}

std::size_t leading_rows(const Shape& shape, std::size_t trailing) {
    std::size_t r = 1;
    for (std::size_t i = 0; i + trailing < shape.size(); ++i) r *= shape[i];
    return r;
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
    require(a.shape() == b.shape(), "add: shape mismatch " + shape_string(a.shape()) + " vs " + shape_string(b.shape()));
    std::vector<double> out(a.size());
    const auto x = a.data();
    const auto y = b.data();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] + y[i];
    return make_result(a.shape(), std::move(out), {a, b}, [](Node& self) {
        for (auto& parent : self.parents) {
            if (!parent->requires_grad) continue;
            auto& g = parent->ensure_grad();
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
        }
    });
}

Tensor depthwise_conv_time(const Tensor& x, const Tensor& weight, const Tensor& bias) {
    require(x.rank() >= 3, "depthwise_conv: input must be [B, L, C...], got " + shape_string(x.shape()));
    const std::size_t batch = x.dim(0), length = x.dim(1);
    const std::size_t channels = x.size() / (batch * length);
    require(bias.size() == channels, "depthwise_conv: bias has " + std::to_string(bias.size()) + " entries, expected " +
                                         std::to_string(channels));
    require(weight.size() % channels == 0, "depthwise_conv: weight size is not a multiple of the channel count");
    const std::size_t kernel = weight.size() / channels;
    require(kernel % 2 == 1, "depthwise_conv: kernel size must be odd");
    const std::ptrdiff_t pad = static_cast<std::ptrdiff_t>(kernel / 2);

    const auto xv = x.data();
    const auto wv = weight.data();
    const auto bv = bias.data();
    std::vector<double> out(x.size());
    for (std::size_t b = 0; b < batch; ++b) {
        const double* xb = xv.data() + b * length * channels;
        double* ob = out.data() + b * length * channels;
        for (std::size_t l = 0; l < length; ++l) {
            double* orow = ob + l * channels;
            std::copy(bv.begin(), bv.end(), orow);
            for (std::size_t t = 0; t < kernel; ++t) {
                const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(l) + static_cast<std::ptrdiff_t>(t) - pad;
                if (src < 0 || src >= static_cast<std::ptrdiff_t>(length)) continue;
                const double* xrow = xb + static_cast<std::size_t>(src) * channels;
                const double* wrow = wv.data() + t * channels;
                for (std::size_t c = 0; c < channels; ++c) orow[c] += wrow[c] * xrow[c];
            }
        }
    }
    return make_result(x.shape(), std::move(out), {x, weight, bias},
                       [batch, length, channels, kernel, pad](Node& self) {
                           Node& xn = *self.parents[0];
                           Node& wn = *self.parents[1];
                           Node& bn = *self.parents[2];
                           double* gx = xn.requires_grad ? xn.ensure_grad().data() : nullptr;
                           double* gw = wn.requires_grad ? wn.ensure_grad().data() : nullptr;
                           double* gb = bn.requires_grad ? bn.ensure_grad().data() : nullptr;
                           const double* xv = xn.value.data();
                           const double* wv = wn.value.data();
                           for (std::size_t b = 0; b < batch; ++b) {
                               for (std::size_t l = 0; l < length; ++l) {
                                   const double* g = self.grad.data() + (b * length + l) * channels;
                                   if (gb) {
                                       for (std::size_t c = 0; c < channels; ++c) gb[c] += g[c];
                                   }
                                   for (std::size_t t = 0; t < kernel; ++t) {
                                       const std::ptrdiff_t src =
                                           static_cast<std::ptrdiff_t>(l) + static_cast<std::ptrdiff_t>(t) - pad;
                                       if (src < 0 || src >= static_cast<std::ptrdiff_t>(length)) continue;
                                       const std::size_t row = (b * length + static_cast<std::size_t>(src)) * channels;
                                       if (gx) {
                                           const double* wrow = wv + t * channels;
                                           double* gxrow = gx + row;
                                           for (std::size_t c = 0; c < channels; ++c) gxrow[c] += wrow[c] * g[c];
                                       }
                                       if (gw) {
                                           const double* xrow = xv + row;
                                           double* gwrow = gw + t * channels;
                                           for (std::size_t c = 0; c < channels; ++c) gwrow[c] += xrow[c] * g[c];
                                       }
                                   }
                               }
                           }
                       });
}

Tensor batch_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, Tensor& running_mean,
                  Tensor& running_var, bool training, double momentum, double eps) {
    require(x.rank() >= 3, "batch_norm: input must be [B, L, C...], got " + shape_string(x.shape()));
    const std::size_t rows = x.dim(0) * x.dim(1);
    const std::size_t channels = x.size() / rows;
    require(gamma.size() == channels && beta.size() == channels && running_mean.size() == channels &&
                running_var.size() == channels,
            "batch_norm: parameter size does not match " + std::to_string(channels) + " channels");

    const auto xv = x.data();
    std::vector<double> mean(channels, 0.0), var(channels, 0.0);
    if (training) {
        for (std::size_t r = 0; r < rows; ++r) {
            const double* row = xv.data() + r * channels;
            for (std::size_t c = 0; c < channels; ++c) mean[c] += row[c];
        }
        for (auto& m : mean) m /= static_cast<double>(rows);
        for (std::size_t r = 0; r < rows; ++r) {
            const double* row = xv.data() + r * channels;
            for (std::size_t c = 0; c < channels; ++c) {
                const double d = row[c] - mean[c];
                var[c] += d * d;
            }
        }
        for (auto& v : var) v /= static_cast<double>(rows);
        auto rm = running_mean.data();
        auto rv = running_var.data();
        const double unbias = rows > 1 ? static_cast<double>(rows) / static_cast<double>(rows - 1) : 1.0;
        for (std::size_t c = 0; c < channels; ++c) {
            rm[c] = (1.0 - momentum) * rm[c] + momentum * mean[c];
            rv[c] = (1.0 - momentum) * rv[c] + momentum * var[c] * unbias;
        }
    } else {
        std::copy(running_mean.data().begin(), running_mean.data().end(), mean.begin());
        std::copy(running_var.data().begin(), running_var.data().end(), var.begin());
    }

    std::vector<double> inv_std(channels);
    for (std::size_t c = 0; c < channels; ++c) inv_std[c] = 1.0 / std::sqrt(var[c] + eps);
    const auto gv = gamma.data();
    const auto bv = beta.data();
    std::vector<double> xhat(x.size()), out(x.size());
    for (std::size_t r = 0; r < rows; ++r) {
        const double* row = xv.data() + r * channels;
        double* hrow = xhat.data() + r * channels;
        double* orow = out.data() + r * channels;
        for (std::size_t c = 0; c < channels; ++c) {
            hrow[c] = (row[c] - mean[c]) * inv_std[c];
            orow[c] = gv[c] * hrow[c] + bv[c];
        }
    }

    return make_result(
        x.shape(), std::move(out), {x, gamma, beta},
        [rows, channels, training, xhat = std::move(xhat), inv_std = std::move(inv_std)](Node& self) {
            Node& xn = *self.parents[0];
            Node& gn = *self.parents[1];
            Node& bn = *self.parents[2];
            std::vector<double> sum_g(channels, 0.0), sum_gh(channels, 0.0);
            for (std::size_t r = 0; r < rows; ++r) {
                const double* g = self.grad.data() + r * channels;
                const double* h = xhat.data() + r * channels;
                for (std::size_t c = 0; c < channels; ++c) {
                    sum_g[c] += g[c];
                    sum_gh[c] += g[c] * h[c];
                }
            }
            if (gn.requires_grad) {
                auto& gg = gn.ensure_grad();
                for (std::size_t c = 0; c < channels; ++c) gg[c] += sum_gh[c];
            }
            if (bn.requires_grad) {
                auto& gb = bn.ensure_grad();
                for (std::size_t c = 0; c < channels; ++c) gb[c] += sum_g[c];
            }
            if (!xn.requires_grad) return;
            auto& gx = xn.ensure_grad();
            const double* gamma = gn.value.data();
            const double m = static_cast<double>(rows);
            for (std::size_t r = 0; r < rows; ++r) {
                const double* g = self.grad.data() + r * channels;
                const double* h = xhat.data() + r * channels;
                double* out = gx.data() + r * channels;
                for (std::size_t c = 0; c < channels; ++c) {
                    const double scale = gamma[c] * inv_std[c];
                    if (training) {
                        out[c] += scale * (g[c] - sum_g[c] / m - h[c] * sum_gh[c] / m);
                    } else {
                        out[c] += scale * g[c];
                    }
                }
            }
        });
}

Tensor grouped_linear(const Tensor& x, const Tensor& weight, const Tensor& bias) {
    require(x.rank() >= 2 && weight.rank() == 3 && bias.rank() == 2,
            "grouped_linear: expected x [..., G, In], weight [G, Out, In], bias [G, Out]");
    const std::size_t groups = weight.dim(0), out_dim = weight.dim(1), in_dim = weight.dim(2);
    require(x.dim(x.rank() - 2) == groups && x.dim(x.rank() - 1) == in_dim,
            "grouped_linear: input " + shape_string(x.shape()) + " does not match weight " + shape_string(weight.shape()));
    require(bias.dim(0) == groups && bias.dim(1) == out_dim, "grouped_linear: bias shape mismatch");
    const std::size_t rows = leading_rows(x.shape(), 2);

    Shape out_shape = x.shape();
    out_shape.back() = out_dim;
    std::vector<double> out(rows * groups * out_dim);
    const auto xv = x.data();
    const auto wv = weight.data();
    const auto bv = bias.data();
    // Transposed copy so the inner loop runs over outputs; the per-output
    // summation order (bias, then i ascending) is unchanged.
    std::vector<double> wt(groups * in_dim * out_dim);
    for (std::size_t g = 0; g < groups; ++g)
        for (std::size_t k = 0; k < out_dim; ++k)
            for (std::size_t i = 0; i < in_dim; ++i)
                wt[(g * in_dim + i) * out_dim + k] = wv[(g * out_dim + k) * in_dim + i];
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t g = 0; g < groups; ++g) {
            const double* xin = xv.data() + (r * groups + g) * in_dim;
            double* __restrict o = out.data() + (r * groups + g) * out_dim;
            const double* bg = bv.data() + g * out_dim;
            for (std::size_t k = 0; k < out_dim; ++k) o[k] = bg[k];
            for (std::size_t i = 0; i < in_dim; ++i) {
                const double xi = xin[i];
                const double* __restrict wrow = wt.data() + (g * in_dim + i) * out_dim;
                for (std::size_t k = 0; k < out_dim; ++k) o[k] += wrow[k] * xi;
            }
        }
    }
    return make_result(std::move(out_shape), std::move(out), {x, weight, bias},
                       [rows, groups, out_dim, in_dim](Node& self) {
                           Node& xn = *self.parents[0];
                           Node& wn = *self.parents[1];
                           Node& bn = *self.parents[2];
                           double* __restrict gx = xn.requires_grad ? xn.ensure_grad().data() : nullptr;
                           double* __restrict gw = wn.requires_grad ? wn.ensure_grad().data() : nullptr;
                           double* __restrict gb = bn.requires_grad ? bn.ensure_grad().data() : nullptr;
                           const double* __restrict xv = xn.value.data();
                           const double* __restrict wv = wn.value.data();
                           for (std::size_t r = 0; r < rows; ++r) {
                               for (std::size_t g = 0; g < groups; ++g) {
                                   const double* __restrict go = self.grad.data() + (r * groups + g) * out_dim;
                                   const double* __restrict xin = xv + (r * groups + g) * in_dim;
                                   double* __restrict gxin = gx ? gx + (r * groups + g) * in_dim : nullptr;
                                   for (std::size_t k = 0; k < out_dim; ++k) {
                                       const double gk = go[k];
                                       if (gb) gb[g * out_dim + k] += gk;
                                       const std::size_t wrow = (g * out_dim + k) * in_dim;
                                       if (gw) {
                                           for (std::size_t i = 0; i < in_dim; ++i) gw[wrow + i] += gk * xin[i];
                                       }
                                       if (gxin) {
                                           for (std::size_t i = 0; i < in_dim; ++i) gxin[i] += gk * wv[wrow + i];
                                       }
                                   }
                               }
                           }
                       });
}

Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias) {
    require(x.rank() == 2 && weight.rank() == 2 && bias.rank() == 1, "linear: expected x [R, F], weight [Out, F], bias [Out]");
    require(x.dim(1) == weight.dim(1) && bias.dim(0) == weight.dim(0),
            "linear: input " + shape_string(x.shape()) + " does not match weight " + shape_string(weight.shape()));
    const std::size_t rows = x.dim(0), in_dim = x.dim(1), out_dim = weight.dim(0);
    std::vector<double> out(rows * out_dim);
    const auto xv = x.data();
    const auto wv = weight.data();
    const auto bv = bias.data();
    for (std::size_t r = 0; r < rows; ++r) {
        const double* xin = xv.data() + r * in_dim;
        for (std::size_t k = 0; k < out_dim; ++k) {
            const double* wrow = wv.data() + k * in_dim;
            double acc = bv[k];
            for (std::size_t i = 0; i < in_dim; ++i) acc += wrow[i] * xin[i];
            out[r * out_dim + k] = acc;
        }
    }
    return make_result({rows, out_dim}, std::move(out), {x, weight, bias}, [rows, in_dim, out_dim](Node& self) {
        Node& xn = *self.parents[0];
        Node& wn = *self.parents[1];
        Node& bn = *self.parents[2];
        double* gx = xn.requires_grad ? xn.ensure_grad().data() : nullptr;
        double* gw = wn.requires_grad ? wn.ensure_grad().data() : nullptr;
        double* gb = bn.requires_grad ? bn.ensure_grad().data() : nullptr;
        for (std::size_t r = 0; r < rows; ++r) {
            const double* go = self.grad.data() + r * out_dim;
            const double* xin = xn.value.data() + r * in_dim;
            for (std::size_t k = 0; k < out_dim; ++k) {
                const double gk = go[k];
                if (gb) gb[k] += gk;
                if (gw) {
                    double* gwrow = gw + k * in_dim;
                    for (std::size_t i = 0; i < in_dim; ++i) gwrow[i] += gk * xin[i];
                }
                if (gx) {
                    const double* wrow = wn.value.data() + k * in_dim;
                    double* gxin = gx + r * in_dim;
                    for (std::size_t i = 0; i < in_dim; ++i) gxin[i] += gk * wrow[i];
                }
            }
        }
    });
}

Tensor transpose_last2(const Tensor& x) {
    require(x.rank() >= 2, "transpose_last2: rank must be >= 2");
    const std::size_t a = x.dim(x.rank() - 2), b = x.dim(x.rank() - 1);
    const std::size_t rows = leading_rows(x.shape(), 2);
    Shape shape = x.shape();
    std::swap(shape[shape.size() - 2], shape[shape.size() - 1]);
    std::vector<double> out(x.size());
    const auto xv = x.data();
    for (std::size_t r = 0; r < rows; ++r) {
        const double* src = xv.data() + r * a * b;
        double* dst = out.data() + r * a * b;
        for (std::size_t i = 0; i < a; ++i) {
            for (std::size_t j = 0; j < b; ++j) dst[j * a + i] = src[i * b + j];
        }
    }
    return make_result(std::move(shape), std::move(out), {x}, [rows, a, b](Node& self) {
        auto& gx = self.parents[0]->ensure_grad();
        for (std::size_t r = 0; r < rows; ++r) {
            const double* g = self.grad.data() + r * a * b;
            double* dst = gx.data() + r * a * b;
            for (std::size_t i = 0; i < a; ++i) {
                for (std::size_t j = 0; j < b; ++j) dst[i * b + j] += g[j * a + i];
            }
        }
    });
}

Tensor gelu(const Tensor& x) {
    const auto xv = x.data();
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = 0.5 * xv[i] * (1.0 + std::erf(xv[i] * std::numbers::sqrt2 / 2.0));
    }
    return make_result(x.shape(), std::move(out), {x}, [](Node& self) {
        Node& xn = *self.parents[0];
        auto& gx = xn.ensure_grad();
        constexpr double inv_sqrt_2pi = 0.3989422804014327;
        for (std::size_t i = 0; i < gx.size(); ++i) {
            const double v = xn.value[i];
            const double cdf = 0.5 * (1.0 + std::erf(v * std::numbers::sqrt2 / 2.0));
            const double pdf = inv_sqrt_2pi * std::exp(-0.5 * v * v);
            gx[i] += self.grad[i] * (cdf + v * pdf);
        }
    });
}

Tensor reshape(const Tensor& x, Shape shape) {
    require(shape_size(shape) == x.size(),
            "reshape: cannot view " + shape_string(x.shape()) + " as " + shape_string(shape));
    std::vector<double> out(x.data().begin(), x.data().end());
    return make_result(std::move(shape), std::move(out), {x}, [](Node& self) {
        auto& gx = self.parents[0]->ensure_grad();
        for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += self.grad[i];
    });
}

Tensor dropout(const Tensor& x, double p, std::mt19937_64& rng) {
    if (!(p >= 0.0 && p < 1.0)) throw PreconditionError("dropout: probability must be in [0, 1)");
    if (p == 0.0) return x;
    const double scale = 1.0 / (1.0 - p);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<double> mask(x.size());
    for (auto& m : mask) m = unit(rng) < p ? 0.0 : scale;
    std::vector<double> out(x.size());
    const auto xv = x.data();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = xv[i] * mask[i];
    return make_result(x.shape(), std::move(out), {x}, [mask = std::move(mask)](Node& self) {
        auto& gx = self.parents[0]->ensure_grad();
        for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += self.grad[i] * mask[i];
    });
}

Tensor softmax(const Tensor& x) {
    require(x.rank() >= 1, "softmax: rank must be >= 1");
    const std::size_t cols = x.dim(x.rank() - 1);
    const std::size_t rows = x.size() / cols;
    const auto xv = x.data();
    std::vector<double> out(x.size());
    for (std::size_t r = 0; r < rows; ++r) {
        const double* in = xv.data() + r * cols;
        double* o = out.data() + r * cols;
        const double m = *std::max_element(in, in + cols);
        double total = 0.0;
        for (std::size_t c = 0; c < cols; ++c) {
            o[c] = std::exp(in[c] - m);
            total += o[c];
        }
        for (std::size_t c = 0; c < cols; ++c) o[c] /= total;
    }
    auto y = out;
    return make_result(x.shape(), std::move(out), {x}, [rows, cols, y = std::move(y)](Node& self) {
        auto& gx = self.parents[0]->ensure_grad();
        for (std::size_t r = 0; r < rows; ++r) {
            const double* g = self.grad.data() + r * cols;
            const double* p = y.data() + r * cols;
            double dotp = 0.0;
            for (std::size_t c = 0; c < cols; ++c) dotp += g[c] * p[c];
            for (std::size_t c = 0; c < cols; ++c) gx[r * cols + c] += p[c] * (g[c] - dotp);
        }
    });
}

Tensor cross_entropy_logits(const Tensor& logits, std::span<const Label> labels) {
    require(logits.rank() == 2, "cross_entropy: logits must be [R, C]");
    const std::size_t rows = logits.dim(0), cols = logits.dim(1);
    require(labels.size() == rows, "cross_entropy: label count does not match rows");
    const auto xv = logits.data();
    std::vector<double> probs(logits.size());
    double loss = 0.0;
    for (std::size_t r = 0; r < rows; ++r) {
        if (labels[r] >= cols) {
            throw PreconditionError("cross_entropy: label " + std::to_string(labels[r]) + " >= class count " +
                                    std::to_string(cols));
        }
        const double* in = xv.data() + r * cols;
        const double m = *std::max_element(in, in + cols);
        double total = 0.0;
        for (std::size_t c = 0; c < cols; ++c) total += std::exp(in[c] - m);
        const double lse = m + std::log(total);
        loss += lse - in[labels[r]];
        for (std::size_t c = 0; c < cols; ++c) probs[r * cols + c] = std::exp(in[c] - lse);
    }
    loss /= static_cast<double>(rows);
    std::vector<Label> targets(labels.begin(), labels.end());
    return make_result({1}, {loss}, {logits},
                       [rows, cols, probs = std::move(probs), targets = std::move(targets)](Node& self) {
                           auto& gx = self.parents[0]->ensure_grad();
                           const double scale = self.grad[0] / static_cast<double>(rows);
                           for (std::size_t r = 0; r < rows; ++r) {
                               for (std::size_t c = 0; c < cols; ++c) {
                                   const double onehot = c == targets[r] ? 1.0 : 0.0;
                                   gx[r * cols + c] += scale * (probs[r * cols + c] - onehot);
                               }
                           }
                       });
}

Tensor lembs(const Tensor& z, const Tensor& w, const Tensor& b) {
    require(z.rank() == 3 && w.rank() == 2 && b.shape() == w.shape() && w.dim(0) == z.dim(2),
            "lembs: expected z [B, L, N], w [N, D], b [N, D]");
    const std::size_t rows = z.dim(0) * z.dim(1), vars = z.dim(2), dim = w.dim(1);
    std::vector<double> out(rows * vars * dim);
    const auto zv = z.data();
    const auto wv = w.data();
    const auto bv = b.data();
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t n = 0; n < vars; ++n) {
            const double s = zv[r * vars + n];
            double* o = out.data() + (r * vars + n) * dim;
            for (std::size_t d = 0; d < dim; ++d) o[d] = wv[n * dim + d] * s + bv[n * dim + d];
        }
    }
    return make_result({z.dim(0), z.dim(1), vars, dim}, std::move(out), {z, w, b}, [rows, vars, dim](Node& self) {
        Node& zn = *self.parents[0];
        Node& wn = *self.parents[1];
        Node& bn = *self.parents[2];
        double* gz = zn.requires_grad ? zn.ensure_grad().data() : nullptr;
        double* gw = wn.requires_grad ? wn.ensure_grad().data() : nullptr;
        double* gb = bn.requires_grad ? bn.ensure_grad().data() : nullptr;
        for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t n = 0; n < vars; ++n) {
                const double s = zn.value[r * vars + n];
                const double* g = self.grad.data() + (r * vars + n) * dim;
                double acc = 0.0;
                for (std::size_t d = 0; d < dim; ++d) {
                    acc += wn.value[n * dim + d] * g[d];
                    if (gw) gw[n * dim + d] += s * g[d];
                    if (gb) gb[n * dim + d] += g[d];
                }
                if (gz) gz[r * vars + n] += acc;
            }
        }
    });
}

Tensor weighted_sum(const Tensor& x, std::span<const double> weights) {
    require(weights.size() == x.size(), "weighted_sum: weight count does not match tensor size");
    const auto xv = x.data();
    double total = 0.0;
    for (std::size_t i = 0; i < xv.size(); ++i) total += xv[i] * weights[i];
    std::vector<double> w(weights.begin(), weights.end());
    return make_result({1}, {total}, {x}, [w = std::move(w)](Node& self) {
        auto& gx = self.parents[0]->ensure_grad();
        for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += self.grad[0] * w[i];
    });
}

std::vector<double> standardize_windows(std::span<const double> values, std::size_t batch, std::size_t length,
                                        std::size_t variables) {
    std::vector<double> out(values.size());
    for (std::size_t b = 0; b < batch; ++b) {
        for (std::size_t n = 0; n < variables; ++n) {
            double mean = 0.0;
            double lo = values[b * length * variables + n];
            double hi = lo;
            for (std::size_t l = 0; l < length; ++l) {
                const double v = values[(b * length + l) * variables + n];
                mean += v;
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
            // Constant variables map to exact zeros rather than rounding residue.
            if (lo == hi) continue;
            mean /= static_cast<double>(length);
            double var = 0.0;
            for (std::size_t l = 0; l < length; ++l) {
                const double d = values[(b * length + l) * variables + n] - mean;
                var += d * d;
            }
            const double scale = 1.0 / (std::sqrt(var / static_cast<double>(length)) + 1e-8);
            for (std::size_t l = 0; l < length; ++l) {
                const std::size_t i = (b * length + l) * variables + n;
                out[i] = (values[i] - mean) * scale;
            }
        }
    }
    return out;
}

}  // namespace wvsort::nn
