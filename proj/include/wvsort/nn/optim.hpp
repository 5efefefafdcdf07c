#pragma once

#include <cstdint>
#include <vector>

#include "wvsort/nn/tensor.hpp"

namespace wvsort::nn {

struct AdamWOptions {
    double lr = 1e-3;
    double weight_decay = 1e-2;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// Adam with decoupled weight decay:
///   p <- p (1 - lr wd);  p <- p - lr m_hat / (sqrt(v_hat) + eps)
class AdamW {
public:
    AdamW(std::vector<Tensor> params, AdamWOptions options = {});

    void step();
    void zero_grad();

    std::uint64_t steps() const { return step_; }
    const AdamWOptions& options() const { return options_; }
    void set_lr(double lr) { options_.lr = lr; }
    const std::vector<double>& first_moment(std::size_t i) const { return m_.at(i); }
    const std::vector<double>& second_moment(std::size_t i) const { return v_.at(i); }

private:
    std::vector<Tensor> params_;
    AdamWOptions options_;
    std::vector<std::vector<double>> m_, v_;
    std::uint64_t step_ = 0;
};

/// L2 norm over the gradients of all tensors.
double grad_norm(const std::vector<Tensor>& params);

}  // namespace wvsort::nn
