#include "wvsort/nn/optim.hpp"

#include <cmath>

namespace wvsort::nn {

AdamW::AdamW(std::vector<Tensor> params, AdamWOptions options)
    : params_(std::move(params)), options_(options) {
    for (const auto& p : params_) {
        m_.emplace_back(p.size(), 0.0);
        v_.emplace_back(p.size(), 0.0);
    }
}

void AdamW::step() {
    ++step_;
    const double t = static_cast<double>(step_);
    const double bc1 = 1.0 - std::pow(options_.beta1, t);
    const double bc2 = 1.0 - std::pow(options_.beta2, t);
    const double decay = 1.0 - options_.lr * options_.weight_decay;
    for (std::size_t i = 0; i < params_.size(); ++i) {
        auto value = params_[i].data();
        const auto grad = params_[i].grad();
        auto& m = m_[i];
        auto& v = v_[i];
        for (std::size_t k = 0; k < value.size(); ++k) {
            value[k] *= decay;
            m[k] = options_.beta1 * m[k] + (1.0 - options_.beta1) * grad[k];
            v[k] = options_.beta2 * v[k] + (1.0 - options_.beta2) * grad[k] * grad[k];
            const double m_hat = m[k] / bc1;
            const double v_hat = v[k] / bc2;
            value[k] -= options_.lr * m_hat / (std::sqrt(v_hat) + options_.eps);
        }
    }
}

void AdamW::zero_grad() {
    for (auto& p : params_) p.zero_grad();
}

double grad_norm(const std::vector<Tensor>& params) {
    double total = 0.0;
    for (const auto& p : params) {
        if (!p.has_grad()) continue;
        for (double g : p.node()->grad) total += g * g;
    }
    return std::sqrt(total);
}

}  // namespace wvsort::nn
