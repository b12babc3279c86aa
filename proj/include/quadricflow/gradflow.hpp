#pragma once

// Full-batch gradient descent theta <- theta - h grad L(theta) as a proxy for gradient flow,
// with conservation-drift and sign monitoring along the way.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "core_net.hpp"
#include "topology.hpp"

namespace qflow {

struct Dataset {
    Matrix inputs;  // N x d
    Matrix targets; // N x e

    std::size_t size() const noexcept { return inputs.rows(); }
};

inline void validate(const Dataset& data) {
    if (data.inputs.rows() == 0) throw ShapeError("dataset is empty");
    if (data.targets.rows() != data.inputs.rows())
        throw ShapeError("inputs and targets have different numbers of rows");
    for (double v : data.inputs.data())
        if (!std::isfinite(v)) throw DomainError("dataset inputs must be finite");
    for (double v : data.targets.data())
        if (!std::isfinite(v)) throw DomainError("dataset targets must be finite");
}

enum class LossKind { mse, bce };

/// Probability clamp applied before taking logs in the BCE loss.
inline constexpr double bce_clamp = 1e-12;

namespace detail {

inline void check_loss_inputs(const Params& theta, const Dataset& data, LossKind kind) {
    validate(theta);
    validate(data);
    if (data.inputs.cols() != theta.input_dim())
        throw ShapeError("dataset has " + std::to_string(data.inputs.cols()) +
                         " input columns, network expects " + std::to_string(theta.input_dim()));
    if (data.targets.cols() != theta.output_dim())
        throw ShapeError("dataset has " + std::to_string(data.targets.cols()) +
                         " target columns, network has " + std::to_string(theta.output_dim()) +
                         " outputs");
    if (kind == LossKind::bce) {
        if (theta.output_dim() != 1) throw DomainError("BCE loss requires a scalar output (e = 1)");
        for (double y : data.targets.data())
            if (y != 0.0 && y != 1.0) throw DomainError("BCE targets must be 0 or 1");
    }
}

inline double logistic(double z) {
    return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

} // namespace detail

/// MSE: mean over samples of |f(x) - y|^2 (no 1/2 factor).
/// BCE: mean of -[y log p + (1 - y) log(1 - p)], p = logistic(f(x)) clamped to [1e-12, 1 - 1e-12].
inline double loss(const Params& theta, const Dataset& data, LossKind kind) {
    detail::check_loss_inputs(theta, data, kind);
    double total = 0.0;
    for (std::size_t n = 0; n < data.size(); ++n) {
        const Vector f = forward(theta, data.inputs.row(n));
        const auto y = data.targets.row(n);
        if (kind == LossKind::mse) {
            for (std::size_t j = 0; j < f.size(); ++j) total += (f[j] - y[j]) * (f[j] - y[j]);
        } else {
            const double p = std::clamp(detail::logistic(f[0]), bce_clamp, 1.0 - bce_clamp);
            total -= y[0] * std::log(p) + (1.0 - y[0]) * std::log(1.0 - p);
        }
    }
    return total / static_cast<double>(data.size());
}

/// Analytic gradient by backpropagation, with sigma'(0) := kink_slope (0 by default).
/// For BCE the output sensitivity is p - y with the unclamped p.
inline Params grad(const Params& theta, const Dataset& data, LossKind kind, double kink_slope = 0.0) {
    detail::check_loss_inputs(theta, data, kind);
    const std::size_t l = theta.hidden(), d = theta.input_dim(), e = theta.output_dim();
    const double inv_n = 1.0 / static_cast<double>(data.size());
    Params g = zeros_like(theta);
    Vector z(l), h(l), gf(e), gz(l);
    for (std::size_t n = 0; n < data.size(); ++n) {
        const auto x = data.inputs.row(n);
        const auto y = data.targets.row(n);
        for (std::size_t k = 0; k < l; ++k) {
            z[k] = detail::pre_activation(theta, k, x);
            h[k] = theta.activation(z[k]);
        }
        for (std::size_t j = 0; j < e; ++j) {
            double f = 0.0;
            for (std::size_t k = 0; k < l; ++k) f += theta.w2(j, k) * h[k];
            if (theta.b2) f += (*theta.b2)[j];
            gf[j] = kind == LossKind::mse ? 2.0 * (f - y[j]) * inv_n
                                          : (detail::logistic(f) - y[j]) * inv_n;
        }
        for (std::size_t k = 0; k < l; ++k) {
            double gh = 0.0;
            for (std::size_t j = 0; j < e; ++j) {
                g.w2(j, k) += gf[j] * h[k];
                gh += theta.w2(j, k) * gf[j];
            }
            gz[k] = gh * theta.activation.derivative(z[k], kink_slope);
        }
        for (std::size_t k = 0; k < l; ++k) {
            auto row = g.w1.row(k);
            for (std::size_t i = 0; i < d; ++i) row[i] += gz[k] * x[i];
            if (g.b1) (*g.b1)[k] += gz[k];
        }
        if (g.b2)
            for (std::size_t j = 0; j < e; ++j) (*g.b2)[j] += gf[j];
    }
    return g;
}

/// Central finite differences of the loss, one coordinate at a time.
inline Params finite_diff_grad(const Params& theta, const Dataset& data, LossKind kind, double h_fd) {
    if (!(h_fd > 0.0)) throw DomainError("finite-difference step must be positive");
    detail::check_loss_inputs(theta, data, kind);
    Params g = zeros_like(theta);
    Params probe = theta;
    auto sweep = [&](auto select) {
        std::span<double> coords = select(probe);
        std::span<double> out = select(g);
        for (std::size_t i = 0; i < coords.size(); ++i) {
            const double saved = coords[i];
            coords[i] = saved + h_fd;
            const double up = loss(probe, data, kind);
            coords[i] = saved - h_fd;
            const double down = loss(probe, data, kind);
            coords[i] = saved;
            out[i] = (up - down) / (2.0 * h_fd);
        }
    };
    sweep([](Params& p) { return p.w1.data(); });
    sweep([](Params& p) { return p.w2.data(); });
    if (theta.b1) {
        sweep([](Params& p) { return std::span<double>(*p.b1); });
        sweep([](Params& p) { return std::span<double>(*p.b2); });
    }
    return g;
}

struct TrainConfig {
    LossKind loss_kind = LossKind::mse;
    double learning_rate = 0.01;
    std::size_t steps = 500;
    std::size_t record_stride = 1;
    std::uint64_t seed = 0; // carried for provenance; full-batch GD itself is deterministic
    bool snapshot_params = false;
    double zero_tol = default_zero_tol;
    double kink_slope = 0.0;
};

struct TrajectoryRecord {
    std::size_t step = 0;
    double loss = 0.0;
    Vector charges;
    std::optional<SignVector> sign;
    double max_charge_drift = 0.0;
    std::optional<Params> params;
};

/// Thrown when the loss or a parameter becomes non-finite. Carries every record
/// collected before the failure (the last one is the last valid state).
class DivergenceError : public DomainError {
public:
    DivergenceError(std::size_t step, std::vector<TrajectoryRecord> records)
        : DomainError("training diverged at step " + std::to_string(step)),
          step_(step),
          records_(std::move(records)) {}

    std::size_t step() const noexcept { return step_; }
    const std::vector<TrajectoryRecord>& records() const noexcept { return records_; }

private:
    std::size_t step_;
    std::vector<TrajectoryRecord> records_;
};

/// max_k |c_k - c0_k| / max(|c0_k|, zero_tol)
inline double max_relative_drift(const Vector& c0, const Vector& c, double zero_tol) {
    double drift = 0.0;
    for (std::size_t k = 0; k < c0.size(); ++k)
        drift = std::max(drift, std::abs(c[k] - c0[k]) / std::max(std::abs(c0[k]), zero_tol));
    return drift;
}

namespace detail {

inline bool all_finite(const Params& p) {
    auto ok = [](std::span<const double> xs) {
        return std::all_of(xs.begin(), xs.end(), [](double v) { return std::isfinite(v); });
    };
    return ok(p.w1.data()) && ok(p.w2.data()) && (!p.b1 || ok(*p.b1)) && (!p.b2 || ok(*p.b2));
}

/// Output-weight signs at fixed neuron indices (+1 for w >= 0).
inline SignVector signs_at(const Params& p, const std::vector<std::size_t>& indices) {
    SignVector s;
    for (std::size_t k : indices) s.s.push_back(p.w2(0, k) >= 0.0 ? 1 : -1);
    return s;
}

} // namespace detail

/// Runs cfg.steps full-batch GD steps. Records step 0, every record_stride-th step and the
/// final step. Signs are tracked when e = 1 and some charge is negative at initialization.
inline std::vector<TrajectoryRecord> train(const Params& theta0, const Dataset& data,
                                           const TrainConfig& cfg) {
    if (!(cfg.learning_rate > 0.0)) throw DomainError("learning rate must be positive");
    if (cfg.record_stride == 0) throw DomainError("record stride must be >= 1");
    detail::check_loss_inputs(theta0, data, cfg.loss_kind);

    const auto sig0 = signature(theta0, cfg.zero_tol);
    const bool track_sign = theta0.output_dim() == 1 && sig0.l_minus > 0;

    std::vector<TrajectoryRecord> records;
    Params theta = theta0;
    auto record = [&](std::size_t step, double current_loss) {
        TrajectoryRecord r;
        r.step = step;
        r.loss = current_loss;
        r.charges = charges(theta);
        r.max_charge_drift = max_relative_drift(sig0.c, r.charges, cfg.zero_tol);
        if (track_sign) r.sign = detail::signs_at(theta, sig0.neg_indices);
        if (cfg.snapshot_params) r.params = theta;
        records.push_back(std::move(r));
    };

    record(0, loss(theta, data, cfg.loss_kind));
    for (std::size_t step = 1; step <= cfg.steps; ++step) {
        const Params g = grad(theta, data, cfg.loss_kind, cfg.kink_slope);
        Params next = axpy(-cfg.learning_rate, g, theta);
        if (!detail::all_finite(next)) throw DivergenceError(step, std::move(records));
        theta = std::move(next);
        const bool due = step % cfg.record_stride == 0 || step == cfg.steps;
        if (!due) continue;
        const double current = loss(theta, data, cfg.loss_kind);
        if (!std::isfinite(current)) throw DivergenceError(step, std::move(records));
        record(step, current);
    }
    return records;
}

} // namespace qflow
