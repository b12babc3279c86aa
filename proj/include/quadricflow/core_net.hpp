#pragma once

// Two-layer homogeneous network f(x) = W2 sigma(W1 x [+ b1]) [+ b2], its split
// into per-neuron parameter blocks and the per-neuron pseudo-Euclidean form
// <theta, eta>_k = <in_k, in'_k> [+ b1_k b1'_k] - <out_k, out'_k>.

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"

namespace qflow {

/// Dense row-major matrix of doubles.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    /// Builds from nested rows; all rows must have equal length.
    static Matrix from_rows(const std::vector<std::vector<double>>& rows) {
        const std::size_t r = rows.size();
        const std::size_t c = r == 0 ? 0 : rows.front().size();
        Matrix m(r, c);
        for (std::size_t i = 0; i < r; ++i) {
            if (rows[i].size() != c) throw ShapeError("ragged matrix rows");
            for (std::size_t j = 0; j < c; ++j) m(i, j) = rows[i][j];
        }
        return m;
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
    std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

    std::span<double> data() noexcept { return data_; }
    std::span<const double> data() const noexcept { return data_; }

    bool operator==(const Matrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

using Vector = std::vector<double>;

struct Activation {
    enum class Kind { relu, leaky_relu };

    Kind kind = Kind::relu;
    double gamma = 0.0; // negative-side slope, only read for leaky_relu

    static Activation relu() { return {}; }
    static Activation leaky_relu(double gamma) {
        if (!(gamma >= 0.0 && gamma <= 1.0))
            throw DomainError("leaky_relu slope must lie in [0, 1]");
        return {Kind::leaky_relu, gamma};
    }

    double negative_slope() const noexcept { return kind == Kind::leaky_relu ? gamma : 0.0; }

    double operator()(double z) const noexcept { return z > 0.0 ? z : negative_slope() * z; }

    /// Derivative with the selection sigma'(0) = kink_slope (0 unless overridden).
    double derivative(double z, double kink_slope = 0.0) const noexcept {
        if (z > 0.0) return 1.0;
        if (z < 0.0) return negative_slope();
        return kink_slope;
    }

    bool operator==(const Activation&) const = default;
};

/// Parameters theta of a two-layer network. w1 is (l x d), w2 is (e x l).
/// Biases are all-or-nothing: b1 (length l) and b2 (length e) are both set or both absent.
struct Params {
    Matrix w1;
    Matrix w2;
    std::optional<Vector> b1;
    std::optional<Vector> b2;
    Activation activation;

    std::size_t input_dim() const noexcept { return w1.cols(); }
    std::size_t hidden() const noexcept { return w1.rows(); }
    std::size_t output_dim() const noexcept { return w2.rows(); }
    bool with_bias() const noexcept { return b1.has_value(); }

    /// Dimension of a neuron's input block (weights plus bias).
    std::size_t input_block_dim() const noexcept { return input_dim() + (with_bias() ? 1 : 0); }

    bool operator==(const Params&) const = default;
};

/// Throws ShapeError/DomainError if shapes, bias mode or finiteness are violated.
inline void validate(const Params& p) {
    const std::size_t l = p.w1.rows(), d = p.w1.cols(), e = p.w2.rows();
    if (l == 0 || d == 0 || e == 0) throw ShapeError("network dimensions must be >= 1");
    if (p.w2.cols() != l) throw ShapeError("w2 must have one column per hidden neuron");
    if (p.b1.has_value() != p.b2.has_value()) throw ShapeError("b1 and b2 must be given together");
    if (p.b1 && p.b1->size() != l) throw ShapeError("b1 must have length l");
    if (p.b2 && p.b2->size() != e) throw ShapeError("b2 must have length e");
    auto finite = [](std::span<const double> xs) {
        for (double x : xs)
            if (!std::isfinite(x)) return false;
        return true;
    };
    if (!finite(p.w1.data()) || !finite(p.w2.data()) || (p.b1 && !finite(*p.b1)) ||
        (p.b2 && !finite(*p.b2)))
        throw DomainError("parameters must be finite");
    if (p.activation.kind == Activation::Kind::leaky_relu &&
        !(p.activation.gamma >= 0.0 && p.activation.gamma <= 1.0))
        throw DomainError("leaky_relu slope must lie in [0, 1]");
}

/// Parameters owned by hidden neuron k.
struct NeuronSlice {
    std::size_t index = 0;
    Vector in_weights;
    std::optional<double> in_bias;
    Vector out_weights;
};

inline NeuronSlice neuron_slice(const Params& p, std::size_t k) {
    if (k >= p.hidden()) throw ShapeError("neuron index out of range");
    NeuronSlice s;
    s.index = k;
    s.in_weights.assign(p.w1.row(k).begin(), p.w1.row(k).end());
    if (p.b1) s.in_bias = (*p.b1)[k];
    s.out_weights.resize(p.output_dim());
    for (std::size_t j = 0; j < p.output_dim(); ++j) s.out_weights[j] = p.w2(j, k);
    return s;
}

inline Params zeros_like(const Params& p) {
    Params z;
    z.w1 = Matrix(p.w1.rows(), p.w1.cols());
    z.w2 = Matrix(p.w2.rows(), p.w2.cols());
    if (p.b1) z.b1 = Vector(p.b1->size(), 0.0);
    if (p.b2) z.b2 = Vector(p.b2->size(), 0.0);
    z.activation = p.activation;
    return z;
}

namespace detail {

inline void check_input(const Params& p, std::span<const double> x) {
    if (x.size() != p.input_dim())
        throw ShapeError("input has length " + std::to_string(x.size()) + ", expected " +
                         std::to_string(p.input_dim()));
}

inline void check_same_layout(const Params& a, const Params& b) {
    if (a.w1.rows() != b.w1.rows() || a.w1.cols() != b.w1.cols() || a.w2.rows() != b.w2.rows() ||
        a.w2.cols() != b.w2.cols())
        throw ShapeError("parameter shapes differ");
    if (a.with_bias() != b.with_bias()) throw ShapeError("bias modes differ");
}

inline double pre_activation(const Params& p, std::size_t k, std::span<const double> x) {
    double z = 0.0;
    const auto w = p.w1.row(k);
    for (std::size_t i = 0; i < w.size(); ++i) z += w[i] * x[i];
    if (p.b1) z += (*p.b1)[k];
    return z;
}

} // namespace detail

/// Hidden activations sigma(W1 x [+ b1]).
inline Vector hidden_activations(const Params& p, std::span<const double> x) {
    detail::check_input(p, x);
    Vector h(p.hidden());
    for (std::size_t k = 0; k < h.size(); ++k) h[k] = p.activation(detail::pre_activation(p, k, x));
    return h;
}

/// Network output. Each output accumulates w2(j,k) h_k for k = 0..l-1 starting from 0.0,
/// then adds b2_j; neuron_forward contributions summed in index order reproduce it exactly.
inline Vector forward(const Params& p, std::span<const double> x) {
    const Vector h = hidden_activations(p, x);
    Vector out(p.output_dim(), 0.0);
    for (std::size_t j = 0; j < out.size(); ++j) {
        double acc = 0.0;
        for (std::size_t k = 0; k < h.size(); ++k) acc += p.w2(j, k) * h[k];
        out[j] = p.b2 ? acc + (*p.b2)[j] : acc;
    }
    return out;
}

/// Output of hidden neuron k alone. Only defined without biases: b2 belongs to no neuron.
inline Vector neuron_forward(const Params& p, std::size_t k, std::span<const double> x) {
    if (p.with_bias())
        throw UnsupportedModeError("per-neuron output is undefined in bias mode (b2 is shared)");
    if (k >= p.hidden()) throw ShapeError("neuron index out of range");
    detail::check_input(p, x);
    const double h = p.activation(detail::pre_activation(p, k, x));
    Vector out(p.output_dim());
    for (std::size_t j = 0; j < out.size(); ++j) out[j] = p.w2(j, k) * h;
    return out;
}

/// <theta, eta>_k; in bias mode the b1 entries join the input block.
inline double bilinear(const Params& theta, const Params& eta, std::size_t k) {
    detail::check_same_layout(theta, eta);
    if (k >= theta.hidden()) throw ShapeError("neuron index out of range");
    double in = 0.0;
    const auto a = theta.w1.row(k), b = eta.w1.row(k);
    for (std::size_t i = 0; i < a.size(); ++i) in += a[i] * b[i];
    if (theta.b1) in += (*theta.b1)[k] * (*eta.b1)[k];
    double out = 0.0;
    for (std::size_t j = 0; j < theta.output_dim(); ++j) out += theta.w2(j, k) * eta.w2(j, k);
    return in - out;
}

/// Squared norm of neuron k's input block, ||w1[k,:]||^2 (+ b1_k^2).
inline double input_norm_sq(const Params& p, std::size_t k) {
    double a = 0.0;
    for (double w : p.w1.row(k)) a += w * w;
    if (p.b1) a += (*p.b1)[k] * (*p.b1)[k];
    return a;
}

/// Squared norm of neuron k's output weights ||w2[:,k]||^2.
inline double output_norm_sq(const Params& p, std::size_t k) {
    double c = 0.0;
    for (std::size_t j = 0; j < p.output_dim(); ++j) c += p.w2(j, k) * p.w2(j, k);
    return c;
}

/// Conserved charges c_k = <theta, theta>_k.
inline Vector charges(const Params& theta) {
    Vector c(theta.hidden());
    for (std::size_t k = 0; k < c.size(); ++k) c[k] = bilinear(theta, theta, k);
    return c;
}

/// Squared Euclidean norm of all parameters.
inline double norm_sq(const Params& p) {
    double s = 0.0;
    for (double x : p.w1.data()) s += x * x;
    for (double x : p.w2.data()) s += x * x;
    if (p.b1)
        for (double x : *p.b1) s += x * x;
    if (p.b2)
        for (double x : *p.b2) s += x * x;
    return s;
}

/// a*x + y, coordinate-wise over all parameter tensors.
inline Params axpy(double a, const Params& x, const Params& y) {
    detail::check_same_layout(x, y);
    Params r = y;
    auto apply = [a](std::span<const double> src, std::span<double> dst) {
        for (std::size_t i = 0; i < src.size(); ++i) dst[i] += a * src[i];
    };
    apply(x.w1.data(), r.w1.data());
    apply(x.w2.data(), r.w2.data());
    if (x.b1) apply(*x.b1, *r.b1);
    if (x.b2) apply(*x.b2, *r.b2);
    return r;
}

} // namespace qflow
