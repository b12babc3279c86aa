#pragma once

// Rescaling and permutation actions on the hidden neurons. Both leave the network
// function unchanged; rescaling moves a point between invariant sets H(c), and
// permutation relabels neurons (and hence charges).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "core_net.hpp"
#include "random.hpp"
#include "topology.hpp"

namespace qflow {

/// Positive per-neuron scale factors alpha.
class Rescaling {
public:
    explicit Rescaling(Vector alpha) : alpha_(std::move(alpha)) {
        for (std::size_t k = 0; k < alpha_.size(); ++k)
            if (!(alpha_[k] > 0.0) || !std::isfinite(alpha_[k]))
                throw DomainError("rescaling factor " + std::to_string(k + 1) +
                                  " must be positive and finite");
    }

    static Rescaling identity(std::size_t l) { return Rescaling(Vector(l, 1.0)); }

    std::size_t size() const noexcept { return alpha_.size(); }
    double operator[](std::size_t k) const { return alpha_[k]; }
    const Vector& values() const noexcept { return alpha_; }

    Rescaling inverse() const {
        Vector inv(alpha_.size());
        for (std::size_t k = 0; k < inv.size(); ++k) inv[k] = 1.0 / alpha_[k];
        return Rescaling(std::move(inv));
    }

    /// Coordinate-wise product (composition of the two actions).
    Rescaling operator*(const Rescaling& other) const {
        if (other.size() != size()) throw ShapeError("rescaling sizes differ");
        Vector out(size());
        for (std::size_t k = 0; k < out.size(); ++k) out[k] = alpha_[k] * other.alpha_[k];
        return Rescaling(std::move(out));
    }

private:
    Vector alpha_;
};

/// Bijection on {0..l-1} stored as an image table. Acting on parameters, new neuron i
/// takes the weights of old neuron image[i] (the row permutation R_pi).
class Permutation {
public:
    explicit Permutation(std::vector<std::size_t> image) : image_(std::move(image)) {
        std::vector<bool> seen(image_.size(), false);
        for (std::size_t v : image_) {
            if (v >= image_.size() || seen[v]) throw DomainError("image table is not a permutation");
            seen[v] = true;
        }
    }

    static Permutation identity(std::size_t l) {
        std::vector<std::size_t> id(l);
        std::iota(id.begin(), id.end(), std::size_t{0});
        return Permutation(std::move(id));
    }

    /// Uniformly random permutation (Fisher-Yates).
    static Permutation random(std::size_t l, Rng& rng) {
        auto p = identity(l).image_;
        for (std::size_t i = l; i > 1; --i) std::swap(p[i - 1], p[rng.below(i)]);
        return Permutation(std::move(p));
    }

    std::size_t size() const noexcept { return image_.size(); }
    std::size_t operator()(std::size_t i) const { return image_.at(i); }
    const std::vector<std::size_t>& image() const noexcept { return image_; }

    Permutation inverse() const {
        std::vector<std::size_t> inv(image_.size());
        for (std::size_t i = 0; i < image_.size(); ++i) inv[image_[i]] = i;
        return Permutation(std::move(inv));
    }

    /// Permutation whose action equals permute(permute(theta, *this), next).
    Permutation then(const Permutation& next) const {
        if (next.size() != size()) throw ShapeError("permutation sizes differ");
        std::vector<std::size_t> out(size());
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = image_[next.image_[i]];
        return Permutation(std::move(out));
    }

    bool operator==(const Permutation&) const = default;

private:
    std::vector<std::size_t> image_;
};

/// T_alpha: row k of w1 (and b1_k) times alpha_k, column k of w2 divided by alpha_k.
inline Params rescale(const Params& theta, const Rescaling& alpha) {
    if (alpha.size() != theta.hidden()) throw ShapeError("rescaling has wrong length");
    Params out = theta;
    for (std::size_t k = 0; k < theta.hidden(); ++k) {
        for (double& w : out.w1.row(k)) w *= alpha[k];
        if (out.b1) (*out.b1)[k] *= alpha[k];
        for (std::size_t j = 0; j < out.output_dim(); ++j) out.w2(j, k) /= alpha[k];
    }
    return out;
}

/// P_pi: hidden neuron i of the result is neuron pi(i) of theta.
inline Params permute(const Params& theta, const Permutation& pi) {
    if (pi.size() != theta.hidden()) throw ShapeError("permutation has wrong size");
    Params out = theta;
    for (std::size_t i = 0; i < theta.hidden(); ++i) {
        const std::size_t src = pi(i);
        std::copy(theta.w1.row(src).begin(), theta.w1.row(src).end(), out.w1.row(i).begin());
        if (out.b1) (*out.b1)[i] = (*theta.b1)[src];
        for (std::size_t j = 0; j < out.output_dim(); ++j) out.w2(j, i) = theta.w2(j, src);
    }
    return out;
}

/// Returns alpha~ with rescale(permute(theta, pi), alpha) == permute(rescale(theta, alpha~), pi),
/// namely alpha~_j = alpha_{pi^-1(j)}.
inline Rescaling interchange_rescaling(const Rescaling& alpha, const Permutation& pi) {
    if (alpha.size() != pi.size()) throw ShapeError("rescaling and permutation sizes differ");
    const Permutation inv = pi.inverse();
    Vector out(alpha.size());
    for (std::size_t j = 0; j < out.size(); ++j) out[j] = alpha[inv(j)];
    return Rescaling(std::move(out));
}

/// Unique alpha > 0 with A alpha^4 - c alpha^2 - C = 0, where A = |in|^2 and C = |out|^2
/// of neuron `neuron` (used only in error messages).
inline double rescaling_factor(double A, double C, double c_target, std::size_t neuron = 0) {
    const std::string who = "neuron " + std::to_string(neuron + 1);
    if (A > 0.0 && C > 0.0) {
        const double root = std::sqrt(c_target * c_target + 4.0 * A * C);
        // alpha^2 = (c + root) / 2A; for c < 0 use the cancellation-free form 2C / (root - c).
        const double alpha_sq = c_target >= 0.0 ? (c_target + root) / (2.0 * A)
                                                : (2.0 * C) / (root - c_target);
        return std::sqrt(alpha_sq);
    }
    if (A == 0.0 && C == 0.0) {
        if (c_target == 0.0) return 1.0;
        throw InfeasibleRescalingError(
            neuron, RescaleFailure::degenerate_neuron,
            who + ": all weights are zero, so it only lies on the charge-0 quadric");
    }
    if (A == 0.0) {
        if (c_target < 0.0) return std::sqrt(C) / std::sqrt(-c_target);
        throw InfeasibleRescalingError(
            neuron, RescaleFailure::zero_input_needs_negative,
            who + ": zero input weights can only be rescaled to a negative charge");
    }
    if (c_target > 0.0) return std::sqrt(c_target) / std::sqrt(A);
    throw InfeasibleRescalingError(
        neuron, RescaleFailure::zero_output_needs_positive,
        who + ": zero output weights can only be rescaled to a positive charge");
}

/// Rescales theta so that its charges equal c_target; the result computes the same function.
inline std::pair<Params, Rescaling> rescale_to_charges(const Params& theta, const Vector& c_target) {
    validate(theta);
    if (c_target.size() != theta.hidden()) throw ShapeError("target charges have wrong length");
    Vector alpha(theta.hidden());
    for (std::size_t k = 0; k < alpha.size(); ++k)
        alpha[k] = rescaling_factor(input_norm_sq(theta, k), output_norm_sq(theta, k), c_target[k], k);
    Rescaling r(std::move(alpha));
    return {rescale(theta, r), r};
}

/// Permutation of the negative-charge neurons that turns sign vector `from` into `to`.
/// Positions already matching stay fixed; remaining +1 -> -1 and -1 -> +1 mismatches are
/// paired up in index order and swapped. Returns the permutation on 0..l-1.
inline Permutation sign_matching_permutation(const SignVector& from, const SignVector& to,
                                             const std::vector<std::size_t>& neg_indices,
                                             std::size_t l) {
    std::vector<std::size_t> need_minus, need_plus;
    for (std::size_t i = 0; i < from.size(); ++i) {
        if (from.s[i] == to.s[i]) continue;
        (from.s[i] > 0 ? need_minus : need_plus).push_back(i);
    }
    auto image = Permutation::identity(l).image();
    for (std::size_t j = 0; j < need_minus.size(); ++j)
        std::swap(image[neg_indices[need_minus[j]]], image[neg_indices[need_plus[j]]]);
    return Permutation(std::move(image));
}

/// Moves theta, within its effective component, to the connected component labelled s_target:
/// a permutation of negative-charge neurons followed by the rescaling that restores the
/// original charges. Requires e = 1, d > 1 and sum(s_target) == sum(s(theta)).
inline Params map_to_sign(const Params& theta, const SignVector& s_target,
                          double zero_tol = default_zero_tol) {
    validate(theta);
    detail::require_scalar_output_regime(theta.input_block_dim(), theta.output_dim());
    const auto sig = signature(theta, zero_tol);
    if (sig.l_minus == 0)
        throw PreconditionError("no negative-charge neurons: H(c) is connected");
    if (s_target.size() != sig.l_minus)
        throw ShapeError("target sign vector must have one entry per negative-charge neuron");
    for (int v : s_target.s)
        if (v != 1 && v != -1) throw DomainError("sign entries must be +1 or -1");
    const SignVector s = sign_vector(theta, sig);
    if (!same_effective(s, s_target))
        throw NotReachableError("sign sums differ (" + std::to_string(s.sum()) + " vs " +
                                std::to_string(s_target.sum()) +
                                "): target component is in another effective component");
    if (s == s_target) return theta;

    const Permutation pi = sign_matching_permutation(s, s_target, sig.neg_indices, theta.hidden());
    const Params moved = permute(theta, pi);
    Vector alpha(theta.hidden(), 1.0);
    for (std::size_t k = 0; k < alpha.size(); ++k)
        if (pi(k) != k)
            alpha[k] = rescaling_factor(input_norm_sq(moved, k), output_norm_sq(moved, k), sig.c[k], k);
    return rescale(moved, Rescaling(std::move(alpha)));
}

/// Numerical check that a and b compute the same function on n_samples standard-normal inputs:
/// max |f_a(x) - f_b(x)| <= tol (1 + |f_a(x)|).
inline bool observationally_equivalent(const Params& a, const Params& b, std::size_t n_samples,
                                       std::uint64_t seed, double tol) {
    if (a.input_dim() != b.input_dim() || a.output_dim() != b.output_dim())
        throw ShapeError("networks have different input/output dimensions");
    Rng rng(seed, Stream::probe);
    Vector x(a.input_dim());
    for (std::size_t n = 0; n < n_samples; ++n) {
        for (double& v : x) v = rng.normal();
        const Vector fa = forward(a, x);
        const Vector fb = forward(b, x);
        double diff = 0.0, mag = 0.0;
        for (std::size_t j = 0; j < fa.size(); ++j) {
            diff += (fa[j] - fb[j]) * (fa[j] - fb[j]);
            mag += fa[j] * fa[j];
        }
        if (std::sqrt(diff) > tol * (1.0 + std::sqrt(mag))) return false;
    }
    return true;
}

} // namespace qflow
