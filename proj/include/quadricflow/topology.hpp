#pragma once

// Topology of the invariant set H(c) = { theta : <theta,theta>_k = c_k for all k }.
//
// H(c) is a product of one quadric per neuron. A neuron with c_k > 0 contributes
// R^e x S^(din-1) (din = d, or d + 1 with biases), c_k < 0 contributes
// R^din x S^(e-1), and c_k = 0 a contractible cone. Betti numbers follow from
// multiplying the factors' Poincare polynomials.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "core_net.hpp"

namespace qflow {

inline constexpr double default_zero_tol = 1e-9;

/// Charges of theta, the shape of the network and the sign classification of each neuron.
struct InvariantSignature {
    Vector c;
    std::size_t d = 0;
    std::size_t e = 0;
    bool with_bias = false;
    double zero_tol = default_zero_tol;
    std::size_t l_plus = 0;
    std::size_t l_minus = 0;
    std::size_t l_zero = 0;
    std::vector<std::size_t> neg_indices; // 0-based, increasing

    std::size_t hidden() const noexcept { return c.size(); }
    std::size_t input_block_dim() const noexcept { return d + (with_bias ? 1 : 0); }

    /// Classifies an explicit charge vector.
    static InvariantSignature classify(Vector c, std::size_t d, std::size_t e, bool with_bias,
                                       double zero_tol = default_zero_tol) {
        if (!(zero_tol >= 0.0)) throw DomainError("zero_tol must be >= 0");
        InvariantSignature s;
        s.c = std::move(c);
        s.d = d;
        s.e = e;
        s.with_bias = with_bias;
        s.zero_tol = zero_tol;
        for (std::size_t k = 0; k < s.c.size(); ++k) {
            if (s.c[k] > zero_tol) {
                ++s.l_plus;
            } else if (s.c[k] < -zero_tol) {
                ++s.l_minus;
                s.neg_indices.push_back(k);
            } else {
                ++s.l_zero;
            }
        }
        return s;
    }

    /// Synthetic signature with the given counts (charges +1, -1, 0 in that order).
    static InvariantSignature from_counts(std::size_t d, std::size_t e, std::size_t l_plus,
                                          std::size_t l_minus, std::size_t l_zero = 0,
                                          bool with_bias = false) {
        Vector c;
        c.insert(c.end(), l_plus, 1.0);
        c.insert(c.end(), l_minus, -1.0);
        c.insert(c.end(), l_zero, 0.0);
        return classify(std::move(c), d, e, with_bias);
    }
};

inline InvariantSignature signature(const Params& theta, double zero_tol = default_zero_tol) {
    validate(theta);
    return InvariantSignature::classify(charges(theta), theta.input_dim(), theta.output_dim(),
                                        theta.with_bias(), zero_tol);
}

/// Poincare polynomial (1 + x^(din-1))^l_plus (1 + x^(e-1))^l_minus, expanded with
/// exact integer arithmetic; index = degree. Zero-charge neurons contribute 1.
inline std::vector<std::uint64_t> poincare_polynomial(const InvariantSignature& sig) {
    if (sig.l_plus + sig.l_minus > 63)
        throw DomainError("Betti numbers exceed 64-bit range (l_plus + l_minus > 63)");
    std::vector<std::uint64_t> poly{1};
    auto multiply = [&poly](std::size_t degree) { // poly *= (1 + x^degree)
        std::vector<std::uint64_t> next(poly.size() + degree, 0);
        for (std::size_t i = 0; i < poly.size(); ++i) {
            next[i] += poly[i];
            next[i + degree] += poly[i];
        }
        poly = std::move(next);
    };
    for (std::size_t i = 0; i < sig.l_plus; ++i) multiply(sig.input_block_dim() - 1);
    for (std::size_t i = 0; i < sig.l_minus; ++i) multiply(sig.e - 1);
    return poly;
}

/// Closed-form number of connected components:
/// 1 if d,e > 1; 2^l_plus if d = 1 < e; 2^l_minus if d > 1 = e; 2^(l_plus + l_minus) if d = e = 1.
/// With biases the input block has dimension d + 1 > 1, leaving 1 (e > 1) or 2^l_minus (e = 1).
inline std::uint64_t connected_components_closed_form(const InvariantSignature& sig) {
    std::size_t exponent = 0;
    if (sig.input_block_dim() == 1) exponent += sig.l_plus;
    if (sig.e == 1) exponent += sig.l_minus;
    if (exponent > 63) throw DomainError("component count exceeds 64-bit range");
    return std::uint64_t{1} << exponent;
}

/// i-th Betti number of H(c).
inline std::uint64_t betti(const InvariantSignature& sig, std::size_t i) {
    const auto poly = poincare_polynomial(sig);
    if (poly.front() != connected_components_closed_form(sig))
        throw std::logic_error("Poincare polynomial disagrees with closed-form component count");
    return i < poly.size() ? poly[i] : 0;
}

/// Number of effective components (components modulo rescalings and permutations).
/// 1 whenever H(c) is connected, 1 + l_minus for a scalar output with din > 1.
/// No count is known when din = 1 and H(c) is disconnected.
inline std::size_t effective_component_count(const InvariantSignature& sig) {
    if (connected_components_closed_form(sig) == 1) return 1;
    if (sig.input_block_dim() == 1)
        throw UnsupportedRegimeError("effective components are undefined for a single input (d = 1)");
    // here e == 1 and l_minus >= 1
    return 1 + sig.l_minus;
}

/// Signs (+1/-1) of the output weights of the negative-charge neurons, in neg_indices order.
struct SignVector {
    std::vector<int> s;

    std::size_t size() const noexcept { return s.size(); }
    int sum() const noexcept {
        int total = 0;
        for (int v : s) total += v;
        return total;
    }
    bool operator==(const SignVector&) const = default;
};

namespace detail {

inline void require_scalar_output_regime(std::size_t input_block_dim, std::size_t e) {
    if (e != 1) throw PreconditionError("component labels require a scalar output (e = 1)");
    if (input_block_dim < 2) throw PreconditionError("component labels require d > 1");
}

} // namespace detail

inline SignVector sign_vector(const Params& theta, const InvariantSignature& sig) {
    detail::require_scalar_output_regime(theta.input_block_dim(), theta.output_dim());
    if (sig.hidden() != theta.hidden() || sig.e != theta.output_dim() || sig.d != theta.input_dim())
        throw ShapeError("signature does not describe these parameters");
    if (sig.l_minus == 0) throw PreconditionError("sign vector needs at least one negative charge");
    SignVector out;
    out.s.reserve(sig.l_minus);
    for (std::size_t k : sig.neg_indices) {
        const double w = theta.w2(0, k);
        if (std::abs(w) <= sig.zero_tol)
            throw InconsistencyError("negative-charge neuron " + std::to_string(k + 1) +
                                     " has a vanishing output weight; signature does not match");
        out.s.push_back(w > 0.0 ? 1 : -1);
    }
    return out;
}

inline SignVector sign_vector(const Params& theta, double zero_tol = default_zero_tol) {
    return sign_vector(theta, signature(theta, zero_tol));
}

namespace detail {

inline void require_same_invariant_set(const Vector& ca, const Vector& cb, double zero_tol) {
    if (ca.size() != cb.size()) throw ShapeError("different numbers of hidden neurons");
    for (std::size_t k = 0; k < ca.size(); ++k)
        if (std::abs(ca[k] - cb[k]) > zero_tol)
            throw DifferentInvariantSetError("charge of neuron " + std::to_string(k + 1) +
                                             " differs: " + std::to_string(ca[k]) + " vs " +
                                             std::to_string(cb[k]));
}

} // namespace detail

/// True iff a and b lie in the same connected component of their common H(c).
inline bool same_component(const Params& a, const Params& b, double zero_tol = default_zero_tol) {
    validate(a);
    validate(b);
    detail::check_same_layout(a, b);
    detail::require_scalar_output_regime(a.input_block_dim(), a.output_dim());
    const auto sa = signature(a, zero_tol);
    detail::require_same_invariant_set(sa.c, charges(b), zero_tol);
    if (sa.l_minus == 0) return true;
    return sign_vector(a, sa) == sign_vector(b, sa);
}

/// True iff the two components lie in the same effective component (equal sign sums).
inline bool same_effective(const SignVector& s, const SignVector& s_prime) {
    if (s.size() != s_prime.size()) throw ShapeError("sign vectors have different lengths");
    return s.sum() == s_prime.sum();
}

namespace detail {

inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline void normalize(Vector& v) {
    const double n = std::sqrt(dot(v, v));
    for (double& x : v) x /= n;
}

/// Great-circle interpolation between unit vectors that are not antipodal.
inline Vector slerp(const Vector& a, const Vector& b, double t) {
    const double cosang = std::clamp(dot(a, b), -1.0, 1.0);
    Vector out(a.size());
    if (cosang > 1.0 - 1e-12) {
        for (std::size_t i = 0; i < a.size(); ++i) out[i] = (1.0 - t) * a[i] + t * b[i];
    } else {
        const double omega = std::acos(cosang);
        const double so = std::sin(omega);
        const double wa = std::sin((1.0 - t) * omega) / so;
        const double wb = std::sin(t * omega) / so;
        for (std::size_t i = 0; i < a.size(); ++i) out[i] = wa * a[i] + wb * b[i];
    }
    normalize(out);
    return out;
}

/// Unit vector orthogonal to unit vector a (needs a.size() >= 2).
inline Vector orthogonal_to(const Vector& a) {
    std::size_t axis = 0;
    for (std::size_t i = 1; i < a.size(); ++i)
        if (std::abs(a[i]) < std::abs(a[axis])) axis = i;
    Vector p(a.size(), 0.0);
    p[axis] = 1.0;
    const double proj = a[axis];
    for (std::size_t i = 0; i < a.size(); ++i) p[i] -= proj * a[i];
    normalize(p);
    return p;
}

/// Path on the unit sphere from a to b; antipodal pairs detour through an orthogonal direction.
inline Vector sphere_path(const Vector& a, const Vector& b, double t) {
    if (dot(a, b) > -1.0 + 1e-9) return slerp(a, b, t);
    const Vector mid = orthogonal_to(a);
    return t <= 0.5 ? slerp(a, mid, 2.0 * t) : slerp(mid, b, 2.0 * t - 1.0);
}

inline Vector input_block(const Params& p, std::size_t k) {
    Vector v(p.w1.row(k).begin(), p.w1.row(k).end());
    if (p.b1) v.push_back((*p.b1)[k]);
    return v;
}

inline void set_input_block(Params& p, std::size_t k, const Vector& v) {
    auto row = p.w1.row(k);
    for (std::size_t i = 0; i < row.size(); ++i) row[i] = v[i];
    if (p.b1) (*p.b1)[k] = v[row.size()];
}

} // namespace detail

/// Continuous path a -> b inside H(c), sampled at t = i / n_steps, i = 0..n_steps.
///
/// Per neuron, with charge target c(t) interpolated linearly between the endpoint charges:
///  - c < 0: shrink the input block to 0 while the output keeps its sign and magnitude
///    sqrt(-c + |in|^2), then grow into b's input block;
///  - c = 0: contract a's block radially to 0, then expand to b's block;
///  - c > 0: great circle on the input direction, straight line on the output weights,
///    input radius sqrt(c + |out|^2).
/// b1 joins the input block and b2 moves on a straight line in bias mode.
inline std::vector<Params> connecting_path(const Params& a, const Params& b, std::size_t n_steps,
                                           double zero_tol = default_zero_tol) {
    validate(a);
    validate(b);
    detail::check_same_layout(a, b);
    if (a.activation != b.activation) throw ShapeError("activations differ");
    detail::require_scalar_output_regime(a.input_block_dim(), a.output_dim());
    const auto sig = signature(a, zero_tol);
    const Vector cb = charges(b);
    detail::require_same_invariant_set(sig.c, cb, zero_tol);
    if (sig.l_minus > 0 && sign_vector(a, sig) != sign_vector(b, sig))
        throw NoPathError("endpoints have different sign vectors and lie in different components");
    if (a == b) return std::vector<Params>(n_steps + 1, a);
    if (n_steps == 0) throw DomainError("a path between distinct points needs n_steps >= 1");

    std::vector<Params> path;
    path.reserve(n_steps + 1);
    path.push_back(a);
    const std::size_t l = a.hidden();

    // Per-neuron data that does not depend on t.
    std::vector<Vector> dir_a(l), dir_b(l);
    for (std::size_t k = 0; k < l; ++k) {
        if (sig.c[k] > zero_tol) {
            dir_a[k] = detail::input_block(a, k);
            dir_b[k] = detail::input_block(b, k);
            detail::normalize(dir_a[k]);
            detail::normalize(dir_b[k]);
        }
    }

    for (std::size_t step = 1; step < n_steps; ++step) {
        const double t = static_cast<double>(step) / static_cast<double>(n_steps);
        Params p = a;
        for (std::size_t k = 0; k < l; ++k) {
            const double ck = (1.0 - t) * sig.c[k] + t * cb[k];
            Vector in;
            if (sig.c[k] < -zero_tol) {
                const bool first = t <= 0.5;
                in = detail::input_block(first ? a : b, k);
                const double scale = first ? 1.0 - 2.0 * t : 2.0 * t - 1.0;
                for (double& x : in) x *= scale;
                const double sign = a.w2(0, k) > 0.0 ? 1.0 : -1.0;
                p.w2(0, k) = sign * std::sqrt(-ck + detail::dot(in, in));
            } else if (sig.c[k] > zero_tol) {
                const double out = (1.0 - t) * a.w2(0, k) + t * b.w2(0, k);
                p.w2(0, k) = out;
                in = detail::sphere_path(dir_a[k], dir_b[k], t);
                const double radius = std::sqrt(ck + out * out);
                for (double& x : in) x *= radius;
            } else {
                const bool first = t <= 0.5;
                const Params& src = first ? a : b;
                const double scale = first ? 1.0 - 2.0 * t : 2.0 * t - 1.0;
                in = detail::input_block(src, k);
                for (double& x : in) x *= scale;
                p.w2(0, k) = scale * src.w2(0, k);
            }
            detail::set_input_block(p, k, in);
        }
        if (p.b2)
            for (std::size_t j = 0; j < p.b2->size(); ++j)
                (*p.b2)[j] = (1.0 - t) * (*a.b2)[j] + t * (*b.b2)[j];
        path.push_back(std::move(p));
    }
    path.push_back(b);
    return path;
}

} // namespace qflow
