#pragma once

// Initialization schemes and the probability that an i.i.d. normal initialization of a
// scalar-output network contains a pathological neuron (|w1_k|^2 < w2_k^2):
//
//   P[obstruction] = 1 - F_{1,d}(d sigma1^2 / sigma2^2)^l
//
// with F the Fisher-Snedecor CDF, plus a Monte Carlo estimator of the same event.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "core_net.hpp"
#include "random.hpp"

namespace qflow {

struct NormalInit {
    double sigma1_sq = 1.0; // variance of w1 entries
    double sigma2_sq = 1.0; // variance of w2 entries
};
struct KaimingInit {};
struct XavierInit {};
struct UniformInit {
    double half_width = std::sqrt(2.0);
};

using InitScheme = std::variant<NormalInit, KaimingInit, XavierInit, UniformInit>;

inline bool is_normal_family(const InitScheme& s) { return !std::holds_alternative<UniformInit>(s); }

/// Resolved (sigma1^2, sigma2^2): Kaiming 2/d and 2/l, Xavier 2/(d+l) and 2/(e+l).
inline NormalInit resolve_variances(const InitScheme& scheme, std::size_t d, std::size_t e,
                                    std::size_t l) {
    if (const auto* n = std::get_if<NormalInit>(&scheme)) {
        if (!(n->sigma1_sq > 0.0 && n->sigma2_sq > 0.0))
            throw DomainError("init variances must be positive");
        return *n;
    }
    const double dd = static_cast<double>(d), ee = static_cast<double>(e), ll = static_cast<double>(l);
    if (std::holds_alternative<KaimingInit>(scheme)) return {2.0 / dd, 2.0 / ll};
    if (std::holds_alternative<XavierInit>(scheme)) return {2.0 / (dd + ll), 2.0 / (ee + ll)};
    throw DomainError("uniform initialization has no normal variances");
}

/// Draws a bias-free network. w1 uses stream Stream::w1 and w2 Stream::w2, each filled row-major.
inline Params sample_init(const InitScheme& scheme, std::size_t d, std::size_t e, std::size_t l,
                          std::uint64_t seed) {
    if (d == 0 || e == 0 || l == 0) throw ShapeError("network dimensions must be >= 1");
    Params p;
    p.w1 = Matrix(l, d);
    p.w2 = Matrix(e, l);
    Rng r1(seed, Stream::w1), r2(seed, Stream::w2);
    if (const auto* u = std::get_if<UniformInit>(&scheme)) {
        if (!(u->half_width > 0.0)) throw DomainError("uniform half width must be positive");
        for (double& w : p.w1.data()) w = r1.uniform(-u->half_width, u->half_width);
        for (double& w : p.w2.data()) w = r2.uniform(-u->half_width, u->half_width);
        return p;
    }
    const NormalInit v = resolve_variances(scheme, d, e, l);
    const double s1 = std::sqrt(v.sigma1_sq), s2 = std::sqrt(v.sigma2_sq);
    for (double& w : p.w1.data()) w = s1 * r1.normal();
    for (double& w : p.w2.data()) w = s2 * r2.normal();
    return p;
}

namespace detail {

/// Continued fraction for the incomplete beta function (modified Lentz).
inline double beta_continued_fraction(double a, double b, double x) {
    constexpr int max_iter = 300;
    constexpr double eps = 1e-14;
    constexpr double tiny = 1e-300;
    const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= max_iter; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < eps) return h;
    }
    return h;
}

} // namespace detail

/// Regularized incomplete beta I_x(a, b).
inline double incomplete_beta(double a, double b, double x) {
    if (!(a > 0.0 && b > 0.0)) throw DomainError("incomplete beta needs a, b > 0");
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double log_front =
        std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(log_front);
    if (x < (a + 1.0) / (a + b + 2.0)) return front * detail::beta_continued_fraction(a, b, x) / a;
    return 1.0 - front * detail::beta_continued_fraction(b, a, 1.0 - x) / b;
}

/// CDF of the F(d1, d2) distribution: I_{d1 x / (d1 x + d2)}(d1/2, d2/2); 0 for x <= 0.
inline double f_cdf(std::size_t d1, std::size_t d2, double x) {
    if (d1 == 0 || d2 == 0) throw DomainError("F distribution needs positive degrees of freedom");
    if (!(x > 0.0)) return 0.0;
    if (std::isinf(x)) return 1.0;
    const double a = static_cast<double>(d1) * x;
    return incomplete_beta(0.5 * static_cast<double>(d1), 0.5 * static_cast<double>(d2),
                           a / (a + static_cast<double>(d2)));
}

struct ObstructionQuery {
    std::size_t d = 1;
    std::size_t l = 1;
    InitScheme scheme = NormalInit{};
};

/// Closed-form probability that at least one of the l neurons starts with negative charge.
inline double obstruction_probability(const ObstructionQuery& q) {
    if (q.d == 0 || q.l == 0) throw ShapeError("d and l must be >= 1");
    if (!is_normal_family(q.scheme))
        throw DomainError("closed-form obstruction probability needs a normal initialization");
    const NormalInit v = resolve_variances(q.scheme, q.d, 1, q.l);
    const double arg = static_cast<double>(q.d) * v.sigma1_sq / v.sigma2_sq;
    const double healthy = f_cdf(1, q.d, arg);
    return std::clamp(1.0 - std::pow(healthy, static_cast<double>(q.l)), 0.0, 1.0);
}

struct MonteCarloEstimate {
    double estimate = 0.0;
    double std_error = 0.0; // sqrt(p (1 - p) / trials) at the estimate
    std::size_t trials = 0;
};

/// Trials are processed in fixed blocks; block b draws from seed derive_seed(seed, {b}), so the
/// result does not depend on how blocks are distributed over workers.
inline constexpr std::size_t monte_carlo_block = 4096;

/// Count of obstructed trials in block `block` (trials [block*B, min(trials, (block+1)*B))).
inline std::size_t monte_carlo_block_hits(const ObstructionQuery& q, std::size_t trials,
                                          std::uint64_t seed, std::size_t block) {
    const std::size_t first = block * monte_carlo_block;
    const std::size_t last = std::min(trials, first + monte_carlo_block);
    Rng rng(derive_seed(seed, {block}), Stream::probe);
    const auto* uniform = std::get_if<UniformInit>(&q.scheme);
    double s1 = 0.0, s2 = 0.0;
    if (!uniform) {
        const NormalInit v = resolve_variances(q.scheme, q.d, 1, q.l);
        s1 = std::sqrt(v.sigma1_sq);
        s2 = std::sqrt(v.sigma2_sq);
    }
    auto draw = [&](double sigma) {
        return uniform ? rng.uniform(-uniform->half_width, uniform->half_width) : sigma * rng.normal();
    };
    std::size_t hits = 0;
    for (std::size_t t = first; t < last; ++t) {
        for (std::size_t k = 0; k < q.l; ++k) {
            double in = 0.0;
            for (std::size_t i = 0; i < q.d; ++i) {
                const double w = draw(s1);
                in += w * w;
            }
            const double out = draw(s2);
            if (in < out * out) {
                ++hits;
                break;
            }
        }
    }
    return hits;
}

/// Fraction of sampled initializations containing a negative-charge neuron.
/// Blocks are dealt round-robin to `workers` threads.
inline MonteCarloEstimate monte_carlo_obstruction(const ObstructionQuery& q, std::size_t trials,
                                                  std::uint64_t seed, std::size_t workers = 1) {
    if (trials == 0) throw DomainError("Monte Carlo needs at least one trial");
    if (q.d == 0 || q.l == 0) throw ShapeError("d and l must be >= 1");
    const std::size_t blocks = (trials + monte_carlo_block - 1) / monte_carlo_block;
    workers = std::clamp<std::size_t>(workers, 1, blocks);
    std::vector<std::size_t> partial(workers, 0);
    {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w)
            pool.emplace_back([&, w] {
                for (std::size_t b = w; b < blocks; b += workers)
                    partial[w] += monte_carlo_block_hits(q, trials, seed, b);
            });
    }
    std::size_t hits = 0;
    for (std::size_t h : partial) hits += h;
    MonteCarloEstimate m;
    m.trials = trials;
    m.estimate = static_cast<double>(hits) / static_cast<double>(trials);
    m.std_error = std::sqrt(m.estimate * (1.0 - m.estimate) / static_cast<double>(trials));
    return m;
}

/// Standard error used when comparing an estimate against a known probability p: the larger
/// of the estimate's own binomial error and sqrt(p (1 - p) / n), so that estimates of 0 or 1
/// are not judged with a zero error bar.
inline double agreement_std_error(const MonteCarloEstimate& m, double p) {
    return std::max(m.std_error, std::sqrt(p * (1.0 - p) / static_cast<double>(m.trials)));
}

/// Closed-form probabilities on a grid: result[i][j] for d = d_values[i], l = l_values[j].
inline std::vector<std::vector<double>> prob_grid(const std::vector<std::size_t>& d_values,
                                                  const std::vector<std::size_t>& l_values,
                                                  const InitScheme& scheme) {
    if (d_values.empty() || l_values.empty()) throw DomainError("grid ranges must be non-empty");
    std::vector<std::vector<double>> grid(d_values.size(), std::vector<double>(l_values.size()));
    for (std::size_t i = 0; i < d_values.size(); ++i)
        for (std::size_t j = 0; j < l_values.size(); ++j)
            grid[i][j] = obstruction_probability({d_values[i], l_values[j], scheme});
    return grid;
}

} // namespace qflow
