#pragma once

// Property batteries behind `quadricflow verify`. Each suite draws its cases from a seed and
// reports one pass/fail entry per property.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "json.hpp"

#include "gradflow.hpp"
#include "random.hpp"
#include "stats.hpp"
#include "symmetry.hpp"
#include "topology.hpp"

namespace qflow {

/// Random network with i.i.d. N(0, scale^2) weights.
inline Params random_params(Rng& rng, std::size_t d, std::size_t e, std::size_t l, bool with_bias,
                            Activation act = Activation::relu(), double scale = 1.0) {
    Params p;
    p.w1 = Matrix(l, d);
    p.w2 = Matrix(e, l);
    for (double& w : p.w1.data()) w = scale * rng.normal();
    for (double& w : p.w2.data()) w = scale * rng.normal();
    if (with_bias) {
        p.b1 = Vector(l);
        p.b2 = Vector(e);
        for (double& b : *p.b1) b = scale * rng.normal();
        for (double& b : *p.b2) b = scale * rng.normal();
    }
    p.activation = act;
    return p;
}

/// Standard-normal inputs; MSE targets are standard normal, BCE targets fair coin flips.
inline Dataset random_dataset(Rng& rng, std::size_t n, std::size_t d, std::size_t e, LossKind kind) {
    Dataset data{Matrix(n, d), Matrix(n, e)};
    for (double& x : data.inputs.data()) x = rng.normal();
    for (double& y : data.targets.data()) y = kind == LossKind::mse ? rng.normal() : (rng.uniform01() < 0.5 ? 0.0 : 1.0);
    return data;
}

/// Smallest |pre-activation| over all neurons and samples.
inline double min_abs_preactivation(const Params& theta, const Dataset& data) {
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t n = 0; n < data.size(); ++n)
        for (std::size_t k = 0; k < theta.hidden(); ++k)
            m = std::min(m, std::abs(detail::pre_activation(theta, k, data.inputs.row(n))));
    return m;
}

/// |a - b| / max(|a|, |b|, 1e-12) with Euclidean norms over all coordinates.
inline double relative_error(const Params& a, const Params& b) {
    const double diff = std::sqrt(norm_sq(axpy(-1.0, b, a)));
    return diff / std::max({std::sqrt(norm_sq(a)), std::sqrt(norm_sq(b)), 1e-12});
}

struct PropertyResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

struct SuiteReport {
    std::string suite;
    std::vector<PropertyResult> results;
    std::vector<std::string> warnings;

    bool passed() const {
        return std::all_of(results.begin(), results.end(), [](const PropertyResult& r) { return r.passed; });
    }
};

struct VerifyConfig {
    std::uint64_t seed = 0;
    std::size_t mc_trials = 100000;
    double kink_slope = 0.0; // sigma'(0) used by the analytic gradient
};

inline const std::vector<std::string>& suite_names() {
    static const std::vector<std::string> names{"conservation", "topology", "gradcheck", "prob"};
    return names;
}

namespace detail {

/// Runs a property body; a thrown exception counts as a failure.
inline PropertyResult check(const std::string& name, const std::function<std::string(bool&)>& body) {
    PropertyResult r{name, true, {}};
    try {
        r.detail = body(r.passed);
    } catch (const std::exception& ex) {
        r.passed = false;
        r.detail = std::string("exception: ") + ex.what();
    }
    return r;
}

inline std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

struct Shape {
    std::size_t d, e, l;
    bool bias;
    Activation act;
};

inline Shape random_shape(Rng& rng, std::size_t max_d = 3, std::size_t max_e = 2, std::size_t max_l = 4) {
    Shape s{1 + rng.below(max_d), 1 + rng.below(max_e), 1 + rng.below(max_l), rng.below(2) == 1,
            Activation::relu()};
    if (rng.below(3) == 0) s.act = Activation::leaky_relu(0.1);
    return s;
}

/// Scalar-output network with d >= 2 and at least one negative charge, drawn by rejection.
inline Params random_obstructed(Rng& rng, std::size_t d, std::size_t l) {
    for (;;) {
        Params p = random_params(rng, d, 1, l, false);
        const auto sig = signature(p);
        if (sig.l_minus > 0 && sig.l_zero == 0) return p;
    }
}

} // namespace detail

inline SuiteReport suite_conservation(const VerifyConfig& cfg) {
    SuiteReport rep{"conservation", {}, {}};
    Rng rng(cfg.seed, Stream::probe);

    rep.results.push_back(detail::check("charges_conserved_under_small_step_gd", [&](bool& ok) {
        double worst = 0.0;
        for (int t = 0; t < 10; ++t) {
            const auto s = detail::random_shape(rng);
            const LossKind kind = s.e == 1 && rng.below(2) == 1 ? LossKind::bce : LossKind::mse;
            const Params theta = random_params(rng, s.d, s.e, s.l, s.bias, s.act, 0.5);
            const Dataset data = random_dataset(rng, 16, s.d, s.e, kind);
            TrainConfig tc;
            tc.loss_kind = kind;
            tc.learning_rate = 1e-3;
            tc.steps = 100;
            tc.record_stride = 100;
            tc.kink_slope = cfg.kink_slope;
            const auto records = train(theta, data, tc);
            const Vector& c0 = records.front().charges;
            const Vector& c1 = records.back().charges;
            for (std::size_t k = 0; k < c0.size(); ++k)
                worst = std::max(worst, std::abs(c1[k] - c0[k]) / (1.0 + norm_sq(theta)));
        }
        ok = worst < 1e-4;
        return "max |dc| / (1 + |theta|^2) = " + detail::fmt(worst);
    }));

    rep.results.push_back(detail::check("balance_residual", [&](bool& ok) {
        double worst = 0.0;
        for (int t = 0; t < 50; ++t) {
            const auto s = detail::random_shape(rng);
            const LossKind kind = s.e == 1 && rng.below(2) == 1 ? LossKind::bce : LossKind::mse;
            const Params theta = random_params(rng, s.d, s.e, s.l, s.bias, s.act);
            const Dataset data = random_dataset(rng, 12, s.d, s.e, kind);
            const Params g = grad(theta, data, kind, cfg.kink_slope);
            for (std::size_t k = 0; k < s.l; ++k)
                worst = std::max(worst, std::abs(bilinear(theta, g, k)) / (1.0 + norm_sq(theta)));
        }
        ok = worst < 1e-10;
        return "max |<theta, grad>_k| / (1 + |theta|^2) = " + detail::fmt(worst);
    }));

    rep.results.push_back(detail::check("rescaling_preserves_function", [&](bool& ok) {
        ok = true;
        for (int t = 0; t < 50 && ok; ++t) {
            const auto s = detail::random_shape(rng);
            const Params theta = random_params(rng, s.d, s.e, s.l, s.bias, s.act);
            Vector alpha(s.l);
            for (double& a : alpha) a = std::exp(rng.uniform(-1.5, 1.5));
            ok = observationally_equivalent(theta, rescale(theta, Rescaling(alpha)), 20, rng.next_u64(), 1e-10);
        }
        return std::string("50 random rescalings");
    }));

    rep.results.push_back(detail::check("permutation_preserves_function", [&](bool& ok) {
        ok = true;
        for (int t = 0; t < 50 && ok; ++t) {
            const auto s = detail::random_shape(rng);
            const Params theta = random_params(rng, s.d, s.e, s.l, s.bias, s.act);
            const Permutation pi = Permutation::random(s.l, rng);
            const Params moved = permute(theta, pi);
            ok = observationally_equivalent(theta, moved, 20, rng.next_u64(), 1e-12);
            const Vector c = charges(theta), cm = charges(moved);
            for (std::size_t i = 0; i < s.l && ok; ++i) ok = cm[i] == c[pi(i)];
        }
        return std::string("50 random permutations; charges are relabelled");
    }));

    rep.results.push_back(detail::check("gradient_rescaling_equivariance", [&](bool& ok) {
        double worst = 0.0;
        for (int t = 0; t < 30; ++t) {
            const auto s = detail::random_shape(rng);
            const Params theta = random_params(rng, s.d, s.e, s.l, s.bias, s.act);
            const Dataset data = random_dataset(rng, 12, s.d, s.e, LossKind::mse);
            Vector alpha(s.l);
            for (double& a : alpha) a = std::exp(rng.uniform(-1.0, 1.0));
            const Rescaling r(alpha);
            const Params lhs = grad(rescale(theta, r), data, LossKind::mse, cfg.kink_slope);
            const Params rhs = rescale(grad(theta, data, LossKind::mse, cfg.kink_slope), r.inverse());
            worst = std::max(worst, relative_error(lhs, rhs));
        }
        ok = worst < 1e-10;
        return "max relative error = " + detail::fmt(worst);
    }));
    return rep;
}

inline SuiteReport suite_topology(const VerifyConfig& cfg) {
    SuiteReport rep{"topology", {}, {}};
    Rng rng(cfg.seed, Stream::probe);

    rep.results.push_back(detail::check("betti0_matches_closed_form", [&](bool& ok) {
        ok = true;
        std::size_t cases = 0;
        for (std::size_t d = 1; d <= 3; ++d)
            for (std::size_t e = 1; e <= 3; ++e)
                for (std::size_t lp = 0; lp <= 4; ++lp)
                    for (std::size_t lm = 0; lm <= 4; ++lm)
                        for (int bias = 0; bias < 2; ++bias) {
                            const auto sig = InvariantSignature::from_counts(d, e, lp, lm, 0, bias == 1);
                            ok = ok && poincare_polynomial(sig).at(0) == connected_components_closed_form(sig);
                            ++cases;
                        }
        return std::to_string(cases) + " signatures";
    }));

    rep.results.push_back(detail::check("poincare_total_rank", [&](bool& ok) {
        ok = true;
        for (std::size_t d = 1; d <= 3; ++d)
            for (std::size_t e = 1; e <= 3; ++e)
                for (std::size_t lp = 0; lp <= 4; ++lp)
                    for (std::size_t lm = 0; lm <= 4; ++lm) {
                        const auto p = poincare_polynomial(InvariantSignature::from_counts(d, e, lp, lm, 1));
                        std::uint64_t total = 0;
                        for (auto b : p) total += b;
                        ok = ok && total == (std::uint64_t{1} << (lp + lm));
                    }
        return std::string("p(1) = 2^(l+ + l-)");
    }));

    rep.results.push_back(detail::check("effective_component_count", [&](bool& ok) {
        ok = true;
        for (std::size_t d = 2; d <= 3; ++d)
            for (std::size_t lp = 0; lp <= 4; ++lp)
                for (std::size_t lm = 0; lm <= 4; ++lm)
                    ok = ok && effective_component_count(InvariantSignature::from_counts(d, 1, lp, lm)) == 1 + lm;
        return std::string("1 + l- for d > 1, e = 1");
    }));

    rep.results.push_back(detail::check("rescale_to_charges", [&](bool& ok) {
        double worst_c = 0.0;
        bool same_fn = true;
        for (int t = 0; t < 200; ++t) {
            const auto s = detail::random_shape(rng);
            Params theta = random_params(rng, s.d, s.e, s.l, s.bias, s.act);
            Vector target(s.l);
            for (double& c : target) c = rng.uniform(-2.0, 2.0);
            // Degenerate neurons whose target is feasible.
            if (t % 4 == 1) {
                for (double& w : theta.w1.row(0)) w = 0.0;
                if (theta.b1) (*theta.b1)[0] = 0.0;
                target[0] = -std::abs(target[0]) - 0.01;
            } else if (t % 4 == 2) {
                for (std::size_t j = 0; j < s.e; ++j) theta.w2(j, 0) = 0.0;
                target[0] = std::abs(target[0]) + 0.01;
            }
            const auto [moved, alpha] = rescale_to_charges(theta, target);
            const Vector c = charges(moved);
            for (std::size_t k = 0; k < s.l; ++k) worst_c = std::max(worst_c, std::abs(c[k] - target[k]));
            same_fn = same_fn && observationally_equivalent(theta, moved, 20, rng.next_u64(), 1e-10);
        }
        ok = worst_c < 1e-10 && same_fn;
        return "max |c - target| = " + detail::fmt(worst_c) + (same_fn ? "" : "; function changed");
    }));

    rep.results.push_back(detail::check("map_to_sign", [&](bool& ok) {
        ok = true;
        std::size_t rejected = 0, mapped = 0;
        for (int t = 0; t < 100 && ok; ++t) {
            const Params theta = detail::random_obstructed(rng, 2 + rng.below(2), 2 + rng.below(4));
            const auto sig = signature(theta);
            const SignVector s = sign_vector(theta, sig);
            SignVector target;
            for (std::size_t i = 0; i < s.size(); ++i) target.s.push_back(rng.below(2) == 1 ? 1 : -1);
            if (!same_effective(s, target)) {
                try {
                    (void)map_to_sign(theta, target);
                    ok = false;
                } catch (const NotReachableError&) {
                    ++rejected;
                }
                continue;
            }
            const Params moved = map_to_sign(theta, target);
            const Vector c = charges(moved);
            for (std::size_t k = 0; k < c.size(); ++k) ok = ok && std::abs(c[k] - sig.c[k]) < 1e-10;
            ok = ok && sign_vector(moved, sig.zero_tol) == target;
            ok = ok && observationally_equivalent(theta, moved, 20, rng.next_u64(), 1e-10);
            ++mapped;
        }
        return std::to_string(mapped) + " mapped, " + std::to_string(rejected) + " rejected";
    }));

    rep.results.push_back(detail::check("connecting_path_stays_on_invariant_set", [&](bool& ok) {
        double worst = 0.0;
        for (int t = 0; t < 30; ++t) {
            const std::size_t d = 2 + rng.below(2), l = 1 + rng.below(4);
            const Params a = detail::random_obstructed(rng, d, l);
            const auto sig = signature(a);
            // Endpoint b: a fresh draw moved onto the same charges and signs.
            Params b = random_params(rng, d, 1, l, false);
            const SignVector sa = sign_vector(a, sig);
            for (std::size_t i = 0; i < sig.neg_indices.size(); ++i) {
                const std::size_t k = sig.neg_indices[i];
                if ((b.w2(0, k) >= 0.0) != (sa.s[i] > 0)) b.w2(0, k) = -b.w2(0, k);
                if (b.w2(0, k) == 0.0) b.w2(0, k) = sa.s[i];
            }
            for (std::size_t k = 0; k < l; ++k)
                if (sig.c[k] > 0.0 && input_norm_sq(b, k) == 0.0) b.w1(k, 0) = 1.0;
            b = rescale_to_charges(b, sig.c).first;
            for (const Params& p : connecting_path(a, b, 100)) {
                const Vector c = charges(p);
                for (std::size_t k = 0; k < l; ++k) worst = std::max(worst, std::abs(c[k] - sig.c[k]));
            }
        }
        ok = worst < 1e-8;
        return "max waypoint charge deviation = " + detail::fmt(worst);
    }));

    rep.results.push_back(detail::check("negative_charge_signs_never_flip", [&](bool& ok) {
        ok = true;
        for (int t = 0; t < 10 && ok; ++t) {
            const std::size_t d = 2 + rng.below(2), l = 2 + rng.below(3);
            const Params theta = detail::random_obstructed(rng, d, l);
            const Dataset data = random_dataset(rng, 32, d, 1, LossKind::mse);
            TrainConfig tc;
            tc.learning_rate = 1e-2;
            tc.steps = 200;
            tc.kink_slope = cfg.kink_slope;
            const auto records = train(theta, data, tc);
            for (const auto& r : records) ok = ok && r.sign == records.front().sign;
        }
        return std::string("10 gradient-descent runs");
    }));
    return rep;
}

inline SuiteReport suite_gradcheck(const VerifyConfig& cfg) {
    SuiteReport rep{"gradcheck", {}, {}};
    Rng rng(cfg.seed, Stream::probe);

    struct Case {
        Params theta;
        Dataset data;
        LossKind kind;
    };
    std::vector<Case> cases;
    while (cases.size() < 50) {
        const auto s = detail::random_shape(rng);
        const LossKind kind = s.e == 1 && rng.below(2) == 1 ? LossKind::bce : LossKind::mse;
        const Dataset data = random_dataset(rng, 8, s.d, s.e, kind);
        const Params theta = random_params(rng, s.d, s.e, s.l, s.bias, s.act);
        if (min_abs_preactivation(theta, data) > 1e-3) cases.push_back({theta, data, kind});
    }

    rep.results.push_back(detail::check("finite_difference_match", [&](bool& ok) {
        double worst = 0.0;
        for (const auto& c : cases)
            worst = std::max(worst, relative_error(grad(c.theta, c.data, c.kind, cfg.kink_slope),
                                                   finite_diff_grad(c.theta, c.data, c.kind, 1e-6)));
        ok = worst < 1e-5;
        return "max relative error = " + detail::fmt(worst) + " over 50 smooth points";
    }));

    rep.results.push_back(detail::check("balance_residual_smooth", [&](bool& ok) {
        double worst = 0.0;
        for (const auto& c : cases) {
            const Params g = grad(c.theta, c.data, c.kind, cfg.kink_slope);
            for (std::size_t k = 0; k < c.theta.hidden(); ++k)
                worst = std::max(worst, std::abs(bilinear(c.theta, g, k)) / (1.0 + norm_sq(c.theta)));
        }
        ok = worst < 1e-10;
        return "max |<theta, grad>_k| / (1 + |theta|^2) = " + detail::fmt(worst);
    }));
    return rep;
}

inline SuiteReport suite_prob(const VerifyConfig& cfg) {
    SuiteReport rep{"prob", {}, {}};
    Rng rng(cfg.seed, Stream::probe);
    if (cfg.mc_trials < 10000)
        rep.warnings.push_back("only " + std::to_string(cfg.mc_trials) +
                               " Monte Carlo trials: standard errors are wide");

    rep.results.push_back(detail::check("f_cdf_median_point", [&](bool& ok) {
        const double v = f_cdf(1, 1, 1.0);
        ok = std::abs(v - 0.5) < 1e-10;
        return "F_{1,1}(1) = " + detail::fmt(v);
    }));

    rep.results.push_back(detail::check("f_cdf_closed_form_2_2", [&](bool& ok) {
        double worst = 0.0;
        for (double x : {0.01, 0.3, 1.0, 2.5, 40.0}) worst = std::max(worst, std::abs(f_cdf(2, 2, x) - x / (1.0 + x)));
        ok = worst < 1e-12;
        return "max error vs x/(1+x) = " + detail::fmt(worst);
    }));

    rep.results.push_back(detail::check("monte_carlo_agreement", [&](bool& ok) {
        ok = true;
        double worst = 0.0;
        for (int t = 0; t < 10; ++t) {
            ObstructionQuery q{1 + rng.below(8), 1 + rng.below(16), KaimingInit{}};
            switch (rng.below(3)) {
            case 0: break;
            case 1: q.scheme = XavierInit{}; break;
            default: q.scheme = NormalInit{rng.uniform(0.2, 2.0), rng.uniform(0.2, 2.0)}; break;
            }
            const double p = obstruction_probability(q);
            const auto mc = monte_carlo_obstruction(q, cfg.mc_trials, rng.next_u64());
            const double z = std::abs(mc.estimate - p) / std::max(agreement_std_error(mc, p), 1e-300);
            worst = std::max(worst, z);
        }
        ok = worst <= 3.0;
        return "max |estimate - closed form| / SE = " + detail::fmt(worst);
    }));

    rep.results.push_back(detail::check("xavier_at_least_kaiming_small_d", [&](bool& ok) {
        ok = true;
        for (std::size_t d = 1; d <= 3; ++d)
            for (std::size_t l = 4; l <= 16; ++l)
                ok = ok && obstruction_probability({d, l, XavierInit{}}) >= obstruction_probability({d, l, KaimingInit{}});
        return std::string("d in 1..3, l in 4..16");
    }));

    rep.results.push_back(detail::check("monotone_in_width", [&](bool& ok) {
        ok = true;
        for (std::size_t d = 1; d <= 8; ++d)
            for (std::size_t l = 1; l < 32; ++l)
                ok = ok && obstruction_probability({d, l + 1, NormalInit{}}) >= obstruction_probability({d, l, NormalInit{}});
        return std::string("fixed N(0,1) init, d in 1..8");
    }));
    return rep;
}

/// Runs one suite by name, or all of them for "all".
inline std::vector<SuiteReport> run_verify(const std::string& suite, const VerifyConfig& cfg) {
    std::vector<SuiteReport> out;
    const bool all = suite == "all";
    if (all || suite == "conservation") out.push_back(suite_conservation(cfg));
    if (all || suite == "topology") out.push_back(suite_topology(cfg));
    if (all || suite == "gradcheck") out.push_back(suite_gradcheck(cfg));
    if (all || suite == "prob") out.push_back(suite_prob(cfg));
    if (out.empty()) throw DomainError("unknown suite '" + suite + "'");
    return out;
}

inline nlohmann::json verify_report_json(const std::vector<SuiteReport>& reports, const VerifyConfig& cfg) {
    nlohmann::json doc;
    doc["seed"] = cfg.seed;
    doc["kink_slope"] = cfg.kink_slope;
    bool all_ok = true;
    for (const auto& rep : reports) {
        nlohmann::json s;
        s["suite"] = rep.suite;
        s["passed"] = rep.passed();
        s["warnings"] = rep.warnings;
        for (const auto& r : rep.results)
            s["properties"].push_back({{"name", r.name}, {"passed", r.passed}, {"detail", r.detail}});
        doc["suites"].push_back(s);
        all_ok = all_ok && rep.passed();
    }
    doc["passed"] = all_ok;
    return doc;
}

} // namespace qflow
