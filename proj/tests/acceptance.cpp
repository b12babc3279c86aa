// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "quadricflow/quadricflow.hpp"

using namespace qflow;

namespace {

struct Outcome {
    bool ok;
    std::string detail;
};

int failures = 0;

void criterion(int id, const char* name, double budget_s, const std::function<Outcome()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o{false, {}};
    try {
        o = body();
    } catch (const std::exception& ex) {
        o = {false, std::string("exception: ") + ex.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs < budget_s;
    const bool ok = o.ok && in_time;
    if (!ok) ++failures;
    std::printf("%s criterion %d %s: %s [%.2fs, budget %.0fs%s]\n", ok ? "PASS" : "FAIL", id, name, o.detail.c_str(),
                secs, budget_s, in_time ? "" : ", over budget");
    std::fflush(stdout);
}

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

// Components of a single-neuron quadric |in|^2 - |out|^2 = c: a sphere factor S^0 is disconnected.
std::uint64_t betti0_oracle(std::size_t din, std::size_t e, std::size_t lp, std::size_t lm) {
    std::uint64_t n = 1;
    for (std::size_t k = 0; k < lp; ++k) n *= din == 1 ? 2 : 1;
    for (std::size_t k = 0; k < lm; ++k) n *= e == 1 ? 2 : 1;
    return n;
}

// A point on the same invariant set and sign vector as a, drawn independently.
Params same_sign_partner(Rng& rng, const Params& a) {
    const auto sig = signature(a);
    const SignVector sa = sign_vector(a, sig);
    Params b = random_params(rng, a.input_dim(), 1, a.hidden(), false);
    for (std::size_t i = 0; i < sig.neg_indices.size(); ++i) {
        const std::size_t k = sig.neg_indices[i];
        if (b.w2(0, k) == 0.0 || (b.w2(0, k) > 0.0) != (sa.s[i] > 0)) b.w2(0, k) = -b.w2(0, k);
    }
    return rescale_to_charges(b, sig.c).first;
}

} // namespace

int main() {
    ToyConfig toy_cfg;
    ToyResult toy;

    criterion(1, "conservation", 5.0, [&] {
        toy = run_toy(toy_cfg);
        double drift = 0.0;
        for (const auto* run : {&toy.obstructed, &toy.good})
            for (const auto& r : run->records) drift = std::max(drift, r.max_charge_drift);
        return Outcome{drift < 0.01, "max relative charge drift " + num(drift) + " over both toy runs, 500 steps"};
    });

    criterion(2, "sign_invariance", 60.0, [&] {
        const Dataset data = make_toy_dataset();
        TrainConfig tc;
        tc.steps = 500;
        std::size_t flips = 0, runs = 0;
        for (std::uint64_t seed = 0; seed < 50; ++seed) {
            const Params init = seed % 2 == 0 ? toy_obstructed_init(seed) : toy_good_init(seed);
            const auto records = train(init, data, tc);
            for (const auto& r : records) flips += r.sign != records.front().sign;
            ++runs;
        }
        return Outcome{flips == 0, std::to_string(flips) + " flipped records across " + std::to_string(runs) +
                                       " runs (l- = 2 and l- = 1 alternating)"};
    });

    criterion(3, "obstruction_reproduction", 10.0, [&] {
        if (toy.good.records.empty()) toy = run_toy(toy_cfg);
        // Exact interpolant: one neuron with in = (1, 1), out = -1 gives -(x1 + x2) on [0,1]^2.
        const Dataset data = make_toy_dataset();
        Params exact;
        exact.w1 = Matrix::from_rows({{1.0, 1.0}});
        exact.w2 = Matrix::from_rows({{-1.0}});
        double sse = 0.0;
        for (std::size_t n = 0; n < data.size(); ++n) {
            const double x1 = data.inputs(n, 0), x2 = data.inputs(n, 1);
            const double f = -std::max(0.0, x1 + x2);
            sse += (f - data.targets(n, 0)) * (f - data.targets(n, 0));
        }
        const double bad = toy.obstructed.final_loss(), good = toy.good.final_loss();
        const bool ok = sse == 0.0 && loss(exact, data, LossKind::mse) == 0.0 && bad >= 10.0 * good && good < 0.01;
        return Outcome{ok, "obstructed MSE " + num(bad) + ", good MSE " + num(good) + ", ratio " + num(bad / good) +
                               ", interpolant MSE " + num(sse)};
    });

    criterion(4, "topology_formulas", 1.0, [&] {
        std::size_t cases = 0, bad = 0;
        for (std::size_t d = 1; d <= 3; ++d)
            for (std::size_t e = 1; e <= 3; ++e)
                for (std::size_t lp = 0; lp <= 4; ++lp)
                    for (std::size_t lm = 0; lm <= 4; ++lm) {
                        const auto sig = InvariantSignature::from_counts(d, e, lp, lm);
                        const auto p = poincare_polynomial(sig);
                        std::uint64_t total = 0;
                        for (auto b : p) total += b;
                        bool ok = p.at(0) == connected_components_closed_form(sig) &&
                                  p.at(0) == betti0_oracle(d, e, lp, lm) && total == (std::uint64_t{1} << (lp + lm));
                        if (d > 1 && e == 1) ok = ok && effective_component_count(sig) == 1 + lm;
                        bad += !ok;
                        ++cases;
                    }
        return Outcome{bad == 0, std::to_string(cases - bad) + "/" + std::to_string(cases) + " signatures exact"};
    });

    criterion(5, "rescaling", 10.0, [&] {
        Rng rng(5, Stream::probe);
        double worst = 0.0;
        std::size_t changed = 0, edge = 0;
        for (int t = 0; t < 1000; ++t) {
            const auto s = detail::random_shape(rng);
            Params theta = random_params(rng, s.d, s.e, s.l, s.bias, s.act);
            Vector target(s.l);
            for (double& c : target) c = rng.uniform(-2.0, 2.0);
            const std::size_t k = rng.below(s.l);
            if (t % 5 == 1) { // A = 0 (no input weights): only negative targets are reachable
                for (double& w : theta.w1.row(k)) w = 0.0;
                if (theta.b1) (*theta.b1)[k] = 0.0;
                target[k] = -std::abs(target[k]) - 1e-3;
                ++edge;
            } else if (t % 5 == 2) { // C = 0 (no output weights)
                for (std::size_t j = 0; j < s.e; ++j) theta.w2(j, k) = 0.0;
                target[k] = std::abs(target[k]) + 1e-3;
                ++edge;
            }
            const Params moved = rescale_to_charges(theta, target).first;
            const Vector c = charges(moved);
            for (std::size_t i = 0; i < s.l; ++i) worst = std::max(worst, std::abs(c[i] - target[i]));
            changed += !observationally_equivalent(theta, moved, 20, rng.next_u64(), 1e-10);
        }
        return Outcome{worst < 1e-10 && changed == 0, "max charge error " + num(worst) + ", " +
                                                          std::to_string(changed) + " function changes, " +
                                                          std::to_string(edge) + " edge cases"};
    });

    criterion(6, "component_map", 10.0, [&] {
        Rng rng(6, Stream::probe);
        std::size_t mapped = 0, rejected = 0, bad = 0;
        while (mapped < 200) {
            const Params theta = detail::random_obstructed(rng, 2 + rng.below(3), 1 + rng.below(6));
            const auto sig = signature(theta);
            const SignVector s = sign_vector(theta, sig);
            SignVector target = s;
            for (std::size_t i = target.size(); i > 1; --i) std::swap(target.s[i - 1], target.s[rng.below(i)]);
            const Params moved = map_to_sign(theta, target);
            const Vector c = charges(moved);
            bool ok = sign_vector(moved, sig.zero_tol) == target;
            for (std::size_t k = 0; k < c.size(); ++k) ok = ok && std::abs(c[k] - sig.c[k]) < 1e-10;
            ok = ok && observationally_equivalent(theta, moved, 20, rng.next_u64(), 1e-10);
            bad += !ok;
            ++mapped;

            SignVector off = s;
            off.s[rng.below(off.size())] *= -1;
            try {
                (void)map_to_sign(theta, off);
                ++bad;
            } catch (const NotReachableError&) {
                ++rejected;
            }
        }
        return Outcome{bad == 0, std::to_string(mapped) + " equal-sum pairs mapped, " + std::to_string(rejected) +
                                     " unequal-sum pairs rejected, " + std::to_string(bad) + " failures"};
    });

    criterion(7, "path_construction", 10.0, [&] {
        Rng rng(7, Stream::probe);
        double worst = 0.0;
        for (int t = 0; t < 100; ++t) {
            const Params a = detail::random_obstructed(rng, 2 + rng.below(2), 1 + rng.below(5));
            const Params b = same_sign_partner(rng, a);
            const Vector c0 = charges(a);
            for (const Params& p : connecting_path(a, b, 200)) {
                const Vector c = charges(p);
                for (std::size_t k = 0; k < c.size(); ++k) worst = std::max(worst, std::abs(c[k] - c0[k]));
            }
        }
        return Outcome{worst < 1e-8, "max waypoint charge deviation " + num(worst) + " over 100 pairs"};
    });

    criterion(8, "gradient_correctness", 5.0, [&] {
        Rng rng(8, Stream::probe);
        double worst_fd = 0.0, worst_bal = 0.0;
        std::size_t points = 0;
        while (points < 50) {
            const auto s = detail::random_shape(rng);
            const LossKind kind = s.e == 1 && rng.below(2) == 1 ? LossKind::bce : LossKind::mse;
            const Dataset data = random_dataset(rng, 8, s.d, s.e, kind);
            const Params theta = random_params(rng, s.d, s.e, s.l, s.bias, s.act);
            if (min_abs_preactivation(theta, data) <= 1e-3) continue;
            const Params g = grad(theta, data, kind);
            worst_fd = std::max(worst_fd, relative_error(g, finite_diff_grad(theta, data, kind, 1e-6)));
            for (std::size_t k = 0; k < s.l; ++k)
                worst_bal = std::max(worst_bal, std::abs(bilinear(theta, g, k)) / (1.0 + norm_sq(theta)));
            ++points;
        }
        return Outcome{worst_fd < 1e-5 && worst_bal < 1e-10,
                       "max FD relative error " + num(worst_fd) + ", max scaled balance residual " + num(worst_bal)};
    });

    criterion(9, "obstruction_probability", 60.0, [&] {
        Rng rng(9, Stream::probe);
        double worst_z = 0.0;
        for (int t = 0; t < 10; ++t) {
            ObstructionQuery q{1 + rng.below(8), 1 + rng.below(16), KaimingInit{}};
            if (t % 3 == 1) q.scheme = XavierInit{};
            if (t % 3 == 2) q.scheme = NormalInit{rng.uniform(0.2, 2.0), rng.uniform(0.2, 2.0)};
            const double p = obstruction_probability(q);
            const auto mc = monte_carlo_obstruction(q, 100000, rng.next_u64());
            worst_z = std::max(worst_z, std::abs(mc.estimate - p) / agreement_std_error(mc, p));
        }
        const double median = f_cdf(1, 1, 1.0);
        bool xavier = true;
        for (std::size_t d = 1; d <= 3; ++d)
            for (std::size_t l = 4; l <= 16; ++l)
                xavier = xavier && obstruction_probability({d, l, XavierInit{}}) >=
                                       obstruction_probability({d, l, KaimingInit{}});
        return Outcome{worst_z <= 3.0 && std::abs(median - 0.5) < 1e-10 && xavier,
                       "max |MC - closed form| / SE " + num(worst_z) + ", F(1,1;1) = " + num(median) +
                           (xavier ? ", Xavier >= Kaiming" : ", Xavier < Kaiming somewhere")};
    });

    criterion(10, "tabular_trend", 300.0, [&] {
        const Dataset data = make_synthetic_binary();
        const auto cells = run_tabular(data, TabularConfig{});
        std::string detail = "mean test BCE by l+:";
        for (const auto& c : cells) detail += " " + num(c.mean_test_loss);
        return Outcome{cells.back().mean_test_loss < cells.front().mean_test_loss, detail};
    });

    std::printf("%s: %d criteria failed\n", failures == 0 ? "ALL PASS" : "FAILED", failures);
    return failures == 0 ? 0 : 1;
}
