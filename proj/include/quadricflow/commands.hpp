#pragma once

// Implementations of the quadricflow subcommands. Each takes an options struct and the
// output streams and returns the process exit code:
//   0 ok, 1 verification failure, 2 input/parse error, 3 math-domain error, 4 divergence.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "experiment.hpp"
#include "gradflow.hpp"
#include "io.hpp"
#include "stats.hpp"
#include "symmetry.hpp"
#include "topology.hpp"
#include "verify.hpp"

namespace qflow::cli {

using nlohmann::json;

enum ExitCode : int { ok = 0, verify_failed = 1, input_error = 2, domain_error = 3, diverged = 4 };

/// Default seed: 0, or the value of QUADRICFLOW_SEED when set.
inline std::uint64_t default_seed() {
    const char* env = std::getenv("QUADRICFLOW_SEED");
    if (env == nullptr || *env == '\0') return 0;
    try {
        std::size_t used = 0;
        const std::string text(env);
        const unsigned long long v = std::stoull(text, &used, 10);
        if (used != text.size() || text.front() == '-') throw std::invalid_argument(text);
        return v;
    } catch (const std::exception&) {
        throw ParseError(std::string("QUADRICFLOW_SEED is not a non-negative integer: ") + env);
    }
}

/// Runs body and maps library exceptions to exit codes, printing the message to err.
inline int guarded(std::ostream& err, const std::function<int()>& body) {
    try {
        return body();
    } catch (const DivergenceError& ex) {
        err << "error: " << ex.what() << "\n";
        return diverged;
    } catch (const ParseError& ex) {
        err << "error: " << ex.what() << "\n";
        return input_error;
    } catch (const ShapeError& ex) {
        err << "error: " << ex.what() << "\n";
        return input_error;
    } catch (const DomainError& ex) {
        err << "error: " << ex.what() << "\n";
        return domain_error;
    } catch (const std::exception& ex) {
        err << "error: " << ex.what() << "\n";
        return domain_error;
    }
}

/// Comma-separated reals, e.g. "-0.1,0.1".
inline Vector parse_real_list(const std::string& text) {
    Vector out;
    for (const auto& cell : io::detail::split_csv_line(text)) out.push_back(io::detail::parse_real(cell, 1));
    if (out.empty()) throw ParseError("empty list");
    return out;
}

/// "a" or "a:b" (inclusive), both >= 1.
inline std::vector<std::size_t> parse_range(const std::string& text) {
    auto nat = [&](const std::string& s) -> std::size_t {
        std::size_t used = 0;
        unsigned long long v = 0;
        try {
            v = std::stoull(s, &used, 10);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != s.size() || s.front() == '-' || v == 0)
            throw ParseError("invalid range '" + text + "': expected a or a:b with integers >= 1");
        return static_cast<std::size_t>(v);
    };
    const auto colon = text.find(':');
    const std::size_t lo = nat(text.substr(0, colon));
    const std::size_t hi = colon == std::string::npos ? lo : nat(text.substr(colon + 1));
    if (hi < lo) throw ParseError("invalid range '" + text + "': upper bound below lower bound");
    std::vector<std::size_t> out;
    for (std::size_t v = lo; v <= hi; ++v) out.push_back(v);
    return out;
}

/// kaiming | xavier | uniform | uniform:a | normal:s1,s2 (variances)
inline InitScheme parse_scheme(const std::string& text) {
    if (text == "kaiming") return KaimingInit{};
    if (text == "xavier") return XavierInit{};
    if (text == "uniform") return UniformInit{};
    if (text.rfind("uniform:", 0) == 0) {
        const Vector v = parse_real_list(text.substr(8));
        if (v.size() != 1) throw ParseError("uniform:a takes one half width");
        return UniformInit{v[0]};
    }
    if (text.rfind("normal:", 0) == 0) {
        const Vector v = parse_real_list(text.substr(7));
        if (v.size() != 2) throw ParseError("normal:s1,s2 takes two variances");
        return NormalInit{v[0], v[1]};
    }
    throw ParseError("unknown init scheme '" + text + "'");
}

inline LossKind parse_loss(const std::string& text) {
    if (text == "mse") return LossKind::mse;
    if (text == "bce") return LossKind::bce;
    throw ParseError("unknown loss '" + text + "' (expected mse or bce)");
}

// ---------------------------------------------------------------- diagnose

struct DiagnoseOptions {
    std::string params_path;
    double zero_tol = default_zero_tol;
};

inline json diagnose_report(const Params& theta, double zero_tol) {
    const auto sig = signature(theta, zero_tol);
    json r;
    r["d"] = theta.input_dim();
    r["e"] = theta.output_dim();
    r["l"] = theta.hidden();
    r["with_bias"] = theta.with_bias();
    r["charges"] = sig.c;
    r["l_plus"] = sig.l_plus;
    r["l_minus"] = sig.l_minus;
    r["l_zero"] = sig.l_zero;
    try {
        const auto poly = poincare_polynomial(sig);
        r["poincare"] = poly;
        r["betti"] = poly;
        r["beta0"] = betti(sig, 0);
    } catch (const DomainError& ex) {
        const std::string why = std::string("unrepresentable: ") + ex.what();
        r["poincare"] = why;
        r["betti"] = why;
        r["beta0"] = why;
    }
    const bool scalar_regime = theta.output_dim() == 1 && theta.input_block_dim() >= 2;
    if (!scalar_regime)
        r["sign_vector"] = theta.output_dim() != 1 ? "undefined: e>1 regime" : "undefined: d=1 regime";
    else if (sig.l_minus == 0)
        r["sign_vector"] = json::array();
    else
        r["sign_vector"] = sign_vector(theta, sig).s;
    try {
        r["effective_components"] = effective_component_count(sig);
    } catch (const UnsupportedRegimeError&) {
        r["effective_components"] = "undefined: d=1 regime";
    } catch (const DomainError& ex) {
        r["effective_components"] = std::string("unrepresentable: ") + ex.what();
    }
    json patho = json::array();
    if (theta.output_dim() == 1)
        for (std::size_t k : sig.neg_indices) patho.push_back(k + 1);
    r["pathological_neurons"] = patho;
    return r;
}

inline int cmd_diagnose(const DiagnoseOptions& opt, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        if (!(opt.zero_tol >= 0.0)) throw DomainError("--zero-tol must be >= 0");
        const Params theta = io::load_params(opt.params_path);
        out << diagnose_report(theta, opt.zero_tol).dump(2) << "\n";
        return ok;
    });
}

// ---------------------------------------------------------------- rescale

struct RescaleOptions {
    std::string params_path;
    std::optional<std::string> target_c; // comma-separated charges
    bool balanced = false;
    std::string out_path;
};

inline int cmd_rescale(const RescaleOptions& opt, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        if (opt.balanced == opt.target_c.has_value())
            throw ParseError("give exactly one of --target-c and --balanced");
        const Params theta = io::load_params(opt.params_path);
        const Vector target = opt.balanced ? Vector(theta.hidden(), 0.0) : parse_real_list(*opt.target_c);
        if (target.size() != theta.hidden())
            throw ParseError("--target-c has " + std::to_string(target.size()) + " entries, network has " +
                             std::to_string(theta.hidden()) + " hidden neurons");
        const auto [moved, alpha] = rescale_to_charges(theta, target);
        io::save_params(opt.out_path, moved);
        out << json{{"alpha", alpha.values()}, {"charges", charges(moved)}}.dump(2) << "\n";
        return ok;
    });
}

// ---------------------------------------------------------------- train

struct TrainOptions {
    std::optional<std::string> params_path;
    std::optional<std::string> init; // scheme, used when no params file is given
    std::size_t d = 2, e = 1, l = 2;
    std::string data = "toy"; // toy | csv:PATH
    std::uint64_t data_seed = 0;
    std::string loss = "mse";
    double lr = 0.01;
    std::size_t steps = 500;
    std::uint64_t seed = 0;
    std::size_t stride = 1;
    std::string out_path;
};

/// Steps (and negative-charge neuron, 1-based) at which a tracked sign differs from step 0.
inline std::vector<std::string> sign_flips(const std::vector<TrajectoryRecord>& records,
                                           const std::vector<std::size_t>& neg_indices) {
    std::vector<std::string> flips;
    if (records.empty() || !records.front().sign) return flips;
    const SignVector& s0 = *records.front().sign;
    for (const auto& r : records)
        for (std::size_t i = 0; i < s0.size(); ++i)
            if (r.sign->s[i] != s0.s[i])
                flips.push_back("step " + std::to_string(r.step) + " neuron " + std::to_string(neg_indices[i] + 1));
    return flips;
}

inline int cmd_train(const TrainOptions& opt, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        if (opt.params_path.has_value() == opt.init.has_value())
            throw ParseError("give exactly one of --params and --init");
        const Params theta0 = opt.params_path ? io::load_params(*opt.params_path)
                                              : sample_init(parse_scheme(*opt.init), opt.d, opt.e, opt.l, opt.seed);
        Dataset data;
        if (opt.data == "toy") {
            data = make_toy_dataset(8000, opt.data_seed);
        } else if (opt.data.rfind("csv:", 0) == 0) {
            data = io::load_dataset(opt.data.substr(4), theta0.input_dim());
        } else {
            throw ParseError("--data must be toy or csv:PATH");
        }
        TrainConfig tc;
        tc.loss_kind = parse_loss(opt.loss);
        tc.learning_rate = opt.lr;
        tc.steps = opt.steps;
        tc.record_stride = opt.stride;
        tc.seed = opt.seed;
        const auto sig = signature(theta0, tc.zero_tol);
        std::vector<TrajectoryRecord> records;
        try {
            records = train(theta0, data, tc);
        } catch (const DivergenceError& ex) {
            io::write_file(opt.out_path, io::serialize_trajectory(ex.records()));
            throw;
        }
        io::write_file(opt.out_path, io::serialize_trajectory(records));
        double drift = 0.0;
        for (const auto& r : records) drift = std::max(drift, r.max_charge_drift);
        const auto flips = sign_flips(records, sig.neg_indices);
        out << "final_loss: " << io::format_real(records.back().loss) << "\n";
        out << "max_drift: " << io::format_real(drift) << "\n";
        if (!records.front().sign) {
            out << "sign_flips: not tracked (no negative-charge neuron with scalar output)\n";
        } else if (flips.empty()) {
            out << "sign_flips: none\n";
        } else {
            out << "sign_flips:";
            for (const auto& f : flips) out << " [" << f << "]";
            out << "\n";
        }
        return ok;
    });
}

// ---------------------------------------------------------------- experiment

struct ExperimentOptions {
    std::string what;           // toy | tabular:PATH | synthetic
    std::size_t seeds = 20;     // replicates per (l, l_plus) cell
    std::string l_range = "6";  // hidden widths for the tabular sweep
    std::uint64_t seed = 0;     // toy dataset seed, or tabular base seed
    std::uint64_t init_seed = toy_default_init_seed;
    std::optional<std::size_t> steps; // default 500 (toy) or 2000 (tabular)
    double lr = 0.01;
    std::string out_dir = ".";
};

inline double max_drift(const std::vector<TrajectoryRecord>& records) {
    double drift = 0.0;
    for (const auto& r : records) drift = std::max(drift, r.max_charge_drift);
    return drift;
}

inline std::string tabular_summary_csv(const std::vector<TabularCell>& cells) {
    std::string s = "l,l_plus,mean_test_loss,std_test_loss,runs\n";
    for (const auto& c : cells)
        s += std::to_string(c.l) + "," + std::to_string(c.l_plus) + "," + io::format_real(c.mean_test_loss) + "," +
             io::format_real(c.std_test_loss) + "," + std::to_string(c.runs) + "\n";
    return s;
}

/// Mean test loss with one row per l and one column per l_plus; cells with l_plus > l are empty.
inline std::string tabular_matrix_csv(const std::vector<TabularCell>& cells) {
    std::size_t max_l = 0;
    for (const auto& c : cells) max_l = std::max(max_l, c.l);
    std::string s = "l";
    for (std::size_t lp = 0; lp <= max_l; ++lp) s += ",l_plus_" + std::to_string(lp);
    s += "\n";
    std::size_t i = 0;
    while (i < cells.size()) {
        const std::size_t l = cells[i].l;
        s += std::to_string(l);
        for (std::size_t lp = 0; lp <= max_l; ++lp) {
            s += ",";
            if (lp <= l) s += io::format_real(cells[i + lp].mean_test_loss);
        }
        s += "\n";
        i += l + 1;
    }
    return s;
}

inline int cmd_experiment(const ExperimentOptions& opt, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        std::filesystem::create_directories(opt.out_dir);
        const std::filesystem::path dir(opt.out_dir);
        if (opt.what == "toy") {
            ToyConfig cfg;
            cfg.data_seed = opt.seed;
            cfg.init_seed = opt.init_seed;
            cfg.learning_rate = opt.lr;
            cfg.steps = opt.steps.value_or(500);
            const ToyResult r = run_toy(cfg);
            io::write_file((dir / "toy_obstructed.csv").string(), io::serialize_trajectory(r.obstructed.records));
            io::write_file((dir / "toy_good.csv").string(), io::serialize_trajectory(r.good.records));
            const double ratio = r.obstructed.final_loss() / r.good.final_loss();
            const std::string summary =
                "obstructed_final_loss,good_final_loss,loss_ratio,obstructed_max_drift,good_max_drift\n" +
                io::format_real(r.obstructed.final_loss()) + "," + io::format_real(r.good.final_loss()) + "," +
                io::format_real(ratio) + "," + io::format_real(max_drift(r.obstructed.records)) + "," +
                io::format_real(max_drift(r.good.records)) + "\n";
            io::write_file((dir / "toy_summary.csv").string(), summary);
            out << summary;
            return ok;
        }
        Dataset data;
        if (opt.what == "synthetic") {
            data = make_synthetic_binary(600, 4, opt.seed);
        } else if (opt.what.rfind("tabular:", 0) == 0) {
            data = load_binary_classification(opt.what.substr(8));
        } else {
            throw ParseError("experiment must be toy, synthetic or tabular:PATH");
        }
        TabularConfig cfg;
        cfg.l_values = parse_range(opt.l_range);
        cfg.seeds = opt.seeds;
        cfg.base_seed = opt.seed;
        cfg.learning_rate = opt.lr;
        cfg.steps = opt.steps.value_or(2000);
        const auto cells = run_tabular(data, cfg);
        io::write_file((dir / "tabular_summary.csv").string(), tabular_summary_csv(cells));
        io::write_file((dir / "tabular_matrix.csv").string(), tabular_matrix_csv(cells));
        out << tabular_summary_csv(cells);
        return ok;
    });
}

// ---------------------------------------------------------------- prob

struct ProbOptions {
    std::string scheme = "kaiming";
    std::string d_range = "1:16";
    std::string l_range = "1:16";
    std::optional<std::size_t> mc_trials;
    std::uint64_t seed = 0;
    std::optional<std::string> out_path; // stdout when absent
};

inline int cmd_prob(const ProbOptions& opt, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const InitScheme scheme = parse_scheme(opt.scheme);
        if (!is_normal_family(scheme)) throw DomainError("the closed form needs a normal initialization scheme");
        const auto ds = parse_range(opt.d_range);
        const auto ls = parse_range(opt.l_range);
        const auto grid = prob_grid(ds, ls, scheme);
        std::string csv = opt.mc_trials ? "d,l,probability,mc_estimate,mc_std_error\n" : "d,l,probability\n";
        for (std::size_t i = 0; i < ds.size(); ++i)
            for (std::size_t j = 0; j < ls.size(); ++j) {
                csv += std::to_string(ds[i]) + "," + std::to_string(ls[j]) + "," + io::format_real(grid[i][j]);
                if (opt.mc_trials) {
                    const auto mc = monte_carlo_obstruction({ds[i], ls[j], scheme}, *opt.mc_trials,
                                                            derive_seed(opt.seed, {ds[i], ls[j]}));
                    csv += "," + io::format_real(mc.estimate) + "," + io::format_real(mc.std_error);
                }
                csv += "\n";
            }
        if (opt.out_path)
            io::write_file(*opt.out_path, csv);
        else
            out << csv;
        return ok;
    });
}

// ---------------------------------------------------------------- verify

struct VerifyOptions {
    std::string suite = "all";
    std::uint64_t seed = 0;
    std::size_t trials = 100000;
    double kink_slope = 0.0;
};

inline int cmd_verify(const VerifyOptions& opt, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        if (opt.suite != "all" && std::find(suite_names().begin(), suite_names().end(), opt.suite) == suite_names().end())
            throw ParseError("unknown suite '" + opt.suite + "'");
        if (opt.trials == 0) throw ParseError("--trials must be >= 1");
        VerifyConfig cfg{opt.seed, opt.trials, opt.kink_slope};
        const auto reports = run_verify(opt.suite, cfg);
        const json doc = verify_report_json(reports, cfg);
        out << doc.dump(2) << "\n";
        for (const auto& rep : reports)
            for (const auto& w : rep.warnings) err << "warning: " << rep.suite << ": " << w << "\n";
        if (doc["passed"].get<bool>()) return ok;
        err << "failed properties:";
        for (const auto& rep : reports)
            for (const auto& r : rep.results)
                if (!r.passed) err << " " << rep.suite << "/" << r.name;
        err << "\n";
        return verify_failed;
    });
}

} // namespace qflow::cli
