// quadricflow command-line tool.

#include <iostream>

#include "CLI11.hpp"

#include "quadricflow/commands.hpp"

namespace cli = qflow::cli;

int main(int argc, char** argv) {
    std::uint64_t seed_default = 0;
    try {
        seed_default = cli::default_seed();
    } catch (const qflow::ParseError& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return cli::input_error;
    }

    CLI::App app{"Invariant-set topology and training diagnostics for two-layer ReLU networks"};
    app.require_subcommand(1);

    cli::DiagnoseOptions diag;
    auto* diagnose = app.add_subcommand("diagnose", "Charges, Betti numbers and component labels of a network");
    diagnose->add_option("params", diag.params_path, "ParamsFile (JSON)")->required();
    diagnose->add_option("--zero-tol", diag.zero_tol, "Charges with |c| <= tol count as zero");

    cli::RescaleOptions resc;
    std::string target_c;
    auto* rescale = app.add_subcommand("rescale", "Rescale onto target charges without changing the function");
    rescale->add_option("params", resc.params_path, "ParamsFile (JSON)")->required();
    auto* target_opt = rescale->add_option("--target-c", target_c, "Comma-separated target charges");
    auto* balanced_opt = rescale->add_flag("--balanced", resc.balanced, "Target all charges 0");
    target_opt->excludes(balanced_opt);
    rescale->add_option("-o,--out", resc.out_path, "Output ParamsFile")->required();

    cli::TrainOptions tr;
    tr.seed = seed_default;
    tr.data_seed = seed_default;
    std::string params_path, init_scheme;
    auto* train = app.add_subcommand("train", "Full-batch gradient descent with charge and sign monitoring");
    auto* params_opt = train->add_option("--params", params_path, "Initial ParamsFile (JSON)");
    auto* init_opt = train->add_option("--init", init_scheme, "kaiming | xavier | uniform[:a] | normal:s1,s2");
    params_opt->excludes(init_opt);
    train->add_option("--d", tr.d, "Input dimension (with --init)");
    train->add_option("--e", tr.e, "Output dimension (with --init)");
    train->add_option("--l", tr.l, "Hidden width (with --init)");
    train->add_option("--data", tr.data, "toy | csv:PATH");
    train->add_option("--data-seed", tr.data_seed, "Seed of the toy dataset");
    train->add_option("--loss", tr.loss, "mse | bce");
    train->add_option("--lr", tr.lr, "Learning rate");
    train->add_option("--steps", tr.steps, "Number of gradient steps");
    train->add_option("--seed", tr.seed, "Initialization seed (with --init)");
    train->add_option("--stride", tr.stride, "Record every n-th step");
    train->add_option("-o,--out", tr.out_path, "Output TrajectoryFile (CSV)")->required();

    cli::ExperimentOptions ex;
    ex.seed = seed_default;
    std::size_t ex_steps = 0;
    auto* experiment = app.add_subcommand("experiment", "Toy obstruction experiment or tabular l_plus sweep");
    experiment->add_option("what", ex.what, "toy | synthetic | tabular:PATH")->required();
    experiment->add_option("--seeds", ex.seeds, "Replicates per (l, l_plus) cell");
    experiment->add_option("--l-range", ex.l_range, "Hidden widths a or a:b");
    experiment->add_option("--seed", ex.seed, "Dataset seed (toy) or base seed (tabular)");
    experiment->add_option("--init-seed", ex.init_seed, "Initialization seed of the toy networks");
    auto* steps_opt = experiment->add_option("--steps", ex_steps, "Gradient steps per run");
    experiment->add_option("--lr", ex.lr, "Learning rate");
    experiment->add_option("--out-dir", ex.out_dir, "Output directory");

    cli::ProbOptions pr;
    pr.seed = seed_default;
    std::size_t mc_trials = 0;
    std::string prob_out;
    auto* prob = app.add_subcommand("prob", "Obstruction probability grid under normal initializations");
    prob->add_option("--scheme", pr.scheme, "kaiming | xavier | normal:s1,s2");
    prob->add_option("--d-range", pr.d_range, "Input dimensions a or a:b");
    prob->add_option("--l-range", pr.l_range, "Hidden widths a or a:b");
    auto* mc_opt = prob->add_option("--mc", mc_trials, "Add Monte Carlo estimates with this many trials");
    prob->add_option("--seed", pr.seed, "Monte Carlo seed");
    auto* prob_out_opt = prob->add_option("-o,--out", prob_out, "Output CSV (default stdout)");

    cli::VerifyOptions ve;
    ve.seed = seed_default;
    auto* verify = app.add_subcommand("verify", "Run the property suites");
    verify->add_option("--suite", ve.suite, "all | conservation | topology | gradcheck | prob");
    verify->add_option("--seed", ve.seed, "Seed for the random cases");
    verify->add_option("--trials", ve.trials, "Monte Carlo trials per probability query");
    verify->add_option("--kink-slope", ve.kink_slope, "sigma'(0) used by the analytic gradient");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? cli::ok : cli::input_error;
    }

    if (*diagnose) return cli::cmd_diagnose(diag, std::cout, std::cerr);
    if (*rescale) {
        if (*target_opt) resc.target_c = target_c;
        return cli::cmd_rescale(resc, std::cout, std::cerr);
    }
    if (*train) {
        if (*params_opt) tr.params_path = params_path;
        if (*init_opt) tr.init = init_scheme;
        return cli::cmd_train(tr, std::cout, std::cerr);
    }
    if (*experiment) {
        if (*steps_opt) ex.steps = ex_steps;
        return cli::cmd_experiment(ex, std::cout, std::cerr);
    }
    if (*prob) {
        if (*mc_opt) pr.mc_trials = mc_trials;
        if (*prob_out_opt) pr.out_path = prob_out;
        return cli::cmd_prob(pr, std::cout, std::cerr);
    }
    return cli::cmd_verify(ve, std::cout, std::cerr);
}
