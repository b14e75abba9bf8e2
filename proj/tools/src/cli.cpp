#include "cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>

#include "hetnet/baselines.hpp"
#include "hetnet/error.hpp"
#include "hetnet/importance.hpp"
#include "hetnet/rng.hpp"
#include "hetnet/serialize.hpp"

namespace hetnet::cli {

namespace fs = std::filesystem;

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    return out;
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error("cannot create output directory " + dir.string() + ": " + ec.message());
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(item);
    return out;
}

HbicScoring parse_scoring(const std::string& s) {
    if (s == "refit") return HbicScoring::refit;
    if (s == "penalized") return HbicScoring::penalized;
    throw InvalidArgument("unknown scoring '" + s + "' (expected refit or penalized)");
}

struct InputData {
    CountNetwork network;
    AttributeMatrix x;
};

InputData load_inputs(const std::string& edges, const std::string& attributes) {
    InputData data;
    data.x = load_attributes_file(attributes);
    data.network = load_edge_list_file(edges, data.x.n());
    return data;
}

FitConfig load_config(const std::string& path, std::optional<std::uint64_t> seed) {
    FitConfig config = path.empty() ? FitConfig{} : fit_config_from_json(read_json_file(path));
    if (seed) config.seed = *seed;
    config.validate();
    return config;
}

void write_fit_log(const fs::path& path, const HeterogeneityEstimate& est) {
    auto out = open_out(path);
    out << "iteration,nll,l1_alpha,l1_beta,ident_penalty,total,delta_alpha,delta_beta\n";
    for (const auto& r : est.history) {
        out << r.iteration << ',' << fmt(r.loss.nll) << ',' << fmt(r.loss.l1_alpha) << ',' << fmt(r.loss.l1_beta)
            << ',' << fmt(r.loss.ident_penalty) << ',' << fmt(r.loss.total) << ',' << fmt(r.delta_alpha) << ','
            << fmt(r.delta_beta) << '\n';
    }
}

void write_fit_artifacts(const fs::path& dir, const HeterogeneityEstimate& est) {
    ModelFile alpha{est.net_alpha, Json{{"side", "alpha"}, {"centering_shift", est.centering_shift}}};
    ModelFile beta{est.net_beta, Json{{"side", "beta"}, {"centering_shift", -est.centering_shift}}};
    save_model(dir / "model_alpha.json", alpha);
    save_model(dir / "model_beta.json", beta);
    write_json_file(dir / "estimate.json", estimate_to_json(est));
    write_fit_log(dir / "fit_log.csv", est);
}

struct SimulateArgs {
    std::string setting = "linear";
    std::size_t n = 100;
    std::size_t p = 200;
    std::uint64_t seed = 0;
    double z_n = 1.0;
    std::string out;
};

int cmd_simulate(const SimulateArgs& a, Streams io) {
    const Setting setting = parse_setting(a.setting);
    if (a.p < kDesignColumns) throw InvalidArgument("p must be >= 10");
    if (a.n < 2) throw InvalidArgument("n must be >= 2");
    const auto x = gen_attributes(a.n, a.p, derive_seed(a.seed, 0), setting == Setting::nonlinear);
    auto truth = setting == Setting::linear ? linear_truth(x, a.z_n) : nonlinear_truth(x, a.z_n);
    truth.seed = a.seed;
    SampleStats stats;
    const auto network = sample_network(truth, derive_seed(a.seed, 1), &stats);
    if (stats.clamped_pairs > 0) {
        io.err << "warning: " << stats.clamped_pairs << " pair rates clamped at log-rate " << kMaxSimLogRate << '\n';
    }
    const fs::path dir(a.out);
    ensure_dir(dir);
    {
        auto out = open_out(dir / "edges.csv");
        write_edge_list(out, network);
    }
    {
        auto out = open_out(dir / "attributes.csv");
        write_attributes(out, x);
    }
    write_json_file(dir / "truth.json", truth_to_json(truth));
    return kExitOk;
}

struct FitArgs {
    std::string edges;
    std::string attributes;
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
};

int cmd_fit(const FitArgs& a, Streams io) {
    const auto config = load_config(a.config, a.seed);
    const auto data = load_inputs(a.edges, a.attributes);
    const auto est = fit(data.network, data.x, config);
    const fs::path dir(a.out);
    ensure_dir(dir);
    write_fit_artifacts(dir, est);
    if (!est.converged) io.err << "note: stopped at t_max_outer = " << config.t_max_outer << " without converging\n";
    return kExitOk;
}

struct TuneArgs : FitArgs {
    std::string grid;
    std::size_t grid_size = 5;
    double grid_hi = 1.0;
    double grid_lo = 0.1;
    std::string scoring = "refit";
    unsigned jobs = 1;
};

int cmd_tune(const TuneArgs& a, Streams io) {
    const auto config = load_config(a.config, a.seed);
    const auto scoring = parse_scoring(a.scoring);
    const auto data = load_inputs(a.edges, a.attributes);
    const auto grid = a.grid.empty()
                          ? default_lambda_grid(null_lambda_max(data.network, data.x, config.z_n), a.grid_size,
                                                config.m, a.grid_hi, a.grid_lo)
                          : grid_from_json(read_json_file(a.grid));
    const auto result = grid_search(data.network, data.x, config, grid, a.jobs, scoring);
    const fs::path dir(a.out);
    ensure_dir(dir);
    {
        auto out = open_out(dir / "tuning.csv");
        out << "lambda1,lambda2,M,s_total,nll,hbic,fit_nll,failed\n";
        for (const auto& row : result.table) {
            out << fmt(row.point.lambda1) << ',' << fmt(row.point.lambda2) << ',' << fmt(row.point.m) << ','
                << row.s_total << ',' << fmt(row.nll) << ',' << fmt(row.hbic) << ',' << fmt(row.fit_nll) << ','
                << (row.failed ? 1 : 0) << '\n';
        }
    }
    write_fit_artifacts(dir, result.best_estimate);
    io.err << "best grid point " << result.best_index << ": lambda1 = " << fmt(result.best_config.lambda1)
           << ", lambda2 = " << fmt(result.best_config.lambda2) << ", M = " << fmt(result.best_config.m) << '\n';
    return kExitOk;
}

struct EvaluateArgs {
    std::string setting = "linear";
    std::size_t n = 100;
    std::size_t p = 200;
    std::size_t replications = 1;
    std::string methods = "networknet,mle,mle_lasso";
    std::uint64_t seed = 0;
    unsigned jobs = 1;
    double z_n = 1.0;
    std::string config;
    std::size_t grid_size = 5;
    double grid_hi = 1.0;
    double grid_lo = 0.1;
    std::string scoring = "refit";
    std::string out;
};

int cmd_evaluate(const EvaluateArgs& a, Streams io, const std::map<std::string, MethodFactory>& registry) {
    EvaluationConfig ec;
    ec.setting = parse_setting(a.setting);
    if (a.p < kDesignColumns) throw InvalidArgument("p must be >= 10");
    if (a.n < 2) throw InvalidArgument("n must be >= 2");
    if (a.replications == 0) throw InvalidArgument("replications must be >= 1");
    ec.n = a.n;
    ec.p = a.p;
    ec.replications = a.replications;
    ec.base_seed = a.seed;
    ec.sim_z_n = a.z_n;
    ec.jobs = a.jobs;

    MethodContext ctx;
    ctx.z_n = a.z_n;
    ctx.networknet.fit = load_config(a.config, std::nullopt);
    ctx.networknet.fit.z_n = a.z_n;
    ctx.networknet.grid_size = a.grid_size;
    ctx.networknet.grid_hi_fraction = a.grid_hi;
    ctx.networknet.grid_lo_fraction = a.grid_lo;
    ctx.networknet.scoring = parse_scoring(a.scoring);

    std::vector<std::pair<std::string, MethodFn>> methods;
    for (const auto& name : split_list(a.methods)) {
        auto it = registry.find(name);
        if (it == registry.end()) throw InvalidArgument("unknown method '" + name + "'");
        methods.emplace_back(name, it->second(ctx));
    }
    if (methods.empty()) throw InvalidArgument("--methods is empty");

    const auto report = run_replications(ec, methods);
    const fs::path dir(a.out);
    ensure_dir(dir);
    {
        auto out = open_out(dir / "metrics.csv");
        write_metrics_csv(out, report);
    }
    {
        auto out = open_out(dir / "replication_raw.csv");
        write_replication_raw_csv(out, report);
    }
    for (const auto& [name, count] : report.failures) {
        if (count > 0) io.err << "warning: " << name << " failed on " << count << " replication(s)\n";
    }
    return kExitOk;
}

struct ImportanceArgs {
    std::string model;
    std::string attributes;
    std::size_t samples = 1000;
    std::uint64_t seed = 0;
    std::string side;
    std::size_t max_nodes = 500;
    unsigned jobs = 1;
    std::string out;
};

int cmd_importance(const ImportanceArgs& a, Streams) {
    const auto model = load_model(a.model);
    const auto x = load_attributes_file(a.attributes);
    if (model.net.p() != x.p()) {
        throw InvalidArgument("model expects " + std::to_string(model.net.p()) + " attributes but " + a.attributes +
                              " has " + std::to_string(x.p()));
    }
    std::string side = a.side;
    if (side.empty()) {
        auto it = model.extras.find("side");
        side = it != model.extras.end() && it->is_string() ? it->get<std::string>() : "alpha";
    }
    if (side != "alpha" && side != "beta") throw InvalidArgument("side must be alpha or beta");

    ShapleyOptions options;
    options.samples = a.samples;
    options.max_nodes = a.max_nodes;
    options.jobs = a.jobs;
    options.side = side == "alpha" ? Side::alpha : Side::beta;
    const auto features = selected_features(model.net);
    const fs::path dir(a.out);
    ensure_dir(dir);
    auto out = open_out(dir / "importance.csv");
    if (features.empty()) {
        out << "side,feature_index,feature_name,mean_abs_shap,stderr,rank\n";
        return kExitOk;
    }
    const auto report = shapley_importance(model.net, x, features, a.seed, options);
    write_importance_csv(out, report);
    return kExitOk;
}

}  // namespace

std::map<std::string, MethodFactory> builtin_methods() {
    return {
        {"networknet", [](const MethodContext& c) { return networknet_method(c.networknet); }},
        {"mle", [](const MethodContext& c) { return mle_method(c.z_n); }},
        {"mle_lasso", [](const MethodContext& c) { return mle_lasso_method(c.z_n); }},
    };
}

int run(const std::vector<std::string>& args, Streams io, const std::map<std::string, MethodFactory>& methods) {
    CLI::App app{"Attribute-driven heterogeneity estimation for count-valued directed networks", "hetnet"};
    app.require_subcommand(1);

    SimulateArgs sim;
    auto* simulate = app.add_subcommand("simulate", "Generate a synthetic network with known heterogeneity");
    simulate->add_option("--setting", sim.setting, "linear or nonlinear")->check(CLI::IsMember({"linear", "nonlinear"}));
    simulate->add_option("--n", sim.n, "Number of nodes")->required();
    simulate->add_option("--p", sim.p, "Number of attributes")->required();
    simulate->add_option("--seed", sim.seed, "Random seed")->required();
    simulate->add_option("--zn", sim.z_n, "Log-rate scaling constant")->check(CLI::PositiveNumber);
    simulate->add_option("--out", sim.out, "Output directory")->required();

    FitArgs fa;
    auto* fit_cmd = app.add_subcommand("fit", "Fit both heterogeneity networks at fixed penalties");
    auto add_fit_options = [](CLI::App* cmd, FitArgs& f) {
        cmd->add_option("--edges", f.edges, "Edge list CSV (src,dst,count)")->required()->check(CLI::ExistingFile);
        cmd->add_option("--attributes", f.attributes, "Attribute CSV")->required()->check(CLI::ExistingFile);
        cmd->add_option("--config", f.config, "config.json")->check(CLI::ExistingFile);
        cmd->add_option("--out", f.out, "Output directory")->required();
        cmd->add_option("--seed", f.seed, "Overrides the config seed");
    };
    add_fit_options(fit_cmd, fa);

    TuneArgs ta;
    auto* tune = app.add_subcommand("tune", "Pick penalties on a grid by HBIC");
    add_fit_options(tune, ta);
    tune->add_option("--grid", ta.grid, "grid.json: array of {lambda1, lambda2, M}")->check(CLI::ExistingFile);
    tune->add_option("--grid-size", ta.grid_size, "Values per penalty when no grid file is given")
        ->check(CLI::PositiveNumber);
    tune->add_option("--grid-hi", ta.grid_hi, "Largest penalty as a fraction of lambda_max")->check(CLI::PositiveNumber);
    tune->add_option("--grid-lo", ta.grid_lo, "Smallest penalty as a fraction of lambda_max")->check(CLI::PositiveNumber);
    tune->add_option("--scoring", ta.scoring, "refit or penalized")->check(CLI::IsMember({"refit", "penalized"}));
    tune->add_option("--jobs", ta.jobs, "Parallel grid fits")->check(CLI::PositiveNumber);

    EvaluateArgs ea;
    auto* evaluate = app.add_subcommand("evaluate", "Replicated simulation comparing estimators");
    evaluate->add_option("--setting", ea.setting, "linear or nonlinear")->check(CLI::IsMember({"linear", "nonlinear"}));
    evaluate->add_option("--n", ea.n, "Number of nodes");
    evaluate->add_option("--p", ea.p, "Number of attributes");
    evaluate->add_option("--replications", ea.replications, "Number of replications");
    evaluate->add_option("--methods", ea.methods, "Comma-separated method names");
    evaluate->add_option("--seed", ea.seed, "Base seed")->required();
    evaluate->add_option("--jobs", ea.jobs, "Parallel replications")->check(CLI::PositiveNumber);
    evaluate->add_option("--zn", ea.z_n, "Log-rate scaling constant")->check(CLI::PositiveNumber);
    evaluate->add_option("--config", ea.config, "config.json for networknet")->check(CLI::ExistingFile);
    evaluate->add_option("--grid-size", ea.grid_size, "Values per penalty")->check(CLI::PositiveNumber);
    evaluate->add_option("--grid-hi", ea.grid_hi, "Largest penalty fraction")->check(CLI::PositiveNumber);
    evaluate->add_option("--grid-lo", ea.grid_lo, "Smallest penalty fraction")->check(CLI::PositiveNumber);
    evaluate->add_option("--scoring", ea.scoring, "refit or penalized")->check(CLI::IsMember({"refit", "penalized"}));
    evaluate->add_option("--out", ea.out, "Output directory")->required();

    ImportanceArgs ia;
    auto* importance = app.add_subcommand("importance", "Shapley attribution of a fitted model");
    importance->add_option("--model", ia.model, "model_alpha.json or model_beta.json")->required()->check(
        CLI::ExistingFile);
    importance->add_option("--attributes", ia.attributes, "Attribute CSV")->required()->check(CLI::ExistingFile);
    importance->add_option("--samples", ia.samples, "Permutations per node")->check(CLI::PositiveNumber);
    importance->add_option("--seed", ia.seed, "Random seed")->required();
    importance->add_option("--side", ia.side, "alpha or beta (default: from the model)")
        ->check(CLI::IsMember({"alpha", "beta"}));
    importance->add_option("--max-nodes", ia.max_nodes, "Node subsample size");
    importance->add_option("--jobs", ia.jobs, "Parallel nodes")->check(CLI::PositiveNumber);
    importance->add_option("--out", ia.out, "Output directory")->required();

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        const auto subs = app.get_subcommands();
        io.out << (subs.empty() ? app.help() : subs.front()->help());
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        io.err << "error: " << e.what() << "\nRun with --help for usage.\n";
        return kExitUsage;
    }

    try {
        if (simulate->parsed()) return cmd_simulate(sim, io);
        if (fit_cmd->parsed()) return cmd_fit(fa, io);
        if (tune->parsed()) return cmd_tune(ta, io);
        if (evaluate->parsed()) return cmd_evaluate(ea, io, methods);
        if (importance->parsed()) return cmd_importance(ia, io);
    } catch (const InvalidArgument& e) {
        io.err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const ParseError& e) {
        io.err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        io.err << "error: " << e.what() << '\n';
        return kExitFailure;
    }
    return kExitUsage;
}

}  // namespace hetnet::cli
