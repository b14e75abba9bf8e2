#include "hetnet/simbench.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "hetnet/baselines.hpp"
#include "hetnet/error.hpp"
#include "hetnet/parallel.hpp"
#include "hetnet/rng.hpp"

namespace hetnet {

const char* to_string(Setting s) noexcept { return s == Setting::linear ? "linear" : "nonlinear"; }

Setting parse_setting(const std::string& s) {
    if (s == "linear") return Setting::linear;
    if (s == "nonlinear") return Setting::nonlinear;
    throw InvalidArgument("unknown setting '" + s + "' (expected linear or nonlinear)");
}

AttributeMatrix gen_attributes(std::size_t n, std::size_t p, std::uint64_t seed, bool redraw_near_zero) {
    if (n == 0 || p == 0) throw InvalidArgument("gen_attributes: n and p must be positive");
    CounterRng rng(seed);
    Eigen::MatrixXd values{Eigen::Index(n), Eigen::Index(p)};
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < p; ++k) {
            double v = rng.uniform(-1.0, 1.0);
            if (redraw_near_zero && k < kDesignColumns) {
                while (std::fabs(v) < kNearZero) v = rng.uniform(-1.0, 1.0);
            }
            values(Eigen::Index(i), Eigen::Index(k)) = v;
        }
    }
    return AttributeMatrix(std::move(values));
}

namespace {

void require_design_width(const AttributeMatrix& x) {
    if (x.p() < kDesignColumns) {
        throw InvalidArgument("simulation designs need p >= 10 (got p = " + std::to_string(x.p()) + ")");
    }
}

GroundTruth empty_truth(const AttributeMatrix& x, double z_n, Setting setting) {
    if (!(z_n > 0.0)) throw InvalidArgument("z_n must be positive");
    GroundTruth truth;
    truth.alpha0.resize(Eigen::Index(x.n()));
    truth.beta0.resize(Eigen::Index(x.n()));
    truth.a_alpha = {0, 1, 2, 3, 4};
    truth.a_beta = {5, 6, 7, 8, 9};
    truth.z_n = z_n;
    truth.setting = setting;
    return truth;
}

}  // namespace

GroundTruth linear_truth(const AttributeMatrix& x, double z_n) {
    require_design_width(x);
    auto truth = empty_truth(x, z_n, Setting::linear);
    for (std::size_t i = 0; i < x.n(); ++i) {
        double a = 0.0;
        double b = 0.0;
        for (std::size_t k = 0; k < 5; ++k) {
            a += x(i, k);
            b += x(i, k + 5);
        }
        truth.alpha0[Eigen::Index(i)] = a;
        truth.beta0[Eigen::Index(i)] = b;
    }
    return truth;
}

GroundTruth nonlinear_truth(const AttributeMatrix& x, double z_n) {
    require_design_width(x);
    auto truth = empty_truth(x, z_n, Setting::nonlinear);
    auto block = [&](std::size_t i, std::size_t first) {
        const double v0 = std::fabs(x(i, first));
        const double v1 = std::fabs(x(i, first + 1));
        const double v2 = std::fabs(x(i, first + 2));
        const double v3 = std::fabs(x(i, first + 3));
        const double v4 = std::fabs(x(i, first + 4));
        if (v2 < kNearZero || v3 + v4 < kNearZero) {
            throw InvalidArgument("nonlinear design: near-zero attribute in row " + std::to_string(i) +
                                  " (regenerate with redraw_near_zero)");
        }
        return 5.0 * (v0 + v1 + std::log(v2) + std::log(v3 + v4));
    };
    for (std::size_t i = 0; i < x.n(); ++i) {
        truth.alpha0[Eigen::Index(i)] = block(i, 0);
        truth.beta0[Eigen::Index(i)] = block(i, 5);
    }
    return truth;
}

CountNetwork sample_network(const GroundTruth& truth, std::uint64_t seed, SampleStats* stats) {
    const auto n = std::size_t(truth.alpha0.size());
    if (std::size_t(truth.beta0.size()) != n) throw InvalidArgument("sample_network: alpha0/beta0 length mismatch");
    if (!truth.alpha0.allFinite() || !truth.beta0.allFinite()) {
        throw InvalidArgument("sample_network: non-finite heterogeneity values");
    }
    CounterRng rng(seed);
    std::vector<Edge> edges;
    std::size_t clamped = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            double log_rate = (truth.alpha0[Eigen::Index(i)] + truth.beta0[Eigen::Index(j)]) / truth.z_n;
            if (log_rate > kMaxSimLogRate) {
                log_rate = kMaxSimLogRate;
                ++clamped;
            }
            const auto count = sample_poisson(rng, std::exp(log_rate));
            if (count > 0) edges.push_back({NodeIndex(i), NodeIndex(j), count});
        }
    }
    if (stats) stats->clamped_pairs = clamped;
    return CountNetwork(n, std::move(edges));
}

double mse(const Eigen::VectorXd& est, const Eigen::VectorXd& truth) {
    if (est.size() != truth.size()) throw InvalidArgument("mse: length mismatch");
    if (est.size() == 0) return 0.0;
    return (est - truth).squaredNorm() / double(est.size());
}

double rmse(const Eigen::VectorXd& est, const Eigen::VectorXd& truth) { return std::sqrt(mse(est, truth)); }

double aggregate_rmse(const std::vector<double>& per_replication_mse) {
    if (per_replication_mse.empty()) return 0.0;
    double total = 0.0;
    for (double v : per_replication_mse) total += v;
    return std::sqrt(total / double(per_replication_mse.size()));
}

SelectionMetrics selection_metrics(const FeatureSet& s_hat, const FeatureSet& s_true) {
    if (s_true.empty()) throw InvalidArgument("selection_metrics: true set is empty");
    std::size_t hits = 0;
    for (auto k : s_hat) hits += s_true.count(k);
    SelectionMetrics m;
    m.precision = s_hat.empty() ? 0.0 : double(hits) / double(s_hat.size());
    m.tpr = double(hits) / double(s_true.size());
    m.f1 = 2.0 * double(hits) / double(s_hat.size() + s_true.size());
    return m;
}

ReplicationData make_replication(const EvaluationConfig& config, std::size_t r) {
    ReplicationData data;
    data.replication = r;
    data.seed = derive_seed(config.base_seed, r);
    const bool nonlinear = config.setting == Setting::nonlinear;
    data.x = gen_attributes(config.n, config.p, derive_seed(data.seed, 0), nonlinear);
    data.truth = nonlinear ? nonlinear_truth(data.x, config.sim_z_n) : linear_truth(data.x, config.sim_z_n);
    data.truth.seed = data.seed;
    data.network = sample_network(data.truth, derive_seed(data.seed, 1));
    return data;
}

namespace {

MetricSummary summarize(const std::vector<double>& values) {
    MetricSummary s;
    if (values.empty()) return s;
    double total = 0.0;
    for (double v : values) total += v;
    s.mean = total / double(values.size());
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - s.mean) * (v - s.mean);
        s.sd = std::sqrt(ss / double(values.size() - 1));
    }
    return s;
}

}  // namespace

MetricsReport run_replications(const EvaluationConfig& config,
                               const std::vector<std::pair<std::string, MethodFn>>& methods) {
    if (config.replications == 0) throw InvalidArgument("run_replications: need at least one replication");
    if (methods.empty()) throw InvalidArgument("run_replications: no methods");
    const std::size_t reps = config.replications;
    std::vector<std::vector<RawRow>> rows(reps);
    std::vector<std::uint64_t> seeds(reps);

    parallel_for(reps, config.jobs, [&](std::size_t idx) {
        const auto data = make_replication(config, idx + 1);
        seeds[idx] = data.seed;
        for (const auto& [name, method] : methods) {
            RawRow alpha_row;
            alpha_row.replication = data.replication;
            alpha_row.seed = data.seed;
            alpha_row.method = name;
            alpha_row.side = "alpha";
            RawRow beta_row = alpha_row;
            beta_row.side = "beta";
            try {
                const auto out = method(data);
                alpha_row.mse = mse(out.alpha_hat, data.truth.alpha0);
                beta_row.mse = mse(out.beta_hat, data.truth.beta0);
                alpha_row.rmse = std::sqrt(alpha_row.mse);
                beta_row.rmse = std::sqrt(beta_row.mse);
                if (out.s_alpha) alpha_row.selection = selection_metrics(*out.s_alpha, data.truth.a_alpha);
                if (out.s_beta) beta_row.selection = selection_metrics(*out.s_beta, data.truth.a_beta);
                if (!std::isfinite(alpha_row.mse) || !std::isfinite(beta_row.mse)) {
                    throw Error("non-finite estimate");
                }
            } catch (const std::exception& e) {
                alpha_row.failed = beta_row.failed = true;
                alpha_row.error = beta_row.error = e.what();
                alpha_row.selection.reset();
                beta_row.selection.reset();
            }
            rows[idx].push_back(std::move(alpha_row));
            rows[idx].push_back(std::move(beta_row));
        }
    });

    MetricsReport report;
    report.setting = to_string(config.setting);
    report.replications = reps;
    report.seeds = seeds;
    for (const auto& [name, fn] : methods) {
        report.methods.push_back(name);
        report.failures[name] = 0;
    }
    for (auto& rep_rows : rows)
        for (auto& row : rep_rows) report.raw.push_back(std::move(row));

    for (const auto& name : report.methods) {
        for (const char* side : {"alpha", "beta"}) {
            std::vector<double> mses, rmses, prec, tpr, f1;
            bool has_selection = false;
            for (const auto& row : report.raw) {
                if (row.method != name || row.side != side || row.failed) continue;
                mses.push_back(row.mse);
                rmses.push_back(row.rmse);
                if (row.selection) {
                    has_selection = true;
                    prec.push_back(row.selection->precision);
                    tpr.push_back(row.selection->tpr);
                    f1.push_back(row.selection->f1);
                }
            }
            SideSummary summary;
            summary.successes = mses.size();
            summary.rmse.mean = aggregate_rmse(mses);
            summary.rmse.sd = summarize(rmses).sd;
            if (has_selection) {
                summary.precision = summarize(prec);
                summary.tpr = summarize(tpr);
                summary.f1 = summarize(f1);
            }
            report.summary[name][side] = summary;
        }
        for (const auto& row : report.raw) {
            if (row.method == name && row.side == "alpha" && row.failed) ++report.failures[name];
        }
    }
    return report;
}

MethodFn oracle_method() {
    return [](const ReplicationData& data) {
        MethodOutput out;
        out.alpha_hat = data.truth.alpha0;
        out.beta_hat = data.truth.beta0;
        out.s_alpha = data.truth.a_alpha;
        out.s_beta = data.truth.a_beta;
        return out;
    };
}

MethodFn mle_method(double z_n) {
    return [z_n](const ReplicationData& data) {
        const auto est = mle_fit(data.network, z_n);
        return MethodOutput{est.alpha_hat, est.beta_hat, std::nullopt, std::nullopt};
    };
}

MethodFn mle_lasso_method(double z_n) {
    return [z_n](const ReplicationData& data) {
        const auto res = two_stage_select(data.network, data.x, z_n);
        return MethodOutput{res.alpha_hat, res.beta_hat, res.s_alpha, res.s_beta};
    };
}

MethodFn networknet_method(const NetworkNetMethodConfig& config) {
    return [config](const ReplicationData& data) {
        FitConfig fit_config = config.fit;
        fit_config.seed = derive_seed(data.seed, 2) ^ config.fit.seed;
        std::vector<GridPoint> grid = config.fixed_grid;
        if (grid.empty()) {
            const auto lmax = null_lambda_max(data.network, data.x, fit_config.z_n);
            grid = default_lambda_grid(lmax, config.grid_size, fit_config.m, config.grid_hi_fraction,
                                       config.grid_lo_fraction);
        }
        auto tuned = grid_search(data.network, data.x, fit_config, grid, 1, config.scoring);
        auto& est = tuned.best_estimate;
        return MethodOutput{est.alpha_hat, est.beta_hat, est.s_alpha, est.s_beta};
    };
}

namespace {

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

}  // namespace

void write_metrics_csv(std::ostream& out, const MetricsReport& report) {
    out << "method,side,metric,mean,sd,R\n";
    for (const auto& name : report.methods) {
        const auto& sides = report.summary.at(name);
        for (const char* side : {"alpha", "beta"}) {
            const auto& s = sides.at(side);
            auto row = [&](const char* metric, const MetricSummary& m) {
                out << name << ',' << side << ',' << metric << ',' << fmt_double(m.mean) << ',' << fmt_double(m.sd)
                    << ',' << s.successes << '\n';
            };
            row("rmse", s.rmse);
            if (s.precision) row("precision", *s.precision);
            if (s.tpr) row("tpr", *s.tpr);
            if (s.f1) row("f1", *s.f1);
        }
    }
    for (const auto& name : report.methods) {
        out << name << ",all,failures," << report.failures.at(name) << ",0," << report.replications << '\n';
    }
}

void write_replication_raw_csv(std::ostream& out, const MetricsReport& report) {
    out << "replication,seed,method,side,rmse,precision,tpr,f1,failed\n";
    for (const auto& row : report.raw) {
        out << row.replication << ',' << row.seed << ',' << row.method << ',' << row.side << ',';
        if (row.failed) {
            out << ",,,,1\n";
            continue;
        }
        out << fmt_double(row.rmse) << ',';
        if (row.selection) {
            out << fmt_double(row.selection->precision) << ',' << fmt_double(row.selection->tpr) << ','
                << fmt_double(row.selection->f1);
        } else {
            out << ",,";
        }
        out << ",0\n";
    }
}

}  // namespace hetnet
