#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "cli.hpp"
#include "hetnet/netdata.hpp"
#include "hetnet/serialize.hpp"
#include "hetnet/skipnet.hpp"

using namespace hetnet;
namespace fs = std::filesystem;

namespace {

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("hetnet_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    int run(std::vector<std::string> args, const std::map<std::string, cli::MethodFactory>& methods =
                                               cli::builtin_methods()) {
        out_.str("");
        err_.str("");
        return cli::run(args, {out_, err_}, methods);
    }

    std::string path(const std::string& rel) const { return (dir_ / rel).string(); }

    void write(const std::string& rel, const std::string& text) const {
        fs::create_directories((dir_ / rel).parent_path());
        std::ofstream(dir_ / rel) << text;
    }

    static std::string slurp(const std::string& p) {
        std::ifstream in(p);
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    }

    void simulate(const std::string& out, std::size_t n = 20, std::size_t p = 12) {
        ASSERT_EQ(run({"simulate", "--setting", "linear", "--n", std::to_string(n), "--p", std::to_string(p),
                       "--seed", "7", "--zn", "5", "--out", path(out)}),
                  0)
            << err_.str();
    }

    void small_config(const std::string& rel, double lambda = 0.5) {
        write(rel, R"({"lambda1": )" + std::to_string(lambda) + R"(, "lambda2": )" + std::to_string(lambda) +
                       R"(, "inner_epochs": 60, "t_max_outer": 5, "rho": 0.01, "z_n": 5,
                           "hidden_widths_alpha": [4], "hidden_widths_beta": [4], "seed": 3})");
    }

    fs::path dir_;
    std::ostringstream out_;
    std::ostringstream err_;
};

}  // namespace

TEST_F(CliTest, SimulateWritesDeterministicFiles) {
    simulate("a");
    simulate("b");
    for (const char* f : {"edges.csv", "attributes.csv", "truth.json"}) {
        ASSERT_TRUE(fs::exists(path(std::string("a/") + f))) << f;
        EXPECT_EQ(slurp(path(std::string("a/") + f)), slurp(path(std::string("b/") + f))) << f;
    }
    const auto truth = read_json_file(path("a/truth.json"));
    EXPECT_EQ(truth["a_alpha"], Json({0, 1, 2, 3, 4}));
    EXPECT_EQ(load_attributes_file(path("a/attributes.csv")).p(), 12u);
}

TEST_F(CliTest, UsageErrorsExitTwo) {
    for (const char* setting : {"linear", "nonlinear"}) {
        EXPECT_EQ(run({"simulate", "--setting", setting, "--n", "20", "--p", "8", "--seed", "1", "--out", path("x")}),
                  2);
        EXPECT_NE(err_.str().find("p must be >= 10"), std::string::npos);
    }
    EXPECT_EQ(run({"simulate", "--n", "20", "--p", "12", "--seed", "1", "--out", path("x"), "--bogus"}), 2);
    EXPECT_EQ(run({}), 2);
    EXPECT_EQ(run({"frobnicate"}), 2);
    simulate("d");
    EXPECT_EQ(run({"fit", "--edges", path("d/edges.csv"), "--attributes", path("missing.csv"), "--out", path("f")}),
              2);
    write("bad.csv", "x1,x2\n1,abc\n");
    EXPECT_EQ(run({"fit", "--edges", path("d/edges.csv"), "--attributes", path("bad.csv"), "--out", path("f")}), 2);
    EXPECT_NE(err_.str().find("abc"), std::string::npos);
}

TEST_F(CliTest, HelpExitsZero) {
    EXPECT_EQ(run({"--help"}), 0);
    EXPECT_NE(out_.str().find("simulate"), std::string::npos);
}

TEST_F(CliTest, FitArtifactsRoundTrip) {
    simulate("d");
    small_config("config.json");
    ASSERT_EQ(run({"fit", "--edges", path("d/edges.csv"), "--attributes", path("d/attributes.csv"), "--config",
                   path("config.json"), "--out", path("fit")}),
              0)
        << err_.str();
    const auto est = read_json_file(path("fit/estimate.json"));
    const auto alpha = est["alpha_hat"].get<std::vector<double>>();
    const auto beta = est["beta_hat"].get<std::vector<double>>();
    double sa = 0.0, sb = 0.0;
    for (double v : alpha) sa += v;
    for (double v : beta) sb += v;
    EXPECT_LE(std::fabs(sa - sb), 1e-8 * (1.0 + std::fabs(sa)));
    for (const char* key : {"s_alpha", "s_beta", "converged", "outer_iterations", "final_loss"})
        EXPECT_TRUE(est.contains(key)) << key;

    const auto model = load_model(path("fit/model_alpha.json"));
    EXPECT_EQ(model.extras["side"], "alpha");
    const auto x = load_attributes_file(path("d/attributes.csv"));
    const Eigen::VectorXd reproduced = forward_batch(model.net, x);
    for (std::size_t i = 0; i < alpha.size(); ++i) EXPECT_EQ(reproduced[Eigen::Index(i)], alpha[i]);

    std::istringstream log(slurp(path("fit/fit_log.csv")));
    std::string header;
    std::getline(log, header);
    EXPECT_EQ(header, "iteration,nll,l1_alpha,l1_beta,ident_penalty,total,delta_alpha,delta_beta");
}

TEST_F(CliTest, SingletonTuneMatchesFit) {
    simulate("d");
    small_config("config.json", 0.5);
    write("grid.json", R"([{"lambda1": 0.5, "lambda2": 0.5, "M": 10}])");
    ASSERT_EQ(run({"fit", "--edges", path("d/edges.csv"), "--attributes", path("d/attributes.csv"), "--config",
                   path("config.json"), "--out", path("fit")}),
              0);
    ASSERT_EQ(run({"tune", "--edges", path("d/edges.csv"), "--attributes", path("d/attributes.csv"), "--config",
                   path("config.json"), "--grid", path("grid.json"), "--scoring", "penalized", "--out", path("tune")}),
              0)
        << err_.str();
    for (const char* f : {"estimate.json", "model_alpha.json", "model_beta.json"})
        EXPECT_EQ(slurp(path(std::string("fit/") + f)), slurp(path(std::string("tune/") + f))) << f;
    std::istringstream tuning(slurp(path("tune/tuning.csv")));
    std::string line;
    int rows = -1;
    while (std::getline(tuning, line)) ++rows;
    EXPECT_EQ(rows, 1);
}

TEST_F(CliTest, TuneIndependentOfJobs) {
    simulate("d");
    small_config("config.json");
    for (const char* jobs : {"1", "4"}) {
        ASSERT_EQ(run({"tune", "--edges", path("d/edges.csv"), "--attributes", path("d/attributes.csv"), "--config",
                       path("config.json"), "--grid-size", "2", "--jobs", jobs, "--out", path(std::string("t") + jobs)}),
                  0)
            << err_.str();
    }
    EXPECT_EQ(slurp(path("t1/tuning.csv")), slurp(path("t4/tuning.csv")));
    EXPECT_EQ(slurp(path("t1/estimate.json")), slurp(path("t4/estimate.json")));
}

TEST_F(CliTest, EvaluateSmokeAndDeterminism) {
    const std::vector<std::string> base{"evaluate", "--setting", "linear", "--n", "15", "--p", "12", "--replications",
                                        "3", "--methods", "mle,mle_lasso", "--seed", "5", "--zn", "5"};
    for (const char* jobs : {"1", "4"}) {
        auto args = base;
        args.insert(args.end(), {"--jobs", jobs, "--out", path(std::string("e") + jobs)});
        ASSERT_EQ(run(args), 0) << err_.str();
    }
    auto again = base;
    again.insert(again.end(), {"--out", path("e_again")});
    ASSERT_EQ(run(again), 0);
    EXPECT_EQ(slurp(path("e1/metrics.csv")), slurp(path("e4/metrics.csv")));
    EXPECT_EQ(slurp(path("e1/metrics.csv")), slurp(path("e_again/metrics.csv")));
    EXPECT_EQ(slurp(path("e1/replication_raw.csv")), slurp(path("e4/replication_raw.csv")));
    EXPECT_NE(slurp(path("e1/metrics.csv")).find("mle,alpha,rmse,"), std::string::npos);
    EXPECT_EQ(run({"evaluate", "--methods", "nope", "--seed", "1", "--out", path("x")}), 2);
}

TEST_F(CliTest, EvaluateWithInjectedOracle) {
    auto methods = cli::builtin_methods();
    methods["oracle"] = [](const cli::MethodContext&) { return oracle_method(); };
    ASSERT_EQ(run({"evaluate", "--n", "12", "--p", "12", "--methods", "oracle", "--seed", "2", "--out", path("o")},
                  methods),
              0);
    const auto metrics = slurp(path("o/metrics.csv"));
    EXPECT_NE(metrics.find("oracle,alpha,rmse,0,0,1"), std::string::npos);
    EXPECT_NE(metrics.find("oracle,beta,f1,1,0,1"), std::string::npos);
}

TEST_F(CliTest, ImportanceOnLinearModel) {
    Eigen::MatrixXd v(40, 4);
    for (Eigen::Index i = 0; i < 40; ++i)
        for (Eigen::Index k = 0; k < 4; ++k) v(i, k) = std::sin(double(i * 4 + k) * 1.7);
    std::ofstream(path("attributes.csv")) << "";
    {
        std::ofstream out(path("attributes.csv"));
        write_attributes(out, AttributeMatrix(v));
    }
    SkipLayerNet net(4, {3});
    net.theta() << 2.0, 0.0, -0.5, 1.0;
    save_model(path("model.json"), {net, Json{{"side", "beta"}}});
    ASSERT_EQ(run({"importance", "--model", path("model.json"), "--attributes", path("attributes.csv"), "--samples",
                   "50", "--seed", "1", "--out", path("imp")}),
              0)
        << err_.str();
    std::istringstream csv(slurp(path("imp/importance.csv")));
    std::string line;
    std::getline(csv, line);
    std::vector<std::string> rows;
    while (std::getline(csv, line)) rows.push_back(line);
    ASSERT_EQ(rows.size(), 3u);
    EXPECT_EQ(rows[0].rfind("beta,0,", 0), 0u);
    EXPECT_EQ(rows[1].rfind("beta,3,", 0), 0u);
    EXPECT_EQ(rows[2].rfind("beta,2,", 0), 0u);

    ASSERT_EQ(run({"importance", "--model", path("model.json"), "--attributes", path("attributes.csv"), "--samples",
                   "1", "--seed", "1", "--side", "alpha", "--out", path("imp1")}),
              0);
    EXPECT_NE(slurp(path("imp1/importance.csv")).find("inf"), std::string::npos);

    {
        std::ofstream out(path("narrow.csv"));
        write_attributes(out, AttributeMatrix(v.leftCols(3)));
    }
    EXPECT_EQ(run({"importance", "--model", path("model.json"), "--attributes", path("narrow.csv"), "--seed", "1",
                   "--out", path("imp2")}),
              2);
}
