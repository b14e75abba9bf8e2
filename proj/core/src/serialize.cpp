#include "hetnet/serialize.hpp"

#include <fstream>

#include "hetnet/error.hpp"

namespace hetnet {

namespace {

std::vector<double> to_vec(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

Eigen::VectorXd vector_from(const Json& j, const char* what) {
    if (!j.is_array()) throw ParseError(std::string(what) + ": expected an array");
    Eigen::VectorXd v(Eigen::Index(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number()) throw ParseError(std::string(what) + ": non-numeric entry at " + std::to_string(i));
        v[Eigen::Index(i)] = j[i].get<double>();
    }
    return v;
}

FeatureSet set_from(const Json& j, const char* what) {
    if (!j.is_array()) throw ParseError(std::string(what) + ": expected an array");
    FeatureSet s;
    for (const auto& e : j) {
        if (!e.is_number_unsigned()) throw ParseError(std::string(what) + ": expected non-negative integers");
        s.insert(e.get<std::size_t>());
    }
    return s;
}

const Json& field(const Json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end()) throw ParseError(std::string("missing key '") + key + "'");
    return *it;
}

}  // namespace

Json net_to_json(const SkipLayerNet& net) {
    Json layers = Json::array();
    for (const auto& layer : net.layers()) {
        Json rows = Json::array();
        for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
            Json row = Json::array();
            for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) row.push_back(layer.weights(r, c));
            rows.push_back(std::move(row));
        }
        layers.push_back({{"weights", std::move(rows)}, {"biases", to_vec(layer.biases)}});
    }
    return {{"p", net.p()},
            {"theta", to_vec(net.theta())},
            {"layers", std::move(layers)},
            {"hidden_widths", net.hidden_widths()},
            {"M", net.hierarchy_m()}};
}

SkipLayerNet net_from_json(const Json& j) {
    if (!j.is_object()) throw ParseError("model: expected a JSON object");
    try {
        Eigen::VectorXd theta = vector_from(field(j, "theta"), "theta");
        const auto p = field(j, "p").get<std::size_t>();
        if (std::size_t(theta.size()) != p) throw ParseError("model: theta length differs from p");
        std::vector<DenseLayer> layers;
        for (const auto& jl : field(j, "layers")) {
            const auto& rows = field(jl, "weights");
            DenseLayer layer;
            layer.biases = vector_from(field(jl, "biases"), "biases");
            const auto d_out = Eigen::Index(rows.size());
            const auto d_in = d_out == 0 ? Eigen::Index(0) : Eigen::Index(rows[0].size());
            layer.weights.resize(d_out, d_in);
            for (Eigen::Index r = 0; r < d_out; ++r) {
                const auto row = vector_from(rows[std::size_t(r)], "weights");
                if (row.size() != d_in) throw ParseError("model: ragged weight matrix");
                layer.weights.row(r) = row.transpose();
            }
            layers.push_back(std::move(layer));
        }
        const double m = j.contains("M") ? j["M"].get<double>() : 10.0;
        SkipLayerNet net(std::move(theta), std::move(layers), m);
        if (j.contains("hidden_widths") && j["hidden_widths"].get<std::vector<std::size_t>>() != net.hidden_widths()) {
            throw ParseError("model: hidden_widths disagree with layer shapes");
        }
        return net;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("model: ") + e.what());
    } catch (const InvalidArgument& e) {
        throw ParseError(std::string("model: ") + e.what());
    }
}

ModelFile model_from_json(const Json& j) {
    ModelFile model;
    model.net = net_from_json(j);
    for (auto it = j.begin(); it != j.end(); ++it) {
        const auto& key = it.key();
        if (key != "p" && key != "theta" && key != "layers" && key != "hidden_widths" && key != "M") {
            model.extras[key] = it.value();
        }
    }
    return model;
}

Json model_to_json(const ModelFile& model) {
    Json j = net_to_json(model.net);
    for (auto it = model.extras.begin(); it != model.extras.end(); ++it) {
        if (!j.contains(it.key())) j[it.key()] = it.value();
    }
    return j;
}

Json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    try {
        return Json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

void write_json_file(const std::filesystem::path& path, const Json& j) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << j.dump(2) << '\n';
    if (!out) throw Error("write failed: " + path.string());
}

ModelFile load_model(const std::filesystem::path& path) { return model_from_json(read_json_file(path)); }

void save_model(const std::filesystem::path& path, const ModelFile& model) {
    write_json_file(path, model_to_json(model));
}

FitConfig fit_config_from_json(const Json& j, FitConfig c) {
    if (!j.is_object()) throw ParseError("config: expected a JSON object");
    try {
        auto get = [&](const char* key, auto& dst) {
            if (auto it = j.find(key); it != j.end() && !it->is_null()) it->get_to(dst);
        };
        get("lambda1", c.lambda1);
        get("lambda2", c.lambda2);
        if (auto it = j.find("gamma"); it != j.end() && !it->is_null()) c.gamma = it->get<double>();
        get("m", c.m);
        get("M", c.m);
        get("rho", c.rho);
        if (auto it = j.find("epsilon"); it != j.end() && !it->is_null()) c.epsilon = it->get<double>();
        get("t_max_outer", c.t_max_outer);
        get("inner_epochs", c.inner_epochs);
        get("hidden_widths_alpha", c.hidden_widths_alpha);
        get("hidden_widths_beta", c.hidden_widths_beta);
        get("z_n", c.z_n);
        get("seed", c.seed);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("config: ") + e.what());
    }
    return c;
}

Json fit_config_to_json(const FitConfig& c) {
    Json j = {{"lambda1", c.lambda1},
              {"lambda2", c.lambda2},
              {"m", c.m},
              {"rho", c.rho},
              {"t_max_outer", c.t_max_outer},
              {"inner_epochs", c.inner_epochs},
              {"hidden_widths_alpha", c.hidden_widths_alpha},
              {"hidden_widths_beta", c.hidden_widths_beta},
              {"z_n", c.z_n},
              {"seed", c.seed}};
    j["gamma"] = c.gamma ? Json(*c.gamma) : Json(nullptr);
    j["epsilon"] = c.epsilon ? Json(*c.epsilon) : Json(nullptr);
    return j;
}

std::vector<GridPoint> grid_from_json(const Json& j) {
    if (!j.is_array() || j.empty()) throw ParseError("grid: expected a non-empty array");
    std::vector<GridPoint> grid;
    try {
        for (const auto& e : j) {
            GridPoint g;
            g.lambda1 = field(e, "lambda1").get<double>();
            g.lambda2 = field(e, "lambda2").get<double>();
            g.m = e.contains("M") ? e["M"].get<double>() : 10.0;
            grid.push_back(g);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("grid: ") + e.what());
    }
    return grid;
}

Json loss_to_json(const LossBreakdown& loss) {
    return {{"nll", loss.nll},
            {"l1_alpha", loss.l1_alpha},
            {"l1_beta", loss.l1_beta},
            {"ident_penalty", loss.ident_penalty},
            {"total", loss.total}};
}

Json estimate_to_json(const HeterogeneityEstimate& est) {
    return {{"alpha_hat", to_vec(est.alpha_hat)},
            {"beta_hat", to_vec(est.beta_hat)},
            {"s_alpha", est.s_alpha},
            {"s_beta", est.s_beta},
            {"converged", est.converged},
            {"outer_iterations", est.outer_iterations},
            {"final_loss", loss_to_json(est.final_loss)},
            {"centering_shift", est.centering_shift}};
}

Json truth_to_json(const GroundTruth& t) {
    return {{"alpha0", to_vec(t.alpha0)}, {"beta0", to_vec(t.beta0)}, {"a_alpha", t.a_alpha},
            {"a_beta", t.a_beta},         {"z_n", t.z_n},              {"setting", to_string(t.setting)},
            {"seed", t.seed}};
}

GroundTruth truth_from_json(const Json& j) {
    try {
        GroundTruth t;
        t.alpha0 = vector_from(field(j, "alpha0"), "alpha0");
        t.beta0 = vector_from(field(j, "beta0"), "beta0");
        t.a_alpha = set_from(field(j, "a_alpha"), "a_alpha");
        t.a_beta = set_from(field(j, "a_beta"), "a_beta");
        t.z_n = field(j, "z_n").get<double>();
        t.setting = parse_setting(field(j, "setting").get<std::string>());
        t.seed = field(j, "seed").get<std::uint64_t>();
        return t;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("truth: ") + e.what());
    }
}

}  // namespace hetnet
