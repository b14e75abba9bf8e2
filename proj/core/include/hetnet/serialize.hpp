#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hetnet/optimizer.hpp"
#include "hetnet/simbench.hpp"
#include "hetnet/skipnet.hpp"

namespace hetnet {

using Json = nlohmann::json;

/// {p, theta, layers: [{weights (row-major d_out x d_in), biases}], hidden_widths, M}.
/// Finite doubles survive a dump/parse round trip bit for bit.
Json net_to_json(const SkipLayerNet& net);
SkipLayerNet net_from_json(const Json& j);

/// A model document together with any keys the reader did not recognise, so
/// that rewriting a loaded file keeps them.
struct ModelFile {
    SkipLayerNet net;
    Json extras = Json::object();
};

ModelFile model_from_json(const Json& j);
Json model_to_json(const ModelFile& model);

ModelFile load_model(const std::filesystem::path& path);
void save_model(const std::filesystem::path& path, const ModelFile& model);

/// Reads a JSON document, throwing ParseError with the path on failure.
Json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const Json& j);

/// config.json keys: lambda1, lambda2, gamma, m, rho, epsilon, t_max_outer,
/// inner_epochs, hidden_widths_alpha, hidden_widths_beta, z_n, seed. Missing
/// keys keep their defaults; unknown keys are ignored.
FitConfig fit_config_from_json(const Json& j, FitConfig base = {});
Json fit_config_to_json(const FitConfig& config);

/// grid.json: array of {lambda1, lambda2, M}.
std::vector<GridPoint> grid_from_json(const Json& j);

Json loss_to_json(const LossBreakdown& loss);
Json estimate_to_json(const HeterogeneityEstimate& est);

Json truth_to_json(const GroundTruth& truth);
GroundTruth truth_from_json(const Json& j);

}  // namespace hetnet
