#pragma once

#include "hetnet/rng.hpp"
#include "hetnet/simbench.hpp"

namespace bench {

inline hetnet::ReplicationData linear_data(std::size_t n, std::size_t p) {
    hetnet::EvaluationConfig config;
    config.n = n;
    config.p = p;
    config.base_seed = 11;
    config.sim_z_n = 5.0;
    return hetnet::make_replication(config, 1);
}

inline Eigen::VectorXd random_vector(std::size_t n, std::uint64_t seed) {
    hetnet::CounterRng rng(seed);
    Eigen::VectorXd v{Eigen::Index(n)};
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = rng.uniform(-1.0, 1.0);
    return v;
}

}  // namespace bench
