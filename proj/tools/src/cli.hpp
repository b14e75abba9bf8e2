#pragma once

#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "hetnet/simbench.hpp"

namespace hetnet::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Options shared by every evaluate method factory.
struct MethodContext {
    double z_n{1.0};
    NetworkNetMethodConfig networknet;
};

using MethodFactory = std::function<MethodFn(const MethodContext&)>;

/// Methods selectable with `evaluate --methods`. The built-ins are networknet,
/// mle and mle_lasso; callers may add more before running.
std::map<std::string, MethodFactory> builtin_methods();

struct Streams {
    std::ostream& out;
    std::ostream& err;
};

/// Runs one command line (args excludes the program name) and returns the
/// process exit code.
int run(const std::vector<std::string>& args, Streams streams,
        const std::map<std::string, MethodFactory>& methods = builtin_methods());

}  // namespace hetnet::cli
