#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace hetnet {

using NodeIndex = std::uint32_t;

struct Edge {
    NodeIndex src{0};
    NodeIndex dst{0};
    std::uint64_t count{0};

    friend bool operator==(const Edge&, const Edge&) = default;
};

/// Sparse directed multigraph with non-negative integer edge counts.
///
/// Edges are kept as a coordinate list sorted by (src, dst) with no duplicates,
/// no self-loops and no zero counts. Degree vectors are computed once at
/// construction; the object is immutable afterwards.
class CountNetwork {
public:
    CountNetwork() = default;

    /// Builds a network from arbitrary triplets. Duplicate (src, dst) pairs are
    /// summed and zero-count triplets dropped. Throws InvalidArgument on a
    /// self-loop or an out-of-range index.
    CountNetwork(std::size_t n, std::vector<Edge> edges);

    std::size_t n() const noexcept { return n_; }
    std::span<const Edge> edges() const noexcept { return edges_; }
    const Eigen::VectorXd& out_degree() const noexcept { return out_degree_; }
    const Eigen::VectorXd& in_degree() const noexcept { return in_degree_; }
    /// Sum of all edge counts.
    double total_count() const noexcept { return total_; }

    friend bool operator==(const CountNetwork& a, const CountNetwork& b) {
        return a.n_ == b.n_ && a.edges_ == b.edges_;
    }

private:
    std::size_t n_{0};
    std::vector<Edge> edges_;
    Eigen::VectorXd out_degree_;
    Eigen::VectorXd in_degree_;
    double total_{0.0};
};

struct Degrees {
    Eigen::VectorXd out;
    Eigen::VectorXd in;
};

Degrees degrees(const CountNetwork& net);

/// Recomputes degree vectors from the edge list, ignoring the cache.
Degrees recompute_degrees(const CountNetwork& net);

/// n x p matrix of finite nodal attributes; row i belongs to node i.
class AttributeMatrix {
public:
    AttributeMatrix() = default;
    explicit AttributeMatrix(Eigen::MatrixXd values, std::vector<std::string> names = {});

    std::size_t n() const noexcept { return static_cast<std::size_t>(values_.rows()); }
    std::size_t p() const noexcept { return static_cast<std::size_t>(values_.cols()); }
    const Eigen::MatrixXd& values() const noexcept { return values_; }
    double operator()(std::size_t i, std::size_t k) const { return values_(Eigen::Index(i), Eigen::Index(k)); }
    auto row(std::size_t i) const { return values_.row(Eigen::Index(i)); }
    /// Column names; defaults to x1..xp.
    const std::vector<std::string>& names() const noexcept { return names_; }

    Eigen::RowVectorXd column_means() const { return values_.colwise().mean(); }

private:
    Eigen::MatrixXd values_;
    std::vector<std::string> names_;
};

/// Parses `src,dst,count` CSV (0-based indices). When `n` is zero the node
/// count is one more than the largest index seen; otherwise indices must be
/// below `n`.
CountNetwork load_edge_list(std::istream& in, std::size_t n = 0);
CountNetwork load_edge_list_file(const std::string& path, std::size_t n = 0);

/// Parses a header row of column names followed by one numeric row per node.
AttributeMatrix load_attributes(std::istream& in);
AttributeMatrix load_attributes_file(const std::string& path);

void write_edge_list(std::ostream& out, const CountNetwork& net);
void write_attributes(std::ostream& out, const AttributeMatrix& x);

}  // namespace hetnet
