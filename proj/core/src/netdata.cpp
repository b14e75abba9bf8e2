#include "hetnet/netdata.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <string_view>

#include "hetnet/error.hpp"

namespace hetnet {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split_csv(std::string_view line) {
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    for (;;) {
        auto comma = line.find(',', start);
        cells.push_back(trim(line.substr(start, comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return cells;
}

bool blank(std::string_view line) { return trim(line).empty(); }

std::string where(std::size_t line_no, std::size_t col) {
    return "line " + std::to_string(line_no) + ", column " + std::to_string(col + 1);
}

template <typename Int>
Int parse_int(std::string_view cell, std::size_t line_no, std::size_t col, const char* what) {
    Int value{};
    auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
    if (ec != std::errc() || ptr != cell.data() + cell.size() || cell.empty()) {
        throw ParseError("edge list: invalid " + std::string(what) + " '" + std::string(cell) +
                         "' at " + where(line_no, col));
    }
    return value;
}

}  // namespace

CountNetwork::CountNetwork(std::size_t n, std::vector<Edge> edges) : n_(n) {
    for (const auto& e : edges) {
        if (e.src >= n || e.dst >= n) {
            throw InvalidArgument("edge (" + std::to_string(e.src) + "," + std::to_string(e.dst) +
                                  ") outside node range [0," + std::to_string(n) + ")");
        }
        if (e.src == e.dst) {
            throw InvalidArgument("self-loop at node " + std::to_string(e.src));
        }
    }
    std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) {
        return a.src != b.src ? a.src < b.src : a.dst < b.dst;
    });
    for (const auto& e : edges) {
        if (e.count == 0) continue;
        if (!edges_.empty() && edges_.back().src == e.src && edges_.back().dst == e.dst) {
            edges_.back().count += e.count;
        } else {
            edges_.push_back(e);
        }
    }
    out_degree_ = Eigen::VectorXd::Zero(Eigen::Index(n));
    in_degree_ = Eigen::VectorXd::Zero(Eigen::Index(n));
    for (const auto& e : edges_) {
        const auto c = static_cast<double>(e.count);
        out_degree_[e.src] += c;
        in_degree_[e.dst] += c;
        total_ += c;
    }
}

Degrees degrees(const CountNetwork& net) { return {net.out_degree(), net.in_degree()}; }

Degrees recompute_degrees(const CountNetwork& net) {
    Degrees d{Eigen::VectorXd::Zero(Eigen::Index(net.n())), Eigen::VectorXd::Zero(Eigen::Index(net.n()))};
    for (const auto& e : net.edges()) {
        d.out[e.src] += static_cast<double>(e.count);
        d.in[e.dst] += static_cast<double>(e.count);
    }
    return d;
}

AttributeMatrix::AttributeMatrix(Eigen::MatrixXd values, std::vector<std::string> names)
    : values_(std::move(values)), names_(std::move(names)) {
    if (!values_.allFinite()) throw InvalidArgument("attribute matrix contains non-finite values");
    if (names_.empty()) {
        names_.reserve(p());
        for (std::size_t k = 0; k < p(); ++k) names_.push_back("x" + std::to_string(k + 1));
    } else if (names_.size() != p()) {
        throw InvalidArgument("attribute names: expected " + std::to_string(p()) + ", got " +
                              std::to_string(names_.size()));
    }
}

CountNetwork load_edge_list(std::istream& in, std::size_t n) {
    std::string line;
    std::size_t line_no = 0;
    bool header_seen = false;
    std::vector<Edge> edges;
    std::size_t max_index = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (blank(line)) continue;
        auto cells = split_csv(line);
        if (!header_seen) {
            if (cells.size() != 3 || cells[0] != "src" || cells[1] != "dst" || cells[2] != "count") {
                throw ParseError("edge list: expected header 'src,dst,count' at line " + std::to_string(line_no));
            }
            header_seen = true;
            continue;
        }
        if (cells.size() != 3) {
            throw ParseError("edge list: expected 3 columns at line " + std::to_string(line_no) + ", got " +
                             std::to_string(cells.size()));
        }
        if (!cells[2].empty() && cells[2].front() == '-') {
            throw ParseError("edge list: negative count at " + where(line_no, 2));
        }
        Edge e;
        e.src = parse_int<NodeIndex>(cells[0], line_no, 0, "src");
        e.dst = parse_int<NodeIndex>(cells[1], line_no, 1, "dst");
        e.count = parse_int<std::uint64_t>(cells[2], line_no, 2, "count");
        if (e.src == e.dst) {
            throw ParseError("edge list: self-loop (" + std::to_string(e.src) + "," + std::to_string(e.dst) +
                             ") at line " + std::to_string(line_no));
        }
        if (n != 0 && (e.src >= n || e.dst >= n)) {
            throw ParseError("edge list: index out of range [0," + std::to_string(n) + ") at line " +
                             std::to_string(line_no));
        }
        max_index = std::max<std::size_t>({max_index, e.src, e.dst});
        edges.push_back(e);
    }
    if (!header_seen) throw ParseError("edge list: missing header 'src,dst,count'");
    if (n == 0) n = edges.empty() ? 0 : max_index + 1;
    return CountNetwork(n, std::move(edges));
}

CountNetwork load_edge_list_file(const std::string& path, std::size_t n) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open edge list '" + path + "'");
    return load_edge_list(in, n);
}

AttributeMatrix load_attributes(std::istream& in) {
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::string> names;
    std::vector<double> data;
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (blank(line)) continue;
        auto cells = split_csv(line);
        if (names.empty()) {
            for (auto c : cells) {
                if (c.empty()) throw ParseError("attributes: empty column name in header");
                names.emplace_back(c);
            }
            continue;
        }
        if (cells.size() != names.size()) {
            throw ParseError("attributes: ragged row at line " + std::to_string(line_no) + " (expected " +
                             std::to_string(names.size()) + " cells, got " + std::to_string(cells.size()) + ")");
        }
        for (std::size_t k = 0; k < cells.size(); ++k) {
            double v = 0.0;
            auto cell = cells[k];
            auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
            if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size()) {
                throw ParseError("attributes: non-numeric cell '" + std::string(cell) + "' at row " +
                                 std::to_string(rows + 1) + ", column " + std::to_string(k + 1));
            }
            if (!std::isfinite(v)) {
                throw ParseError("attributes: non-finite cell at row " + std::to_string(rows + 1) + ", column " +
                                 std::to_string(k + 1));
            }
            data.push_back(v);
        }
        ++rows;
    }
    if (names.empty()) throw ParseError("attributes: missing header");
    if (rows == 0) throw ParseError("attributes: no rows");
    const auto p = names.size();
    Eigen::MatrixXd values{Eigen::Index(rows), Eigen::Index(p)};
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t k = 0; k < p; ++k) values(Eigen::Index(i), Eigen::Index(k)) = data[i * p + k];
    return AttributeMatrix(std::move(values), std::move(names));
}

AttributeMatrix load_attributes_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open attributes '" + path + "'");
    return load_attributes(in);
}

void write_edge_list(std::ostream& out, const CountNetwork& net) {
    out << "src,dst,count\n";
    for (const auto& e : net.edges()) out << e.src << ',' << e.dst << ',' << e.count << '\n';
}

void write_attributes(std::ostream& out, const AttributeMatrix& x) {
    const auto& names = x.names();
    for (std::size_t k = 0; k < names.size(); ++k) out << (k ? "," : "") << names[k];
    out << '\n';
    char buf[32];
    for (std::size_t i = 0; i < x.n(); ++i) {
        for (std::size_t k = 0; k < x.p(); ++k) {
            std::snprintf(buf, sizeof buf, "%.17g", x(i, k));
            out << (k ? "," : "") << buf;
        }
        out << '\n';
    }
}

}  // namespace hetnet
