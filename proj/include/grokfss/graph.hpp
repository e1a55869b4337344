#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace grokfss {

enum class Topology { ring, lattice2d, erdos_renyi, barabasi_albert, watts_strogatz };

std::string_view to_string(Topology t);
Topology parse_topology(std::string_view name);

/// The five topologies of the synthetic control, in reporting order.
inline constexpr Topology kAllTopologies[] = {Topology::ring, Topology::lattice2d, Topology::erdos_renyi,
                                              Topology::barabasi_albert, Topology::watts_strogatz};

struct GraphParams {
    std::size_t ba_m = 2;           // edges per new node; seed graph is K_m
    double er_mean_degree = 4.0;    // p = mean_degree / (N - 1)
    std::size_t ws_degree = 4;      // ring-lattice base degree (even)
    double ws_rewire = 0.1;
};

/// Undirected simple graph over N nodes. Node i is flattened parameter i.
class DiffusionGraph {
public:
    DiffusionGraph() = default;
    /// Builds from an edge list; duplicates are merged, self-loops rejected.
    DiffusionGraph(std::size_t n_nodes, const std::vector<std::pair<std::size_t, std::size_t>>& edges,
                   Topology tag, GraphParams params = {}, std::uint64_t gen_seed = 0);

    std::size_t n_nodes() const { return adjacency_.size(); }
    std::size_t edge_count() const { return edge_count_; }
    std::size_t degree(std::size_t i) const;
    const std::vector<std::size_t>& neighbors(std::size_t i) const;

    Topology topology() const { return tag_; }
    const GraphParams& params() const { return params_; }
    std::uint64_t gen_seed() const { return gen_seed_; }

    std::vector<std::pair<std::size_t, std::size_t>> edges() const;

    bool operator==(const DiffusionGraph& other) const { return adjacency_ == other.adjacency_; }

private:
    std::vector<std::vector<std::size_t>> adjacency_;
    std::size_t edge_count_ = 0;
    Topology tag_ = Topology::ring;
    GraphParams params_{};
    std::uint64_t gen_seed_ = 0;
};

/// Deterministic in (topology, n, params, gen_seed). Throws ConfigError if n is too small.
DiffusionGraph generate_graph(Topology topology, std::size_t n, const GraphParams& params, std::uint64_t gen_seed);

/// Edge-list text format:
///   # topology=<name> n=<N> gen_seed=<s> ba_m=<m> er_mean_degree=<k> ws_degree=<k> ws_rewire=<p>
///   i j
///   ...
void write_edge_list(std::ostream& os, const DiffusionGraph& g);
DiffusionGraph read_edge_list(std::istream& is);

} // namespace grokfss
