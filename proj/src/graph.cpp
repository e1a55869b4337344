#include "grokfss/graph.hpp"

#include "grokfss/errors.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <random>
#include <set>
#include <sstream>

namespace grokfss {

std::string_view to_string(Topology t)
{
    switch (t) {
    case Topology::ring: return "ring";
    case Topology::lattice2d: return "lattice2d";
    case Topology::erdos_renyi: return "erdos_renyi";
    case Topology::barabasi_albert: return "barabasi_albert";
    case Topology::watts_strogatz: return "watts_strogatz";
    }
    return "unknown";
}

Topology parse_topology(std::string_view name)
{
    for (Topology t : kAllTopologies)
        if (to_string(t) == name) return t;
    if (name == "ba") return Topology::barabasi_albert;
    if (name == "er") return Topology::erdos_renyi;
    if (name == "ws") return Topology::watts_strogatz;
    if (name == "lattice") return Topology::lattice2d;
    throw ConfigError("unknown topology '" + std::string(name) + "'");
}

DiffusionGraph::DiffusionGraph(std::size_t n_nodes, const std::vector<std::pair<std::size_t, std::size_t>>& edges,
                               Topology tag, GraphParams params, std::uint64_t gen_seed)
    : adjacency_(n_nodes), tag_(tag), params_(params), gen_seed_(gen_seed)
{
    for (auto [i, j] : edges) {
        if (i >= n_nodes || j >= n_nodes) throw StructuralError("edge endpoint out of range");
        if (i == j) throw StructuralError("self-loop at node " + std::to_string(i));
        adjacency_[i].push_back(j);
        adjacency_[j].push_back(i);
    }
    std::size_t degree_sum = 0;
    for (auto& adj : adjacency_) {
        std::sort(adj.begin(), adj.end());
        adj.erase(std::unique(adj.begin(), adj.end()), adj.end());
        degree_sum += adj.size();
    }
    edge_count_ = degree_sum / 2;
}

std::size_t DiffusionGraph::degree(std::size_t i) const { return neighbors(i).size(); }

const std::vector<std::size_t>& DiffusionGraph::neighbors(std::size_t i) const
{
    if (i >= adjacency_.size())
        throw std::out_of_range("node " + std::to_string(i) + " out of range for N=" + std::to_string(adjacency_.size()));
    return adjacency_[i];
}

std::vector<std::pair<std::size_t, std::size_t>> DiffusionGraph::edges() const
{
    std::vector<std::pair<std::size_t, std::size_t>> out;
    out.reserve(edge_count_);
    for (std::size_t i = 0; i < adjacency_.size(); ++i)
        for (std::size_t j : adjacency_[i])
            if (i < j) out.emplace_back(i, j);
    return out;
}

namespace {

using EdgeList = std::vector<std::pair<std::size_t, std::size_t>>;

EdgeList ring_edges(std::size_t n)
{
    EdgeList e;
    for (std::size_t i = 0; i < n; ++i) e.emplace_back(i, (i + 1) % n);
    return e;
}

EdgeList lattice_edges(std::size_t n)
{
    const auto cols = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n))));
    EdgeList e;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t c = i % cols;
        if (c + 1 < cols && i + 1 < n) e.emplace_back(i, i + 1);
        if (i + cols < n) e.emplace_back(i, i + cols);
    }
    return e;
}

EdgeList erdos_renyi_edges(std::size_t n, double mean_degree, std::mt19937_64& rng)
{
    const double p = std::min(1.0, mean_degree / static_cast<double>(n - 1));
    std::uniform_real_distribution<double> u(0.0, 1.0);
    EdgeList e;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (u(rng) < p) e.emplace_back(i, j);
    return e;
}

EdgeList barabasi_albert_edges(std::size_t n, std::size_t m, std::mt19937_64& rng)
{
    EdgeList e;
    // Each endpoint appears once per incident edge, so a uniform pick is degree-proportional.
    std::vector<std::size_t> endpoints;
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = i + 1; j < m; ++j) {
            e.emplace_back(i, j);
            endpoints.push_back(i);
            endpoints.push_back(j);
        }
    for (std::size_t v = m; v < n; ++v) {
        std::vector<std::size_t> targets;
        while (targets.size() < m) {
            std::size_t t;
            if (endpoints.empty()) {
                // K_1 seed has no edges; fall back to uniform over existing nodes.
                t = std::uniform_int_distribution<std::size_t>(0, v - 1)(rng);
            } else {
                t = endpoints[std::uniform_int_distribution<std::size_t>(0, endpoints.size() - 1)(rng)];
            }
            if (std::find(targets.begin(), targets.end(), t) == targets.end()) targets.push_back(t);
        }
        for (std::size_t t : targets) {
            e.emplace_back(v, t);
            endpoints.push_back(v);
            endpoints.push_back(t);
        }
    }
    return e;
}

EdgeList watts_strogatz_edges(std::size_t n, std::size_t k, double beta, std::mt19937_64& rng)
{
    std::vector<std::set<std::size_t>> adj(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t d = 1; d <= k / 2; ++d) {
            adj[i].insert((i + d) % n);
            adj[(i + d) % n].insert(i);
        }

    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    // Rewire each lattice edge (i, i+d) once, keeping i and moving the far end.
    for (std::size_t d = 1; d <= k / 2; ++d) {
        for (std::size_t i = 0; i < n; ++i) {
            if (u(rng) >= beta) continue;
            const std::size_t j = (i + d) % n;
            if (!adj[i].count(j) || adj[i].size() >= n - 1) continue;
            std::size_t t;
            do {
                t = pick(rng);
            } while (t == i || adj[i].count(t));
            adj[i].erase(j);
            adj[j].erase(i);
            adj[i].insert(t);
            adj[t].insert(i);
        }
    }
    EdgeList e;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j : adj[i])
            if (i < j) e.emplace_back(i, j);
    return e;
}

} // namespace

DiffusionGraph generate_graph(Topology topology, std::size_t n, const GraphParams& params, std::uint64_t gen_seed)
{
    if (n < 3) throw ConfigError("graph needs at least 3 nodes, got " + std::to_string(n));
    std::mt19937_64 rng(gen_seed);
    EdgeList edges;
    switch (topology) {
    case Topology::ring:
        edges = ring_edges(n);
        break;
    case Topology::lattice2d:
        edges = lattice_edges(n);
        break;
    case Topology::erdos_renyi:
        if (!(params.er_mean_degree > 0.0)) throw ConfigError("ER mean degree must be positive");
        edges = erdos_renyi_edges(n, params.er_mean_degree, rng);
        break;
    case Topology::barabasi_albert:
        if (params.ba_m == 0 || n <= params.ba_m)
            throw ConfigError("BA needs 1 <= m < N (m=" + std::to_string(params.ba_m) + ", N=" + std::to_string(n) + ")");
        edges = barabasi_albert_edges(n, params.ba_m, rng);
        break;
    case Topology::watts_strogatz:
        if (params.ws_degree < 2 || params.ws_degree % 2 != 0 || n <= params.ws_degree)
            throw ConfigError("WS needs an even base degree k >= 2 with k < N");
        if (params.ws_rewire < 0.0 || params.ws_rewire > 1.0) throw ConfigError("WS rewire probability outside [0,1]");
        edges = watts_strogatz_edges(n, params.ws_degree, params.ws_rewire, rng);
        break;
    }
    return DiffusionGraph(n, edges, topology, params, gen_seed);
}

void write_edge_list(std::ostream& os, const DiffusionGraph& g)
{
    const auto& p = g.params();
    os << "# topology=" << to_string(g.topology()) << " n=" << g.n_nodes() << " gen_seed=" << g.gen_seed()
       << " ba_m=" << p.ba_m << " er_mean_degree=" << p.er_mean_degree << " ws_degree=" << p.ws_degree
       << " ws_rewire=" << p.ws_rewire << '\n';
    for (auto [i, j] : g.edges()) os << i << ' ' << j << '\n';
}

DiffusionGraph read_edge_list(std::istream& is)
{
    std::string line;
    if (!std::getline(is, line) || line.rfind("# ", 0) != 0) throw InvalidInput("edge list missing '# ' header");
    std::map<std::string, std::string> kv;
    std::istringstream header(line.substr(2));
    std::string token;
    while (header >> token) {
        const auto eq = token.find('=');
        if (eq == std::string::npos) throw InvalidInput("malformed header token '" + token + "'");
        kv[token.substr(0, eq)] = token.substr(eq + 1);
    }
    auto field = [&](const std::string& k) -> const std::string& {
        auto it = kv.find(k);
        if (it == kv.end()) throw InvalidInput("edge list header lacks '" + k + "'");
        return it->second;
    };
    const Topology topo = parse_topology(field("topology"));
    const std::size_t n = std::stoull(field("n"));
    const std::uint64_t seed = std::stoull(field("gen_seed"));
    GraphParams p;
    if (kv.count("ba_m")) p.ba_m = std::stoull(kv["ba_m"]);
    if (kv.count("er_mean_degree")) p.er_mean_degree = std::stod(kv["er_mean_degree"]);
    if (kv.count("ws_degree")) p.ws_degree = std::stoull(kv["ws_degree"]);
    if (kv.count("ws_rewire")) p.ws_rewire = std::stod(kv["ws_rewire"]);

    EdgeList edges;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::size_t i, j;
        if (!(ls >> i >> j)) throw InvalidInput("malformed edge line '" + line + "'");
        edges.emplace_back(i, j);
    }
    return DiffusionGraph(n, edges, topo, p, seed);
}

} // namespace grokfss
