#pragma once

#include <optional>
#include <vector>

#include "afr/dmt.hpp"
#include "afr/netmodel.hpp"
#include "afr/schedule.hpp"

namespace afr {

struct ForwardPaths {
    std::vector<std::vector<int>> layers;  // V_0..V_{L+1}, node indices
    PathSet paths;                         // lexicographic in `tuples`
    std::vector<std::vector<int>> tuples;  // position of each node within its layer
};

constexpr int kMaxForwardPaths = 4096;

ForwardPaths forward_paths(const NetworkGraph& net);

// adj[i] = paths whose internal nodes are disjoint from those of path i
struct Bipartite {
    int n = 0;
    std::vector<std::vector<int>> adj;
};
Bipartite path_bipartite(const PathSet& paths);
// perfect matching as match[i] = partner of left vertex i
std::optional<std::vector<int>> max_matching(const Bipartite& g);

// path index = mixed-radix tuple (b_1..b_L); partner shifts every coordinate by one
std::vector<int> fc_matching(const std::vector<int>& R);

BalancedProductSpec balanced_multiplicities(const std::vector<int>& R);

// Matched pairs (i, pi(i)) activated in succession, each as a two-path regular
// network for T cycles followed by flush cycles.
Schedule fc_protocol(const NetworkGraph& net, int T = 1);

std::optional<DmtCurve> edge_disjoint_achievable(const NetworkGraph& net);

}  // namespace afr
