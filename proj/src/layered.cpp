#include "afr/layered.hpp"

#include <algorithm>
#include <functional>
#include <numeric>

#include "flow.hpp"

namespace afr {

namespace {

std::vector<std::vector<int>> layers_or_throw(const NetworkGraph& net) {
    auto lay = layering(net);
    if (!lay) throw InputError("network is not layered");
    for (auto& l : *lay) std::sort(l.begin(), l.end());
    return *lay;
}

bool internally_disjoint(const Path& a, const Path& b) {
    for (size_t i = 1; i + 1 < a.size(); ++i)
        for (size_t j = 1; j + 1 < b.size(); ++j)
            if (a[i] == b[j]) return false;
    return true;
}

}  // namespace

ForwardPaths forward_paths(const NetworkGraph& net) {
    ForwardPaths fp;
    fp.layers = layers_or_throw(net);
    const int top = static_cast<int>(fp.layers.size()) - 1;
    std::vector<int> pos(net.size(), -1);
    for (const auto& l : fp.layers)
        for (size_t i = 0; i < l.size(); ++i) pos[l[i]] = static_cast<int>(i);
    Path cur{net.source()};
    std::function<void(int)> dfs = [&](int k) {
        if (k == top) {
            if (static_cast<int>(fp.paths.size()) >= kMaxForwardPaths)
                throw InputError("forward path enumeration exceeds " + std::to_string(kMaxForwardPaths) + " paths");
            fp.paths.push_back(cur);
            std::vector<int> tup;
            for (int v : cur) tup.push_back(pos[v]);
            fp.tuples.push_back(tup);
            return;
        }
        for (int v : fp.layers[k + 1]) {
            if (!net.has_arc(cur.back(), v)) continue;
            cur.push_back(v);
            dfs(k + 1);
            cur.pop_back();
        }
    };
    dfs(0);
    return fp;
}

Bipartite path_bipartite(const PathSet& paths) {
    Bipartite g;
    g.n = static_cast<int>(paths.size());
    g.adj.resize(g.n);
    for (int i = 0; i < g.n; ++i)
        for (int j = 0; j < g.n; ++j)
            if (i != j && internally_disjoint(paths[i], paths[j])) g.adj[i].push_back(j);
    return g;
}

std::optional<std::vector<int>> max_matching(const Bipartite& g) {
    std::vector<int> left(g.n, -1), right(g.n, -1);
    std::vector<char> seen;
    std::function<bool(int)> augment = [&](int u) {
        for (int v : g.adj[u]) {
            if (seen[v]) continue;
            seen[v] = 1;
            if (right[v] < 0 || augment(right[v])) {
                left[u] = v;
                right[v] = u;
                return true;
            }
        }
        return false;
    };
    for (int u = 0; u < g.n; ++u) {
        seen.assign(g.n, 0);
        if (!augment(u)) return std::nullopt;
    }
    return left;
}

std::vector<int> fc_matching(const std::vector<int>& R) {
    for (int r : R)
        if (r < 2) throw InputError("fc_matching: every relay layer needs at least two nodes");
    const int N = std::accumulate(R.begin(), R.end(), 1, std::multiplies<int>());
    std::vector<int> match(N);
    for (int idx = 0; idx < N; ++idx) {
        // decode mixed radix, last layer fastest
        int rest = idx, out = 0, scale = 1;
        for (int k = static_cast<int>(R.size()) - 1; k >= 0; --k) {
            int b = rest % R[k];
            rest /= R[k];
            out += ((b + 1) % R[k]) * scale;
            scale *= R[k];
        }
        match[idx] = out;
    }
    return match;
}

BalancedProductSpec balanced_multiplicities(const std::vector<int>& R) {
    if (R.size() < 2) throw InputError("balanced_multiplicities: need at least two layers");
    for (int r : R)
        if (r < 1) throw InputError("balanced_multiplicities: layer sizes must be positive");
    BalancedProductSpec spec;
    const int H = static_cast<int>(R.size()) - 1;
    for (int k = 0; k < H; ++k) spec.M.push_back(R[k] * R[k + 1]);
    const int total = std::accumulate(R.begin(), R.end(), 1, std::multiplies<int>());
    for (int idx = 0; idx < total; ++idx) {
        std::vector<int> t(R.size());
        int rest = idx;
        for (int k = static_cast<int>(R.size()) - 1; k >= 0; --k) {
            t[k] = rest % R[k];
            rest /= R[k];
        }
        std::vector<int> e(H);
        for (int k = 0; k < H; ++k) e[k] = t[k] * R[k + 1] + t[k + 1];
        spec.e.push_back(e);
    }
    finish_spec(spec);
    return spec;
}

Schedule fc_protocol(const NetworkGraph& net, int T) {
    if (T < 1) throw InputError("fc_protocol: T must be positive");
    NetworkClass c = classify(net);
    if (!c.fc_layered) throw InputError("fc_protocol: network is not fully connected layered");
    ForwardPaths fp = forward_paths(net);
    std::vector<int> R;
    for (int k = 1; k + 1 < static_cast<int>(fp.layers.size()); ++k) R.push_back(static_cast<int>(fp.layers[k].size()));
    std::vector<int> pi = fc_matching(R);
    const int L = static_cast<int>(R.size());
    const int flush = (L + 2) / 2;
    Schedule s;
    s.N = 2;
    for (int i = 0; i < static_cast<int>(fp.paths.size()); ++i) {
        Phase ph;
        ph.sched.N = 2;
        ph.cycles = T + flush;
        ph.active_cycles = T;
        const Path* pair[2] = {&fp.paths[i], &fp.paths[pi[i]]};
        for (int a = 0; a < 2; ++a) {
            const Path& p = *pair[a];
            std::vector<std::string> ids;
            for (int v : p) ids.push_back(net.node(v).id);
            ph.backbone.push_back(ids);
            for (size_t j = 1; j < p.size(); ++j)
                ph.sched.add(ids[j - 1], ids[j], static_cast<int>((a + j - 1) % 2));
        }
        s.phases.push_back(std::move(ph));
    }
    s.notes["matching"] = "cyclic shift";
    s.notes["claims"] = "structure,orthogonal,causal";
    return s;
}

std::optional<DmtCurve> edge_disjoint_achievable(const NetworkGraph& net) {
    auto lay = layers_or_throw(net);
    std::vector<int> level(net.size(), -1);
    for (size_t k = 0; k < lay.size(); ++k)
        for (int v : lay[k]) level[v] = static_cast<int>(k);
    detail::MaxFlow mf(net.size());
    std::vector<std::pair<std::pair<int, int>, int>> fid;
    for (auto [u, v] : net.arcs())
        if (level[v] == level[u] + 1) fid.push_back({{u, v}, mf.add(u, v, 1)});
    const int M = mf.run(net.source(), net.sink());
    if (M == 0) return std::nullopt;
    if (M == 1) return linear_dmt(1, 1);
    std::vector<std::vector<int>> next(net.size());
    for (auto& [a, id] : fid)
        if (mf.flow_on(id) > 0) next[a.first].push_back(a.second);
    PathSet paths;
    for (int m = 0; m < M; ++m) {
        Path p{net.source()};
        while (p.back() != net.sink()) {
            auto& nx = next[p.back()];
            int v = nx.front();
            nx.erase(nx.begin());
            p.push_back(v);
        }
        paths.push_back(p);
    }
    if (!max_matching(path_bipartite(paths))) return std::nullopt;
    return linear_dmt(M, 1);
}

}  // namespace afr
