#include "afr/synth_kpp.hpp"

#include <algorithm>
#include <array>
#include <numeric>

namespace afr {

namespace {

int lengths_of(const Path& p) { return static_cast<int>(p.size()) - 1; }

PathSet kpp_backbone(const NetworkGraph& net, int want_min, int want_max, const char* who) {
    PathSet bb = backbone_of(net);
    int K = static_cast<int>(bb.size());
    if (K < want_min || K > want_max)
        throw InputError(std::string(who) + ": unsupported number of backbone paths K=" + std::to_string(K));
    return bb;
}

void color_path(Schedule& s, const NetworkGraph& net, const Path& p, const std::vector<std::set<int>>& per_edge) {
    for (size_t j = 0; j + 1 < p.size(); ++j)
        for (int c : per_edge[j]) s.add(net.node(p[j]).id, net.node(p[j + 1]).id, c);
}

// One color per edge with fixed end colors, consecutive edges distinct,
// fewest back-flow pairs. Small exhaustive DP over (edge, color, previous color).
std::vector<int> best_path_coloring(int n, int first, int last, int& backflows) {
    const int INF = 1 << 20;
    // state: (color of edge j-1, color of edge j)
    std::vector<std::array<std::array<int, 3>, 3>> cost(n);
    std::vector<std::array<std::array<int, 3>, 3>> from(n);
    for (auto& c : cost)
        for (auto& r : c) r.fill(INF);
    if (n == 1) {
        backflows = 0;
        return first == last ? std::vector<int>{first} : std::vector<int>{};
    }
    for (int b = 0; b < 3; ++b)
        if (b != first) cost[1][first][b] = 0;
    for (int j = 2; j < n; ++j)
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) {
                if (cost[j - 1][a][b] >= INF) continue;
                for (int c = 0; c < 3; ++c) {
                    if (c == b) continue;
                    int v = cost[j - 1][a][b] + (c == a ? 1 : 0);
                    if (v < cost[j][b][c]) {
                        cost[j][b][c] = v;
                        from[j][b][c] = a;
                    }
                }
            }
    int best = INF, ba = -1;
    for (int a = 0; a < 3; ++a)
        if (a != last && cost[n - 1][a][last] < best) best = cost[n - 1][a][last], ba = a;
    if (ba < 0) return {};
    std::vector<int> col(n);
    col[n - 1] = last;
    col[n - 2] = ba;
    for (int j = n - 1; j >= 2; --j) col[j - 2] = from[j][col[j - 1]][col[j]];
    backflows = best;
    return col;
}

}  // namespace

Schedule from_descriptor(const KppDescriptor& d, const NetworkGraph& net, const PathSet& bb) {
    Schedule s;
    s.N = d.N;
    for (size_t i = 0; i < bb.size(); ++i) {
        int n = lengths_of(bb[i]);
        std::vector<std::set<int>> per_edge(n);
        for (int j = 1; j <= n; ++j) per_edge[j - 1] = j < n ? d.G[i][(j - 1) % 3] : d.F[i];
        color_path(s, net, bb[i], per_edge);
    }
    return s;
}

Schedule synth_k4(const NetworkGraph& net) {
    PathSet bb = kpp_backbone(net, 4, 1 << 20, "synth_k4");
    const int K = static_cast<int>(bb.size());
    KppDescriptor d;
    d.N = K;
    for (int i = 0; i < K; ++i) {
        d.G.push_back({{i % K}, {(i + 1) % K}, {(i + 2) % K}});
        d.F.push_back({(i + 3) % K});
    }
    Schedule s = from_descriptor(d, net, bb);
    s.notes["claims"] = "structure,orthogonal,rate-one,sink-balance,backflow-free";
    return s;
}

Schedule synth_k3(const NetworkGraph& net) {
    PathSet raw = kpp_backbone(net, 3, 3, "synth_k3");
    // paths with n_i = 1 (mod 3) first, stable otherwise
    std::vector<int> order = {0, 1, 2};
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return (lengths_of(raw[a]) % 3 == 1) > (lengths_of(raw[b]) % 3 == 1);
    });
    PathSet bb;
    std::vector<int> n;
    for (int i : order) {
        bb.push_back(raw[i]);
        n.push_back(lengths_of(raw[i]));
    }
    int l = 0;
    for (int x : n) l += x % 3 == 1;

    KppDescriptor d;
    d.N = 3;
    auto trip = [](int a, int b, int c) { return std::vector<std::set<int>>{{a}, {b}, {c}}; };
    for (int i = 0; i < 3; ++i) {
        if (l == 0) d.G.push_back(n[i] % 3 == 0 ? trip(i, (i + 2) % 3, (i + 1) % 3) : trip(i, (i + 1) % 3, (i + 2) % 3));
        else if (l == 1) {
            if (i == 0) d.G.push_back(trip(0, 1, 2));
            else if (i == 1) d.G.push_back(n[1] % 3 == 0 ? trip(1, 0, 2) : trip(1, 2, 0));
            else d.G.push_back(n[2] % 3 == 0 ? trip(2, 0, 1) : trip(2, 1, 0));
        } else {
            d.G.push_back(trip(i, (i + 1) % 3, (i + 2) % 3));
        }
        d.F.push_back(d.G[i][(n[i] - 1) % 3]);
    }
    Schedule s = from_descriptor(d, net, bb);
    s.notes["l"] = std::to_string(l);
    s.notes["claims"] = "structure,orthogonal,rate-one,sink-balance,backflow-free";
    if (l != 2) return s;
    // back-flow is unavoidable here
    s.notes["claims"] = "structure,orthogonal,rate-one,sink-balance";

    // l = 2: move the third path's sink color to c2, and its previous edge to
    // c0 when n_3 = 2 (mod 3) so the relay stays half-duplex.
    const Path& p = bb[2];
    const int n3 = n[2];
    auto key = [&](int j) { return ArcKey{net.node(p[j - 1]).id, net.node(p[j]).id}; };
    s.colors[key(n3)] = {2};
    if (n3 % 3 == 2) s.colors[key(n3 - 1)] = {0};
    if (verify_orthogonal(s, net.with_backbone(bb)).ok()) return s;

    // n_3 = 2 leaves no room for the override; search end colors directly.
    std::array<int, 3> perm = {0, 1, 2};
    int best = 1 << 20;
    Schedule best_s;
    do {
        std::array<int, 3> sink = {0, 1, 2};
        do {
            Schedule t;
            t.N = 3;
            int total = 0;
            bool ok = true;
            for (int i = 0; i < 3 && ok; ++i) {
                int bf = 0;
                auto col = best_path_coloring(n[i], perm[i], sink[i], bf);
                if (col.empty()) ok = false;
                total += bf;
                for (int j = 0; j < n[i] && ok; ++j) t.add(net.node(bb[i][j]).id, net.node(bb[i][j + 1]).id, col[j]);
            }
            if (ok && total < best) best = total, best_s = t;
        } while (std::next_permutation(sink.begin(), sink.end()));
    } while (std::next_permutation(perm.begin(), perm.end()));
    if (best >= (1 << 20)) throw InputError("synth_k3: no rate-one coloring for these path lengths");
    best_s.notes = s.notes;
    best_s.notes["repair"] = "end-color search";
    return best_s;
}

Rational k2_rate_bound(int n1, int n2) {
    if ((n1 + n2) % 2 == 0) return Rational(1);
    int m = std::max(n1, n2);
    return Rational(2 * m - 1, 2 * m);
}

Schedule synth_k2(const NetworkGraph& net) {
    PathSet bb = kpp_backbone(net, 2, 2, "synth_k2");
    if (lengths_of(bb[0]) > lengths_of(bb[1])) std::swap(bb[0], bb[1]);
    const int n1 = lengths_of(bb[0]), n2 = lengths_of(bb[1]), M = n1 + n2;
    // cycle position j (1-based) -> (path, edge index 0-based)
    auto edge_of = [&](int j) -> std::pair<int, int> {
        if (j <= n1) return {0, j - 1};
        return {1, n2 + n1 + 1 - j - 1};
    };
    std::vector<std::set<int>> D(M + 1);
    Schedule s;
    if (M % 2 == 0) {
        s.N = 2;
        for (int j = 1; j <= M; ++j) D[j] = {j % 2 == 1 ? 0 : 1};
    } else {
        s.N = 2 * n2;
        int t = 1;
        for (int k = 1; k <= n2; ++k) {
            for (int i = 1; i <= M - 1; ++i) {
                int pos = ((i - k + 1) % M + M) % M;
                if (pos == 0) pos = M;
                D[pos].insert(i % 2 == 1 ? t - 1 : t);  // c_t -> slot t-1
            }
            t += 2;
        }
    }
    for (int j = 1; j <= M; ++j) {
        auto [pi, e] = edge_of(j);
        for (int c : D[j]) s.add(net.node(bb[pi][e]).id, net.node(bb[pi][e + 1]).id, c);
    }
    s.notes["claims"] = M % 2 == 0 ? "structure,orthogonal,rate-one,sink-balance" : "structure,orthogonal";
    return s;
}

Schedule synth_regular(const NetworkGraph& net) {
    NetworkClass c = classify(net);
    if (!c.regular) throw InputError("synth_regular: network is not regular");
    const int K = c.K;
    Schedule s;
    s.N = K;
    for (int i = 0; i < K; ++i) {
        const Path& p = c.backbone[i];
        for (size_t j = 1; j < p.size(); ++j)
            s.add(net.node(p[j - 1]).id, net.node(p[j]).id, static_cast<int>((i + j - 1) % K));
    }
    if (K < 3) s.notes["warning"] = "K=2 regular network: construction applied formally, optimality not claimed";
    s.notes["claims"] = K < 3 ? "structure,orthogonal,rate-one,sink-balance,causal"
                              : "structure,orthogonal,rate-one,sink-balance,backflow-free,causal";
    return s;
}

Schedule synth_kpp(const NetworkGraph& net) {
    int K = static_cast<int>(backbone_of(net).size());
    if (K >= 4) return synth_k4(net);
    if (K == 3) return synth_k3(net);
    if (K == 2) return synth_k2(net);
    throw InputError("synth_kpp: need at least two backbone paths");
}

Schedule synth_kppd(const NetworkGraph& net) {
    NetworkClass c = classify(net);
    if (!c.direct_link || !c.kpp_family) throw InputError("synth_kppd: network is not KPP(D)");
    NetworkGraph g = net.has_backbone() ? net : net.with_backbone(c.backbone);
    const PathSet& bb = g.backbone();
    const int K = static_cast<int>(bb.size());
    if (K == 2 && (c.path_lengths[0] + c.path_lengths[1]) % 2 != 0)
        throw InputError("synth_kppd: K=2 backbone with odd total length has no rate-one schedule");
    if (K < 2) throw InputError("synth_kppd: backbone not synthesizable");
    Schedule s = synth_kpp(g);
    auto dl = path_delays(s, g);
    int D = *std::max_element(dl.begin(), dl.end());
    for (int i = 0; i < K; ++i) {
        int add = (D - dl[i]) / s.N * s.N;
        if (add > 0) s.delays[g.node(bb[i][1]).id] += add;
    }
    dl = path_delays(s, g);
    s.notes["common_delay"] = std::to_string(*std::max_element(dl.begin(), dl.end()));
    for (int t = 0; t < s.N; ++t) s.add(g.node(g.source()).id, g.node(g.sink()).id, t);
    return s;
}

}  // namespace afr
