#include "afr/synth_kppi.hpp"

#include "afr/dmt.hpp"

#include <algorithm>
#include <functional>
#include <numeric>
#include <set>
#include <stdexcept>

#include <json.hpp>

namespace afr {

namespace {

using Ids = std::vector<std::string>;

Ids ids_of(const NetworkGraph& g, const Path& p) {
    Ids out;
    for (int v : p) out.push_back(g.node(v).id);
    return out;
}

std::vector<Ids> bb_ids(const NetworkGraph& g) {
    std::vector<Ids> out;
    for (const auto& p : g.backbone()) out.push_back(ids_of(g, p));
    return out;
}

KppiNet rebuild(const KppiNet& in, const std::vector<Ids>& paths, const Ids& drop_ids) {
    KppiNet out;
    out.off = in.off;
    std::vector<int> drop;
    for (const auto& id : drop_ids) {
        out.off.push_back(id);
        drop.push_back(in.net.index(id));
    }
    NetworkGraph g = in.net.without(drop);
    PathSet bb;
    for (const auto& ids : paths) {
        Path p;
        for (const auto& id : ids) p.push_back(g.index(id));
        bb.push_back(p);
    }
    out.net = g.with_backbone(bb);
    std::sort(out.off.begin(), out.off.end());
    return out;
}

// non-backbone links between relays of different paths: (p, i, q, j), p < q
struct Link {
    int p, i, q, j;
};

std::vector<Link> interference_links(const NetworkGraph& g) {
    const auto& bb = g.backbone();
    std::vector<std::pair<int, int>> where(g.size(), {-1, -1});
    for (int p = 0; p < static_cast<int>(bb.size()); ++p)
        for (int i = 1; i + 1 < static_cast<int>(bb[p].size()); ++i) where[bb[p][i]] = {p, i};
    std::set<std::tuple<int, int, int, int>> seen;
    for (auto [u, v] : g.arcs()) {
        auto a = where[u], b = where[v];
        if (a.first < 0 || b.first < 0 || a.first == b.first) continue;
        if (a.first > b.first) std::swap(a, b);
        seen.insert({a.first, a.second, b.first, b.second});
    }
    std::vector<Link> out;
    for (auto [p, i, q, j] : seen) out.push_back({p, i, q, j});
    return out;
}

std::string partition_str(const NetworkGraph& g, const Partition& x) {
    std::string s = "(";
    const auto& bb = g.backbone();
    for (size_t p = 0; p < x.size(); ++p) {
        if (p) s += ",";
        s += x[p] < 0 ? std::string("-") : g.node(bb[p][x[p]]).id;
    }
    return s + ")";
}

}  // namespace

std::string layer_type_name(LayerType t) {
    switch (t) {
        case LayerType::T1: return "T1";
        case LayerType::T2: return "T2";
        case LayerType::T3: return "T3";
    }
    return "?";
}

KppiNet kppi_start(const NetworkGraph& net) {
    NetworkClass c = classify(net);
    if (!c.kpp_family) throw InputError("synth_kppi: network is not a KPP(I) network");
    if (c.direct_link) throw InputError("synth_kppi: networks with a direct link are not supported");
    if (c.K < 3) throw InputError("synth_kppi: need K >= 3 backbone paths (got " + std::to_string(c.K) + ")");
    KppiNet w;
    w.net = net.has_backbone() ? net : net.with_backbone(c.backbone);
    return w;
}

KppiNet preprocess_shortcuts(const KppiNet& in) {
    KppiNet w = in;
    for (int guard = 0; guard <= in.net.size(); ++guard) {
        const auto& bb = w.net.backbone();
        int bp = -1, bi = 0, bj = 0;
        for (int p = 0; p < static_cast<int>(bb.size()); ++p) {
            const int n = static_cast<int>(bb[p].size());
            for (int i = 0; i < n; ++i)
                for (int j = i + 2; j < n; ++j) {
                    if (i == 0 && j == n - 1) continue;
                    if (!w.net.has_arc(bb[p][i], bb[p][j])) continue;
                    if (bp < 0 || j - i < bj - bi) bp = p, bi = i, bj = j;
                }
        }
        if (bp < 0) return w;
        auto paths = bb_ids(w.net);
        Ids keep(paths[bp].begin(), paths[bp].begin() + bi + 1);
        keep.insert(keep.end(), paths[bp].begin() + bj, paths[bp].end());
        Ids drop(paths[bp].begin() + bi + 1, paths[bp].begin() + bj);
        paths[bp] = keep;
        w = rebuild(w, paths, drop);
    }
    throw std::logic_error("preprocess_shortcuts did not terminate");
}

std::vector<Switch> find_switches(const NetworkGraph& net, int k) {
    const auto& bb = net.backbone();
    const int K = static_cast<int>(bb.size());
    std::vector<Switch> out;
    if (k < 2 || k > K) return out;
    // links[a][b]: arcs from path a to path b as (pos on a, pos on b)
    std::vector<std::vector<std::vector<std::pair<int, int>>>> links(K, std::vector<std::vector<std::pair<int, int>>>(K));
    for (const auto& l : interference_links(net)) {
        int u = bb[l.p][l.i], v = bb[l.q][l.j];
        if (net.has_arc(u, v)) links[l.p][l.q].push_back({l.i, l.j});
        if (net.has_arc(v, u)) links[l.q][l.p].push_back({l.j, l.i});
    }
    std::set<std::tuple<std::vector<int>, Partition, Partition>> seen;
    std::vector<int> S(k);
    std::function<void(int, int)> choose = [&](int idx, int from) {
        if (idx == k) {
            std::vector<int> perm(S);
            do {
                bool derange = true;
                for (int a = 0; a < k; ++a) derange = derange && perm[a] != S[a];
                if (!derange) continue;
                Partition left(K, -1), right(K, -1);
                std::function<void(int)> pick = [&](int a) {
                    if (a == k) {
                        for (int q : S)
                            if (right[q] <= left[q]) return;
                        if (!seen.insert({S, left, right}).second) return;
                        Switch sw;
                        sw.left = left;
                        sw.right = right;
                        sw.S = S;
                        sw.match = perm;
                        sw.contiguous = true;
                        for (int q : S) sw.contiguous = sw.contiguous && right[q] == left[q] + 1;
                        out.push_back(sw);
                        return;
                    }
                    for (auto [i, j] : links[S[a]][perm[a]]) {
                        left[S[a]] = i;
                        right[perm[a]] = j;
                        pick(a + 1);
                    }
                    left[S[a]] = -1;
                    right[perm[a]] = -1;
                };
                pick(0);
            } while (std::next_permutation(perm.begin(), perm.end()));
            return;
        }
        for (int p = from; p < K; ++p) {
            S[idx] = p;
            choose(idx + 1, p + 1);
        }
    };
    choose(0, 0);
    return out;
}

KppiNet remove_noncontiguous_switches(const KppiNet& in) {
    KppiNet w = preprocess_shortcuts(in);
    for (int iter = 0; iter <= in.net.size(); ++iter) {
        const int K = static_cast<int>(w.net.backbone().size());
        std::optional<Switch> hit;
        for (int k = 2; k <= K && !hit; ++k)
            for (const auto& sw : find_switches(w.net, k))
                if (!sw.contiguous) {
                    hit = sw;
                    break;
                }
        if (!hit) return w;
        const auto& bb = w.net.backbone();
        auto paths = bb_ids(w.net);
        Ids drop;
        for (int q : hit->S)
            for (int i = hit->left[q] + 1; i < hit->right[q]; ++i) drop.push_back(w.net.node(bb[q][i]).id);
        auto old = paths;
        for (size_t a = 0; a < hit->S.size(); ++a) {
            int p = hit->S[a], q = hit->match[a];
            Ids np(old[p].begin(), old[p].begin() + hit->left[p] + 1);
            np.insert(np.end(), old[q].begin() + hit->right[q], old[q].end());
            paths[p] = np;
        }
        w = rebuild(w, paths, drop);
        w = preprocess_shortcuts(w);
    }
    throw std::logic_error("remove_noncontiguous_switches exceeded its iteration bound");
}

std::vector<Layer> layer_decompose(const NetworkGraph& net) {
    const auto& bb = net.backbone();
    const int K = static_cast<int>(bb.size());
    Partition n(K);
    for (int p = 0; p < K; ++p) n[p] = static_cast<int>(bb[p].size()) - 1;
    auto links = interference_links(net);
    auto separating = [&](const Partition& x) {
        for (const auto& l : links)
            if ((l.i < x[l.p] && l.j > x[l.q]) || (l.i > x[l.p] && l.j < x[l.q])) return false;
        return true;
    };
    std::vector<Partition> chain{n};
    Partition zero(K, 0);
    while (chain.back() != zero) {
        const Partition cur = chain.back();
        Partition x(K, 0), best;
        int best_sum = -1;
        for (;;) {
            if (x != cur && separating(x)) {
                int sum = std::accumulate(x.begin(), x.end(), 0);
                if (sum > best_sum) best_sum = sum, best = x;
            }
            int p = K - 1;
            while (p >= 0 && x[p] == cur[p]) x[p--] = 0;
            if (p < 0) break;
            ++x[p];
        }
        if (best_sum < 0) throw std::logic_error("layer_decompose: no separating partition left of " + partition_str(net, cur));
        chain.push_back(best);
    }
    std::reverse(chain.begin(), chain.end());

    auto count_links = [&](const Partition& a, const Partition& b) {
        int c = 0;
        for (const auto& l : links)
            if (a[l.p] <= l.i && l.i <= b[l.p] && a[l.q] <= l.j && l.j <= b[l.q]) ++c;
        return c;
    };
    std::vector<Layer> layers;
    for (size_t i = 0; i + 1 < chain.size(); ++i) {
        Layer L;
        L.left = chain[i];
        L.right = chain[i + 1];
        L.links = count_links(L.left, L.right);
        if (!layers.empty() && layers.back().links == 0 && L.links == 0) layers.back().right = L.right;
        else layers.push_back(L);
    }
    std::vector<Switch> contig;
    for (int k = 2; k <= std::min(3, K); ++k)
        for (const auto& sw : find_switches(net, k))
            if (sw.contiguous) contig.push_back(sw);
    for (auto& L : layers) {
        L.source_layer = L.left == zero;
        L.sink_layer = L.right == n;
        std::set<std::vector<int>> pairs;
        bool three = false;
        for (const auto& sw : contig) {
            bool inside = true;
            for (int q : sw.S) inside = inside && sw.left[q] >= L.left[q] && sw.right[q] <= L.right[q];
            if (!inside) continue;
            if (sw.S.size() == 3) three = true;
            else pairs.insert(sw.S);
        }
        L.type = three || pairs.size() >= 2 ? LayerType::T3 : pairs.size() == 1 ? LayerType::T2 : LayerType::T1;
    }
    return layers;
}

namespace {

// Right-to-left color search with exact minimal delays. A relay v on path p
// listens at col[p][i-1] and transmits at col[p][i]; R(v) is the time from
// its reception to arrival at the sink along the backbone. An active link
// u -> w (u transmits toward tgt in a slot where w listens) is causal iff
// R(w) > R(tgt).
class Assigner {
public:
    Assigner(const NetworkGraph& g) : g_(g), bb_(g.backbone()), K_(static_cast<int>(bb_.size())) {
        for (const auto& p : bb_) n_.push_back(static_cast<int>(p.size()) - 1);
        where_.assign(g.size(), {-1, -1});
        for (int p = 0; p < K_; ++p)
            for (int i = 1; i < n_[p]; ++i) where_[bb_[p][i]] = {p, i};
        col_.resize(K_);
        for (int p = 0; p < K_; ++p) col_[p].assign(n_[p], -1);
        R_.assign(g.size(), 0);
        known_.assign(g.size(), 0);
        known_[g.sink()] = 1;
        for (auto [u, w] : g.arcs()) {
            if (u == g.sink() || w == g.source()) continue;
            auto [p, i] = where_[u];
            if (p >= 0 && bb_[p][i + 1] == w) continue;  // own forward arc
            in_arcs_.resize(g.size());
            in_arcs_[w].push_back(u);
            arcs_.push_back({u, w});
        }
        in_arcs_.resize(g.size());
    }

    bool run(std::vector<Layer>& layers) {
        layers_ = &layers;
        return dfs(static_cast<int>(layers.size()) - 1);
    }

    Schedule schedule() const {
        Schedule s;
        s.N = 3;
        for (int p = 0; p < K_; ++p)
            for (int j = 0; j < n_[p]; ++j) s.add(g_.node(bb_[p][j]).id, g_.node(bb_[p][j + 1]).id, col_[p][j]);
        for (int v = 0; v < g_.size(); ++v)
            if (int d = delay(v); d > 0) s.delays[g_.node(v).id] = d;
        return s;
    }

    int delay(int v) const {
        auto [p, i] = where_[v];
        if (p < 0) return 0;
        return static_cast<int>(R_[v] - R_[bb_[p][i + 1]] - delta(p, i));
    }

    long evaluations() const { return evals_; }

private:
    struct State {
        std::vector<std::vector<int>> col;
        std::vector<long> R;
        std::vector<char> known;
    };
    State save() const { return {col_, R_, known_}; }
    void restore(const State& s) { col_ = s.col, R_ = s.R, known_ = s.known; }

    int delta(int p, int i) const { return ((col_[p][i] - col_[p][i - 1]) % 3 + 3) % 3; }

    // (color, intended receiver) pairs of a transmitter
    template <class F>
    void transmits(int u, F f) const {
        if (u == g_.source()) {
            for (int q = 0; q < K_; ++q)
                if (col_[q][0] >= 0) f(col_[q][0], bb_[q][1]);
            return;
        }
        auto [p, i] = where_[u];
        if (p >= 0 && col_[p][i] >= 0) f(col_[p][i], bb_[p][i + 1]);
    }

    bool listens(int w, int c) const {
        if (w == g_.sink()) {
            for (int q = 0; q < K_; ++q)
                if (col_[q][n_[q] - 1] == c) return true;
            return false;
        }
        auto [p, i] = where_[w];
        return p >= 0 && col_[p][i - 1] == c;
    }

    bool violated() const {
        for (auto [u, w] : arcs_) {
            if (!known_[w]) continue;
            bool bad = false;
            transmits(u, [&](int c, int tgt) {
                if (tgt != w && known_[tgt] && listens(w, c) && R_[w] <= R_[tgt]) bad = true;
            });
            if (bad) return true;
        }
        return false;
    }

    std::vector<int> owned(const Layer& L) const {
        std::vector<int> out;
        for (int p = 0; p < K_; ++p)
            for (int i = std::min(L.right[p], n_[p] - 1); i > L.left[p]; --i) out.push_back(bb_[p][i]);
        return out;
    }

    // least fixpoint of R over the layer's nodes; false when infeasible
    bool solve(const Layer& L, long& cost) {
        ++evals_;
        if (evals_ > kBudget) throw std::runtime_error("assign_colors_delays: search budget exhausted");
        auto own = owned(L);
        for (int v : own) known_[v] = 0;
        const int limit = 4 * static_cast<int>(own.size() + arcs_.size()) + 10;
        bool changed = true;
        for (int pass = 0; changed; ++pass) {
            if (pass > limit) return false;
            changed = false;
            for (int v : own) {
                auto [p, i] = where_[v];
                int succ = bb_[p][i + 1];
                int d = delta(p, i);
                if (d == 0 || !known_[succ]) return false;
                long base = R_[succ] + d, lo = base;
                for (int u : in_arcs_[v])
                    transmits(u, [&](int c, int tgt) {
                        if (tgt != v && known_[tgt] && c == col_[p][i - 1]) lo = std::max(lo, R_[tgt] + 1);
                    });
                long val = base + (lo - base + 2) / 3 * 3;
                if (!known_[v] || val != R_[v]) {
                    R_[v] = val;
                    known_[v] = 1;
                    changed = true;
                }
            }
        }
        if (violated()) return false;
        cost = 0;
        for (int v : own) cost += delay(v);
        return true;
    }

    // enumerate colorings of the layer's edges, canonical choices first
    bool enumerate(const Layer& L, const std::function<bool()>& done) {
        std::vector<std::pair<int, int>> edges;
        for (int p = 0; p < K_; ++p)
            for (int j = L.right[p] - 1; j >= L.left[p]; --j) edges.push_back({p, j});
        std::function<bool(size_t)> rec = [&](size_t e) -> bool {
            if (e == edges.size()) return done();
            auto [p, j] = edges[e];
            int pref = j + 1 < n_[p] ? (col_[p][j + 1] + 2) % 3 : p % 3;
            int order[3] = {pref, (pref + 1) % 3, (pref + 2) % 3};
            for (int c : order) {
                if (j + 1 < n_[p] && c == col_[p][j + 1]) continue;
                bool clash = false;
                for (int q = 0; q < K_; ++q) {
                    if (q == p) continue;
                    if (j == n_[p] - 1 && col_[q][n_[q] - 1] == c) clash = true;
                    if (j == 0 && col_[q][0] == c) clash = true;
                }
                if (clash) continue;
                col_[p][j] = c;
                if (rec(e + 1)) return true;
            }
            col_[p][j] = -1;
            return false;
        };
        return rec(0);
    }

    bool dfs(int li) {
        if (li < 0) return true;
        const Layer& L = (*layers_)[li];
        State snap = save();
        if (L.links == 0) {
            return enumerate(L, [&]() {
                long cost = 0;
                State inner = save();
                if (solve(L, cost) && dfs(li - 1)) return true;
                restore(inner);
                return false;
            }) || (restore(snap), false);
        }
        struct Cand {
            long cost;
            size_t idx;
            std::vector<std::vector<int>> col;
        };
        std::vector<Cand> cands;
        enumerate(L, [&]() {
            long cost = 0;
            State inner = save();
            if (solve(L, cost)) cands.push_back({cost, cands.size(), col_});
            restore(inner);
            return cands.size() >= kMaxCandidates;
        });
        std::stable_sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) { return a.cost < b.cost; });
        for (const auto& c : cands) {
            restore(snap);
            col_ = c.col;
            long cost = 0;
            if (solve(L, cost) && dfs(li - 1)) return true;
        }
        restore(snap);
        return false;
    }

    static constexpr long kBudget = 400000;
    static constexpr size_t kMaxCandidates = 20000;

    const NetworkGraph& g_;
    const PathSet& bb_;
    int K_;
    std::vector<int> n_;
    std::vector<std::pair<int, int>> where_;
    std::vector<std::vector<int>> col_;
    std::vector<long> R_;
    std::vector<char> known_;
    std::vector<std::pair<int, int>> arcs_;
    std::vector<std::vector<int>> in_arcs_;
    std::vector<Layer>* layers_ = nullptr;
    long evals_ = 0;
};

}  // namespace

Schedule assign_colors_delays(std::vector<Layer>& layers, const NetworkGraph& net) {
    const auto& bb = net.backbone();
    if (bb.size() != 3) throw InputError("assign_colors_delays: expects exactly three backbone paths");
    Assigner a(net);
    if (!a.run(layers)) {
        std::string where;
        for (const auto& L : layers)
            if (L.links) where += " " + partition_str(net, L.left) + "->" + partition_str(net, L.right);
        throw std::runtime_error("assign_colors_delays: no causal coloring found; layers with links:" + where);
    }
    Schedule s = a.schedule();
    for (auto& L : layers) {
        L.left_comp.clear(), L.right_comp.clear(), L.internal.clear();
        for (int p = 0; p < 3; ++p) {
            const int n = static_cast<int>(bb[p].size()) - 1;
            for (int i = L.left[p]; i <= L.right[p]; ++i) {
                if (i == 0 || i == n) continue;
                int v = bb[p][i];
                const auto& id = net.node(v).id;
                if (i == L.left[p]) L.left_comp[id] = a.delay(v);
                else if (i == L.right[p]) L.right_comp[id] = a.delay(v);
                else L.internal[id] = a.delay(v);
            }
        }
    }
    return s;
}

namespace {

struct ThreePath {
    Schedule sched;
    KppiNet work;
    std::vector<Layer> layers;
};

ThreePath three_path(const KppiNet& start) {
    ThreePath out;
    out.work = remove_noncontiguous_switches(start);
    out.layers = layer_decompose(out.work.net);
    out.sched = assign_colors_delays(out.layers, out.work.net);
    out.sched.deactivated.insert(out.work.off.begin(), out.work.off.end());
    out.sched.backbone = bb_ids(out.work.net);
    CausalResult c = is_causal(out.sched, out.work.net);
    if (!c.causal) throw std::logic_error("synth_kppi: result failed the causality check: " + c.witness->str());
    return out;
}

nlohmann::json sidecar(const ThreePath& t) {
    nlohmann::json j;
    const NetworkGraph& g = t.work.net;
    j["backbone"] = bb_ids(g);
    j["deactivated"] = t.work.off;
    j["layers"] = nlohmann::json::array();
    for (const auto& L : t.layers) {
        nlohmann::json jl;
        auto ids = [&](const Partition& x) {
            Ids out;
            for (int p = 0; p < static_cast<int>(x.size()); ++p) out.push_back(g.node(g.backbone()[p][x[p]]).id);
            return out;
        };
        jl["left"] = ids(L.left);
        jl["right"] = ids(L.right);
        jl["type"] = L.source_layer && L.sink_layer ? "source+sink" : L.source_layer ? "source" : L.sink_layer ? "sink" : layer_type_name(L.type);
        jl["switch_type"] = layer_type_name(L.type);
        jl["links"] = L.links;
        jl["left_compensation"] = L.left_comp;
        jl["right_compensation"] = L.right_comp;
        jl["internal_delays"] = L.internal;
        j["layers"].push_back(jl);
    }
    return j;
}

}  // namespace

std::pair<Schedule, std::string> synth_kppi_with_sidecar(const NetworkGraph& net, int T) {
    if (T < 1) throw InputError("synth_kppi: T must be positive");
    KppiNet start = kppi_start(net);
    const PathSet bb = start.net.backbone();
    const int K = static_cast<int>(bb.size());
    nlohmann::json side;
    side["K"] = K;
    side["subnetworks"] = nlohmann::json::array();
    if (K == 3) {
        ThreePath t = three_path(start);
        t.sched.notes["claims"] = "structure,orthogonal,rate-one,sink-balance,causal";
        side["subnetworks"].push_back(sidecar(t));
        return {t.sched, side.dump(2)};
    }
    Schedule s;
    s.N = 3;
    for (const auto& tri : triples(K)) {
        PathSet sub_bb;
        std::set<int> keep;
        for (int p : tri) {
            sub_bb.push_back(bb[p]);
            keep.insert(bb[p].begin(), bb[p].end());
        }
        std::vector<int> drop;
        for (int v = 0; v < start.net.size(); ++v)
            if (!keep.count(v)) drop.push_back(v);
        KppiNet sub;
        sub.net = start.net.with_backbone(sub_bb).without(drop);
        ThreePath t = three_path(sub);
        int maxd = 0;
        for (int d : path_delays(t.sched, t.work.net)) maxd = std::max(maxd, d);
        Phase ph;
        ph.sched = t.sched;
        ph.backbone = ph.sched.backbone;
        ph.sched.backbone.clear();
        ph.active_cycles = T;
        ph.cycles = T + (maxd + 2) / 3 + 1;
        s.phases.push_back(std::move(ph));
        nlohmann::json js = sidecar(t);
        js["paths"] = tri;
        side["subnetworks"].push_back(js);
    }
    s.notes["subnetworks"] = std::to_string(s.phases.size());
    s.notes["claims"] = "structure,orthogonal,causal";
    return {s, side.dump(2)};
}

Schedule synth_kppi(const NetworkGraph& net, int T) { return synth_kppi_with_sidecar(net, T).first; }

}  // namespace afr
