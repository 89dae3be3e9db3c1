#include "afr/netmodel.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <queue>
#include <set>
#include <sstream>

#include <json.hpp>

#include "afr/dmt.hpp"
#include "flow.hpp"

namespace afr {

using nlohmann::json;

NetworkGraph::NetworkGraph(std::vector<Node> nodes, std::vector<EdgeDecl> edges,
                           std::vector<std::vector<std::string>> backbone)
    : nodes_(std::move(nodes)), decls_(std::move(edges)) {
    build();
    for (const auto& p : backbone) {
        Path q;
        for (const auto& id : p) q.push_back(index(id));
        backbone_.push_back(std::move(q));
    }
    if (!backbone_.empty()) *this = with_backbone(backbone_);
}

void NetworkGraph::build() {
    idx_.clear();
    src_ = snk_ = -1;
    for (int v = 0; v < size(); ++v) {
        const auto& n = nodes_[v];
        if (n.id.empty()) throw InputError("node with empty id");
        if (!idx_.emplace(n.id, v).second) throw InputError("duplicate node id '" + n.id + "'");
        if (n.antennas < 1) throw InputError("node '" + n.id + "' needs at least one antenna");
        if (n.role == Role::Source) {
            if (src_ >= 0) throw InputError("multiple sources");
            src_ = v;
        } else if (n.role == Role::Sink) {
            if (snk_ >= 0) throw InputError("multiple sinks");
            snk_ = v;
        }
    }
    if (src_ < 0) throw InputError("no source");
    if (snk_ < 0) throw InputError("no sink");

    std::set<std::pair<int, int>> arcs;
    for (const auto& e : decls_) {
        auto a = idx_.find(e.from), b = idx_.find(e.to);
        if (a == idx_.end() || b == idx_.end())
            throw InputError("dangling edge " + e.from + "->" + e.to);
        if (a->second == b->second) throw InputError("self loop at '" + e.from + "'");
        arcs.insert({a->second, b->second});
        if (e.bidirectional) arcs.insert({b->second, a->second});
    }
    arcs_.assign(arcs.begin(), arcs.end());
    arc_idx_.clear();
    out_.assign(size(), {});
    in_.assign(size(), {});
    nbr_.assign(size(), {});
    for (int i = 0; i < static_cast<int>(arcs_.size()); ++i) {
        auto [u, v] = arcs_[i];
        arc_idx_[arcs_[i]] = i;
        out_[u].push_back(v);
        in_[v].push_back(u);
    }
    auto by_id = [this](int a, int b) { return nodes_[a].id < nodes_[b].id; };
    for (int v = 0; v < size(); ++v) {
        std::set<int> s(out_[v].begin(), out_[v].end());
        s.insert(in_[v].begin(), in_[v].end());
        nbr_[v].assign(s.begin(), s.end());
        std::sort(nbr_[v].begin(), nbr_[v].end(), by_id);
        std::sort(out_[v].begin(), out_[v].end(), by_id);
        std::sort(in_[v].begin(), in_[v].end(), by_id);
    }
}

int NetworkGraph::index(const std::string& id) const {
    auto it = idx_.find(id);
    if (it == idx_.end()) throw InputError("unknown node '" + id + "'");
    return it->second;
}

int NetworkGraph::arc_index(int u, int v) const {
    auto it = arc_idx_.find({u, v});
    return it == arc_idx_.end() ? -1 : it->second;
}

NetworkGraph NetworkGraph::with_backbone(const PathSet& bb) const {
    std::vector<int> used(size(), 0);
    for (const auto& p : bb) {
        if (p.size() < 3) throw InputError("backbone path shorter than two edges");
        if (p.front() != src_ || p.back() != snk_)
            throw InputError("backbone path must run from source to sink");
        for (size_t j = 0; j + 1 < p.size(); ++j)
            if (!has_arc(p[j], p[j + 1]))
                throw InputError("backbone uses missing edge " + arc_name(p[j], p[j + 1]));
        for (size_t j = 1; j + 1 < p.size(); ++j)
            if (used[p[j]]++) throw InputError("backbone paths share node '" + nodes_[p[j]].id + "'");
    }
    NetworkGraph g = *this;
    g.backbone_ = bb;
    return g;
}

NetworkGraph NetworkGraph::without(const std::vector<int>& drop) const {
    std::set<std::string> gone;
    for (int v : drop) gone.insert(nodes_[v].id);
    std::vector<Node> nodes;
    for (const auto& n : nodes_)
        if (!gone.count(n.id)) nodes.push_back(n);
    std::vector<EdgeDecl> edges;
    for (const auto& e : decls_)
        if (!gone.count(e.from) && !gone.count(e.to)) edges.push_back(e);
    std::vector<std::vector<std::string>> bb;
    bool keep = true;
    for (const auto& p : backbone_) {
        std::vector<std::string> q;
        for (int v : p) {
            if (gone.count(nodes_[v].id)) keep = false;
            q.push_back(nodes_[v].id);
        }
        bb.push_back(std::move(q));
    }
    return NetworkGraph(std::move(nodes), std::move(edges), keep ? bb : decltype(bb){});
}

NetworkGraph parse_network(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw InputError(std::string("malformed network JSON: ") + e.what());
    }
    try {
        std::vector<Node> nodes;
        for (const auto& jn : j.at("nodes")) {
            Node n;
            n.id = jn.at("id").get<std::string>();
            auto role = jn.at("role").get<std::string>();
            if (role == "source") n.role = Role::Source;
            else if (role == "relay") n.role = Role::Relay;
            else if (role == "sink") n.role = Role::Sink;
            else throw InputError("unknown role '" + role + "'");
            n.antennas = jn.value("antennas", 1);
            auto dup = jn.value("duplex", std::string("half"));
            if (dup == "half") n.duplex = Duplex::Half;
            else if (dup == "full") n.duplex = Duplex::Full;
            else throw InputError("unknown duplex '" + dup + "'");
            nodes.push_back(n);
        }
        std::vector<EdgeDecl> edges;
        for (const auto& je : j.at("edges"))
            edges.push_back({je.at("from").get<std::string>(), je.at("to").get<std::string>(),
                             je.value("bidirectional", true)});
        std::vector<std::vector<std::string>> bb;
        if (j.contains("backbone")) bb = j["backbone"].get<std::vector<std::vector<std::string>>>();
        return NetworkGraph(std::move(nodes), std::move(edges), std::move(bb));
    } catch (const json::exception& e) {
        throw InputError(std::string("malformed network JSON: ") + e.what());
    }
}

NetworkGraph load_network(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot read " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_network(ss.str());
}

std::string network_to_json(const NetworkGraph& net) {
    json j;
    j["nodes"] = json::array();
    for (const auto& n : net.nodes()) {
        const char* role = n.role == Role::Source ? "source" : n.role == Role::Sink ? "sink" : "relay";
        j["nodes"].push_back({{"id", n.id},
                              {"role", role},
                              {"antennas", n.antennas},
                              {"duplex", n.duplex == Duplex::Half ? "half" : "full"}});
    }
    j["edges"] = json::array();
    for (const auto& e : net.edge_decls())
        j["edges"].push_back({{"from", e.from}, {"to", e.to}, {"bidirectional", e.bidirectional}});
    if (net.has_backbone()) {
        j["backbone"] = json::array();
        for (const auto& p : net.backbone()) {
            json q = json::array();
            for (int v : p) q.push_back(net.node(v).id);
            j["backbone"].push_back(q);
        }
    }
    return j.dump(2) + "\n";
}

std::string family_name(Family f) {
    switch (f) {
        case Family::KPP: return "KPP";
        case Family::KPP_D: return "KPP_D";
        case Family::KPP_I: return "KPP_I";
        case Family::KPP_ID: return "KPP_ID";
        case Family::Layered: return "Layered";
        case Family::FcLayered: return "FcLayered";
        case Family::Regular: return "Regular";
        case Family::General: return "General";
    }
    return "General";
}

bool is_backbone_edge(const PathSet& bb, int u, int v) {
    for (const auto& p : bb)
        for (size_t j = 0; j + 1 < p.size(); ++j)
            if ((p[j] == u && p[j + 1] == v) || (p[j] == v && p[j + 1] == u)) return true;
    return false;
}

namespace {

PathSet flow_paths(const NetworkGraph& net) {
    const int n = net.size(), s = net.source(), t = net.sink();
    detail::MaxFlow mf(2 * n);
    const int big = n + 1;
    for (int v = 0; v < n; ++v) mf.add(2 * v, 2 * v + 1, (v == s || v == t) ? big : 1);
    std::vector<std::pair<int, int>> ids;  // (arc, flow-edge id)
    std::vector<int> order(n);
    for (int v = 0; v < n; ++v) order[v] = v;
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return net.node(a).id < net.node(b).id; });
    std::map<std::pair<int, int>, int> fid;
    for (int u : order)
        for (int v : net.out(u)) {
            if (v == s || u == t || (u == s && v == t)) continue;
            fid[{u, v}] = mf.add(2 * u + 1, 2 * v, 1);
        }
    mf.run(2 * s, 2 * t + 1);
    std::map<std::pair<int, int>, int> left;
    for (auto& [a, id] : fid)
        if (mf.flow_on(id) > 0) left[a] = 1;
    PathSet out;
    for (;;) {
        Path p{s};
        int u = s;
        while (u != t) {
            int nxt = -1;
            for (int v : net.out(u))
                if (left.count({u, v}) && left[{u, v}] > 0) {
                    nxt = v;
                    break;
                }
            if (nxt < 0) break;
            left[{u, nxt}] = 0;
            p.push_back(nxt);
            u = nxt;
        }
        if (u != t) break;
        out.push_back(p);
    }
    auto key = [&](const Path& p) {
        std::vector<std::string> k;
        for (int v : p) k.push_back(net.node(v).id);
        return k;
    };
    std::sort(out.begin(), out.end(), [&](const Path& a, const Path& b) { return key(a) < key(b); });
    return out;
}

// K node-disjoint paths that together visit every node, searched depth first.
std::optional<PathSet> covering_paths(const NetworkGraph& net, int K) {
    const int n = net.size(), s = net.source(), t = net.sink();
    if (K <= 0 || n > 40) return std::nullopt;
    std::vector<char> used(n, 0);
    used[s] = used[t] = 1;
    int free_left = n - 2;
    long budget = 400000;
    PathSet acc;
    Path cur;
    std::string last_start;
    std::function<bool(int, int)> extend = [&](int u, int k) -> bool {
        if (--budget < 0) return false;
        for (int v : net.out(u)) {
            if (v == t) {
                if (cur.size() < 2) continue;  // direct link is never a backbone path
                cur.push_back(t);
                acc.push_back(cur);
                cur.pop_back();
                bool ok;
                if (k + 1 == K) ok = (free_left == 0);
                else {
                    Path saved = cur;
                    std::string saved_start = last_start;
                    last_start = net.node(acc.back()[1]).id;
                    cur = {s};
                    ok = extend(s, k + 1);
                    cur = saved;
                    last_start = saved_start;
                }
                if (ok) return true;
                acc.pop_back();
                continue;
            }
            if (used[v]) continue;
            if (u == s && !last_start.empty() && net.node(v).id <= last_start) continue;
            used[v] = 1;
            --free_left;
            cur.push_back(v);
            if (extend(v, k)) return true;
            cur.pop_back();
            used[v] = 0;
            ++free_left;
        }
        return false;
    };
    cur = {s};
    if (extend(s, 0)) return acc;
    return std::nullopt;
}

bool layering_valid(const NetworkGraph& net, const std::vector<int>& lay, int top) {
    for (int v = 0; v < net.size(); ++v) {
        if (lay[v] < 0) return false;
        if (v == net.source() ? lay[v] != 0 : v == net.sink() ? lay[v] != top
                                                             : (lay[v] < 1 || lay[v] >= top))
            return false;
    }
    for (auto [u, v] : net.arcs())
        if (std::abs(lay[u] - lay[v]) > 1) return false;
    return true;
}

std::vector<int> bfs(const NetworkGraph& net, int from) {
    std::vector<int> d(net.size(), -1);
    std::queue<int> q;
    d[from] = 0;
    q.push(from);
    while (!q.empty()) {
        int u = q.front();
        q.pop();
        for (int v : net.nbrs(u))
            if (d[v] < 0) {
                d[v] = d[u] + 1;
                q.push(v);
            }
    }
    return d;
}

}  // namespace

PathSet node_disjoint_backbone(const NetworkGraph& net) {
    PathSet p = flow_paths(net);
    if (p.empty()) return p;
    if (auto cover = covering_paths(net, static_cast<int>(p.size()))) return *cover;
    return p;
}

std::optional<std::vector<std::vector<int>>> layering(const NetworkGraph& net) {
    auto ds = bfs(net, net.source());
    if (ds[net.sink()] < 2) return std::nullopt;
    int top = ds[net.sink()];
    std::vector<int> lay = ds;
    if (!layering_valid(net, lay, top)) {
        auto dt = bfs(net, net.sink());
        for (int v = 0; v < net.size(); ++v) lay[v] = dt[v] < 0 ? -1 : top - dt[v];
        if (!layering_valid(net, lay, top)) return std::nullopt;
    }
    std::vector<std::vector<int>> layers(top + 1);
    for (int v = 0; v < net.size(); ++v) layers[lay[v]].push_back(v);
    return layers;
}

NetworkClass classify(const NetworkGraph& net) {
    NetworkClass c;
    const int s = net.source(), t = net.sink();
    c.backbone = net.has_backbone() ? net.backbone() : node_disjoint_backbone(net);
    c.K = static_cast<int>(c.backbone.size());
    for (const auto& p : c.backbone) c.path_lengths.push_back(static_cast<int>(p.size()) - 1);
    c.direct_link = net.adjacent(s, t);

    std::vector<char> seen(net.size(), 0);
    for (const auto& p : c.backbone)
        for (int v : p) seen[v] = 1;
    c.kpp_family = c.K > 0 && std::all_of(seen.begin(), seen.end(), [](char x) { return x != 0; });
    for (auto [u, v] : net.arcs()) {
        if ((u == s && v == t) || (u == t && v == s)) continue;
        if (!is_backbone_edge(c.backbone, u, v)) c.interference = true;
    }

    if (auto lay = layering(net)) {
        c.L = static_cast<int>(lay->size()) - 2;
        bool wide = true;
        for (int i = 1; i <= c.L; ++i) wide = wide && (*lay)[i].size() >= 2;
        if (wide) {
            c.layered = true;
            c.layers = *lay;
            bool fc = true;
            for (int i = 0; i + 1 < static_cast<int>(lay->size()); ++i)
                for (int u : (*lay)[i])
                    for (int v : (*lay)[i + 1]) fc = fc && net.has_arc(u, v);
            c.fc_layered = fc;
        }
    }
    if (c.kpp_family && !c.direct_link && c.layered) {
        bool reg = true;
        for (int i = 1; i <= c.L; ++i) reg = reg && static_cast<int>(c.layers[i].size()) == c.K;
        for (int len : c.path_lengths) reg = reg && len == c.L + 1;
        c.regular = reg;
    }

    if (c.direct_link) {
        c.family = !c.kpp_family ? Family::General : c.interference ? Family::KPP_ID : Family::KPP_D;
    } else if (c.kpp_family) {
        c.family = c.regular ? Family::Regular : c.interference ? Family::KPP_I : Family::KPP;
    } else if (c.layered) {
        c.family = c.fc_layered ? Family::FcLayered : Family::Layered;
    } else {
        c.family = Family::General;
    }
    return c;
}

int min_cut(const NetworkGraph& net) {
    detail::MaxFlow mf(net.size());
    for (auto [u, v] : net.arcs()) mf.add(u, v, net.node(u).antennas * net.node(v).antennas);
    return mf.run(net.source(), net.sink());
}

DmtCurve cutset_bound(const NetworkGraph& net) {
    bool single = std::all_of(net.nodes().begin(), net.nodes().end(),
                              [](const Node& n) { return n.antennas == 1; });
    NetworkClass c = classify(net);
    if (single) {
        switch (c.family) {
            case Family::KPP:
            case Family::KPP_I:
            case Family::Regular: return linear_dmt(c.K, 1);
            case Family::KPP_D: return linear_dmt(c.K + 1, 1);
            default: break;
        }
        if (c.fc_layered && c.L < 4) {
            int m = 1 << 30;
            for (size_t i = 0; i + 1 < c.layers.size(); ++i)
                m = std::min<int>(m, static_cast<int>(c.layers[i].size() * c.layers[i + 1].size()));
            return linear_dmt(m, 1);
        }
    }
    DmtCurve d = linear_dmt(min_cut(net), 1);
    d.partial = true;
    return d;
}

}  // namespace afr
