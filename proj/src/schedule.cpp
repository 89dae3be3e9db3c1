#include "afr/schedule.hpp"

#include <algorithm>
#include <fstream>
#include <queue>
#include <sstream>
#include <tuple>

#include <json.hpp>

namespace afr {

using nlohmann::json;

int Schedule::period() const {
    if (!phased()) return N;
    int total = 0;
    for (const auto& ph : phases) total += ph.cycles * ph.sched.N;
    return total;
}

void Schedule::add(const std::string& u, const std::string& v, int slot) {
    auto& c = colors[{u, v}];
    if (std::find(c.begin(), c.end(), slot) == c.end()) {
        c.push_back(slot);
        std::sort(c.begin(), c.end());
    }
}

namespace {

Schedule from_json(const json& j) {
    Schedule s;
    s.N = j.at("cycle_length").get<int>();
    if (s.N < 1) throw InputError("cycle_length must be positive");
    if (j.contains("colors"))
        for (auto& [key, slots] : j["colors"].items()) {
            auto pos = key.find("->");
            if (pos == std::string::npos) throw InputError("bad edge key '" + key + "'");
            auto& c = s.colors[{key.substr(0, pos), key.substr(pos + 2)}];
            c = slots.get<std::vector<int>>();
            std::sort(c.begin(), c.end());
            c.erase(std::unique(c.begin(), c.end()), c.end());
        }
    if (j.contains("delays"))
        for (auto& [node, d] : j["delays"].items()) {
            s.delays[node] = d.get<int>();
            if (s.delays[node] < 0) throw InputError("negative delay at '" + node + "'");
        }
    if (j.contains("deactivated"))
        for (auto& v : j["deactivated"]) s.deactivated.insert(v.get<std::string>());
    if (j.contains("backbone") && !j.contains("cycles"))
        s.backbone = j["backbone"].get<std::vector<std::vector<std::string>>>();
    if (j.contains("phases"))
        for (auto& jp : j["phases"]) {
            Phase p;
            p.sched = from_json(jp);
            p.cycles = jp.value("cycles", 1);
            p.active_cycles = jp.value("active_cycles", p.cycles);
            if (jp.contains("backbone"))
                p.backbone = jp["backbone"].get<std::vector<std::vector<std::string>>>();
            s.phases.push_back(std::move(p));
        }
    if (j.contains("notes"))
        for (auto& [k, v] : j["notes"].items()) s.notes[k] = v.get<std::string>();
    return s;
}

json to_json(const Schedule& s) {
    json j;
    j["cycle_length"] = s.N;
    j["colors"] = json::object();
    for (const auto& [k, slots] : s.colors) j["colors"][k.first + "->" + k.second] = slots;
    j["delays"] = json::object();
    for (const auto& [k, d] : s.delays)
        if (d != 0) j["delays"][k] = d;
    j["deactivated"] = std::vector<std::string>(s.deactivated.begin(), s.deactivated.end());
    if (!s.backbone.empty()) j["backbone"] = s.backbone;
    if (s.phased()) {
        j["phases"] = json::array();
        for (const auto& p : s.phases) {
            json jp = to_json(p.sched);
            jp["cycles"] = p.cycles;
            jp["active_cycles"] = p.active_cycles;
            jp["backbone"] = p.backbone;
            j["phases"].push_back(jp);
        }
    }
    if (!s.notes.empty()) j["notes"] = s.notes;
    return j;
}

// Slot sets per node for a flat schedule.
struct Activity {
    std::vector<std::vector<int>> tx, rx;  // sorted slots in [0,N)
    std::vector<char> off;
    std::vector<int> delay;
};

Activity activity(const Schedule& s, const NetworkGraph& net) {
    Activity a;
    a.tx.assign(net.size(), {});
    a.rx.assign(net.size(), {});
    a.off.assign(net.size(), 0);
    a.delay.assign(net.size(), 0);
    for (const auto& id : s.deactivated)
        if (net.has_node(id)) a.off[net.index(id)] = 1;
    for (const auto& [k, d] : s.delays)
        if (net.has_node(k)) a.delay[net.index(k)] = d;
    for (const auto& [k, slots] : s.colors) {
        int u = net.index(k.first), v = net.index(k.second);
        for (int t : slots) {
            a.tx[u].push_back(t);
            a.rx[v].push_back(t);
        }
    }
    for (auto* vv : {&a.tx, &a.rx})
        for (auto& x : *vv) {
            std::sort(x.begin(), x.end());
            x.erase(std::unique(x.begin(), x.end()), x.end());
        }
    return a;
}

bool has_slot(const std::vector<int>& slots, int t, int N) {
    return std::binary_search(slots.begin(), slots.end(), ((t % N) + N) % N);
}

const std::vector<int>& slots_of(const Schedule& s, const NetworkGraph& net, int u, int v) {
    static const std::vector<int> none;
    auto it = s.colors.find({net.node(u).id, net.node(v).id});
    return it == s.colors.end() ? none : it->second;
}

std::string slots_str(const std::vector<int>& a) {
    std::string out = "{";
    for (size_t i = 0; i < a.size(); ++i) out += (i ? "," : "") + std::to_string(a[i]);
    return out + "}";
}

std::vector<int> common(const std::vector<int>& a, const std::vector<int>& b) {
    std::vector<int> c;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(c));
    return c;
}

// next slot > after (absolute) at which a periodic slot set fires
int next_fire(const std::vector<int>& slots, int N, int after) {
    int base = (after + 1) - ((after + 1) % N + N) % N;
    for (int c = 0; c < 3; ++c)
        for (int t : slots) {
            int abs_t = base + c * N + t;
            if (abs_t > after) return abs_t;
        }
    return -1;
}

}  // namespace

Schedule parse_schedule(const std::string& text) {
    try {
        return from_json(json::parse(text));
    } catch (const json::exception& e) {
        throw InputError(std::string("malformed schedule JSON: ") + e.what());
    }
}

Schedule load_schedule(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot read " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_schedule(ss.str());
}

std::string schedule_to_json(const Schedule& s) { return to_json(s).dump(2) + "\n"; }

bool CheckReport::ok() const {
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

const Check* CheckReport::find(const std::string& name) const {
    for (const auto& c : checks)
        if (c.name == name) return &c;
    return nullptr;
}

std::string CheckReport::str() const {
    std::string out;
    for (const auto& c : checks) {
        out += c.name + ": " + (c.pass ? "pass" : "FAIL");
        if (!c.witness.empty()) out += " (" + c.witness + ")";
        out += "\n";
    }
    return out;
}

PathSet backbone_of(const NetworkGraph& net) {
    return net.has_backbone() ? net.backbone() : node_disjoint_backbone(net);
}

Schedule phase_schedule(const Schedule& s, int p) { return s.phases.at(p).sched; }

NetworkGraph phase_network(const Schedule& s, int p, const NetworkGraph& net) {
    const auto& ph = s.phases.at(p);
    std::set<std::string> keep;
    PathSet bb;
    for (const auto& path : ph.backbone) {
        Path q;
        for (const auto& id : path) {
            keep.insert(id);
            q.push_back(net.index(id));
        }
        bb.push_back(q);
    }
    std::vector<int> drop;
    for (int v = 0; v < net.size(); ++v)
        if (!keep.count(net.node(v).id) || ph.sched.deactivated.count(net.node(v).id)) drop.push_back(v);
    if (keep.empty()) drop.clear();
    NetworkGraph sub = net.with_backbone(bb.empty() ? backbone_of(net) : bb).without(drop);
    return sub;
}

NetworkGraph schedule_network(const Schedule& s, const NetworkGraph& net) {
    if (s.backbone.empty() && s.deactivated.empty()) return net;
    PathSet bb;
    for (const auto& path : s.backbone) {
        Path q;
        for (const auto& id : path) q.push_back(net.index(id));
        bb.push_back(q);
    }
    std::vector<int> drop;
    for (const auto& id : s.deactivated)
        if (net.has_node(id)) drop.push_back(net.index(id));
    NetworkGraph g = bb.empty() ? net : net.with_backbone(bb);
    return g.without(drop);
}

CheckReport validate(const Schedule& s, const NetworkGraph& net) {
    CheckReport rep;
    if (s.phased()) {
        for (size_t p = 0; p < s.phases.size(); ++p) {
            auto sub = validate(s.phases[p].sched, net);
            for (auto c : sub.checks) {
                c.name = "phase" + std::to_string(p) + "." + c.name;
                rep.checks.push_back(c);
            }
        }
        return rep;
    }
    Check arcs{"arcs", true, ""}, range{"slot-range", true, ""}, deact{"deactivated", true, ""},
        hd{"half-duplex", true, ""}, dl{"delay-mod3", true, ""};
    for (const auto& [k, slots] : s.colors) {
        if (!net.has_node(k.first) || !net.has_node(k.second) ||
            !net.has_arc(net.index(k.first), net.index(k.second))) {
            arcs = {"arcs", false, "no edge " + k.first + "->" + k.second};
            continue;
        }
        for (int t : slots)
            if (t < 0 || t >= s.N)
                range = {"slot-range", false, k.first + "->" + k.second + " slot " + std::to_string(t)};
        if (s.deactivated.count(k.first) || s.deactivated.count(k.second))
            deact = {"deactivated", false, "colored edge " + k.first + "->" + k.second};
    }
    if (!arcs.pass) {
        rep.checks = {arcs};
        return rep;
    }
    Activity a = activity(s, net);
    for (int v = 0; v < net.size(); ++v) {
        if (net.node(v).duplex != Duplex::Half) continue;
        auto c = common(a.tx[v], a.rx[v]);
        if (!c.empty())
            hd = {"half-duplex", false, net.node(v).id + " listens and transmits in slot " + std::to_string(c[0])};
        if (s.N == 3 && a.delay[v] % 3 == 2)
            dl = {"delay-mod3", false, net.node(v).id + " delay " + std::to_string(a.delay[v])};
    }
    rep.checks = {arcs, range, deact, hd, dl};
    return rep;
}

namespace {

Rational flat_rate(const Schedule& s, const NetworkGraph& net, const PathSet& bb) {
    std::int64_t m = 0;
    for (const auto& p : bb) {
        size_t mi = slots_of(s, net, p[0], p[1]).size();
        for (size_t j = 1; j + 1 < p.size(); ++j)
            if (slots_of(s, net, p[j], p[j + 1]).size() != mi)
                throw InputError("path through " + net.node(p[1]).id + " is not equi-activated");
        m += static_cast<std::int64_t>(mi);
    }
    return Rational(m, s.N);
}

CheckReport flat_orthogonal(const Schedule& s, const NetworkGraph& net, const PathSet& bb) {
    Check c3{"source-distinct", true, ""}, c4{"sink-distinct", true, ""},
        c5{"consecutive-distinct", true, ""}, c6{"equal-activation", true, ""};
    const int K = static_cast<int>(bb.size());
    for (int i = 0; i < K && c3.pass; ++i)
        for (int k = i + 1; k < K && c3.pass; ++k) {
            const auto& a = bb[i];
            const auto& b = bb[k];
            auto x = common(slots_of(s, net, a[0], a[1]), slots_of(s, net, b[0], b[1]));
            if (!x.empty())
                c3 = {"source-distinct", false,
                      net.arc_name(a[0], a[1]) + " and " + net.arc_name(b[0], b[1]) + " share slot " +
                          std::to_string(x[0])};
            size_t na = a.size(), nb = b.size();
            auto y = common(slots_of(s, net, a[na - 2], a[na - 1]), slots_of(s, net, b[nb - 2], b[nb - 1]));
            if (!y.empty() && c4.pass)
                c4 = {"sink-distinct", false,
                      net.arc_name(a[na - 2], a[na - 1]) + " and " + net.arc_name(b[nb - 2], b[nb - 1]) +
                          " share slot " + std::to_string(y[0])};
        }
    for (int i = 0; i < K; ++i) {
        const auto& p = bb[i];
        for (size_t j = 0; j + 2 < p.size() && c5.pass; ++j) {
            auto x = common(slots_of(s, net, p[j], p[j + 1]), slots_of(s, net, p[j + 1], p[j + 2]));
            if (!x.empty())
                c5 = {"consecutive-distinct", false,
                      "at " + net.node(p[j + 1]).id + " slot " + std::to_string(x[0])};
        }
        size_t m = slots_of(s, net, p[0], p[1]).size();
        for (size_t j = 1; j + 1 < p.size() && c6.pass; ++j)
            if (slots_of(s, net, p[j], p[j + 1]).size() != m)
                c6 = {"equal-activation", false,
                      net.arc_name(p[j], p[j + 1]) + " has " +
                          slots_str(slots_of(s, net, p[j], p[j + 1])) + " vs " + std::to_string(m) + " slots"};
    }
    return {{c3, c4, c5, c6}};
}

bool flat_backflow_free(const Schedule& s, const NetworkGraph& net, const PathSet& bb) {
    for (const auto& p : bb)
        for (size_t j = 0; j + 3 < p.size(); ++j)
            if (!common(slots_of(s, net, p[j], p[j + 1]), slots_of(s, net, p[j + 2], p[j + 3])).empty())
                return false;
    return true;
}

template <class F>
auto per_phase(const Schedule& s, const NetworkGraph& net, F f) {
    std::vector<decltype(f(s, net, PathSet{}))> out;
    if (!s.phased()) {
        NetworkGraph g = schedule_network(s, net);
        out.push_back(f(s, g, backbone_of(g)));
        return out;
    }
    for (size_t p = 0; p < s.phases.size(); ++p) {
        NetworkGraph sub = phase_network(s, static_cast<int>(p), net);
        out.push_back(f(s.phases[p].sched, sub, sub.backbone()));
    }
    return out;
}

}  // namespace

Rational rate(const Schedule& s, const NetworkGraph& net) {
    if (!s.phased()) {
        NetworkGraph g = schedule_network(s, net);
        return flat_rate(s, g, backbone_of(g));
    }
    Rational sym(0);
    std::int64_t slots = 0;
    auto r = per_phase(s, net, flat_rate);
    for (size_t p = 0; p < s.phases.size(); ++p) {
        const auto& ph = s.phases[p];
        sym += r[p] * Rational(static_cast<std::int64_t>(ph.active_cycles) * ph.sched.N);
        slots += static_cast<std::int64_t>(ph.cycles) * ph.sched.N;
    }
    return sym / Rational(slots);
}

CheckReport verify_orthogonal(const Schedule& s, const NetworkGraph& net) {
    auto reps = per_phase(s, net, flat_orthogonal);
    if (reps.size() == 1) return reps[0];
    CheckReport out;
    for (size_t p = 0; p < reps.size(); ++p)
        for (auto c : reps[p].checks) {
            c.name = "phase" + std::to_string(p) + "." + c.name;
            out.checks.push_back(c);
        }
    return out;
}

bool verify_backflow_free(const Schedule& s, const NetworkGraph& net) {
    auto r = per_phase(s, net, flat_backflow_free);
    return std::all_of(r.begin(), r.end(), [](bool b) { return b; });
}

CheckReport verify_dmt_opt(const Schedule& s, const NetworkGraph& net) {
    CheckReport rep;
    Check rc{"rate-one", true, ""}, bal{"sink-balance", true, ""}, bf{"backflow-free", true, ""};
    try {
        Rational r = rate(s, net);
        if (r != Rational(1))
            rc = {"rate-one", false, "rate=" + std::to_string(r.numerator()) + "/" + std::to_string(r.denominator())};
    } catch (const InputError& e) {
        rc = {"rate-one", false, e.what()};
    }
    auto balance = [](const Schedule& sc, const NetworkGraph& g, const PathSet& bb) {
        std::vector<size_t> got;
        for (const auto& p : bb) got.push_back(slots_of(sc, g, p[p.size() - 2], p.back()).size());
        return got;
    };
    for (const auto& got : per_phase(s, net, balance))
        for (size_t i = 1; i < got.size() && bal.pass; ++i)
            if (got[i] != got[0])
                bal = {"sink-balance", false,
                       "path " + std::to_string(i) + " delivers " + std::to_string(got[i]) + " vs " +
                           std::to_string(got[0])};
    if (!verify_backflow_free(s, net)) bf = {"backflow-free", false, "A_ij and A_i(j+2) intersect"};
    rep.checks = {rc, bal, bf};
    return rep;
}

namespace {

std::vector<PathDelay> flat_delays(const Schedule& s, const NetworkGraph& net, const PathSet& bb) {
    Activity a = activity(s, net);
    std::vector<PathDelay> out;
    const int N = s.N, horizon = 64 * N + 64;
    for (int i = 0; i < static_cast<int>(bb.size()); ++i) {
        const auto& p = bb[i];
        for (int e : slots_of(s, net, p[0], p[1])) {
            int tau = e;
            for (size_t j = 1; j + 1 < p.size(); ++j) {
                int v = p[j], d = a.delay[v];
                const auto& out_slots = slots_of(s, net, v, p[j + 1]);
                if (out_slots.empty()) throw InputError("path never activates " + net.arc_name(v, p[j + 1]));
                int t = next_fire(out_slots, N, tau + d);
                int nxt_listen = next_fire(a.rx[v], N, tau);
                if (t < 0 || t > horizon || (nxt_listen >= 0 && nxt_listen < t - d))
                    throw InputError("symbol on path " + std::to_string(i) + " never reaches the sink (overwritten at " +
                                     net.node(v).id + ")");
                tau = t;
            }
            out.push_back({i, e, tau - e});
        }
    }
    return out;
}

}  // namespace

std::vector<PathDelay> delay_profile(const Schedule& s, const NetworkGraph& net) {
    std::vector<PathDelay> all;
    int offset = 0;
    for (auto& part : per_phase(s, net, flat_delays)) {
        int most = 0;
        for (auto& d : part) {
            most = std::max(most, d.path + 1);
            d.path += offset;
            all.push_back(d);
        }
        offset += most;
    }
    return all;
}

std::vector<int> path_delays(const Schedule& s, const NetworkGraph& net) {
    std::vector<int> out;
    for (const auto& d : delay_profile(s, net)) {
        int k = d.path;
        if (static_cast<int>(out.size()) <= k) out.resize(k + 1, 0);
        out[k] = std::max(out[k], d.delay);
    }
    return out;
}

std::string CausalWitness::str() const {
    return "symbol at slot " + std::to_string(emit) + " on path " + std::to_string(path) + " leaves at " +
           branch_node + " via " + link.first + "->" + link.second + ", arrives at " +
           std::to_string(other_arrival) + " vs backbone " + std::to_string(backbone_arrival);
}

namespace {

CausalResult flat_causal(const Schedule& s, const NetworkGraph& net, const PathSet& bb, int cycles) {
    Activity a = activity(s, net);
    const int N = s.N, src = net.source(), snk = net.sink();
    const int cap = 64 * N + 64;
    std::map<std::pair<int, int>, int> fwd;  // backbone arc -> path
    for (int i = 0; i < static_cast<int>(bb.size()); ++i)
        for (size_t j = 0; j + 1 < bb[i].size(); ++j) fwd[{bb[i][j], bb[i][j + 1]}] = i;
    auto listens = [&](int v, int t) { return v != src && !a.off[v] && has_slot(a.rx[v], t, N); };

    for (int i = 0; i < static_cast<int>(bb.size()); ++i) {
        int delivered = 0;
        for (int c = 0; c < cycles; ++c)
            for (int e0 : slots_of(s, net, bb[i][0], bb[i][1])) {
                const int e = e0 + c * N;
                struct Ev {
                    int t, v;
                    bool off;
                    int bu, bv;
                };
                auto cmp = [](const Ev& x, const Ev& y) {
                    return std::tie(x.t, x.off, x.v) > std::tie(y.t, y.off, y.v);
                };
                std::priority_queue<Ev, std::vector<Ev>, decltype(cmp)> pq(cmp);
                std::set<std::tuple<int, int, bool>> seen;
                auto emit = [&](int v, int t, bool off, int bu, int bv) {
                    for (int w : net.out(v)) {
                        if (!listens(w, t)) continue;
                        auto it = fwd.find({v, w});
                        bool bb_arc = it != fwd.end() && it->second == i;
                        bool o = off || !bb_arc;
                        int nu = bu, nv = bv;
                        if (!off && o) nu = v, nv = w;
                        if (seen.insert({w, t, o}).second) pq.push({t, w, o, nu, nv});
                    }
                };
                emit(src, e, false, -1, -1);
                int bb_arrival = -1;
                std::optional<Ev> first_off;
                while (!pq.empty()) {
                    Ev ev = pq.top();
                    pq.pop();
                    if (bb_arrival >= 0 && ev.t > bb_arrival) break;
                    if (ev.t > e + cap) throw InputError("unbounded expansion: symbol never reaches the sink");
                    if (ev.v == snk) {
                        if (!ev.off) bb_arrival = ev.t;
                        else if (!first_off) first_off = ev;
                        continue;
                    }
                    // forward at every transmit slot for which this reception is the latest one
                    int v = ev.v, d = a.delay[v];
                    int nl = next_fire(a.rx[v], N, ev.t);
                    if (a.tx[v].empty()) continue;
                    for (int t = next_fire(a.tx[v], N, ev.t + d); t >= 0 && t <= nl + d;
                         t = next_fire(a.tx[v], N, t))
                        emit(v, t, ev.off, ev.bu, ev.bv);
                }
                if (bb_arrival < 0) continue;  // overwritten on the way; nothing to compare
                ++delivered;
                if (first_off && first_off->t <= bb_arrival) {
                    CausalWitness w;
                    w.emit = e;
                    w.path = i;
                    w.branch_node = net.node(first_off->bu).id;
                    w.link = {net.node(first_off->bu).id, net.node(first_off->bv).id};
                    w.backbone_arrival = bb_arrival;
                    w.other_arrival = first_off->t;
                    return {false, w};
                }
            }
        if (!delivered) throw InputError("unbounded expansion: backbone path " + std::to_string(i) + " never reaches the sink");
    }
    return {true, std::nullopt};
}

}  // namespace

CausalResult is_causal(const Schedule& s, const NetworkGraph& net, int cycles) {
    auto f = [cycles](const Schedule& sc, const NetworkGraph& g, const PathSet& bb) {
        return flat_causal(sc, g, bb, cycles);
    };
    for (auto& r : per_phase(s, net, f))
        if (!r.causal) return r;
    return {true, std::nullopt};
}

}  // namespace afr

namespace afr {

CheckReport verify_declared(const Schedule& s, const NetworkGraph& net) {
    CheckReport out;
    auto it = s.notes.find("claims");
    std::string claims = it == s.notes.end() ? "structure" : it->second;
    std::vector<std::string> names;
    for (size_t a = 0; a <= claims.size();) {
        size_t b = claims.find(',', a);
        if (b == std::string::npos) b = claims.size();
        if (b > a) names.push_back(claims.substr(a, b - a));
        a = b + 1;
    }
    auto add = [&](const CheckReport& r) { out.checks.insert(out.checks.end(), r.checks.begin(), r.checks.end()); };
    for (const auto& n : names) {
        try {
            if (n == "structure") add(validate(s, net));
            else if (n == "orthogonal") add(verify_orthogonal(s, net));
            else if (n == "rate-one" || n == "sink-balance" || n == "backflow-free") {
                CheckReport r = verify_dmt_opt(s, net);
                if (const Check* c = r.find(n)) out.checks.push_back(*c);
            } else if (n == "causal") {
                CausalResult r = is_causal(s, net);
                out.checks.push_back({"causal", r.causal, r.witness ? r.witness->str() : ""});
            } else {
                throw InputError("unknown check '" + n + "'");
            }
        } catch (const InputError& e) {
            out.checks.push_back({n, false, e.what()});
        }
    }
    return out;
}

}  // namespace afr
