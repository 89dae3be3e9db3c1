#include "afr/mcsim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "afr/philox.hpp"

namespace afr {

namespace {

struct PhaseAct {
    int start = 0, N = 1, cycles = -1, active = -1;
    std::vector<std::vector<char>> tx, rx;  // [node][slot]
    std::vector<int> delay;
    std::vector<char> off;
};

struct Timeline {
    std::vector<PhaseAct> ph;
    int period = 0;  // 0 for a flat schedule

    struct At {
        int p, slot, cycle;
        bool phase_start;
    };
    At at(int t) const {
        if (period == 0) return {0, t % ph[0].N, t / ph[0].N, t == 0};
        int u = t % period;
        for (int p = static_cast<int>(ph.size()) - 1; p >= 0; --p)
            if (u >= ph[p].start) {
                int local = u - ph[p].start;
                return {p, local % ph[p].N, local / ph[p].N, local == 0};
            }
        return {0, 0, 0, true};
    }
};

PhaseAct make_phase(const Schedule& s, const NetworkGraph& net) {
    PhaseAct a;
    a.N = s.N;
    const int n = net.size();
    a.tx.assign(n, std::vector<char>(s.N, 0));
    a.rx.assign(n, std::vector<char>(s.N, 0));
    a.delay.assign(n, 0);
    a.off.assign(n, 0);
    for (const auto& [k, slots] : s.colors) {
        int u = net.index(k.first), v = net.index(k.second);
        for (int t : slots) {
            if (t < 0 || t >= s.N) throw InputError("slot out of range on " + k.first + "->" + k.second);
            a.tx[u][t] = 1;
            a.rx[v][t] = 1;
        }
    }
    for (const auto& [id, d] : s.delays)
        if (net.has_node(id)) a.delay[net.index(id)] = d;
    for (const auto& id : s.deactivated)
        if (net.has_node(id)) a.off[net.index(id)] = 1;
    return a;
}

Timeline make_timeline(const Schedule& s, const NetworkGraph& net) {
    Timeline tl;
    if (!s.phased()) {
        tl.ph.push_back(make_phase(s, net));
        return tl;
    }
    int start = 0;
    for (const auto& p : s.phases) {
        PhaseAct a = make_phase(p.sched, net);
        for (const auto& id : s.deactivated)
            if (net.has_node(id)) a.off[net.index(id)] = 1;
        a.start = start;
        a.cycles = p.cycles;
        a.active = p.active_cycles;
        start += p.cycles * p.sched.N;
        tl.ph.push_back(std::move(a));
    }
    tl.period = start;
    return tl;
}

// Generic slot-by-slot propagation. Ops supplies impulse/zero/accumulate.
template <class S, class Ops>
void propagate(const NetworkGraph& net, const Schedule& s, int horizon, int input_horizon, Ops& ops,
               bool& warmup) {
    Timeline tl = make_timeline(s, net);
    const int n = net.size(), src = net.source(), snk = net.sink();
    std::vector<std::vector<std::pair<int, S>>> hist(n);
    std::vector<S> x(n);
    std::vector<char> txing(n);
    int last_phase = -1;
    for (int t = 0; t < horizon; ++t) {
        auto at = tl.at(t);
        const PhaseAct& a = tl.ph[at.p];
        if (at.p != last_phase || at.phase_start) {
            if (tl.period != 0 || t == 0)
                for (auto& h : hist) h.clear();
            last_phase = at.p;
        }
        for (int v = 0; v < n; ++v) {
            txing[v] = 0;
            if (v == snk || a.off[v] || !a.tx[v][at.slot]) continue;
            if (v == src) {
                if (a.active >= 0 && at.cycle >= a.active) continue;
                if (t >= input_horizon) continue;
                x[v] = ops.impulse(t);
                txing[v] = 1;
                continue;
            }
            const auto& h = hist[v];
            int lim = t - a.delay[v];
            int k = static_cast<int>(h.size()) - 1;
            while (k >= 0 && h[k].first >= lim) --k;
            if (k < 0) {
                warmup = true;
                continue;
            }
            x[v] = h[k].second;
            txing[v] = 1;
        }
        for (int w = 0; w < n; ++w) {
            if (w == src || a.off[w] || !a.rx[w][at.slot]) continue;
            S y = ops.zero();
            for (int u : net.in(w))
                if (txing[u]) ops.accumulate(y, x[u], net.arc_index(u, w));
            if (w == snk) ops.sink(t, y);
            else hist[w].push_back({t, std::move(y)});
        }
    }
}

struct SymOps {
    using S = std::map<int, Poly>;
    std::vector<int> cols;
    std::map<int, int> col_of;
    std::vector<int> rows;
    std::vector<S> outs;

    S zero() const { return {}; }
    S impulse(int t) {
        col_of[t] = static_cast<int>(cols.size());
        cols.push_back(t);
        S s;
        s[col_of[t]][{}] = 1;
        return s;
    }
    void accumulate(S& acc, const S& x, int arc) const {
        for (const auto& [c, p] : x)
            for (const auto& [m, k] : p) {
                Monomial mm = m;
                mm.insert(std::upper_bound(mm.begin(), mm.end(), arc), arc);
                auto& slot = acc[c][mm];
                slot += k;
                if (slot == 0) acc[c].erase(mm);
            }
    }
    void sink(int t, S y) {
        rows.push_back(t);
        outs.push_back(std::move(y));
    }
};

struct NumOps {
    using S = std::complex<double>;
    const std::vector<std::complex<double>>& gains;
    const std::vector<std::complex<double>>& xin;
    int next = 0;
    std::vector<std::complex<double>> outs;

    S zero() const { return {}; }
    S impulse(int) { return next < static_cast<int>(xin.size()) ? xin[next++] : S{}; }
    void accumulate(S& acc, const S& x, int arc) const { acc += gains[arc] * x; }
    void sink(int, S y) { outs.push_back(y); }
};

}  // namespace

const Poly* InducedChannel::at(int r, int c) const {
    auto it = entries.find({r, c});
    return it == entries.end() ? nullptr : &it->second;
}

Eigen::MatrixXcd InducedChannel::evaluate(const std::vector<std::complex<double>>& gains) const {
    Eigen::MatrixXcd H = Eigen::MatrixXcd::Zero(static_cast<long>(rows.size()), static_cast<long>(cols.size()));
    for (const auto& [rc, p] : entries)
        for (const auto& [m, k] : p) {
            std::complex<double> v(static_cast<double>(k), 0.0);
            for (int a : m) v *= gains[a];
            H(rc.first, rc.second) += v;
        }
    return H;
}

InducedChannel induced_channel(const NetworkGraph& net, const Schedule& s, int horizon, int input_horizon) {
    if (input_horizon < 0) input_horizon = horizon;
    SymOps ops;
    InducedChannel h;
    propagate<SymOps::S>(net, s, horizon, input_horizon, ops, h.warmup);
    h.rows = ops.rows;
    h.cols = ops.cols;
    for (size_t r = 0; r < ops.outs.size(); ++r)
        for (auto& [c, p] : ops.outs[r])
            if (!p.empty()) h.entries[{static_cast<int>(r), c}] = p;
    return h;
}

std::vector<std::complex<double>> simulate_numeric(const NetworkGraph& net, const Schedule& s,
                                                   const std::vector<std::complex<double>>& gains,
                                                   const std::vector<std::complex<double>>& x, int horizon,
                                                   int input_horizon) {
    if (input_horizon < 0) input_horizon = horizon;
    NumOps ops{gains, x, 0, {}};
    bool warm = false;
    propagate<NumOps::S>(net, s, horizon, input_horizon, ops, warm);
    return ops.outs;
}

std::string poly_str(const Poly& p, const NetworkGraph& net) {
    std::string out;
    for (const auto& [m, k] : p) {
        if (!out.empty()) out += " + ";
        if (k != 1) out += std::to_string(k) + "*";
        for (size_t i = 0; i < m.size(); ++i) {
            auto [u, v] = net.arcs()[m[i]];
            out += (i ? "*" : "") + std::string("h(") + net.arc_name(u, v) + ")";
        }
        if (m.empty()) out += "1";
    }
    return out.empty() ? "0" : out;
}

Monomial path_monomial(const NetworkGraph& net, const Path& p) {
    Monomial m;
    for (size_t j = 0; j + 1 < p.size(); ++j) m.push_back(net.arc_index(p[j], p[j + 1]));
    std::sort(m.begin(), m.end());
    return m;
}

Window outage_window(const NetworkGraph& net, const Schedule& s, int cycles) {
    if (s.phased()) return {s.period(), s.period()};
    int maxd = 0;
    try {
        for (int d : path_delays(s, net)) maxd = std::max(maxd, d);
    } catch (const InputError&) {
        maxd = 4 * s.N;
    }
    return {cycles * s.N + maxd + 2 * s.N, cycles * s.N};
}

double mutual_info(const Eigen::MatrixXcd& H, double snr) {
    if (!H.allFinite()) throw std::invalid_argument("mutual_info: non-finite channel entries");
    if (H.size() == 0) return 0.0;
    const bool tall = H.rows() >= H.cols();
    Eigen::MatrixXcd G = tall ? Eigen::MatrixXcd(H.adjoint() * H) : Eigen::MatrixXcd(H * H.adjoint());
    G *= snr;
    G.diagonal().array() += 1.0;
    Eigen::LLT<Eigen::MatrixXcd> llt(G);
    const auto& L = llt.matrixLLT();
    double bits = 0;
    for (long i = 0; i < L.rows(); ++i) bits += 2.0 * std::log2(L(i, i).real());
    return bits;
}

CompiledChannel compile(const InducedChannel& h, int narcs) {
    CompiledChannel cc;
    cc.narcs = narcs;
    cc.ninputs = static_cast<int>(h.cols.size());
    const int R = static_cast<int>(h.rows.size()), C = static_cast<int>(h.cols.size());
    // union-find over rows (0..R-1) and cols (R..R+C-1)
    std::vector<int> par(R + C);
    std::iota(par.begin(), par.end(), 0);
    auto find = [&](int x) {
        while (par[x] != x) x = par[x] = par[par[x]];
        return x;
    };
    for (const auto& [rc, p] : h.entries) par[find(rc.first)] = find(R + rc.second);
    std::map<int, int> block_of;
    for (int c = 0; c < C; ++c) {
        int root = find(R + c);
        if (!block_of.count(root)) {
            block_of[root] = static_cast<int>(cc.blocks.size());
            cc.blocks.emplace_back();
        }
        cc.blocks[block_of[root]].cols.push_back(c);
    }
    for (int r = 0; r < R; ++r) {
        auto it = block_of.find(find(r));
        if (it != block_of.end()) cc.blocks[it->second].rows.push_back(r);
    }
    for (auto& b : cc.blocks) {
        std::map<int, int> lr, lc;
        for (size_t i = 0; i < b.rows.size(); ++i) lr[b.rows[i]] = static_cast<int>(i);
        for (size_t i = 0; i < b.cols.size(); ++i) lc[b.cols[i]] = static_cast<int>(i);
        for (const auto& [rc, p] : h.entries) {
            if (!lc.count(rc.second)) continue;
            for (const auto& [m, k] : p)
                b.terms.push_back({lr.at(rc.first), lc.at(rc.second), static_cast<double>(k), m});
        }
    }
    return cc;
}

namespace {

double threshold_bits(const CompiledChannel& ch, const OutageConfig& cfg, double snr) {
    return cfg.fixed_rate ? ch.ninputs * cfg.rate_bits : ch.ninputs * cfg.r * std::log2(snr);
}

// outage flags of one trial, one bit per SNR point
void trial_events(const CompiledChannel& ch, const OutageConfig& cfg, const std::vector<double>& snr,
                  long long trial, std::vector<std::complex<double>>& g, std::vector<long long>& events) {
    for (int a = 0; a < ch.narcs; ++a)
        g[a] = rayleigh_gain(cfg.seed, static_cast<std::uint64_t>(trial), static_cast<std::uint64_t>(a));
    std::vector<Eigen::MatrixXcd> Hs;
    Hs.reserve(ch.blocks.size());
    for (const auto& b : ch.blocks) {
        Eigen::MatrixXcd H = Eigen::MatrixXcd::Zero(static_cast<long>(b.rows.size()), static_cast<long>(b.cols.size()));
        for (const auto& t : b.terms) {
            std::complex<double> v(t.coeff, 0.0);
            for (int a : t.arcs) v *= g[a];
            H(t.row, t.col) += v;
        }
        Hs.push_back(std::move(H));
    }
    for (size_t i = 0; i < snr.size(); ++i) {
        double bits = 0;
        for (const auto& H : Hs) bits += mutual_info(H, snr[i]);
        if (bits <= threshold_bits(ch, cfg, snr[i])) ++events[i];
    }
}

std::vector<OutagePoint> summarize(const OutageConfig& cfg, const std::vector<long long>& events) {
    std::vector<OutagePoint> out;
    const double n = static_cast<double>(cfg.trials), z = 1.959963984540054;
    for (size_t i = 0; i < events.size(); ++i) {
        OutagePoint p;
        p.snr_db = cfg.snr_db[i];
        p.events = events[i];
        if (events[i] == 0) {
            p.pout = 3.0 / n;
            p.ci_low = 0;
            p.ci_high = 3.0 / n;
            p.upper_bound = true;
        } else {
            double ph = events[i] / n, den = 1 + z * z / n;
            double mid = (ph + z * z / (2 * n)) / den;
            double half = z * std::sqrt(ph * (1 - ph) / n + z * z / (4 * n * n)) / den;
            p.pout = ph;
            p.ci_low = std::max(0.0, mid - half);
            p.ci_high = std::min(1.0, mid + half);
        }
        out.push_back(p);
    }
    return out;
}

std::vector<double> linear_snr(const OutageConfig& cfg) {
    std::vector<double> s;
    for (double db : cfg.snr_db) s.push_back(std::pow(10.0, db / 10.0));
    return s;
}

}  // namespace

std::vector<OutagePoint> outage_serial(const CompiledChannel& ch, const OutageConfig& cfg) {
    const auto snr = linear_snr(cfg);
    std::vector<long long> events(snr.size(), 0);
    std::vector<std::complex<double>> g(ch.narcs);
    for (long long t = 0; t < cfg.trials; ++t) trial_events(ch, cfg, snr, t, g, events);
    return summarize(cfg, events);
}

std::vector<OutagePoint> outage(const CompiledChannel& ch, const OutageConfig& cfg) {
    const auto snr = linear_snr(cfg);
    const int m = static_cast<int>(snr.size());
    std::vector<long long> events(m, 0);
#pragma omp parallel
    {
        std::vector<long long> local(m, 0);
        std::vector<std::complex<double>> g(ch.narcs);
#pragma omp for schedule(static)
        for (long long t = 0; t < cfg.trials; ++t) trial_events(ch, cfg, snr, t, g, local);
#pragma omp critical
        for (int i = 0; i < m; ++i) events[i] += local[i];
    }
    return summarize(cfg, events);
}

std::vector<OutagePoint> outage(const NetworkGraph& net, const Schedule& s, const OutageConfig& cfg) {
    if (cfg.trials < 1) throw InputError("trials must be positive");
    Window w = outage_window(net, s);
    InducedChannel h = induced_channel(net, s, w.horizon, w.inputs);
    if (h.cols.empty()) throw InputError("schedule never lets the source transmit");
    return outage(compile(h, static_cast<int>(net.arcs().size())), cfg);
}

SlopeFit diversity_fit(const std::vector<double>& snr_db, const std::vector<double>& pout) {
    if (snr_db.size() != pout.size()) throw std::invalid_argument("diversity_fit: size mismatch");
    std::vector<std::pair<double, double>> pts;
    for (size_t i = 0; i < pout.size(); ++i)
        if (pout[i] > 0) pts.push_back({snr_db[i], pout[i]});
    if (pts.size() < 3) throw std::invalid_argument("diversity_fit: degenerate grid (need 3 points with Pout > 0)");
    std::sort(pts.begin(), pts.end());
    double top = pts.back().first;
    std::vector<std::pair<double, double>> use;
    for (const auto& p : pts)
        if (p.first >= top - 10.0 - 1e-9) use.push_back(p);
    if (use.size() < 3) use.assign(pts.end() - 3, pts.end());
    const double n = static_cast<double>(use.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& [db, p] : use) {
        double x = db / 10.0, y = std::log10(p);
        sx += x, sy += y, sxx += x * x, sxy += x * y;
    }
    double den = n * sxx - sx * sx;
    if (std::abs(den) < 1e-12) throw std::invalid_argument("diversity_fit: degenerate grid");
    double slope = (n * sxy - sx * sy) / den, icpt = (sy - slope * sx) / n;
    double sse = 0;
    for (const auto& [db, p] : use) {
        double e = std::log10(p) - (icpt + slope * db / 10.0);
        sse += e * e;
    }
    SlopeFit f;
    f.d = -slope;
    f.points = static_cast<int>(use.size());
    f.stderr_ = use.size() > 2 ? std::sqrt(sse / (n - 2) / (sxx - sx * sx / n)) : 0.0;
    return f;
}

std::vector<CompareRow> compare(const DmtCurve& curve, const std::vector<std::pair<double, double>>& fits,
                                double rel_tol) {
    std::vector<CompareRow> out;
    for (const auto& [r, dh] : fits) {
        CompareRow row{r, curve(r), dh, false};
        double scale = std::max(std::abs(row.analytic), 1e-9);
        row.pass = std::abs(dh - row.analytic) <= rel_tol * scale;
        out.push_back(row);
    }
    return out;
}

}  // namespace afr
