#include "afr/dmt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include <Eigen/Dense>
#include <json.hpp>

#include "afr/netmodel.hpp"
#include "lp.hpp"

namespace afr {

namespace {

constexpr double TOL = 1e-12;

// finite tail: curve is d = 0 beyond r_max
std::vector<std::pair<double, double>> segments(const DmtCurve& c) {
    std::vector<std::pair<double, double>> seg;  // (length, slope)
    for (size_t i = 1; i < c.pts.size(); ++i) {
        double len = c.pts[i].first - c.pts[i - 1].first;
        if (len <= TOL) continue;
        seg.push_back({len, (c.pts[i].second - c.pts[i - 1].second) / len});
    }
    return seg;
}

DmtCurve from_samples(std::vector<std::pair<double, double>> pts) {
    DmtCurve c;
    c.pts = std::move(pts);
    // trim the flat zero tail to its first point
    while (c.pts.size() > 1 && c.pts.back().second <= TOL && c.pts[c.pts.size() - 2].second <= TOL) c.pts.pop_back();
    if (!c.pts.empty()) c.pts.back().second = std::max(0.0, c.pts.back().second);
    c.simplify();
    return c;
}

}  // namespace

double DmtCurve::operator()(double r) const {
    if (pts.empty()) return 0.0;
    if (r <= pts.front().first) return pts.front().second;
    if (r >= pts.back().first) return pts.back().second;
    auto it = std::upper_bound(pts.begin(), pts.end(), r, [](double x, const auto& p) { return x < p.first; });
    const auto& b = *it;
    const auto& a = *(it - 1);
    if (b.first - a.first <= TOL) return b.second;
    return a.second + (b.second - a.second) * (r - a.first) / (b.first - a.first);
}

bool DmtCurve::convex(double tol) const {
    auto seg = segments(*this);
    seg.push_back({1.0, 0.0});
    for (size_t i = 1; i < seg.size(); ++i)
        if (seg[i].second < seg[i - 1].second - tol) return false;
    return true;
}

void DmtCurve::simplify(double tol) {
    if (pts.size() < 3) return;
    std::vector<std::pair<double, double>> out{pts.front()};
    for (size_t i = 1; i + 1 < pts.size(); ++i) {
        const auto& a = out.back();
        const auto& b = pts[i];
        const auto& c = pts[i + 1];
        if (b.first - a.first <= tol) continue;
        double cross = (b.first - a.first) * (c.second - a.second) - (b.second - a.second) * (c.first - a.first);
        if (std::abs(cross) <= tol * std::max(1.0, c.first - a.first)) continue;
        out.push_back(b);
    }
    if (pts.back().first - out.back().first > tol || out.size() == 1) out.push_back(pts.back());
    else out.back() = pts.back();
    pts = std::move(out);
}

DmtCurve linear_dmt(double d_max, double r_max) {
    if (d_max <= 0) return zero_curve();
    DmtCurve c;
    c.pts = {{0.0, d_max}, {r_max, 0.0}};
    return c;
}

DmtCurve zero_curve() {
    DmtCurve c;
    c.pts = {{0.0, 0.0}};
    return c;
}

DmtCurve parallel_dmt(const std::vector<DmtCurve>& curves) {
    if (curves.empty()) return zero_curve();
    if (curves.size() == 1) return curves[0];
    for (const auto& c : curves)
        if (!c.convex(1e-9)) return parallel_dmt_grid(curves);
    double d0 = 0;
    std::vector<std::pair<double, double>> seg;
    bool partial = false;
    for (const auto& c : curves) {
        d0 += c.d0();
        partial |= c.partial;
        auto s = segments(c);
        seg.insert(seg.end(), s.begin(), s.end());
    }
    std::stable_sort(seg.begin(), seg.end(), [](const auto& a, const auto& b) { return a.second < b.second; });
    DmtCurve out;
    out.pts.push_back({0.0, d0});
    for (const auto& [len, slope] : seg) {
        auto [r, d] = out.pts.back();
        out.pts.push_back({r + len, std::max(0.0, d + slope * len)});
    }
    out.partial = partial;
    out.simplify();
    return out;
}

DmtCurve rescale_rate(const DmtCurve& c, double factor) {
    DmtCurve out = c;
    for (auto& p : out.pts) p.first *= factor;
    return out;
}

DmtCurve repeated_parallel_dmt(const std::vector<DmtCurve>& curves, const std::vector<int>& mult) {
    if (curves.size() != mult.size()) throw std::invalid_argument("repeated_parallel_dmt: size mismatch");
    std::vector<DmtCurve> scaled;
    for (size_t i = 0; i < curves.size(); ++i) {
        if (mult[i] <= 0) continue;
        scaled.push_back(rescale_rate(curves[i], mult[i]));
    }
    return parallel_dmt(scaled);
}

DmtCurve parallel_dmt_grid(const std::vector<DmtCurve>& curves, double step) {
    double R = 0;
    for (const auto& c : curves) R += c.r_max();
    const int G = static_cast<int>(std::ceil(R / step - 1e-9));
    auto rate = [&](int i) { return std::min(R, i * step); };
    std::vector<double> f(G + 1, 0.0);
    for (size_t k = 0; k < curves.size(); ++k) {
        std::vector<double> dk(G + 1);
        for (int i = 0; i <= G; ++i) dk[i] = curves[k](rate(i));
        if (k == 0) {
            f = dk;
            continue;
        }
        std::vector<double> g(G + 1, std::numeric_limits<double>::infinity());
        for (int i = 0; i <= G; ++i)
            for (int x = 0; x <= i; ++x) g[i] = std::min(g[i], f[i - x] + dk[x]);
        f.swap(g);
    }
    std::vector<std::pair<double, double>> pts;
    for (int i = 0; i <= G; ++i) pts.push_back({rate(i), f[i]});
    DmtCurve out = from_samples(std::move(pts));
    out.grid_fallback = true;
    for (const auto& c : curves) out.partial |= c.partial;
    return out;
}

namespace {

std::vector<double> merged_breaks(const DmtCurve& a, const DmtCurve& b) {
    std::vector<double> xs;
    for (const auto& p : a.pts) xs.push_back(p.first);
    for (const auto& p : b.pts) xs.push_back(p.first);
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end(), [](double x, double y) { return std::abs(x - y) <= TOL; }), xs.end());
    return xs;
}

}  // namespace

DmtCurve pointwise_max(const DmtCurve& a, const DmtCurve& b) {
    auto xs = merged_breaks(a, b);
    std::vector<std::pair<double, double>> pts;
    for (size_t i = 0; i < xs.size(); ++i) {
        if (i > 0) {
            double x0 = xs[i - 1], x1 = xs[i];
            double u0 = a(x0) - b(x0), u1 = a(x1) - b(x1);
            if ((u0 > TOL && u1 < -TOL) || (u0 < -TOL && u1 > TOL)) {
                double x = x0 + (x1 - x0) * u0 / (u0 - u1);
                pts.push_back({x, std::max(a(x), b(x))});
            }
        }
        pts.push_back({xs[i], std::max(a(xs[i]), b(xs[i]))});
    }
    DmtCurve out = from_samples(std::move(pts));
    out.partial = a.partial || b.partial;
    out.grid_fallback = a.grid_fallback || b.grid_fallback;
    return out;
}

DmtCurve pointwise_sum(const DmtCurve& a, const DmtCurve& b) {
    std::vector<std::pair<double, double>> pts;
    for (double x : merged_breaks(a, b)) pts.push_back({x, a(x) + b(x)});
    DmtCurve out = from_samples(std::move(pts));
    out.partial = a.partial || b.partial;
    out.grid_fallback = a.grid_fallback || b.grid_fallback;
    return out;
}

DmtCurve blt_bound(const DmtCurve& d_diag, const DmtCurve& d_subdiag, bool independent) {
    return independent ? pointwise_sum(d_diag, d_subdiag) : pointwise_max(d_diag, d_subdiag);
}

bool BalancedProductSpec::balanced() const {
    if (Nk.size() != M.size()) return false;
    for (int x : Nk)
        if (x <= 0) return false;
    return N > 0;
}

void finish_spec(BalancedProductSpec& spec) {
    spec.N = static_cast<int>(spec.e.size());
    const int H = static_cast<int>(spec.M.size());
    spec.Nk.assign(H, -1);
    spec.N_max = 0;
    spec.M_min = H ? *std::min_element(spec.M.begin(), spec.M.end()) : 0;
    for (int k = 0; k < H; ++k) {
        std::vector<int> cnt(spec.M[k], 0);
        for (const auto& row : spec.e) {
            if (static_cast<int>(row.size()) != H || row[k] < 0 || row[k] >= spec.M[k])
                throw InputError("product spec: path coefficient index out of range");
            ++cnt[row[k]];
        }
        bool uniform = !cnt.empty() && std::all_of(cnt.begin(), cnt.end(), [&](int x) { return x == cnt[0]; });
        spec.Nk[k] = uniform && cnt[0] > 0 ? cnt[0] : -1;
        spec.N_max = std::max(spec.N_max, *std::max_element(cnt.begin(), cnt.end()));
    }
}

DmtCurve product_parallel_dmt(const BalancedProductSpec& spec) {
    if (!spec.balanced()) throw InputError("product channel spec is not balanced");
    return linear_dmt(static_cast<double>(spec.N) / spec.N_max, spec.N);
}

namespace {

std::vector<int> var_offsets(const BalancedProductSpec& spec) {
    std::vector<int> off(spec.M.size() + 1, 0);
    for (size_t k = 0; k < spec.M.size(); ++k) off[k + 1] = off[k] + spec.M[k];
    return off;
}

double positive_part_rate(const BalancedProductSpec& spec, const std::vector<int>& off, const std::vector<double>& a) {
    double tot = 0;
    for (const auto& row : spec.e) {
        double s = 0;
        for (size_t k = 0; k < row.size(); ++k) s += a[off[k] + row[k]];
        tot += std::max(0.0, 1.0 - s);
    }
    return tot;
}

}  // namespace

LpDmtResult product_parallel_lp(const BalancedProductSpec& spec, double r) {
    if (r < -TOL || r > spec.N + TOL) throw InputError("product_parallel_lp: rate out of range");
    auto off = var_offsets(spec);
    const int V = off.back(), N = spec.N;
    detail::Lp lp;
    lp.n = V + N;  // alpha then t
    lp.c.assign(lp.n, 0.0);
    for (int j = 0; j < V; ++j) lp.c[j] = 1.0;
    std::vector<double> sum_t(lp.n, 0.0);
    for (int i = 0; i < N; ++i) sum_t[V + i] = 1.0;
    lp.le(sum_t, r);
    for (int i = 0; i < N; ++i) {
        // -t_i - sum_k alpha <= -1
        std::vector<double> row(lp.n, 0.0);
        row[V + i] = -1.0;
        for (size_t k = 0; k < spec.M.size(); ++k) row[off[k] + spec.e[i][k]] -= 1.0;
        lp.le(row, -1.0);
    }
    auto sol = detail::solve(lp);
    if (sol.status != detail::LpStatus::Optimal) throw std::runtime_error("product_parallel_lp: solver failed");
    LpDmtResult res;
    res.value = std::max(0.0, sol.value);
    res.alpha.resize(spec.M.size());
    for (size_t k = 0; k < spec.M.size(); ++k)
        res.alpha[k].assign(sol.x.begin() + off[k], sol.x.begin() + off[k + 1]);
    res.t.assign(sol.x.begin() + V, sol.x.end());
    res.in_S = positive_part_rate(spec, off, std::vector<double>(sol.x.begin(), sol.x.begin() + V)) <= r + 1e-7;
    return res;
}

double product_parallel_cd(const BalancedProductSpec& spec, double r) {
    auto off = var_offsets(spec);
    const int V = off.back();
    double best = std::numeric_limits<double>::infinity();
    auto feasible = [&](const std::vector<double>& a) { return positive_part_rate(spec, off, a) <= r + 1e-12; };
    for (size_t start = 0; start < spec.M.size(); ++start) {
        std::vector<double> a(V, 0.0);
        for (int j = off[start]; j < off[start + 1]; ++j) a[j] = 1.0;
        for (double delta : {1.0 / 4, 1.0 / 16, 1.0 / 64, 1.0 / 256}) {
            bool moved = true;
            while (moved) {
                moved = false;
                for (int j = 0; j < V; ++j) {
                    while (a[j] >= delta - 1e-15) {
                        a[j] -= delta;
                        if (feasible(a)) {
                            moved = true;
                        } else {
                            a[j] += delta;
                            break;
                        }
                    }
                }
                // shift weight between coordinates when it frees slack
                double g0 = positive_part_rate(spec, off, a);
                for (int j = 0; j < V && !moved; ++j) {
                    if (a[j] < delta - 1e-15) continue;
                    for (int k = 0; k < V && !moved; ++k) {
                        if (k == j) continue;
                        a[j] -= delta, a[k] += delta;
                        if (positive_part_rate(spec, off, a) < g0 - 1e-12) moved = true;
                        else a[j] += delta, a[k] -= delta;
                    }
                }
            }
        }
        best = std::min(best, std::accumulate(a.begin(), a.end(), 0.0));
    }
    return best;
}

DmtCurve ma_partition_bound(const std::vector<int>& antennas, const ProductDmtProvider& provider) {
    if (antennas.size() < 2) throw InputError("ma_partition_bound: need at least source and sink");
    int dmax = std::numeric_limits<int>::max();
    for (size_t i = 0; i + 1 < antennas.size(); ++i) dmax = std::min(dmax, antennas[i] * antennas[i + 1]);
    DmtCurve env = linear_dmt(dmax, 1.0);
    if (antennas.size() == 2) return env;
    int nmin = *std::min_element(antennas.begin() + 1, antennas.end() - 1);
    for (int S = 1; S <= nmin; ++S) {
        std::vector<int> tup = antennas;
        for (size_t i = 1; i + 1 < tup.size(); ++i) tup[i] = antennas[i] / S;
        auto c = provider(tup);
        if (!c) {
            std::string name = "(";
            for (size_t i = 0; i < tup.size(); ++i) name += (i ? "," : "") + std::to_string(tup[i]);
            throw InputError("ma_partition_bound: no product DMT for " + name + ")");
        }
        DmtCurve sc = *c;
        for (auto& p : sc.pts) p.second *= S;
        env = pointwise_max(env, sc);
    }
    return env;
}

std::vector<std::vector<int>> triples(int K) {
    std::vector<std::vector<int>> out;
    for (int a = 0; a < K; ++a)
        for (int b = a + 1; b < K; ++b)
            for (int c = b + 1; c < K; ++c) out.push_back({a, b, c});
    return out;
}

std::optional<std::vector<double>> fraction_feasible(const std::vector<double>& f, int K) {
    if (K < 4) throw InputError("fraction_feasible: K must be at least 4");
    if (static_cast<int>(f.size()) != K) throw InputError("fraction_feasible: f has wrong length");
    for (double x : f)
        if (x < -1e-12) return std::nullopt;
    auto tr = triples(K);
    detail::Lp lp;
    lp.n = static_cast<int>(tr.size());
    lp.c.assign(lp.n, 0.0);
    for (int i = 0; i < K; ++i) {
        std::vector<double> row(lp.n, 0.0);
        for (int j = 0; j < lp.n; ++j)
            if (std::find(tr[j].begin(), tr[j].end(), i) != tr[j].end()) row[j] = 1.0 / 3.0;
        lp.equal(row, f[i]);
    }
    lp.equal(std::vector<double>(lp.n, 1.0), 1.0);
    auto sol = detail::solve(lp);
    if (sol.status != detail::LpStatus::Optimal) return std::nullopt;
    return sol.x;
}

namespace {

void compositions(int parts, int total, int cap, std::vector<int>& cur, std::vector<std::vector<int>>& out) {
    if (parts == 1) {
        if (total <= cap) {
            cur.push_back(total);
            out.push_back(cur);
            cur.pop_back();
        }
        return;
    }
    for (int x = std::min(total, cap); x >= 0; --x) {
        cur.push_back(x);
        compositions(parts - 1, total - x, cap, cur, out);
        cur.pop_back();
    }
}

struct KppiSetup {
    std::vector<std::vector<double>> fs;
    std::vector<double> r_grid;
};

KppiSetup kppi_setup(const std::vector<DmtCurve>& d, FractionDomain dom, int denom) {
    const int K = static_cast<int>(d.size());
    if (K == 0) throw InputError("ma_kppi_bound: no path curves");
    KppiSetup s;
    std::vector<std::vector<int>> comp;
    std::vector<int> cur;
    if (dom == FractionDomain::Capped && K <= 3) comp.push_back(std::vector<int>(K, 1)), denom = K;
    else compositions(K, denom, dom == FractionDomain::Capped ? denom / 3 : denom, cur, comp);
    for (const auto& c : comp) {
        std::vector<double> f;
        for (int x : c) f.push_back(static_cast<double>(x) / denom);
        s.fs.push_back(std::move(f));
    }
    double rmax = 0;
    for (const auto& c : d) rmax = std::max(rmax, c.r_max());
    const int G = 120;
    for (int i = 0; i <= G; ++i) s.r_grid.push_back(rmax * i / G);
    return s;
}

std::vector<double> kppi_eval(const std::vector<DmtCurve>& d, const std::vector<double>& f,
                              const std::vector<double>& r_grid) {
    std::vector<DmtCurve> parts;
    for (size_t i = 0; i < d.size(); ++i)
        if (f[i] > 0) parts.push_back(rescale_rate(d[i], f[i]));
    DmtCurve g = parallel_dmt(parts);
    std::vector<double> v;
    for (double r : r_grid) v.push_back(g(r));
    return v;
}

KppiBound kppi_finish(const KppiSetup& s, const std::vector<double>& best, const std::vector<int>& arg) {
    KppiBound out;
    out.r_grid = s.r_grid;
    std::vector<std::pair<double, double>> pts;
    for (size_t i = 0; i < s.r_grid.size(); ++i) {
        pts.push_back({s.r_grid[i], best[i]});
        out.best_f.push_back(s.fs[arg[i]]);
    }
    out.curve = from_samples(std::move(pts));
    out.curve.grid_fallback = true;
    return out;
}

}  // namespace

KppiBound ma_kppi_bound_serial(const std::vector<DmtCurve>& d, FractionDomain dom, int denom) {
    KppiSetup s = kppi_setup(d, dom, denom);
    const size_t G = s.r_grid.size();
    std::vector<double> best(G, -1.0);
    std::vector<int> arg(G, 0);
    for (size_t q = 0; q < s.fs.size(); ++q) {
        auto v = kppi_eval(d, s.fs[q], s.r_grid);
        for (size_t i = 0; i < G; ++i)
            if (v[i] > best[i]) best[i] = v[i], arg[i] = static_cast<int>(q);
    }
    return kppi_finish(s, best, arg);
}

KppiBound ma_kppi_bound(const std::vector<DmtCurve>& d, FractionDomain dom, int denom) {
    KppiSetup s = kppi_setup(d, dom, denom);
    const int G = static_cast<int>(s.r_grid.size());
    const long long F = static_cast<long long>(s.fs.size());
    std::vector<double> best(G, -1.0);
    std::vector<int> arg(G, 0);
#pragma omp parallel
    {
        std::vector<double> lb(G, -1.0);
        std::vector<int> la(G, 0);
#pragma omp for schedule(dynamic, 16)
        for (long long q = 0; q < F; ++q) {
            auto v = kppi_eval(d, s.fs[q], s.r_grid);
            for (int i = 0; i < G; ++i)
                if (v[i] > lb[i]) lb[i] = v[i], la[i] = static_cast<int>(q);
        }
        // ties go to the lowest fraction index, matching the serial sweep
#pragma omp critical
        for (int i = 0; i < G; ++i)
            if (lb[i] > best[i] || (lb[i] == best[i] && la[i] < arg[i])) best[i] = lb[i], arg[i] = la[i];
    }
    return kppi_finish(s, best, arg);
}

NvdResult nvd_check(const std::vector<CMatrix>& code) {
    if (code.size() < 2) throw InputError("codebook needs at least two codewords");
    const size_t T = code[0].size();
    auto to_eigen = [&](const CMatrix& m) {
        if (m.size() != T) throw InputError("codebook: codeword shape mismatch");
        Eigen::MatrixXcd E(static_cast<long>(T), static_cast<long>(T));
        for (size_t i = 0; i < T; ++i) {
            if (m[i].size() != T) throw InputError("codebook: codewords must be square and equal-sized");
            for (size_t j = 0; j < T; ++j) E(static_cast<long>(i), static_cast<long>(j)) = m[i][j];
        }
        return E;
    };
    std::vector<Eigen::MatrixXcd> w;
    for (const auto& m : code) w.push_back(to_eigen(m));
    NvdResult res;
    res.min_value = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < w.size(); ++i)
        for (size_t j = i + 1; j < w.size(); ++j) {
            Eigen::MatrixXcd D = w[i] - w[j];
            double v = std::norm(D.determinant());
            if (v < res.min_value) res.min_value = v, res.pair_i = static_cast<int>(i), res.pair_j = static_cast<int>(j);
        }
    res.full_diversity = res.min_value > 1e-12;
    return res;
}

std::vector<CMatrix> parse_codebook(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("codebook: ") + e.what());
    }
    if (!j.is_array()) throw InputError("codebook: expected an array of matrices");
    std::vector<CMatrix> out;
    try {
        for (const auto& m : j) {
            CMatrix cm;
            for (const auto& row : m) {
                std::vector<std::complex<double>> r;
                for (const auto& z : row) {
                    if (!z.is_array() || z.size() != 2) throw InputError("codebook: entries must be [re,im]");
                    r.emplace_back(z[0].get<double>(), z[1].get<double>());
                }
                cm.push_back(std::move(r));
            }
            out.push_back(std::move(cm));
        }
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("codebook: ") + e.what());
    }
    return out;
}

}  // namespace afr
