#pragma once

#include <complex>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace afr {

// Piecewise-linear nonincreasing d(r); breakpoints sorted by r, last one at d = 0.
struct DmtCurve {
    std::vector<std::pair<double, double>> pts;
    bool partial = false;      // only d(0) is trustworthy
    bool grid_fallback = false;

    double r_max() const { return pts.empty() ? 0.0 : pts.back().first; }
    double d0() const { return pts.empty() ? 0.0 : pts.front().second; }
    double operator()(double r) const;
    bool convex(double tol = 1e-9) const;
    void simplify(double tol = 1e-12);
};

DmtCurve linear_dmt(double d_max, double r_max);
DmtCurve zero_curve();

// d(r) = inf over sum r_i = r of sum d_i(r_i)
DmtCurve parallel_dmt(const std::vector<DmtCurve>& curves);
// constraint sum n_i r_i = r (component i repeated n_i times with the same fade)
DmtCurve repeated_parallel_dmt(const std::vector<DmtCurve>& curves, const std::vector<int>& mult);
// grid version of parallel_dmt used for non-convex inputs and as the test oracle
DmtCurve parallel_dmt_grid(const std::vector<DmtCurve>& curves, double step = 1.0 / 1024);

// r -> r * factor (e.g. slot normalization: factor = symbols per slot inverse)
DmtCurve rescale_rate(const DmtCurve& c, double factor);
DmtCurve pointwise_max(const DmtCurve& a, const DmtCurve& b);
DmtCurve pointwise_sum(const DmtCurve& a, const DmtCurve& b);

DmtCurve blt_bound(const DmtCurve& d_diag, const DmtCurve& d_subdiag, bool independent);

struct BalancedProductSpec {
    std::vector<int> M;                  // pool size per hop
    std::vector<std::vector<int>> e;     // e[i][k]: coefficient of path i at hop k
    int N = 0;                           // number of paths
    std::vector<int> Nk;                 // per-hop multiplicity
    int N_max = 0;
    int M_min = 0;

    bool balanced() const;
};

// Fill N, Nk, N_max, M_min from M and e; Nk[k] = -1 when hop k is unbalanced.
void finish_spec(BalancedProductSpec& spec);

DmtCurve product_parallel_dmt(const BalancedProductSpec& spec);

struct LpDmtResult {
    double value = 0;
    std::vector<std::vector<double>> alpha;  // alpha[k][j]
    std::vector<double> t;
    bool in_S = false;  // optimizer satisfies the positive-part constraint set
};
LpDmtResult product_parallel_lp(const BalancedProductSpec& spec, double r);
// brute-force coordinate descent over alpha on a 1/256 lattice (test oracle, small N)
double product_parallel_cd(const BalancedProductSpec& spec, double r);

using ProductDmtProvider = std::function<std::optional<DmtCurve>(const std::vector<int>&)>;
DmtCurve ma_partition_bound(const std::vector<int>& antennas, const ProductDmtProvider& provider);

// lambda over triples in lexicographic order, or nullopt when infeasible
std::optional<std::vector<double>> fraction_feasible(const std::vector<double>& f, int K);
std::vector<std::vector<int>> triples(int K);

enum class FractionDomain { Free, Capped };
struct KppiBound {
    DmtCurve curve;
    std::vector<std::vector<double>> best_f;  // argmax f at each sampled r
    std::vector<double> r_grid;
};
KppiBound ma_kppi_bound(const std::vector<DmtCurve>& d, FractionDomain dom, int denom = 60);
KppiBound ma_kppi_bound_serial(const std::vector<DmtCurve>& d, FractionDomain dom, int denom = 60);

using CMatrix = std::vector<std::vector<std::complex<double>>>;
struct NvdResult {
    double min_value = 0;
    bool full_diversity = false;
    int pair_i = -1, pair_j = -1;
};
NvdResult nvd_check(const std::vector<CMatrix>& code);
std::vector<CMatrix> parse_codebook(const std::string& text);

}  // namespace afr
