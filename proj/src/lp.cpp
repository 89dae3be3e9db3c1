#include "lp.hpp"

#include <cmath>
#include <stdexcept>

namespace afr::detail {

namespace {

constexpr double EPS = 1e-10;

struct Tableau {
    int m, cols;  // cols excludes rhs
    std::vector<std::vector<double>> T;  // m constraint rows + objective row
    std::vector<int> basis;
    std::vector<char> banned;

    double& rhs(int i) { return T[i][cols]; }

    void pivot(int r, int c) {
        double p = T[r][c];
        for (auto& v : T[r]) v /= p;
        for (int i = 0; i <= m; ++i) {
            if (i == r || std::abs(T[i][c]) < 1e-15) continue;
            double f = T[i][c];
            for (int j = 0; j <= cols; ++j) T[i][j] -= f * T[r][j];
            T[i][c] = 0;
        }
        basis[r] = c;
    }

    // false when unbounded
    bool run() {
        for (int iter = 0; iter < 100000; ++iter) {
            int enter = -1;
            for (int j = 0; j < cols; ++j)
                if (!banned[j] && T[m][j] < -EPS) {
                    enter = j;
                    break;
                }
            if (enter < 0) return true;
            int leave = -1;
            double best = 0;
            for (int i = 0; i < m; ++i) {
                if (T[i][enter] <= EPS) continue;
                double ratio = T[i][cols] / T[i][enter];
                if (leave < 0 || ratio < best - 1e-12 || (ratio <= best + 1e-12 && basis[i] < basis[leave]))
                    leave = i, best = ratio;
            }
            if (leave < 0) return false;
            pivot(leave, enter);
        }
        throw std::runtime_error("simplex: iteration limit");
    }
};

}  // namespace

LpSolution solve(const Lp& lp) {
    const int m = static_cast<int>(lp.A.size()), n = lp.n;
    int nslack = 0;
    for (char e : lp.eq) nslack += !e;
    const int cols = n + nslack + m;
    Tableau tb{m, cols, std::vector<std::vector<double>>(m + 1, std::vector<double>(cols + 1, 0.0)),
               std::vector<int>(m), std::vector<char>(cols, 0)};
    int s = n;
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < n; ++j) tb.T[i][j] = lp.A[i][j];
        if (!lp.eq[i]) tb.T[i][s++] = 1.0;
        tb.T[i][cols] = lp.b[i];
        if (lp.b[i] < 0)
            for (auto& v : tb.T[i]) v = -v;
        tb.T[i][n + nslack + i] = 1.0;
        tb.basis[i] = n + nslack + i;
    }
    // phase 1: minimize the sum of artificials
    for (int i = 0; i < m; ++i)
        for (int j = 0; j <= cols; ++j)
            if (j < n + nslack || j == cols) tb.T[m][j] -= tb.T[i][j];
    tb.run();
    LpSolution sol;
    if (-tb.T[m][cols] > 1e-8) return sol;
    for (int i = 0; i < m; ++i) {
        if (tb.basis[i] < n + nslack) continue;
        for (int j = 0; j < n + nslack; ++j)
            if (std::abs(tb.T[i][j]) > 1e-9) {
                tb.pivot(i, j);
                break;
            }
    }
    for (int j = n + nslack; j < cols; ++j) tb.banned[j] = 1;
    // phase 2
    std::fill(tb.T[m].begin(), tb.T[m].end(), 0.0);
    for (int j = 0; j < n; ++j) tb.T[m][j] = lp.c[j];
    for (int i = 0; i < m; ++i) {
        int bj = tb.basis[i];
        double cb = bj < n ? lp.c[bj] : 0.0;
        if (cb == 0) continue;
        for (int j = 0; j <= cols; ++j) tb.T[m][j] -= cb * tb.T[i][j];
    }
    if (!tb.run()) {
        sol.status = LpStatus::Unbounded;
        return sol;
    }
    sol.status = LpStatus::Optimal;
    sol.x.assign(n, 0.0);
    for (int i = 0; i < m; ++i)
        if (tb.basis[i] < n) sol.x[tb.basis[i]] = tb.T[i][cols];
    sol.value = 0;
    for (int j = 0; j < n; ++j) sol.value += lp.c[j] * sol.x[j];
    return sol;
}

}  // namespace afr::detail
