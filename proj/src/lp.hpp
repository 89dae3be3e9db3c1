#pragma once

#include <vector>

namespace afr::detail {

// min c.x  s.t.  A_i x (<= or =) b_i,  x >= 0
struct Lp {
    int n = 0;
    std::vector<double> c;
    std::vector<std::vector<double>> A;
    std::vector<double> b;
    std::vector<char> eq;

    void le(std::vector<double> row, double rhs) { A.push_back(std::move(row)), b.push_back(rhs), eq.push_back(0); }
    void equal(std::vector<double> row, double rhs) { A.push_back(std::move(row)), b.push_back(rhs), eq.push_back(1); }
};

enum class LpStatus { Optimal, Infeasible, Unbounded };

struct LpSolution {
    LpStatus status = LpStatus::Infeasible;
    double value = 0;
    std::vector<double> x;
};

// dense two-phase simplex with Bland's rule
LpSolution solve(const Lp& lp);

}  // namespace afr::detail
