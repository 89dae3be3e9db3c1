#include <doctest.h>

#include <afr/dmt.hpp>
#include <afr/layered.hpp>

#include "../src/lp.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "gen.hpp"

using namespace afr;
using doctest::Approx;

namespace {

// direct grid search over rate splits, two or three components
double split_oracle(const std::vector<DmtCurve>& c, const std::vector<int>& n, double r, int steps = 400) {
    double best = 1e300;
    double top = 0;
    for (size_t i = 0; i < c.size(); ++i) top = std::max(top, c[i].r_max());
    if (c.size() == 2) {
        for (int a = 0; a <= steps; ++a) {
            double r0 = top * a / steps;
            double rest = r - n[0] * r0;
            if (rest < -1e-12) break;
            double r1 = rest / n[1];
            if (r1 > c[1].r_max() + 1e-12) continue;
            best = std::min(best, c[0](r0) + c[1](std::max(0.0, r1)));
        }
    } else {
        for (int a = 0; a <= steps; ++a)
            for (int b = 0; b <= steps; ++b) {
                double r0 = top * a / steps, r1 = top * b / steps;
                double rest = r - n[0] * r0 - n[1] * r1;
                if (rest < -1e-12) continue;
                double r2 = rest / n[2];
                if (r2 > c[2].r_max() + 1e-12) continue;
                best = std::min(best, c[0](r0) + c[1](r1) + c[2](std::max(0.0, r2)));
            }
    }
    return best;
}

DmtCurve random_convex(gen::Rng& rng) {
    // sum of linear pieces is convex
    std::vector<DmtCurve> parts;
    int k = gen::uniform(rng, 1, 3);
    for (int i = 0; i < k; ++i) parts.push_back(linear_dmt(gen::uniform(rng, 1, 4), gen::uniform(rng, 1, 3) / 2.0));
    return parallel_dmt(parts);
}

BalancedProductSpec random_balanced(gen::Rng& rng, int maxN, int maxH) {
    static const std::map<int, std::vector<int>> divisors{
        {2, {1, 2}}, {3, {1, 3}}, {4, {1, 2, 4}}, {5, {1, 5}}, {6, {1, 2, 3, 6}}, {7, {1, 7}}, {8, {1, 2, 4, 8}}};
    BalancedProductSpec s;
    int N = gen::uniform(rng, 2, maxN), H = gen::uniform(rng, 2, maxH);
    s.e.assign(N, std::vector<int>(H));
    for (int k = 0; k < H; ++k) {
        const auto& d = divisors.at(N);
        int M = d[gen::uniform(rng, 0, static_cast<int>(d.size()) - 1)];
        s.M.push_back(M);
        std::vector<int> col;
        for (int i = 0; i < N; ++i) col.push_back(i % M);
        std::shuffle(col.begin(), col.end(), rng);
        for (int i = 0; i < N; ++i) s.e[i][k] = col[i];
    }
    finish_spec(s);
    return s;
}

bool geometric_F(const std::vector<double>& f) {
    double sum = 0;
    for (double x : f) {
        if (x < -1e-12 || x > 1.0 / 3 + 1e-12) return false;
        sum += x;
    }
    return std::abs(sum - 1) < 1e-9;
}

}  // namespace

TEST_CASE("linear curves") {
    DmtCurve c = linear_dmt(3, 1);
    CHECK(c(0) == Approx(3));
    CHECK(c(0.5) == Approx(1.5));
    CHECK(c(1) == Approx(0));
    CHECK(c(2) == Approx(0));
    CHECK(linear_dmt(0, 1)(0) == Approx(0));
    DmtCurve k = linear_dmt(5, 1);
    CHECK(k(0.2) == Approx(4));
}

TEST_CASE("parallel channels") {
    DmtCurve two = parallel_dmt({linear_dmt(1, 1), linear_dmt(1, 1)});
    CHECK(two.r_max() == Approx(2));
    CHECK(two(0) == Approx(2));
    CHECK(two(1) == Approx(1));

    DmtCurve mix = parallel_dmt({linear_dmt(1, 1), linear_dmt(2, 1)});
    CHECK(mix(0) == Approx(3));
    CHECK(mix(1) == Approx(1));
    CHECK(mix(2) == Approx(0));

    DmtCurve one = linear_dmt(2, 1.5);
    CHECK(parallel_dmt({one}).pts == one.pts);

    gen::Rng rng(51);
    for (int it = 0; it < 60; ++it) {
        int n = gen::uniform(rng, 2, 3);
        std::vector<DmtCurve> cs;
        double d0 = 0, rm = 0;
        for (int i = 0; i < n; ++i) {
            cs.push_back(random_convex(rng));
            d0 += cs.back().d0();
            rm += cs.back().r_max();
        }
        DmtCurve p = parallel_dmt(cs);
        CHECK(p.convex());
        CHECK(p.d0() == Approx(d0));
        CHECK(p.r_max() == Approx(rm));
        DmtCurve g = parallel_dmt_grid(cs);
        for (int q = 0; q <= 16; ++q) {
            double r = rm * q / 16;
            int steps = n == 2 ? 600 : 120;
            double o = split_oracle(cs, std::vector<int>(n, 1), r, steps);
            // the oracle overshoots by at most one grid step at the steepest slope (8)
            double top = 0;
            for (const auto& c : cs) top = std::max(top, c.r_max());
            CHECK(p(r) <= o + 1e-9);
            CHECK(o - p(r) <= 8 * n * top / steps + 1e-9);
            CHECK(g(r) == Approx(p(r)).epsilon(0.01).scale(1));
        }
        for (size_t i = 1; i < p.pts.size(); ++i) CHECK(p.pts[i].second <= p.pts[i - 1].second + 1e-12);
    }
}

TEST_CASE("repeated parallel channels") {
    std::vector<DmtCurve> unit{linear_dmt(1, 1), linear_dmt(1, 1)};
    CHECK(repeated_parallel_dmt(unit, {1, 1}).pts == parallel_dmt(unit).pts);

    DmtCurve k2 = rescale_rate(repeated_parallel_dmt(unit, {4, 3}), 1.0 / 8);
    for (int q = 0; q <= 20; ++q) {
        double r = k2.r_max() * q / 20;
        CHECK(k2(r) == Approx(split_oracle(unit, {4, 3}, 8 * r, 2000)).epsilon(1e-3).scale(1));
    }
    CHECK(k2(0) == Approx(2));
    CHECK(k2.r_max() == Approx(7.0 / 8));

    // four coefficients, three uses each per twelve-slot cycle
    std::vector<DmtCurve> four(4, linear_dmt(1, 1));
    DmtCurve kppi = rescale_rate(repeated_parallel_dmt(four, {3, 3, 3, 3}), 1.0 / 12);
    for (double r : {0.0, 0.25, 0.5, 0.9, 1.0}) CHECK(kppi(r) == Approx(4 * (1 - r)));
}

TEST_CASE("balanced product channels") {
    auto a = balanced_multiplicities({1, 2, 2, 1});
    DmtCurve c = product_parallel_dmt(a);
    CHECK(c(0) == Approx(2));
    CHECK(c.r_max() == Approx(4));
    CHECK(rescale_rate(c, 0.25)(0.5) == Approx(1));

    auto ind = balanced_multiplicities({1, 4, 1});
    CHECK(ind.N_max == 1);
    CHECK(product_parallel_dmt(ind)(1) == Approx(3));

    CHECK(product_parallel_lp(a, 0).value == Approx(2));
    CHECK(product_parallel_lp(a, a.N).value == Approx(0).scale(1));
    auto b = balanced_multiplicities({1, 2, 2, 2, 1});
    CHECK(product_parallel_lp(b, 2).value == Approx((8 - 2) / 4.0));
    CHECK(product_parallel_cd(b, 2) == Approx(1.5).epsilon(1e-6));
    CHECK_THROWS_AS(product_parallel_lp(a, 5), InputError);

    BalancedProductSpec bad;
    bad.M = {2, 2};
    bad.e = {{0, 0}, {0, 1}, {1, 0}};
    finish_spec(bad);
    CHECK_FALSE(bad.balanced());
    CHECK_THROWS_AS(product_parallel_dmt(bad), InputError);
}

TEST_CASE("product LP matches the closed form and the descent oracle") {
    gen::Rng rng(52);
    for (int it = 0; it < 40; ++it) {
        auto s = random_balanced(rng, 8, 4);
        REQUIRE(s.balanced());
        DmtCurve c = product_parallel_dmt(s);
        for (int q = 0; q <= 8; ++q) {
            double r = s.N * q / 8.0;
            LpDmtResult lp = product_parallel_lp(s, r);
            CHECK(lp.value == Approx(c(r)).epsilon(1e-6).scale(1));
            CHECK(lp.in_S);
            if (s.N <= 6) CHECK(product_parallel_cd(s, r) == Approx(lp.value).epsilon(1e-6).scale(1));
        }
    }
}

TEST_CASE("simplex") {
    using namespace afr::detail;
    Lp lp;
    lp.n = 2;
    lp.c = {-1, -1};
    lp.le({1, 2}, 4);
    lp.le({3, 1}, 6);
    auto s = solve(lp);
    REQUIRE(s.status == LpStatus::Optimal);
    CHECK(s.value == Approx(-14.0 / 5));
    CHECK(s.x[0] == Approx(8.0 / 5));

    Lp inf;
    inf.n = 1;
    inf.c = {1};
    inf.le({1}, -1);
    CHECK(solve(inf).status == LpStatus::Infeasible);

    Lp unb;
    unb.n = 1;
    unb.c = {-1};
    unb.le({-1}, 1);
    CHECK(solve(unb).status == LpStatus::Unbounded);

    Lp eq;
    eq.n = 3;
    eq.c = {1, 2, 3};
    eq.equal({1, 1, 1}, 1);
    eq.le({-1, 0, 0}, -0.25);
    auto e = solve(eq);
    CHECK(e.value == Approx(1));
    CHECK(e.x[0] == Approx(1));
}

TEST_CASE("block lower triangular composition") {
    DmtCurve diag = linear_dmt(1, 1);
    CHECK(blt_bound(diag, zero_curve(), false).pts == diag.pts);
    CHECK(blt_bound(diag, zero_curve(), true)(0.5) == Approx(0.5));
    DmtCurve sub = linear_dmt(4, 0.5);
    DmtCurve sum = blt_bound(diag, sub, true);
    DmtCurve mx = blt_bound(diag, sub, false);
    for (int q = 0; q <= 20; ++q) {
        double r = q / 20.0;
        CHECK(sum(r) == Approx(diag(r) + sub(r)));
        CHECK(mx(r) == Approx(std::max(diag(r), sub(r))));
    }
    // KPP(D) K=4 with a long block: subdiagonal rate axis stretched by M/(M-D)
    for (int M : {10, 100, 10000}) {
        DmtCurve s = linear_dmt(4, static_cast<double>(M - 7) / M);
        DmtCurve b = blt_bound(diag, s, true);
        CHECK(b(0) == Approx(5));
        if (M == 10000) CHECK(b(0.5) == Approx(2.5).epsilon(1e-3));
    }
}

TEST_CASE("multi-antenna partition bound") {
    int asked = 0;
    ProductDmtProvider exact = [&](const std::vector<int>& t) -> std::optional<DmtCurve> {
        ++asked;
        for (int x : t)
            if (x != 1 && x != 2) return std::nullopt;
        // (2,2,2) and (2,1,2) curves
        if (t[1] == 2) return linear_dmt(4, 1);
        return DmtCurve{{{0, 1.5}, {0.5, 1}, {2, 0}}};
    };
    DmtCurve d = ma_partition_bound({2, 2, 2}, exact);
    CHECK(asked == 2);
    CHECK(d(0) == Approx(4));
    CHECK(d(0.25) == Approx(std::max(3.0, 2 * (1.5 - 0.25))));
    CHECK(d(1) == Approx(2 * (1 - 0.5 / 1.5)));

    ProductDmtProvider single = [](const std::vector<int>&) -> std::optional<DmtCurve> { return zero_curve(); };
    DmtCurve one = ma_partition_bound({1, 1, 1, 1}, single);
    CHECK(one(0) == Approx(1));
    CHECK(one(0.5) == Approx(0.5));

    ProductDmtProvider none = [](const std::vector<int>&) -> std::optional<DmtCurve> { return std::nullopt; };
    try {
        ma_partition_bound({2, 4, 2}, none);
        FAIL("expected an error");
    } catch (const InputError& e) {
        CHECK(std::string(e.what()).find("(2,4,2)") != std::string::npos);
    }
}

TEST_CASE("fraction feasibility") {
    auto sym = fraction_feasible({0.25, 0.25, 0.25, 0.25}, 4);
    REQUIRE(sym);
    auto ext = fraction_feasible({1.0 / 3, 1.0 / 3, 1.0 / 3, 0}, 4);
    REQUIRE(ext);
    CHECK((*ext)[0] == Approx(1));
    for (size_t j = 1; j < ext->size(); ++j) CHECK((*ext)[j] == Approx(0).scale(1));
    CHECK_FALSE(fraction_feasible({0.4, 0.2, 0.2, 0.2}, 4));
    CHECK_THROWS_AS(fraction_feasible({0.5, 0.5, 0}, 3), InputError);

    gen::Rng rng(53);
    int inside = 0;
    for (int it = 0; it < 1000; ++it) {
        int K = gen::uniform(rng, 4, 6);
        std::vector<double> f(K);
        std::exponential_distribution<double> ex(1.0);
        double sum = 0;
        for (double& x : f) sum += (x = ex(rng));
        for (double& x : f) x /= sum;
        auto lam = fraction_feasible(f, K);
        CHECK(lam.has_value() == geometric_F(f));
        if (!lam) continue;
        ++inside;
        auto tr = triples(K);
        std::vector<double> back(K, 0);
        double tot = 0;
        for (size_t j = 0; j < tr.size(); ++j) {
            CHECK((*lam)[j] >= -1e-9);
            tot += (*lam)[j];
            for (int i : tr[j]) back[i] += (*lam)[j] / 3;
        }
        CHECK(tot == Approx(1));
        for (int i = 0; i < K; ++i) CHECK(back[i] == Approx(f[i]));
    }
    CHECK(inside > 50);
}

TEST_CASE("multi-antenna KPP(I) fraction bound") {
    for (int K = 3; K <= 5; ++K) {
        std::vector<DmtCurve> d(K, linear_dmt(1, 1));
        KppiBound b = ma_kppi_bound(d, FractionDomain::Free, 60);
        for (double r : {0.0, 0.3, 0.6, 1.0}) CHECK(b.curve(r) == Approx(K * (1 - r)).epsilon(1e-6).scale(1));
    }
    KppiBound hd = ma_kppi_bound(std::vector<DmtCurve>(3, linear_dmt(4, 1)), FractionDomain::Capped);
    for (const auto& f : hd.best_f)
        for (double x : f) CHECK(x == Approx(1.0 / 3));

    std::vector<DmtCurve> skew{linear_dmt(9, 3), linear_dmt(1, 1), linear_dmt(1, 1), linear_dmt(1, 1)};
    KppiBound cap = ma_kppi_bound(skew, FractionDomain::Capped, 30);
    KppiBound free = ma_kppi_bound(skew, FractionDomain::Free, 30);
    double prev = 0;
    for (size_t i = 0; i < cap.r_grid.size(); ++i) {
        CHECK(cap.best_f[i][0] <= 1.0 / 3 + 1e-12);
        CHECK(free.curve(cap.r_grid[i]) >= cap.curve(cap.r_grid[i]) - 1e-9);
        if (cap.r_grid[i] > 0.5) {
            CHECK(cap.best_f[i][0] >= prev - 1e-12);
            prev = cap.best_f[i][0];
        }
    }
    CHECK(cap.best_f.back()[0] == Approx(1.0 / 3).epsilon(0.04));

    gen::Rng rng(54);
    for (int it = 0; it < 6; ++it) {
        std::vector<DmtCurve> cs;
        int K = gen::uniform(rng, 3, 5);
        for (int i = 0; i < K; ++i) cs.push_back(random_convex(rng));
        for (auto dom : {FractionDomain::Free, FractionDomain::Capped}) {
            KppiBound p = ma_kppi_bound(cs, dom, 24), s = ma_kppi_bound_serial(cs, dom, 24);
            CHECK(p.curve.pts == s.curve.pts);
            CHECK(p.best_f == s.best_f);
        }
    }
}

TEST_CASE("non-vanishing determinant check") {
    using C = std::complex<double>;
    CMatrix I{{C(1), C(0)}, {C(0), C(1)}}, I2{{C(2), C(0)}, {C(0), C(2)}};
    NvdResult r = nvd_check({I, I2});
    CHECK(r.min_value == Approx(1));
    CHECK(r.full_diversity);
    CHECK_FALSE(nvd_check({I, I2, I}).full_diversity);

    gen::Rng rng(55);
    std::normal_distribution<double> nd;
    std::vector<CMatrix> code;
    for (int w = 0; w < 4; ++w) {
        CMatrix m(2, std::vector<C>(2));
        for (auto& row : m)
            for (auto& z : row) z = C(nd(rng), nd(rng));
        code.push_back(m);
    }
    double best = 1e300;
    for (size_t i = 0; i < code.size(); ++i)
        for (size_t j = i + 1; j < code.size(); ++j) {
            C a = code[i][0][0] - code[j][0][0], b = code[i][0][1] - code[j][0][1];
            C c = code[i][1][0] - code[j][1][0], d = code[i][1][1] - code[j][1][1];
            best = std::min(best, std::norm(a * d - b * c));
        }
    CHECK(nvd_check(code).min_value == Approx(best));

    auto parsed = parse_codebook("[[[[1,0],[0,0]],[[0,0],[1,0]]],[[[0,1],[0,0]],[[0,0],[0,-1]]]]");
    REQUIRE(parsed.size() == 2);
    CHECK(parsed[1][0][0] == C(0, 1));
    CHECK_THROWS_AS(parse_codebook("{}"), InputError);
    CHECK_THROWS_AS(nvd_check({I}), InputError);
    CHECK_THROWS_AS(nvd_check({I, CMatrix{{C(1)}}}), InputError);
}
