#include <doctest.h>

#include <afr/layered.hpp>

#include <algorithm>
#include <numeric>

#include "gen.hpp"

using namespace afr;

namespace {

// tries every permutation
bool has_perfect_matching(const Bipartite& g) {
    std::vector<int> perm(g.n);
    std::iota(perm.begin(), perm.end(), 0);
    do {
        bool ok = true;
        for (int i = 0; i < g.n && ok; ++i)
            ok = std::find(g.adj[i].begin(), g.adj[i].end(), perm[i]) != g.adj[i].end();
        if (ok) return true;
    } while (std::next_permutation(perm.begin(), perm.end()));
    return false;
}

int product(const std::vector<int>& R) { return std::accumulate(R.begin(), R.end(), 1, std::multiplies<int>()); }

std::vector<std::vector<int>> all_R(int max_len, int max_prod) {
    std::vector<std::vector<int>> out, frontier{{}};
    while (!frontier.empty()) {
        std::vector<std::vector<int>> next;
        for (const auto& R : frontier)
            for (int r = 2; r <= 4; ++r) {
                auto S = R;
                S.push_back(r);
                if (product(S) > max_prod || static_cast<int>(S.size()) > max_len) continue;
                out.push_back(S);
                next.push_back(S);
            }
        frontier = next;
    }
    return out;
}

}  // namespace

TEST_CASE("forward paths of fully connected layered networks") {
    for (const auto& R : all_R(4, 64)) {
        auto g = gen::fc(R).build(false);
        ForwardPaths fp = forward_paths(g);
        CHECK(static_cast<int>(fp.paths.size()) == product(R));
        CHECK(fp.layers.size() == R.size() + 2);
        CHECK(std::is_sorted(fp.tuples.begin(), fp.tuples.end()));
        for (size_t i = 0; i < fp.paths.size(); ++i)
            for (size_t k = 0; k < fp.paths[i].size(); ++k)
                CHECK(fp.layers[k][fp.tuples[i][k]] == fp.paths[i][k]);
    }
    CHECK_THROWS_AS(forward_paths(gen::kpp({2, 3}).build()), InputError);
}

TEST_CASE("perfect matching agrees with permutation search") {
    gen::Rng rng(41);
    for (int it = 0; it < 400; ++it) {
        Bipartite g;
        g.n = gen::uniform(rng, 1, 7);
        g.adj.resize(g.n);
        double p = gen::uniform(rng, 1, 9) / 10.0;
        for (int i = 0; i < g.n; ++i)
            for (int j = 0; j < g.n; ++j)
                if (std::bernoulli_distribution(p)(rng)) g.adj[i].push_back(j);
        auto m = max_matching(g);
        CHECK(m.has_value() == has_perfect_matching(g));
        if (!m) continue;
        std::vector<int> seen(g.n, 0);
        for (int i = 0; i < g.n; ++i) {
            CHECK(std::find(g.adj[i].begin(), g.adj[i].end(), (*m)[i]) != g.adj[i].end());
            CHECK(seen[(*m)[i]]++ == 0);
        }
    }
}

TEST_CASE("cyclic shift matching pairs disjoint paths") {
    CHECK(fc_matching({2, 2}) == std::vector<int>{3, 2, 1, 0});
    CHECK(fc_matching({3}) == std::vector<int>{1, 2, 0});
    CHECK(fc_matching({2, 3}) == std::vector<int>{4, 5, 3, 1, 2, 0});
    CHECK_THROWS_AS(fc_matching({2, 1}), InputError);
    for (const auto& R : all_R(4, 64)) {
        auto g = gen::fc(R).build(false);
        ForwardPaths fp = forward_paths(g);
        auto pi = fc_matching(R);
        auto bip = path_bipartite(fp.paths);
        std::vector<int> hit(pi.size(), 0);
        for (size_t i = 0; i < pi.size(); ++i) {
            CHECK(std::find(bip.adj[i].begin(), bip.adj[i].end(), pi[i]) != bip.adj[i].end());
            ++hit[pi[i]];
        }
        CHECK(std::all_of(hit.begin(), hit.end(), [](int h) { return h == 1; }));
    }
}

TEST_CASE("balanced multiplicities") {
    auto a = balanced_multiplicities({1, 2, 2, 1});
    CHECK(a.N == 4);
    CHECK(a.Nk == std::vector<int>{2, 1, 2});
    CHECK(a.M == std::vector<int>{2, 4, 2});
    CHECK(a.N_max == 2);
    CHECK(a.M_min == 2);
    CHECK(a.balanced());

    auto b = balanced_multiplicities({1, 3, 1});
    CHECK(b.N == 3);
    CHECK(b.N_max == 1);

    auto c = balanced_multiplicities({1, 2, 2, 2, 1});
    CHECK(c.N == 8);
    CHECK(c.Nk == std::vector<int>{4, 2, 2, 4});
    CHECK(c.N_max == 4);

    for (const auto& R : all_R(4, 48)) {
        std::vector<int> full{1};
        full.insert(full.end(), R.begin(), R.end());
        full.push_back(1);
        auto s = balanced_multiplicities(full);
        REQUIRE(s.balanced());
        CHECK(s.N == s.N_max * s.M_min);
        for (size_t k = 0; k < s.M.size(); ++k) {
            CHECK(s.Nk[k] * s.M[k] == s.N);
            std::vector<int> count(s.M[k], 0);
            for (const auto& e : s.e) ++count[e[k]];
            CHECK(std::all_of(count.begin(), count.end(), [&](int x) { return x == s.Nk[k]; }));
        }
    }
    CHECK_THROWS_AS(balanced_multiplicities({1}), InputError);
    CHECK_THROWS_AS(balanced_multiplicities({1, 0, 1}), InputError);
}

TEST_CASE("edge-disjoint achievable curve") {
    auto two = edge_disjoint_achievable(gen::fc({2, 2}).build(false));
    REQUIRE(two);
    CHECK((*two)(0) == doctest::Approx(2));
    CHECK(two->r_max() == doctest::Approx(1));
    CHECK((*two)(0.5) == doctest::Approx(1));

    CHECK_FALSE(edge_disjoint_achievable(gen::fc({3, 2, 3}).build(false)));

    auto chain = edge_disjoint_achievable(gen::fc({1, 1}).build(false));
    REQUIRE(chain);
    CHECK(chain->d0() == doctest::Approx(1));

    for (const auto& R : all_R(3, 36)) {
        auto g = gen::fc(R).build(false);
        auto c = edge_disjoint_achievable(g);
        if (c) CHECK(c->d0() <= min_cut(g) + 1e-9);
    }
}

TEST_CASE("fully connected protocol") {
    auto g = gen::fc({2, 3}).build(false);
    Schedule s = fc_protocol(g);
    CHECK(s.phases.size() == 6);
    CHECK(is_causal(s, g).causal);

    for (const auto& R : all_R(3, 24)) {
        auto h = gen::fc(R).build(false);
        for (int T : {1, 3}) {
            Schedule p = fc_protocol(h, T);
            CHECK(static_cast<int>(p.phases.size()) == product(R));
            for (const auto& ph : p.phases) {
                CHECK(ph.active_cycles == T);
                CHECK(ph.backbone.size() == 2);
            }
            CheckReport r = verify_declared(p, h);
            INFO(r.str());
            CHECK(r.ok());
        }
    }
    CHECK_THROWS_AS(fc_protocol(gen::kpp({2, 3}).build()), InputError);
    CHECK_THROWS_AS(fc_protocol(g, 0), InputError);
}
