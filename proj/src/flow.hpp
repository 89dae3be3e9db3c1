#pragma once

#include <algorithm>
#include <queue>
#include <vector>

namespace afr::detail {

// Edmonds-Karp on a small residual graph. Arcs are explored in insertion
// order so the result is deterministic.
class MaxFlow {
public:
    explicit MaxFlow(int n) : g_(n) {}

    int add(int u, int v, int cap) {
        g_[u].push_back(static_cast<int>(e_.size()));
        e_.push_back({v, cap});
        g_[v].push_back(static_cast<int>(e_.size()));
        e_.push_back({u, 0});
        return static_cast<int>(e_.size()) - 2;
    }

    int run(int s, int t) {
        int total = 0;
        for (;;) {
            std::vector<int> via(g_.size(), -1);
            std::queue<int> q;
            q.push(s);
            std::vector<char> seen(g_.size(), 0);
            seen[s] = 1;
            while (!q.empty() && !seen[t]) {
                int u = q.front();
                q.pop();
                for (int id : g_[u]) {
                    int v = e_[id].to;
                    if (!seen[v] && e_[id].cap > 0) {
                        seen[v] = 1;
                        via[v] = id;
                        q.push(v);
                    }
                }
            }
            if (!seen[t]) return total;
            int push = 1 << 30;
            for (int v = t; v != s; v = e_[via[v] ^ 1].to) push = std::min(push, e_[via[v]].cap);
            for (int v = t; v != s; v = e_[via[v] ^ 1].to) {
                e_[via[v]].cap -= push;
                e_[via[v] ^ 1].cap += push;
            }
            total += push;
        }
    }

    int flow_on(int id) const { return e_[id ^ 1].cap; }

private:
    struct Arc {
        int to, cap;
    };
    std::vector<std::vector<int>> g_;
    std::vector<Arc> e_;
};

}  // namespace afr::detail
