#pragma once

#include <set>
#include <vector>

#include "afr/netmodel.hpp"
#include "afr/schedule.hpp"

namespace afr {

// G[i] = three ordered color sets cycled along path i; F[i] colors the last edge.
struct KppDescriptor {
    int N = 0;
    std::vector<std::vector<std::set<int>>> G;
    std::vector<std::set<int>> F;
};

Schedule from_descriptor(const KppDescriptor& d, const NetworkGraph& net, const PathSet& bb);

Schedule synth_k4(const NetworkGraph& net);
Schedule synth_k3(const NetworkGraph& net);
Schedule synth_k2(const NetworkGraph& net);
Schedule synth_regular(const NetworkGraph& net);
Schedule synth_kppd(const NetworkGraph& net);
// dispatch on K for interference-free backbones
Schedule synth_kpp(const NetworkGraph& net);

Rational k2_rate_bound(int n1, int n2);

}  // namespace afr
