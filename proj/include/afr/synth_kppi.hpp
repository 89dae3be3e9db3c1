#pragma once

#include <map>
#include <string>
#include <vector>

#include "afr/netmodel.hpp"
#include "afr/schedule.hpp"

namespace afr {

// Working view of a KPP(I) network: the original graph with some relays
// switched off and the backbone possibly re-routed.
struct KppiNet {
    NetworkGraph net;             // inactive nodes removed, backbone set
    std::vector<std::string> off; // ids of deactivated relays
};

// one position per backbone path (0 = source, n_p = sink)
using Partition = std::vector<int>;

struct Switch {
    Partition left, right;  // -1 on paths outside S
    std::vector<int> S;
    std::vector<int> match;  // match[i]: path in S whose right node pairs with left node of S[i]
    bool contiguous = false;
};

enum class LayerType { T1, T2, T3 };

struct Layer {
    Partition left, right;
    LayerType type = LayerType::T1;
    bool source_layer = false, sink_layer = false;
    int links = 0;
    std::map<std::string, int> left_comp, right_comp, internal;  // delays by node id
};

std::string layer_type_name(LayerType t);

KppiNet kppi_start(const NetworkGraph& net);
// bypass shortcut segments, innermost first, until none remain
KppiNet preprocess_shortcuts(const KppiNet& in);
std::vector<Switch> find_switches(const NetworkGraph& net, int k);
KppiNet remove_noncontiguous_switches(const KppiNet& in);
std::vector<Layer> layer_decompose(const NetworkGraph& net);

struct KppiResult {
    Schedule sched;
    std::vector<Layer> layers;
    KppiNet work;
};
// three-path color and delay assignment; fills the compensation fields of `layers`
Schedule assign_colors_delays(std::vector<Layer>& layers, const NetworkGraph& net);

// K = 3: full pipeline. K > 3: one phase per 3-path subnetwork.
Schedule synth_kppi(const NetworkGraph& net, int T = 1);
// schedule plus a JSON description of the decomposition(s)
std::pair<Schedule, std::string> synth_kppi_with_sidecar(const NetworkGraph& net, int T = 1);

}  // namespace afr
