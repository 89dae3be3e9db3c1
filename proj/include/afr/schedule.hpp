#pragma once

#include <boost/rational.hpp>

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "afr/netmodel.hpp"

namespace afr {

using Rational = boost::rational<std::int64_t>;
using ArcKey = std::pair<std::string, std::string>;

struct Phase;

// Periodic edge coloring plus node delays. A schedule with phases runs each
// phase for `cycles` of its own cycle; the source is silent after
// `active_cycles` so the phase drains before the next one starts.
struct Schedule {
    int N = 1;
    std::map<ArcKey, std::vector<int>> colors;
    std::map<std::string, int> delays;
    std::set<std::string> deactivated;
    // explicit backbone when it differs from the network's own (re-routed paths)
    std::vector<std::vector<std::string>> backbone;
    std::vector<Phase> phases;
    std::map<std::string, std::string> notes;

    bool phased() const { return !phases.empty(); }
    int period() const;
    int delay(const std::string& v) const {
        auto it = delays.find(v);
        return it == delays.end() ? 0 : it->second;
    }
    void add(const std::string& u, const std::string& v, int slot);
};

struct Phase {
    Schedule sched;
    int cycles = 1;
    int active_cycles = 1;
    std::vector<std::vector<std::string>> backbone;
};

Schedule parse_schedule(const std::string& text);
Schedule load_schedule(const std::string& path);
std::string schedule_to_json(const Schedule& s);

struct Check {
    std::string name;
    bool pass = true;
    std::string witness;
};

struct CheckReport {
    std::vector<Check> checks;
    bool ok() const;
    const Check* find(const std::string& name) const;
    std::string str() const;
};

// Structural validity: arcs exist, slots in range, no deactivated endpoints,
// half-duplex nodes never listen and transmit in the same slot.
CheckReport validate(const Schedule& s, const NetworkGraph& net);

// backbone used by the verifiers: the network's own, else the computed one
PathSet backbone_of(const NetworkGraph& net);

Rational rate(const Schedule& s, const NetworkGraph& net);
CheckReport verify_orthogonal(const Schedule& s, const NetworkGraph& net);
bool verify_backflow_free(const Schedule& s, const NetworkGraph& net);
CheckReport verify_dmt_opt(const Schedule& s, const NetworkGraph& net);

struct PathDelay {
    int path = 0;
    int emit = 0;   // source slot within the first cycle
    int delay = 0;  // slots from emission to sink reception
};
std::vector<PathDelay> delay_profile(const Schedule& s, const NetworkGraph& net);
// maximum over emissions, one entry per backbone path
std::vector<int> path_delays(const Schedule& s, const NetworkGraph& net);

struct CausalWitness {
    int emit = 0;
    int path = 0;
    std::string branch_node;
    ArcKey link;
    int backbone_arrival = -1;
    int other_arrival = -1;
    std::string str() const;
};
struct CausalResult {
    bool causal = true;
    std::optional<CausalWitness> witness;
};
CausalResult is_causal(const Schedule& s, const NetworkGraph& net, int cycles = 2);

// Runs the checks listed in notes["claims"] (comma separated; default "structure").
CheckReport verify_declared(const Schedule& s, const NetworkGraph& net);

// The flat schedule of one phase, on the network restricted to its backbone.
Schedule phase_schedule(const Schedule& s, int p);
NetworkGraph phase_network(const Schedule& s, int p, const NetworkGraph& net);
// A flat schedule's view of the network: its backbone applied, deactivated nodes dropped.
NetworkGraph schedule_network(const Schedule& s, const NetworkGraph& net);

}  // namespace afr
