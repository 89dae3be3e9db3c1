#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace afr {

// Bad user input (malformed files, precondition violations on inputs).
struct InputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Role { Source, Relay, Sink };
enum class Duplex { Half, Full };

struct Node {
    std::string id;
    Role role = Role::Relay;
    int antennas = 1;
    Duplex duplex = Duplex::Half;
};

struct EdgeDecl {
    std::string from, to;
    bool bidirectional = true;
};

using Path = std::vector<int>;  // node indices, source first, sink last
using PathSet = std::vector<Path>;

class NetworkGraph {
public:
    NetworkGraph() = default;
    NetworkGraph(std::vector<Node> nodes, std::vector<EdgeDecl> edges,
                 std::vector<std::vector<std::string>> backbone = {});

    int size() const { return static_cast<int>(nodes_.size()); }
    const Node& node(int v) const { return nodes_[v]; }
    const std::vector<Node>& nodes() const { return nodes_; }
    const std::vector<EdgeDecl>& edge_decls() const { return decls_; }
    int source() const { return src_; }
    int sink() const { return snk_; }
    int index(const std::string& id) const;
    bool has_node(const std::string& id) const { return idx_.count(id) > 0; }

    // directed arcs after expansion, sorted by (from, to), no duplicates
    const std::vector<std::pair<int, int>>& arcs() const { return arcs_; }
    int arc_index(int u, int v) const;  // -1 if absent
    bool has_arc(int u, int v) const { return arc_index(u, v) >= 0; }
    bool adjacent(int u, int v) const { return has_arc(u, v) || has_arc(v, u); }
    const std::vector<int>& out(int v) const { return out_[v]; }
    const std::vector<int>& in(int v) const { return in_[v]; }
    const std::vector<int>& nbrs(int v) const { return nbr_[v]; }  // undirected

    const PathSet& backbone() const { return backbone_; }
    bool has_backbone() const { return !backbone_.empty(); }
    NetworkGraph with_backbone(const PathSet& bb) const;
    // drop nodes (and their edges); backbone is kept only if untouched
    NetworkGraph without(const std::vector<int>& drop) const;

    std::string arc_name(int u, int v) const { return nodes_[u].id + "->" + nodes_[v].id; }

private:
    void build();

    std::vector<Node> nodes_;
    std::vector<EdgeDecl> decls_;
    std::map<std::string, int> idx_;
    int src_ = -1, snk_ = -1;
    std::vector<std::pair<int, int>> arcs_;
    std::map<std::pair<int, int>, int> arc_idx_;
    std::vector<std::vector<int>> out_, in_, nbr_;
    PathSet backbone_;
};

NetworkGraph parse_network(const std::string& text);
NetworkGraph load_network(const std::string& path);
std::string network_to_json(const NetworkGraph& net);

enum class Family { KPP, KPP_D, KPP_I, KPP_ID, Layered, FcLayered, Regular, General };
std::string family_name(Family f);

struct NetworkClass {
    Family family = Family::General;
    int K = 0;
    std::vector<int> path_lengths;  // edges per backbone path
    PathSet backbone;
    int L = 0;
    std::vector<std::vector<int>> layers;  // V_0..V_{L+1}, empty when not layered
    bool direct_link = false;
    bool interference = false;
    bool kpp_family = false;  // backbone covers every node
    bool layered = false;
    bool fc_layered = false;
    bool regular = false;
};

NetworkClass classify(const NetworkGraph& net);

// Partition into layers by hop distance; nullopt when no valid layering exists.
// Relay layers of size one are allowed here; NetworkClass::layered demands >= 2.
std::optional<std::vector<std::vector<int>>> layering(const NetworkGraph& net);

PathSet node_disjoint_backbone(const NetworkGraph& net);

// Edge min-cut with antennas(u)*antennas(v) unit edges per arc.
int min_cut(const NetworkGraph& net);

struct DmtCurve;
DmtCurve cutset_bound(const NetworkGraph& net);

// True when the undirected edge {u,v} joins consecutive nodes of a backbone path.
bool is_backbone_edge(const PathSet& bb, int u, int v);

}  // namespace afr
