#pragma once

#include <complex>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "afr/dmt.hpp"
#include "afr/netmodel.hpp"
#include "afr/schedule.hpp"

namespace afr {

// monomial = sorted arc indices (repeats allowed) -> integer coefficient
using Monomial = std::vector<int>;
using Poly = std::map<Monomial, long long>;

struct InducedChannel {
    std::vector<int> rows;  // sink receive slots
    std::vector<int> cols;  // source transmit slots
    std::map<std::pair<int, int>, Poly> entries;  // (row index, col index)
    bool warmup = false;    // some relay transmitted from an empty buffer

    const Poly* at(int r, int c) const;
    Eigen::MatrixXcd evaluate(const std::vector<std::complex<double>>& gains) const;
};

// Symbolic impulse propagation over slots [0, horizon); inputs are the source
// slots below input_horizon (default: all).
InducedChannel induced_channel(const NetworkGraph& net, const Schedule& s, int horizon, int input_horizon = -1);

// Direct numeric run with given source symbols per input slot; returns the
// sink samples in slot order. Reference for the symbolic construction.
std::vector<std::complex<double>> simulate_numeric(const NetworkGraph& net, const Schedule& s,
                                                   const std::vector<std::complex<double>>& gains,
                                                   const std::vector<std::complex<double>>& x, int horizon,
                                                   int input_horizon = -1);

std::string poly_str(const Poly& p, const NetworkGraph& net);
// product of arc gains along a path, as a monomial
Monomial path_monomial(const NetworkGraph& net, const Path& p);

// Window used for outage: a few protocol cycles of inputs and enough slots
// for every input to drain.
struct Window {
    int horizon = 0;
    int inputs = 0;
};
Window outage_window(const NetworkGraph& net, const Schedule& s, int cycles = 1);

double mutual_info(const Eigen::MatrixXcd& H, double snr);

// Flat term list plus independent diagonal blocks, for fast per-trial evaluation.
struct CompiledChannel {
    struct Term {
        int row, col;
        double coeff;
        std::vector<int> arcs;
    };
    struct Block {
        std::vector<int> rows, cols;
        std::vector<Term> terms;  // row/col local to the block
    };
    int narcs = 0;
    int ninputs = 0;
    std::vector<Block> blocks;
};
CompiledChannel compile(const InducedChannel& h, int narcs);

struct OutageConfig {
    std::vector<double> snr_db{15, 20, 25, 30, 35, 40};
    double r = 0.5;
    bool fixed_rate = false;  // threshold is rate_bits per input instead of r log2(snr)
    double rate_bits = 1.0;
    long long trials = 1000000;
    std::uint64_t seed = 1;
};

struct OutagePoint {
    double snr_db = 0;
    double pout = 0;
    double ci_low = 0, ci_high = 0;
    long long events = 0;
    bool upper_bound = false;
};

std::vector<OutagePoint> outage(const CompiledChannel& ch, const OutageConfig& cfg);
std::vector<OutagePoint> outage_serial(const CompiledChannel& ch, const OutageConfig& cfg);
std::vector<OutagePoint> outage(const NetworkGraph& net, const Schedule& s, const OutageConfig& cfg);

struct SlopeFit {
    double d = 0;
    double stderr_ = 0;
    int points = 0;
};
SlopeFit diversity_fit(const std::vector<double>& snr_db, const std::vector<double>& pout);

struct CompareRow {
    double r = 0, analytic = 0, estimate = 0;
    bool pass = false;
};
std::vector<CompareRow> compare(const DmtCurve& curve, const std::vector<std::pair<double, double>>& fits,
                                double rel_tol = 0.2);

}  // namespace afr
