#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "afr/dmt.hpp"
#include "afr/netmodel.hpp"

namespace afr {

enum ExitCode { kPass = 0, kVerifyFail = 2, kInputError = 3, kToleranceFail = 4 };

// DMT reached by the family's schedule (single-antenna), with a label saying
// where it comes from.
struct Achievable {
    DmtCurve curve;
    std::string source;
};
Achievable achievable_dmt(const NetworkGraph& net);

std::string curve_csv(const DmtCurve& c);
DmtCurve parse_curve_csv(const std::string& text);

// "15:40:5" (inclusive) or "15,20,30"
std::vector<double> parse_grid(const std::string& spec);

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace afr
