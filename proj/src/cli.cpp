#include "afr/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "afr/layered.hpp"
#include "afr/mcsim.hpp"
#include "afr/schedule.hpp"
#include "afr/synth_kpp.hpp"
#include "afr/synth_kppi.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace afr {

namespace {

std::string num(double x) {
    if (std::abs(x) < 5e-13) x = 0;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw InputError("cannot read " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

// error tagged with the module it came from
struct Tagged : std::runtime_error {
    Tagged(const std::string& m, const std::string& what, int code) : std::runtime_error(what), module(m), code(code) {}
    std::string module;
    int code;
};

template <class F>
auto in_module(const std::string& m, F f) {
    try {
        return f();
    } catch (const InputError& e) {
        throw Tagged(m, e.what(), kInputError);
    } catch (const std::invalid_argument& e) {
        throw Tagged(m, e.what(), kInputError);
    } catch (const nlohmann::json::exception& e) {
        throw Tagged(m, e.what(), kInputError);
    }
}

struct Io {
    std::string out_dir;
    std::ostream& out;

    std::string resolve(const std::string& p) const {
        if (out_dir.empty() || fs::path(p).is_absolute()) return p;
        return (fs::path(out_dir) / p).string();
    }
    // empty path: stdout
    void write(const std::string& p, const std::string& text) const {
        if (p.empty()) {
            out << text;
            return;
        }
        std::string full = resolve(p);
        fs::path parent = fs::path(full).parent_path();
        if (!parent.empty()) fs::create_directories(parent);
        std::ofstream f(full, std::ios::binary);
        if (!f) throw InputError("cannot write " + full);
        f << text;
    }
};

NetworkGraph load_net(const std::string& p) { return in_module("netmodel", [&] { return load_network(p); }); }

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::stringstream ss(s);
    while (std::getline(ss, cur, sep)) out.push_back(cur);
    return out;
}

ProductDmtProvider load_provider(const std::string& path) {
    json j = json::parse(read_file(path));
    auto table = std::make_shared<std::map<std::vector<int>, DmtCurve>>();
    for (auto& [key, pts] : j.items()) {
        std::vector<int> tup;
        for (const auto& t : split(key, ',')) tup.push_back(std::stoi(t));
        DmtCurve c;
        for (const auto& p : pts) c.pts.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
        (*table)[tup] = c;
    }
    return [table](const std::vector<int>& t) -> std::optional<DmtCurve> {
        auto it = table->find(t);
        if (it == table->end()) return std::nullopt;
        return it->second;
    };
}

std::vector<int> antenna_layers(const NetworkGraph& net) {
    auto lay = layering(net);
    if (!lay) throw InputError("network is not layered");
    std::vector<int> out;
    for (const auto& l : *lay) {
        int a = 0;
        for (int v : l) a += net.node(v).antennas;
        out.push_back(a);
    }
    return out;
}

std::string class_json(const NetworkGraph& net) {
    NetworkClass c = classify(net);
    json j;
    j["family"] = family_name(c.family);
    j["K"] = c.K;
    j["path_lengths"] = c.path_lengths;
    std::vector<std::vector<std::string>> bb;
    for (const auto& p : c.backbone) {
        std::vector<std::string> ids;
        for (int v : p) ids.push_back(net.node(v).id);
        bb.push_back(ids);
    }
    j["backbone"] = bb;
    j["direct_link"] = c.direct_link;
    j["interference"] = c.interference;
    j["layered"] = c.layered;
    j["fc_layered"] = c.fc_layered;
    j["regular"] = c.regular;
    j["L"] = c.L;
    if (c.layered) {
        std::vector<int> sizes;
        for (const auto& l : c.layers) sizes.push_back(static_cast<int>(l.size()));
        j["layer_sizes"] = sizes;
    }
    j["min_cut"] = min_cut(net);
    return j.dump(2) + "\n";
}

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

CsvTable parse_csv(const std::string& text) {
    CsvTable t;
    std::stringstream ss(text);
    std::string line;
    bool first = true;
    while (std::getline(ss, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto cells = split(line, ',');
        if (first) {
            t.header = cells;
            first = false;
            continue;
        }
        std::vector<double> row;
        for (const auto& c : cells) row.push_back(std::stod(c));
        t.rows.push_back(row);
    }
    return t;
}

}  // namespace

std::string curve_csv(const DmtCurve& c) {
    std::string s = "r,d\n";
    for (auto [r, d] : c.pts) s += num(r) + "," + num(d) + "\n";
    return s;
}

DmtCurve parse_curve_csv(const std::string& text) {
    CsvTable t = parse_csv(text);
    if (t.header != std::vector<std::string>{"r", "d"}) throw InputError("curve CSV must have header r,d");
    DmtCurve c;
    for (const auto& row : t.rows) {
        if (row.size() != 2) throw InputError("curve CSV rows need two columns");
        c.pts.push_back({row[0], row[1]});
    }
    if (c.pts.empty()) throw InputError("curve CSV is empty");
    return c;
}

std::vector<double> parse_grid(const std::string& spec) {
    std::vector<double> out;
    if (spec.find(':') != std::string::npos) {
        auto parts = split(spec, ':');
        if (parts.size() != 3) throw InputError("grid must be lo:hi:step");
        double lo = std::stod(parts[0]), hi = std::stod(parts[1]), step = std::stod(parts[2]);
        if (!(step > 0) || hi < lo) throw InputError("grid " + spec + " is empty");
        for (int i = 0;; ++i) {
            double x = lo + i * step;
            if (x > hi + 1e-9 * step) break;
            out.push_back(x);
        }
    } else {
        for (const auto& p : split(spec, ',')) out.push_back(std::stod(p));
    }
    if (out.empty()) throw InputError("grid " + spec + " is empty");
    return out;
}

Achievable achievable_dmt(const NetworkGraph& net) {
    for (const auto& n : net.nodes())
        if (n.antennas != 1) throw InputError("achievable DMT is only known for single-antenna nodes; use bound --provider");
    NetworkClass c = classify(net);
    if (c.kpp_family && !c.interference && !c.direct_link && c.K == 2 &&
        (c.path_lengths[0] + c.path_lengths[1]) % 2 == 1) {
        // odd parity: parallel channel with per-path activation counts
        Schedule s = synth_k2(net);
        const PathSet& bb = c.backbone;
        std::vector<int> m;
        for (const auto& p : bb) {
            auto it = s.colors.find({net.node(p[0]).id, net.node(p[1]).id});
            m.push_back(it == s.colors.end() ? 0 : static_cast<int>(it->second.size()));
        }
        DmtCurve d = repeated_parallel_dmt({linear_dmt(1, 1), linear_dmt(1, 1)}, m);
        return {rescale_rate(d, 1.0 / s.N), "derived lower bound for odd parity (not claimed optimal)"};
    }
    if (c.kpp_family && c.direct_link && !c.interference) return {linear_dmt(c.K + 1, 1), "KPP(D) schedule, long-block limit"};
    if (c.kpp_family && !c.direct_link && c.K >= 2) return {linear_dmt(c.K, 1), "rate-one KPP schedule"};
    if (c.fc_layered) {
        std::vector<int> R;
        for (const auto& l : c.layers) R.push_back(static_cast<int>(l.size()));
        BalancedProductSpec spec = balanced_multiplicities(R);
        return {rescale_rate(product_parallel_dmt(spec), 1.0 / spec.N), "fc layered protocol, long-block limit"};
    }
    if (c.layered || layering(net)) {
        if (auto d = edge_disjoint_achievable(net)) return {*d, "edge-disjoint forward paths"};
        throw InputError("edge-disjoint paths do not admit a complete matching");
    }
    throw InputError("no achievable scheme for family " + family_name(c.family));
}

namespace {

int cmd_verify(const NetworkGraph& net, const std::string& sched_path, const std::string& codebook, const Io& io,
               const std::string& out_path) {
    bool ok = true;
    json rep;
    if (!sched_path.empty()) {
        Schedule s = in_module("schedule", [&] { return load_schedule(sched_path); });
        CheckReport r = in_module("schedule", [&] { return verify_declared(s, net); });
        json checks = json::array();
        for (const auto& c : r.checks) {
            json jc{{"name", c.name}, {"pass", c.pass}};
            if (!c.witness.empty()) jc["witness"] = c.witness;
            checks.push_back(jc);
        }
        rep["checks"] = checks;
        try {
            Rational q = rate(s, net);
            rep["rate"] = std::to_string(q.numerator()) + "/" + std::to_string(q.denominator());
        } catch (const InputError& e) {
            rep["rate"] = std::string("undefined: ") + e.what();
        }
        ok = ok && r.ok();
    }
    if (!codebook.empty()) {
        auto code = in_module("dmtcalc", [&] { return parse_codebook(read_file(codebook)); });
        NvdResult n = in_module("dmtcalc", [&] { return nvd_check(code); });
        rep["nvd"] = {{"min_value", n.min_value}, {"full_diversity", n.full_diversity}, {"pair", {n.pair_i, n.pair_j}}};
        ok = ok && n.full_diversity;
    }
    rep["pass"] = ok;
    io.write(out_path, rep.dump(2) + "\n");
    return ok ? kPass : kVerifyFail;
}

int cmd_report(const std::string& dir, const Io& io, const std::string& out_path, bool check, double tol) {
    if (dir.empty() || !fs::is_directory(dir)) throw InputError("run directory '" + dir + "' does not exist");
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.path().extension() == ".csv" && e.path().filename() != "report.csv" && e.path().filename() != "fits.csv")
            files.push_back(e.path());
    std::sort(files.begin(), files.end());
    std::vector<std::pair<std::string, DmtCurve>> curves;
    struct Fit {
        std::string name;
        double r;
        SlopeFit fit;
    };
    std::vector<Fit> fits;
    for (const auto& f : files) {
        CsvTable t = parse_csv(read_file(f.string()));
        const std::string stem = f.stem().string();
        if (t.header == std::vector<std::string>{"r", "d"}) {
            curves.push_back({stem, parse_curve_csv(read_file(f.string()))});
        } else if (t.header.size() >= 2 && t.header[0] == "snr_db" && t.header[1] == "pout") {
            std::vector<double> snr, p;
            for (const auto& row : t.rows) snr.push_back(row[0]), p.push_back(row[1]);
            double r = std::nan("");
            fs::path meta = f;
            meta.replace_extension(".meta.json");
            if (fs::exists(meta)) r = json::parse(read_file(meta.string())).value("r", std::nan(""));
            try {
                fits.push_back({stem, r, diversity_fit(snr, p)});
            } catch (const std::invalid_argument&) {
                fits.push_back({stem, r, {}});
            }
        }
    }
    if (curves.empty() && fits.empty()) throw InputError("no artifacts in " + dir);

    std::string table;
    if (!curves.empty()) {
        std::vector<double> grid;
        for (const auto& [n, c] : curves)
            for (auto [r, d] : c.pts) grid.push_back(r);
        std::sort(grid.begin(), grid.end());
        grid.erase(std::unique(grid.begin(), grid.end(), [](double a, double b) { return std::abs(a - b) < 1e-12; }),
                   grid.end());
        table = "r";
        for (const auto& [n, c] : curves) table += "," + n;
        table += "\n";
        for (double r : grid) {
            table += num(r);
            for (const auto& [n, c] : curves) table += "," + num(c(r));
            table += "\n";
        }
        io.write(out_path.empty() ? "report.csv" : out_path, table);
    }
    bool ok = true;
    std::string ft = "source,r,d_hat,stderr,points";
    for (const auto& [n, c] : curves) ft += "," + n + ",pass_" + n;
    ft += "\n";
    for (const auto& f : fits) {
        ft += f.name + "," + num(f.r) + "," + num(f.fit.d) + "," + num(f.fit.stderr_) + "," + std::to_string(f.fit.points);
        for (const auto& [n, c] : curves) {
            if (std::isnan(f.r) || f.fit.points == 0) {
                ft += ",,";
                continue;
            }
            auto row = compare(c, {{f.r, f.fit.d}}, tol);
            ft += "," + num(row[0].analytic) + "," + (row[0].pass ? "1" : "0");
            ok = ok && row[0].pass;
        }
        ft += "\n";
    }
    if (!fits.empty()) io.write("fits.csv", ft);
    io.out << "curves: " << curves.size() << ", fits: " << fits.size() << "\n";
    for (const auto& f : fits)
        io.out << "  " << f.name << ": d_hat=" << num(f.fit.d) << " (" << f.fit.points << " points)\n";
    return check && !ok ? kToleranceFail : kPass;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Schedules and DMT analysis for half-duplex amplify-and-forward relay networks", "afr"};
    app.require_subcommand(1);
    std::uint64_t seed = 1;
    std::string out_dir;
    app.add_option("--seed", seed, "random seed")->capture_default_str();
    app.add_option("--out-dir", out_dir, "directory for relative output paths");

    std::string in, sched, out_path, family, mode, snr = "15:40:5", provider, codebook, sidecar, run_dir;
    double r = 0.5, trials = 1e6, fixed_bits = 0, tol = 0.2;
    int T = 1;
    bool check = false;

    auto* c_classify = app.add_subcommand("classify", "print the network family and structure");
    auto* c_mincut = app.add_subcommand("mincut", "print the edge min-cut");
    auto* c_bound = app.add_subcommand("bound", "cut-set DMT bound (and partition bound with --provider)");
    auto* c_synth = app.add_subcommand("synth", "synthesize a schedule");
    auto* c_verify = app.add_subcommand("verify", "run the checks a schedule declares");
    auto* c_paths = app.add_subcommand("paths", "list source-sink paths as CSV");
    auto* c_dmt = app.add_subcommand("dmt", "DMT curve breakpoints as CSV");
    auto* c_sim = app.add_subcommand("simulate", "Monte Carlo outage probability");
    auto* c_report = app.add_subcommand("report", "merge curves and outage runs from a directory");
    for (auto* c : {c_classify, c_mincut, c_bound, c_synth, c_verify, c_paths, c_dmt, c_sim}) {
        c->add_option("--in", in, "network JSON")->required();
        c->fallthrough();
    }
    for (auto* c : {c_classify, c_mincut, c_bound, c_synth, c_verify, c_paths, c_dmt, c_sim, c_report})
        c->add_option("--out", out_path, "output file (default stdout)");
    c_report->fallthrough();
    c_bound->add_option("--provider", provider, "JSON table of product-channel DMT curves by antenna tuple");
    c_synth->add_option("--family", family)->required()->check(CLI::IsMember({"kpp", "kppd", "regular", "kppi", "fc"}));
    c_synth->add_option("--T", T, "cycles per phase")->check(CLI::PositiveNumber);
    c_synth->add_option("--sidecar", sidecar, "decomposition output for kppi");
    c_verify->add_option("--sched", sched, "schedule JSON");
    c_verify->add_option("--codebook", codebook, "codebook JSON for the NVD check");
    c_dmt->add_option("--mode", mode)->required()->check(CLI::IsMember({"bound", "achievable"}));
    c_sim->add_option("--sched", sched, "schedule JSON")->required();
    c_sim->add_option("--r", r, "multiplexing gain")->capture_default_str();
    c_sim->add_option("--snr", snr, "SNR grid in dB, lo:hi:step or a list")->capture_default_str();
    c_sim->add_option("--trials", trials, "trials per SNR point")->capture_default_str();
    c_sim->add_option("--fixed-rate", fixed_bits, "fixed rate in bits per input instead of r log SNR");
    c_report->add_option("--dir", run_dir, "run directory (default --out-dir)");
    c_report->add_flag("--check", check, "exit 4 when a fit misses an analytic curve");
    c_report->add_option("--tol", tol, "relative tolerance for --check")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e, out, err);
        return code == 0 ? kPass : kInputError;
    }
    Io io{out_dir, out};

    try {
        if (*c_classify) {
            NetworkGraph net = load_net(in);
            io.write(out_path, in_module("netmodel", [&] { return class_json(net); }));
        } else if (*c_mincut) {
            NetworkGraph net = load_net(in);
            io.write(out_path, std::to_string(min_cut(net)) + "\n");
        } else if (*c_bound) {
            NetworkGraph net = load_net(in);
            DmtCurve d = in_module("dmtcalc", [&] {
                if (provider.empty()) return cutset_bound(net);
                return ma_partition_bound(antenna_layers(net), load_provider(provider));
            });
            if (d.partial) err << "dmtcalc: only d(0) of this bound is exact\n";
            io.write(out_path, curve_csv(d));
        } else if (*c_synth) {
            NetworkGraph net = load_net(in);
            Schedule s;
            if (family == "kppi") {
                auto [sc, side] = in_module("synth-kppi", [&] { return synth_kppi_with_sidecar(net, T); });
                s = sc;
                std::string sp = sidecar;
                if (sp.empty() && !out_path.empty()) sp = fs::path(out_path).replace_extension(".layers.json").string();
                if (!sp.empty()) io.write(sp, side + "\n");
            } else if (family == "fc") {
                s = in_module("layered", [&] { return fc_protocol(net, T); });
            } else {
                s = in_module("synth-kpp", [&] {
                    if (family == "kpp") return synth_kpp(net);
                    if (family == "kppd") return synth_kppd(net);
                    return synth_regular(net);
                });
            }
            io.write(out_path, schedule_to_json(s) + "\n");
        } else if (*c_verify) {
            if (sched.empty() && codebook.empty()) throw InputError("verify needs --sched and/or --codebook");
            NetworkGraph net = load_net(in);
            return cmd_verify(net, sched, codebook, io, out_path);
        } else if (*c_paths) {
            NetworkGraph net = load_net(in);
            std::string csv = in_module("layered", [&] {
                NetworkClass c = classify(net);
                std::string s = "path,nodes,hop_edges,partner,hop_multiplicity\n";
                auto ids = [&](const Path& p) {
                    std::string o;
                    for (size_t i = 0; i < p.size(); ++i) o += (i ? "-" : "") + net.node(p[i]).id;
                    return o;
                };
                if (!layering(net)) {
                    for (size_t i = 0; i < c.backbone.size(); ++i) s += std::to_string(i) + "," + ids(c.backbone[i]) + ",,,\n";
                    return s;
                }
                ForwardPaths fp = forward_paths(net);
                std::vector<int> R;
                for (const auto& l : fp.layers) R.push_back(static_cast<int>(l.size()));
                std::vector<int> partner;
                std::string mult;
                if (c.fc_layered) {
                    partner = fc_matching(std::vector<int>(R.begin() + 1, R.end() - 1));
                    BalancedProductSpec spec = balanced_multiplicities(R);
                    for (size_t k = 0; k < spec.Nk.size(); ++k) mult += (k ? ";" : "") + std::to_string(spec.Nk[k]);
                }
                for (size_t i = 0; i < fp.paths.size(); ++i) {
                    std::string hops;
                    for (size_t k = 0; k + 1 < fp.tuples[i].size(); ++k)
                        hops += (k ? ";" : "") + std::to_string(fp.tuples[i][k] * R[k + 1] + fp.tuples[i][k + 1]);
                    s += std::to_string(i) + "," + ids(fp.paths[i]) + "," + hops + "," +
                         (partner.empty() ? std::string() : std::to_string(partner[i])) + "," + mult + "\n";
                }
                return s;
            });
            io.write(out_path, csv);
        } else if (*c_dmt) {
            NetworkGraph net = load_net(in);
            DmtCurve d = in_module("dmtcalc", [&] {
                if (mode == "bound") return cutset_bound(net);
                Achievable a = achievable_dmt(net);
                err << "dmtcalc: " << a.source << "\n";
                return a.curve;
            });
            io.write(out_path, curve_csv(d));
        } else if (*c_sim) {
            NetworkGraph net = load_net(in);
            Schedule s = in_module("schedule", [&] { return load_schedule(sched); });
            OutageConfig cfg;
            cfg.snr_db = in_module("mcsim", [&] { return parse_grid(snr); });
            cfg.r = r;
            cfg.trials = std::llround(trials);
            cfg.seed = seed;
            if (fixed_bits > 0) cfg.fixed_rate = true, cfg.rate_bits = fixed_bits;
            auto pts = in_module("mcsim", [&] { return outage(net, s, cfg); });
            std::string csv = "snr_db,pout,ci_low,ci_high\n";
            for (const auto& p : pts)
                csv += num(p.snr_db) + "," + num(p.pout) + "," + num(p.ci_low) + "," + num(p.ci_high) + "\n";
            io.write(out_path, csv);
            if (!out_path.empty()) {
                json meta{{"r", r}, {"trials", cfg.trials}, {"seed", seed}, {"fixed_rate", cfg.fixed_rate}};
                json ub = json::array();
                for (const auto& p : pts) ub.push_back(p.upper_bound);
                meta["upper_bound"] = ub;
                io.write(fs::path(out_path).replace_extension(".meta.json").string(), meta.dump(2) + "\n");
            }
        } else if (*c_report) {
            return cmd_report(run_dir.empty() ? out_dir : run_dir, io, out_path, check, tol);
        }
    } catch (const Tagged& e) {
        err << e.module << ": " << e.what() << "\n";
        return e.code;
    } catch (const InputError& e) {
        err << "cli: " << e.what() << "\n";
        return kInputError;
    } catch (const std::invalid_argument& e) {
        err << "cli: " << e.what() << "\n";
        return kInputError;
    } catch (const fs::filesystem_error& e) {
        err << "cli: " << e.what() << "\n";
        return kInputError;
    }
    return kPass;
}

}  // namespace afr
