#include <afr/dmt.hpp>
#include <afr/layered.hpp>
#include <afr/mcsim.hpp>
#include <afr/synth_kpp.hpp>

#include <benchmark/benchmark.h>

using namespace afr;

namespace {

NetworkGraph kpp(const std::vector<int>& lengths) {
    std::string nodes = R"({"id":"s","role":"source"},{"id":"t","role":"sink"})", edges;
    for (size_t p = 0; p < lengths.size(); ++p) {
        std::string prev = "s";
        for (int i = 1; i < lengths[p]; ++i) {
            std::string id = "p" + std::to_string(p) + "_" + std::to_string(i);
            nodes += R"(,{"id":")" + id + R"(","role":"relay"})";
            edges += (edges.empty() ? "" : ",") + std::string(R"({"from":")") + prev + R"(","to":")" + id + R"("})";
            prev = id;
        }
        edges += R"(,{"from":")" + prev + R"(","to":"t"})";
    }
    return parse_network(R"({"nodes":[)" + nodes + R"(],"edges":[)" + edges + "]}");
}

CompiledChannel channel_for(const NetworkGraph& g, const Schedule& s) {
    Window w = outage_window(g, s);
    return compile(induced_channel(g, s, w.horizon, w.inputs), static_cast<int>(g.arcs().size()));
}

OutageConfig config(long long trials) {
    OutageConfig c;
    c.snr_db = {15, 20, 25, 30, 35, 40};
    c.trials = trials;
    c.seed = 3;
    return c;
}

const NetworkGraph& bench_net() {
    static NetworkGraph g = kpp({3, 4, 5, 3});
    return g;
}

void BM_outage(benchmark::State& st) {
    const auto& g = bench_net();
    CompiledChannel ch = channel_for(g, synth_kpp(g));
    OutageConfig cfg = config(st.range(0));
    for (auto _ : st) benchmark::DoNotOptimize(outage(ch, cfg));
    st.SetItemsProcessed(st.iterations() * st.range(0));
}

void BM_outage_serial(benchmark::State& st) {
    const auto& g = bench_net();
    CompiledChannel ch = channel_for(g, synth_kpp(g));
    OutageConfig cfg = config(st.range(0));
    for (auto _ : st) benchmark::DoNotOptimize(outage_serial(ch, cfg));
    st.SetItemsProcessed(st.iterations() * st.range(0));
}

std::vector<DmtCurve> kppi_curves(int K) {
    std::vector<DmtCurve> d;
    for (int i = 0; i < K; ++i) d.push_back(parallel_dmt({linear_dmt(2 + i, 1), linear_dmt(1, 0.5 + 0.25 * i)}));
    return d;
}

void BM_ma_kppi_bound(benchmark::State& st) {
    auto d = kppi_curves(static_cast<int>(st.range(0)));
    for (auto _ : st) benchmark::DoNotOptimize(ma_kppi_bound(d, FractionDomain::Capped, 30));
}

void BM_ma_kppi_bound_serial(benchmark::State& st) {
    auto d = kppi_curves(static_cast<int>(st.range(0)));
    for (auto _ : st) benchmark::DoNotOptimize(ma_kppi_bound_serial(d, FractionDomain::Capped, 30));
}

}  // namespace

BENCHMARK(BM_outage)->Arg(20000)->Arg(200000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_outage_serial)->Arg(20000)->Arg(200000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ma_kppi_bound)->Arg(4)->Arg(5)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ma_kppi_bound_serial)->Arg(4)->Arg(5)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
