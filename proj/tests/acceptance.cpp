// Acceptance suite: one PASS/FAIL line per criterion, details indented below.
// Exit status is 0 only when every criterion passes.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "lowpan/hilow.hpp"
#include "lowpan/packet.hpp"
#include "lowpan/scenario.hpp"
#include "packet_gen.hpp"

using namespace lowpan;

namespace {

constexpr int kSeeds = 10;
constexpr double kRatioLow = 0.3;
constexpr double kRatioHigh = 0.7;
constexpr double kRuntimeLimitS = 120.0;
constexpr int kWinsNeeded = 8;
constexpr int kNoiseForPdr = 40;
constexpr int kCodecSamples = 100'000;
constexpr int kRandomTrees = 1000;
constexpr double kEnergyTolerance = 1e-9;

struct Outcome {
    bool pass = false;
    std::vector<std::string> details;
};

std::string fmt(const char* f, auto... args)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

std::string opt(const std::optional<double>& v, const char* f = "%.4f") { return v ? fmt(f, *v) : std::string("NA"); }

/// Checks every run passes through: RREP origin scan and energy bookkeeping.
struct RunAudit {
    std::size_t load_runs = 0;
    std::size_t stray_rreps = 0;
    std::size_t relayed_rreps = 0;
    std::size_t runs = 0;
    double worst_energy_rel = 0.0;

    void scan(const RunResult& r, const std::string& protocol)
    {
        ++runs;
        double debits = 0.0;
        for (double d : r.debits)
            debits += d;
        const double denom = std::max(std::abs(r.metrics.energy_consumed_j), 1e-300);
        worst_energy_rel = std::max(worst_energy_rel, std::abs(debits - r.metrics.energy_consumed_j) / denom);

        if (protocol.rfind("load", 0) != 0)
            return;
        ++load_runs;
        // every data flow ends at node 0, the only destination a request can name
        for (const auto& rec : r.log.records()) {
            if (rec.event != LogEvent::Tx || rec.kind != TraceKind::Rrep)
                continue;
            if (rec.reason == Reason::RrepForward)
                ++relayed_rreps;
            else if (rec.node != 0)
                ++stray_rreps;
        }
    }
};

RunAudit audit;

RunMetrics run(const ScenarioConfig& cfg, const std::string& protocol, std::uint64_t seed)
{
    auto r = run_scenario(cfg, protocol, seed);
    audit.scan(r, protocol);
    return r.metrics;
}

ScenarioConfig defaults()
{
    ScenarioConfig cfg; // 50 nodes, 200 x 200 m, 40 m range, 3 sources, 5 pkt/s, 500 s, loss 0.1
    cfg.seeds.clear();
    for (int s = 1; s <= kSeeds; ++s)
        cfg.seeds.push_back(static_cast<std::uint64_t>(s));
    return cfg;
}

double mean_overhead(const std::vector<RunMetrics>& runs)
{
    double sum = 0.0;
    for (const auto& m : runs)
        sum += static_cast<double>(m.control_overhead);
    return sum / static_cast<double>(runs.size());
}

Outcome overhead_ratio(const std::vector<RunMetrics>& elbrp, const std::vector<RunMetrics>& load_hello, double seconds)
{
    Outcome o;
    const double ratio = mean_overhead(elbrp) / mean_overhead(load_hello);
    o.pass = ratio >= kRatioLow && ratio <= kRatioHigh && seconds < kRuntimeLimitS;
    o.details.push_back(fmt("mean control overhead: elbrp %.1f, load+hello %.1f, ratio %.3f (want [%.1f, %.1f])", mean_overhead(elbrp),
                            mean_overhead(load_hello), ratio, kRatioLow, kRatioHigh));
    o.details.push_back(fmt("runtime for %zu runs: %.1f s (limit %.0f s)", elbrp.size() + load_hello.size(), seconds, kRuntimeLimitS));
    return o;
}

Outcome delay_ordering(const std::vector<RunMetrics>& elbrp, const std::vector<RunMetrics>& load)
{
    Outcome o;
    int wins = 0;
    std::string per_seed;
    for (std::size_t i = 0; i < elbrp.size(); ++i) {
        const auto& e = elbrp[i].avg_e2e_delay_s;
        const auto& l = load[i].avg_e2e_delay_s;
        // a protocol with no deliveries has no delay to be proud of
        const bool win = e && (!l || *e <= *l);
        wins += win;
        per_seed += fmt(" s%llu:%s/%s%s", static_cast<unsigned long long>(elbrp[i].seed), opt(e).c_str(), opt(l).c_str(), win ? "+" : "-");
    }
    o.pass = wins >= kWinsNeeded;
    o.details.push_back(fmt("elbrp delay <= load delay in %d of %zu seeds (want >= %d)", wins, elbrp.size(), kWinsNeeded));
    o.details.push_back("elbrp/load seconds:" + per_seed);
    return o;
}

Outcome pdr_ordering(const std::vector<RunMetrics>& elbrp, const std::vector<RunMetrics>& load)
{
    Outcome o;
    int wins = 0;
    std::string per_seed;
    for (std::size_t i = 0; i < elbrp.size(); ++i) {
        const auto& e = elbrp[i].pdr;
        const auto& l = load[i].pdr;
        const bool win = e && l && *e >= *l;
        wins += win;
        per_seed += fmt(" s%llu:%s/%s%s", static_cast<unsigned long long>(elbrp[i].seed), opt(e, "%.3f").c_str(), opt(l, "%.3f").c_str(),
                        win ? "+" : "-");
    }
    o.pass = wins >= kWinsNeeded;
    o.details.push_back(fmt("noise %d: elbrp pdr >= load pdr in %d of %zu seeds (want >= %d)", kNoiseForPdr, wins, elbrp.size(), kWinsNeeded));
    o.details.push_back("elbrp/load pdr:" + per_seed);
    return o;
}

Outcome grid_delivery()
{
    Outcome o;
    std::vector<NodeState> nodes;
    for (int y = 0; y < 5; ++y) {
        for (int x = 0; x < 5; ++x) {
            NodeState n;
            n.address = NodeAddress::short_addr(static_cast<std::uint16_t>(nodes.size()));
            n.role = nodes.empty() ? NodeRole::EdgeRouter : NodeRole::LocalEdgeRouter;
            n.location = {10.0 + 30.0 * x, 10.0 + 30.0 * y};
            n.energy_j = 1.0;
            nodes.push_back(n);
        }
    }
    ScenarioConfig cfg;
    cfg.radio.loss_probability = 0.0;
    cfg.traffic.stop_s = cfg.duration_s - 10.0; // nothing still in flight when the run ends
    const Topology topo{nodes, pick_sources(nodes, cfg.traffic.sources, cfg.radio.radio_range_m)};

    o.pass = true;
    std::size_t delivered = 0, hops_checked = 0, bad_hops = 0;
    for (std::uint64_t seed = 1; seed <= kSeeds; ++seed) {
        auto r = run_on_topology(cfg, "elbrp", topo, seed);
        audit.scan(r, "elbrp");
        if (!r.metrics.pdr || *r.metrics.pdr != 1.0) {
            o.pass = false;
            o.details.push_back(fmt("seed %llu: pdr %s", static_cast<unsigned long long>(seed), opt(r.metrics.pdr, "%.6f").c_str()));
        }
        delivered += r.metrics.delivered;

        // rebuild each path from the first copy every node received
        std::map<std::pair<std::uint64_t, NodeIndex>, NodeIndex> from;
        std::map<std::uint64_t, NodeIndex> origin;
        for (const auto& rec : r.log.records()) {
            if (rec.kind != TraceKind::Data)
                continue;
            const std::uint64_t key = (rec.orig << 16) | rec.seq;
            if (rec.event == LogEvent::Generate)
                origin[key] = rec.node;
            else if (rec.event == LogEvent::Rx)
                from.emplace(std::make_pair(key, rec.node), rec.peer);
            else if (rec.event == LogEvent::Deliver) {
                NodeIndex at = rec.node;
                while (at != origin.at(key)) {
                    const NodeIndex prev = from.at({key, at});
                    ++hops_checked;
                    if (!(euclidean_distance(nodes[at].location, nodes[0].location) < euclidean_distance(nodes[prev].location, nodes[0].location)))
                        ++bad_hops;
                    at = prev;
                }
            }
        }
    }
    if (bad_hops > 0)
        o.pass = false;
    o.details.push_back(fmt("5x5 grid, 30 m spacing, %d seeds: %zu packets delivered, all pdr == 1: %s", kSeeds, delivered, o.pass ? "yes" : "no"));
    o.details.push_back(fmt("%zu hops checked, %zu did not get strictly closer to the ER", hops_checked, bad_hops));
    return o;
}

Outcome codec()
{
    Outcome o;
    Rng rng(20250101);
    int roundtrip_fail = 0;
    for (int i = 0; i < kCodecSamples; ++i) {
        const Packet p = testing::random_packet(rng);
        const auto bytes = encode(p);
        if (bytes.size() != frame_size(p) || !(decode(bytes) == p))
            ++roundtrip_fail;
    }
    int fuzz_escape = 0;
    for (int i = 0; i < kCodecSamples; ++i) {
        std::vector<std::uint8_t> bytes(static_cast<std::size_t>(rng.uniform_int(0, 128)));
        for (auto& b : bytes)
            b = static_cast<std::uint8_t>(rng.next());
        if (!bytes.empty() && rng.bernoulli(0.8))
            bytes[0] = static_cast<std::uint8_t>(rng.uniform_int(1, 6));
        try {
            if (!testing::decodes_cleanly(bytes))
                ++fuzz_escape;
        } catch (...) {
            ++fuzz_escape;
        }
    }

    // hand-assembled frames
    RreqPacket short_rreq;
    short_rreq.dest_addr = NodeAddress::short_addr(0);
    short_rreq.dest_loc = {100, 100};
    short_rreq.orig_addr = NodeAddress::short_addr(7);
    short_rreq.orig_loc = {12, 34};
    RreqPacket long_rreq = short_rreq;
    long_rreq.flags = {true, true, 0};
    long_rreq.dest_addr = NodeAddress::extended(0x0102030405060708ULL);
    long_rreq.orig_addr = NodeAddress::extended(0xA1A2A3A4A5A6A7A8ULL);
    AckPacket ack;
    ack.seq = 0xBEEF;
    RerrPacket rerr;
    rerr.unreachable_addr = NodeAddress::short_addr(0);
    rerr.orig_addr = NodeAddress::short_addr(0x1234);
    const std::vector<std::pair<Packet, std::string>> goldens{
        {short_rreq, "01000000006400640007000c0022"},
        {long_rreq, "01c0010203040506070800640064a1a2a3a4a5a6a7a8000c0022"},
        {ack, "0600beef"},
        {rerr, "030000001234"},
    };
    int golden_fail = 0;
    for (const auto& [p, hex] : goldens)
        if (to_hex(encode(p)) != hex || !(decode(from_hex(hex)) == p))
            ++golden_fail;
    const bool sizes = encode(short_rreq).size() == 14 && encode(long_rreq).size() == 26;

    o.pass = roundtrip_fail == 0 && fuzz_escape == 0 && golden_fail == 0 && sizes;
    o.details.push_back(fmt("%d random packets: %d roundtrip mismatches", kCodecSamples, roundtrip_fail));
    o.details.push_back(fmt("%d random byte strings: %d escaped the typed decode errors", kCodecSamples, fuzz_escape));
    o.details.push_back(fmt("%zu golden frames: %d mismatches; RREQ sizes 14/26 bytes: %s", goldens.size(), golden_fail, sizes ? "yes" : "no"));
    return o;
}

Outcome hilow_tree()
{
    using namespace lowpan::hilow;
    Outcome o;
    std::uint64_t checked = 0, inverse_fail = 0;
    for (std::uint32_t mc = 1; mc <= 8; ++mc) {
        const HilowConfig cfg{mc};
        for (Address ap = 0; static_cast<std::uint64_t>(mc) * ap + 1 <= kMaxAddress; ++ap) {
            for (std::uint32_t n = 1; n <= mc && static_cast<std::uint64_t>(mc) * ap + n <= kMaxAddress; ++n) {
                ++checked;
                if (parent_of(allocate_child(ap, n, cfg), cfg) != ap)
                    ++inverse_fail;
            }
        }
    }

    std::mt19937_64 rng(4242);
    std::uint64_t routes = 0, over_bound = 0, off_tree = 0, missed = 0;
    for (int t = 0; t < kRandomTrees; ++t) {
        const HilowConfig cfg{1 + static_cast<std::uint32_t>(rng() % 8)};
        std::map<Address, Address> parent;
        std::map<Address, std::uint32_t> depth{{0, 0}}, used{{0, 0}};
        std::vector<Address> members{0};
        const std::size_t size = 2 + rng() % 100;
        for (int tries = 0; members.size() < size && tries < 2000; ++tries) {
            const Address p = members[rng() % members.size()];
            if (used[p] == cfg.mc || static_cast<std::uint64_t>(cfg.mc) * p + used[p] + 1 > kMaxAddress)
                continue;
            const Address c = allocate_child(p, ++used[p], cfg);
            parent[c] = p;
            depth[c] = depth[p] + 1;
            used[c] = 0;
            members.push_back(c);
        }
        for (int k = 0; k < 10; ++k) {
            const Address src = members[rng() % members.size()];
            const Address dst = members[rng() % members.size()];
            ++routes;
            Address at = src;
            std::uint32_t steps = 0;
            const std::uint32_t bound = depth[src] + depth[dst];
            const std::uint32_t dd = depth_of(dst, cfg);
            while (auto nh = next_hop(HilowNode{at, depth_of(at, cfg), 0}, dst, dd, cfg)) {
                const bool edge = (parent.count(*nh) && parent[*nh] == at) || (parent.count(at) && parent[at] == *nh);
                if (!edge || !depth.count(*nh))
                    ++off_tree;
                at = *nh;
                if (++steps > bound)
                    break;
            }
            if (steps > bound)
                ++over_bound;
            else if (at != dst)
                ++missed;
        }
    }
    o.pass = inverse_fail == 0 && over_bound == 0 && off_tree == 0 && missed == 0;
    o.details.push_back(fmt("mc 1..8, every child slot in 16 bits: %llu checked, %llu not inverted", static_cast<unsigned long long>(checked),
                            static_cast<unsigned long long>(inverse_fail)));
    o.details.push_back(fmt("%d random trees, %llu routes: %llu over depth(src)+depth(dst), %llu off-tree hops, %llu not arriving", kRandomTrees,
                            static_cast<unsigned long long>(routes), static_cast<unsigned long long>(over_bound),
                            static_cast<unsigned long long>(off_tree), static_cast<unsigned long long>(missed)));
    return o;
}

std::string slurp(const std::filesystem::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

Outcome determinism()
{
    Outcome o;
    o.pass = true;
    const ScenarioConfig cfg = defaults();
    int identical = 0, compared = 0;
    for (const std::string proto : {"elbrp", "load", "load+hello"}) {
        for (std::uint64_t seed : {1ULL, 7ULL}) {
            const auto a = run_scenario(cfg, proto, seed);
            const auto b = run_scenario(cfg, proto, seed);
            audit.scan(a, proto);
            ++compared;
            std::ostringstream ra, rb;
            write_metrics_csv_row(ra, a.metrics);
            write_metrics_csv_row(rb, b.metrics);
            if (a.log.records() == b.log.records() && ra.str() == rb.str() && a.debits == b.debits && a.events == b.events)
                ++identical;
        }
    }
    if (identical != compared)
        o.pass = false;
    o.details.push_back(fmt("%d of %d reruns bit-identical (log, metrics row, per-node debits)", identical, compared));

    // the file outputs of a matrix run, twice
    ExperimentMatrix m;
    m.base = cfg;
    m.base.name = "acceptance";
    m.base.duration_s = 100;
    m.base.traffic.stop_s = 100;
    m.base.seeds = {1, 2};
    m.base.protocols = {"elbrp", "load"};
    const auto root = std::filesystem::temp_directory_path() / fmt("lowpan_acceptance_%llu", static_cast<unsigned long long>(std::random_device{}()));
    MatrixOptions opt;
    opt.log_packets = true;
    opt.out_dir = root / "a";
    run_matrix(m, opt);
    opt.out_dir = root / "b";
    opt.parallel = 2;
    run_matrix(m, opt);
    const bool files_same = slurp(root / "a" / "acceptance" / "metrics.csv") == slurp(root / "b" / "acceptance" / "metrics.csv") &&
                            slurp(root / "a" / "acceptance" / "packets_load_seed2.csv") == slurp(root / "b" / "acceptance" / "packets_load_seed2.csv") &&
                            !slurp(root / "a" / "acceptance" / "metrics.csv").empty();
    std::filesystem::remove_all(root);
    if (!files_same)
        o.pass = false;
    o.details.push_back(std::string("matrix metrics.csv and packet log byte-identical across runs: ") + (files_same ? "yes" : "no"));

    const bool energy_ok = audit.worst_energy_rel <= kEnergyTolerance;
    if (!energy_ok)
        o.pass = false;
    o.details.push_back(fmt("energy debits vs energy_consumed_j over %zu runs: worst relative gap %.3g (limit %.0e)", audit.runs, audit.worst_energy_rel,
                            kEnergyTolerance));
    return o;
}

Outcome load_contract()
{
    Outcome o;
    o.pass = audit.stray_rreps == 0 && audit.load_runs > 0;
    o.details.push_back(fmt("%zu LOAD runs scanned: %zu RREPs originated by non-destinations (%zu relayed hop by hop toward the source)", audit.load_runs,
                            audit.stray_rreps, audit.relayed_rreps));
    return o;
}

void report(int id, const char* title, const Outcome& o, int& failures)
{
    std::printf("[%s] %d. %s\n", o.pass ? "PASS" : "FAIL", id, title);
    for (const auto& d : o.details)
        std::printf("       %s\n", d.c_str());
    std::fflush(stdout);
    failures += !o.pass;
}

} // namespace

int main()
{
    int failures = 0;
    const ScenarioConfig cfg = defaults();

    std::vector<RunMetrics> elbrp, load_hello, load;
    const auto t0 = std::chrono::steady_clock::now();
    for (std::uint64_t seed : cfg.seeds) {
        elbrp.push_back(run(cfg, "elbrp", seed));
        load_hello.push_back(run(cfg, "load+hello", seed));
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    report(1, "control overhead elbrp / load+hello within [0.3, 0.7], under 2 minutes", overhead_ratio(elbrp, load_hello, seconds), failures);

    for (std::uint64_t seed : cfg.seeds)
        load.push_back(run(cfg, "load", seed));
    report(2, "elbrp end-to-end delay no worse than load in >= 8 of 10 seeds", delay_ordering(elbrp, load), failures);

    ScenarioConfig noisy = cfg;
    noisy.radio.noise_amplitude = kNoiseForPdr;
    std::vector<RunMetrics> elbrp_noisy, load_noisy;
    for (std::uint64_t seed : noisy.seeds) {
        elbrp_noisy.push_back(run(noisy, "elbrp", seed));
        load_noisy.push_back(run(noisy, "load", seed));
    }
    report(3, "elbrp pdr no worse than load in >= 8 of 10 seeds at LQI noise 40", pdr_ordering(elbrp_noisy, load_noisy), failures);

    report(4, "grid of LERs: elbrp delivers everything over strictly closer hops", grid_delivery(), failures);
    report(5, "codec roundtrip, fuzz and golden frames", codec(), failures);
    report(6, "hilow inverse and bounded tree routing", hilow_tree(), failures);
    report(7, "bit-identical reruns and energy conservation", determinism(), failures);
    report(8, "load: only the destination originates RREPs", load_contract(), failures);

    std::printf("%d of 8 criteria passed\n", 8 - failures);
    return failures == 0 ? 0 : 1;
}
