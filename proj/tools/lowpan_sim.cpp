// lowpan_sim: scenario runner and debugging aids.
//
//   lowpan_sim run <config.ini> [--out DIR] [--log-packets] [--parallel N] [--seed-override 1,2,3]
//   lowpan_sim inspect <hex>
//   lowpan_sim hilow <mc> <current> <dest>

#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#include "lowpan/hilow.hpp"
#include "lowpan/packet.hpp"
#include "lowpan/scenario.hpp"

namespace {

std::vector<std::uint64_t> parse_seeds(const std::string& text)
{
    std::vector<std::uint64_t> seeds;
    std::string cur;
    const auto flush = [&] {
        if (cur.empty())
            return;
        std::size_t used = 0;
        const auto v = std::stoull(cur, &used);
        if (used != cur.size())
            throw lowpan::ConfigError("--seed-override: bad seed '" + cur + "'");
        seeds.push_back(v);
        cur.clear();
    };
    for (char c : text) {
        if (c == ',' || c == ' ')
            flush();
        else
            cur.push_back(c);
    }
    flush();
    return seeds;
}

int cmd_run(const std::string& config, std::string out, bool log_packets, unsigned parallel, const std::string& seeds)
{
    using namespace lowpan;
    try {
        const ExperimentMatrix matrix = load_config(config);
        MatrixOptions opt;
        if (out.empty()) {
            const char* env = std::getenv("LOWPAN_OUT_DIR");
            out = env && *env ? env : "results";
        }
        opt.out_dir = out;
        opt.log_packets = log_packets;
        opt.parallel = parallel;
        if (!seeds.empty())
            opt.seed_override = parse_seeds(seeds);

        const auto cells = run_matrix(matrix, opt);
        int rc = 0;
        for (const auto& cell : cells) {
            std::cout << cell.name << ": " << cell.runs.size() << " runs -> " << (*opt.out_dir / cell.name).string() << '\n';
            if (cell.summary.contains("overhead_ratio"))
                std::cout << "  overhead ratio " << cell.summary["overhead_ratio"].dump() << '\n';
            for (const auto& err : cell.errors) {
                std::cerr << "error: " << cell.name << ": " << err << '\n';
                rc = 1;
            }
        }
        return rc;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}

int cmd_inspect(const std::string& hex)
{
    try {
        const auto bytes = lowpan::from_hex(hex);
        std::cout << lowpan::describe(lowpan::decode(bytes));
        return 0;
    } catch (const lowpan::CodecError& e) {
        std::cerr << "decode error " << lowpan::to_string(e.code()) << " at byte " << e.offset() << ": " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}

int cmd_hilow(std::uint32_t mc, std::uint32_t current, std::uint32_t dest)
{
    namespace hl = lowpan::hilow;
    try {
        const hl::HilowConfig cfg{mc};
        if (current > hl::kMaxAddress)
            throw hl::InvalidDestination("current address outside the 16-bit space");
        std::cout << current << '\n';
        for (auto a : hl::route(current, dest, cfg))
            std::cout << a << '\n';
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"6LoWPAN routing simulator (ELBRP, LOAD, HiLow)"};
    app.require_subcommand(1);

    std::string config, out, seeds;
    bool log_packets = false;
    unsigned parallel = 1;
    auto* run = app.add_subcommand("run", "run every protocol/seed cell of a scenario config");
    run->add_option("config", config, "INI scenario file")->required()->check(CLI::ExistingFile);
    run->add_option("--out", out, "output directory (default $LOWPAN_OUT_DIR or ./results)");
    run->add_flag("--log-packets", log_packets, "write per-run packet-log CSVs");
    run->add_option("--parallel", parallel, "worker threads")->check(CLI::Range(1u, 256u));
    run->add_option("--seed-override", seeds, "comma-separated seeds replacing the config's list");

    std::string hex;
    auto* inspect = app.add_subcommand("inspect", "decode a hex frame");
    inspect->add_option("hex", hex, "frame bytes as hex")->required();

    std::uint32_t mc = 0, current = 0, dest = 0;
    auto* hilow = app.add_subcommand("hilow", "print the HiLow tree route, one address per line");
    hilow->add_option("mc", mc)->required();
    hilow->add_option("current", current)->required();
    hilow->add_option("dest", dest)->required();

    CLI11_PARSE(app, argc, argv);

    if (run->parsed())
        return cmd_run(config, out, log_packets, parallel, seeds);
    if (inspect->parsed())
        return cmd_inspect(hex);
    return cmd_hilow(mc, current, dest);
}
