#include "lowpan/scenario.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace lowpan {

namespace {

[[noreturn]] void bad(const std::string& field, const std::string& what)
{
    throw ConfigError(field + ": " + what);
}

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

double parse_double(const std::string& field, const std::string& text)
{
    const std::string t = trim(text);
    double v = 0.0;
    const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc{} || p != t.data() + t.size() || t.empty())
        bad(field, "expected a number, got '" + text + "'");
    return v;
}

std::uint64_t parse_uint(const std::string& field, const std::string& text)
{
    const std::string t = trim(text);
    std::uint64_t v = 0;
    const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc{} || p != t.data() + t.size() || t.empty())
        bad(field, "expected a non-negative integer, got '" + text + "'");
    return v;
}

bool parse_bool(const std::string& field, const std::string& text)
{
    const std::string t = trim(text);
    if (t == "true" || t == "1" || t == "yes" || t == "on")
        return true;
    if (t == "false" || t == "0" || t == "no" || t == "off")
        return false;
    bad(field, "expected true or false, got '" + text + "'");
}

std::vector<std::string> split_list(const std::string& text)
{
    std::vector<std::string> out;
    std::string cur;
    for (char c : text) {
        if (c == ',' || c == ' ' || c == '\t') {
            if (!cur.empty())
                out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty())
        out.push_back(cur);
    return out;
}

template <typename T>
T narrow(const std::string& field, std::uint64_t v)
{
    if (v > std::numeric_limits<T>::max())
        bad(field, "value " + std::to_string(v) + " is too large");
    return static_cast<T>(v);
}

Location& er_slot(ScenarioConfig& cfg)
{
    if (!cfg.er_position)
        cfg.er_position = Location{std::nan(""), std::nan("")};
    return *cfg.er_position;
}

using Setter = std::function<void(ScenarioConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters()
{
    static const std::map<std::string, Setter> table = {
        {"scenario.name", [](auto& c, auto&, auto& v) { c.name = trim(v); }},
        {"scenario.node_count", [](auto& c, auto& f, auto& v) { c.node_count = parse_uint(f, v); }},
        {"scenario.ler_fraction", [](auto& c, auto& f, auto& v) { c.ler_fraction = parse_double(f, v); }},
        {"scenario.duration_s", [](auto& c, auto& f, auto& v) { c.duration_s = parse_double(f, v); }},
        {"scenario.seeds",
         [](auto& c, auto& f, auto& v) {
             c.seeds.clear();
             for (const auto& s : split_list(v))
                 c.seeds.push_back(parse_uint(f, s));
         }},
        {"terrain.width_m", [](auto& c, auto& f, auto& v) { c.terrain.width = parse_double(f, v); }},
        {"terrain.height_m", [](auto& c, auto& f, auto& v) { c.terrain.height = parse_double(f, v); }},
        {"terrain.er_x", [](auto& c, auto& f, auto& v) { er_slot(c).x = parse_double(f, v); }},
        {"terrain.er_y", [](auto& c, auto& f, auto& v) { er_slot(c).y = parse_double(f, v); }},
        {"radio.range_m", [](auto& c, auto& f, auto& v) { c.radio.radio_range_m = parse_double(f, v); }},
        {"radio.loss_probability", [](auto& c, auto& f, auto& v) { c.radio.loss_probability = parse_double(f, v); }},
        {"radio.noise_amplitude", [](auto& c, auto& f, auto& v) { c.radio.noise_amplitude = narrow<int>(f, parse_uint(f, v)); }},
        {"radio.bitrate_bps", [](auto& c, auto& f, auto& v) { c.radio.bitrate_bps = parse_double(f, v); }},
        {"radio.proc_delay_s", [](auto& c, auto& f, auto& v) { c.radio.proc_delay_s = parse_double(f, v); }},
        {"energy.initial_j", [](auto& c, auto& f, auto& v) { c.energy.initial_j = parse_double(f, v); }},
        {"energy.tx_power_w", [](auto& c, auto& f, auto& v) { c.energy.tx_power_w = parse_double(f, v); }},
        {"energy.rx_power_w", [](auto& c, auto& f, auto& v) { c.energy.rx_power_w = parse_double(f, v); }},
        {"traffic.sources", [](auto& c, auto& f, auto& v) { c.traffic.sources = parse_uint(f, v); }},
        {"traffic.rate_pps", [](auto& c, auto& f, auto& v) { c.traffic.rate_pps = parse_double(f, v); }},
        {"traffic.payload_bytes", [](auto& c, auto& f, auto& v) { c.traffic.payload_bytes = parse_uint(f, v); }},
        {"traffic.start_s", [](auto& c, auto& f, auto& v) { c.traffic.start_s = parse_double(f, v); }},
        {"traffic.stop_s", [](auto& c, auto& f, auto& v) { c.traffic.stop_s = parse_double(f, v); }},
        {"mac.ack_timeout_s", [](auto& c, auto& f, auto& v) { c.mac.ack_timeout_s = parse_double(f, v); }},
        {"mac.max_retries", [](auto& c, auto& f, auto& v) { c.mac.max_retries = narrow<int>(f, parse_uint(f, v)); }},
        {"mac.max_hops", [](auto& c, auto& f, auto& v) { c.mac.max_hops = narrow<std::uint8_t>(f, parse_uint(f, v)); }},
        {"elbrp.collect_window_s", [](auto& c, auto& f, auto& v) { c.elbrp.collect_window_s = parse_double(f, v); }},
        {"elbrp.sleep_window_s", [](auto& c, auto& f, auto& v) { c.elbrp.sleep_window_s = parse_double(f, v); }},
        {"elbrp.staleness_s", [](auto& c, auto& f, auto& v) { c.elbrp.staleness_s = parse_double(f, v); }},
        {"load.weak_threshold", [](auto& c, auto& f, auto& v) { c.load.weak_threshold = narrow<int>(f, parse_uint(f, v)); }},
        {"load.route_lifetime_s", [](auto& c, auto& f, auto& v) { c.load.route_lifetime_s = parse_double(f, v); }},
        {"load.discovery_lifetime_s", [](auto& c, auto& f, auto& v) { c.load.discovery_lifetime_s = parse_double(f, v); }},
        {"load.hello", [](auto& c, auto& f, auto& v) { c.load.hello = parse_bool(f, v); }},
        {"load.hello_period_s", [](auto& c, auto& f, auto& v) { c.load.hello_period_s = parse_double(f, v); }},
        {"load.allowed_hello_loss", [](auto& c, auto& f, auto& v) { c.load.allowed_hello_loss = narrow<int>(f, parse_uint(f, v)); }},
        {"overhead.count_rerr", [](auto& c, auto& f, auto& v) { c.overhead.count_rerr = parse_bool(f, v); }},
        {"overhead.count_beacon", [](auto& c, auto& f, auto& v) { c.overhead.count_beacon = parse_bool(f, v); }},
        {"overhead.count_hello", [](auto& c, auto& f, auto& v) { c.overhead.count_hello = parse_bool(f, v); }},
        {"run.protocols", [](auto& c, auto&, auto& v) { c.protocols = split_list(v); }},
    };
    return table;
}

bool known_protocol(const std::string& p) { return p == "elbrp" || p == "load" || p == "load+hello"; }

void require(bool ok, const std::string& field, const std::string& what)
{
    if (!ok)
        bad(field, what);
}

bool finite_positive(double v) { return std::isfinite(v) && v > 0.0; }
bool finite_nonneg(double v) { return std::isfinite(v) && v >= 0.0; }

} // namespace

void set_field(ScenarioConfig& cfg, const std::string& field, const std::string& value)
{
    const auto& table = setters();
    const auto it = table.find(field);
    if (it == table.end())
        bad(field, "unknown setting");
    it->second(cfg, field, value);
}

void validate(const ScenarioConfig& c)
{
    require(!c.name.empty() && c.name.find_first_of("/\\") == std::string::npos, "scenario.name", "must be a non-empty plain name");
    require(c.node_count >= 2, "scenario.node_count", "must be at least 2");
    require(c.node_count <= 0xFFFF, "scenario.node_count", "must fit 16-bit addressing");
    require(c.ler_fraction >= 0.0 && c.ler_fraction <= 1.0, "scenario.ler_fraction", "must lie in [0, 1]");
    require(finite_positive(c.duration_s), "scenario.duration_s", "must be positive");
    require(!c.seeds.empty(), "scenario.seeds", "must list at least one seed");
    require(finite_positive(c.terrain.width), "terrain.width_m", "must be positive");
    require(finite_positive(c.terrain.height), "terrain.height_m", "must be positive");
    if (c.er_position) {
        require(std::isfinite(c.er_position->x), "terrain.er_x", "must be set together with terrain.er_y");
        require(std::isfinite(c.er_position->y), "terrain.er_y", "must be set together with terrain.er_x");
        require(c.terrain.contains(*c.er_position), "terrain.er_x", "ER position lies outside the terrain");
    }
    require(finite_positive(c.radio.radio_range_m), "radio.range_m", "must be positive");
    require(c.radio.loss_probability >= 0.0 && c.radio.loss_probability < 1.0, "radio.loss_probability", "must lie in [0, 1)");
    require(c.radio.noise_amplitude >= 0 && c.radio.noise_amplitude <= 255, "radio.noise_amplitude", "must lie in [0, 255]");
    require(finite_positive(c.radio.bitrate_bps), "radio.bitrate_bps", "must be positive");
    require(finite_nonneg(c.radio.proc_delay_s), "radio.proc_delay_s", "must be non-negative");
    require(finite_positive(c.energy.initial_j), "energy.initial_j", "must be positive");
    require(finite_nonneg(c.energy.tx_power_w), "energy.tx_power_w", "must be non-negative");
    require(finite_nonneg(c.energy.rx_power_w), "energy.rx_power_w", "must be non-negative");
    require(c.traffic.sources >= 1 && c.traffic.sources < c.node_count, "traffic.sources", "must lie in [1, node_count - 1]");
    require(finite_positive(c.traffic.rate_pps), "traffic.rate_pps", "must be positive");
    require(c.traffic.payload_bytes <= kMaxPayload, "traffic.payload_bytes", "must not exceed " + std::to_string(kMaxPayload));
    require(finite_nonneg(c.traffic.start_s), "traffic.start_s", "must be non-negative");
    require(std::isfinite(c.traffic.stop_s) && c.traffic.stop_s > c.traffic.start_s, "traffic.stop_s", "must exceed traffic.start_s");
    require(finite_positive(c.mac.ack_timeout_s), "mac.ack_timeout_s", "must be positive");
    require(c.mac.max_retries >= 1, "mac.max_retries", "must be at least 1");
    require(c.mac.max_hops >= 1, "mac.max_hops", "must be at least 1");
    require(finite_positive(c.elbrp.collect_window_s), "elbrp.collect_window_s", "must be positive");
    require(finite_nonneg(c.elbrp.sleep_window_s), "elbrp.sleep_window_s", "must be non-negative");
    require(finite_positive(c.elbrp.staleness_s), "elbrp.staleness_s", "must be positive");
    require(c.load.weak_threshold >= 0 && c.load.weak_threshold <= 256, "load.weak_threshold", "must lie in [0, 256]");
    require(finite_positive(c.load.route_lifetime_s), "load.route_lifetime_s", "must be positive");
    require(finite_positive(c.load.discovery_lifetime_s), "load.discovery_lifetime_s", "must be positive");
    require(finite_positive(c.load.hello_period_s), "load.hello_period_s", "must be positive");
    require(!c.protocols.empty(), "run.protocols", "must list at least one protocol");
    for (const auto& p : c.protocols)
        require(known_protocol(p), "run.protocols", "unknown protocol '" + p + "' (expected elbrp, load or load+hello)");
}

ExperimentMatrix parse_config(std::istream& in, const std::string& source_name)
{
    namespace pt = boost::property_tree;
    pt::ptree tree;
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(source_name + ":" + std::to_string(e.line()) + ": " + e.message());
    }

    ExperimentMatrix m;
    for (const auto& [section, body] : tree) {
        if (body.empty() && !body.data().empty())
            bad(section, "setting outside a [section]");
        for (const auto& [key, value] : body) {
            const std::string field = section + "." + key;
            const std::string text = value.get_value<std::string>();
            if (section == "sweep") {
                if (!m.sweep)
                    m.sweep = Sweep{};
                if (key == "parameter")
                    m.sweep->parameter = trim(text);
                else if (key == "values")
                    m.sweep->values = split_list(text);
                else
                    bad(field, "unknown setting");
                continue;
            }
            set_field(m.base, field, text);
        }
    }
    validate(m.base);
    if (m.sweep) {
        require(!m.sweep->parameter.empty(), "sweep.parameter", "must name a section.key");
        require(!m.sweep->values.empty(), "sweep.values", "must list at least one value");
        require(m.sweep->parameter != "scenario.name", "sweep.parameter", "cannot sweep the scenario name");
        // surfaces bad sweep values before anything runs
        expand(m);
    }
    return m;
}

ExperimentMatrix load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError(path.string() + ": cannot open config");
    return parse_config(in, path.string());
}

std::vector<Cell> expand(const ExperimentMatrix& matrix)
{
    if (!matrix.sweep)
        return {Cell{matrix.base.name, matrix.base}};
    std::vector<Cell> cells;
    for (const auto& v : matrix.sweep->values) {
        Cell cell{matrix.base.name + "_" + matrix.sweep->parameter + "=" + v, matrix.base};
        set_field(cell.config, matrix.sweep->parameter, v);
        cell.config.name = cell.name;
        validate(cell.config);
        cells.push_back(std::move(cell));
    }
    return cells;
}

std::vector<bool> connected_to_er(const std::vector<NodeState>& nodes, double radio_range)
{
    std::vector<bool> seen(nodes.size(), false);
    if (nodes.empty())
        return seen;
    std::vector<NodeIndex> frontier{0};
    seen[0] = true;
    while (!frontier.empty()) {
        const NodeIndex u = frontier.back();
        frontier.pop_back();
        for (NodeIndex v = 0; v < nodes.size(); ++v) {
            if (!seen[v] && euclidean_distance(nodes[u].location, nodes[v].location) <= radio_range) {
                seen[v] = true;
                frontier.push_back(v);
            }
        }
    }
    return seen;
}

std::vector<NodeIndex> pick_sources(const std::vector<NodeState>& nodes, std::size_t count, double radio_range)
{
    if (nodes.empty())
        return {};
    const Location er = nodes[0].location;
    const std::vector<bool> reach = connected_to_er(nodes, radio_range);
    // preference tiers: connected RFDs, connected others, then the rest
    std::vector<NodeIndex> tiers[3];
    for (NodeIndex i = 1; i < nodes.size(); ++i) {
        if (!reach[i])
            tiers[2].push_back(i);
        else
            tiers[nodes[i].role == NodeRole::ReducedFunctionDevice ? 0 : 1].push_back(i);
    }
    const auto farther = [&](NodeIndex a, NodeIndex b) {
        const double da = euclidean_distance(nodes[a].location, er);
        const double db = euclidean_distance(nodes[b].location, er);
        return da != db ? da > db : a < b;
    };
    std::vector<NodeIndex> out;
    for (auto& tier : tiers) {
        std::sort(tier.begin(), tier.end(), farther);
        out.insert(out.end(), tier.begin(), tier.end());
    }
    if (out.size() > count)
        out.resize(count);
    return out;
}

Topology build_topology(const ScenarioConfig& cfg, std::uint64_t seed)
{
    Topology t;
    t.nodes = deploy_nodes(cfg.node_count, cfg.terrain, cfg.ler_fraction, derive_seed(seed, streams::kDeployment), cfg.er_position, cfg.energy.initial_j);
    t.sources = pick_sources(t.nodes, cfg.traffic.sources, cfg.radio.radio_range_m);
    return t;
}

std::unique_ptr<ForwardingProtocol> make_protocol(const std::string& name, const std::vector<NodeState>& nodes, const ScenarioConfig& cfg)
{
    if (name == "elbrp")
        return std::make_unique<ElbrpProtocol>(nodes, cfg.mac, cfg.elbrp);
    if (name == "load" || name == "load+hello") {
        LoadParams p = cfg.load;
        if (name == "load+hello")
            p.hello = true;
        return std::make_unique<LoadProtocol>(nodes, cfg.mac, p);
    }
    throw ConfigError("run.protocols: unknown protocol '" + name + "'");
}

RunResult run_on_topology(const ScenarioConfig& cfg, const std::string& protocol, const Topology& topo, std::uint64_t seed)
{
    if (topo.nodes.empty() || topo.nodes[0].role != NodeRole::EdgeRouter)
        throw ConfigError("topology: node 0 must be the edge router");
    auto proto = make_protocol(protocol, topo.nodes, cfg);
    Network net(topo.nodes, cfg.radio, cfg.energy, derive_seed(seed, streams::kChannel), std::string(proto->name()));

    TrafficPlan plan;
    plan.sources = topo.sources;
    plan.sink = topo.nodes[0].address;
    plan.rate_pps = cfg.traffic.rate_pps;
    plan.payload_bytes = cfg.traffic.payload_bytes;
    plan.start_s = cfg.traffic.start_s;
    plan.stop_s = std::min(cfg.traffic.stop_s, cfg.duration_s);
    plan.max_hops = cfg.mac.max_hops;
    TrafficGenerator traffic(plan, derive_seed(seed, streams::kTraffic));
    RunDispatcher dispatcher(*proto, traffic);

    proto->start(net);
    traffic.schedule_initial(net);
    net.run_until(from_seconds(cfg.duration_s), dispatcher);

    std::vector<double> initial;
    initial.reserve(topo.nodes.size());
    for (const auto& n : topo.nodes)
        initial.push_back(n.energy_j);

    RunResult r;
    r.final_nodes = net.nodes();
    r.debits = net.debits();
    r.events = net.events_dispatched();
    r.log = net.take_log();
    r.metrics = compute_metrics(r.log, seed, cfg.duration_s, initial, r.final_nodes, cfg.overhead);
    return r;
}

RunResult run_scenario(const ScenarioConfig& cfg, const std::string& protocol, std::uint64_t seed)
{
    validate(cfg);
    return run_on_topology(cfg, protocol, build_topology(cfg, seed), seed);
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents)
{
    std::filesystem::create_directories(path.parent_path());
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw std::runtime_error("cannot write " + tmp.string());
        out << contents;
        if (!out.flush())
            throw std::runtime_error("write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

std::vector<CellResult> run_matrix(const ExperimentMatrix& matrix, const MatrixOptions& options)
{
    std::vector<Cell> cells = expand(matrix);
    if (options.seed_override) {
        if (options.seed_override->empty())
            throw ConfigError("--seed-override: empty seed list");
        for (auto& c : cells)
            c.config.seeds = *options.seed_override;
    }

    struct Job {
        std::size_t cell;
        std::size_t slot;
        std::string protocol;
        std::uint64_t seed;
    };
    std::vector<CellResult> results(cells.size());
    std::vector<std::vector<std::optional<RunMetrics>>> slots(cells.size());
    std::vector<Job> jobs;
    for (std::size_t ci = 0; ci < cells.size(); ++ci) {
        results[ci].name = cells[ci].name;
        const auto& cfg = cells[ci].config;
        slots[ci].resize(cfg.protocols.size() * cfg.seeds.size());
        std::size_t slot = 0;
        for (const auto& p : cfg.protocols)
            for (auto s : cfg.seeds)
                jobs.push_back({ci, slot++, p, s});
    }

    std::mutex error_mutex;
    std::atomic<std::size_t> next{0};
    const auto worker = [&] {
        for (std::size_t j = next++; j < jobs.size(); j = next++) {
            const Job& job = jobs[j];
            const Cell& cell = cells[job.cell];
            try {
                RunResult r = run_scenario(cell.config, job.protocol, job.seed);
                if (options.out_dir && options.log_packets) {
                    std::ostringstream os;
                    r.log.write_csv(os);
                    write_file_atomic(*options.out_dir / cell.name / ("packets_" + job.protocol + "_seed" + std::to_string(job.seed) + ".csv"), os.str());
                }
                slots[job.cell][job.slot] = std::move(r.metrics);
            } catch (const std::exception& e) {
                std::lock_guard lock(error_mutex);
                results[job.cell].errors.push_back(job.protocol + " seed " + std::to_string(job.seed) + ": " + e.what());
            }
        }
    };
    const unsigned threads = std::max(1u, std::min<unsigned>(options.parallel, static_cast<unsigned>(jobs.size())));
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < threads; ++t)
        pool.emplace_back(worker);
    worker();
    for (auto& t : pool)
        t.join();

    for (std::size_t ci = 0; ci < cells.size(); ++ci) {
        CellResult& res = results[ci];
        std::sort(res.errors.begin(), res.errors.end());
        for (auto& m : slots[ci])
            if (m)
                res.runs.push_back(std::move(*m));
        res.summary = summarize(res.runs);
        res.summary["cell"] = res.name;
        res.summary["seeds"] = cells[ci].config.seeds;
        if (!res.errors.empty())
            res.summary["errors"] = res.errors;
        if (options.out_dir) {
            std::ostringstream csv;
            write_metrics_csv_header(csv);
            for (const auto& m : res.runs)
                write_metrics_csv_row(csv, m);
            write_file_atomic(*options.out_dir / res.name / "metrics.csv", csv.str());
            write_file_atomic(*options.out_dir / res.name / "summary.json", res.summary.dump(2) + "\n");
        }
    }
    return results;
}

} // namespace lowpan
