// bucketnet: initialize, serve, simulate and analyze self-linking bucket networks.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 runtime failure.

#include <CLI11.hpp>

#include <csignal>
#include <fstream>
#include <iostream>
#include <optional>
#include <pthread.h>
#include <string>
#include <thread>

#include "bucketnet/bucket_store.hpp"
#include "bucketnet/centrality.hpp"
#include "bucketnet/error.hpp"
#include "bucketnet/http_server.hpp"
#include "bucketnet/network_driver.hpp"
#include "bucketnet/path_weight.hpp"
#include "bucketnet/service.hpp"
#include "bucketnet/simulator.hpp"

namespace fs = std::filesystem;
using namespace bucketnet;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitRuntime = 3;

struct CliConfig {
    std::string data_dir = "data";
    std::string portal = "b001";
    ReinforcementConfig reinforcement;
    NetworkParams network;
    AffinityParams affinity;
    std::size_t users = 15;
    std::size_t sessions = 0;
    std::size_t hops_target = 0;
    double adherence = 0.8;
    double mean_length = 8.0;
    std::uint64_t user_seed = 11;
    std::string listen = "127.0.0.1:8080";
    std::int64_t ttl = 1800;
    bool force = false;
    bool ephemeral = false;
    std::string trace;
    std::string via_http;
    std::string metric = "weighted";
    std::size_t k = 8;
    std::string root;
    HierarchyOptions hierarchy;
    std::string out_dir = "export";
};

class CliFailure : public std::runtime_error {
public:
    CliFailure(int code, const std::string& message) : std::runtime_error(message), code_(code) {}
    int code() const { return code_; }

private:
    int code_;
};

int exit_code_for(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidParameters:
        case ErrorCode::InvalidConfig:
        case ErrorCode::InvalidBucketId:
            return kExitUsage;
        case ErrorCode::IoFailure:
            return kExitRuntime;
        default:
            return kExitData;
    }
}

std::string summary_weight(double w) {
    std::string s = format_weight(w);
    if (s.find_first_of(".e") == std::string::npos) s += ".0";
    return s;
}

BucketId portal_of(const CliConfig& cfg) { return BucketId(cfg.portal); }

LinkGraph load_graph(const CliConfig& cfg) {
    if (!fs::is_directory(fs::path(cfg.data_dir) / "buckets")) {
        throw CliFailure(kExitData, "no bucket store in '" + cfg.data_dir + "' (run init first)");
    }
    BucketStore store(cfg.data_dir);
    store.open();
    return store.graph();
}

// ---------------------------------------------------------------------------

int cmd_init(const CliConfig& cfg) {
    BucketStore store(cfg.data_dir);
    if (!store.empty_on_disk()) {
        if (!cfg.force) {
            throw CliFailure(kExitData, "data directory '" + cfg.data_dir + "' is not empty (use --force)");
        }
        fs::remove_all(store.bucket_dir());
        fs::remove(store.ledger_path());
        fs::remove(store.audit_path());
        fs::remove_all(store.root() / "journal");
    }
    auto net = init_network(cfg.network);
    store.open();
    for (auto& record : net.records) store.put(std::move(record));
    WeightLedger ledger;
    ledger.initial_weight = net.graph.total_weight();
    store.commit_all(ledger_to_json(ledger).dump(2) + "\n");
    std::cout << net.graph.node_count() << " buckets, " << net.graph.link_count() << " links, total weight "
              << summary_weight(net.graph.total_weight()) << "\n";
    return 0;
}

int cmd_serve(const CliConfig& cfg) {
    if (!fs::is_directory(fs::path(cfg.data_dir) / "buckets")) {
        throw CliFailure(kExitData, "no bucket store in '" + cfg.data_dir + "' (run init first)");
    }
    const auto colon = cfg.listen.rfind(':');
    if (colon == std::string::npos) throw CliFailure(kExitUsage, "--listen must be host:port");
    const std::string host = cfg.listen.substr(0, colon);
    int port = 0;
    try {
        port = std::stoi(cfg.listen.substr(colon + 1));
    } catch (const std::exception&) {
        throw CliFailure(kExitUsage, "bad port in --listen");
    }

    // Handle SIGINT/SIGTERM on a dedicated thread so stop() is never called
    // from a signal handler.
    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);

    DriverOptions options;
    options.reinforcement = cfg.reinforcement;
    options.session_ttl = cfg.ttl;
    NetworkDriver driver(cfg.data_dir, options);
    BucketService service(driver, ServiceOptions{portal_of(cfg)});
    HttpServer server(service);
    if (!server.bind(host, port)) throw CliFailure(kExitRuntime, "cannot bind " + cfg.listen);
    std::cerr << "listening on " << host << ":" << server.port() << std::endl;

    std::thread waiter([&] {
        int sig = 0;
        sigwait(&signals, &sig);
        server.stop();
    });
    server.run();
    // run() only returns once stop() was called by the waiter.
    waiter.join();
    driver.flush();
    std::cerr << "store flushed, exiting" << std::endl;
    return 0;
}

int cmd_simulate(const CliConfig& cfg) {
    SimulationConfig sim;
    sim.network = cfg.network;
    sim.affinity = cfg.affinity;
    sim.reinforcement = cfg.reinforcement;
    sim.hierarchy = cfg.hierarchy;
    sim.users = cfg.users;
    if (cfg.sessions > 0) sim.sessions = cfg.sessions;
    if (cfg.hops_target > 0) sim.hops_target = cfg.hops_target;
    if (!sim.sessions && !sim.hops_target) sim.hops_target = 1000;
    sim.adherence = cfg.adherence;
    sim.mean_session_length = cfg.mean_length;
    sim.user_seed = cfg.user_seed;
    sim.top_k = cfg.k;
    if (sim.users == 0) throw Error(ErrorCode::InsufficientData, "no simulated users");

    std::ofstream trace_file;
    std::ostream* audit = nullptr;
    if (!cfg.trace.empty()) {
        trace_file.open(cfg.trace, std::ios::app);
        if (!trace_file) throw CliFailure(kExitRuntime, "cannot open trace file " + cfg.trace);
        audit = &trace_file;
    }

    SimulationReport report;
    if (!cfg.via_http.empty()) {
        // The live service persists after every event; its store is the graph.
        const BucketStore store(cfg.data_dir);
        auto snapshot = [&] { return sync_graph(store.bucket_dir()); };
        const LinkGraph initial = snapshot();
        AffinityModel model(initial.nodes(), portal_of(cfg), cfg.affinity);
        HttpBackend backend(cfg.via_http);
        report = run_simulation(sim, model, backend, snapshot);
    } else if (cfg.ephemeral) {
        auto net = init_network(cfg.network);
        LinkGraph graph = std::move(net.graph);
        AffinityModel model(graph.nodes(), portal_of(cfg), cfg.affinity);
        EngineBackend backend(graph, cfg.reinforcement, audit);
        report = run_simulation(sim, model, backend, [&] { return graph; });
    } else {
        if (!fs::is_directory(fs::path(cfg.data_dir) / "buckets")) {
            throw CliFailure(kExitData, "no bucket store in '" + cfg.data_dir + "' (run init or use --ephemeral)");
        }
        BucketStore store(cfg.data_dir);
        store.open();
        LinkGraph graph = store.graph();
        WeightLedger ledger;
        if (auto text = store.read_ledger()) {
            ledger = ledger_from_json(nlohmann::json::parse(*text));
        } else {
            ledger.initial_weight = graph.total_weight();
        }
        std::ofstream store_audit;
        if (!audit) {
            store_audit.open(store.audit_path(), std::ios::app);
            audit = &store_audit;
        }
        AffinityModel model(graph.nodes(), portal_of(cfg), cfg.affinity);
        EngineBackend backend(graph, cfg.reinforcement, audit);
        report = run_simulation(sim, model, backend, [&] { return graph; });

        compensated_add(ledger.learned_weight, ledger.learned_carry, report.ledger.learned_weight);
        ledger.hop_count += report.ledger.hop_count;
        ledger.transitive_hops += report.ledger.transitive_hops;
        std::set<BucketId> all;
        for (const auto& id : graph.nodes()) all.insert(id);
        store.apply_graph(graph, all);
        store.commit_all(ledger_to_json(ledger).dump(2) + "\n");
    }
    std::cout << to_json(report).dump(2) << "\n";
    return 0;
}

int cmd_analyze(const CliConfig& cfg, const std::string& kind) {
    const LinkGraph graph = load_graph(cfg);
    const BucketId root = cfg.root.empty() ? portal_of(cfg) : BucketId(cfg.root);
    if (kind == "centrality") {
        write_centrality_csv(std::cout, graph, parse_centrality_metric(cfg.metric), cfg.k);
    } else if (kind == "hierarchy") {
        std::cout << hierarchy_to_json(extract_hierarchy(graph, root, cfg.hierarchy)).dump(2) << "\n";
    } else if (kind == "relationships") {
        const auto tree = extract_hierarchy(graph, root, cfg.hierarchy);
        AffinityModel model(graph.nodes(), root, cfg.affinity);
        write_relationship_csv(std::cout, relationship_weights(normalize_weights(tree)), model.portal_affinity());
    } else {
        throw CliFailure(kExitUsage, "analyze what? centrality|hierarchy|relationships");
    }
    return 0;
}

int cmd_export(const CliConfig& cfg) {
    const LinkGraph graph = load_graph(cfg);
    const BucketId root = cfg.root.empty() ? portal_of(cfg) : BucketId(cfg.root);
    fs::create_directories(cfg.out_dir);
    const fs::path out(cfg.out_dir);
    {
        std::ofstream f(out / "centrality.csv");
        write_centrality_csv(f, graph, CentralityMetric::Degree);
    }
    {
        std::ofstream f(out / "hierarchy.json");
        f << hierarchy_to_json(extract_hierarchy(graph, root, cfg.hierarchy)).dump(2) << "\n";
    }
    {
        std::ofstream f(out / "links.csv");
        f << "source,target,weight\n";
        for (const auto& l : graph.links()) f << l.source.str() << ',' << l.target.str() << ',' << format_weight(l.weight) << '\n';
    }
    std::cout << "wrote " << (out / "centrality.csv").string() << ", " << (out / "hierarchy.json").string() << ", "
              << (out / "links.csv").string() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CliConfig cfg;
    CLI::App app{"Self-organizing bucket networks with Hebbian link reinforcement"};
    app.set_config("--config", "", "key=value configuration file (flags override it)");
    app.require_subcommand(1);

    app.add_option("--data-dir", cfg.data_dir, "Store directory")->capture_default_str();
    app.add_option("--portal", cfg.portal, "Portal (entry) bucket id")->capture_default_str();
    app.add_option("--frequency", cfg.reinforcement.frequency, "Frequency reinforcement")->capture_default_str();
    app.add_option("--symmetry", cfg.reinforcement.symmetry, "Symmetry reinforcement")->capture_default_str();
    app.add_option("--transitivity", cfg.reinforcement.transitivity, "Transitivity reinforcement")->capture_default_str();
    app.add_option("--buckets", cfg.network.buckets, "Number of buckets")->capture_default_str();
    app.add_option("--links", cfg.network.links_per_bucket, "Initial random links per bucket")->capture_default_str();
    app.add_option("--initial-weight", cfg.network.initial_weight, "Weight of initial links")->capture_default_str();
    app.add_option("--seed", cfg.network.seed, "Network seed")->capture_default_str();
    app.add_option("--users", cfg.users, "Simulated users")->capture_default_str();
    app.add_option("--sessions", cfg.sessions, "Simulated sessions (0: use --hops-target)")->capture_default_str();
    app.add_option("--hops-target", cfg.hops_target, "Stop after this many hops")->capture_default_str();
    app.add_option("--adherence", cfg.adherence, "P(choose by affinity)")->capture_default_str();
    app.add_option("--mean-length", cfg.mean_length, "Mean session length in hops")->capture_default_str();
    app.add_option("--user-seed", cfg.user_seed, "User behaviour seed")->capture_default_str();
    app.add_option("--affinity-seed", cfg.affinity.seed, "Ground-truth model seed")->capture_default_str();
    app.add_option("--genres", cfg.affinity.genres, "Planted genres")->capture_default_str();
    app.add_option("--listen", cfg.listen, "host:port to serve on")->capture_default_str();
    app.add_option("--ttl", cfg.ttl, "Session idle ttl in seconds")->capture_default_str();
    app.add_flag("--force", cfg.force, "Overwrite an existing store");
    app.add_flag("--ephemeral", cfg.ephemeral, "Simulate on a fresh in-memory network");
    app.add_option("--trace", cfg.trace, "Append the audit trace to this file");
    app.add_option("--via-http", cfg.via_http, "Drive a live service at this base URL");
    app.add_option("--metric", cfg.metric, "degree|weighted")->capture_default_str();
    app.add_option("--k", cfg.k, "Rows / top-k size")->capture_default_str();
    app.add_option("--root", cfg.root, "Hierarchy root (default: portal)");
    app.add_option("--depth", cfg.hierarchy.depth_limit, "Hierarchy depth limit")->capture_default_str();
    app.add_option("--branch", cfg.hierarchy.branch_limit, "Hierarchy branch limit")->capture_default_str();
    app.add_option("--min-weight", cfg.hierarchy.min_weight, "Minimum link weight in the hierarchy")->capture_default_str();
    app.add_option("--out", cfg.out_dir, "Export directory")->capture_default_str();

    auto* init = app.add_subcommand("init", "Create a randomly linked network")->fallthrough();
    auto* serve = app.add_subcommand("serve", "Run the bucket service")->fallthrough();
    auto* simulate = app.add_subcommand("simulate", "Run simulated users and report")->fallthrough();
    std::string analyze_kind = "centrality";
    auto* analyze = app.add_subcommand("analyze", "Print centrality CSV, hierarchy JSON or relationship CSV")->fallthrough();
    analyze->add_option("kind", analyze_kind, "centrality|hierarchy|relationships")->capture_default_str();
    auto* exporter = app.add_subcommand("export", "Write centrality, hierarchy and link tables")->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : kExitUsage;
    }

    try {
        if (*init) return cmd_init(cfg);
        if (*serve) return cmd_serve(cfg);
        if (*simulate) return cmd_simulate(cfg);
        if (*analyze) return cmd_analyze(cfg, analyze_kind);
        if (*exporter) return cmd_export(cfg);
    } catch (const CliFailure& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.code();
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitUsage;
}
