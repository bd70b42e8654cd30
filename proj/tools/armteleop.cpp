// armteleop command line: serve, replay, bench-ik, task.

#include <csignal>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "armteleop/bench.hpp"
#include "armteleop/codec.hpp"
#include "armteleop/config.hpp"
#include "armteleop/gateway.hpp"
#include "armteleop/protocol.hpp"
#include "armteleop/task.hpp"

using namespace armteleop;

namespace {

Gateway* g_running = nullptr;

void on_signal(int)
{
    if (g_running) g_running->stop();
}

AppConfig config_from(const std::string& path)
{
    if (path.empty()) {
        AppConfig cfg;
        cfg.markers = default_markers();
        return cfg;
    }
    return load_config(path);
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Hand-to-arm teleoperation engine"};
    app.require_subcommand(1);

    std::string config_path;
    std::uint16_t port = 8765;
    std::string address = "127.0.0.1";
    bool lockstep = false;
    std::string log_path;
    auto* serve = app.add_subcommand("serve", "run the WebSocket gateway");
    serve->add_option("--config", config_path, "config JSON");
    serve->add_option("--port", port, "listen port (0 = any free port)");
    serve->add_option("--address", address, "listen address");
    serve->add_flag("--lockstep", lockstep, "tick once per hand message instead of on the clock");
    serve->add_option("--log", log_path, "write the session log here");

    std::string trace_path, out_path;
    std::optional<std::uint64_t> seed;
    auto* replay_cmd = app.add_subcommand("replay", "replay a hand trace into a session log");
    replay_cmd->add_option("--trace", trace_path, "trace NDJSON")->required();
    replay_cmd->add_option("--out", out_path, "session log NDJSON")->required();
    replay_cmd->add_option("--seed", seed, "IK random seed");
    replay_cmd->add_option("--config", config_path, "config JSON");

    BenchOptions bench_opt;
    std::optional<std::size_t> population, generations;
    auto* bench = app.add_subcommand("bench-ik", "IK round-trip and timing benchmark");
    bench->add_option("--n", bench_opt.n_targets, "number of targets")->check(CLI::PositiveNumber);
    bench->add_option("--seed", bench_opt.seed, "random seed");
    bench->add_option("--frames", bench_opt.max_frames, "solve calls allowed per target");
    bench->add_option("--population", population, "population size");
    bench->add_option("--generations", generations, "generations per call");
    bench->add_option("--config", config_path, "config JSON");

    std::string task_kind = "translate", from = "B", to = "C";
    auto* task = app.add_subcommand("task", "run a cube task over a trace");
    task->add_option("--name", task_kind, "translate | rotate");
    task->add_option("--from", from, "start marker");
    task->add_option("--to", to, "end marker");
    task->add_option("--trace", trace_path, "trace NDJSON")->required();
    task->add_option("--seed", seed, "IK random seed");
    task->add_option("--config", config_path, "config JSON");
    task->add_option("--log", log_path, "also write the session log here");

    CLI11_PARSE(app, argc, argv);

    try {
        AppConfig cfg = config_from(config_path);
        if (seed) cfg.session.ik.rng_seed = *seed;

        if (*serve) {
            GatewayOptions opt;
            opt.address = address;
            opt.port = port;
            opt.lockstep = lockstep;
            opt.log_path = log_path;
            Gateway gw(cfg, opt);
            const auto bound = gw.listen();
            std::cout << "listening on ws://" << address << ":" << bound << (lockstep ? " (lockstep)" : "")
                      << std::endl;
            g_running = &gw;
            std::signal(SIGINT, on_signal);
            std::signal(SIGTERM, on_signal);
            gw.run();
            g_running = nullptr;
            return 0;
        }

        if (*replay_cmd) {
            const Trace trace = load_trace(trace_path);
            const SessionLog log = replay(cfg.session, trace);
            std::ofstream out(out_path, std::ios::trunc);
            if (!out) throw std::runtime_error("cannot write " + out_path);
            write_log(out, log);
            std::size_t anomalies = 0;
            for (const auto& r : log) anomalies += r.out.anomaly ? 1 : 0;
            std::cout << log.size() << " frames, " << anomalies << " with anomaly, written to " << out_path << "\n";
            return 0;
        }

        if (*bench) {
            IkConfig ik = cfg.session.ik;
            if (population) ik.population_size = *population;
            if (generations) ik.generations_per_frame = *generations;
            bench_opt.frame_budget_ms = 1000.0 / cfg.session.frame_rate;
            const BenchReport r = bench_ik(cfg.session.chain, ik, bench_opt);
            const Json j{{"n_targets", r.n_targets},
                         {"population", ik.population_size},
                         {"generations", ik.generations_per_frame},
                         {"converged", r.converged},
                         {"pass_rate", r.pass_rate},
                         {"median_frames", r.median_frames},
                         {"solve_calls", r.solve_calls},
                         {"median_ms", r.median_ms},
                         {"p99_ms", r.p99_ms},
                         {"max_ms", r.max_ms},
                         {"frame_budget_ms", bench_opt.frame_budget_ms},
                         {"p99_within_budget", r.within_budget},
                         {"unreachable_targets", r.unreachable_targets},
                         {"unreachable_flagged", r.unreachable_flagged}};
            std::cout << j.dump(2) << "\n";
            return r.within_budget ? 0 : 1;
        }

        if (*task) {
            if (from.size() != 1 || to.size() != 1) throw TaskError("markers are single letters");
            TaskSpec spec;
            spec.kind = parse_task_kind(task_kind);
            spec.start_marker = from[0];
            spec.end_marker = to[0];
            spec.markers = cfg.markers;
            spec.validate(cfg.session.chain);
            const Trace trace = load_trace(trace_path);
            const SessionLog log = replay(cfg.session, trace);
            if (!log_path.empty()) {
                std::ofstream out(log_path, std::ios::trunc);
                write_log(out, log);
            }
            const TaskReport rep = evaluate_task(spec, log);
            std::cout << protocol::encode(protocol::TaskResult{rep}) << "\n";
            return rep.success ? 0 : 2;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
