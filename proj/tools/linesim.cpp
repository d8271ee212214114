#include "linesim/error.hpp"
#include "linesim/ids/evaluate.hpp"
#include "linesim/kernel/scenario.hpp"
#include "linesim/kernel/testbed.hpp"
#include "linesim/kernel/world.hpp"
#include "linesim/modbus/tcp_client.hpp"
#include "linesim/net/tcp.hpp"
#include "linesim/scada/api.hpp"
#include "linesim/trace/deviation.hpp"
#include "linesim/trace/pcap.hpp"
#include "linesim/trace/recorder.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

using namespace linesim;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

std::atomic<bool> g_stop{false};
void on_signal(int) { g_stop = true; }

int exit_code(ErrorKind k) {
    switch (k) {
        case ErrorKind::ConfigInvalid:
        case ErrorKind::SchemaUnsupported:
        case ErrorKind::SchemaMismatch:
        case ErrorKind::CorruptRecord:
        case ErrorKind::NoGroundTruth:
        case ErrorKind::InvalidParameter:
        case ErrorKind::UnknownParameter:
        case ErrorKind::EmptyTraining:
        case ErrorKind::TimelineMismatch:
            return kExitConfig;
        default:
            return kExitRuntime;
    }
}

void require_file(const std::string& path) {
    if (!fs::is_regular_file(path)) throw Error(ErrorKind::ConfigInvalid, "file not found: " + path);
}

trace::Dataset load_input(const std::string& path) {
    require_file(path);
    return trace::load_dataset(path);
}

ScenarioConfig load_named(const std::string& name) {
    const auto path = resolve_scenario_path(name);
    if (!fs::is_regular_file(path)) throw Error(ErrorKind::ConfigInvalid, "scenario file not found: " + name);
    return load_scenario(path);
}

std::optional<RunMode> parse_mode(const std::string& s) {
    if (s.empty()) return std::nullopt;
    if (s == "fast") return RunMode::Fast;
    if (s == "realtime") return RunMode::Realtime;
    throw Error(ErrorKind::ConfigInvalid, "--mode " + s);
}

void write_json(const std::string& path, const json& j) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error(ErrorKind::IoError, "cannot write " + path);
    out << j.dump(2) << '\n';
}

json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::ConfigInvalid, "cannot read " + path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw Error(ErrorKind::CorruptRecord, path + ": " + e.what());
    }
}

std::vector<ids::DetectorKind> parse_detectors(const std::string& s) {
    if (s == "all") return {std::begin(ids::kAllDetectors), std::end(ids::kAllDetectors)};
    std::vector<ids::DetectorKind> out;
    std::size_t pos = 0;
    while (pos <= s.size()) {
        const auto comma = s.find(',', pos);
        const auto name = s.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
        auto k = ids::parse_detector(name);
        if (!k) throw Error(ErrorKind::ConfigInvalid, "--detectors " + name);
        out.push_back(*k);
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return out;
}

std::string model_path(const std::string& dir, ids::DetectorKind k) {
    return (fs::path(dir) / (std::string(ids::to_string(k)) + ".model.json")).string();
}

// Loads every model present in dir; fails if none.
std::vector<std::unique_ptr<ids::Detector>> load_models(const std::string& dir, const std::string& which,
                                                        int dataset_schema) {
    std::vector<std::unique_ptr<ids::Detector>> out;
    for (auto k : parse_detectors(which)) {
        const auto p = model_path(dir, k);
        if (!fs::is_regular_file(p)) {
            if (which == "all") continue;
            throw Error(ErrorKind::ConfigInvalid, "missing model " + p);
        }
        out.push_back(ids::load_detector(read_json(p)));
    }
    if (out.empty()) throw Error(ErrorKind::ConfigInvalid, "no models in " + dir);
    if (dataset_schema != trace::kSchemaVersion) {
        throw Error(ErrorKind::SchemaUnsupported, "dataset schema_version " + std::to_string(dataset_schema));
    }
    return out;
}

void print_run(const RunResult& r, const std::string& format) {
    if (format == "json") {
        std::cout << r.to_json().dump(2) << '\n';
        return;
    }
    std::printf("ticks %lld (%.1f s simulated, %.2f s wall)\n", static_cast<long long>(r.ticks), r.sim_seconds,
                r.wall_seconds);
    std::printf("orders: %zu done, %zu failed, %zu open\n", r.orders_done, r.orders_failed, r.orders_open);
    if (r.max_drift_ms > 0) std::printf("pacing drift: max %.2f ms, mean %.3f ms\n", r.max_drift_ms, r.mean_drift_ms);
    for (const auto& a : r.attacks) {
        std::printf("attack %s (%s): %s\n", a["label"].get<std::string>().c_str(), a["kind"].get<std::string>().c_str(),
                    a["status"].get<std::string>().c_str());
    }
    if (!r.dataset.empty()) std::printf("dataset %s\n", r.dataset.c_str());
    if (!r.manifest.empty()) std::printf("manifest %s\n", r.manifest.c_str());
    if (!r.pcap.empty()) std::printf("pcap %s\n", r.pcap.c_str());
    std::printf("state hash %016llx\n", static_cast<unsigned long long>(r.final_hash));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Factory line simulator: scenarios, datasets, detectors and a live testbed."};
    app.require_subcommand(1);
    std::string format = "text";
    app.add_option("--format", format, "Summary format")->check(CLI::IsMember({"text", "json"}));

    // run
    auto* run_cmd = app.add_subcommand("run", "Run a scenario to completion");
    std::string scenario, mode, out_dir = ".";
    std::optional<std::uint64_t> seed;
    std::optional<Tick> duration;
    run_cmd->add_option("scenario", scenario, "Scenario file or name under scenarios/")->required();
    run_cmd->add_option("--mode", mode, "fast or realtime")->check(CLI::IsMember({"fast", "realtime"}));
    run_cmd->add_option("--seed", seed, "Override the scenario seed");
    run_cmd->add_option("--duration", duration, "Override the duration in ticks");
    run_cmd->add_option("--out", out_dir, "Output directory")->envname("LINESIM_OUT");

    // ids
    auto* ids_cmd = app.add_subcommand("ids", "Train, run and evaluate intrusion detectors");
    ids_cmd->require_subcommand(1);
    std::string dataset, models_dir = "models", detectors = "all", alerts_out, report_out;
    ids::DetectorOptions det_opts;
    Tick grace = 250;
    auto* train_cmd = ids_cmd->add_subcommand("train", "Learn models from a benign dataset");
    train_cmd->add_option("dataset", dataset)->required();
    train_cmd->add_option("--models", models_dir, "Model directory");
    train_cmd->add_option("--detectors", detectors, "all or a comma list of minmax,steadytime,iat,dtmc");
    train_cmd->add_option("--margin", det_opts.margin, "Relative margin on learned ranges")->check(CLI::NonNegativeNumber);
    train_cmd->add_option("--p-min", det_opts.p_min, "DTMC minimum transition probability")->check(CLI::Range(0.0, 1.0));
    train_cmd->add_option("--bucket", det_opts.address_bucket, "Address bucket width")->check(CLI::PositiveNumber);
    auto* detect_cmd = ids_cmd->add_subcommand("detect", "Run trained models over a dataset");
    detect_cmd->add_option("dataset", dataset)->required();
    detect_cmd->add_option("--models", models_dir, "Model directory");
    detect_cmd->add_option("--detectors", detectors);
    detect_cmd->add_option("--out", alerts_out, "Write alerts as JSON lines");
    auto* eval_cmd = ids_cmd->add_subcommand("eval", "Score alerts against the dataset's ground truth");
    eval_cmd->add_option("dataset", dataset)->required();
    eval_cmd->add_option("--models", models_dir, "Model directory");
    eval_cmd->add_option("--detectors", detectors);
    eval_cmd->add_option("--grace", grace, "Ticks after an interval that still count")->check(CLI::NonNegativeNumber);
    eval_cmd->add_option("--out", report_out, "Write the report as JSON");

    // deviate
    auto* dev_cmd = app.add_subcommand("deviate", "Relative deviation of one variable between two datasets");
    std::string trace_a, trace_b, variable, alignment = "by_tick";
    std::optional<Tick> anchor_a, anchor_b;
    dev_cmd->add_option("a", trace_a)->required();
    dev_cmd->add_option("b", trace_b)->required();
    dev_cmd->add_option("--variable", variable, "e.g. VC.rotation")->required();
    dev_cmd->add_option("--alignment", alignment)->check(CLI::IsMember({"by_tick", "by_event"}));
    dev_cmd->add_option("--anchor-a", anchor_a, "Event tick in a (by_event)");
    dev_cmd->add_option("--anchor-b", anchor_b, "Event tick in b (by_event)");

    // serve
    auto* serve_cmd = app.add_subcommand("serve", "Run a live testbed with the HTTP API");
    std::string http = "127.0.0.1:8080";
    std::string serve_models;
    serve_cmd->add_option("scenario", scenario)->required();
    serve_cmd->add_option("--http", http, "API listen address host:port")->envname("LINESIM_HTTP");
    serve_cmd->add_option("--mode", mode, "fast or realtime (default realtime)")->check(CLI::IsMember({"fast", "realtime"}));
    serve_cmd->add_option("--out", out_dir, "Output directory")->envname("LINESIM_OUT");
    serve_cmd->add_option("--models", serve_models, "Attach trained detectors; alerts appear on /alerts");

    // pcap
    auto* pcap_cmd = app.add_subcommand("pcap", "Export the frames of a dataset as pcap");
    std::string pcap_out;
    pcap_cmd->add_option("dataset", dataset)->required();
    pcap_cmd->add_option("out", pcap_out)->required();

    // modbus
    auto* mb_cmd = app.add_subcommand("modbus", "Talk Modbus/TCP to a PLC endpoint");
    std::string endpoint = "127.0.0.1:1502", table = "hr";
    int address = 0, count = 1;
    std::optional<int> write_value;
    int timeout_ms = 1000;
    mb_cmd->add_option("--endpoint", endpoint, "host:port");
    mb_cmd->add_option("--table", table)->check(CLI::IsMember({"hr", "ir"}));
    mb_cmd->add_option("--address", address)->check(CLI::Range(0, 65535));
    mb_cmd->add_option("--count", count)->check(CLI::Range(1, 125));
    mb_cmd->add_option("--write", write_value, "Write one holding register instead of reading")->check(CLI::Range(0, 65535));
    mb_cmd->add_option("--timeout-ms", timeout_ms)->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitConfig;
    }

    try {
        if (*run_cmd) {
            auto cfg = load_named(scenario);
            RunOptions ro;
            ro.out_dir = out_dir;
            ro.mode = parse_mode(mode);
            ro.seed = seed;
            ro.duration = duration;
            if (!cfg.duration && !duration && (ro.mode.value_or(cfg.mode) == RunMode::Fast)) {
                throw Error(ErrorKind::ConfigInvalid, "duration_ticks (required in fast mode)");
            }
            std::signal(SIGINT, on_signal);
            std::signal(SIGTERM, on_signal);
            ro.stop = &g_stop;
            fs::create_directories(out_dir);
            print_run(run(std::move(cfg), ro), format);
            return 0;
        }

        if (*ids_cmd) {
            if (*train_cmd) {
                const auto data = load_input(dataset);
                fs::create_directories(models_dir);
                for (auto k : parse_detectors(detectors)) {
                    auto d = ids::make_detector(k, det_opts);
                    d->train(data.records, {data.header.scenario, data.header.config_hash, 0});
                    write_json(model_path(models_dir, k), d->save());
                    std::printf("trained %s -> %s\n", std::string(ids::to_string(k)).c_str(),
                                model_path(models_dir, k).c_str());
                }
                return 0;
            }
            const auto data = load_input(dataset);
            auto models = load_models(models_dir, detectors, data.header.schema_version);
            std::map<ids::DetectorKind, std::vector<ids::Alert>> alerts;
            for (auto& d : models) alerts[d->kind()] = d->detect(data.records);
            if (*detect_cmd) {
                std::ofstream out;
                if (!alerts_out.empty()) {
                    out.open(alerts_out, std::ios::trunc);
                    if (!out) throw Error(ErrorKind::IoError, "cannot write " + alerts_out);
                }
                for (const auto& [k, list] : alerts) {
                    std::printf("%-11s %zu alerts\n", std::string(ids::to_string(k)).c_str(), list.size());
                    if (out.is_open()) {
                        for (const auto& a : list) out << a.to_json().dump() << '\n';
                    }
                }
                return 0;
            }
            const auto truth = data.ground_truth();
            if (truth.empty()) throw Error(ErrorKind::NoGroundTruth, dataset);
            ids::EvalOptions eo;
            eo.grace = grace;
            eo.tick_ms = data.header.tick_ms;
            auto rep = ids::evaluate(alerts, truth, data.last_tick(), eo);
            for (auto& d : models) rep.detector_options[d->kind()] = d->save()["options"];
            if (!report_out.empty()) write_json(report_out, rep.to_json());
            if (format == "json") {
                std::cout << rep.to_json().dump(2) << '\n';
            } else {
                std::cout << rep.matrix();
            }
            return 0;
        }

        if (*dev_cmd) {
            const auto a = load_input(trace_a);
            const auto b = load_input(trace_b);
            const auto align = trace::parse_alignment(alignment);
            auto rep = trace::deviation(trace::trajectory(a, variable), trace::trajectory(b, variable), *align,
                                        anchor_a, anchor_b);
            if (format == "json") {
                std::cout << rep.to_json().dump(2) << '\n';
            } else {
                std::printf("%s deviation %.4f%% over %lld ticks (%s)\n", variable.c_str(), rep.deviation * 100.0,
                            static_cast<long long>(rep.overlap_ticks), trace::kDeviationFormula);
            }
            return 0;
        }

        if (*serve_cmd) {
            auto cfg = load_named(scenario);
            TestbedOptions to;
            to.out_dir = out_dir;
            to.mode = mode.empty() ? RunMode::Realtime : *parse_mode(mode);
            if (!serve_models.empty()) to.detectors = load_models(serve_models, "all", trace::kSchemaVersion);
            fs::create_directories(out_dir);
            const auto ep = net::Endpoint::parse(http);
            // Fail on a taken port before the testbed opens its capture files.
            if (ep.port != 0) net::Socket::listen(ep).close();
            Testbed tb(std::move(cfg), std::move(to));
            scada::ApiServer api(tb, {ep.host, ep.port});
            api.start();
            std::signal(SIGINT, on_signal);
            std::signal(SIGTERM, on_signal);
            tb.start();
            std::printf("serving http://%s:%d\n", ep.host.c_str(), api.port());
            for (const auto& [s, port] : tb.plc_ports()) {
                std::printf("PLC %s modbus 127.0.0.1:%u\n", std::string(to_string(s)).c_str(), port);
            }
            std::fflush(stdout);
            while (!g_stop && tb.running()) std::this_thread::sleep_for(std::chrono::milliseconds(100));
            api.stop();
            tb.stop();
            if (tb.error()) std::rethrow_exception(tb.error());
            if (!tb.dataset_path().empty()) std::printf("dataset %s\n", tb.dataset_path().c_str());
            return 0;
        }

        if (*pcap_cmd) {
            const auto n = trace::export_pcap(load_input(dataset), pcap_out);
            std::printf("%zu frames -> %s\n", n, pcap_out.c_str());
            return 0;
        }

        if (*mb_cmd) {
            modbus::TcpClient client(net::Endpoint::parse(endpoint), std::chrono::milliseconds(timeout_ms));
            if (write_value) {
                client.write_register(static_cast<std::uint16_t>(address), static_cast<std::uint16_t>(*write_value));
                std::printf("wrote %d to hr%d\n", *write_value, address);
                return 0;
            }
            const auto regs = table == "hr" ? client.read_holding(static_cast<std::uint16_t>(address),
                                                                  static_cast<std::uint16_t>(count))
                                            : client.read_input(static_cast<std::uint16_t>(address),
                                                                static_cast<std::uint16_t>(count));
            for (std::size_t i = 0; i < regs.size(); ++i) std::printf("%s%zu = %u\n", table.c_str(), address + i, regs[i]);
            return 0;
        }
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitRuntime;
    }
    return 0;
}
