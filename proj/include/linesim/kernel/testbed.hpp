#pragma once

#include "linesim/ids/detector.hpp"
#include "linesim/kernel/world.hpp"

#include "json.hpp"

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <exception>
#include <functional>
#include <future>
#include <memory>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

namespace linesim {

struct TestbedOptions {
    std::string out_dir = ".";
    std::optional<RunMode> mode;          // overrides the scenario
    bool honor_duration = false;          // stop at the scenario duration instead of running until stop()
    std::vector<std::unique_ptr<ids::Detector>> detectors;   // run live on the capture stream
};

// A World driven by its own thread. Other threads read published snapshots
// and submit work that runs on the simulation thread at a tick boundary.
class Testbed {
public:
    Testbed(ScenarioConfig config, TestbedOptions options);
    ~Testbed();
    Testbed(const Testbed&) = delete;
    Testbed& operator=(const Testbed&) = delete;

    void start();
    // Stops the loop, finishes the world (flushing capture) and joins.
    void stop();
    bool running() const noexcept { return running_.load(); }
    // Blocks until the loop ends on its own (duration reached) or stop().
    void wait();
    // Set when the simulation thread died on an exception.
    std::exception_ptr error() const;

    // Runs fn on the simulation thread; the future carries its result.
    template <typename F>
    auto call(F fn) -> std::future<decltype(fn(std::declval<World&>()))> {
        using R = decltype(fn(std::declval<World&>()));
        auto p = std::make_shared<std::promise<R>>();
        auto fut = p->get_future();
        world_->post([p, fn = std::move(fn)](World& w) mutable {
            try {
                if constexpr (std::is_void_v<R>) {
                    fn(w);
                    p->set_value();
                } else {
                    p->set_value(fn(w));
                }
            } catch (...) {
                p->set_exception(std::current_exception());
            }
        });
        return fut;
    }
    // Raw form for callbacks that complete later (e.g. Modbus writes).
    void post(std::function<void(World&)> fn) { world_->post(std::move(fn)); }

    // Latest published snapshot and its sequence number.
    std::pair<std::uint64_t, nlohmann::json> snapshot() const;
    // Waits until a snapshot newer than `seen` exists or the timeout elapses.
    std::uint64_t wait_snapshot(std::uint64_t seen, std::chrono::milliseconds timeout) const;

    std::vector<ids::Alert> alerts(std::size_t since = 0) const;
    std::size_t alert_count() const;

    const ScenarioConfig& config() const noexcept { return world_->config(); }
    std::vector<std::pair<StationId, std::uint16_t>> plc_ports() const { return world_->plc_ports(); }
    std::string dataset_path() const { return world_->dataset_path(); }

private:
    void loop();
    void publish();

    TestbedOptions options_;
    std::unique_ptr<World> world_;
    std::thread thread_;
    std::atomic<bool> running_{false};
    std::atomic<bool> stop_{false};
    std::exception_ptr error_;

    mutable std::mutex mu_;
    mutable std::condition_variable cv_;
    nlohmann::json snapshot_;
    std::uint64_t snapshot_seq_ = 0;
    std::uint64_t last_scada_version_ = 0;
    std::vector<ids::Alert> alerts_;
    std::vector<ids::Alert> pending_alerts_;   // sim-thread side, moved under mu_ on publish
};

// FactorySnapshot JSON of a world, as served by GET /state.
nlohmann::json factory_snapshot(World& world, std::size_t alert_count);
nlohmann::json order_json(const scada::Order& order);

}  // namespace linesim
