#pragma once

#include "linesim/kernel/testbed.hpp"

#include <chrono>
#include <memory>
#include <string>
#include <thread>

namespace httplib {
class Server;
}

namespace linesim::scada {

struct ApiOptions {
    std::string host = "127.0.0.1";
    int port = 8080;                                     // 0 picks a free port
    std::chrono::milliseconds request_timeout{5000};     // wall-clock wait for the simulation
};

// HTTP API over a running testbed:
//   GET  /state                      factory snapshot
//   GET  /orders                     all orders
//   POST /orders                     {color, firing_time_ms, milling_time_ms}
//   PUT  /plcs/{plc}/params/{name}   {value}; answers after the PLC acknowledged
//   GET  /alerts?since=N             live detector alerts
//   GET  /events?limit=N             server-sent snapshot and alert events
class ApiServer {
public:
    ApiServer(Testbed& testbed, ApiOptions options);
    ~ApiServer();
    ApiServer(const ApiServer&) = delete;
    ApiServer& operator=(const ApiServer&) = delete;

    // Binds and starts serving on a background thread; throws BindFailed.
    void start();
    void stop();
    int port() const noexcept { return port_; }

private:
    void routes();

    Testbed& testbed_;
    ApiOptions options_;
    std::unique_ptr<httplib::Server> server_;
    std::thread thread_;
    int port_ = 0;
};

}  // namespace linesim::scada
