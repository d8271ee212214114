#include "linesim/scada/api.hpp"
#include "linesim/error.hpp"
#include "linesim/plc/register_map.hpp"

#include "httplib.h"

namespace linesim::scada {

using nlohmann::json;

namespace {

void reply(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void problem(httplib::Response& res, int status, const std::string& error, const std::string& detail) {
    reply(res, status, {{"error", error}, {"detail", detail}});
}

int status_for(ErrorKind k) {
    switch (k) {
        case ErrorKind::OutOfStock: return 409;
        case ErrorKind::InvalidParameter:
        case ErrorKind::OutOfBounds: return 422;
        case ErrorKind::UnknownParameter:
        case ErrorKind::TargetNotFound: return 404;
        case ErrorKind::Unavailable: return 503;
        case ErrorKind::Timeout: return 504;
        default: return 500;
    }
}

}  // namespace

ApiServer::ApiServer(Testbed& testbed, ApiOptions options)
    : testbed_(testbed), options_(std::move(options)), server_(std::make_unique<httplib::Server>()) {
    // No SO_REUSEPORT: a second server on a taken port must fail to bind.
    server_->set_socket_options([](socket_t sock) {
        int yes = 1;
        setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof(yes));
    });
    routes();
}

ApiServer::~ApiServer() { stop(); }

void ApiServer::start() {
    if (options_.port == 0) {
        port_ = server_->bind_to_any_port(options_.host);
        if (port_ < 0) throw Error(ErrorKind::BindFailed, options_.host);
    } else {
        if (!server_->bind_to_port(options_.host, options_.port)) {
            throw Error(ErrorKind::BindFailed, options_.host + ":" + std::to_string(options_.port));
        }
        port_ = options_.port;
    }
    thread_ = std::thread([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
}

void ApiServer::stop() {
    if (server_) server_->stop();
    if (thread_.joinable()) thread_.join();
}

void ApiServer::routes() {
    auto& srv = *server_;
    const auto timeout = options_.request_timeout;

    srv.Get("/state", [this](const httplib::Request&, httplib::Response& res) {
        reply(res, 200, testbed_.snapshot().second);
    });

    srv.Get("/orders", [this, timeout](const httplib::Request&, httplib::Response& res) {
        auto fut = testbed_.call([](World& w) {
            json list = json::array();
            for (const auto& o : w.scada().orders()) list.push_back(order_json(o));
            return list;
        });
        if (fut.wait_for(timeout) != std::future_status::ready) {
            problem(res, 504, "Timeout", "simulation did not answer");
            return;
        }
        reply(res, 200, fut.get());
    });

    srv.Post("/orders", [this, timeout](const httplib::Request& req, httplib::Response& res) {
        json body;
        try {
            body = json::parse(req.body);
        } catch (const json::exception&) {
            problem(res, 400, "BadRequest", "body is not JSON");
            return;
        }
        if (!body.is_object() || !body.contains("color") || !body["color"].is_string()) {
            problem(res, 422, "InvalidParameter", "color");
            return;
        }
        const auto color = parse_color(body["color"].get<std::string>());
        if (!color) {
            problem(res, 422, "InvalidParameter", "color");
            return;
        }
        int times[2] = {1000, 1000};
        const char* names[2] = {"firing_time_ms", "milling_time_ms"};
        for (int i = 0; i < 2; ++i) {
            if (!body.contains(names[i])) continue;
            if (!body[names[i]].is_number_integer()) {
                problem(res, 422, "InvalidParameter", names[i]);
                return;
            }
            const auto v = body[names[i]].get<std::int64_t>();
            if (v < INT32_MIN || v > INT32_MAX) {
                problem(res, 422, "InvalidParameter", names[i]);
                return;
            }
            times[i] = static_cast<int>(v);
        }
        auto fut = testbed_.call([c = *color, f = times[0], m = times[1]](World& w) {
            return order_json(w.scada().place_order(c, f, m, w.now()));
        });
        if (fut.wait_for(timeout) != std::future_status::ready) {
            problem(res, 504, "Timeout", "simulation did not answer");
            return;
        }
        try {
            auto o = fut.get();
            res.set_header("Location", "/orders/" + std::to_string(o["id"].get<std::uint32_t>()));
            reply(res, 201, o);
        } catch (const Error& e) {
            problem(res, status_for(e.kind()), std::string(to_string(e.kind())), e.detail());
        }
    });

    srv.Get(R"(/orders/(\d+))", [this, timeout](const httplib::Request& req, httplib::Response& res) {
        const auto id = static_cast<std::uint32_t>(std::stoul(req.matches[1]));
        auto fut = testbed_.call([id](World& w) -> json {
            const auto* o = w.scada().order(id);
            return o ? order_json(*o) : json(nullptr);
        });
        if (fut.wait_for(timeout) != std::future_status::ready) {
            problem(res, 504, "Timeout", "simulation did not answer");
            return;
        }
        auto o = fut.get();
        if (o.is_null()) {
            problem(res, 404, "NotFound", "order " + std::to_string(id));
            return;
        }
        reply(res, 200, o);
    });

    srv.Put("/plcs/:plc/params/:name", [this, timeout](const httplib::Request& req, httplib::Response& res) {
        const auto station = parse_station(req.path_params.at("plc"));
        const std::string name = req.path_params.at("name");
        if (!station) {
            problem(res, 404, "TargetNotFound", req.path_params.at("plc"));
            return;
        }
        const auto addr = plc::holding_address(*station, name);
        if (!addr || !plc::holding_map(*station)[*addr].writable) {
            problem(res, 404, "UnknownParameter", name);
            return;
        }
        json body;
        try {
            body = json::parse(req.body);
        } catch (const json::exception&) {
            problem(res, 400, "BadRequest", "body is not JSON");
            return;
        }
        if (!body.is_object() || !body.contains("value") || !body["value"].is_number_integer()) {
            problem(res, 422, "InvalidParameter", "value");
            return;
        }
        const auto raw = body["value"].get<std::int64_t>();
        const auto& spec = plc::holding_map(*station)[*addr];
        if (raw < spec.lo || raw > spec.hi) {
            problem(res, 422, "OutOfBounds",
                    name + " must be in [" + std::to_string(spec.lo) + ", " + std::to_string(spec.hi) + "]");
            return;
        }
        const int value = static_cast<int>(raw);
        auto done = std::make_shared<std::promise<WriteResult>>();
        auto fut = done->get_future();
        testbed_.post([s = *station, name, value, done](World& w) {
            try {
                w.scada().write_parameter(s, name, value, [done](const WriteResult& r) { done->set_value(r); });
            } catch (const Error&) {
                done->set_exception(std::current_exception());
            }
        });
        if (fut.wait_for(timeout) != std::future_status::ready) {
            problem(res, 504, "Timeout", "no acknowledgement from " + std::string(to_string(*station)));
            return;
        }
        try {
            const auto r = fut.get();
            const json out{{"plc", std::string(to_string(*station))}, {"name", name}, {"value", value}, {"tick", r.tick}};
            switch (r.outcome) {
                case WriteOutcome::Ok: reply(res, 200, out); break;
                case WriteOutcome::Timeout: problem(res, 504, "Timeout", r.detail); break;
                case WriteOutcome::Exception: problem(res, 502, "ExceptionResponse", r.detail); break;
            }
        } catch (const Error& e) {
            problem(res, status_for(e.kind()), std::string(to_string(e.kind())), e.detail());
        }
    });

    srv.Get("/alerts", [this](const httplib::Request& req, httplib::Response& res) {
        std::size_t since = 0;
        if (req.has_param("since")) since = std::stoul(req.get_param_value("since"));
        json list = json::array();
        for (const auto& a : testbed_.alerts(since)) list.push_back(a.to_json());
        reply(res, 200, {{"total", testbed_.alert_count()}, {"alerts", list}});
    });

    srv.Get("/events", [this](const httplib::Request& req, httplib::Response& res) {
        std::size_t limit = 0;   // 0: until the client goes away
        if (req.has_param("limit")) limit = std::stoul(req.get_param_value("limit"));
        struct Cursor {
            std::uint64_t seen = 0;
            std::size_t alerts = 0;
            std::size_t sent = 0;
        };
        auto cur = std::make_shared<Cursor>();
        cur->alerts = testbed_.alert_count();
        res.set_header("Cache-Control", "no-cache");
        res.set_chunked_content_provider("text/event-stream", [this, limit, cur](std::size_t, httplib::DataSink& sink) {
            const auto seq = testbed_.wait_snapshot(cur->seen, std::chrono::milliseconds(500));
            if (seq == cur->seen) {
                if (!testbed_.running()) {
                    sink.done();
                    return true;
                }
                const std::string ping = ": keepalive\n\n";
                return sink.write(ping.data(), ping.size());
            }
            cur->seen = seq;
            std::string out = "event: snapshot\nid: " + std::to_string(seq) + "\ndata: " +
                              testbed_.snapshot().second.dump() + "\n\n";
            for (const auto& a : testbed_.alerts(cur->alerts)) {
                out += "event: alert\ndata: " + a.to_json().dump() + "\n\n";
                ++cur->alerts;
            }
            if (!sink.write(out.data(), out.size())) return false;
            if (limit && ++cur->sent >= limit) sink.done();
            return true;
        });
    });
}

}  // namespace linesim::scada
