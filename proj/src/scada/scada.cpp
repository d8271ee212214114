#include "linesim/scada/scada.hpp"
#include "linesim/error.hpp"
#include "linesim/physics/schema.hpp"
#include "linesim/plc/register_map.hpp"

namespace linesim::scada {

using modbus::Function;

std::string_view to_string(OrderStatus s) noexcept {
    switch (s) {
        case OrderStatus::Queued: return "queued";
        case OrderStatus::Fetching: return "fetching";
        case OrderStatus::Firing: return "firing";
        case OrderStatus::Milling: return "milling";
        case OrderStatus::Sorting: return "sorting";
        case OrderStatus::Done: return "done";
        case OrderStatus::Failed: return "failed";
    }
    return "?";
}

namespace {

net::NodeId node_of(StationId s) { return std::string(to_string(s)); }

int reg(const StationView& v, std::size_t addr) {
    return addr < v.holding_registers.size() ? v.holding_registers[addr] : 0;
}

// plc_state is the last input register.
int plc_state(const StationView& v) { return v.input_registers.empty() ? 0 : v.input_registers.back(); }

}  // namespace

Scada::Scada(ScadaSettings settings, std::uint32_t conn_base)
    : settings_(settings), client_(net::kScada, conn_base, settings.unit) {
    if (settings_.poll_period_ticks < 1 || settings_.timeout_ticks < 1 || settings_.retries < 0 ||
        settings_.backoff_ticks < 0 || settings_.order_timeout_ticks < 1) {
        throw Error(ErrorKind::ConfigInvalid, "scada");
    }
}

std::uint64_t Scada::add_job(JobKind kind, StationId plc, modbus::Request req, WriteCallback done) {
    const auto id = next_job_++;
    Job j;
    j.kind = kind;
    j.plc = plc;
    j.request = std::move(req);
    j.retry_at = now_;
    j.done = std::move(done);
    jobs_.emplace(id, std::move(j));
    return id;
}

void Scada::issue(Job& job, Tick now, net::Fabric& fabric) {
    const auto txn = client_.send(fabric, node_of(job.plc), job.request, now, settings_.timeout_ticks);
    job.txn = txn;
    job.log_index = log_.size();
    log_.push_back({txn, job.plc, static_cast<std::uint8_t>(job.request.function), job.request.address, now, job.attempt});
}

void Scada::on_packet(const net::Packet& packet, Tick now) { client_.on_packet(packet, now); }

void Scada::start_round(StationId plc, Tick now) {
    auto& r = rounds_[index_of(plc)];
    r = Round{};
    r.active = true;
    r.sent = now;
    modbus::Request ir;
    ir.function = Function::ReadInputRegisters;
    ir.quantity = static_cast<std::uint16_t>(physics::schema_for(plc).sensors.size() + 1);
    add_job(JobKind::PollInput, plc, ir);
    modbus::Request hr;
    hr.function = Function::ReadHoldingRegisters;
    hr.quantity = static_cast<std::uint16_t>(plc::holding_map(plc).size());
    add_job(JobKind::PollHolding, plc, hr);
}

void Scada::commit_round(StationId plc, Tick now) {
    auto& r = rounds_[index_of(plc)];
    auto& v = views_[index_of(plc)];
    v.stale = false;
    v.ever_polled = true;
    v.round_sent = r.sent;
    v.sampled_tick = now;
    v.input_registers = std::move(r.input);
    v.holding_registers = std::move(r.holding);
    r = Round{};
    ++version_;
}

void Scada::abort_round(StationId plc) {
    rounds_[index_of(plc)] = Round{};
    auto& v = views_[index_of(plc)];
    if (!v.stale) ++version_;
    v.stale = true;
}

void Scada::finish_job(std::uint64_t id, const modbus::Completion& c) {
    auto it = jobs_.find(id);
    Job job = std::move(it->second);
    jobs_.erase(it);
    auto& entry = log_[job.log_index];
    entry.completed = c.done;
    entry.outcome = c.outcome == modbus::Outcome::Ok ? RequestOutcome::Ok : RequestOutcome::Exception;
    auto& round = rounds_[index_of(job.plc)];
    switch (job.kind) {
        case JobKind::PollInput:
        case JobKind::PollHolding:
            if (c.outcome != modbus::Outcome::Ok) {
                abort_round(job.plc);
                return;
            }
            if (!round.active) return;
            if (job.kind == JobKind::PollInput) {
                round.input = c.response->registers;
                round.have_input = true;
            } else {
                round.holding = c.response->registers;
                round.have_holding = true;
            }
            if (round.have_input && round.have_holding) commit_round(job.plc, c.done);
            return;
        case JobKind::Write:
            if (job.done) {
                std::string detail;
                if (c.response && c.response->exception) {
                    detail = "exception " + std::to_string(static_cast<int>(*c.response->exception));
                }
                job.done({c.outcome == modbus::Outcome::Ok ? WriteOutcome::Ok : WriteOutcome::Exception, c.done, detail});
            }
            return;
    }
}

void Scada::fail_job(std::uint64_t id, Tick now) {
    auto it = jobs_.find(id);
    Job job = std::move(it->second);
    jobs_.erase(it);
    if (job.kind == JobKind::Write) {
        if (job.done) job.done({WriteOutcome::Timeout, now, "no response after " + std::to_string(job.attempt + 1) + " attempts"});
    } else {
        abort_round(job.plc);
    }
}

void Scada::tick(Tick now, net::Fabric& fabric) {
    now_ = now;
    client_.expire(now);
    for (const auto& c : client_.drain()) {
        auto bt = by_txn_.find(c.txn);
        if (bt == by_txn_.end()) continue;
        const auto job_id = bt->second;
        by_txn_.erase(bt);
        if (c.outcome != modbus::Outcome::Timeout) {
            finish_job(job_id, c);
            continue;
        }
        auto& job = jobs_.at(job_id);
        log_[job.log_index].outcome = RequestOutcome::Timeout;
        log_[job.log_index].completed = now;
        auto& v = views_[index_of(job.plc)];
        if (!v.stale) ++version_;
        v.stale = true;
        if (job.attempt < settings_.retries) {
            ++job.attempt;
            job.txn.reset();
            job.retry_at = now + settings_.backoff_ticks;
        } else {
            fail_job(job_id, now);
        }
    }

    if (now % settings_.poll_period_ticks == 0) {
        for (auto s : kAllStations) {
            if (!rounds_[index_of(s)].active) start_round(s, now);
        }
    }

    run_pipeline(now);

    for (auto& [id, job] : jobs_) {
        if (job.txn || job.retry_at > now) continue;
        issue(job, now, fabric);
        by_txn_[*job.txn] = id;
    }
}

void Scada::write_parameter(StationId plc, const std::string& name, int value, WriteCallback done) {
    const auto& map = plc::holding_map(plc);
    for (std::size_t i = 0; i < map.size(); ++i) {
        if (map[i].name != name || !map[i].writable) continue;
        if (value < map[i].lo || value > map[i].hi) {
            throw Error(ErrorKind::OutOfBounds, name + "=" + std::to_string(value) + " not in [" +
                                                    std::to_string(map[i].lo) + ", " + std::to_string(map[i].hi) + "]");
        }
        modbus::Request req;
        req.function = Function::WriteSingleRegister;
        req.address = static_cast<std::uint16_t>(i);
        req.registers = {static_cast<std::uint16_t>(value)};
        add_job(JobKind::Write, plc, req, std::move(done));
        return;
    }
    throw Error(ErrorKind::UnknownParameter, std::string(to_string(plc)) + "." + name);
}

std::vector<InventorySlot> Scada::inventory() const {
    std::vector<InventorySlot> out;
    const auto& v = view(StationId::WAREHOUSE);
    for (int y = 1; y <= 3; ++y) {
        for (int x = 1; x <= 3; ++x) {
            const auto addr = plc::hr::kInventory + static_cast<std::size_t>((y - 1) * 3 + (x - 1));
            if (auto c = color_from_code(reg(v, addr))) out.push_back({x, y, *c});
        }
    }
    return out;
}

std::optional<std::pair<int, int>> Scada::reserve_slot(Color c) const {
    for (const auto& slot : inventory()) {
        if (slot.color != c) continue;
        bool taken = false;
        for (const auto& o : orders_) {
            taken |= !o.terminal() && o.slot_x == slot.x && o.slot_y == slot.y;
        }
        if (!taken) return std::make_pair(slot.x, slot.y);
    }
    return std::nullopt;
}

int Scada::available(Color c) const {
    int n = 0;
    for (const auto& slot : inventory()) n += slot.color == c;
    return n;
}

const Order& Scada::place_order(Color color, int firing_time_ms, int milling_time_ms, Tick now) {
    const auto& fmap = plc::holding_map(StationId::FURNACE)[plc::hr::kFiringTime];
    const auto& mmap = plc::holding_map(StationId::MILL)[plc::hr::kMillingTime];
    if (firing_time_ms < fmap.lo || firing_time_ms > fmap.hi) {
        throw Error(ErrorKind::InvalidParameter, "firing_time_ms=" + std::to_string(firing_time_ms) + " not in [" +
                                                     std::to_string(fmap.lo) + ", " + std::to_string(fmap.hi) + "]");
    }
    if (milling_time_ms < mmap.lo || milling_time_ms > mmap.hi) {
        throw Error(ErrorKind::InvalidParameter, "milling_time_ms=" + std::to_string(milling_time_ms) + " not in [" +
                                                     std::to_string(mmap.lo) + ", " + std::to_string(mmap.hi) + "]");
    }
    for (auto s : {StationId::WAREHOUSE, StationId::FURNACE, StationId::MILL}) {
        if (view(s).stale) throw Error(ErrorKind::Unavailable, std::string(to_string(s)) + " is stale");
    }
    const auto slot = reserve_slot(color);
    if (!slot) throw Error(ErrorKind::OutOfStock, std::string(to_string(color)));
    Order o;
    o.id = next_order_++;
    o.color = color;
    o.firing_time_ms = firing_time_ms;
    o.milling_time_ms = milling_time_ms;
    o.slot_x = slot->first;
    o.slot_y = slot->second;
    o.history.emplace_back(OrderStatus::Queued, now);
    orders_.push_back(std::move(o));
    order_events_.emplace_back(orders_.back().id, OrderStatus::Queued);
    ++version_;
    return orders_.back();
}

const Order* Scada::order(std::uint32_t id) const {
    for (const auto& o : orders_) {
        if (o.id == id) return &o;
    }
    return nullptr;
}

void Scada::advance(Order& o, OrderStatus s, Tick now) {
    if (o.terminal() || static_cast<int>(s) <= static_cast<int>(o.status)) return;
    // Statuses skipped between two polls are recorded at the same tick.
    for (int k = static_cast<int>(o.status) + 1; k <= static_cast<int>(s); ++k) {
        o.history.emplace_back(static_cast<OrderStatus>(k), now);
        order_events_.emplace_back(o.id, static_cast<OrderStatus>(k));
    }
    o.status = s;
    ++version_;
}

void Scada::fail_order(Order& o, const std::string& why, Tick now) {
    if (o.terminal()) return;
    o.status = OrderStatus::Failed;
    o.failure = why;
    o.history.emplace_back(OrderStatus::Failed, now);
    order_events_.emplace_back(o.id, OrderStatus::Failed);
    ++version_;
}

void Scada::run_pipeline(Tick now) {
    using Stage = Dispatch::Stage;
    if (dispatch_.stage != Stage::None && orders_[dispatch_.order_index].terminal()) dispatch_ = Dispatch{};

    if (dispatch_.stage == Stage::None) {
        for (std::size_t i = 0; i < orders_.size(); ++i) {
            if (orders_[i].status != OrderStatus::Queued) continue;
            dispatch_ = Dispatch{};
            dispatch_.stage = Stage::Params;
            dispatch_.order_index = i;
            dispatch_.started = now;
            const auto idx = i;
            auto on_param = [this, idx](const WriteResult& r) {
                if (dispatch_.stage != Stage::Params || dispatch_.order_index != idx) return;
                if (r.outcome != WriteOutcome::Ok) {
                    fail_order(orders_[idx], "parameter write failed: " + r.detail, r.tick);
                    return;
                }
                ++dispatch_.params_acked;
            };
            write_parameter(StationId::FURNACE, "firing_time_ms", orders_[i].firing_time_ms, on_param);
            write_parameter(StationId::MILL, "milling_time_ms", orders_[i].milling_time_ms, on_param);
            break;
        }
    }

    if (dispatch_.stage == Stage::Params && dispatch_.params_acked == 2) {
        dispatch_.stage = Stage::Command;
        const auto idx = dispatch_.order_index;
        const auto& o = orders_[idx];
        modbus::Request req;
        req.function = Function::WriteMultipleRegisters;
        req.address = plc::hr::kTargetX;
        req.registers = {static_cast<std::uint16_t>(o.slot_x), static_cast<std::uint16_t>(o.slot_y),
                         static_cast<std::uint16_t>(color_code(o.color)), 1};
        req.quantity = 4;
        add_job(JobKind::Write, StationId::WAREHOUSE, req, [this, idx](const WriteResult& r) {
            if (dispatch_.stage != Stage::Command || dispatch_.order_index != idx) return;
            auto& order = orders_[idx];
            if (r.outcome != WriteOutcome::Ok) {
                fail_order(order, "warehouse command failed: " + r.detail, r.tick);
                return;
            }
            dispatch_.stage = Stage::Tracking;
            dispatch_.acked = r.tick;
            dispatch_.base_fired = reg(view(StationId::FURNACE), plc::hr::kFiredCount);
            dispatch_.base_milled = reg(view(StationId::MILL), plc::hr::kMilledCount);
            dispatch_.base_sorted = reg(view(StationId::SORTING), plc::hr::kSortedWhite + bay_index(order.color));
            advance(order, OrderStatus::Fetching, r.tick);
        });
    }

    if (dispatch_.stage == Stage::Tracking) {
        auto& o = orders_[dispatch_.order_index];
        const auto& wh = view(StationId::WAREHOUSE);
        const auto& fu = view(StationId::FURNACE);
        const auto& mi = view(StationId::MILL);
        const auto& so = view(StationId::SORTING);
        if (wh.round_sent > dispatch_.acked &&
            reg(wh, plc::hr::kStatus) == static_cast<int>(plc::WarehouseStatus::Rejected)) {
            fail_order(o, "warehouse rejected retrieval", now);
        } else if (reg(so, plc::hr::kSortedWhite + bay_index(o.color)) > dispatch_.base_sorted) {
            advance(o, OrderStatus::Done, now);
        } else if (reg(mi, plc::hr::kMilledCount) > dispatch_.base_milled) {
            advance(o, OrderStatus::Sorting, now);
        } else if (reg(fu, plc::hr::kFiredCount) > dispatch_.base_fired) {
            advance(o, OrderStatus::Milling, now);
        } else if (fu.round_sent > dispatch_.acked && (plc_state(fu) == 1 || plc_state(fu) == 2)) {
            advance(o, OrderStatus::Firing, now);
        }
        if (!o.terminal() && now - dispatch_.acked > settings_.order_timeout_ticks) {
            fail_order(o, "order timed out", now);
        }
        if (o.terminal()) dispatch_ = Dispatch{};
    } else if (dispatch_.stage != Stage::None) {
        auto& o = orders_[dispatch_.order_index];
        if (o.terminal()) dispatch_ = Dispatch{};
    }
}

std::vector<std::pair<std::uint32_t, OrderStatus>> Scada::drain_order_events() {
    std::vector<std::pair<std::uint32_t, OrderStatus>> out;
    out.swap(order_events_);
    return out;
}

}  // namespace linesim::scada
