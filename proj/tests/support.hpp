#pragma once

#include "linesim/error.hpp"
#include "linesim/kernel/scenario.hpp"
#include "linesim/kernel/world.hpp"

#include <filesystem>
#include <memory>
#include <string>

#define CHECK_ERROR(expr, expected_kind)                                         \
    do {                                                                         \
        bool thrown_ = false;                                                    \
        try {                                                                    \
            (void)(expr);                                                        \
        } catch (const ::linesim::Error& e_) {                                   \
            thrown_ = true;                                                      \
            CHECK_MESSAGE(e_.kind() == (expected_kind), e_.what());              \
        }                                                                        \
        CHECK_MESSAGE(thrown_, "no linesim::Error from " #expr);                 \
    } while (0)

namespace testing {

inline std::string source_path(const std::string& rel) { return std::string(LINESIM_SOURCE_DIR) + "/" + rel; }

inline linesim::ScenarioConfig scenario(const std::string& name) {
    return linesim::load_scenario(source_path("scenarios/" + name + ".json"));
}

// Fresh scratch directory under the build tree's temp area.
inline std::string scratch(const std::string& name) {
    namespace fs = std::filesystem;
    auto p = fs::temp_directory_path() / ("linesim-test-" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p.string();
}

inline std::unique_ptr<linesim::World> run_to_end(linesim::ScenarioConfig cfg, const std::string& out_dir,
                                                  bool keep_records = false) {
    const auto end = *cfg.duration;
    linesim::WorldOptions wo;
    wo.out_dir = out_dir;
    wo.keep_records = keep_records;
    auto w = std::make_unique<linesim::World>(std::move(cfg), wo);
    while (w->now() < end) w->advance_tick();
    w->finish();
    return w;
}

}  // namespace testing
