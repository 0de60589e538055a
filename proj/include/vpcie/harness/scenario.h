// Copyright 2026 The vpcie Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#ifndef VPCIE_HARNESS_SCENARIO_H
#define VPCIE_HARNESS_SCENARIO_H

#include <optional>
#include <string>
#include <vector>

#include "vpcie/harness/platform.h"
#include "vpcie/harness/stats.h"

namespace vpcie::harness {

enum class Scenario {
    Enumerate,        // discovery only; usable with any backend
    EnumerateAndRun,  // MSI-X
    Legacy,           // MSI-X left disabled, INTA
    Masked,           // completion vector masked until after the job
    Msi,              // plain MSI
};

std::optional<Scenario> parse_scenario(std::string_view name);
std::string_view to_string(Scenario s);
std::vector<std::string_view> scenario_names();

struct ScenarioResult {
    bool passed = false;
    std::string failed_step;
    std::string message;
    std::vector<std::string> log;

    unsigned slot = 0;
    u64 bar0_base = 0;
    std::optional<SimTime> job_start;
    std::optional<SimTime> job_observed; // interrupt seen by the driver
    u32 checksum = 0;
};

/// Scripted stand-in for a guest driver. It issues CPU accesses between
/// kernel runs and checks the device's behavior along the way.
class Driver {
public:
    Driver(Platform& platform, Scenario scenario);

    ScenarioResult run();

private:
    struct Bar {
        unsigned index = 0;
        u64 size = 0;
        bool io = false;
        bool is64 = false;
        u64 base = 0;
    };

    Platform& m_p;
    Scenario m_scenario;
    ScenarioResult m_result;
    std::string m_step;

    unsigned m_slot = 0;
    std::vector<Bar> m_bars;
    std::optional<u8> m_msi_cap;
    std::optional<u8> m_msix_cap;
    u32 m_base_spi = 0;
    u32 m_num_spis = 0;
    std::vector<u8> m_expected;

    u64 cfg_addr(u32 reg) const;
    u64 cfg_read(u32 reg, unsigned len);
    void cfg_write(u32 reg, unsigned len, u64 value);
    u64 mmio_read(u64 addr, unsigned len);
    void mmio_write(u64 addr, unsigned len, u64 value);

    const Bar& bar(unsigned index) const;
    void check(bool ok, const std::string& what);
    void note(const std::string& text);

    void scan();
    void size_bars();
    void program_bars();
    void walk_capabilities();
    void read_typer();
    void setup_msix(bool mask_done);
    void setup_msi();
    void fill_source();
    void start_job();
    void wait_for_completion();
    void verify_copy();
    void verify_interrupts();
};

struct RunOutcome {
    int exit_code = 0;
    ScenarioResult result;
    StatsReport stats;
};

enum exit_codes : int {
    EXIT_OK = 0,
    EXIT_CHECK_FAILED = 1,
    EXIT_CONFIG_ERROR = 2,
    EXIT_BACKEND_ERROR = 3,
};

/// Builds the platform, runs the driver, writes trace and stats files when
/// configured. Errors are mapped to exit codes; the message is in
/// result.message.
RunOutcome run_scenario(const PlatformConfig& cfg, const std::string& name);
RunOutcome run_scenario(const PlatformConfig& cfg, const std::string& name,
                        const Platform::BackendFactory& factory);

} // namespace vpcie::harness

#endif
