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


#include <cstdio>
#include <iostream>

#include <CLI11.hpp>

#include "vpcie/harness/scenario.h"

using namespace vpcie;
using namespace vpcie::harness;

namespace {

int cmd_run(const std::string& config_file, const std::string& backend,
            const std::string& device, const std::string& scenario,
            const std::string& trace, const std::string& stats,
            const std::string& quantum, bool quiet) {
    PlatformConfig cfg;
    try {
        if (!config_file.empty())
            cfg = PlatformConfig::load(config_file);
        if (!backend.empty())
            cfg.set("device.backend", backend);
        if (!device.empty())
            cfg.set("device.sysfs_address", device);
        if (!trace.empty())
            cfg.trace_path = trace;
        if (!stats.empty())
            cfg.stats_path = stats;
        if (!quantum.empty())
            cfg.set("quantum", quantum);
    } catch (const ConfigError& err) {
        std::cerr << "error: " << err.what() << "\n";
        return EXIT_CONFIG_ERROR;
    }

    const RunOutcome out = run_scenario(cfg, scenario);
    if (!quiet) {
        for (const std::string& line : out.result.log)
            std::cout << line << "\n";
    }

    if (out.exit_code == EXIT_OK) {
        if (!quiet) {
            std::cout << "\n" << stats_table(out.stats);
            if (cfg.device.backend == BackendKind::Mock)
                std::cout << "note: mock device timings are synthetic "
                             "(1 ns per byte)\n";
        }
        std::cout << scenario << ": PASS\n";
    } else if (out.exit_code == EXIT_CHECK_FAILED &&
               !out.result.failed_step.empty()) {
        std::cerr << scenario << ": FAIL at " << out.result.failed_step
                  << ": " << out.result.message << "\n";
    } else {
        std::cerr << "error: " << out.result.message << "\n";
    }
    return out.exit_code;
}

int cmd_stats(const std::string& trace, const std::string& scenario,
              u64 warnings, const std::string& out) {
    try {
        const StatsReport report =
            compute_stats(scenario, read_trace(trace), warnings);
        if (!out.empty())
            write_stats(out, report);
        else
            std::cout << stats_csv(report);
        std::cerr << stats_table(report);
        return EXIT_OK;
    } catch (const ConfigError& err) {
        std::cerr << "error: " << err.what() << "\n";
        return EXIT_CONFIG_ERROR;
    }
}

int cmd_diff(const std::string& a, const std::string& b) {
    try {
        const StatsDiff d = diff_stats(read_stats(a), read_stats(b));
        for (const std::string& line : d.differences)
            std::cout << line << "\n";
        std::cout << (d.pass ? "PASS" : "FAIL") << "\n";
        return d.pass ? EXIT_OK : EXIT_CHECK_FAILED;
    } catch (const ConfigError& err) {
        std::cerr << "error: " << err.what() << "\n";
        return EXIT_CONFIG_ERROR;
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"PCI pass-through virtual platform"};
    app.require_subcommand(1);

    std::string config_file, backend, device, trace, stats, quantum;
    std::string scenario = "enumerate-and-run";
    bool quiet = false;
    const auto names = scenario_names();
    auto* run = app.add_subcommand("run", "build the platform and run a scenario");
    run->add_option("--config", config_file, "platform config file")
        ->check(CLI::ExistingFile);
    run->add_option("--backend", backend, "device backend")
        ->check(CLI::IsMember({"mock", "vfio"}));
    run->add_option("--device", device, "PCI address of the VFIO device");
    run->add_option("--scenario", scenario, "scenario name")
        ->check(CLI::IsMember(std::vector<std::string>(names.begin(), names.end())));
    run->add_option("--trace", trace, "trace output (JSON lines)");
    run->add_option("--stats", stats, "statistics output (CSV)");
    run->add_option("--quantum", quantum, "interrupt sync period, e.g. 1us");
    run->add_flag("-q,--quiet", quiet, "print only the verdict");

    std::string stats_trace, stats_scenario = "enumerate-and-run", stats_out;
    u64 stats_warnings = 0;
    auto* st = app.add_subcommand("stats", "recompute statistics from a trace");
    st->add_option("--trace", stats_trace, "trace file")
        ->required()
        ->check(CLI::ExistingFile);
    st->add_option("--scenario", stats_scenario, "scenario name for the report");
    st->add_option("--warnings", stats_warnings,
                   "warning count (not recoverable from the trace)");
    st->add_option("--out", stats_out, "CSV output instead of stdout");

    std::string diff_a, diff_b;
    auto* diff = app.add_subcommand("diff", "compare two statistics files");
    diff->add_option("a", diff_a, "baseline stats")->required()
        ->check(CLI::ExistingFile);
    diff->add_option("b", diff_b, "candidate stats")->required()
        ->check(CLI::ExistingFile);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& err) {
        const int rc = app.exit(err);
        return rc == 0 ? EXIT_OK : EXIT_CONFIG_ERROR;
    }

    if (*run)
        return cmd_run(config_file, backend, device, scenario, trace, stats,
                       quantum, quiet);
    if (*st)
        return cmd_stats(stats_trace, stats_scenario, stats_warnings,
                         stats_out);
    return cmd_diff(diff_a, diff_b);
}
