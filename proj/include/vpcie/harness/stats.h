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


#ifndef VPCIE_HARNESS_STATS_H
#define VPCIE_HARNESS_STATS_H

#include <map>
#include <span>
#include <string>
#include <vector>

#include "vpcie/trace.h"

namespace vpcie::harness {

struct RegionStats {
    u64 bytes_read = 0;
    u64 bytes_written = 0;
    u64 access_count = 0;

    bool operator==(const RegionStats&) const = default;
};

/// Aggregated run statistics. Regions are the traced address spaces (cfg,
/// mmio, io, bus); device DMA through DMI bypasses the bus and is absent.
struct StatsReport {
    std::string scenario;
    std::map<std::string, RegionStats> regions;
    std::map<u32, u64> msix_count; // per vector
    std::map<u32, u64> msi_count;  // per vector
    std::map<char, u64> legacy_count; // assertions per pin letter
    u64 warnings = 0;

    bool operator==(const StatsReport&) const = default;
};

StatsReport compute_stats(const std::string& scenario,
                          std::span<const TraceRecord> trace, u64 warnings);

/// Columns: scenario,category,name,field,value.
std::string stats_csv(const StatsReport& report);
StatsReport parse_stats_csv(std::string_view text);

std::string stats_table(const StatsReport& report);

struct StatsDiff {
    bool pass = true;
    std::vector<std::string> differences;
};

/// Throws ConfigError when the scenario names differ.
StatsDiff diff_stats(const StatsReport& a, const StatsReport& b);

void write_stats(const std::string& path, const StatsReport& report);
StatsReport read_stats(const std::string& path);

} // namespace vpcie::harness

#endif
