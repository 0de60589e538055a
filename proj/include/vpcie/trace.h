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

#ifndef VPCIE_TRACE_H
#define VPCIE_TRACE_H

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "vpcie/common.h"

namespace vpcie {

enum class TraceSource { Cpu, Device };

// cfg/mmio/io: CPU accesses through the host bridge windows.
// bus: device-originated writes on the system bus (MSI doorbells).
// intx/msi/msix: interrupt deliveries; address holds the pin or vector.
enum class TraceSpace { Cfg, Mmio, Io, Bus, Intx, Msi, Msix };

std::string_view to_string(TraceSource src);
std::string_view to_string(TraceSpace space);
std::optional<TraceSource> parse_trace_source(std::string_view text);
std::optional<TraceSpace> parse_trace_space(std::string_view text);

struct TraceRecord {
    static constexpr std::size_t MAX_DATA = 8;

    u64 time_ps = 0;
    TraceSource source = TraceSource::Cpu;
    TraceSpace space = TraceSpace::Cfg;
    u64 address = 0;
    u64 length = 0;
    Direction direction = Direction::Read;
    std::vector<u8> data; // at most MAX_DATA bytes, little-endian

    bool operator==(const TraceRecord&) const = default;
};

/// Receives records in emission order.
class TraceSink {
public:
    virtual ~TraceSink() = default;
    virtual void record(const TraceRecord& rec) = 0;
};

inline std::vector<u8> trace_data(std::span<const u8> bytes) {
    if (bytes.size() > TraceRecord::MAX_DATA)
        bytes = bytes.first(TraceRecord::MAX_DATA);
    return {bytes.begin(), bytes.end()};
}

} // namespace vpcie

#endif
