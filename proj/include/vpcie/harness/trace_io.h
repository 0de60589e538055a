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


#ifndef VPCIE_HARNESS_TRACE_IO_H
#define VPCIE_HARNESS_TRACE_IO_H

#include <filesystem>
#include <string>
#include <vector>

#include "vpcie/trace.h"

namespace vpcie::harness {

/// One JSON object, no trailing newline. Keys: time_ps, source, space,
/// address, length, direction, data_hex.
std::string format_trace_line(const TraceRecord& rec);

/// Throws ConfigError on malformed input.
TraceRecord parse_trace_line(std::string_view line);

/// Buffers records in memory until the run ends.
class TraceRecorder : public TraceSink {
public:
    void record(const TraceRecord& rec) override { m_records.push_back(rec); }
    const std::vector<TraceRecord>& records() const { return m_records; }
    void clear() { m_records.clear(); }

private:
    std::vector<TraceRecord> m_records;
};

void write_trace(const std::filesystem::path& file,
                 const std::vector<TraceRecord>& records);
std::vector<TraceRecord> read_trace(const std::filesystem::path& file);

} // namespace vpcie::harness

#endif
