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


#include "vpcie/harness/stats.h"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "vpcie/harness/config.h"

namespace vpcie::harness {

namespace {

constexpr const char* CSV_HEADER = "scenario,category,name,field,value";
constexpr const char* REGION_NAMES[] = {"cfg", "mmio", "io", "bus"};

struct Row {
    std::string category;
    std::string name;
    std::string field;
    u64 value;
};

std::vector<Row> rows_of(const StatsReport& r) {
    std::vector<Row> rows;
    for (const auto& [name, s] : r.regions) {
        rows.push_back({"region", name, "access_count", s.access_count});
        rows.push_back({"region", name, "bytes_read", s.bytes_read});
        rows.push_back({"region", name, "bytes_written", s.bytes_written});
    }
    for (const auto& [v, n] : r.msix_count)
        rows.push_back({"irq", "msix." + std::to_string(v), "count", n});
    for (const auto& [v, n] : r.msi_count)
        rows.push_back({"irq", "msi." + std::to_string(v), "count", n});
    for (const auto& [pin, n] : r.legacy_count)
        rows.push_back({"irq", std::string("int") + pin, "count", n});
    rows.push_back({"global", "warnings", "count", r.warnings});
    return rows;
}

std::string key_of(const Row& row) {
    return row.category + " " + row.name + " " + row.field;
}

} // namespace

StatsReport compute_stats(const std::string& scenario,
                          std::span<const TraceRecord> trace, u64 warnings) {
    StatsReport r;
    r.scenario = scenario;
    r.warnings = warnings;
    for (const char* name : REGION_NAMES)
        r.regions[name] = {};

    for (const TraceRecord& rec : trace) {
        switch (rec.space) {
        case TraceSpace::Cfg:
        case TraceSpace::Mmio:
        case TraceSpace::Io:
        case TraceSpace::Bus: {
            RegionStats& s = r.regions[std::string(to_string(rec.space))];
            s.access_count++;
            if (rec.direction == Direction::Read)
                s.bytes_read += rec.length;
            else
                s.bytes_written += rec.length;
            break;
        }
        case TraceSpace::Msix:
            r.msix_count[static_cast<u32>(rec.address)]++;
            break;
        case TraceSpace::Msi:
            r.msi_count[static_cast<u32>(rec.address)]++;
            break;
        case TraceSpace::Intx:
            if (!rec.data.empty() && rec.data[0] && rec.address >= 1 &&
                rec.address <= 4)
                r.legacy_count[static_cast<char>('a' + rec.address - 1)]++;
            break;
        }
    }
    return r;
}

std::string stats_csv(const StatsReport& report) {
    std::string out = std::string(CSV_HEADER) + "\n";
    for (const Row& row : rows_of(report)) {
        out += report.scenario + "," + row.category + "," + row.name + "," +
               row.field + "," + std::to_string(row.value) + "\n";
    }
    return out;
}

StatsReport parse_stats_csv(std::string_view text) {
    std::istringstream in{std::string(text)};
    std::string line;
    if (!std::getline(in, line) || line != CSV_HEADER)
        throw ConfigError("stats: missing header '" + std::string(CSV_HEADER) +
                          "'");

    StatsReport r;
    bool first = true;
    unsigned lineno = 1;
    while (std::getline(in, line)) {
        lineno++;
        if (line.empty())
            continue;

        std::vector<std::string> cols;
        std::stringstream ss(line);
        std::string col;
        while (std::getline(ss, col, ','))
            cols.push_back(col);
        if (cols.size() != 5)
            throw ConfigError("stats line " + std::to_string(lineno) +
                              ": expected 5 columns");

        if (first)
            r.scenario = cols[0];
        else if (cols[0] != r.scenario)
            throw ConfigError("stats line " + std::to_string(lineno) +
                              ": mixed scenarios");
        first = false;

        const std::string& cat = cols[1];
        const std::string& name = cols[2];
        const std::string& field = cols[3];
        const u64 value = parse_number(cols[4]);

        if (cat == "region") {
            RegionStats& s = r.regions[name];
            if (field == "access_count")
                s.access_count = value;
            else if (field == "bytes_read")
                s.bytes_read = value;
            else if (field == "bytes_written")
                s.bytes_written = value;
            else
                throw ConfigError("stats line " + std::to_string(lineno) +
                                  ": unknown field " + field);
        } else if (cat == "irq" && name.starts_with("msix.")) {
            r.msix_count[static_cast<u32>(parse_number(name.substr(5)))] =
                value;
        } else if (cat == "irq" && name.starts_with("msi.")) {
            r.msi_count[static_cast<u32>(parse_number(name.substr(4)))] =
                value;
        } else if (cat == "irq" && name.size() == 4 &&
                   name.starts_with("int")) {
            r.legacy_count[name[3]] = value;
        } else if (cat == "global" && name == "warnings") {
            r.warnings = value;
        } else {
            throw ConfigError("stats line " + std::to_string(lineno) +
                              ": unknown row " + cat + "/" + name);
        }
    }
    return r;
}

std::string stats_table(const StatsReport& report) {
    std::string out;
    char buf[160];

    std::snprintf(buf, sizeof(buf), "scenario: %s\n\n",
                  report.scenario.c_str());
    out += buf;
    std::snprintf(buf, sizeof(buf), "%-8s %12s %14s %14s\n", "region",
                  "accesses", "bytes read", "bytes written");
    out += buf;
    for (const auto& [name, s] : report.regions) {
        std::snprintf(buf, sizeof(buf), "%-8s %12llu %14llu %14llu\n",
                      name.c_str(),
                      static_cast<unsigned long long>(s.access_count),
                      static_cast<unsigned long long>(s.bytes_read),
                      static_cast<unsigned long long>(s.bytes_written));
        out += buf;
    }

    out += "\ninterrupt            count\n";
    auto irq_line = [&](const std::string& name, u64 n) -> void {
        std::snprintf(buf, sizeof(buf), "%-16s %9llu\n", name.c_str(),
                      static_cast<unsigned long long>(n));
        out += buf;
    };
    for (const auto& [v, n] : report.msix_count)
        irq_line("msix vector " + std::to_string(v), n);
    for (const auto& [v, n] : report.msi_count)
        irq_line("msi vector " + std::to_string(v), n);
    for (const auto& [pin, n] : report.legacy_count)
        irq_line(std::string("INT") + char(pin - 'a' + 'A'), n);
    if (report.msix_count.empty() && report.msi_count.empty() &&
        report.legacy_count.empty())
        out += "(none)\n";

    std::snprintf(buf, sizeof(buf), "\nwarnings: %llu\n",
                  static_cast<unsigned long long>(report.warnings));
    out += buf;
    out += "note: device DMA through the DMI grant bypasses the bus and is "
           "not traced\n";
    return out;
}

StatsDiff diff_stats(const StatsReport& a, const StatsReport& b) {
    if (a.scenario != b.scenario)
        throw ConfigError("cannot compare scenario '" + a.scenario +
                          "' with '" + b.scenario + "'");

    std::map<std::string, std::pair<u64, u64>> fields;
    for (const Row& row : rows_of(a))
        fields[key_of(row)].first = row.value;
    for (const Row& row : rows_of(b))
        fields[key_of(row)].second = row.value;

    StatsDiff d;
    for (const auto& [key, v] : fields) {
        if (v.first == v.second)
            continue;
        d.pass = false;
        d.differences.push_back(key + ": " + std::to_string(v.first) +
                                " -> " + std::to_string(v.second));
    }
    return d;
}

void write_stats(const std::string& path, const StatsReport& report) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw ConfigError("cannot write stats file " + path);
    out << stats_csv(report);
}

StatsReport read_stats(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot read stats file " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_stats_csv(buf.str());
}

} // namespace vpcie::harness
