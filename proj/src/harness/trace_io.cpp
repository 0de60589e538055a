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


#include "vpcie/harness/trace_io.h"

#include <fstream>

#include <json.hpp>

namespace vpcie::harness {

namespace {

std::string bytes_hex(const std::vector<u8>& data) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out;
    for (u8 b : data) {
        out += digits[b >> 4];
        out += digits[b & 0xf];
    }
    return out;
}

std::vector<u8> hex_bytes(const std::string& text) {
    if (text.size() % 2 || text.size() > 2 * TraceRecord::MAX_DATA)
        throw ConfigError("trace: bad data_hex '" + text + "'");
    std::vector<u8> out;
    for (std::size_t i = 0; i < text.size(); i += 2)
        out.push_back(static_cast<u8>(std::stoul(text.substr(i, 2), nullptr,
                                                 16)));
    return out;
}

} // namespace

std::string format_trace_line(const TraceRecord& rec) {
    nlohmann::ordered_json j;
    j["time_ps"] = rec.time_ps;
    j["source"] = to_string(rec.source);
    j["space"] = to_string(rec.space);
    j["address"] = hex(rec.address, 16);
    j["length"] = rec.length;
    j["direction"] = to_string(rec.direction);
    j["data_hex"] = bytes_hex(rec.data);
    return j.dump();
}

TraceRecord parse_trace_line(std::string_view line) {
    try {
        const auto j = nlohmann::json::parse(line);
        TraceRecord rec;
        rec.time_ps = j.at("time_ps").get<u64>();

        auto src = parse_trace_source(j.at("source").get<std::string>());
        auto space = parse_trace_space(j.at("space").get<std::string>());
        const auto dir = j.at("direction").get<std::string>();
        if (!src || !space || (dir != "read" && dir != "write"))
            throw ConfigError("trace: unknown enumerator in '" +
                              std::string(line) + "'");
        rec.source = *src;
        rec.space = *space;
        rec.direction = dir == "read" ? Direction::Read : Direction::Write;

        rec.address = std::stoull(j.at("address").get<std::string>(), nullptr,
                                  16);
        rec.length = j.at("length").get<u64>();
        rec.data = hex_bytes(j.at("data_hex").get<std::string>());
        return rec;
    } catch (const nlohmann::json::exception& err) {
        throw ConfigError(std::string("trace: ") + err.what());
    } catch (const std::logic_error& err) {
        throw ConfigError(std::string("trace: ") + err.what());
    }
}

void write_trace(const std::filesystem::path& file,
                 const std::vector<TraceRecord>& records) {
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    if (!out)
        throw ConfigError("cannot write trace file " + file.string());
    for (const TraceRecord& rec : records)
        out << format_trace_line(rec) << '\n';
    if (!out)
        throw ConfigError("error writing trace file " + file.string());
}

std::vector<TraceRecord> read_trace(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in)
        throw ConfigError("cannot read trace file " + file.string());

    std::vector<TraceRecord> records;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty())
            records.push_back(parse_trace_line(line));
    }
    return records;
}

} // namespace vpcie::harness
