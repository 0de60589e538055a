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


#include "vpcie/trace.h"

#include <array>

namespace vpcie {

namespace {

constexpr std::array<std::string_view, 2> SOURCE_NAMES = {"cpu", "device"};
constexpr std::array<std::string_view, 7> SPACE_NAMES = {
    "cfg", "mmio", "io", "bus", "intx", "msi", "msix"};

} // namespace

std::string_view to_string(TraceSource src) {
    return SOURCE_NAMES.at(static_cast<std::size_t>(src));
}

std::string_view to_string(TraceSpace space) {
    return SPACE_NAMES.at(static_cast<std::size_t>(space));
}

std::optional<TraceSource> parse_trace_source(std::string_view text) {
    for (std::size_t i = 0; i < SOURCE_NAMES.size(); i++) {
        if (SOURCE_NAMES[i] == text)
            return static_cast<TraceSource>(i);
    }
    return std::nullopt;
}

std::optional<TraceSpace> parse_trace_space(std::string_view text) {
    for (std::size_t i = 0; i < SPACE_NAMES.size(); i++) {
        if (SPACE_NAMES[i] == text)
            return static_cast<TraceSpace>(i);
    }
    return std::nullopt;
}

} // namespace vpcie
