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

#ifndef VPCIE_SIM_TIME_H
#define VPCIE_SIM_TIME_H

#include <compare>
#include <optional>
#include <string>
#include <string_view>

#include "vpcie/common.h"

namespace vpcie {

/// Virtual time in picoseconds.
class SimTime {
public:
    constexpr SimTime() = default;

    static constexpr SimTime ps(u64 v) { return SimTime(v); }
    static constexpr SimTime ns(u64 v) { return SimTime(v * 1000ull); }
    static constexpr SimTime us(u64 v) { return SimTime(v * 1000000ull); }
    static constexpr SimTime ms(u64 v) { return SimTime(v * 1000000000ull); }
    static constexpr SimTime max() { return SimTime(~0ull); }

    constexpr u64 picoseconds() const { return m_ps; }

    constexpr SimTime operator+(SimTime o) const {
        // saturate instead of wrapping; max() acts as "forever"
        return m_ps > ~0ull - o.m_ps ? max() : SimTime(m_ps + o.m_ps);
    }

    constexpr SimTime& operator+=(SimTime o) { return *this = *this + o; }

    constexpr SimTime operator-(SimTime o) const {
        return SimTime(m_ps - o.m_ps);
    }

    constexpr auto operator<=>(const SimTime&) const = default;

    std::string str() const;

    /// Parses "<n>[ps|ns|us|ms|s]"; a bare number means nanoseconds.
    static std::optional<SimTime> parse(std::string_view text);

private:
    constexpr explicit SimTime(u64 v): m_ps(v) {}

    u64 m_ps = 0;
};

} // namespace vpcie

#endif
