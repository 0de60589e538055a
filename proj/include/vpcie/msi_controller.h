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

#ifndef VPCIE_MSI_CONTROLLER_H
#define VPCIE_MSI_CONTROLLER_H

#include <memory>
#include <vector>

#include "vpcie/sim/transport.h"

namespace vpcie {

struct DoorbellConfig {
    u64 base_address = 0x08000000;
    u32 base_spi = 64;
    u32 num_spis = 32;
};

/// GICv2m-style MSI frame. A 32-bit write of an interrupt number to
/// SETSPI pulses the matching output line; TYPER advertises the range.
class MsiController : public BusTarget {
public:
    static constexpr u64 REGION_SIZE = 0x1000;
    static constexpr u64 TYPER = 0x008;
    static constexpr u64 SETSPI = 0x040;

    MsiController(std::string name, const DoorbellConfig& cfg);

    const DoorbellConfig& config() const { return m_cfg; }
    u64 doorbell_address() const { return m_cfg.base_address + SETSPI; }

    /// Register-level entry points, offsets relative to base_address.
    Response doorbell_write(u64 offset, u32 value);
    u32 read_typer() const;

    SignalLine& line(u32 index) { return *m_lines.at(index); }
    u64 pulse_count(u32 index) const { return m_counts.at(index); }
    u64 warnings() const { return m_warnings; }

    static u32 encode_typer(u32 base_spi, u32 num_spis);
    static std::pair<u32, u32> decode_typer(u32 typer);

protected:
    void do_transport(GenericPayload& txn, SimTime& delay) override;

private:
    DoorbellConfig m_cfg;
    std::vector<std::unique_ptr<SignalLine>> m_lines;
    std::vector<u64> m_counts;
    u64 m_warnings = 0;
};

} // namespace vpcie

#endif
