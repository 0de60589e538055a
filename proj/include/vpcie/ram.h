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

#ifndef VPCIE_RAM_H
#define VPCIE_RAM_H

#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "vpcie/sim/transport.h"

namespace vpcie {

/// Zero-initialized system memory at a fixed guest-physical base.
///
/// The backing store is page aligned so a DMI grant over the whole region
/// can be handed to an IOMMU as-is.
class Ram : public BusTarget {
public:
    Ram(std::string name, u64 base, u64 size, SimTime latency = {});
    ~Ram() override;

    u64 base() const { return m_base; }
    u64 size() const { return m_size; }
    u64 end() const { return m_base + m_size - 1; }
    bool contains(u64 addr, u64 len = 1) const;

    /// Guest-physical address to index into store().
    std::optional<u64> translate(u64 addr) const;

    std::span<u8> store() { return {m_store, m_size}; }
    std::span<const u8> store() const { return {m_store, m_size}; }

    std::optional<DmiDescriptor> grant_dmi(u64 addr);
    std::optional<DmiDescriptor> get_dmi(u64 addr) override;

    /// Raw image I/O, offsets relative to base.
    void load_image(const std::filesystem::path& file, u64 offset = 0);
    void dump_image(const std::filesystem::path& file, u64 offset,
                    u64 length) const;

protected:
    void do_transport(GenericPayload& txn, SimTime& delay) override;

private:
    u64 m_base;
    u64 m_size;
    u8* m_store;
};

} // namespace vpcie

#endif
