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


#include "vpcie/vfio/regions.h"

#include <algorithm>

namespace vpcie::vfio {

std::vector<RegionInfo> parse_bar_regions(std::span<const RegionEntry> table,
                                          std::span<const u8> config) {
    if (config.size() < PCI_BAR_END)
        throw MalformedConfig("configuration header too short for BARs");

    std::vector<RegionInfo> bars;
    for (unsigned i = 0; i < PCI_NUM_BARS; i++) {
        const u32 reg = static_cast<u32>(
            load_le(config.subspan(PCI_BAR0 + 4 * i, 4)));

        const RegionEntry* r = find_region(table, i);
        if (r && r->size > 0) {
            RegionInfo info{i, r->size, BarKind::Mem32, false};
            if (reg & PCI_BAR_IO) {
                info.kind = BarKind::Io;
            } else {
                if ((reg & 0x6) == PCI_BAR_MEM64)
                    info.kind = BarKind::Mem64;
                info.prefetchable = (reg & PCI_BAR_PREFETCH) != 0;
            }
            bars.push_back(info);
        }

        if (!(reg & PCI_BAR_IO) && (reg & 0x6) == PCI_BAR_MEM64)
            i++;
    }
    return bars;
}

const RegionEntry* find_region(std::span<const RegionEntry> table, u32 index) {
    for (const RegionEntry& r : table) {
        if (r.index == index)
            return &r;
    }
    return nullptr;
}

std::vector<u32> write_mismatches(u32 offset, std::span<const u8> written,
                                  std::span<const u8> readback) {
    std::vector<u32> out;
    const std::size_t n = std::min(written.size(), readback.size());
    for (std::size_t i = 0; i < n; i++) {
        if (written[i] != readback[i])
            out.push_back(offset + static_cast<u32>(i));
    }
    return out;
}

void check_dma_args(u64 iova, const void* host, u64 size, u64 page_size) {
    const auto addr = reinterpret_cast<std::uintptr_t>(host);
    if (size == 0)
        throw ConfigError("dma map: size is zero");
    if (iova % page_size)
        throw ConfigError("dma map: iova " + hex(iova) +
                          " is not page aligned");
    if (addr % page_size)
        throw ConfigError("dma map: host buffer " + hex(addr) +
                          " is not page aligned");
    if (size % page_size)
        throw ConfigError("dma map: size " + hex(size) +
                          " is not a multiple of the page size " +
                          hex(page_size));
    if (iova + (size - 1) < iova)
        throw ConfigError("dma map: range at " + hex(iova) + " wraps");
}

} // namespace vpcie::vfio
