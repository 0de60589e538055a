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


#ifndef VPCIE_VFIO_REGIONS_H
#define VPCIE_VFIO_REGIONS_H

#include <optional>
#include <span>
#include <vector>

#include "vpcie/vpci/backend.h"

namespace vpcie::vfio {

// vfio-pci region indices: BARs 0..5, expansion ROM, configuration space
constexpr u32 CONFIG_REGION_INDEX = 7;

struct RegionEntry {
    u32 index = 0;
    u64 offset = 0; // file offset within the device descriptor
    u64 size = 0;
    bool readable = false;
    bool writable = false;
    bool mappable = false;
};

/// Derives the BAR list from a region table and the BAR registers of the
/// configuration header. Empty BARs and upper halves of 64-bit BARs are
/// skipped.
std::vector<RegionInfo> parse_bar_regions(std::span<const RegionEntry> table,
                                          std::span<const u8> config);

const RegionEntry* find_region(std::span<const RegionEntry> table, u32 index);

/// Validates a DMA map request; throws ConfigError.
/// Offsets of the bytes whose readback differs from what was written.
std::vector<u32> write_mismatches(u32 offset, std::span<const u8> written,
                                  std::span<const u8> readback);

void check_dma_args(u64 iova, const void* host, u64 size, u64 page_size);

} // namespace vpcie::vfio

#endif
