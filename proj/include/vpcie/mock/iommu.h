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


#ifndef VPCIE_MOCK_IOMMU_H
#define VPCIE_MOCK_IOMMU_H

#include <optional>
#include <span>
#include <vector>

#include "vpcie/vpci/backend.h"

namespace vpcie {

struct IommuMapping {
    u64 iova = 0;
    std::span<u8> host;
    u8 perms = DMA_RW;

    u64 size() const { return host.size(); }
    u64 last() const { return iova + host.size() - 1; }
};

/// IOVA to host-buffer translation table of the simulated device.
class SimIommu {
public:
    /// Throws BackendError for empty or overlapping ranges.
    void map(u64 iova, std::span<u8> host, u8 perms);

    /// Removes every mapping intersecting [iova, iova + size); returns the
    /// number removed.
    std::size_t unmap(u64 iova, u64 size);

    std::optional<std::span<u8>> translate(u64 iova, u64 len, u8 perm) const;

    const std::vector<IommuMapping>& mappings() const { return m_maps; }
    void clear() { m_maps.clear(); }

private:
    std::vector<IommuMapping> m_maps; // sorted by iova
};

} // namespace vpcie

#endif
