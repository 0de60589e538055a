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


#include "vpcie/mock/iommu.h"

#include <algorithm>

namespace vpcie {

void SimIommu::map(u64 iova, std::span<u8> host, u8 perms) {
    if (host.empty())
        throw BackendError("iommu: empty mapping at " + hex(iova));
    if (iova + (host.size() - 1) < iova)
        throw BackendError("iommu: mapping at " + hex(iova) + " wraps");

    const u64 last = iova + host.size() - 1;
    for (const IommuMapping& m : m_maps) {
        if (iova <= m.last() && m.iova <= last)
            throw BackendError("iommu: " + hex(iova) + ".." + hex(last) +
                               " overlaps " + hex(m.iova) + ".." +
                               hex(m.last()));
    }

    IommuMapping entry{iova, host, perms};
    auto pos = std::upper_bound(m_maps.begin(), m_maps.end(), entry,
                                [](const IommuMapping& a,
                                   const IommuMapping& b) -> bool {
                                    return a.iova < b.iova;
                                });
    m_maps.insert(pos, entry);
}

std::size_t SimIommu::unmap(u64 iova, u64 size) {
    if (size == 0)
        return 0;
    const u64 last = iova + size - 1;
    return std::erase_if(m_maps, [&](const IommuMapping& m) -> bool {
        return iova <= m.last() && m.iova <= last;
    });
}

std::optional<std::span<u8>> SimIommu::translate(u64 iova, u64 len,
                                                 u8 perm) const {
    if (len == 0)
        return std::nullopt;

    for (const IommuMapping& m : m_maps) {
        if (iova < m.iova || iova > m.last())
            continue;
        if (len - 1 > m.last() - iova || (m.perms & perm) != perm)
            return std::nullopt;
        return m.host.subspan(iova - m.iova, len);
    }

    return std::nullopt;
}

} // namespace vpcie
