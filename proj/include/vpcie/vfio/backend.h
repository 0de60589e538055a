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


#ifndef VPCIE_VFIO_BACKEND_H
#define VPCIE_VFIO_BACKEND_H

#include <array>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "vpcie/vfio/address.h"
#include "vpcie/vfio/irq_inbox.h"
#include "vpcie/vfio/regions.h"

namespace vpcie::vfio {

struct VfioPaths {
    std::string sysfs_devices = "/sys/bus/pci/devices";
    std::string dev_vfio = "/dev/vfio";
};

/// DeviceBackend for a physical function bound to vfio-pci.
///
/// Configuration accesses go through pread/pwrite on the config region and
/// are subject to the kernel's own virtualization. Mappable BARs are
/// accessed through mmap with width-preserving loads and stores; the others
/// fall back to positioned I/O. The MSI-X table is kept locally because
/// vector routing is done through eventfds, not through the device's table.
class VfioBackend : public DeviceBackend {
public:
    /// Opens container, group and device. Throws ConfigError for a malformed
    /// address and BackendError for every OS-level failure.
    static std::unique_ptr<VfioBackend> open(std::string_view address,
                                             const VfioPaths& paths = {});
    ~VfioBackend() override;

    VfioBackend(const VfioBackend&) = delete;
    VfioBackend& operator=(const VfioBackend&) = delete;

    std::string name() const override { return "vfio:" + m_address.str(); }

    Response config_read(u32 offset, std::span<u8> data) override;
    Response config_write(u32 offset, std::span<const u8> data) override;
    Response region_access(unsigned bar, u64 offset, std::span<u8> data,
                           Direction dir) override;
    std::vector<RegionInfo> region_info() const override { return m_bars; }

    void map_dma(u64 iova, std::span<u8> host, u8 perms) override;
    void unmap_dma(u64 iova, u64 size) override;

    std::vector<IrqEvent> poll_irqs() override;
    void reset() override;

    void configure_irqs(IrqMode mode, unsigned count) override;
    void irq_delivered(const IrqEvent& ev) override;

    /// Registers `count` eventfds for `kind` and starts the listener.
    void irq_setup(IrqKind kind, unsigned count);
    void irq_teardown();

    int group_id() const { return m_group_id; }
    const std::vector<RegionEntry>& region_table() const { return m_regions; }
    bool region_mapped(unsigned bar) const;
    bool region_fallback(unsigned bar) const;
    unsigned dma_map_calls() const { return m_dma_maps; }

    /// Config bytes whose readback differed from the value written; the
    /// kernel's config virtualization drops some guest writes.
    u64 config_mismatches() const { return m_config_mismatches; }

private:
    struct Mapping {
        u8* base = nullptr;
        u64 size = 0;
    };

    VfioBackend() = default;

    PciAddress m_address;
    int m_group_id = -1;
    int m_container = -1;
    int m_group = -1;
    int m_device = -1;
    std::vector<RegionEntry> m_regions;
    std::vector<RegionInfo> m_bars;
    std::array<Mapping, PCI_NUM_BARS> m_maps{};

    std::optional<MsiXCapability> m_msix;
    std::vector<u8> m_msix_table;

    IrqInbox m_inbox;
    std::unique_ptr<IrqListener> m_listener;
    std::vector<int> m_eventfds;
    std::optional<IrqKind> m_irq_kind;
    unsigned m_dma_maps = 0;
    u64 m_config_mismatches = 0;
    std::set<u32> m_mismatch_logged;

    void open_device(const VfioPaths& paths);
    void load_regions();
    void map_bars();
    const RegionEntry& region(u32 index) const;
    bool in_msix_table(unsigned bar, u64 offset, u64 len) const;
    u32 irq_index(IrqKind kind) const;
    u32 irq_count(u32 index) const;
    void set_irqs(u32 index, u32 flags, u32 start, u32 count,
                  const std::vector<int>& fds);
};

} // namespace vpcie::vfio

#endif
