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

#ifndef VPCIE_VPCI_BACKEND_H
#define VPCIE_VPCI_BACKEND_H

#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vpcie/pci/config_space.h"
#include "vpcie/sim/time.h"

namespace vpcie {

enum class IrqKind { Legacy, Msi, MsiX };

std::string_view to_string(IrqKind kind);

/// Interrupt mode the guest selected through the (virtualized) MSI and
/// MSI-X enable bits.
enum class IrqMode { None, Legacy, Msi, MsiX };

std::string_view to_string(IrqMode mode);

struct IrqEvent {
    IrqKind kind = IrqKind::Legacy;
    u32 index = 0;    // vector for MSI/MSI-X, unused for legacy
    SimTime time;     // assigned on injection
    bool asserted = true; // legacy only: level carried by the event

    bool operator==(const IrqEvent&) const = default;
};

struct RegionInfo {
    unsigned bar = 0;
    u64 size = 0;
    BarKind kind = BarKind::Mem32;
    bool prefetchable = false;
};

enum dma_perms : u8 {
    DMA_READ = 1u << 0,
    DMA_WRITE = 1u << 1,
    DMA_RW = DMA_READ | DMA_WRITE,
};

/// Device side of a pass-through PCI function: either real hardware behind
/// VFIO or a simulated function. All calls happen on the simulation thread.
class DeviceBackend {
public:
    virtual ~DeviceBackend() = default;

    virtual std::string name() const = 0;

    virtual Response config_read(u32 offset, std::span<u8> data) = 0;
    virtual Response config_write(u32 offset, std::span<const u8> data) = 0;

    virtual Response region_access(unsigned bar, u64 offset,
                                   std::span<u8> data, Direction dir) = 0;

    /// Stable after the backend is opened.
    virtual std::vector<RegionInfo> region_info() const = 0;

    /// Installs iova -> host translations for device DMA. Throws
    /// BackendError on failure.
    virtual void map_dma(u64 iova, std::span<u8> host, u8 perms) = 0;
    virtual void unmap_dma(u64 iova, u64 size) = 0;

    /// Drains pending interrupt events; no event is returned twice.
    virtual std::vector<IrqEvent> poll_irqs() = 0;

    virtual void reset() = 0;

    virtual void configure_irqs(IrqMode, unsigned) {}

    /// Called after an event was forwarded into the platform.
    virtual void irq_delivered(const IrqEvent&) {}

    /// Lets simulated backends request an immediate interrupt sync point.
    /// The callback must only be invoked from the simulation thread.
    virtual void set_irq_notifier(std::function<void()>) {}
};

} // namespace vpcie

#endif
