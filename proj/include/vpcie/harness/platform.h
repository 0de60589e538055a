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


#ifndef VPCIE_HARNESS_PLATFORM_H
#define VPCIE_HARNESS_PLATFORM_H

#include <memory>

#include "vpcie/harness/config.h"
#include "vpcie/harness/trace_io.h"
#include "vpcie/host_bridge.h"
#include "vpcie/mock/copycheck.h"
#include "vpcie/msi_controller.h"
#include "vpcie/ram.h"
#include "vpcie/vpci/device.h"

namespace vpcie::harness {

/// System bus with RAM, the PCI host bridge, the MSI doorbell controller and
/// one pass-through device, plus a CPU-side initiator for the driver.
class Platform {
public:
    /// Builds the backend described by the config.
    explicit Platform(const PlatformConfig& cfg);

    /// Uses a caller-supplied backend constructed on kernel().
    using BackendFactory =
        std::function<std::unique_ptr<DeviceBackend>(Kernel&)>;
    Platform(const PlatformConfig& cfg, const BackendFactory& factory);

    ~Platform();

    /// Programs the DMA window and closes elaboration.
    void elaborate();

    const PlatformConfig& config() const { return m_cfg; }
    Kernel& kernel() { return m_kernel; }
    Bus& bus() { return *m_bus; }
    Ram& ram() { return *m_ram; }
    MsiController& msi() { return *m_msi; }
    HostBridge& host() { return *m_host; }
    DeviceBackend& backend() { return *m_backend; }
    VpciDevice& device() { return *m_device; }
    TraceRecorder& trace() { return m_trace; }

    /// The backend when it is the simulated engine.
    CopyCheck* mock() { return dynamic_cast<CopyCheck*>(m_backend.get()); }

    /// CPU accesses; the clock advances by the accumulated bus latency.
    Response cpu_read(u64 addr, unsigned len, u64& value);
    Response cpu_write(u64 addr, unsigned len, u64 value);

    /// Platform-side warning counters (host bridge, MSI controller, mock).
    u64 warnings();

private:
    PlatformConfig m_cfg;
    Kernel m_kernel;
    TraceRecorder m_trace;
    std::unique_ptr<Bus> m_bus;
    std::unique_ptr<Ram> m_ram;
    std::unique_ptr<MsiController> m_msi;
    std::unique_ptr<HostBridge> m_host;
    std::unique_ptr<DeviceBackend> m_backend;
    std::unique_ptr<VpciDevice> m_device;
    std::unique_ptr<InitiatorSocket> m_cpu;

    void build(const BackendFactory& factory);
    Response cpu_access(GenericPayload& txn);
};

} // namespace vpcie::harness

#endif
