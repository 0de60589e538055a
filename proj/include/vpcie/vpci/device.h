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

#ifndef VPCIE_VPCI_DEVICE_H
#define VPCIE_VPCI_DEVICE_H

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "vpcie/trace.h"
#include "vpcie/vpci/backend.h"

namespace vpcie {

struct DmaWindow {
    u64 guest_base = 0;
    u64 size = 0;
};

struct VpciOptions {
    /// Period of the interrupt sync event; zero disables it.
    SimTime quantum = SimTime::us(1);
};

struct VpciDiagnostics {
    u64 injected = 0;      // events turned into an observable action
    u64 dropped = 0;       // MSI(-X) with capability disabled, bad vectors
    u64 dma_errors = 0;    // doorbell writes the bus rejected
    u64 map_failures = 0;  // runtime DMA map failures (logged, not fatal)
    u64 replays = 0;       // doorbell writes issued on unmask
};

enum class ConfigRoute { Local, Forwarded, Mixed };

/// Pass-through PCI function model.
///
/// Forwards configuration and BAR accesses to a DeviceBackend while keeping
/// a guest-side shadow of the fields whose guest and host values must be
/// allowed to differ: the BARs, the decode-relevant command bits, the MSI
/// control/address/data registers and the MSI-X control word. Interrupt
/// events drained from the backend are turned into INTx backward messages
/// or MSI/MSI-X doorbell writes through the host bridge's DMA port.
///
/// Interrupts are drained at sync points: a periodic quantum event, after
/// every BAR write, and whenever the backend requests one.
class VpciDevice : public PciDevice {
public:
    VpciDevice(Kernel& kernel, std::string name, DeviceBackend& backend,
               const VpciOptions& opts = {});
    ~VpciDevice() override;

    VpciDevice(const VpciDevice&) = delete;
    VpciDevice& operator=(const VpciDevice&) = delete;

    const std::string& name() const { return m_name; }
    DeviceBackend& backend() { return m_backend; }

    PciTargetSocket& pci_socket() { return m_socket; }
    void connect_dma(DmaPort& port);
    void set_trace(TraceSink* sink) { m_trace = sink; }

    Response pci_transport(PciPayload& txn) override { return handle_pci(txn); }
    const ConfigSpace& config() const override { return m_shadow; }

    Response handle_pci(PciPayload& txn);
    ConfigRoute intercept_config(PciPayload& txn);

    void setup_dma_window(const DmaWindow& window);
    const std::optional<DmaWindow>& dma_window() const { return m_window; }

    unsigned pump_interrupts();
    void unmask_replay(u32 vector);

    bool pending(u32 vector) const;
    IrqMode irq_mode() const { return m_mode; }
    const VpciDiagnostics& diagnostics() const { return m_diag; }

    /// Reads MSI-X table entry `vector` through the backend region path.
    std::optional<MsiXTableEntry> read_msix_entry(u32 vector);

private:
    Kernel& m_kernel;
    std::string m_name;
    DeviceBackend& m_backend;
    VpciOptions m_opts;
    PciTargetSocket m_socket;
    DmaPort* m_dma = nullptr;
    TraceSink* m_trace = nullptr;

    ConfigSpace m_shadow;
    std::array<bool, ConfigSpace::SIZE> m_local{};
    std::vector<RegionInfo> m_regions;
    std::optional<MsiCapability> m_msi_layout;
    std::optional<MsiXCapability> m_msix_layout;
    std::vector<u64> m_pba;

    IrqMode m_mode = IrqMode::None;
    std::optional<DmaWindow> m_window;
    std::optional<EventHandle> m_quantum_event;
    bool m_sync_scheduled = false;
    VpciDiagnostics m_diag;

    void build_shadow();
    void update_irq_mode();
    void schedule_quantum();
    void request_sync();

    const RegionInfo* region(unsigned bar) const;
    bool in_pba(unsigned bar, u64 offset, u64 len) const;
    bool in_table(unsigned bar, u64 offset, u64 len) const;
    void read_pba(u64 offset, std::span<u8> data) const;

    void deliver(IrqEvent ev);
    void deliver_legacy(const IrqEvent& ev);
    void deliver_msi(const IrqEvent& ev);
    void deliver_msix(const IrqEvent& ev);
    void send_msix(u32 vector, const MsiXTableEntry& entry);
    void set_pending(u32 vector, bool set);
    void replay_all();

    void trace_irq(TraceSpace space, u32 index, std::span<const u8> data);
};

} // namespace vpcie

#endif
