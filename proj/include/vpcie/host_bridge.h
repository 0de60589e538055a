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

#ifndef VPCIE_HOST_BRIDGE_H
#define VPCIE_HOST_BRIDGE_H

#include <array>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "vpcie/pci/config_space.h"
#include "vpcie/trace.h"

namespace vpcie {

enum class HostSpace { Cfg, Mmio, Io };

struct HostBridgeConfig {
    u64 cfg_base = 0x20000000;
    u64 cfg_size = 0x00100000; // 32 slots x 8 functions x 4 KiB
    u64 mmio_base = 0x10000000;
    u64 mmio_size = 0x01000000;
    u64 io_base = 0x0f000000;
    u64 io_size = 0x00010000;
};

struct DecodeEntry {
    unsigned device_slot = 0;
    unsigned bar_index = 0;
    u64 bus_base = 0;
    u64 size = 0;
    PciSpace space = PciSpace::Mem;

    bool contains(u64 addr, u64 len) const {
        return addr >= bus_base && addr - bus_base < size &&
               len <= size - (addr - bus_base);
    }

    bool operator==(const DecodeEntry&) const = default;
};

/// ECAM-style split of a CFG window offset.
struct CfgAddress {
    unsigned device_slot = 0;  // [19:15]
    unsigned function = 0;     // [14:12]
    unsigned register_offset = 0; // [11:0]

    static CfgAddress decode(u64 offset);
    u64 encode() const;
};

/// PCI host bridge with three bus-facing windows (configuration, memory and
/// I/O), a DMA initiator toward the system bus and four wired-OR INTx lines.
///
/// Memory and I/O accesses are decoded against the BARs of enabled devices;
/// the decode table is rebuilt after every configuration write that touches
/// the command register or a BAR. On overlap the lowest slot wins.
class HostBridge : public DmaPort {
public:
    static constexpr unsigned NUM_SLOTS = 32;

    HostBridge(Kernel& kernel, std::string name,
               const HostBridgeConfig& cfg = {});
    ~HostBridge() override;

    const std::string& name() const { return m_name; }
    const HostBridgeConfig& config() const { return m_cfg; }

    BusTarget& cfg_window();
    BusTarget& mmio_window();
    BusTarget& io_window();
    InitiatorSocket& dma_socket() { return m_dma; }

    void attach(unsigned slot, PciTargetSocket& device);
    PciDevice* device(unsigned slot) const;

    SignalLine& intx(PciPin pin);

    void set_trace(TraceSink* sink) { m_trace = sink; }

    void route_bus_access(HostSpace space, GenericPayload& txn);
    void update_decode(unsigned slot, const ConfigSpace& cfg);
    void raise_legacy(unsigned slot, PciPin pin, bool level);

    Response forward_dma_write(u64 addr, std::span<const u8> data);

    Response dma_write(u64 addr, std::span<const u8> data) override {
        return forward_dma_write(addr, data);
    }

    std::optional<DmiDescriptor> dmi_request(u64 addr) override;

    void on_dmi_invalidate(std::function<void(u64, u64)> fn) override {
        m_dma.on_dmi_invalidate(std::move(fn));
    }

    const std::vector<DecodeEntry>& decode_table() const { return m_decode; }
    const DecodeEntry* lookup(PciSpace space, u64 addr, u64 len) const;

    u64 warnings() const { return m_warnings; }

private:
    class Window;

    void route_cfg(GenericPayload& txn);
    void route_region(PciSpace space, GenericPayload& txn);
    void trace_cpu(HostSpace space, const GenericPayload& txn);
    void warn(const std::string& key);

    Kernel& m_kernel;
    std::string m_name;
    HostBridgeConfig m_cfg;
    std::unique_ptr<Window> m_cfg_win;
    std::unique_ptr<Window> m_mmio_win;
    std::unique_ptr<Window> m_io_win;
    InitiatorSocket m_dma;

    std::array<std::unique_ptr<PciInitiatorSocket>, NUM_SLOTS> m_slots;
    std::array<std::array<bool, 4>, NUM_SLOTS> m_pin_state{};
    std::array<SignalLine, 4> m_intx;

    std::vector<DecodeEntry> m_decode; // sorted by (slot, bar)
    std::set<std::string> m_flagged;
    u64 m_warnings = 0;

    TraceSink* m_trace = nullptr;
};

} // namespace vpcie

#endif
