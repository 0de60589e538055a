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

#include "vpcie/host_bridge.h"

#include <algorithm>

namespace vpcie {

class HostBridge::Window : public BusTarget {
public:
    Window(HostBridge& host, HostSpace space, std::string name):
        BusTarget(std::move(name)), m_host(host), m_space(space) {}

protected:
    void do_transport(GenericPayload& txn, SimTime&) override {
        m_host.route_bus_access(m_space, txn);
    }

private:
    HostBridge& m_host;
    HostSpace m_space;
};

CfgAddress CfgAddress::decode(u64 offset) {
    return {static_cast<unsigned>((offset >> 15) & 0x1f),
            static_cast<unsigned>((offset >> 12) & 0x7),
            static_cast<unsigned>(offset & 0xfff)};
}

u64 CfgAddress::encode() const {
    return (u64(device_slot & 0x1f) << 15) | (u64(function & 0x7) << 12) |
           (register_offset & 0xfff);
}

HostBridge::HostBridge(Kernel& kernel, std::string name,
                       const HostBridgeConfig& cfg):
    m_kernel(kernel),
    m_name(std::move(name)),
    m_cfg(cfg),
    m_cfg_win(std::make_unique<Window>(*this, HostSpace::Cfg, m_name + ".cfg")),
    m_mmio_win(
        std::make_unique<Window>(*this, HostSpace::Mmio, m_name + ".mmio")),
    m_io_win(std::make_unique<Window>(*this, HostSpace::Io, m_name + ".io")),
    m_dma(kernel, m_name + ".dma"),
    m_slots(),
    m_intx{SignalLine(m_name + ".inta"), SignalLine(m_name + ".intb"),
           SignalLine(m_name + ".intc"), SignalLine(m_name + ".intd")},
    m_decode(),
    m_flagged() {}

HostBridge::~HostBridge() = default;

BusTarget& HostBridge::cfg_window() {
    return *m_cfg_win;
}

BusTarget& HostBridge::mmio_window() {
    return *m_mmio_win;
}

BusTarget& HostBridge::io_window() {
    return *m_io_win;
}

void HostBridge::attach(unsigned slot, PciTargetSocket& device) {
    if (slot >= NUM_SLOTS)
        throw ElaborationError("PCI slot " + std::to_string(slot) +
                               " out of range");
    if (m_slots[slot])
        throw ElaborationError("PCI slot " + std::to_string(slot) +
                               " already occupied");

    auto socket = std::make_unique<PciInitiatorSocket>();
    socket->bind(device);
    socket->on_backward([this, slot](const PciBackwardMessage& msg) -> void {
        raise_legacy(slot, msg.pin, msg.level);
    });
    m_slots[slot] = std::move(socket);
    update_decode(slot, device.device().config());
}

PciDevice* HostBridge::device(unsigned slot) const {
    if (slot >= NUM_SLOTS || !m_slots[slot])
        return nullptr;
    return &m_slots[slot]->target()->device();
}

SignalLine& HostBridge::intx(PciPin pin) {
    if (pin == PciPin::None)
        throw ConfigError("no INTx line for pin 'none'");
    return m_intx[static_cast<unsigned>(pin) - 1];
}

void HostBridge::route_bus_access(HostSpace space, GenericPayload& txn) {
    switch (space) {
    case HostSpace::Cfg:
        route_cfg(txn);
        break;
    case HostSpace::Mmio:
        route_region(PciSpace::Mem, txn);
        break;
    case HostSpace::Io:
        route_region(PciSpace::Io, txn);
        break;
    }

    trace_cpu(space, txn);
}

void HostBridge::route_cfg(GenericPayload& txn) {
    const u64 len = txn.length();
    if (txn.address < m_cfg.cfg_base ||
        txn.address - m_cfg.cfg_base >= m_cfg.cfg_size) {
        txn.response = Response::AddressError;
        return;
    }

    if ((len != 1 && len != 2 && len != 4) || txn.address % len != 0) {
        txn.response = Response::CommandError;
        return;
    }

    const CfgAddress cfg = CfgAddress::decode(txn.address - m_cfg.cfg_base);
    if (cfg.register_offset >= ConfigSpace::SIZE) {
        txn.response = Response::AddressError;
        return;
    }

    PciDevice* dev = device(cfg.device_slot);
    if (!dev || cfg.function != 0) {
        // master abort: reads see all-ones, writes vanish
        if (txn.is_read())
            std::fill(txn.data.begin(), txn.data.end(), 0xff);
        txn.response = Response::Ok;
        return;
    }

    PciPayload pci = txn.is_read()
                         ? PciPayload::read(PciSpace::Config,
                                            cfg.register_offset,
                                            static_cast<u8>(len))
                         : PciPayload::write(PciSpace::Config,
                                             cfg.register_offset,
                                             static_cast<u8>(len),
                                             txn.value());

    txn.response = m_slots[cfg.device_slot]->transport(pci);
    if (txn.is_read())
        std::copy_n(pci.bytes.begin(), len, txn.data.begin());

    const u32 lo = cfg.register_offset;
    const u32 hi = lo + static_cast<u32>(len);
    const bool touches_cmd = lo < PCI_COMMAND + 2 && hi > PCI_COMMAND;
    const bool touches_bar = lo < PCI_BAR_END && hi > PCI_BAR0;
    if (txn.is_write() && (touches_cmd || touches_bar))
        update_decode(cfg.device_slot, dev->config());
}

void HostBridge::route_region(PciSpace space, GenericPayload& txn) {
    const u64 len = txn.length();
    const DecodeEntry* entry = lookup(space, txn.address, len);
    if (!entry) {
        txn.response = Response::AddressError;
        return;
    }

    if (len > 8 || !is_pow2(len) || txn.address % len != 0) {
        txn.response = Response::CommandError;
        return;
    }

    const u64 offset = txn.address - entry->bus_base;
    const u8 bar = static_cast<u8>(entry->bar_index);
    PciPayload pci = txn.is_read()
                         ? PciPayload::read(space, offset,
                                            static_cast<u8>(len), bar)
                         : PciPayload::write(space, offset,
                                             static_cast<u8>(len),
                                             txn.value(), bar);

    txn.response = m_slots[entry->device_slot]->transport(pci);
    if (txn.is_read())
        std::copy_n(pci.bytes.begin(), len, txn.data.begin());
}

const DecodeEntry* HostBridge::lookup(PciSpace space, u64 addr,
                                      u64 len) const {
    for (const DecodeEntry& e : m_decode) {
        if (e.space == space && e.contains(addr, len))
            return &e;
    }
    return nullptr;
}

void HostBridge::update_decode(unsigned slot, const ConfigSpace& cfg) {
    std::erase_if(m_decode, [slot](const DecodeEntry& e) -> bool {
        return e.device_slot == slot;
    });

    for (const BarDefinition& bar : cfg.bars()) {
        const bool enabled = bar.is_io() ? cfg.io_enabled()
                                         : cfg.memory_enabled();
        if (!enabled || !bar.programmed_base)
            continue;

        const u64 base = *bar.programmed_base;
        if (base % bar.size != 0) {
            warn("misaligned:" + std::to_string(slot) + ":" +
                 std::to_string(bar.index) + ":" + hex(base));
            continue;
        }

        DecodeEntry entry{slot, bar.index, base, bar.size,
                          bar.is_io() ? PciSpace::Io : PciSpace::Mem};

        for (const DecodeEntry& other : m_decode) {
            if (other.space != entry.space || other.device_slot == slot)
                continue;
            if (entry.bus_base < other.bus_base + other.size &&
                other.bus_base < entry.bus_base + entry.size) {
                const auto& [a, b] = std::minmax(
                    entry, other,
                    [](const DecodeEntry& x, const DecodeEntry& y) -> bool {
                        return x.device_slot < y.device_slot;
                    });
                warn("overlap:" + std::to_string(a.device_slot) + "." +
                     std::to_string(a.bar_index) + "@" + hex(a.bus_base) +
                     ":" + std::to_string(b.device_slot) + "." +
                     std::to_string(b.bar_index) + "@" + hex(b.bus_base));
            }
        }

        m_decode.push_back(entry);
    }

    std::sort(m_decode.begin(), m_decode.end(),
              [](const DecodeEntry& a, const DecodeEntry& b) -> bool {
                  return a.device_slot != b.device_slot
                             ? a.device_slot < b.device_slot
                             : a.bar_index < b.bar_index;
              });
}

void HostBridge::raise_legacy(unsigned slot, PciPin pin, bool level) {
    if (slot >= NUM_SLOTS || pin == PciPin::None ||
        static_cast<u8>(pin) > 4) {
        m_warnings++;
        return;
    }

    const unsigned idx = static_cast<unsigned>(pin) - 1;
    m_pin_state[slot][idx] = level;

    bool any = false;
    for (const auto& state : m_pin_state)
        any = any || state[idx];
    m_intx[idx].set(any);
}

Response HostBridge::forward_dma_write(u64 addr, std::span<const u8> data) {
    GenericPayload txn = GenericPayload::write(addr, data);
    SimTime delay;
    m_dma.b_transport(txn, delay);

    if (m_trace) {
        m_trace->record({m_kernel.now().picoseconds(), TraceSource::Device,
                         TraceSpace::Bus, addr, data.size(), Direction::Write,
                         trace_data(data)});
    }

    return txn.response;
}

std::optional<DmiDescriptor> HostBridge::dmi_request(u64 addr) {
    return m_dma.dmi_request(addr);
}

void HostBridge::trace_cpu(HostSpace space, const GenericPayload& txn) {
    if (!m_trace)
        return;

    static constexpr TraceSpace map[] = {TraceSpace::Cfg, TraceSpace::Mmio,
                                         TraceSpace::Io};
    m_trace->record({m_kernel.now().picoseconds(), TraceSource::Cpu,
                     map[static_cast<int>(space)], txn.address, txn.length(),
                     txn.direction, trace_data(txn.data)});
}

void HostBridge::warn(const std::string& key) {
    if (m_flagged.insert(key).second)
        m_warnings++;
}

} // namespace vpcie
