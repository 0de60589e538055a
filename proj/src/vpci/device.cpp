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

#include "vpcie/vpci/device.h"

#include <algorithm>
#include <cstdio>

namespace vpcie {

// command bits served from the shadow; the rest come from the backend
static constexpr u8 SHADOW_COMMAND_BITS =
    PCI_COMMAND_IO | PCI_COMMAND_MEMORY | PCI_COMMAND_MASTER;

std::string_view to_string(IrqKind kind) {
    switch (kind) {
    case IrqKind::Legacy:
        return "legacy";
    case IrqKind::Msi:
        return "msi";
    case IrqKind::MsiX:
        return "msix";
    }
    return "?";
}

std::string_view to_string(IrqMode mode) {
    switch (mode) {
    case IrqMode::None:
        return "none";
    case IrqMode::Legacy:
        return "legacy";
    case IrqMode::Msi:
        return "msi";
    case IrqMode::MsiX:
        return "msix";
    }
    return "?";
}

VpciDevice::VpciDevice(Kernel& kernel, std::string name,
                       DeviceBackend& backend, const VpciOptions& opts):
    m_kernel(kernel),
    m_name(std::move(name)),
    m_backend(backend),
    m_opts(opts),
    m_socket(*this),
    m_shadow(),
    m_regions(),
    m_msi_layout(),
    m_msix_layout(),
    m_pba() {
    build_shadow();
    m_backend.set_irq_notifier([this]() -> void { request_sync(); });
    schedule_quantum();
}

VpciDevice::~VpciDevice() {
    m_backend.set_irq_notifier({});
    if (m_quantum_event)
        m_kernel.cancel(*m_quantum_event);
}

void VpciDevice::build_shadow() {
    std::array<u8, ConfigSpace::SIZE> raw{};
    for (u32 off = 0; off < ConfigSpace::SIZE; off += 4) {
        if (m_backend.config_read(off, std::span(raw).subspan(off, 4)) !=
            Response::Ok)
            throw BackendError(m_backend.name() +
                               ": cannot read configuration space at " +
                               hex(off));
    }

    m_shadow = ConfigSpace::from_bytes(raw);

    // BARs are entirely guest-owned; undeclared ones read as zero
    for (u32 off = PCI_BAR0; off < PCI_BAR_END; off++) {
        m_shadow.poke(off, 1, 0);
        m_local[off] = true;
    }

    m_regions = m_backend.region_info();
    for (const RegionInfo& r : m_regions)
        m_shadow.declare_bar(r.bar, r.size, r.kind, r.prefetchable);

    m_shadow.poke(PCI_COMMAND, 2, m_shadow.command() & ~SHADOW_COMMAND_BITS);

    m_msi_layout = m_shadow.msi();
    if (m_msi_layout) {
        const MsiCapability& msi = *m_msi_layout;
        const u32 flags = msi.offset + PCI_MSI_FLAGS;
        const u32 addr = msi.offset + PCI_MSI_ADDRESS_LO;
        const u32 addr_len = msi.is_64bit ? 8 : 4;
        const u32 data = msi.data_offset();

        m_shadow.poke(flags, 2,
                      *m_shadow.read(flags, 2) &
                          ~u64(PCI_MSI_ENABLE | PCI_MSI_MME_MASK));
        m_shadow.set_writable(flags, 2, PCI_MSI_ENABLE | PCI_MSI_MME_MASK);
        m_shadow.poke(addr, 4, 0);
        m_shadow.set_writable(addr, 4, 0xfffffffc);
        if (msi.is_64bit) {
            m_shadow.poke(addr + 4, 4, 0);
            m_shadow.set_writable(addr + 4, 4, 0xffffffff);
        }
        m_shadow.poke(data, 2, 0);
        m_shadow.set_writable(data, 2, 0xffff);

        for (u32 i = 0; i < 2; i++)
            m_local[flags + i] = m_local[data + i] = true;
        for (u32 i = 0; i < addr_len; i++)
            m_local[addr + i] = true;
        m_msi_layout = m_shadow.msi();
    }

    m_msix_layout = m_shadow.msix();
    if (m_msix_layout) {
        const u32 flags = m_msix_layout->offset + PCI_MSIX_FLAGS;
        m_shadow.poke(flags, 2,
                      *m_shadow.read(flags, 2) &
                          ~u64(PCI_MSIX_ENABLE | PCI_MSIX_MASKALL));
        m_shadow.set_writable(flags, 2, PCI_MSIX_ENABLE | PCI_MSIX_MASKALL);
        m_local[flags] = m_local[flags + 1] = true;
        m_msix_layout = m_shadow.msix();
        m_pba.assign((m_msix_layout->table_size + 63) / 64, 0);
    }

    m_shadow.mark_reset_state();
    update_irq_mode();
}

void VpciDevice::connect_dma(DmaPort& port) {
    m_dma = &port;
    port.on_dmi_invalidate([this](u64 lo, u64 hi) -> void {
        if (!m_window)
            return;
        const u64 base = m_window->guest_base;
        const u64 last = base + m_window->size - 1;
        if (lo > last || hi < base)
            return;

        // the grant backing the IOMMU mapping is gone
        m_backend.unmap_dma(base, m_window->size);
        m_window.reset();
        std::fprintf(stderr, "%s: DMA window invalidated\n", m_name.c_str());
    });
}

ConfigRoute VpciDevice::intercept_config(PciPayload& txn) {
    const u32 off = static_cast<u32>(txn.address);
    const u32 len = txn.size;

    bool any_local = false;
    bool any_fwd = false;
    for (u32 i = 0; i < len; i++) {
        const u32 b = off + i;
        const bool cmd = b == PCI_COMMAND;
        any_local |= m_local[b] || cmd;
        any_fwd |= !m_local[b];
    }

    const ConfigRoute route = !any_fwd  ? ConfigRoute::Local
                              : any_local ? ConfigRoute::Mixed
                                          : ConfigRoute::Forwarded;

    if (txn.is_read()) {
        if (any_fwd) {
            txn.response = m_backend.config_read(off, txn.data());
            if (txn.response != Response::Ok)
                return route;
        }

        for (u32 i = 0; i < len; i++) {
            const u32 b = off + i;
            if (m_local[b])
                txn.bytes[i] = m_shadow.byte(b);
            else if (b == PCI_COMMAND)
                txn.bytes[i] = static_cast<u8>(
                    (txn.bytes[i] & ~SHADOW_COMMAND_BITS) |
                    (m_shadow.byte(b) & SHADOW_COMMAND_BITS));
        }

        txn.response = Response::Ok;
        return route;
    }

    const bool had_msix_mask = m_shadow.msix() &&
                               m_shadow.msix()->function_masked;

    txn.response = Response::Ok;
    u32 run_start = 0;
    u32 run_len = 0;
    auto flush = [&]() -> void {
        if (run_len == 0)
            return;
        Response rsp = m_backend.config_write(
            off + run_start, txn.data().subspan(run_start, run_len));
        if (rsp != Response::Ok)
            txn.response = rsp;
        run_len = 0;
    };

    for (u32 i = 0; i < len; i++) {
        const u32 b = off + i;
        if (m_local[b] || b == PCI_COMMAND)
            m_shadow.write(b, 1, txn.bytes[i]);

        if (m_local[b]) {
            flush();
            continue;
        }

        if (run_len == 0)
            run_start = i;
        run_len++;
    }
    flush();

    if (any_local) {
        update_irq_mode();
        auto msix = m_shadow.msix();
        if (msix && msix->enabled && had_msix_mask && !msix->function_masked)
            replay_all();
    }

    return route;
}

const RegionInfo* VpciDevice::region(unsigned bar) const {
    for (const RegionInfo& r : m_regions) {
        if (r.bar == bar)
            return &r;
    }
    return nullptr;
}

bool VpciDevice::in_pba(unsigned bar, u64 offset, u64 len) const {
    if (!m_msix_layout || bar != m_msix_layout->pba_bar)
        return false;
    const u64 lo = m_msix_layout->pba_offset;
    return offset < lo + m_msix_layout->pba_bytes() && lo < offset + len;
}

bool VpciDevice::in_table(unsigned bar, u64 offset, u64 len) const {
    if (!m_msix_layout || bar != m_msix_layout->table_bar)
        return false;
    const u64 lo = m_msix_layout->table_offset;
    return offset < lo + m_msix_layout->table_bytes() && lo < offset + len;
}

void VpciDevice::read_pba(u64 offset, std::span<u8> data) const {
    for (std::size_t i = 0; i < data.size(); i++) {
        const u64 rel = offset + i - m_msix_layout->pba_offset;
        const u64 word = rel / 8;
        data[i] = word < m_pba.size()
                      ? static_cast<u8>(m_pba[word] >> (8 * (rel % 8)))
                      : 0;
    }
}

Response VpciDevice::handle_pci(PciPayload& txn) {
    if (!txn.well_formed())
        return txn.response = Response::CommandError;

    if (txn.space == PciSpace::Config) {
        if (txn.address + txn.size > ConfigSpace::SIZE || txn.size > 4)
            return txn.response = Response::AddressError;
        intercept_config(txn);
        return txn.response;
    }

    const RegionInfo* r = region(txn.bar);
    const bool want_io = txn.space == PciSpace::Io;
    if (!r || (r->kind == BarKind::Io) != want_io || txn.address >= r->size ||
        txn.size > r->size - txn.address)
        return txn.response = Response::AddressError;

    if (in_pba(txn.bar, txn.address, txn.size)) {
        // pending bits are owned here; guest writes are ignored
        if (txn.is_read()) {
            std::fill(txn.bytes.begin(), txn.bytes.end(), 0);
            const u64 lo = std::max<u64>(txn.address,
                                         m_msix_layout->pba_offset);
            const u64 hi = std::min<u64>(txn.address + txn.size,
                                         m_msix_layout->pba_offset +
                                             m_msix_layout->pba_bytes());
            read_pba(lo, txn.data().subspan(lo - txn.address, hi - lo));
        }
        return txn.response = Response::Ok;
    }

    txn.response = m_backend.region_access(txn.bar, txn.address, txn.data(),
                                           txn.direction);

    if (txn.is_write()) {
        if (in_table(txn.bar, txn.address, txn.size)) {
            const u64 rel = txn.address - m_msix_layout->table_offset;
            const u32 first = static_cast<u32>(rel / PCI_MSIX_ENTRY_SIZE);
            const u32 last = static_cast<u32>((rel + txn.size - 1) /
                                              PCI_MSIX_ENTRY_SIZE);
            for (u32 v = first; v <= last; v++)
                unmask_replay(v);
        }

        pump_interrupts();
    }

    return txn.response;
}

void VpciDevice::setup_dma_window(const DmaWindow& window) {
    if (!m_dma)
        throw ElaborationError(m_name + ": DMA port not connected");
    if (window.size == 0)
        throw ConfigError(m_name + ": dma_window has zero size");

    auto dmi = m_dma->dmi_request(window.guest_base);
    if (!dmi)
        throw ConfigError(m_name + ": DMI request denied for dma_window at " +
                          hex(window.guest_base));
    if (!dmi->covers(window.guest_base, window.size))
        throw ConfigError(m_name + ": dma_window " + hex(window.guest_base) +
                          "+" + hex(window.size) +
                          " exceeds the DMI grant " + hex(dmi->start) + ".." +
                          hex(dmi->end));

    u8 perms = 0;
    if (dmi->read_allowed)
        perms |= DMA_READ;
    if (dmi->write_allowed)
        perms |= DMA_WRITE;

    std::span<u8> host(dmi->pointer(window.guest_base), window.size);
    try {
        m_backend.map_dma(window.guest_base, host, perms);
    } catch (const BackendError& err) {
        if (!m_kernel.elaborated())
            throw;
        m_diag.map_failures++;
        std::fprintf(stderr, "%s: DMA map failed: %s\n", m_name.c_str(),
                     err.what());
        return;
    }

    m_window = window;
}

unsigned VpciDevice::pump_interrupts() {
    unsigned count = 0;
    for (IrqEvent& ev : m_backend.poll_irqs()) {
        ev.time = m_kernel.now();
        const u64 before = m_diag.injected;
        deliver(ev);
        count += static_cast<unsigned>(m_diag.injected - before);
    }
    return count;
}

void VpciDevice::deliver(IrqEvent ev) {
    switch (ev.kind) {
    case IrqKind::Legacy:
        deliver_legacy(ev);
        break;
    case IrqKind::Msi:
        deliver_msi(ev);
        break;
    case IrqKind::MsiX:
        deliver_msix(ev);
        break;
    }
}

void VpciDevice::deliver_legacy(const IrqEvent& ev) {
    std::array<u8, 1> pin{};
    if (m_backend.config_read(PCI_INT_PIN, pin) != Response::Ok ||
        pin[0] == 0 || pin[0] > 4) {
        m_diag.dropped++;
        return;
    }

    const u8 level = ev.asserted ? 1 : 0;
    trace_irq(TraceSpace::Intx, pin[0], std::span(&level, 1));
    m_socket.send_backward({static_cast<PciPin>(pin[0]), ev.asserted});
    m_backend.irq_delivered(ev);
    m_diag.injected++;
}

void VpciDevice::deliver_msi(const IrqEvent& ev) {
    auto msi = m_shadow.msi();
    if (!msi || !msi->enabled || ev.index >= msi->vectors_enabled ||
        !m_dma) {
        m_diag.dropped++;
        return;
    }

    const u32 data = (msi->message_data & ~(msi->vectors_enabled - 1)) |
                     ev.index;
    std::array<u8, 4> bytes{};
    store_le(bytes, data);

    trace_irq(TraceSpace::Msi, ev.index, {});
    if (m_dma->dma_write(msi->message_address, bytes) != Response::Ok)
        m_diag.dma_errors++;
    m_backend.irq_delivered(ev);
    m_diag.injected++;
}

void VpciDevice::deliver_msix(const IrqEvent& ev) {
    auto msix = m_shadow.msix();
    if (!msix || !msix->enabled || ev.index >= msix->table_size || !m_dma) {
        m_diag.dropped++;
        return;
    }

    auto entry = read_msix_entry(ev.index);
    if (!entry) {
        m_diag.dropped++;
        return;
    }

    if (entry->masked || msix->function_masked)
        set_pending(ev.index, true);
    else
        send_msix(ev.index, *entry);

    m_backend.irq_delivered(ev);
    m_diag.injected++;
}

std::optional<MsiXTableEntry> VpciDevice::read_msix_entry(u32 vector) {
    if (!m_msix_layout || vector >= m_msix_layout->table_size)
        return std::nullopt;

    std::array<u8, PCI_MSIX_ENTRY_SIZE> raw{};
    const u64 base = m_msix_layout->table_offset +
                     u64(vector) * PCI_MSIX_ENTRY_SIZE;
    for (u32 i = 0; i < PCI_MSIX_ENTRY_SIZE; i += 4) {
        if (m_backend.region_access(m_msix_layout->table_bar, base + i,
                                    std::span(raw).subspan(i, 4),
                                    Direction::Read) != Response::Ok)
            return std::nullopt;
    }

    return MsiXTableEntry::decode(raw);
}

void VpciDevice::send_msix(u32 vector, const MsiXTableEntry& entry) {
    std::array<u8, 4> bytes{};
    store_le(bytes, entry.message_data);

    trace_irq(TraceSpace::Msix, vector, {});
    if (m_dma->dma_write(entry.message_address, bytes) != Response::Ok)
        m_diag.dma_errors++;
}

bool VpciDevice::pending(u32 vector) const {
    const u32 word = vector / 64;
    return word < m_pba.size() && (m_pba[word] >> (vector % 64)) & 1;
}

void VpciDevice::set_pending(u32 vector, bool set) {
    const u32 word = vector / 64;
    if (word >= m_pba.size())
        return;
    if (set)
        m_pba[word] |= 1ull << (vector % 64);
    else
        m_pba[word] &= ~(1ull << (vector % 64));
}

void VpciDevice::unmask_replay(u32 vector) {
    if (!pending(vector) || !m_dma)
        return;

    auto msix = m_shadow.msix();
    if (!msix || !msix->enabled || msix->function_masked)
        return;

    auto entry = read_msix_entry(vector);
    if (!entry || entry->masked)
        return;

    set_pending(vector, false);
    send_msix(vector, *entry);
    m_diag.replays++;
}

void VpciDevice::replay_all() {
    if (!m_msix_layout)
        return;
    for (u32 v = 0; v < m_msix_layout->table_size; v++)
        unmask_replay(v);
}

void VpciDevice::update_irq_mode() {
    IrqMode mode = IrqMode::None;
    unsigned count = 0;

    auto msix = m_shadow.msix();
    auto msi = m_shadow.msi();
    if (msix && msix->enabled) {
        mode = IrqMode::MsiX;
        count = msix->table_size;
    } else if (msi && msi->enabled) {
        mode = IrqMode::Msi;
        count = msi->vectors_enabled;
    } else if (m_shadow.interrupt_pin() != PciPin::None) {
        mode = IrqMode::Legacy;
        count = 1;
    }

    if (mode == m_mode)
        return;

    m_mode = mode;
    m_backend.configure_irqs(mode, count);
}

void VpciDevice::schedule_quantum() {
    if (m_opts.quantum == SimTime() || m_kernel.finished())
        return;

    m_quantum_event = m_kernel.schedule(
        [this]() -> void {
            m_quantum_event.reset();
            pump_interrupts();
            schedule_quantum();
        },
        m_opts.quantum);
}

void VpciDevice::request_sync() {
    if (m_sync_scheduled || m_kernel.finished())
        return;

    m_sync_scheduled = true;
    m_kernel.schedule(
        [this]() -> void {
            m_sync_scheduled = false;
            pump_interrupts();
        },
        SimTime());
}

void VpciDevice::trace_irq(TraceSpace space, u32 index,
                           std::span<const u8> data) {
    if (!m_trace)
        return;
    m_trace->record({m_kernel.now().picoseconds(), TraceSource::Device, space,
                     index, data.size(), Direction::Write, trace_data(data)});
}

} // namespace vpcie
