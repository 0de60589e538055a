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

#include "vpcie/pci/config_space.h"

#include <algorithm>
#include <bitset>

namespace vpcie {

std::string_view to_string(PciSpace space) {
    switch (space) {
    case PciSpace::Config:
        return "cfg";
    case PciSpace::Mem:
        return "mem";
    case PciSpace::Io:
        return "io";
    }
    return "?";
}

char pin_letter(PciPin pin) {
    switch (pin) {
    case PciPin::A:
        return 'A';
    case PciPin::B:
        return 'B';
    case PciPin::C:
        return 'C';
    case PciPin::D:
        return 'D';
    default:
        return '-';
    }
}

PciPayload PciPayload::read(PciSpace space, u64 addr, u8 size, u8 bar) {
    PciPayload txn;
    txn.space = space;
    txn.bar = bar;
    txn.address = addr;
    txn.size = size;
    txn.direction = Direction::Read;
    return txn;
}

PciPayload PciPayload::write(PciSpace space, u64 addr, u8 size, u64 value,
                             u8 bar) {
    PciPayload txn = read(space, addr, size, bar);
    txn.direction = Direction::Write;
    txn.set_value(value);
    return txn;
}

bool PciPayload::well_formed() const {
    return size >= 1 && size <= 8 && is_pow2(size) && address % size == 0;
}

void PciInitiatorSocket::bind(PciTargetSocket& target) {
    if (m_target)
        throw ElaborationError("PCI initiator socket already bound");
    if (target.m_host)
        throw ElaborationError("PCI target socket already bound");
    m_target = &target;
    target.m_host = this;
}

Response PciInitiatorSocket::transport(PciPayload& txn) {
    if (!m_target)
        throw ElaborationError("PCI initiator socket is not bound");
    if (!txn.well_formed())
        return txn.response = Response::CommandError;

    txn.response = Response::Incomplete;
    Response rsp = m_target->device().pci_transport(txn);
    txn.response = rsp;
    return rsp;
}

void PciTargetSocket::send_backward(const PciBackwardMessage& msg) {
    if (m_host && m_host->m_backward)
        m_host->m_backward(msg);
}

MsiXTableEntry MsiXTableEntry::decode(
    std::span<const u8, PCI_MSIX_ENTRY_SIZE> raw) {
    MsiXTableEntry entry;
    entry.message_address = load_le(raw.subspan<0, 8>());
    entry.message_data = static_cast<u32>(load_le(raw.subspan<8, 4>()));
    entry.masked = load_le(raw.subspan<12, 4>()) & PCI_MSIX_ENTRY_MASKED;
    return entry;
}

void MsiXTableEntry::encode(std::span<u8, PCI_MSIX_ENTRY_SIZE> raw) const {
    store_le(raw.subspan<0, 8>(), message_address);
    store_le(raw.subspan<8, 4>(), message_data);
    store_le(raw.subspan<12, 4>(), masked ? u32(PCI_MSIX_ENTRY_MASKED) : 0u);
}

ConfigSpace::ConfigSpace(): m_raw(), m_wmask(), m_reset(), m_bars() {
    // command: io, memory, bus master, intx disable; interrupt line
    set_writable(PCI_COMMAND, 2,
                 PCI_COMMAND_IO | PCI_COMMAND_MEMORY | PCI_COMMAND_MASTER |
                     PCI_COMMAND_INTX_DISABLE);
    set_writable(PCI_INT_LINE, 1, 0xff);
}

ConfigSpace ConfigSpace::from_bytes(std::span<const u8> raw) {
    ConfigSpace cfg;
    cfg.load_raw(raw);
    cfg.mark_reset_state();
    return cfg;
}

void ConfigSpace::set_identity(u16 vendor, u16 device, u32 class_code,
                               u8 revision) {
    poke(PCI_VENDOR_ID, 2, vendor);
    poke(PCI_DEVICE_ID, 2, device);
    poke(PCI_REVISION, 1, revision);
    poke(PCI_CLASS_CODE, 1, class_code & 0xff);
    poke(PCI_CLASS_CODE + 1, 2, (class_code >> 8) & 0xffff);
}

void ConfigSpace::set_interrupt_pin(PciPin pin) {
    poke(PCI_INT_PIN, 1, static_cast<u8>(pin));
}

u32 bar_sizing_mask(u64 size, BarKind kind, bool prefetchable) {
    switch (kind) {
    case BarKind::Io:
        return static_cast<u32>(~(size - 1)) | PCI_BAR_IO;
    case BarKind::Mem64:
        return static_cast<u32>(~(size - 1) & ~0xfull) | PCI_BAR_MEM64 |
               (prefetchable ? u32(PCI_BAR_PREFETCH) : 0u);
    case BarKind::Mem32:
        return static_cast<u32>(~(size - 1) & ~0xfull) |
               (prefetchable ? u32(PCI_BAR_PREFETCH) : 0u);
    }
    return 0;
}

void ConfigSpace::declare_bar(unsigned index, u64 size, BarKind kind,
                              bool prefetchable) {
    if (index >= PCI_NUM_BARS)
        throw ConfigError("BAR index " + std::to_string(index) + " invalid");
    if (kind == BarKind::Mem64 && index + 1 >= PCI_NUM_BARS)
        throw ConfigError("64-bit BAR" + std::to_string(index) +
                          " has no upper slot");
    if (!is_pow2(size) || size < (kind == BarKind::Io ? 4u : 16u))
        throw ConfigError("BAR" + std::to_string(index) +
                          " size must be a power of two >= 16");
    if (kind != BarKind::Mem64 && size > (1ull << 32))
        throw ConfigError("32-bit BAR" + std::to_string(index) +
                          " larger than 4 GiB");

    const u32 off = PCI_BAR0 + 4 * index;
    const u32 type = bar_sizing_mask(size, kind, prefetchable) &
                     (kind == BarKind::Io ? PCI_BAR_IO_TYPE_MASK
                                          : PCI_BAR_MEM_TYPE_MASK);
    const u32 type_mask = kind == BarKind::Io ? PCI_BAR_IO_TYPE_MASK
                                              : PCI_BAR_MEM_TYPE_MASK;

    poke(off, 4, type);
    set_writable(off, 4, static_cast<u32>(~(size - 1)) & ~type_mask);

    if (kind == BarKind::Mem64) {
        poke(off + 4, 4, 0);
        set_writable(off + 4, 4, static_cast<u32>(~(size - 1) >> 32));
        m_bars[index + 1].reset();
    }

    m_bars[index] = BarDefinition{index, size, kind, prefetchable, {}};
}

void ConfigSpace::append_capability(u8 offset, u8 id) {
    if (offset < 0x40 || (offset & 3) != 0)
        throw ConfigError("capability offset " + hex(offset) + " invalid");

    poke(offset, 1, id);
    poke(offset + 1, 1, 0);

    if (!(status() & PCI_STATUS_CAP_LIST) || byte(PCI_CAP_PTR) == 0) {
        poke(PCI_STATUS, 2, status() | PCI_STATUS_CAP_LIST);
        poke(PCI_CAP_PTR, 1, offset);
        return;
    }

    auto chain = capability_walk(*this);
    poke(chain.back().offset + 1, 1, offset);
}

u8 ConfigSpace::add_msi_capability(u8 offset, bool is_64bit,
                                   unsigned vectors) {
    if (!is_pow2(vectors) || vectors > 32)
        throw ConfigError("MSI vector count must be a power of two <= 32");

    unsigned mmc = 0;
    while ((1u << mmc) < vectors)
        mmc++;

    append_capability(offset, PCI_CAP_ID_MSI);
    u16 flags = static_cast<u16>(mmc << PCI_MSI_MMC_SHIFT);
    if (is_64bit)
        flags |= PCI_MSI_64BIT;

    poke(offset + PCI_MSI_FLAGS, 2, flags);
    set_writable(offset + PCI_MSI_FLAGS, 2, PCI_MSI_ENABLE | PCI_MSI_MME_MASK);
    set_writable(offset + PCI_MSI_ADDRESS_LO, 4, 0xfffffffc);
    if (is_64bit)
        set_writable(offset + 0x08, 4, 0xffffffff);
    set_writable(offset + (is_64bit ? 0x0c : 0x08), 2, 0xffff);
    return offset;
}

u8 ConfigSpace::add_msix_capability(u8 offset, u32 table_size, u8 table_bar,
                                    u32 table_offset, u8 pba_bar,
                                    u32 pba_offset) {
    if (table_size < 1 || table_size > 2048)
        throw ConfigError("MSI-X table size must be in [1, 2048]");
    if (table_bar >= PCI_NUM_BARS || pba_bar >= PCI_NUM_BARS)
        throw ConfigError("MSI-X BAR indicator invalid");
    if ((table_offset | pba_offset) & PCI_MSIX_BIR_MASK)
        throw ConfigError("MSI-X table/PBA offsets must be 8-byte aligned");

    MsiXCapability cap;
    cap.table_size = table_size;
    const u64 tbl_end = table_offset + u64(cap.table_bytes());
    const u64 pba_end = pba_offset + u64(cap.pba_bytes());
    if (table_bar == pba_bar && table_offset < pba_end && pba_offset < tbl_end)
        throw ConfigError("MSI-X table and PBA overlap");

    append_capability(offset, PCI_CAP_ID_MSIX);
    poke(offset + PCI_MSIX_FLAGS, 2, table_size - 1);
    poke(offset + PCI_MSIX_TABLE, 4, table_offset | table_bar);
    poke(offset + PCI_MSIX_PBA, 4, pba_offset | pba_bar);
    set_writable(offset + PCI_MSIX_FLAGS, 2,
                 PCI_MSIX_ENABLE | PCI_MSIX_MASKALL);
    return offset;
}

void ConfigSpace::set_writable(u32 offset, unsigned width, u64 mask) {
    if (offset + width > SIZE)
        throw ConfigError("write mask outside configuration header");
    store_le(std::span(m_wmask).subspan(offset, width), mask);
}

void ConfigSpace::mark_reset_state() {
    m_reset = m_raw;
}

void ConfigSpace::reset() {
    m_raw = m_reset;
}

std::optional<u64> ConfigSpace::read(u32 offset, unsigned width) const {
    if ((width != 1 && width != 2 && width != 4) || offset >= SIZE ||
        width > SIZE - offset)
        return std::nullopt;
    return load_le(std::span(m_raw).subspan(offset, width));
}

bool ConfigSpace::write(u32 offset, unsigned width, u64 value) {
    if ((width != 1 && width != 2 && width != 4) || offset >= SIZE ||
        width > SIZE - offset)
        return false;

    for (unsigned i = 0; i < width; i++) {
        const u8 v = static_cast<u8>(value >> (8 * i));
        const u8 mask = m_wmask[offset + i];
        m_raw[offset + i] = static_cast<u8>((m_raw[offset + i] & ~mask) |
                                            (v & mask));
    }

    return true;
}

void ConfigSpace::load_raw(std::span<const u8> raw) {
    if (raw.size() > SIZE)
        raw = raw.first(SIZE);
    std::fill(m_raw.begin(), m_raw.end(), 0);
    std::copy(raw.begin(), raw.end(), m_raw.begin());
}

void ConfigSpace::poke(u32 offset, unsigned width, u64 value) {
    if (offset + width > SIZE)
        throw ConfigError("poke outside configuration header");
    store_le(std::span(m_raw).subspan(offset, width), value);
}

u16 ConfigSpace::vendor_id() const {
    return static_cast<u16>(*read(PCI_VENDOR_ID, 2));
}

u16 ConfigSpace::device_id() const {
    return static_cast<u16>(*read(PCI_DEVICE_ID, 2));
}

u16 ConfigSpace::command() const {
    return static_cast<u16>(*read(PCI_COMMAND, 2));
}

u16 ConfigSpace::status() const {
    return static_cast<u16>(*read(PCI_STATUS, 2));
}

PciPin ConfigSpace::interrupt_pin() const {
    const u8 pin = byte(PCI_INT_PIN);
    return pin <= 4 ? static_cast<PciPin>(pin) : PciPin::None;
}

std::optional<BarDefinition> ConfigSpace::bar(unsigned index) const {
    if (index >= PCI_NUM_BARS || !m_bars[index])
        return std::nullopt;

    BarDefinition def = *m_bars[index];
    const u32 off = PCI_BAR0 + 4 * index;
    u64 addr = *read(off, 4);
    addr &= def.is_io() ? ~u64(PCI_BAR_IO_TYPE_MASK) & 0xffffffffull
                        : ~u64(PCI_BAR_MEM_TYPE_MASK) & 0xffffffffull;
    if (def.kind == BarKind::Mem64)
        addr |= *read(off + 4, 4) << 32;

    if (addr != 0)
        def.programmed_base = addr;
    return def;
}

std::vector<BarDefinition> ConfigSpace::bars() const {
    std::vector<BarDefinition> result;
    for (unsigned i = 0; i < PCI_NUM_BARS; i++) {
        if (auto def = bar(i))
            result.push_back(*def);
    }
    return result;
}

std::optional<MsiCapability> ConfigSpace::msi() const {
    auto off = find_capability(*this, PCI_CAP_ID_MSI);
    if (!off)
        return std::nullopt;

    MsiCapability cap;
    cap.offset = *off;
    const u16 flags = static_cast<u16>(*read(*off + PCI_MSI_FLAGS, 2));
    cap.enabled = flags & PCI_MSI_ENABLE;
    cap.is_64bit = flags & PCI_MSI_64BIT;
    cap.vectors_enabled = 1u << ((flags & PCI_MSI_MME_MASK) >>
                                 PCI_MSI_MME_SHIFT);
    cap.message_address = *read(*off + PCI_MSI_ADDRESS_LO, 4);
    if (cap.is_64bit)
        cap.message_address |= *read(*off + 0x08, 4) << 32;
    cap.message_data = static_cast<u16>(*read(cap.data_offset(), 2));
    return cap;
}

std::optional<MsiXCapability> ConfigSpace::msix() const {
    auto off = find_capability(*this, PCI_CAP_ID_MSIX);
    if (!off)
        return std::nullopt;

    MsiXCapability cap;
    cap.offset = *off;
    const u16 flags = static_cast<u16>(*read(*off + PCI_MSIX_FLAGS, 2));
    cap.enabled = flags & PCI_MSIX_ENABLE;
    cap.function_masked = flags & PCI_MSIX_MASKALL;
    cap.table_size = (flags & PCI_MSIX_QSIZE_MASK) + 1;

    const u32 tbl = static_cast<u32>(*read(*off + PCI_MSIX_TABLE, 4));
    const u32 pba = static_cast<u32>(*read(*off + PCI_MSIX_PBA, 4));
    cap.table_bar = tbl & PCI_MSIX_BIR_MASK;
    cap.table_offset = tbl & ~u32(PCI_MSIX_BIR_MASK);
    cap.pba_bar = pba & PCI_MSIX_BIR_MASK;
    cap.pba_offset = pba & ~u32(PCI_MSIX_BIR_MASK);
    return cap;
}

std::optional<u64> config_read_field(const ConfigSpace& cfg, u32 offset,
                                     unsigned width) {
    return cfg.read(offset, width);
}

void bar_write(ConfigSpace& cfg, unsigned index, u32 value) {
    if (index >= PCI_NUM_BARS)
        throw ConfigError("BAR index " + std::to_string(index) + " invalid");
    cfg.write(PCI_BAR0 + 4 * index, 4, value);
}

std::vector<CapabilityRef> capability_walk(const ConfigSpace& cfg) {
    std::vector<CapabilityRef> caps;
    if (!(cfg.status() & PCI_STATUS_CAP_LIST))
        return caps;

    std::bitset<ConfigSpace::SIZE> visited;
    u8 ptr = cfg.byte(PCI_CAP_PTR) & 0xfc;
    while (ptr != 0) {
        if (ptr < 0x40)
            throw MalformedConfig("capability pointer " + hex(ptr) +
                                  " points into the standard header");
        if (visited[ptr])
            throw MalformedConfig("capability list loops at " + hex(ptr));
        visited[ptr] = true;

        caps.push_back({cfg.byte(ptr), ptr});
        ptr = cfg.byte(ptr + 1) & 0xfc;
    }

    return caps;
}

std::optional<u8> find_capability(const ConfigSpace& cfg, u8 id) {
    for (const CapabilityRef& cap : capability_walk(cfg)) {
        if (cap.id == id)
            return cap.offset;
    }
    return std::nullopt;
}

} // namespace vpcie
