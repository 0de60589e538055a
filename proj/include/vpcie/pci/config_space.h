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

#ifndef VPCIE_PCI_CONFIG_SPACE_H
#define VPCIE_PCI_CONFIG_SPACE_H

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "vpcie/pci/protocol.h"

namespace vpcie {

// Type-0 header layout (PCI Local Bus).
enum pci_cfg_offsets : u32 {
    PCI_VENDOR_ID = 0x00,
    PCI_DEVICE_ID = 0x02,
    PCI_COMMAND = 0x04,
    PCI_STATUS = 0x06,
    PCI_REVISION = 0x08,
    PCI_CLASS_CODE = 0x09,
    PCI_HEADER_TYPE = 0x0e,
    PCI_BAR0 = 0x10,
    PCI_BAR_END = 0x28,
    PCI_CAP_PTR = 0x34,
    PCI_INT_LINE = 0x3c,
    PCI_INT_PIN = 0x3d,
    PCI_CFG_SIZE = 0x100,
};

enum pci_cfg_bits : u32 {
    PCI_COMMAND_IO = 1u << 0,
    PCI_COMMAND_MEMORY = 1u << 1,
    PCI_COMMAND_MASTER = 1u << 2,
    PCI_COMMAND_INTX_DISABLE = 1u << 10,
    PCI_STATUS_CAP_LIST = 1u << 4,

    PCI_BAR_IO = 1u << 0,
    PCI_BAR_MEM64 = 2u << 1,
    PCI_BAR_PREFETCH = 1u << 3,
    PCI_BAR_MEM_TYPE_MASK = 0xfu,
    PCI_BAR_IO_TYPE_MASK = 0x3u,
};

enum pci_cap_ids : u8 {
    PCI_CAP_ID_MSI = 0x05,
    PCI_CAP_ID_MSIX = 0x11,
};

enum pci_msi_bits : u32 {
    PCI_MSI_FLAGS = 0x02,
    PCI_MSI_ADDRESS_LO = 0x04,
    PCI_MSI_ENABLE = 1u << 0,
    PCI_MSI_MMC_SHIFT = 1,
    PCI_MSI_MME_SHIFT = 4,
    PCI_MSI_MME_MASK = 0x7u << 4,
    PCI_MSI_64BIT = 1u << 7,
};

enum pci_msix_bits : u32 {
    PCI_MSIX_FLAGS = 0x02,
    PCI_MSIX_TABLE = 0x04,
    PCI_MSIX_PBA = 0x08,
    PCI_MSIX_QSIZE_MASK = 0x7ffu,
    PCI_MSIX_MASKALL = 1u << 14,
    PCI_MSIX_ENABLE = 1u << 15,
    PCI_MSIX_BIR_MASK = 0x7u,
    PCI_MSIX_ENTRY_SIZE = 16,
    PCI_MSIX_ENTRY_CTRL = 12,
    PCI_MSIX_ENTRY_MASKED = 1u << 0,
};

constexpr unsigned PCI_NUM_BARS = 6;

enum class BarKind { Mem32, Mem64, Io };

struct BarDefinition {
    unsigned index = 0;
    u64 size = 0;
    BarKind kind = BarKind::Mem32;
    bool prefetchable = false;
    std::optional<u64> programmed_base;

    bool is_io() const { return kind == BarKind::Io; }
};

struct MsiCapability {
    u8 offset = 0;
    bool enabled = false;
    bool is_64bit = false;
    unsigned vectors_enabled = 1;
    u64 message_address = 0;
    u16 message_data = 0;

    u32 data_offset() const { return offset + (is_64bit ? 0x0c : 0x08); }
};

struct MsiXCapability {
    u8 offset = 0;
    bool enabled = false;
    bool function_masked = false;
    u32 table_size = 0;
    u8 table_bar = 0;
    u32 table_offset = 0;
    u8 pba_bar = 0;
    u32 pba_offset = 0;

    u32 table_bytes() const { return table_size * PCI_MSIX_ENTRY_SIZE; }
    u32 pba_bytes() const { return ((table_size + 63) / 64) * 8; }
};

struct MsiXTableEntry {
    u64 message_address = 0;
    u32 message_data = 0;
    bool masked = true;

    static MsiXTableEntry decode(std::span<const u8, PCI_MSIX_ENTRY_SIZE> raw);
    void encode(std::span<u8, PCI_MSIX_ENTRY_SIZE> raw) const;
};

struct CapabilityRef {
    u8 id = 0;
    u8 offset = 0;

    bool operator==(const CapabilityRef&) const = default;
};

/// 256-byte type-0 configuration header with per-bit write masks.
///
/// Writes only change bits that are marked writable, which gives BAR sizing
/// for free: writing all-ones to a BAR of size S reads back ~(S-1) with the
/// read-only type bits intact.
class ConfigSpace {
public:
    static constexpr std::size_t SIZE = PCI_CFG_SIZE;

    ConfigSpace();

    /// Wraps an externally obtained header (e.g. read through VFIO). Only
    /// the command register and interrupt line are writable afterwards.
    static ConfigSpace from_bytes(std::span<const u8> raw);

    void set_identity(u16 vendor, u16 device, u32 class_code, u8 revision);
    void set_interrupt_pin(PciPin pin);
    void declare_bar(unsigned index, u64 size, BarKind kind,
                     bool prefetchable = false);
    u8 add_msi_capability(u8 offset, bool is_64bit, unsigned vectors = 1);
    u8 add_msix_capability(u8 offset, u32 table_size, u8 table_bar,
                           u32 table_offset, u8 pba_bar, u32 pba_offset);
    void set_writable(u32 offset, unsigned width, u64 mask);

    /// Captures the current contents as the state restored by reset().
    void mark_reset_state();
    void reset();

    /// Little-endian read; nullopt when the access leaves the header or the
    /// width is not 1, 2 or 4.
    std::optional<u64> read(u32 offset, unsigned width) const;
    bool write(u32 offset, unsigned width, u64 value);

    u8 byte(u32 offset) const { return m_raw.at(offset); }
    std::span<const u8, SIZE> raw() const { return m_raw; }
    void load_raw(std::span<const u8> raw);
    void poke(u32 offset, unsigned width, u64 value);

    u16 vendor_id() const;
    u16 device_id() const;
    u16 command() const;
    u16 status() const;
    bool memory_enabled() const { return command() & PCI_COMMAND_MEMORY; }
    bool io_enabled() const { return command() & PCI_COMMAND_IO; }
    bool bus_master() const { return command() & PCI_COMMAND_MASTER; }
    PciPin interrupt_pin() const;

    std::optional<BarDefinition> bar(unsigned index) const;
    std::vector<BarDefinition> bars() const;

    std::optional<MsiCapability> msi() const;
    std::optional<MsiXCapability> msix() const;

private:
    std::array<u8, SIZE> m_raw;
    std::array<u8, SIZE> m_wmask;
    std::array<u8, SIZE> m_reset;
    std::array<std::optional<BarDefinition>, PCI_NUM_BARS> m_bars;

    void append_capability(u8 offset, u8 id);
};

std::optional<u64> config_read_field(const ConfigSpace& cfg, u32 offset,
                                     unsigned width);

void bar_write(ConfigSpace& cfg, unsigned index, u32 value);

/// Sizing value a BAR of the given size and type reads back after an
/// all-ones write.
u32 bar_sizing_mask(u64 size, BarKind kind, bool prefetchable);

/// Follows the capability list. Throws MalformedConfig on loops or pointers
/// that leave the header.
std::vector<CapabilityRef> capability_walk(const ConfigSpace& cfg);

std::optional<u8> find_capability(const ConfigSpace& cfg, u8 id);

} // namespace vpcie

#endif
