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

#ifndef VPCIE_PCI_PROTOCOL_H
#define VPCIE_PCI_PROTOCOL_H

#include <array>
#include <functional>
#include <optional>
#include <span>
#include <string_view>

#include "vpcie/sim/transport.h"

namespace vpcie {

enum class PciSpace { Config, Mem, Io };

std::string_view to_string(PciSpace space);

enum class PciPin : u8 { None = 0, A = 1, B = 2, C = 3, D = 4 };

char pin_letter(PciPin pin);

/// One PCI transaction between host bridge and device. For Mem/Io the
/// address is relative to the start of BAR `bar`.
struct PciPayload {
    PciSpace space = PciSpace::Config;
    u8 bar = 0;
    u64 address = 0;
    Direction direction = Direction::Read;
    Response response = Response::Incomplete;

    u8 size = 0;
    std::array<u8, 8> bytes{};

    static PciPayload read(PciSpace space, u64 addr, u8 size, u8 bar = 0);
    static PciPayload write(PciSpace space, u64 addr, u8 size, u64 value,
                            u8 bar = 0);

    std::span<u8> data() { return {bytes.data(), size}; }
    std::span<const u8> data() const { return {bytes.data(), size}; }

    u64 value() const { return load_le(data()); }
    void set_value(u64 v) { store_le(data(), v); }

    bool is_read() const { return direction == Direction::Read; }
    bool is_write() const { return direction == Direction::Write; }

    /// Size is a power of two in [1, 8] and the address is aligned to it.
    bool well_formed() const;
};

/// Device-to-host message on the backward path of a PCI link.
struct PciBackwardMessage {
    PciPin pin = PciPin::None;
    bool level = false;
};

class PciTargetSocket;
class ConfigSpace;


/// Upstream path a device uses for bus-master traffic: posted writes (MSI
/// doorbells) and DMI requests for its DMA window.
class DmaPort {
public:
    virtual ~DmaPort() = default;
    virtual Response dma_write(u64 addr, std::span<const u8> data) = 0;
    virtual std::optional<DmiDescriptor> dmi_request(u64 addr) = 0;

    /// Registers a handler for DMI invalidations arriving from upstream.
    virtual void on_dmi_invalidate(std::function<void(u64, u64)> fn) = 0;
};

/// Implemented by every PCI function model.
class PciDevice {
public:
    virtual ~PciDevice() = default;

    virtual Response pci_transport(PciPayload& txn) = 0;

    /// Guest-visible configuration header, used by the host bridge to
    /// build its decode table.
    virtual const ConfigSpace& config() const = 0;
};

/// Host-bridge side of a PCI link. Carries forward transactions to the
/// bound target and receives backward (interrupt) messages from it.
class PciInitiatorSocket {
public:
    using BackwardFn = std::function<void(const PciBackwardMessage&)>;

    PciInitiatorSocket() = default;
    PciInitiatorSocket(const PciInitiatorSocket&) = delete;
    PciInitiatorSocket& operator=(const PciInitiatorSocket&) = delete;

    void bind(PciTargetSocket& target);
    bool bound() const { return m_target != nullptr; }
    PciTargetSocket* target() const { return m_target; }

    Response transport(PciPayload& txn);

    void on_backward(BackwardFn fn) { m_backward = std::move(fn); }

private:
    friend class PciTargetSocket;

    PciTargetSocket* m_target = nullptr;
    BackwardFn m_backward;
};

/// Device side of a PCI link.
class PciTargetSocket {
public:
    explicit PciTargetSocket(PciDevice& device): m_device(device) {}
    PciTargetSocket(const PciTargetSocket&) = delete;
    PciTargetSocket& operator=(const PciTargetSocket&) = delete;

    PciDevice& device() const { return m_device; }
    bool bound() const { return m_host != nullptr; }

    /// Sends a message on the backward path; a no-op while unbound.
    void send_backward(const PciBackwardMessage& msg);

private:
    friend class PciInitiatorSocket;

    PciDevice& m_device;
    PciInitiatorSocket* m_host = nullptr;
};

} // namespace vpcie

#endif
