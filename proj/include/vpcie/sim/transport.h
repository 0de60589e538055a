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

#ifndef VPCIE_SIM_TRANSPORT_H
#define VPCIE_SIM_TRANSPORT_H

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vpcie/sim/kernel.h"

namespace vpcie {

/// One blocking bus transaction. Addresses are absolute bus addresses; every
/// target knows where it is mapped.
struct GenericPayload {
    u64 address = 0;
    std::vector<u8> data;
    Direction direction = Direction::Read;
    Response response = Response::Incomplete;
    bool dmi_hint = false;

    static GenericPayload read(u64 addr, std::size_t len) {
        return {addr, std::vector<u8>(len, 0), Direction::Read};
    }

    static GenericPayload write(u64 addr, std::span<const u8> bytes) {
        return {addr, {bytes.begin(), bytes.end()}, Direction::Write};
    }

    std::size_t length() const { return data.size(); }
    bool is_read() const { return direction == Direction::Read; }
    bool is_write() const { return direction == Direction::Write; }
    bool ok() const { return response == Response::Ok; }
    u64 value() const { return load_le(data); }
};

/// Direct access grant: guest address a maps to host_buffer[a - start].
struct DmiDescriptor {
    u64 start = 0;
    u64 end = 0; // inclusive
    std::span<u8> host_buffer;
    bool read_allowed = false;
    bool write_allowed = false;

    u64 size() const { return end - start + 1; }
    bool contains(u64 addr) const { return addr >= start && addr <= end; }
    bool covers(u64 addr, u64 len) const {
        return len != 0 && contains(addr) && len - 1 <= end - addr;
    }
    u8* pointer(u64 addr) const { return host_buffer.data() + (addr - start); }
};

class InitiatorSocket;

/// Base class of every bus-facing model. transport() runs the model and then
/// charges its fixed access latency to the caller's delay.
class BusTarget {
public:
    explicit BusTarget(std::string name, SimTime latency = {});
    virtual ~BusTarget();

    BusTarget(const BusTarget&) = delete;
    BusTarget& operator=(const BusTarget&) = delete;

    const std::string& name() const { return m_name; }
    SimTime latency() const { return m_latency; }
    void set_latency(SimTime t) { m_latency = t; }

    void transport(GenericPayload& txn, SimTime& delay);

    virtual std::optional<DmiDescriptor> get_dmi(u64 addr);

    /// Tells every bound initiator to drop grants overlapping [start, end].
    void invalidate_dmi(u64 start, u64 end);

protected:
    virtual void do_transport(GenericPayload& txn, SimTime& delay) = 0;

private:
    friend class InitiatorSocket;

    std::string m_name;
    SimTime m_latency;
    std::vector<InitiatorSocket*> m_initiators;
};

/// Initiator side of a blocking transport link. Each socket binds to exactly
/// one target, once, before the end of elaboration. A target may accept
/// several initiators (buses, routers).
class InitiatorSocket {
public:
    using InvalidateFn = std::function<void(u64 start, u64 end)>;

    InitiatorSocket(Kernel& kernel, std::string name);
    ~InitiatorSocket();

    InitiatorSocket(const InitiatorSocket&) = delete;
    InitiatorSocket& operator=(const InitiatorSocket&) = delete;

    const std::string& name() const { return m_name; }

    void bind(BusTarget& target);
    bool bound() const { return m_target != nullptr; }
    BusTarget* target() const { return m_target; }

    void b_transport(GenericPayload& txn, SimTime& delay);
    std::optional<DmiDescriptor> dmi_request(u64 addr);

    void on_dmi_invalidate(InvalidateFn fn) { m_invalidate = std::move(fn); }

private:
    friend class BusTarget;

    void require_bound() const;

    Kernel& m_kernel;
    std::string m_name;
    BusTarget* m_target = nullptr;
    InvalidateFn m_invalidate;
};

/// System bus: an address map of non-overlapping target ranges. Forwards
/// transactions unchanged (absolute addresses) and relays DMI requests and
/// invalidations.
class Bus : public BusTarget {
public:
    Bus(Kernel& kernel, std::string name = "bus");
    ~Bus() override;

    void map(u64 start, u64 size, BusTarget& target);

    std::optional<DmiDescriptor> get_dmi(u64 addr) override;

protected:
    void do_transport(GenericPayload& txn, SimTime& delay) override;

private:
    struct Mapping {
        u64 start;
        u64 end; // inclusive
        std::unique_ptr<InitiatorSocket> socket;
    };

    const Mapping* find(u64 addr, u64 len) const;

    Kernel& m_kernel;
    std::vector<Mapping> m_map;
};

/// A boolean line with synchronous observers. Only transitions notify.
class SignalLine {
public:
    using Observer = std::function<void(bool level)>;

    explicit SignalLine(std::string id): m_id(std::move(id)) {}

    const std::string& id() const { return m_id; }
    bool level() const { return m_level; }
    u64 rising_edges() const { return m_rising; }

    void set(bool level);
    void pulse();
    void observe(Observer fn) { m_observers.push_back(std::move(fn)); }

private:
    std::string m_id;
    bool m_level = false;
    u64 m_rising = 0;
    std::vector<Observer> m_observers;
};

} // namespace vpcie

#endif
