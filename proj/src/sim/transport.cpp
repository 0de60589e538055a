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

#include "vpcie/sim/transport.h"

#include <algorithm>

namespace vpcie {

BusTarget::BusTarget(std::string name, SimTime latency):
    m_name(std::move(name)), m_latency(latency), m_initiators() {}

BusTarget::~BusTarget() {
    for (InitiatorSocket* init : m_initiators)
        init->m_target = nullptr;
}

void BusTarget::transport(GenericPayload& txn, SimTime& delay) {
    do_transport(txn, delay);
    delay += m_latency;
}

std::optional<DmiDescriptor> BusTarget::get_dmi(u64) {
    return std::nullopt;
}

void BusTarget::invalidate_dmi(u64 start, u64 end) {
    for (InitiatorSocket* init : m_initiators) {
        if (init->m_invalidate)
            init->m_invalidate(start, end);
    }
}

InitiatorSocket::InitiatorSocket(Kernel& kernel, std::string name):
    m_kernel(kernel), m_name(std::move(name)) {
    m_kernel.register_socket(this);
}

InitiatorSocket::~InitiatorSocket() {
    if (m_target)
        std::erase(m_target->m_initiators, this);
    m_kernel.unregister_socket(this);
}

void InitiatorSocket::bind(BusTarget& target) {
    if (m_kernel.elaborated())
        throw LifecycleError("socket '" + m_name +
                             "' cannot be bound after elaboration");
    if (m_target)
        throw ElaborationError("socket '" + m_name + "' already bound to '" +
                               m_target->name() + "'");

    m_target = &target;
    target.m_initiators.push_back(this);
}

void InitiatorSocket::require_bound() const {
    if (!m_target)
        throw ElaborationError("socket '" + m_name + "' is not bound");
}

void InitiatorSocket::b_transport(GenericPayload& txn, SimTime& delay) {
    require_bound();

    if (txn.data.empty()) {
        txn.response = Response::CommandError;
        return;
    }

    txn.response = Response::Incomplete;
    const SimTime before = delay;
    m_target->transport(txn, delay);

    if (txn.response == Response::Incomplete)
        throw Error("target '" + m_target->name() + "' left response unset");
    if (delay < before)
        throw Error("target '" + m_target->name() + "' decreased the delay");
}

std::optional<DmiDescriptor> InitiatorSocket::dmi_request(u64 addr) {
    require_bound();
    return m_target->get_dmi(addr);
}

Bus::Bus(Kernel& kernel, std::string name):
    BusTarget(std::move(name)), m_kernel(kernel), m_map() {}

Bus::~Bus() = default;

void Bus::map(u64 start, u64 size, BusTarget& target) {
    if (size == 0)
        throw ConfigError("cannot map empty range for '" + target.name() + "'");
    if (start + (size - 1) < start)
        throw ConfigError("mapping for '" + target.name() + "' wraps");

    const u64 end = start + size - 1;
    for (const Mapping& m : m_map) {
        if (start <= m.end && m.start <= end) {
            throw ConfigError("mapping " + hex(start) + ".." + hex(end) +
                              " for '" + target.name() + "' overlaps '" +
                              m.socket->target()->name() + "'");
        }
    }

    auto socket = std::make_unique<InitiatorSocket>(
        m_kernel, name() + "." + target.name());
    socket->bind(target);
    socket->on_dmi_invalidate(
        [this](u64 lo, u64 hi) -> void { invalidate_dmi(lo, hi); });

    auto pos = std::lower_bound(m_map.begin(), m_map.end(), start,
                                [](const Mapping& m, u64 addr) -> bool {
                                    return m.start < addr;
                                });
    m_map.insert(pos, Mapping{start, end, std::move(socket)});
}

const Bus::Mapping* Bus::find(u64 addr, u64 len) const {
    for (const Mapping& m : m_map) {
        if (addr >= m.start && addr <= m.end)
            return (len == 0 || len - 1 <= m.end - addr) ? &m : nullptr;
    }
    return nullptr;
}

void Bus::do_transport(GenericPayload& txn, SimTime& delay) {
    const Mapping* m = find(txn.address, txn.length());
    if (!m) {
        txn.response = Response::AddressError;
        return;
    }

    m->socket->b_transport(txn, delay);
}

std::optional<DmiDescriptor> Bus::get_dmi(u64 addr) {
    const Mapping* m = find(addr, 1);
    if (!m)
        return std::nullopt;

    auto dmi = m->socket->dmi_request(addr);
    if (!dmi)
        return std::nullopt;

    // never hand out more than the mapped window
    if (dmi->start < m->start || dmi->end > m->end) {
        const u64 lo = std::max(dmi->start, m->start);
        const u64 hi = std::min(dmi->end, m->end);
        dmi->host_buffer = dmi->host_buffer.subspan(lo - dmi->start,
                                                    hi - lo + 1);
        dmi->start = lo;
        dmi->end = hi;
    }

    return dmi;
}

void SignalLine::set(bool level) {
    if (level == m_level)
        return;

    m_level = level;
    if (level)
        m_rising++;

    for (const Observer& fn : m_observers)
        fn(level);
}

void SignalLine::pulse() {
    set(true);
    set(false);
}

} // namespace vpcie
