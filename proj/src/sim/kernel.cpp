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

#include "vpcie/sim/kernel.h"

#include <algorithm>
#include <charconv>
#include <cstdio>

#include "vpcie/sim/transport.h"

namespace vpcie {

std::string_view to_string(Direction dir) {
    return dir == Direction::Read ? "read" : "write";
}

std::string_view to_string(Response rsp) {
    switch (rsp) {
    case Response::Incomplete:
        return "incomplete";
    case Response::Ok:
        return "ok";
    case Response::AddressError:
        return "address-error";
    case Response::CommandError:
        return "command-error";
    }
    return "?";
}

std::string hex(u64 v, int digits) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "0x%0*llx", digits,
                  static_cast<unsigned long long>(v));
    return buf;
}

std::string SimTime::str() const {
    static constexpr struct {
        u64 scale;
        const char* unit;
    } units[] = {
        {1000000000000ull, "s"},
        {1000000000ull, "ms"},
        {1000000ull, "us"},
        {1000ull, "ns"},
    };

    for (const auto& u : units) {
        if (m_ps != 0 && m_ps % u.scale == 0)
            return std::to_string(m_ps / u.scale) + u.unit;
    }
    return std::to_string(m_ps) + "ps";
}

std::optional<SimTime> SimTime::parse(std::string_view text) {
    u64 value = 0;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr == first)
        return std::nullopt;

    std::string_view unit(ptr, last - ptr);
    u64 scale = 0;
    if (unit.empty() || unit == "ns")
        scale = 1000ull;
    else if (unit == "ps")
        scale = 1ull;
    else if (unit == "us")
        scale = 1000000ull;
    else if (unit == "ms")
        scale = 1000000000ull;
    else if (unit == "s")
        scale = 1000000000000ull;
    else
        return std::nullopt;

    if (value > ~0ull / scale)
        return std::nullopt;
    return SimTime::ps(value * scale);
}

EventHandle Kernel::schedule(Callback cb, SimTime delay) {
    if (m_finished)
        throw LifecycleError("cannot schedule events after simulation end");
    if (delay == SimTime::max())
        throw LifecycleError("event delay must be finite");

    EventHandle handle{m_now + delay, m_next_seq++};
    m_queue.emplace(Key(handle.time, handle.seq), std::move(cb));
    return handle;
}

bool Kernel::cancel(const EventHandle& handle) {
    return m_queue.erase(Key(handle.time, handle.seq)) > 0;
}

SimTime Kernel::run_until(SimTime limit) {
    if (m_finished)
        throw LifecycleError("simulation already finished");
    if (m_running)
        throw LifecycleError("run_until is not reentrant");

    elaborate();

    m_running = true;
    m_stop_requested = false;

    struct RunningGuard {
        bool& flag;
        ~RunningGuard() { flag = false; }
    } guard{m_running};

    while (!m_queue.empty()) {
        auto it = m_queue.begin();
        if (it->first.first > limit)
            break;

        m_now = it->first.first;
        Callback cb = std::move(it->second);
        m_queue.erase(it);

        cb();
        m_executed++;

        if (m_stop_requested) {
            m_stop_requested = false;
            return m_now;
        }
    }

    if (limit != SimTime::max() && limit > m_now)
        m_now = limit;
    return m_now;
}

void Kernel::finish() {
    m_finished = true;
    m_queue.clear();
}

void Kernel::elaborate() {
    if (m_elaborated)
        return;

    for (const InitiatorSocket* socket : m_sockets) {
        if (!socket->bound())
            throw ElaborationError("socket '" + socket->name() +
                                   "' is not bound");
    }

    m_elaborated = true;
}

void Kernel::register_socket(InitiatorSocket* socket) {
    m_sockets.push_back(socket);
}

void Kernel::unregister_socket(InitiatorSocket* socket) {
    std::erase(m_sockets, socket);
}

} // namespace vpcie
