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

#ifndef VPCIE_SIM_KERNEL_H
#define VPCIE_SIM_KERNEL_H

#include <functional>
#include <map>
#include <utility>
#include <vector>

#include "vpcie/sim/time.h"

namespace vpcie {

class InitiatorSocket;

/// Identifies a scheduled event; can be used to cancel it before it fires.
struct EventHandle {
    SimTime time;
    u64 seq = 0;
};

/// Single-threaded discrete-event kernel.
///
/// Events are ordered by (time, insertion sequence), so two events scheduled
/// for the same instant always run in the order they were scheduled. The
/// kernel has three phases: elaboration (sockets may be bound), running, and
/// finished (nothing may be scheduled any more). Elaboration ends implicitly
/// with the first call to run_until() or explicitly via elaborate().
class Kernel {
public:
    using Callback = std::function<void()>;

    Kernel() = default;
    Kernel(const Kernel&) = delete;
    Kernel& operator=(const Kernel&) = delete;

    SimTime now() const { return m_now; }

    EventHandle schedule(Callback cb, SimTime delay);
    bool cancel(const EventHandle& handle);

    /// Executes every event with time <= limit, then advances now() to
    /// limit. Returns early (with now() at the time of the last executed
    /// event) when stop() is requested from inside a callback.
    SimTime run_until(SimTime limit);

    void stop() { m_stop_requested = true; }
    void finish();

    void elaborate();

    bool elaborated() const { return m_elaborated; }
    bool running() const { return m_running; }
    bool finished() const { return m_finished; }
    std::size_t pending_events() const { return m_queue.size(); }
    u64 executed_events() const { return m_executed; }

    // Sockets register themselves so elaborate() can reject unbound ones.
    void register_socket(InitiatorSocket* socket);
    void unregister_socket(InitiatorSocket* socket);

private:
    using Key = std::pair<SimTime, u64>;

    SimTime m_now;
    u64 m_next_seq = 0;
    u64 m_executed = 0;
    bool m_elaborated = false;
    bool m_running = false;
    bool m_finished = false;
    bool m_stop_requested = false;
    std::map<Key, Callback> m_queue;
    std::vector<InitiatorSocket*> m_sockets;
};

} // namespace vpcie

#endif
