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


#ifndef VPCIE_VFIO_IRQ_INBOX_H
#define VPCIE_VFIO_IRQ_INBOX_H

#include <deque>
#include <mutex>
#include <thread>
#include <vector>

#include "vpcie/vpci/backend.h"

namespace vpcie::vfio {

/// Lossless FIFO between the interrupt listener and the simulation thread.
class IrqInbox {
public:
    void push(const IrqEvent& ev, u64 count = 1);
    std::vector<IrqEvent> drain();
    std::size_t size() const;

private:
    mutable std::mutex m_mutex;
    std::deque<IrqEvent> m_queue;
};

/// Waits on a set of eventfds and turns every signal into inbox entries.
/// An eventfd counter of n yields n events.
class IrqListener {
public:
    struct Source {
        int fd = -1;
        IrqKind kind = IrqKind::Legacy;
        u32 index = 0;
    };

    /// Starts the listener thread. The descriptors stay owned by the caller.
    IrqListener(IrqInbox& inbox, std::vector<Source> sources);
    ~IrqListener();

    IrqListener(const IrqListener&) = delete;
    IrqListener& operator=(const IrqListener&) = delete;

    void stop();

private:
    IrqInbox& m_inbox;
    std::vector<Source> m_sources;
    int m_epoll = -1;
    int m_stop = -1;
    std::thread m_thread;

    void run();
};

} // namespace vpcie::vfio

#endif
