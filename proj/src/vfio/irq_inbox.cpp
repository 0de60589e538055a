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


#include "vpcie/vfio/irq_inbox.h"

#include <array>
#include <cerrno>
#include <cstring>

#include <sys/epoll.h>
#include <sys/eventfd.h>
#include <unistd.h>

namespace vpcie::vfio {

void IrqInbox::push(const IrqEvent& ev, u64 count) {
    std::lock_guard lock(m_mutex);
    for (u64 i = 0; i < count; i++)
        m_queue.push_back(ev);
}

std::vector<IrqEvent> IrqInbox::drain() {
    std::lock_guard lock(m_mutex);
    std::vector<IrqEvent> out(m_queue.begin(), m_queue.end());
    m_queue.clear();
    return out;
}

std::size_t IrqInbox::size() const {
    std::lock_guard lock(m_mutex);
    return m_queue.size();
}

IrqListener::IrqListener(IrqInbox& inbox, std::vector<Source> sources):
    m_inbox(inbox), m_sources(std::move(sources)) {
    m_epoll = epoll_create1(EPOLL_CLOEXEC);
    m_stop = eventfd(0, EFD_CLOEXEC | EFD_NONBLOCK);
    if (m_epoll < 0 || m_stop < 0) {
        const int err = errno;
        stop();
        throw BackendError(std::string("irq listener: ") + std::strerror(err));
    }

    auto add = [this](int fd, u64 tag) -> void {
        epoll_event ev{};
        ev.events = EPOLLIN;
        ev.data.u64 = tag;
        if (epoll_ctl(m_epoll, EPOLL_CTL_ADD, fd, &ev) < 0) {
            const int err = errno;
            stop();
            throw BackendError("irq listener: cannot watch fd " +
                               std::to_string(fd) + ": " +
                               std::strerror(err));
        }
    };

    add(m_stop, ~u64(0));
    for (std::size_t i = 0; i < m_sources.size(); i++)
        add(m_sources[i].fd, i);

    m_thread = std::thread([this]() -> void { run(); });
}

IrqListener::~IrqListener() {
    stop();
}

void IrqListener::stop() {
    if (m_thread.joinable()) {
        const u64 one = 1;
        [[maybe_unused]] auto n = write(m_stop, &one, sizeof(one));
        m_thread.join();
    }
    if (m_epoll >= 0)
        close(m_epoll);
    if (m_stop >= 0)
        close(m_stop);
    m_epoll = m_stop = -1;
}

void IrqListener::run() {
    std::array<epoll_event, 16> ready{};
    for (;;) {
        const int n = epoll_wait(m_epoll, ready.data(),
                                 static_cast<int>(ready.size()), -1);
        if (n < 0) {
            if (errno == EINTR)
                continue;
            return;
        }

        for (int i = 0; i < n; i++) {
            const u64 tag = ready[i].data.u64;
            if (tag == ~u64(0))
                return;

            const Source& src = m_sources[tag];
            u64 count = 0;
            if (read(src.fd, &count, sizeof(count)) != sizeof(count))
                continue;
            m_inbox.push({src.kind, src.index, SimTime(), true}, count);
        }
    }
}

} // namespace vpcie::vfio
