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


#include "vpcie/mock/copycheck.h"

#include <algorithm>
#include <cstring>
#include <numeric>

namespace vpcie {

namespace {

constexpr u32 CLASS_SYSTEM_PERIPHERAL = 0x088000;

SimTime scaled(SimTime unit, u64 n) {
    return SimTime::ps(unit.picoseconds() * n);
}

} // namespace

CopyCheck::CopyCheck(Kernel& kernel, const CopyCheckTiming& timing):
    m_kernel(kernel), m_timing(timing), m_cfg(), m_iommu() {
    if (m_timing.chunk_size == 0)
        throw ConfigError("copycheck: chunk size must be nonzero");

    m_cfg.set_identity(VENDOR_ID, DEVICE_ID, CLASS_SYSTEM_PERIPHERAL, 1);
    m_cfg.set_interrupt_pin(PciPin::A);
    m_cfg.declare_bar(0, BAR0_SIZE, BarKind::Mem32);
    m_cfg.add_msi_capability(MSI_CAP, true, 1);
    m_cfg.add_msix_capability(MSIX_CAP, NUM_VECTORS, 0, TABLE_OFFSET, 0,
                              PBA_OFFSET);
    m_cfg.mark_reset_state();
    reset_table();
}

CopyCheck::~CopyCheck() {
    cancel_job();
}

Response CopyCheck::config_read(u32 offset, std::span<u8> data) {
    if (offset >= ConfigSpace::SIZE || data.size() > ConfigSpace::SIZE - offset)
        return Response::AddressError;
    std::copy_n(m_cfg.raw().begin() + offset, data.size(), data.begin());
    return Response::Ok;
}

Response CopyCheck::config_write(u32 offset, std::span<const u8> data) {
    if (offset >= ConfigSpace::SIZE || data.size() > ConfigSpace::SIZE - offset)
        return Response::AddressError;
    for (std::size_t i = 0; i < data.size(); i++)
        m_cfg.write(offset + static_cast<u32>(i), 1, data[i]);
    return Response::Ok;
}

Response CopyCheck::region_access(unsigned bar, u64 offset,
                                  std::span<u8> data, Direction dir) {
    const u64 len = data.size();
    if (bar != 0 || offset >= BAR0_SIZE || len > BAR0_SIZE - offset)
        return Response::AddressError;
    if (len == 0 || len > 8 || !is_pow2(len) || offset % len != 0)
        return Response::CommandError;

    const bool write = dir == Direction::Write;

    if (offset >= TABLE_OFFSET && offset < TABLE_OFFSET + m_table.size()) {
        u8* entry = m_table.data() + (offset - TABLE_OFFSET);
        if (write)
            std::memcpy(entry, data.data(), len);
        else
            std::memcpy(data.data(), entry, len);
        return Response::Ok;
    }

    if (offset >= TABLE_OFFSET) {
        // pending bits live with the function model; the rest is reserved
        if (write && (offset < PBA_OFFSET || offset >= PBA_OFFSET + 8))
            m_warnings++;
        if (!write)
            std::fill(data.begin(), data.end(), 0);
        return Response::Ok;
    }

    for (u64 dw = offset & ~u64(3); dw < offset + len; dw += 4) {
        const u32 cur = reg_read(static_cast<u32>(dw));
        std::array<u8, 4> lanes{};
        store_le(lanes, cur);

        const u64 lo = std::max(dw, offset);
        const u64 hi = std::min(dw + 4, offset + len);
        for (u64 a = lo; a < hi; a++) {
            if (write)
                lanes[a - dw] = data[a - offset];
            else
                data[a - offset] = lanes[a - dw];
        }

        if (write)
            reg_write(static_cast<u32>(dw), static_cast<u32>(load_le(lanes)));
    }

    return Response::Ok;
}

std::vector<RegionInfo> CopyCheck::region_info() const {
    return {{0, BAR0_SIZE, BarKind::Mem32, false}};
}

void CopyCheck::map_dma(u64 iova, std::span<u8> host, u8 perms) {
    m_iommu.map(iova, host, perms);
}

void CopyCheck::unmap_dma(u64 iova, u64 size) {
    m_iommu.unmap(iova, size);
}

std::vector<IrqEvent> CopyCheck::poll_irqs() {
    std::vector<IrqEvent> out;
    out.swap(m_events);
    return out;
}

void CopyCheck::reset() {
    cancel_job();
    m_src = m_dst = 0;
    m_len = m_ctrl = m_status = m_checksum = 0;
    m_cfg.reset();
    reset_table();
    m_events.clear();
    m_intx_asserted = false;
    m_mode = IrqMode::None;
    m_job_start.reset();
    m_job_end.reset();
}

void CopyCheck::configure_irqs(IrqMode mode, unsigned) {
    m_mode = mode;
}

std::optional<std::vector<u8>> CopyCheck::dma_read(u64 iova, u64 len) const {
    auto host = m_iommu.translate(iova, len, DMA_READ);
    if (!host)
        return std::nullopt;
    return std::vector<u8>(host->begin(), host->end());
}

u64 CopyCheck::emitted(IrqKind kind, u32 index) const {
    auto it = m_emitted.find({kind, index});
    return it == m_emitted.end() ? 0 : it->second;
}

u32 CopyCheck::reg_read(u32 offset) const {
    switch (offset) {
    case REG_ID:
        return ID_VALUE;
    case REG_SRC:
        return static_cast<u32>(m_src);
    case REG_SRC + 4:
        return static_cast<u32>(m_src >> 32);
    case REG_DST:
        return static_cast<u32>(m_dst);
    case REG_DST + 4:
        return static_cast<u32>(m_dst >> 32);
    case REG_LEN:
        return m_len;
    case REG_CTRL:
        return m_ctrl;
    case REG_STATUS:
        return m_status;
    case REG_CHECKSUM:
        return m_checksum;
    default:
        return 0;
    }
}

void CopyCheck::reg_write(u32 offset, u32 value) {
    switch (offset) {
    case REG_SRC:
        m_src = (m_src & ~0xffffffffull) | value;
        break;
    case REG_SRC + 4:
        m_src = (m_src & 0xffffffffull) | (u64(value) << 32);
        break;
    case REG_DST:
        m_dst = (m_dst & ~0xffffffffull) | value;
        break;
    case REG_DST + 4:
        m_dst = (m_dst & 0xffffffffull) | (u64(value) << 32);
        break;
    case REG_LEN:
        m_len = value;
        break;
    case REG_CTRL:
        m_ctrl = value & CTRL_IRQ_ENABLE;
        m_status &= ~STATUS_DONE;
        if (m_intx_asserted) {
            m_intx_asserted = false;
            emit(IrqKind::Legacy, 0, false);
        }
        if (value & CTRL_START) {
            if (m_status & STATUS_BUSY)
                m_warnings++;
            else
                start_job();
        }
        break;
    default:
        // ID, STATUS, CHECKSUM are read-only; everything else is reserved
        m_warnings++;
        break;
    }
}

void CopyCheck::reset_table() {
    m_table.fill(0);
    for (u32 v = 0; v < NUM_VECTORS; v++)
        m_table[v * PCI_MSIX_ENTRY_SIZE + PCI_MSIX_ENTRY_CTRL] =
            PCI_MSIX_ENTRY_MASKED;
}

void CopyCheck::start_job() {
    cancel_job();
    m_status = STATUS_BUSY;
    m_checksum = 0;
    m_job = {m_src, m_dst, m_len, (m_ctrl & CTRL_IRQ_ENABLE) != 0,
             std::vector<u8>(m_len)};
    m_job_start = m_kernel.now();
    m_job_end.reset();

    const u32 chunk = m_timing.chunk_size;
    const u32 chunks = (m_len + chunk - 1) / chunk;
    for (u32 k = 0; k < chunks; k++) {
        const u64 done = std::min<u64>(u64(k + 1) * chunk, m_len);
        m_job_events.push_back(m_kernel.schedule(
            [this, k]() -> void { chunk_done(k); },
            scaled(m_timing.per_byte, done)));
    }

    m_job_events.push_back(
        m_kernel.schedule([this]() -> void { complete_job(); },
                          scaled(m_timing.per_byte, m_len)));
}

void CopyCheck::chunk_done(u32 index) {
    const u64 off = u64(index) * m_timing.chunk_size;
    const u64 len = std::min<u64>(m_timing.chunk_size, m_job.len - off);

    auto src = m_iommu.translate(m_job.src + off, len, DMA_READ);
    if (!src) {
        fail_job();
        return;
    }

    std::copy(src->begin(), src->end(), m_job.buffer.begin() + off);
    if (m_job.irq && m_mode == IrqMode::MsiX)
        emit(IrqKind::MsiX, VECTOR_CHUNK);
}

void CopyCheck::complete_job() {
    if (m_job.len > 0) {
        auto dst = m_iommu.translate(m_job.dst, m_job.len, DMA_WRITE);
        if (!dst) {
            fail_job();
            return;
        }
        std::copy(m_job.buffer.begin(), m_job.buffer.end(), dst->begin());
    }

    m_checksum = std::accumulate(m_job.buffer.begin(), m_job.buffer.end(),
                                 u32(0));
    m_status = STATUS_DONE;
    m_job_end = m_kernel.now();
    m_job_events.clear();

    if (!m_job.irq)
        return;

    switch (m_mode) {
    case IrqMode::MsiX:
        emit(IrqKind::MsiX, VECTOR_DONE);
        break;
    case IrqMode::Msi:
        emit(IrqKind::Msi, 0);
        break;
    case IrqMode::Legacy:
        if (!m_intx_asserted) {
            m_intx_asserted = true;
            emit(IrqKind::Legacy, 0, true);
        }
        break;
    case IrqMode::None:
        break;
    }
}

void CopyCheck::fail_job() {
    m_status = STATUS_ERROR;
    m_job_end = m_kernel.now();
    cancel_job();
}

void CopyCheck::cancel_job() {
    for (const EventHandle& h : m_job_events)
        m_kernel.cancel(h);
    m_job_events.clear();
}

void CopyCheck::emit(IrqKind kind, u32 index, bool asserted) {
    m_events.push_back({kind, index, SimTime(), asserted});
    if (asserted)
        m_emitted[{kind, index}]++;
    if (m_notify)
        m_notify();
}

} // namespace vpcie
