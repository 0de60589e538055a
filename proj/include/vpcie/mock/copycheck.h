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


#ifndef VPCIE_MOCK_COPYCHECK_H
#define VPCIE_MOCK_COPYCHECK_H

#include <array>
#include <map>
#include <optional>
#include <vector>

#include "vpcie/mock/iommu.h"
#include "vpcie/sim/kernel.h"

namespace vpcie {

struct CopyCheckTiming {
    SimTime per_byte = SimTime::ns(1);
    u32 chunk_size = 256;
};

/// Simulated DMA copy/checksum engine.
///
/// A job copies LEN bytes from SRC to DST through the device IOMMU. Chunk k
/// finishes at start + min((k + 1) * chunk, LEN) bytes worth of time and is
/// read into an internal buffer; the DST write, CHECKSUM and STATUS.done
/// follow at start + LEN. With CTRL.irq-enable set the engine signals
/// MSI-X vector 1 per chunk and vector 0 at completion, a single MSI at
/// completion, or an INTx assertion held until the next CTRL write.
class CopyCheck : public DeviceBackend {
public:
    static constexpr u16 VENDOR_ID = 0x1b0b;
    static constexpr u16 DEVICE_ID = 0x0001;
    static constexpr u32 ID_VALUE = 0xc0de0001;
    static constexpr u64 BAR0_SIZE = 0x1000;
    static constexpr u8 MSI_CAP = 0x40;
    static constexpr u8 MSIX_CAP = 0x50;
    static constexpr u32 NUM_VECTORS = 13;
    static constexpr u32 TABLE_OFFSET = 0x800;
    static constexpr u32 PBA_OFFSET = 0xc00;

    enum regs : u32 {
        REG_ID = 0x00,
        REG_SRC = 0x08,
        REG_DST = 0x10,
        REG_LEN = 0x18,
        REG_CTRL = 0x1c,
        REG_STATUS = 0x20,
        REG_CHECKSUM = 0x24,
    };

    enum bits : u32 {
        CTRL_START = 1u << 0,
        CTRL_IRQ_ENABLE = 1u << 1,
        STATUS_BUSY = 1u << 0,
        STATUS_DONE = 1u << 1,
        STATUS_ERROR = 1u << 2,
    };

    static constexpr u32 VECTOR_DONE = 0;
    static constexpr u32 VECTOR_CHUNK = 1;

    explicit CopyCheck(Kernel& kernel, const CopyCheckTiming& timing = {});
    ~CopyCheck() override;

    CopyCheck(const CopyCheck&) = delete;
    CopyCheck& operator=(const CopyCheck&) = delete;

    std::string name() const override { return "copycheck"; }

    Response config_read(u32 offset, std::span<u8> data) override;
    Response config_write(u32 offset, std::span<const u8> data) override;
    Response region_access(unsigned bar, u64 offset, std::span<u8> data,
                           Direction dir) override;
    std::vector<RegionInfo> region_info() const override;

    void map_dma(u64 iova, std::span<u8> host, u8 perms) override;
    void unmap_dma(u64 iova, u64 size) override;

    std::vector<IrqEvent> poll_irqs() override;
    void reset() override;

    void configure_irqs(IrqMode mode, unsigned count) override;
    void set_irq_notifier(std::function<void()> fn) override {
        m_notify = std::move(fn);
    }

    /// Device-side view of its own configuration space. Tests use it to
    /// plant host-programmed values.
    ConfigSpace& host_config() { return m_cfg; }

    SimIommu& iommu() { return m_iommu; }
    const SimIommu& iommu() const { return m_iommu; }

    /// Reads through the IOMMU as the engine would; nullopt on fault.
    std::optional<std::vector<u8>> dma_read(u64 iova, u64 len) const;

    u32 status() const { return m_status; }
    u32 checksum() const { return m_checksum; }
    IrqMode irq_mode() const { return m_mode; }
    u64 warnings() const { return m_warnings; }
    u64 emitted(IrqKind kind, u32 index) const;

    std::optional<SimTime> job_start() const { return m_job_start; }
    std::optional<SimTime> job_end() const { return m_job_end; }
    const CopyCheckTiming& timing() const { return m_timing; }

private:
    Kernel& m_kernel;
    CopyCheckTiming m_timing;
    ConfigSpace m_cfg;
    SimIommu m_iommu;

    u64 m_src = 0;
    u64 m_dst = 0;
    u32 m_len = 0;
    u32 m_ctrl = 0;
    u32 m_status = 0;
    u32 m_checksum = 0;
    std::array<u8, NUM_VECTORS * 16> m_table{};

    IrqMode m_mode = IrqMode::None;
    bool m_intx_asserted = false;
    std::vector<IrqEvent> m_events;
    std::map<std::pair<IrqKind, u32>, u64> m_emitted;
    std::function<void()> m_notify;
    u64 m_warnings = 0;

    struct Job {
        u64 src = 0;
        u64 dst = 0;
        u32 len = 0;
        bool irq = false;
        std::vector<u8> buffer;
    };
    Job m_job;
    std::vector<EventHandle> m_job_events;
    std::optional<SimTime> m_job_start;
    std::optional<SimTime> m_job_end;

    u32 reg_read(u32 offset) const;
    void reg_write(u32 offset, u32 value);
    void reset_table();

    void start_job();
    void chunk_done(u32 index);
    void complete_job();
    void fail_job();
    void cancel_job();
    void emit(IrqKind kind, u32 index, bool asserted = true);
};

} // namespace vpcie

#endif
