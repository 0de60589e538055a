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


#include <gtest/gtest.h>

#include "oracles.h"
#include "vpcie/mock/copycheck.h"

using namespace vpcie;

namespace {

constexpr u64 SRC = 0x1000;
constexpr u64 DST = 0x9000;

struct Engine {
    explicit Engine(CopyCheckTiming t = {}): dev(kernel, t) {
        src_buf.assign(0x8000, 0);
        dst_buf.assign(0x8000, 0);
        dev.map_dma(SRC, src_buf, DMA_READ);
        dev.map_dma(DST, dst_buf, DMA_WRITE);
    }

    void reg(u32 off, u32 value) {
        std::array<u8, 4> b{};
        store_le(b, value);
        ASSERT_EQ(dev.region_access(0, off, b, Direction::Write), Response::Ok);
    }

    u32 reg(u32 off) {
        std::array<u8, 4> b{};
        EXPECT_EQ(dev.region_access(0, off, b, Direction::Read), Response::Ok);
        return static_cast<u32>(load_le(b));
    }

    void start(u64 src, u64 dst, u32 len, bool irq = true) {
        reg(CopyCheck::REG_SRC, static_cast<u32>(src));
        reg(CopyCheck::REG_SRC + 4, static_cast<u32>(src >> 32));
        reg(CopyCheck::REG_DST, static_cast<u32>(dst));
        reg(CopyCheck::REG_DST + 4, static_cast<u32>(dst >> 32));
        reg(CopyCheck::REG_LEN, len);
        reg(CopyCheck::REG_CTRL, CopyCheck::CTRL_START |
                                     (irq ? CopyCheck::CTRL_IRQ_ENABLE : 0));
    }

    void run() { kernel.run_until(kernel.now() + SimTime::ms(1)); }

    Kernel kernel;
    std::vector<u8> src_buf;
    std::vector<u8> dst_buf;
    CopyCheck dev;
};

} // namespace

TEST(SimIommu, TranslatesExactlyInsideMappings) {
    std::vector<u8> buf(0x1000);
    SimIommu mmu;
    mmu.map(0x10000, buf, DMA_RW);
    for (u64 iova = 0x10000; iova < 0x11000; iova++) {
        auto t = mmu.translate(iova, 1, DMA_READ);
        ASSERT_TRUE(t.has_value());
        ASSERT_EQ(t->data(), buf.data() + (iova - 0x10000));
    }
    EXPECT_FALSE(mmu.translate(0xffff, 1, DMA_READ));
    EXPECT_FALSE(mmu.translate(0x11000, 1, DMA_READ));
    EXPECT_FALSE(mmu.translate(0x10ffc, 8, DMA_READ));
    EXPECT_FALSE(mmu.translate(0x10000, 0, DMA_READ));
}

TEST(SimIommu, PermissionsAreEnforced) {
    std::vector<u8> buf(0x100);
    SimIommu mmu;
    mmu.map(0, buf, DMA_READ);
    EXPECT_TRUE(mmu.translate(0, 4, DMA_READ));
    EXPECT_FALSE(mmu.translate(0, 4, DMA_WRITE));
}

TEST(SimIommu, RejectsEmptyAndOverlappingMaps) {
    std::vector<u8> buf(0x100);
    SimIommu mmu;
    EXPECT_THROW(mmu.map(0, std::span<u8>(), DMA_RW), BackendError);
    mmu.map(0x1000, buf, DMA_RW);
    EXPECT_THROW(mmu.map(0x10ff, buf, DMA_RW), BackendError);
    EXPECT_THROW(mmu.map(0xf01, buf, DMA_RW), BackendError);
    mmu.map(0x1100, buf, DMA_RW);
    mmu.map(0xf00, buf, DMA_RW);
    EXPECT_EQ(mmu.mappings().size(), 3u);
    EXPECT_EQ(mmu.mappings().front().iova, 0xf00u);
}

TEST(SimIommu, UnmapRemovesIntersecting) {
    std::vector<u8> buf(0x100);
    SimIommu mmu;
    mmu.map(0x1000, buf, DMA_RW);
    mmu.map(0x2000, buf, DMA_RW);
    EXPECT_EQ(mmu.unmap(0x10ff, 0x10), 1u);
    EXPECT_FALSE(mmu.translate(0x1000, 1, DMA_READ));
    EXPECT_TRUE(mmu.translate(0x2000, 1, DMA_READ));
    EXPECT_EQ(mmu.unmap(0x5000, 0x10), 0u);
}

TEST(CopyCheck, ConfigIdentityAndCapabilities) {
    Kernel k;
    CopyCheck dev(k);
    std::array<u8, 4> id{};
    ASSERT_EQ(dev.config_read(0, id), Response::Ok);
    EXPECT_EQ(load_le(id), 0x00011b0bu);
    const ConfigSpace& cfg = dev.host_config();
    EXPECT_EQ(cfg.interrupt_pin(), PciPin::A);
    EXPECT_EQ(cfg.bar(0)->size, CopyCheck::BAR0_SIZE);
    EXPECT_EQ(cfg.msi()->offset, CopyCheck::MSI_CAP);
    EXPECT_TRUE(cfg.msi()->is_64bit);
    EXPECT_EQ(cfg.msix()->table_size, CopyCheck::NUM_VECTORS);
    EXPECT_EQ(cfg.msix()->table_offset, CopyCheck::TABLE_OFFSET);
    EXPECT_EQ(cfg.msix()->pba_offset, CopyCheck::PBA_OFFSET);
    EXPECT_EQ(dev.config_read(0x100, id), Response::AddressError);
}

TEST(CopyCheck, RegisterAccessRules) {
    Engine e;
    EXPECT_EQ(e.reg(CopyCheck::REG_ID), CopyCheck::ID_VALUE);
    e.reg(CopyCheck::REG_STATUS, 0xffffffff);
    e.reg(CopyCheck::REG_ID, 0);
    EXPECT_EQ(e.dev.warnings(), 2u);
    EXPECT_EQ(e.reg(CopyCheck::REG_STATUS), 0u);

    std::array<u8, 4> b{};
    EXPECT_EQ(e.dev.region_access(1, 0, b, Direction::Read),
              Response::AddressError);
    EXPECT_EQ(e.dev.region_access(0, 0x1000, b, Direction::Read),
              Response::AddressError);
    EXPECT_EQ(e.dev.region_access(0, 2, b, Direction::Read),
              Response::CommandError);
    std::array<u8, 3> odd{};
    EXPECT_EQ(e.dev.region_access(0, 0, odd, Direction::Read),
              Response::CommandError);

    e.reg(CopyCheck::REG_LEN, 0x12345678);
    std::array<u8, 1> byte{};
    ASSERT_EQ(e.dev.region_access(0, CopyCheck::REG_LEN + 1, byte,
                                  Direction::Read),
              Response::Ok);
    EXPECT_EQ(byte[0], 0x56);
}

TEST(CopyCheck, MsixTableStoresEntriesAndResetsMasked) {
    Engine e;
    for (u32 v = 0; v < CopyCheck::NUM_VECTORS; v++)
        EXPECT_EQ(e.reg(CopyCheck::TABLE_OFFSET + v * 16 + 12), 1u);
    e.reg(CopyCheck::TABLE_OFFSET + 16, 0x08000040);
    e.reg(CopyCheck::TABLE_OFFSET + 24, 65);
    EXPECT_EQ(e.reg(CopyCheck::TABLE_OFFSET + 16), 0x08000040u);
    EXPECT_EQ(e.reg(CopyCheck::TABLE_OFFSET + 24), 65u);
    e.dev.reset();
    EXPECT_EQ(e.reg(CopyCheck::TABLE_OFFSET + 16), 0u);
}

TEST(CopyCheck, ThreeByteJobChecksumAndVectors) {
    Engine e;
    e.dev.configure_irqs(IrqMode::MsiX, CopyCheck::NUM_VECTORS);
    e.src_buf[0] = 1;
    e.src_buf[1] = 2;
    e.src_buf[2] = 3;
    e.start(SRC, DST, 3);
    EXPECT_EQ(e.reg(CopyCheck::REG_STATUS), CopyCheck::STATUS_BUSY);
    e.run();
    EXPECT_EQ(e.reg(CopyCheck::REG_STATUS), CopyCheck::STATUS_DONE);
    EXPECT_EQ(e.reg(CopyCheck::REG_CHECKSUM), 6u);
    EXPECT_EQ(e.dev.emitted(IrqKind::MsiX, 0), 1u);
    EXPECT_EQ(e.dev.emitted(IrqKind::MsiX, 1), 1u);
    EXPECT_EQ(e.dst_buf[2], 3);
    EXPECT_EQ(*e.dev.job_end() - *e.dev.job_start(), SimTime::ns(3));
}

TEST(CopyCheck, ChunkEventsFollowChunkSize) {
    Engine e;
    e.dev.configure_irqs(IrqMode::MsiX, CopyCheck::NUM_VECTORS);
    e.start(SRC, DST, 1000);
    std::vector<SimTime> chunk_times;
    e.dev.set_irq_notifier([&]() {
        for (const IrqEvent& ev : e.dev.poll_irqs())
            if (ev.index == CopyCheck::VECTOR_CHUNK)
                chunk_times.push_back(e.kernel.now());
    });
    e.run();
    EXPECT_EQ(chunk_times,
              (std::vector<SimTime>{SimTime::ns(256), SimTime::ns(512),
                                    SimTime::ns(768), SimTime::ns(1000)}));
}

TEST(CopyCheck, CopyMatchesSourceForRandomBuffers) {
    for (u32 len : {1u, 255u, 256u, 257u, 4096u, 0x7000u}) {
        Engine e;
        auto data = oracle::random_bytes(len, len);
        std::copy(data.begin(), data.end(), e.src_buf.begin());
        e.start(SRC, DST, len, false);
        e.run();
        ASSERT_EQ(e.dev.status(), CopyCheck::STATUS_DONE) << len;
        EXPECT_TRUE(std::equal(data.begin(), data.end(), e.dst_buf.begin()))
            << len;
        EXPECT_EQ(e.dev.checksum(), oracle::byte_sum(data)) << len;
        EXPECT_EQ(*e.dev.job_end(), SimTime::ns(len)) << len;
    }
}

TEST(CopyCheck, TimingScalesWithPerByteCost) {
    Engine e({SimTime::ps(2500), 128});
    e.dev.configure_irqs(IrqMode::MsiX, CopyCheck::NUM_VECTORS);
    e.start(SRC, DST, 1000);
    e.run();
    EXPECT_EQ(*e.dev.job_end(), SimTime::ps(2'500'000));
    EXPECT_EQ(e.dev.emitted(IrqKind::MsiX, 1), oracle::ceil_div(1000, 128));
}

TEST(CopyCheck, UnmappedSourceFaultsWithoutCompletion) {
    Engine e;
    e.dev.configure_irqs(IrqMode::MsiX, CopyCheck::NUM_VECTORS);
    e.start(0x100000, DST, 64);
    e.run();
    EXPECT_EQ(e.dev.status(), CopyCheck::STATUS_ERROR);
    EXPECT_EQ(e.dev.emitted(IrqKind::MsiX, 0), 0u);
    EXPECT_EQ(e.kernel.pending_events(), 0u);
}

TEST(CopyCheck, ReadOnlyDestinationFaults) {
    Engine e;
    e.start(SRC, SRC + 0x100, 16, false);
    e.run();
    EXPECT_EQ(e.dev.status(), CopyCheck::STATUS_ERROR);
}

TEST(CopyCheck, StraddlingMappingBoundaryFaults) {
    Engine e;
    e.start(SRC + 0x8000 - 8, DST, 16, false);
    e.run();
    EXPECT_EQ(e.dev.status(), CopyCheck::STATUS_ERROR);
}

TEST(CopyCheck, EmptyJobCompletesImmediately) {
    Engine e;
    e.start(SRC, DST, 0, false);
    e.run();
    EXPECT_EQ(e.dev.status(), CopyCheck::STATUS_DONE);
    EXPECT_EQ(e.dev.checksum(), 0u);
    EXPECT_EQ(*e.dev.job_end(), SimTime());
}

TEST(CopyCheck, StartWhileBusyIsIgnored) {
    Engine e;
    e.start(SRC, DST, 100, false);
    e.reg(CopyCheck::REG_CTRL, CopyCheck::CTRL_START);
    EXPECT_EQ(e.dev.warnings(), 1u);
    e.run();
    EXPECT_EQ(*e.dev.job_end(), SimTime::ns(100));
}

TEST(CopyCheck, MsiModeSignalsOncePerJob) {
    Engine e;
    e.dev.configure_irqs(IrqMode::Msi, 1);
    e.start(SRC, DST, 1000);
    e.run();
    EXPECT_EQ(e.dev.emitted(IrqKind::Msi, 0), 1u);
    EXPECT_EQ(e.dev.emitted(IrqKind::MsiX, 1), 0u);
}

TEST(CopyCheck, LegacyAssertsUntilCtrlWrite) {
    Engine e;
    e.dev.configure_irqs(IrqMode::Legacy, 1);
    e.start(SRC, DST, 10);
    e.run();
    auto evs = e.dev.poll_irqs();
    ASSERT_EQ(evs.size(), 1u);
    EXPECT_EQ(evs[0].kind, IrqKind::Legacy);
    EXPECT_TRUE(evs[0].asserted);

    e.reg(CopyCheck::REG_CTRL, 0);
    evs = e.dev.poll_irqs();
    ASSERT_EQ(evs.size(), 1u);
    EXPECT_FALSE(evs[0].asserted);
    EXPECT_EQ(e.dev.emitted(IrqKind::Legacy, 0), 1u);
    EXPECT_TRUE(e.dev.poll_irqs().empty());
}

TEST(CopyCheck, IrqDisabledJobIsSilent) {
    Engine e;
    e.dev.configure_irqs(IrqMode::MsiX, CopyCheck::NUM_VECTORS);
    e.start(SRC, DST, 600, false);
    e.run();
    EXPECT_TRUE(e.dev.poll_irqs().empty());
}
