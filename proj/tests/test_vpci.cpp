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

#include <deque>

#include "oracles.h"
#include "vpcie/host_bridge.h"
#include "vpcie/msi_controller.h"
#include "vpcie/ram.h"
#include "vpcie/vpci/device.h"

using namespace vpcie;

namespace {

constexpr u8 MSI_AT = 0x40;
constexpr u8 MSIX_AT = 0x60;
constexpr u32 NVEC = 4;
constexpr u32 TABLE = 0x800;
constexpr u32 PBA = 0xc00;

// Backend whose interrupts and failures are scripted by the test.
class ScriptBackend : public DeviceBackend {
public:
    ScriptBackend() {
        cfg.set_identity(0xabcd, 0x1111, 0x088000, 2);
        cfg.set_interrupt_pin(PciPin::A);
        cfg.declare_bar(0, 0x1000, BarKind::Mem32);
        cfg.declare_bar(2, 0x20, BarKind::Io);
        cfg.add_msi_capability(MSI_AT, true, 4);
        cfg.add_msix_capability(MSIX_AT, NVEC, 0, TABLE, 0, PBA);
        bar0.assign(0x1000, 0);
        for (u32 v = 0; v < NVEC; v++)
            bar0[TABLE + v * 16 + 12] = 1;
    }

    std::string name() const override { return "script"; }

    Response config_read(u32 offset, std::span<u8> data) override {
        for (std::size_t i = 0; i < data.size(); i++)
            data[i] = cfg.byte(offset + static_cast<u32>(i));
        return Response::Ok;
    }

    Response config_write(u32 offset, std::span<const u8> data) override {
        for (std::size_t i = 0; i < data.size(); i++) {
            cfg_writes.push_back(offset + static_cast<u32>(i));
            cfg.write(offset + static_cast<u32>(i), 1, data[i]);
        }
        return Response::Ok;
    }

    Response region_access(unsigned bar, u64 offset, std::span<u8> data,
                           Direction dir) override {
        region_log.push_back({bar, offset});
        std::vector<u8>& mem = bar == 0 ? bar0 : bar2;
        if (offset + data.size() > mem.size())
            return Response::AddressError;
        if (dir == Direction::Read)
            std::copy_n(mem.begin() + offset, data.size(), data.begin());
        else
            std::copy(data.begin(), data.end(), mem.begin() + offset);
        return Response::Ok;
    }

    std::vector<RegionInfo> region_info() const override {
        return {{0, 0x1000, BarKind::Mem32, false},
                {2, 0x20, BarKind::Io, false}};
    }

    void map_dma(u64 iova, std::span<u8> host, u8 perms) override {
        if (fail_map)
            throw BackendError("scripted map failure");
        maps.push_back({iova, host.size(), perms});
    }

    void unmap_dma(u64 iova, u64 size) override {
        unmaps.push_back({iova, size, 0});
    }

    std::vector<IrqEvent> poll_irqs() override {
        std::vector<IrqEvent> out(queue.begin(), queue.end());
        queue.clear();
        return out;
    }

    void reset() override {}

    void configure_irqs(IrqMode mode, unsigned count) override {
        modes.push_back({mode, count});
    }

    void irq_delivered(const IrqEvent& ev) override {
        delivered.push_back(ev);
    }

    void set_irq_notifier(std::function<void()> fn) override {
        notify = std::move(fn);
    }

    struct Map {
        u64 iova;
        u64 size;
        u8 perms;
    };

    ConfigSpace cfg;
    std::vector<u8> bar0;
    std::vector<u8> bar2 = std::vector<u8>(0x20, 0);
    std::vector<u32> cfg_writes;
    std::vector<std::pair<unsigned, u64>> region_log;
    std::vector<Map> maps;
    std::vector<Map> unmaps;
    std::deque<IrqEvent> queue;
    std::vector<std::pair<IrqMode, unsigned>> modes;
    std::vector<IrqEvent> delivered;
    std::function<void()> notify;
    bool fail_map = false;
};

struct Sink : TraceSink {
    std::vector<TraceRecord> recs;
    void record(const TraceRecord& r) override { recs.push_back(r); }
};

struct Rig {
    explicit Rig(SimTime quantum = SimTime::us(1)):
        dev(kernel, "vpci", backend, VpciOptions{quantum}) {
        bus.map(0x40000000, 0x10000, ram);
        bus.map(0x08000000, MsiController::REGION_SIZE, msi);
        host.dma_socket().bind(bus);
        host.attach(0, dev.pci_socket());
        dev.connect_dma(host);
        dev.set_trace(&sink);
        host.set_trace(&sink);
    }

    u64 cfg_read(u32 off, u8 len) {
        auto p = PciPayload::read(PciSpace::Config, off, len);
        EXPECT_EQ(dev.handle_pci(p), Response::Ok);
        return p.value();
    }

    ConfigRoute cfg_write(u32 off, u8 len, u64 v) {
        auto p = PciPayload::write(PciSpace::Config, off, len, v);
        ConfigRoute r = dev.intercept_config(p);
        EXPECT_EQ(p.response, Response::Ok);
        return r;
    }

    Response mem(Direction dir, u64 off, u8 len, u64& v, u8 bar = 0) {
        auto p = dir == Direction::Read
                     ? PciPayload::read(PciSpace::Mem, off, len, bar)
                     : PciPayload::write(PciSpace::Mem, off, len, v, bar);
        Response r = dev.handle_pci(p);
        if (dir == Direction::Read)
            v = p.value();
        return r;
    }

    u64 mem_read(u64 off, u8 len) {
        u64 v = 0;
        EXPECT_EQ(mem(Direction::Read, off, len, v), Response::Ok);
        return v;
    }

    void mem_write(u64 off, u8 len, u64 v) {
        EXPECT_EQ(mem(Direction::Write, off, len, v), Response::Ok);
    }

    void program_entry(u32 v, u64 addr, u32 data, bool masked) {
        const u64 e = TABLE + v * 16;
        mem_write(e, 4, static_cast<u32>(addr));
        mem_write(e + 4, 4, static_cast<u32>(addr >> 32));
        mem_write(e + 8, 4, data);
        mem_write(e + 12, 4, masked ? 1 : 0);
    }

    void enable_msix(bool maskall = false) {
        cfg_write(MSIX_AT + 2, 2,
                  PCI_MSIX_ENABLE | (maskall ? PCI_MSIX_MASKALL : 0));
    }

    void raise(IrqKind kind, u32 index, bool asserted = true) {
        backend.queue.push_back({kind, index, {}, asserted});
    }

    Kernel kernel;
    Bus bus{kernel};
    Ram ram{"ram", 0x40000000, 0x10000};
    MsiController msi{"msi", {0x08000000, 64, 32}};
    HostBridge host{kernel, "pci"};
    ScriptBackend backend;
    VpciDevice dev;
    Sink sink;
};

constexpr u64 DOORBELL = 0x08000040;

} // namespace

TEST(VpciShadow, IdentityForwardedBarsLocal) {
    Rig r;
    auto id = PciPayload::read(PciSpace::Config, 0, 4);
    EXPECT_EQ(r.dev.intercept_config(id), ConfigRoute::Forwarded);
    EXPECT_EQ(id.value(), 0x1111abcdu);

    auto bar = PciPayload::read(PciSpace::Config, PCI_BAR0, 4);
    EXPECT_EQ(r.dev.intercept_config(bar), ConfigRoute::Local);

    auto cmd = PciPayload::read(PciSpace::Config, PCI_COMMAND, 4);
    EXPECT_EQ(r.dev.intercept_config(cmd), ConfigRoute::Mixed);
}

TEST(VpciShadow, GuestBarSizingMatchesOracleAndNeverReachesBackend) {
    Rig r;
    r.cfg_write(PCI_BAR0, 4, 0xffffffff);
    EXPECT_EQ(r.cfg_read(PCI_BAR0, 4),
              oracle::bar_readback(0x1000, false, false, false));
    r.cfg_write(PCI_BAR0 + 8, 4, 0xffffffff);
    EXPECT_EQ(r.cfg_read(PCI_BAR0 + 8, 4),
              oracle::bar_readback(0x20, true, false, false));
    r.cfg_write(PCI_BAR0 + 4, 4, 0xffffffff);
    EXPECT_EQ(r.cfg_read(PCI_BAR0 + 4, 4), 0u);

    r.cfg_write(PCI_BAR0, 4, 0x10002000);
    EXPECT_EQ(r.cfg_read(PCI_BAR0, 4), 0x10002000u);
    for (u32 off : r.backend.cfg_writes)
        EXPECT_TRUE(off < PCI_BAR0 || off >= PCI_BAR_END) << off;
    EXPECT_EQ(*r.backend.cfg.read(PCI_BAR0, 4), 0u);
}

TEST(VpciShadow, CommandDecodeBitsAreShadowedAndWrittenThrough) {
    Rig r;
    r.cfg_write(PCI_COMMAND, 2, PCI_COMMAND_MEMORY | PCI_COMMAND_MASTER);
    EXPECT_EQ(r.dev.config().command() & 7,
              PCI_COMMAND_MEMORY | PCI_COMMAND_MASTER);
    EXPECT_EQ(r.backend.cfg.command() & 7,
              PCI_COMMAND_MEMORY | PCI_COMMAND_MASTER);
    EXPECT_EQ(r.cfg_read(PCI_COMMAND, 2) & 7,
              PCI_COMMAND_MEMORY | PCI_COMMAND_MASTER);

    // backend disables memory decode on its own; the guest view is unchanged
    r.backend.cfg.poke(PCI_COMMAND, 2, 0);
    EXPECT_EQ(r.cfg_read(PCI_COMMAND, 2) & 7,
              PCI_COMMAND_MEMORY | PCI_COMMAND_MASTER);
}

TEST(VpciShadow, MsiAddressDivergesFromBackendSentinel) {
    Rig r;
    const u32 sentinel = 0xdead0000;
    r.backend.cfg.poke(MSI_AT + 4, 4, sentinel);
    for (u32 x : {0x08000040u, 0xfee00000u, 0x12345678u & ~3u}) {
        r.cfg_write(MSI_AT + 4, 4, x);
        EXPECT_EQ(r.cfg_read(MSI_AT + 4, 4), x);
        EXPECT_EQ(*r.backend.cfg.read(MSI_AT + 4, 4), sentinel);
    }
}

TEST(VpciShadow, ResetViewComesFromBackend) {
    Rig r;
    EXPECT_EQ(r.dev.config().vendor_id(), 0xabcd);
    EXPECT_EQ(r.dev.config().interrupt_pin(), PciPin::A);
    auto caps = capability_walk(r.dev.config());
    ASSERT_EQ(caps.size(), 2u);
    EXPECT_EQ(r.dev.config().command() & 7, 0);
    EXPECT_FALSE(r.dev.config().msix()->enabled);
    ASSERT_FALSE(r.backend.modes.empty());
    EXPECT_EQ(r.backend.modes.back(),
              (std::pair<IrqMode, unsigned>{IrqMode::Legacy, 1}));
}

TEST(VpciShadow, IrqModeFollowsEnableBits) {
    Rig r;
    r.cfg_write(MSI_AT + 2, 2, PCI_MSI_ENABLE | (1u << PCI_MSI_MME_SHIFT));
    EXPECT_EQ(r.dev.irq_mode(), IrqMode::Msi);
    EXPECT_EQ(r.backend.modes.back(),
              (std::pair<IrqMode, unsigned>{IrqMode::Msi, 2}));
    r.enable_msix();
    EXPECT_EQ(r.dev.irq_mode(), IrqMode::MsiX);
    EXPECT_EQ(r.backend.modes.back(),
              (std::pair<IrqMode, unsigned>{IrqMode::MsiX, NVEC}));
    r.cfg_write(MSIX_AT + 2, 2, 0);
    r.cfg_write(MSI_AT + 2, 2, 0);
    EXPECT_EQ(r.dev.irq_mode(), IrqMode::Legacy);
}

TEST(VpciRegions, ForwardedWithBarIdentity) {
    Rig r;
    r.mem_write(0x10, 4, 0x11223344);
    EXPECT_EQ(r.backend.bar0[0x10], 0x44);
    EXPECT_EQ(r.mem_read(0x10, 4), 0x11223344u);

    auto io = PciPayload::write(PciSpace::Io, 0x4, 1, 0x5a, 2);
    EXPECT_EQ(r.dev.handle_pci(io), Response::Ok);
    EXPECT_EQ(r.backend.bar2[4], 0x5a);
}

TEST(VpciRegions, BadBarsAndRangesRejected) {
    Rig r;
    u64 v = 0;
    EXPECT_EQ(r.mem(Direction::Read, 0, 4, v, 1), Response::AddressError);
    EXPECT_EQ(r.mem(Direction::Read, 0, 4, v, 2), Response::AddressError);
    EXPECT_EQ(r.mem(Direction::Read, 0x1000, 4, v), Response::AddressError);
    auto io = PciPayload::read(PciSpace::Io, 0, 4, 0);
    EXPECT_EQ(r.dev.handle_pci(io), Response::AddressError);
    auto cfg = PciPayload::read(PciSpace::Config, 0, 8);
    EXPECT_EQ(r.dev.handle_pci(cfg), Response::AddressError);
}

TEST(VpciLegacy, AssertAndDeassertDriveIntx) {
    Rig r;
    r.raise(IrqKind::Legacy, 0, true);
    EXPECT_EQ(r.dev.pump_interrupts(), 1u);
    EXPECT_TRUE(r.host.intx(PciPin::A).level());
    r.raise(IrqKind::Legacy, 0, false);
    r.dev.pump_interrupts();
    EXPECT_FALSE(r.host.intx(PciPin::A).level());
    EXPECT_EQ(r.host.intx(PciPin::A).rising_edges(), 1u);

    ASSERT_EQ(r.sink.recs.size(), 2u);
    EXPECT_EQ(r.sink.recs[0].space, TraceSpace::Intx);
    EXPECT_EQ(r.sink.recs[0].address, 1u);
    EXPECT_EQ(r.sink.recs[0].data, std::vector<u8>{1});
    EXPECT_EQ(r.sink.recs[1].data, std::vector<u8>{0});
    EXPECT_EQ(r.backend.delivered.size(), 2u);
}

TEST(VpciMsi, WritesShadowAddressAndData) {
    Rig r;
    r.cfg_write(MSI_AT + 4, 4, DOORBELL);
    r.cfg_write(MSI_AT + 8, 4, 0);
    r.cfg_write(MSI_AT + 12, 2, 64);
    r.cfg_write(MSI_AT + 2, 2, PCI_MSI_ENABLE | (2u << PCI_MSI_MME_SHIFT));

    r.raise(IrqKind::Msi, 2);
    EXPECT_EQ(r.dev.pump_interrupts(), 1u);
    EXPECT_EQ(r.msi.pulse_count(2), 1u);
    EXPECT_EQ(r.msi.warnings(), 0u);

    ASSERT_EQ(r.sink.recs.size(), 2u);
    EXPECT_EQ(r.sink.recs[0].space, TraceSpace::Msi);
    EXPECT_EQ(r.sink.recs[0].address, 2u);
    EXPECT_EQ(r.sink.recs[1].space, TraceSpace::Bus);
    EXPECT_EQ(r.sink.recs[1].address, DOORBELL);
    EXPECT_EQ(r.sink.recs[1].data, (std::vector<u8>{66, 0, 0, 0}));
}

TEST(VpciMsi, DisabledOrOutOfRangeIsDropped) {
    Rig r;
    r.raise(IrqKind::Msi, 0);
    EXPECT_EQ(r.dev.pump_interrupts(), 0u);
    EXPECT_EQ(r.dev.diagnostics().dropped, 1u);

    r.cfg_write(MSI_AT + 2, 2, PCI_MSI_ENABLE);
    r.raise(IrqKind::Msi, 1);
    r.dev.pump_interrupts();
    EXPECT_EQ(r.dev.diagnostics().dropped, 2u);
    EXPECT_EQ(r.dev.diagnostics().injected, 0u);
}

TEST(VpciMsi, UnroutableDoorbellCountsDmaError) {
    Rig r;
    r.cfg_write(MSI_AT + 4, 4, 0x30000000);
    r.cfg_write(MSI_AT + 2, 2, PCI_MSI_ENABLE);
    r.raise(IrqKind::Msi, 0);
    r.dev.pump_interrupts();
    EXPECT_EQ(r.dev.diagnostics().dma_errors, 1u);
}

TEST(VpciMsiX, UnmaskedVectorWritesEntry) {
    Rig r;
    r.enable_msix();
    r.program_entry(3, DOORBELL, 64 + 7, false);
    r.raise(IrqKind::MsiX, 3);
    r.dev.pump_interrupts();
    EXPECT_EQ(r.msi.pulse_count(7), 1u);
    EXPECT_FALSE(r.dev.pending(3));
}

TEST(VpciMsiX, MaskedVectorPendsOnceAndReplaysOnUnmask) {
    Rig r;
    r.enable_msix();
    r.program_entry(1, DOORBELL, 65, true);

    r.raise(IrqKind::MsiX, 1);
    r.raise(IrqKind::MsiX, 1);
    r.dev.pump_interrupts();
    EXPECT_EQ(r.msi.pulse_count(1), 0u);
    EXPECT_TRUE(r.dev.pending(1));
    EXPECT_EQ(r.mem_read(PBA, 8), 0x2u);

    r.mem_write(TABLE + 16 + 12, 4, 0);
    EXPECT_EQ(r.msi.pulse_count(1), 1u);
    EXPECT_FALSE(r.dev.pending(1));
    EXPECT_EQ(r.mem_read(PBA, 8), 0u);
    EXPECT_EQ(r.dev.diagnostics().replays, 1u);

    r.mem_write(TABLE + 16 + 12, 4, 1);
    r.mem_write(TABLE + 16 + 12, 4, 0);
    EXPECT_EQ(r.msi.pulse_count(1), 1u);
}

TEST(VpciMsiX, NeverPendedUnmaskSendsNothing) {
    Rig r;
    r.enable_msix();
    r.program_entry(2, DOORBELL, 66, true);
    r.mem_write(TABLE + 32 + 12, 4, 0);
    EXPECT_EQ(r.msi.pulse_count(2), 0u);
    EXPECT_EQ(r.dev.diagnostics().replays, 0u);
}

TEST(VpciMsiX, FunctionMaskDefersUntilCleared) {
    Rig r;
    r.program_entry(0, DOORBELL, 64, false);
    r.enable_msix(true);
    r.raise(IrqKind::MsiX, 0);
    r.dev.pump_interrupts();
    EXPECT_TRUE(r.dev.pending(0));
    EXPECT_EQ(r.msi.pulse_count(0), 0u);

    r.enable_msix(false);
    EXPECT_EQ(r.msi.pulse_count(0), 1u);
    EXPECT_FALSE(r.dev.pending(0));
}

TEST(VpciMsiX, PbaIsReadOnlyAndLocal) {
    Rig r;
    r.enable_msix();
    r.raise(IrqKind::MsiX, 0);
    r.dev.pump_interrupts();
    const std::size_t before = r.backend.region_log.size();
    r.mem_write(PBA, 8, 0);
    EXPECT_EQ(r.mem_read(PBA, 1), 1u);
    EXPECT_EQ(r.backend.region_log.size(), before);
}

TEST(VpciMsiX, DisabledOrBadVectorDropped) {
    Rig r;
    r.raise(IrqKind::MsiX, 0);
    r.dev.pump_interrupts();
    r.enable_msix();
    r.raise(IrqKind::MsiX, NVEC);
    r.dev.pump_interrupts();
    EXPECT_EQ(r.dev.diagnostics().dropped, 2u);
    for (u32 v = 0; v < NVEC; v++)
        EXPECT_FALSE(r.dev.pending(v));
}

TEST(VpciSync, NotifierDeliversAtCurrentTime) {
    Rig r(SimTime::us(1));
    r.enable_msix();
    r.program_entry(0, DOORBELL, 64, false);
    r.kernel.schedule(
        [&]() {
            r.raise(IrqKind::MsiX, 0);
            r.backend.notify();
            r.backend.notify();
        },
        SimTime::ns(250));
    r.kernel.run_until(SimTime::ns(300));
    ASSERT_EQ(r.msi.pulse_count(0), 1u);
    const auto& rec = r.sink.recs.front();
    EXPECT_EQ(rec.space, TraceSpace::Msix);
    EXPECT_EQ(rec.time_ps, SimTime::ns(250).picoseconds());
}

TEST(VpciSync, QuantumPicksUpUnnotifiedEvents) {
    Rig r(SimTime::us(1));
    r.enable_msix();
    r.program_entry(0, DOORBELL, 64, false);
    r.raise(IrqKind::MsiX, 0);
    r.kernel.run_until(SimTime::ns(999));
    EXPECT_EQ(r.msi.pulse_count(0), 0u);
    r.kernel.run_until(SimTime::us(1));
    EXPECT_EQ(r.msi.pulse_count(0), 1u);
    EXPECT_EQ(r.sink.recs.front().time_ps, SimTime::us(1).picoseconds());
}

TEST(VpciSync, MmioWriteIsASyncPoint) {
    Rig r{SimTime()};
    r.enable_msix();
    r.program_entry(0, DOORBELL, 64, false);
    r.raise(IrqKind::MsiX, 0);
    r.mem_write(0x10, 4, 0);
    EXPECT_EQ(r.msi.pulse_count(0), 1u);
}

TEST(VpciDma, WindowMapsGrantedRam) {
    Rig r;
    r.dev.setup_dma_window({0x40001000, 0x2000});
    ASSERT_EQ(r.backend.maps.size(), 1u);
    EXPECT_EQ(r.backend.maps[0].iova, 0x40001000u);
    EXPECT_EQ(r.backend.maps[0].size, 0x2000u);
    EXPECT_EQ(r.backend.maps[0].perms, DMA_RW);
    ASSERT_TRUE(r.dev.dma_window().has_value());
}

TEST(VpciDma, WindowErrors) {
    Rig r;
    EXPECT_THROW(r.dev.setup_dma_window({0x40000000, 0}), ConfigError);
    EXPECT_THROW(r.dev.setup_dma_window({0x40000000, 0x20000}), ConfigError);
    EXPECT_THROW(r.dev.setup_dma_window({0x70000000, 0x1000}), ConfigError);

    r.backend.fail_map = true;
    EXPECT_THROW(r.dev.setup_dma_window({0x40000000, 0x1000}), BackendError);

    r.kernel.elaborate();
    r.dev.setup_dma_window({0x40000000, 0x1000});
    EXPECT_EQ(r.dev.diagnostics().map_failures, 1u);
    EXPECT_FALSE(r.dev.dma_window().has_value());
}

TEST(VpciDma, UnconnectedPortIsAnElaborationError) {
    Kernel k;
    ScriptBackend b;
    VpciDevice dev(k, "lonely", b);
    EXPECT_THROW(dev.setup_dma_window({0, 0x1000}), ElaborationError);
}

TEST(VpciDma, InvalidationUnmapsWindow) {
    Rig r;
    r.dev.setup_dma_window({0x40000000, 0x1000});
    r.ram.invalidate_dmi(0x40008000, 0x40008fff);
    EXPECT_TRUE(r.backend.unmaps.empty());
    r.ram.invalidate_dmi(0x40000800, 0x40000800);
    ASSERT_EQ(r.backend.unmaps.size(), 1u);
    EXPECT_EQ(r.backend.unmaps[0].iova, 0x40000000u);
    EXPECT_FALSE(r.dev.dma_window().has_value());
}
