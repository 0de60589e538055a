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

#include <sys/eventfd.h>
#include <unistd.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <thread>

#include "vpcie/vfio/backend.h"

using namespace vpcie;
using namespace vpcie::vfio;
namespace fs = std::filesystem;

namespace {

std::vector<u8> header_with_bars(std::initializer_list<u32> bars) {
    std::vector<u8> cfg(0x40, 0);
    u32 off = PCI_BAR0;
    for (u32 b : bars) {
        store_le(std::span(cfg).subspan(off, 4), b);
        off += 4;
    }
    return cfg;
}

bool wait_for(const IrqInbox& inbox, std::size_t n) {
    for (int i = 0; i < 400 && inbox.size() < n; i++)
        std::this_thread::sleep_for(std::chrono::milliseconds(5));
    return inbox.size() >= n;
}

class FakeSysfs : public ::testing::Test {
protected:
    void SetUp() override {
        root = fs::temp_directory_path() /
               ("vpcie_sysfs_" + std::to_string(::getpid()));
        fs::remove_all(root);
        fs::create_directories(root / "devices");
        fs::create_directories(root / "dev");
        paths = {(root / "devices").string(), (root / "dev").string()};
    }

    void TearDown() override { fs::remove_all(root); }

    fs::path add_device(const std::string& addr) {
        fs::path d = root / "devices" / addr;
        fs::create_directories(d);
        return d;
    }

    std::string open_error(const std::string& addr) {
        try {
            VfioBackend::open(addr, paths);
        } catch (const BackendError& e) {
            return e.what();
        }
        return "";
    }

    fs::path root;
    VfioPaths paths;
};

} // namespace

TEST(PciAddress, ParsesFullAndShortForms) {
    auto a = PciAddress::parse("0000:03:00.1");
    ASSERT_TRUE(a.has_value());
    EXPECT_EQ(*a, (PciAddress{0, 3, 0, 1}));
    EXPECT_EQ(a->str(), "0000:03:00.1");

    auto b = PciAddress::parse("1f:1f.7");
    ASSERT_TRUE(b.has_value());
    EXPECT_EQ(b->str(), "0000:1f:1f.7");

    EXPECT_EQ(PciAddress::parse("abcd:ff:00.0")->domain, 0xabcd);
}

TEST(PciAddress, RejectsMalformed) {
    for (const char* s : {"", "0000:03:00", "0000:03:20.0", "0000:03:00.8",
                          "000:03:00.0", "0000:3:00.0", "0000:03:00.0x",
                          "zzzz:03:00.0", "0000-03-00.0"})
        EXPECT_FALSE(PciAddress::parse(s).has_value()) << s;
}

TEST(Regions, BarKindsComeFromRegisterBits) {
    std::vector<RegionEntry> table{
        {0, 0, 0x1000, true, true, true},
        {1, 0, 0x100000, true, true, true},
        {3, 0, 0x20, true, true, false},
        {CONFIG_REGION_INDEX, 0, 0x100, true, true, false},
    };
    auto cfg = header_with_bars({0x0, 0xc, 0x0, 0x1, 0, 0});
    auto bars = parse_bar_regions(table, cfg);
    ASSERT_EQ(bars.size(), 3u);
    EXPECT_EQ(bars[0].bar, 0u);
    EXPECT_EQ(bars[0].kind, BarKind::Mem32);
    EXPECT_EQ(bars[1].bar, 1u);
    EXPECT_EQ(bars[1].kind, BarKind::Mem64);
    EXPECT_TRUE(bars[1].prefetchable);
    EXPECT_EQ(bars[2].bar, 3u);
    EXPECT_EQ(bars[2].kind, BarKind::Io);
    EXPECT_EQ(bars[2].size, 0x20u);
}

TEST(Regions, EmptyRegionsSkippedAndShortHeaderRejected) {
    std::vector<RegionEntry> table{{0, 0, 0, false, false, false}};
    EXPECT_TRUE(parse_bar_regions(table, header_with_bars({})).empty());
    std::vector<u8> short_cfg(0x20);
    EXPECT_THROW(parse_bar_regions(table, short_cfg), MalformedConfig);
    EXPECT_EQ(find_region(table, 0), &table[0]);
    EXPECT_EQ(find_region(table, 5), nullptr);
}

TEST(Regions, DmaArgumentChecks) {
    alignas(4096) static u8 page[8192];
    EXPECT_NO_THROW(check_dma_args(0x1000, page, 4096, 4096));
    EXPECT_THROW(check_dma_args(0x1000, page, 0, 4096), ConfigError);
    EXPECT_THROW(check_dma_args(0x1001, page, 4096, 4096), ConfigError);
    EXPECT_THROW(check_dma_args(0x1000, page + 1, 4096, 4096), ConfigError);
    EXPECT_THROW(check_dma_args(0x1000, page, 100, 4096), ConfigError);
    EXPECT_THROW(check_dma_args(~0ull - 4095, page, 8192, 4096), ConfigError);
}

TEST(Regions, WriteMismatchesListDifferingBytes) {
    const std::array<u8, 4> written{0xff, 0xff, 0x00, 0x12};
    const std::array<u8, 4> back{0xff, 0x0f, 0x00, 0x13};
    EXPECT_EQ(write_mismatches(0x10, written, back),
              (std::vector<u32>{0x11, 0x13}));
    EXPECT_TRUE(write_mismatches(0, written, written).empty());
}

TEST(IrqInbox, PreservesOrderAndMultiplicity) {
    IrqInbox inbox;
    inbox.push({IrqKind::MsiX, 1, {}, true}, 3);
    inbox.push({IrqKind::MsiX, 0, {}, true});
    EXPECT_EQ(inbox.size(), 4u);
    auto evs = inbox.drain();
    ASSERT_EQ(evs.size(), 4u);
    EXPECT_EQ(evs[0].index, 1u);
    EXPECT_EQ(evs[2].index, 1u);
    EXPECT_EQ(evs[3].index, 0u);
    EXPECT_TRUE(inbox.drain().empty());
}

TEST(IrqListener, EventfdSignalsBecomeEvents) {
    const int a = ::eventfd(0, EFD_CLOEXEC | EFD_NONBLOCK);
    const int b = ::eventfd(0, EFD_CLOEXEC | EFD_NONBLOCK);
    ASSERT_GE(a, 0);
    ASSERT_GE(b, 0);

    IrqInbox inbox;
    {
        IrqListener listener(inbox, {{a, IrqKind::MsiX, 0},
                                     {b, IrqKind::MsiX, 1}});
        ASSERT_EQ(::eventfd_write(a, 1), 0);
        ASSERT_TRUE(wait_for(inbox, 1));
        ASSERT_EQ(::eventfd_write(b, 2), 0);
        ASSERT_TRUE(wait_for(inbox, 3));
        listener.stop();
        listener.stop();
    }

    auto evs = inbox.drain();
    ASSERT_EQ(evs.size(), 3u);
    EXPECT_EQ(evs[0].index, 0u);
    EXPECT_EQ(evs[1].index, 1u);
    EXPECT_EQ(evs[2].index, 1u);
    ::close(a);
    ::close(b);
}

TEST_F(FakeSysfs, MalformedAddressIsConfigError) {
    EXPECT_THROW(VfioBackend::open("not-an-address", paths), ConfigError);
}

TEST_F(FakeSysfs, MissingDeviceIsReported) {
    EXPECT_NE(open_error("0000:01:00.0").find("no PCI device 0000:01:00.0"),
              std::string::npos);
}

TEST_F(FakeSysfs, MissingIommuGroupIsReported) {
    add_device("0000:01:00.0");
    EXPECT_NE(open_error("0000:01:00.0").find("IOMMU unavailable"),
              std::string::npos);
}

TEST_F(FakeSysfs, WrongDriverSuggestsVfioPci) {
    fs::path d = add_device("0000:01:00.0");
    fs::create_directories(root / "groups" / "12");
    fs::create_directory_symlink(root / "groups" / "12", d / "iommu_group");
    fs::create_directories(root / "drivers" / "e1000e");
    fs::create_directory_symlink(root / "drivers" / "e1000e", d / "driver");
    const std::string err = open_error("0000:01:00.0");
    EXPECT_NE(err.find("e1000e"), std::string::npos) << err;
    EXPECT_NE(err.find("vfio-pci"), std::string::npos) << err;
}

TEST_F(FakeSysfs, MissingContainerIsIommuUnavailable) {
    fs::path d = add_device("0000:01:00.0");
    fs::create_directories(root / "groups" / "12");
    fs::create_directory_symlink(root / "groups" / "12", d / "iommu_group");
    fs::create_directories(root / "drivers" / "vfio-pci");
    fs::create_directory_symlink(root / "drivers" / "vfio-pci", d / "driver");
    EXPECT_NE(open_error("0000:01:00.0").find("IOMMU unavailable"),
              std::string::npos);
}

TEST(VfioHardware, OpensBoundDevice) {
    const char* addr = std::getenv("VPCIE_VFIO_DEVICE");
    if (!addr || !*addr)
        GTEST_SKIP() << "VPCIE_VFIO_DEVICE not set";

    auto dev = VfioBackend::open(addr);
    std::array<u8, 2> vendor{};
    ASSERT_EQ(dev->config_read(PCI_VENDOR_ID, vendor), Response::Ok);
    EXPECT_NE(load_le(vendor), 0u);
    EXPECT_NE(load_le(vendor), 0xffffu);

    for (const RegionInfo& r : dev->region_info())
        EXPECT_TRUE(dev->region_mapped(r.bar) || dev->region_fallback(r.bar));

    const std::size_t page = static_cast<std::size_t>(sysconf(_SC_PAGESIZE));
    void* buf = std::aligned_alloc(page, page);
    ASSERT_NE(buf, nullptr);
    dev->map_dma(0x100000, std::span(static_cast<u8*>(buf), page), DMA_RW);
    EXPECT_EQ(dev->dma_map_calls(), 1u);
    dev->unmap_dma(0x100000, page);
    dev.reset();
    std::free(buf);
}
