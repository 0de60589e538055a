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

#include "vpcie/msi_controller.h"
#include "vpcie/sim/kernel.h"

using namespace vpcie;

namespace {

Response bus_write32(BusTarget& t, u64 addr, u32 value) {
    std::array<u8, 4> b{};
    store_le(b, value);
    auto txn = GenericPayload::write(addr, b);
    SimTime d;
    t.transport(txn, d);
    return txn.response;
}

} // namespace

TEST(MsiController, TyperEncodesRange) {
    EXPECT_EQ(MsiController::encode_typer(64, 32), 0x00400020u);
    auto [base, num] = MsiController::decode_typer(0x00400020);
    EXPECT_EQ(base, 64u);
    EXPECT_EQ(num, 32u);

    MsiController msi("msi", {0x08000000, 96, 8});
    auto txn = GenericPayload::read(0x08000008, 4);
    SimTime d;
    msi.transport(txn, d);
    EXPECT_EQ(txn.response, Response::Ok);
    EXPECT_EQ(txn.value(), MsiController::encode_typer(96, 8));
}

TEST(MsiController, SetspiPulsesMatchingLine) {
    MsiController msi("msi", {});
    int edges = 0;
    msi.line(3).observe([&](bool level) { edges += level ? 1 : 0; });

    EXPECT_EQ(bus_write32(msi, msi.doorbell_address(), 67), Response::Ok);
    EXPECT_EQ(edges, 1);
    EXPECT_EQ(msi.pulse_count(3), 1u);
    EXPECT_FALSE(msi.line(3).level());
    EXPECT_EQ(msi.line(3).rising_edges(), 1u);
    EXPECT_EQ(msi.warnings(), 0u);
}

TEST(MsiController, OutOfRangeAndWrongRegisterWarn) {
    MsiController msi("msi", {});
    EXPECT_EQ(bus_write32(msi, 0x08000040, 63), Response::Ok);
    EXPECT_EQ(bus_write32(msi, 0x08000040, 96), Response::Ok);
    EXPECT_EQ(bus_write32(msi, 0x08000044, 64), Response::Ok);
    EXPECT_EQ(msi.warnings(), 3u);
    for (u32 i = 0; i < 32; i++)
        EXPECT_EQ(msi.pulse_count(i), 0u);

    EXPECT_EQ(bus_write32(msi, 0x08001000, 64), Response::AddressError);
    EXPECT_EQ(msi.doorbell_write(0x2000, 64), Response::AddressError);
}

TEST(MsiController, NarrowWriteIsIgnored) {
    MsiController msi("msi", {});
    std::array<u8, 2> b{64, 0};
    auto txn = GenericPayload::write(0x08000040, b);
    SimTime d;
    msi.transport(txn, d);
    EXPECT_EQ(txn.response, Response::Ok);
    EXPECT_EQ(msi.pulse_count(0), 0u);
    EXPECT_EQ(msi.warnings(), 1u);
}

TEST(MsiController, InvalidRangesRejected) {
    EXPECT_THROW(MsiController("m", {0, 64, 0}), ConfigError);
    EXPECT_THROW(MsiController("m", {0, 1000, 100}), ConfigError);
}

TEST(MsiController, ReachableThroughBus) {
    Kernel k;
    Bus bus(k);
    MsiController msi("msi", {});
    bus.map(0x08000000, MsiController::REGION_SIZE, msi);
    EXPECT_EQ(bus_write32(bus, 0x08000040, 65), Response::Ok);
    EXPECT_EQ(msi.pulse_count(1), 1u);
}
