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

#include <vector>

#include "vpcie/ram.h"
#include "vpcie/sim/kernel.h"
#include "vpcie/sim/transport.h"

using namespace vpcie;

namespace {

class Echo : public BusTarget {
public:
    explicit Echo(SimTime latency = {}): BusTarget("echo", latency) {}

    std::vector<u64> seen;

protected:
    void do_transport(GenericPayload& txn, SimTime&) override {
        seen.push_back(txn.address);
        if (txn.is_read())
            std::fill(txn.data.begin(), txn.data.end(), 0x5a);
        txn.response = Response::Ok;
    }
};

} // namespace

TEST(SimTime, UnitsAndFormatting) {
    EXPECT_EQ(SimTime::ns(1).picoseconds(), 1000u);
    EXPECT_EQ(SimTime::us(1), SimTime::ns(1000));
    EXPECT_EQ(SimTime::ms(10).str(), "10ms");
    EXPECT_EQ(SimTime::ps(1500).str(), "1500ps");
    EXPECT_EQ(SimTime().str(), "0ps");
}

TEST(SimTime, ParseAcceptsUnitsAndBareNanoseconds) {
    EXPECT_EQ(SimTime::parse("10ms"), SimTime::ms(10));
    EXPECT_EQ(SimTime::parse("1us"), SimTime::us(1));
    EXPECT_EQ(SimTime::parse("250"), SimTime::ns(250));
    EXPECT_EQ(SimTime::parse("7ps"), SimTime::ps(7));
    EXPECT_FALSE(SimTime::parse("").has_value());
    EXPECT_FALSE(SimTime::parse("5 parsecs").has_value());
    EXPECT_FALSE(SimTime::parse("-1ns").has_value());
}

TEST(SimTime, AdditionSaturates) {
    EXPECT_EQ(SimTime::max() + SimTime::ns(1), SimTime::max());
}

TEST(Kernel, SameTimeEventsRunInInsertionOrder) {
    Kernel k;
    std::vector<int> order;
    k.schedule([&] { order.push_back(1); }, SimTime::ns(10));
    k.schedule([&] { order.push_back(2); }, SimTime::ns(10));
    k.schedule([&] { order.push_back(0); }, SimTime::ns(5));
    k.run_until(SimTime::ns(20));
    EXPECT_EQ(order, (std::vector<int>{0, 1, 2}));
    EXPECT_EQ(k.now(), SimTime::ns(20));
}

TEST(Kernel, RunUntilStopsAtLimit) {
    Kernel k;
    int fired = 0;
    k.schedule([&] { fired++; }, SimTime::ns(10));
    k.schedule([&] { fired++; }, SimTime::ns(30));
    k.run_until(SimTime::ns(20));
    EXPECT_EQ(fired, 1);
    EXPECT_EQ(k.now(), SimTime::ns(20));
    EXPECT_EQ(k.pending_events(), 1u);
}

TEST(Kernel, EventsScheduledFromCallbacksUseCurrentTime) {
    Kernel k;
    SimTime inner;
    k.schedule(
        [&] {
            k.schedule([&] { inner = k.now(); }, SimTime::ns(5));
        },
        SimTime::ns(10));
    k.run_until(SimTime::us(1));
    EXPECT_EQ(inner, SimTime::ns(15));
}

TEST(Kernel, CancelRemovesPendingEvent) {
    Kernel k;
    int fired = 0;
    auto h = k.schedule([&] { fired++; }, SimTime::ns(1));
    EXPECT_TRUE(k.cancel(h));
    EXPECT_FALSE(k.cancel(h));
    k.run_until(SimTime::ns(10));
    EXPECT_EQ(fired, 0);
}

TEST(Kernel, StopReturnsAtEventTime) {
    Kernel k;
    k.schedule([&] { k.stop(); }, SimTime::ns(7));
    k.schedule([] {}, SimTime::ns(9));
    EXPECT_EQ(k.run_until(SimTime::ns(100)), SimTime::ns(7));
    EXPECT_EQ(k.now(), SimTime::ns(7));
    EXPECT_EQ(k.pending_events(), 1u);
}

TEST(Kernel, ScheduleAfterFinishThrows) {
    Kernel k;
    k.finish();
    EXPECT_THROW(k.schedule([] {}, SimTime()), LifecycleError);
    EXPECT_THROW(k.run_until(SimTime::ns(1)), LifecycleError);
}

TEST(Kernel, ElaborationRejectsUnboundSocket) {
    Kernel k;
    InitiatorSocket s(k, "dangling");
    EXPECT_THROW(k.elaborate(), ElaborationError);
}

TEST(Transport, LatencyAccumulatesIntoDelay) {
    Kernel k;
    Echo target(SimTime::ns(3));
    InitiatorSocket s(k, "cpu");
    s.bind(target);

    auto txn = GenericPayload::read(0x10, 4);
    SimTime delay = SimTime::ns(2);
    s.b_transport(txn, delay);
    EXPECT_TRUE(txn.ok());
    EXPECT_EQ(delay, SimTime::ns(5));
    EXPECT_EQ(txn.value(), 0x5a5a5a5au);
}

TEST(Transport, EmptyPayloadIsCommandError) {
    Kernel k;
    Echo target;
    InitiatorSocket s(k, "cpu");
    s.bind(target);
    GenericPayload txn;
    SimTime delay;
    s.b_transport(txn, delay);
    EXPECT_EQ(txn.response, Response::CommandError);
    EXPECT_TRUE(target.seen.empty());
}

TEST(Transport, BindTwiceOrAfterElaborationThrows) {
    Kernel k;
    Echo a, b;
    InitiatorSocket s(k, "cpu");
    s.bind(a);
    EXPECT_THROW(s.bind(b), ElaborationError);

    k.elaborate();
    InitiatorSocket late(k, "late");
    EXPECT_THROW(late.bind(a), LifecycleError);
}

TEST(Bus, ForwardsAbsoluteAddresses) {
    Kernel k;
    Bus bus(k);
    Echo dev;
    bus.map(0x1000, 0x100, dev);
    InitiatorSocket cpu(k, "cpu");
    cpu.bind(bus);

    auto txn = GenericPayload::read(0x1010, 4);
    SimTime d;
    cpu.b_transport(txn, d);
    EXPECT_TRUE(txn.ok());
    ASSERT_EQ(dev.seen.size(), 1u);
    EXPECT_EQ(dev.seen[0], 0x1010u);
}

TEST(Bus, UnmappedAndStraddlingAccessesFail) {
    Kernel k;
    Bus bus(k);
    Echo dev;
    bus.map(0x1000, 0x100, dev);
    InitiatorSocket cpu(k, "cpu");
    cpu.bind(bus);

    SimTime d;
    auto miss = GenericPayload::read(0x2000, 4);
    cpu.b_transport(miss, d);
    EXPECT_EQ(miss.response, Response::AddressError);

    auto straddle = GenericPayload::read(0x10fe, 4);
    cpu.b_transport(straddle, d);
    EXPECT_EQ(straddle.response, Response::AddressError);
    EXPECT_TRUE(dev.seen.empty());
}

TEST(Bus, OverlappingMappingsRejected) {
    Kernel k;
    Bus bus(k);
    Echo a, b;
    bus.map(0x1000, 0x100, a);
    EXPECT_THROW(bus.map(0x10ff, 0x10, b), ConfigError);
    EXPECT_THROW(bus.map(0x0, 0, b), ConfigError);
}

TEST(Bus, DmiIsClippedToMapping) {
    Kernel k;
    Bus bus(k);
    Ram ram("ram", 0x0, 0x10000);
    bus.map(0x0, 0x8000, ram);
    auto dmi = bus.get_dmi(0x100);
    ASSERT_TRUE(dmi.has_value());
    EXPECT_EQ(dmi->start, 0x0u);
    EXPECT_EQ(dmi->end, 0x7fffu);
    EXPECT_EQ(dmi->host_buffer.size(), 0x8000u);
}

TEST(Bus, DmiInvalidationPropagatesUpstream) {
    Kernel k;
    Bus bus(k);
    Ram ram("ram", 0x0, 0x1000);
    bus.map(0x0, 0x1000, ram);
    InitiatorSocket cpu(k, "cpu");
    cpu.bind(bus);

    std::vector<std::pair<u64, u64>> got;
    cpu.on_dmi_invalidate([&](u64 lo, u64 hi) { got.emplace_back(lo, hi); });
    ram.invalidate_dmi(0x100, 0x1ff);
    ASSERT_EQ(got.size(), 1u);
    EXPECT_EQ(got[0], std::make_pair(u64(0x100), u64(0x1ff)));
}

TEST(SignalLine, NotifiesOnTransitionsOnly) {
    SignalLine line("irq");
    int calls = 0;
    line.observe([&](bool) { calls++; });
    line.set(false);
    line.set(true);
    line.set(true);
    line.set(false);
    EXPECT_EQ(calls, 2);
    EXPECT_EQ(line.rising_edges(), 1u);
    line.pulse();
    EXPECT_EQ(line.rising_edges(), 2u);
    EXPECT_FALSE(line.level());
}
