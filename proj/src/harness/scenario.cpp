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


#include "vpcie/harness/scenario.h"

#include <algorithm>
#include <array>
#include <memory>
#include <numeric>
#include <random>
#include <set>

namespace vpcie::harness {

namespace {

struct StepFailed {
    std::string message;
};

constexpr std::array<std::pair<Scenario, std::string_view>, 5> NAMES = {{
    {Scenario::Enumerate, "enumerate"},
    {Scenario::EnumerateAndRun, "enumerate-and-run"},
    {Scenario::Legacy, "enumerate-and-run-legacy"},
    {Scenario::Masked, "enumerate-and-run-masked"},
    {Scenario::Msi, "enumerate-and-run-msi"},
}};

} // namespace

std::optional<Scenario> parse_scenario(std::string_view name) {
    for (const auto& [s, n] : NAMES) {
        if (n == name)
            return s;
    }
    return std::nullopt;
}

std::string_view to_string(Scenario s) {
    for (const auto& [sc, n] : NAMES) {
        if (sc == s)
            return n;
    }
    return "?";
}

std::vector<std::string_view> scenario_names() {
    std::vector<std::string_view> out;
    for (const auto& entry : NAMES)
        out.push_back(entry.second);
    return out;
}

Driver::Driver(Platform& platform, Scenario scenario):
    m_p(platform), m_scenario(scenario) {}

ScenarioResult Driver::run() {
    try {
        scan();
        size_bars();
        program_bars();
        walk_capabilities();
        read_typer();

        if (m_scenario != Scenario::Enumerate) {
            m_step = "setup-interrupts";
            switch (m_scenario) {
            case Scenario::EnumerateAndRun:
                setup_msix(false);
                break;
            case Scenario::Masked:
                setup_msix(true);
                break;
            case Scenario::Msi:
                setup_msi();
                break;
            default:
                break;
            }

            fill_source();
            start_job();
            wait_for_completion();
            verify_copy();
            verify_interrupts();
        }

        m_result.passed = true;
    } catch (const StepFailed& fail) {
        m_result.passed = false;
        m_result.failed_step = m_step;
        m_result.message = fail.message;
    }

    return m_result;
}

void Driver::check(bool ok, const std::string& what) {
    if (!ok)
        throw StepFailed{m_step + ": " + what};
}

void Driver::note(const std::string& text) {
    m_result.log.push_back(m_step + ": " + text);
}

u64 Driver::cfg_addr(u32 reg) const {
    return m_p.config().pci_host.cfg_base +
           CfgAddress{m_slot, 0, reg}.encode();
}

u64 Driver::cfg_read(u32 reg, unsigned len) {
    u64 v = 0;
    check(m_p.cpu_read(cfg_addr(reg), len, v) == Response::Ok,
          "config read at " + hex(reg) + " failed");
    return v;
}

void Driver::cfg_write(u32 reg, unsigned len, u64 value) {
    check(m_p.cpu_write(cfg_addr(reg), len, value) == Response::Ok,
          "config write at " + hex(reg) + " failed");
}

u64 Driver::mmio_read(u64 addr, unsigned len) {
    u64 v = 0;
    check(m_p.cpu_read(addr, len, v) == Response::Ok,
          "read at " + hex(addr) + " failed");
    return v;
}

void Driver::mmio_write(u64 addr, unsigned len, u64 value) {
    check(m_p.cpu_write(addr, len, value) == Response::Ok,
          "write at " + hex(addr) + " failed");
}

const Driver::Bar& Driver::bar(unsigned index) const {
    for (const Bar& b : m_bars) {
        if (b.index == index)
            return b;
    }
    throw StepFailed{m_step + ": BAR" + std::to_string(index) +
                     " not implemented"};
}

void Driver::scan() {
    m_step = "scan";
    bool found = false;
    for (unsigned slot = 0; slot < HostBridge::NUM_SLOTS && !found; slot++) {
        m_slot = slot;
        const u64 id = cfg_read(PCI_VENDOR_ID, 4);
        if ((id & 0xffff) == 0xffff)
            continue;
        found = true;
        note("slot " + std::to_string(slot) + " vendor " +
             hex(id & 0xffff, 4) + " device " + hex(id >> 16, 4));
    }
    check(found, "no device found");
    m_result.slot = m_slot;

    if (m_p.mock()) {
        check(cfg_read(PCI_VENDOR_ID, 2) == CopyCheck::VENDOR_ID,
              "unexpected vendor id");
        check(cfg_read(PCI_DEVICE_ID, 2) == CopyCheck::DEVICE_ID,
              "unexpected device id");
    }
}

void Driver::size_bars() {
    m_step = "size-bars";
    for (unsigned i = 0; i < PCI_NUM_BARS; i++) {
        const u32 reg = PCI_BAR0 + 4 * i;
        const u64 orig = cfg_read(reg, 4);
        cfg_write(reg, 4, 0xffffffff);
        const u64 mask = cfg_read(reg, 4);
        cfg_write(reg, 4, orig);
        if (mask == 0)
            continue;

        Bar b;
        b.index = i;
        if (mask & PCI_BAR_IO) {
            b.io = true;
            b.size = (~(mask & ~u64(0x3)) + 1) & 0xffff;
        } else if ((mask & 0x6) == PCI_BAR_MEM64) {
            check(i + 1 < PCI_NUM_BARS, "64-bit BAR in last slot");
            const u32 hi_reg = reg + 4;
            const u64 hi_orig = cfg_read(hi_reg, 4);
            cfg_write(hi_reg, 4, 0xffffffff);
            const u64 hi = cfg_read(hi_reg, 4);
            cfg_write(hi_reg, 4, hi_orig);
            b.is64 = true;
            b.size = ~((hi << 32) | (mask & ~u64(0xf))) + 1;
            i++;
        } else {
            b.size = (~(mask & ~u64(0xf)) + 1) & 0xffffffff;
        }

        check(is_pow2(b.size), "BAR" + std::to_string(b.index) +
                                   " size " + hex(b.size) +
                                   " is not a power of two");
        note("BAR" + std::to_string(b.index) + " " +
             (b.io ? "io" : b.is64 ? "mem64" : "mem32") + " size " +
             hex(b.size));
        m_bars.push_back(b);
    }
    check(!m_bars.empty(), "device implements no BAR");
}

void Driver::program_bars() {
    m_step = "program-bars";
    const auto& host = m_p.config().pci_host;
    u64 mem = host.mmio_window_base;
    u64 io = host.io_window_base;
    bool any_io = false;
    bool any_mem = false;

    for (Bar& b : m_bars) {
        u64& cursor = b.io ? io : mem;
        const u64 limit = b.io ? host.io_window_base + host.io_window_size
                               : host.mmio_window_base +
                                     host.mmio_window_size;
        b.base = align_up(cursor, b.size);
        check(b.base + b.size <= limit,
              "BAR" + std::to_string(b.index) + " does not fit the window");
        cursor = b.base + b.size;

        const u32 reg = PCI_BAR0 + 4 * b.index;
        cfg_write(reg, 4, b.base & 0xffffffff);
        if (b.is64)
            cfg_write(reg + 4, 4, b.base >> 32);

        const u64 low_mask = b.io ? 0x3 : 0xf;
        check((cfg_read(reg, 4) & ~low_mask) == (b.base & 0xffffffff & ~low_mask),
              "BAR" + std::to_string(b.index) + " readback mismatch");
        (b.io ? any_io : any_mem) = true;
        note("BAR" + std::to_string(b.index) + " at " + hex(b.base));
    }

    u64 cmd = cfg_read(PCI_COMMAND, 2);
    cmd |= PCI_COMMAND_MASTER;
    if (any_mem)
        cmd |= PCI_COMMAND_MEMORY;
    if (any_io)
        cmd |= PCI_COMMAND_IO;
    cfg_write(PCI_COMMAND, 2, cmd);
    check((cfg_read(PCI_COMMAND, 2) & cmd) == cmd, "command bits not set");
    check(m_p.host().decode_table().size() == m_bars.size(),
          "host bridge decodes " +
              std::to_string(m_p.host().decode_table().size()) + " of " +
              std::to_string(m_bars.size()) + " BARs");

    m_result.bar0_base = m_bars.front().base;
}

void Driver::walk_capabilities() {
    m_step = "capabilities";
    if (!(cfg_read(PCI_STATUS, 2) & PCI_STATUS_CAP_LIST)) {
        note("no capability list");
        return;
    }

    std::set<u32> seen;
    u32 ptr = cfg_read(PCI_CAP_PTR, 1) & ~3u;
    while (ptr != 0) {
        check(ptr >= 0x40 && ptr < ConfigSpace::SIZE,
              "capability pointer " + hex(ptr) + " out of range");
        check(seen.insert(ptr).second, "capability loop at " + hex(ptr));

        const u8 id = static_cast<u8>(cfg_read(ptr, 1));
        if (id == PCI_CAP_ID_MSI)
            m_msi_cap = static_cast<u8>(ptr);
        else if (id == PCI_CAP_ID_MSIX)
            m_msix_cap = static_cast<u8>(ptr);
        note("capability " + hex(id, 2) + " at " + hex(ptr, 2));
        ptr = cfg_read(ptr + 1, 1) & ~3u;
    }
}

void Driver::read_typer() {
    m_step = "msi-typer";
    const u64 typer = mmio_read(m_p.config().msi.doorbell_base +
                                    MsiController::TYPER,
                                4);
    std::tie(m_base_spi, m_num_spis) =
        MsiController::decode_typer(static_cast<u32>(typer));
    check(m_base_spi == m_p.config().msi.base_spi &&
              m_num_spis == m_p.config().msi.num_spis,
          "TYPER reports " + std::to_string(m_base_spi) + "/" +
              std::to_string(m_num_spis));
    note("SPIs " + std::to_string(m_base_spi) + ".." +
         std::to_string(m_base_spi + m_num_spis - 1));
}

void Driver::setup_msix(bool mask_done) {
    check(m_msix_cap.has_value(), "device has no MSI-X capability");
    const u32 cap = *m_msix_cap;

    const u64 flags = cfg_read(cap + PCI_MSIX_FLAGS, 2);
    const u32 n = static_cast<u32>(flags & PCI_MSIX_QSIZE_MASK) + 1;
    const u64 table = cfg_read(cap + PCI_MSIX_TABLE, 4);
    check(n <= m_num_spis, std::to_string(n) + " vectors exceed " +
                               std::to_string(m_num_spis) + " SPIs");

    const u64 base = bar(table & PCI_MSIX_BIR_MASK).base + (table & ~7ull);
    const u64 doorbell = m_p.config().msi.doorbell_base + MsiController::SETSPI;
    for (u32 v = 0; v < n; v++) {
        const u64 entry = base + u64(v) * PCI_MSIX_ENTRY_SIZE;
        mmio_write(entry + 0, 4, doorbell & 0xffffffff);
        mmio_write(entry + 4, 4, doorbell >> 32);
        mmio_write(entry + 8, 4, m_base_spi + v);
        mmio_write(entry + PCI_MSIX_ENTRY_CTRL, 4,
                   mask_done && v == CopyCheck::VECTOR_DONE
                       ? u32(PCI_MSIX_ENTRY_MASKED)
                       : 0u);
    }
    check(mmio_read(base + 8, 4) == m_base_spi, "table readback mismatch");

    cfg_write(cap + PCI_MSIX_FLAGS, 2,
              (flags | PCI_MSIX_ENABLE) & ~u64(PCI_MSIX_MASKALL));
    check(m_p.device().irq_mode() == IrqMode::MsiX, "MSI-X not enabled");
    note(std::to_string(n) + " MSI-X vectors programmed" +
         (mask_done ? ", vector 0 masked" : ""));
}

void Driver::setup_msi() {
    check(m_msi_cap.has_value(), "device has no MSI capability");
    const u32 cap = *m_msi_cap;

    const u64 flags = cfg_read(cap + PCI_MSI_FLAGS, 2);
    const bool is64 = flags & PCI_MSI_64BIT;
    const u64 doorbell = m_p.config().msi.doorbell_base + MsiController::SETSPI;

    cfg_write(cap + PCI_MSI_ADDRESS_LO, 4, doorbell & 0xffffffff);
    if (is64)
        cfg_write(cap + PCI_MSI_ADDRESS_LO + 4, 4, doorbell >> 32);
    cfg_write(cap + (is64 ? 0x0c : 0x08), 2, m_base_spi);
    cfg_write(cap + PCI_MSI_FLAGS, 2,
              (flags & ~u64(PCI_MSI_MME_MASK)) | PCI_MSI_ENABLE);

    check(cfg_read(cap + PCI_MSI_ADDRESS_LO, 4) == (doorbell & 0xffffffff),
          "MSI address readback mismatch");
    check(m_p.device().irq_mode() == IrqMode::Msi, "MSI not enabled");
}

void Driver::fill_source() {
    m_step = "fill-source";
    const auto& job = m_p.config().job;
    std::mt19937 gen(static_cast<std::mt19937::result_type>(job.seed));
    m_expected.resize(job.len);
    for (u8& b : m_expected)
        b = static_cast<u8>(gen() & 0xff);

    auto store = m_p.ram().store();
    std::copy(m_expected.begin(), m_expected.end(),
              store.begin() + job.src_offset);
    std::fill_n(store.begin() + job.dst_offset, job.len, 0);
}

void Driver::start_job() {
    m_step = "start-job";
    const auto& cfg = m_p.config();
    const u64 regs = bar(0).base;
    const u64 src = cfg.ram.base + cfg.job.src_offset;
    const u64 dst = cfg.ram.base + cfg.job.dst_offset;

    check(mmio_read(regs + CopyCheck::REG_ID, 4) == CopyCheck::ID_VALUE,
          "engine id mismatch");
    mmio_write(regs + CopyCheck::REG_SRC, 4, src & 0xffffffff);
    mmio_write(regs + CopyCheck::REG_SRC + 4, 4, src >> 32);
    mmio_write(regs + CopyCheck::REG_DST, 4, dst & 0xffffffff);
    mmio_write(regs + CopyCheck::REG_DST + 4, 4, dst >> 32);
    mmio_write(regs + CopyCheck::REG_LEN, 4, cfg.job.len);
    mmio_write(regs + CopyCheck::REG_CTRL, 4,
               CopyCheck::CTRL_START | CopyCheck::CTRL_IRQ_ENABLE);
    m_result.job_start = m_p.kernel().now();
    note("LEN " + std::to_string(cfg.job.len) + " started at " +
         m_p.kernel().now().str());
}

void Driver::wait_for_completion() {
    m_step = "wait-completion";
    Kernel& kernel = m_p.kernel();
    const SimTime deadline = m_p.config().timeout;
    auto seen = std::make_shared<bool>(false);
    auto observer = [seen, &kernel](bool level) -> void {
        if (level && !*seen) {
            *seen = true;
            kernel.stop();
        }
    };

    if (m_scenario == Scenario::Masked) {
        const u64 status = bar(0).base + CopyCheck::REG_STATUS;
        while (kernel.now() < deadline) {
            kernel.run_until(std::min(kernel.now() + SimTime::us(1), deadline));
            if (!(mmio_read(status, 4) & CopyCheck::STATUS_BUSY)) {
                *seen = true;
                break;
            }
        }
    } else {
        if (m_scenario == Scenario::Legacy)
            m_p.host().intx(PciPin::A).observe(observer);
        else
            m_p.msi().line(0).observe(observer);

        while (!*seen && kernel.now() < deadline)
            kernel.run_until(deadline);
    }

    check(*seen, "no completion before " + deadline.str());
    m_result.job_observed = kernel.now();
    note("completion observed at " + kernel.now().str());
}

void Driver::verify_copy() {
    m_step = "verify-copy";
    const auto& cfg = m_p.config();
    const u64 regs = bar(0).base;

    const u64 status = mmio_read(regs + CopyCheck::REG_STATUS, 4);
    check(!(status & CopyCheck::STATUS_ERROR), "engine reported an error");
    check(status == CopyCheck::STATUS_DONE,
          "STATUS is " + hex(status) + ", expected done");

    const u32 sum = std::accumulate(m_expected.begin(), m_expected.end(),
                                    u32(0));
    m_result.checksum =
        static_cast<u32>(mmio_read(regs + CopyCheck::REG_CHECKSUM, 4));
    check(m_result.checksum == sum, "CHECKSUM " + hex(m_result.checksum) +
                                        " != " + hex(sum));

    auto store = m_p.ram().store();
    check(std::equal(m_expected.begin(), m_expected.end(),
                     store.begin() + cfg.job.dst_offset),
          "destination differs from source");
    note("copy and checksum verified");
}

void Driver::verify_interrupts() {
    m_step = "verify-interrupts";
    const u32 len = m_p.config().job.len;
    MsiController& msi = m_p.msi();
    const u64 chunk = m_p.mock() ? m_p.mock()->timing().chunk_size
                                 : CopyCheckTiming{}.chunk_size;
    const u64 chunks = (len + chunk - 1) / chunk;

    u64 total = 0;
    for (u32 i = 0; i < m_num_spis; i++)
        total += msi.pulse_count(i);

    if (CopyCheck* mock = m_p.mock(); mock && m_scenario != Scenario::Masked) {
        check(m_result.job_observed.has_value() &&
                  *m_result.job_observed - *m_result.job_start ==
                      SimTime::ns(len),
              "completion at " + m_result.job_observed->str() +
                  ", expected start + " + std::to_string(len) + " ns");
    }

    switch (m_scenario) {
    case Scenario::EnumerateAndRun:
        check(msi.pulse_count(1) == chunks,
              "vector 1 pulsed " + std::to_string(msi.pulse_count(1)) +
                  " times, expected " + std::to_string(chunks));
        check(msi.pulse_count(0) == 1, "vector 0 pulsed " +
                                           std::to_string(msi.pulse_count(0)) +
                                           " times");
        check(total == chunks + 1, "unexpected doorbell writes");
        break;

    case Scenario::Msi:
        check(msi.pulse_count(0) == 1 && total == 1,
              "expected exactly one MSI, saw " + std::to_string(total));
        break;

    case Scenario::Legacy: {
        SignalLine& inta = m_p.host().intx(PciPin::A);
        check(inta.rising_edges() == 1,
              "INTA asserted " + std::to_string(inta.rising_edges()) +
                  " times");
        check(total == 0, "doorbell written in legacy mode");
        mmio_write(bar(0).base + CopyCheck::REG_CTRL, 4, 0);
        check(!inta.level(), "INTA still asserted after acknowledge");
        break;
    }

    case Scenario::Masked: {
        check(m_msix_cap.has_value(), "no MSI-X capability");
        const u32 cap = *m_msix_cap;
        const u64 table = cfg_read(cap + PCI_MSIX_TABLE, 4);
        const u64 pba = cfg_read(cap + PCI_MSIX_PBA, 4);
        const u64 entry0 = bar(table & PCI_MSIX_BIR_MASK).base +
                           (table & ~7ull);
        const u64 pba_addr = bar(pba & PCI_MSIX_BIR_MASK).base + (pba & ~7ull);

        check(msi.pulse_count(1) == chunks, "chunk vector count mismatch");
        check(msi.pulse_count(0) == 0, "masked vector reached the doorbell");
        check(mmio_read(pba_addr, 8) & 1, "PBA bit 0 not pending");

        mmio_write(entry0 + PCI_MSIX_ENTRY_CTRL, 4, 0);
        check(msi.pulse_count(0) == 1,
              "unmask delivered " + std::to_string(msi.pulse_count(0)) +
                  " doorbell writes");
        check(!(mmio_read(pba_addr, 8) & 1), "PBA bit 0 still pending");
        break;
    }

    case Scenario::Enumerate:
        break;
    }

    note("interrupts verified");
}

RunOutcome run_scenario(const PlatformConfig& cfg, const std::string& name) {
    return run_scenario(cfg, name, nullptr);
}

RunOutcome run_scenario(const PlatformConfig& cfg, const std::string& name,
                        const Platform::BackendFactory& factory) {
    RunOutcome out;
    auto scenario = parse_scenario(name);
    if (!scenario) {
        out.exit_code = EXIT_CONFIG_ERROR;
        out.result.message = "unknown scenario '" + name + "'";
        return out;
    }

    try {
        std::unique_ptr<Platform> p = factory
                                          ? std::make_unique<Platform>(cfg,
                                                                       factory)
                                          : std::make_unique<Platform>(cfg);
        p->elaborate();

        Driver driver(*p, *scenario);
        out.result = driver.run();
        out.exit_code = out.result.passed ? EXIT_OK : EXIT_CHECK_FAILED;
        out.stats = compute_stats(name, p->trace().records(), p->warnings());

        if (!cfg.trace_path.empty())
            write_trace(cfg.trace_path, p->trace().records());
        if (!cfg.stats_path.empty())
            write_stats(cfg.stats_path, out.stats);
    } catch (const BackendError& err) {
        out.exit_code = EXIT_BACKEND_ERROR;
        out.result.message = err.what();
    } catch (const ConfigError& err) {
        out.exit_code = EXIT_CONFIG_ERROR;
        out.result.message = err.what();
    } catch (const ElaborationError& err) {
        out.exit_code = EXIT_CONFIG_ERROR;
        out.result.message = err.what();
    } catch (const MalformedConfig& err) {
        out.exit_code = EXIT_BACKEND_ERROR;
        out.result.message = err.what();
    } catch (const Error& err) {
        out.exit_code = EXIT_CHECK_FAILED;
        out.result.message = err.what();
    }

    return out;
}

} // namespace vpcie::harness
