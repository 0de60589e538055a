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


#include "vpcie/harness/config.h"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "vpcie/msi_controller.h"
#include "vpcie/vfio/address.h"

namespace vpcie::harness {

namespace {

std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

struct Range {
    const char* field;
    u64 base;
    u64 size;
};

bool overlaps(const Range& a, const Range& b) {
    return a.base < b.base + b.size && b.base < a.base + a.size;
}

std::string describe(u64 base, u64 size) {
    return hex(base) + "+" + hex(size);
}

using Setter = std::function<void(PlatformConfig&, std::string_view)>;

const std::map<std::string, Setter, std::less<>>& setters() {
    auto u64_field = [](auto get) -> Setter {
        return [get](PlatformConfig& c, std::string_view v) -> void {
            get(c) = parse_number(v);
        };
    };
    auto u32_field = [](auto get) -> Setter {
        return [get](PlatformConfig& c, std::string_view v) -> void {
            const u64 n = parse_number(v);
            if (n > 0xffffffffull)
                throw ConfigError("value " + std::string(v) +
                                  " does not fit in 32 bits");
            get(c) = static_cast<u32>(n);
        };
    };
    auto time_field = [](auto get) -> Setter {
        return [get](PlatformConfig& c, std::string_view v) -> void {
            auto t = SimTime::parse(v);
            if (!t)
                throw ConfigError("invalid duration '" + std::string(v) + "'");
            get(c) = *t;
        };
    };
    auto string_field = [](auto get) -> Setter {
        return [get](PlatformConfig& c, std::string_view v) -> void {
            get(c) = std::string(v);
        };
    };

    using C = PlatformConfig;
    static const std::map<std::string, Setter, std::less<>> table = {
        {"ram.base", u64_field([](C& c) -> u64& { return c.ram.base; })},
        {"ram.size", u64_field([](C& c) -> u64& { return c.ram.size; })},
        {"pci_host.cfg_base",
         u64_field([](C& c) -> u64& { return c.pci_host.cfg_base; })},
        {"pci_host.cfg_size",
         u64_field([](C& c) -> u64& { return c.pci_host.cfg_size; })},
        {"pci_host.mmio_window_base",
         u64_field([](C& c) -> u64& { return c.pci_host.mmio_window_base; })},
        {"pci_host.mmio_window_size",
         u64_field([](C& c) -> u64& { return c.pci_host.mmio_window_size; })},
        {"pci_host.io_window_base",
         u64_field([](C& c) -> u64& { return c.pci_host.io_window_base; })},
        {"pci_host.io_window_size",
         u64_field([](C& c) -> u64& { return c.pci_host.io_window_size; })},
        {"msi.doorbell_base",
         u64_field([](C& c) -> u64& { return c.msi.doorbell_base; })},
        {"msi.base_spi",
         u32_field([](C& c) -> u32& { return c.msi.base_spi; })},
        {"msi.num_spis",
         u32_field([](C& c) -> u32& { return c.msi.num_spis; })},
        {"device.backend",
         [](C& c, std::string_view v) -> void {
             if (v == "mock")
                 c.device.backend = BackendKind::Mock;
             else if (v == "vfio")
                 c.device.backend = BackendKind::Vfio;
             else
                 throw ConfigError("expected 'mock' or 'vfio', got '" +
                                   std::string(v) + "'");
         }},
        {"device.sysfs_address",
         string_field(
             [](C& c) -> std::string& { return c.device.sysfs_address; })},
        {"device.slot",
         [](C& c, std::string_view v) -> void {
             c.device.slot = static_cast<unsigned>(parse_number(v));
         }},
        {"dma_window.base",
         u64_field([](C& c) -> u64& { return c.dma_window.base; })},
        {"dma_window.size",
         u64_field([](C& c) -> u64& { return c.dma_window.size; })},
        {"quantum", time_field([](C& c) -> SimTime& { return c.quantum; })},
        {"timeout", time_field([](C& c) -> SimTime& { return c.timeout; })},
        {"trace_path",
         string_field([](C& c) -> std::string& { return c.trace_path; })},
        {"stats_path",
         string_field([](C& c) -> std::string& { return c.stats_path; })},
        {"job.len", u32_field([](C& c) -> u32& { return c.job.len; })},
        {"job.seed", u64_field([](C& c) -> u64& { return c.job.seed; })},
        {"job.src_offset",
         u64_field([](C& c) -> u64& { return c.job.src_offset; })},
        {"job.dst_offset",
         u64_field([](C& c) -> u64& { return c.job.dst_offset; })},
    };
    return table;
}

} // namespace

std::string_view to_string(BackendKind kind) {
    return kind == BackendKind::Mock ? "mock" : "vfio";
}

u64 parse_number(std::string_view text) {
    text = trim(text);
    u64 scale = 1;
    if (!text.empty()) {
        switch (text.back()) {
        case 'K': case 'k': scale = 1ull << 10; break;
        case 'M': case 'm': scale = 1ull << 20; break;
        case 'G': case 'g': scale = 1ull << 30; break;
        default: break;
        }
        if (scale != 1)
            text.remove_suffix(1);
    }

    int base = 10;
    if (text.starts_with("0x") || text.starts_with("0X")) {
        base = 16;
        text.remove_prefix(2);
    }

    std::string digits;
    for (char ch : text) {
        if (ch != '_')
            digits += ch;
    }

    u64 v = 0;
    auto [end, ec] = std::from_chars(digits.data(),
                                     digits.data() + digits.size(), v, base);
    if (digits.empty() || ec != std::errc() ||
        end != digits.data() + digits.size() ||
        (scale != 1 && v > ~u64(0) / scale))
        throw ConfigError("invalid number '" + std::string(text) + "'");
    return v * scale;
}

void PlatformConfig::set(std::string_view key, std::string_view value) {
    const auto& table = setters();
    auto it = table.find(key);
    if (it == table.end())
        throw ConfigError(std::string(key) + ": unknown key");
    try {
        it->second(*this, trim(value));
    } catch (const ConfigError& err) {
        throw ConfigError(std::string(key) + ": " + err.what());
    }
}

void PlatformConfig::validate() const {
    auto require = [](bool ok, const std::string& msg) -> void {
        if (!ok)
            throw ConfigError(msg);
    };

    require(ram.size > 0, "ram.size: must be nonzero");
    require(ram.base % 4096 == 0, "ram.base: must be 4 KiB aligned");
    require(pci_host.cfg_size > 0 && pci_host.cfg_size <= 0x100000,
            "pci_host.cfg_size: must be in 1..0x100000");
    require(pci_host.mmio_window_size > 0,
            "pci_host.mmio_window_size: must be nonzero");
    require(pci_host.io_window_size > 0,
            "pci_host.io_window_size: must be nonzero");
    require(msi.num_spis > 0 && msi.num_spis < 1024,
            "msi.num_spis: must be in 1..1023");
    require(msi.base_spi < 1024, "msi.base_spi: must be below 1024");
    require(device.slot < 32, "device.slot: must be below 32");
    require(quantum.picoseconds() > 0, "quantum: must be nonzero");
    require(timeout.picoseconds() > 0, "timeout: must be nonzero");

    if (device.backend == BackendKind::Vfio) {
        require(!device.sysfs_address.empty(),
                "device.sysfs_address: required for the vfio backend");
        require(vfio::PciAddress::parse(device.sysfs_address).has_value(),
                "device.sysfs_address: malformed PCI address '" +
                    device.sysfs_address + "'");
    }

    const Range ranges[] = {
        {"ram", ram.base, ram.size},
        {"pci_host.cfg", pci_host.cfg_base, pci_host.cfg_size},
        {"pci_host.mmio_window", pci_host.mmio_window_base,
         pci_host.mmio_window_size},
        {"pci_host.io_window", pci_host.io_window_base,
         pci_host.io_window_size},
        {"msi.doorbell", msi.doorbell_base, MsiController::REGION_SIZE},
    };

    for (const Range& r : ranges) {
        require(r.base + (r.size - 1) >= r.base,
                std::string(r.field) + ": range wraps around");
    }

    for (std::size_t i = 0; i < std::size(ranges); i++) {
        for (std::size_t j = i + 1; j < std::size(ranges); j++) {
            require(!overlaps(ranges[i], ranges[j]),
                    std::string(ranges[j].field) + ": " +
                        describe(ranges[j].base, ranges[j].size) +
                        " overlaps " + ranges[i].field + " " +
                        describe(ranges[i].base, ranges[i].size));
        }
    }

    require(dma_window.size > 0, "dma_window.size: must be nonzero");
    require(dma_window.base >= ram.base &&
                dma_window.base - ram.base < ram.size &&
                dma_window.size <= ram.size - (dma_window.base - ram.base),
            "dma_window: " + describe(dma_window.base, dma_window.size) +
                " is not inside ram " + describe(ram.base, ram.size));

    require(job.src_offset <= ram.size && job.len <= ram.size - job.src_offset,
            "job.src_offset: source buffer leaves ram");
    require(job.dst_offset <= ram.size && job.len <= ram.size - job.dst_offset,
            "job.dst_offset: destination buffer leaves ram");
}

PlatformConfig PlatformConfig::parse(std::string_view text) {
    PlatformConfig cfg;
    std::istringstream in{std::string(text)};
    std::string line;
    unsigned lineno = 0;
    while (std::getline(in, line)) {
        lineno++;
        std::string_view view = line;
        if (auto hash = view.find('#'); hash != std::string_view::npos)
            view = view.substr(0, hash);
        view = trim(view);
        if (view.empty())
            continue;

        const auto eq = view.find('=');
        if (eq == std::string_view::npos)
            throw ConfigError("line " + std::to_string(lineno) +
                              ": expected 'key = value'");
        cfg.set(trim(view.substr(0, eq)), trim(view.substr(eq + 1)));
    }
    return cfg;
}

PlatformConfig PlatformConfig::load(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in)
        throw ConfigError("cannot read config file " + file.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

} // namespace vpcie::harness
