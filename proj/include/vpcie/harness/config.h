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


#ifndef VPCIE_HARNESS_CONFIG_H
#define VPCIE_HARNESS_CONFIG_H

#include <filesystem>
#include <string>
#include <string_view>

#include "vpcie/sim/time.h"

namespace vpcie::harness {

enum class BackendKind { Mock, Vfio };

std::string_view to_string(BackendKind kind);

/// Platform description. The text form uses the dotted member names as
/// keys, e.g. "ram.size = 0x10000000".
struct PlatformConfig {
    struct {
        u64 base = 0x40000000;
        u64 size = 256ull << 20;
    } ram;

    struct {
        u64 cfg_base = 0x20000000;
        u64 cfg_size = 0x00100000;
        u64 mmio_window_base = 0x10000000;
        u64 mmio_window_size = 0x01000000;
        u64 io_window_base = 0x0f000000;
        u64 io_window_size = 0x00010000;
    } pci_host;

    struct {
        u64 doorbell_base = 0x08000000;
        u32 base_spi = 64;
        u32 num_spis = 32;
    } msi;

    struct {
        BackendKind backend = BackendKind::Mock;
        std::string sysfs_address;
        unsigned slot = 0;
    } device;

    struct {
        u64 base = 0x40000000;
        u64 size = 256ull << 20;
    } dma_window;

    SimTime quantum = SimTime::us(1);
    SimTime timeout = SimTime::ms(10);
    std::string trace_path;
    std::string stats_path;

    // workload of the scripted driver; offsets are relative to ram.base
    struct {
        u32 len = 4096;
        u64 seed = 1;
        u64 src_offset = 0x00000000;
        u64 dst_offset = 0x00100000;
    } job;

    /// Assigns one key; throws ConfigError naming the key.
    void set(std::string_view key, std::string_view value);

    /// Throws ConfigError whose message starts with the offending field path.
    void validate() const;

    static PlatformConfig parse(std::string_view text);
    static PlatformConfig load(const std::filesystem::path& file);
};

/// Integer with optional 0x prefix and K/M/G binary suffix.
u64 parse_number(std::string_view text);

} // namespace vpcie::harness

#endif
