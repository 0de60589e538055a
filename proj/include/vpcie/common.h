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

#ifndef VPCIE_COMMON_H
#define VPCIE_COMMON_H

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

namespace vpcie {

using u8 = std::uint8_t;
using u16 = std::uint16_t;
using u32 = std::uint32_t;
using u64 = std::uint64_t;

enum class Direction { Read, Write };

enum class Response {
    Incomplete,
    Ok,
    AddressError,
    CommandError,
};

std::string_view to_string(Direction dir);
std::string_view to_string(Response rsp);

/// Base for all errors raised by the framework. Bus-level failures are not
/// errors; they travel as Response values.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Simulation lifecycle violations (scheduling after finish, binding after
/// elaboration).
class LifecycleError : public Error {
public:
    using Error::Error;
};

/// Structural problems found while wiring the platform.
class ElaborationError : public Error {
public:
    using Error::Error;
};

/// Invalid user configuration (platform files, DMA windows, arguments).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Malformed PCI configuration space content.
class MalformedConfig : public Error {
public:
    using Error::Error;
};

/// Failure reported by a device backend (OS call, hardware).
class BackendError : public Error {
public:
    using Error::Error;
};

constexpr bool is_pow2(u64 v) {
    return v != 0 && (v & (v - 1)) == 0;
}

constexpr u64 align_up(u64 v, u64 alignment) {
    return (v + alignment - 1) & ~(alignment - 1);
}

inline u64 load_le(std::span<const u8> bytes) {
    u64 v = 0;
    for (std::size_t i = bytes.size(); i-- > 0;)
        v = (v << 8) | bytes[i];
    return v;
}

inline void store_le(std::span<u8> bytes, u64 v) {
    for (u8& b : bytes) {
        b = static_cast<u8>(v);
        v >>= 8;
    }
}

std::string hex(u64 v, int digits = 0);

} // namespace vpcie

#endif
