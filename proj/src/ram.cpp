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

#include "vpcie/ram.h"

#include <sys/mman.h>

#include <cstring>
#include <fstream>

namespace vpcie {

Ram::Ram(std::string name, u64 base, u64 size, SimTime latency):
    BusTarget(std::move(name), latency),
    m_base(base),
    m_size(size),
    m_store(nullptr) {
    if (size == 0)
        throw ConfigError("RAM '" + this->name() + "' has zero size");
    if (base + (size - 1) < base)
        throw ConfigError("RAM '" + this->name() + "' wraps the address space");

    // anonymous mappings are zero-filled, page aligned and lazily committed
    void* mem = mmap(nullptr, size, PROT_READ | PROT_WRITE,
                     MAP_PRIVATE | MAP_ANONYMOUS | MAP_NORESERVE, -1, 0);
    if (mem == MAP_FAILED)
        throw ConfigError("cannot allocate " + std::to_string(size) +
                          " bytes for RAM '" + this->name() + "'");
    m_store = static_cast<u8*>(mem);
}

Ram::~Ram() {
    munmap(m_store, m_size);
}

bool Ram::contains(u64 addr, u64 len) const {
    if (len == 0 || addr < m_base)
        return false;
    const u64 off = addr - m_base;
    return off < m_size && len <= m_size - off;
}

std::optional<u64> Ram::translate(u64 addr) const {
    if (!contains(addr))
        return std::nullopt;
    return addr - m_base;
}

std::optional<DmiDescriptor> Ram::grant_dmi(u64 addr) {
    if (!contains(addr))
        return std::nullopt;
    return DmiDescriptor{m_base, end(), store(), true, true};
}

std::optional<DmiDescriptor> Ram::get_dmi(u64 addr) {
    return grant_dmi(addr);
}

void Ram::do_transport(GenericPayload& txn, SimTime&) {
    if (!contains(txn.address, txn.length())) {
        txn.response = Response::AddressError;
        return;
    }

    u8* ptr = m_store + (txn.address - m_base);
    if (txn.is_read())
        std::memcpy(txn.data.data(), ptr, txn.length());
    else
        std::memcpy(ptr, txn.data.data(), txn.length());

    txn.response = Response::Ok;
}

void Ram::load_image(const std::filesystem::path& file, u64 offset) {
    std::ifstream in(file, std::ios::binary | std::ios::ate);
    if (!in)
        throw ConfigError("cannot open image " + file.string());

    const u64 length = static_cast<u64>(in.tellg());
    if (offset > m_size || length > m_size - offset)
        throw ConfigError("image " + file.string() + " does not fit into '" +
                          name() + "'");

    in.seekg(0);
    in.read(reinterpret_cast<char*>(m_store + offset),
            static_cast<std::streamsize>(length));
}

void Ram::dump_image(const std::filesystem::path& file, u64 offset,
                     u64 length) const {
    if (offset > m_size || length > m_size - offset)
        throw ConfigError("dump range outside '" + name() + "'");

    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    if (!out)
        throw ConfigError("cannot create " + file.string());
    out.write(reinterpret_cast<const char*>(m_store + offset),
              static_cast<std::streamsize>(length));
}

} // namespace vpcie
