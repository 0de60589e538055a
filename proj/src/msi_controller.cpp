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

#include "vpcie/msi_controller.h"

#include <algorithm>

namespace vpcie {

// TYPER fields: base SPI in [25:16], SPI count in [9:0]
static constexpr u32 TYPER_FIELD_MASK = 0x3ff;
static constexpr u32 TYPER_BASE_SHIFT = 16;

u32 MsiController::encode_typer(u32 base_spi, u32 num_spis) {
    return ((base_spi & TYPER_FIELD_MASK) << TYPER_BASE_SHIFT) |
           (num_spis & TYPER_FIELD_MASK);
}

std::pair<u32, u32> MsiController::decode_typer(u32 typer) {
    return {(typer >> TYPER_BASE_SHIFT) & TYPER_FIELD_MASK,
            typer & TYPER_FIELD_MASK};
}

MsiController::MsiController(std::string name, const DoorbellConfig& cfg):
    BusTarget(std::move(name)), m_cfg(cfg), m_lines(), m_counts() {
    if (cfg.num_spis == 0)
        throw ConfigError("MSI controller needs at least one SPI");
    if (cfg.base_spi > TYPER_FIELD_MASK || cfg.num_spis > TYPER_FIELD_MASK ||
        cfg.base_spi + cfg.num_spis > TYPER_FIELD_MASK + 1)
        throw ConfigError("MSI controller SPI range exceeds 10-bit fields");

    for (u32 i = 0; i < cfg.num_spis; i++) {
        m_lines.push_back(std::make_unique<SignalLine>(
            this->name() + ".spi" + std::to_string(cfg.base_spi + i)));
    }
    m_counts.assign(cfg.num_spis, 0);
}

Response MsiController::doorbell_write(u64 offset, u32 value) {
    if (offset >= REGION_SIZE)
        return Response::AddressError;

    if (offset != SETSPI || value < m_cfg.base_spi ||
        value - m_cfg.base_spi >= m_cfg.num_spis) {
        m_warnings++;
        return Response::Ok;
    }

    const u32 idx = value - m_cfg.base_spi;
    m_counts[idx]++;
    m_lines[idx]->pulse();
    return Response::Ok;
}

u32 MsiController::read_typer() const {
    return encode_typer(m_cfg.base_spi, m_cfg.num_spis);
}

void MsiController::do_transport(GenericPayload& txn, SimTime&) {
    if (txn.address < m_cfg.base_address ||
        txn.address - m_cfg.base_address >= REGION_SIZE ||
        txn.length() > REGION_SIZE - (txn.address - m_cfg.base_address)) {
        txn.response = Response::AddressError;
        return;
    }

    const u64 offset = txn.address - m_cfg.base_address;

    if (txn.is_write()) {
        if (txn.length() != 4) {
            m_warnings++;
            txn.response = Response::Ok;
            return;
        }
        txn.response = doorbell_write(offset, static_cast<u32>(txn.value()));
        return;
    }

    std::fill(txn.data.begin(), txn.data.end(), 0);
    if (offset == TYPER && txn.length() == 4)
        store_le(txn.data, read_typer());
    txn.response = Response::Ok;
}

} // namespace vpcie
