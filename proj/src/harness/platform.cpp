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


#include "vpcie/harness/platform.h"

#include "vpcie/vfio/backend.h"

namespace vpcie::harness {

Platform::Platform(const PlatformConfig& cfg): m_cfg(cfg) {
    build([this](Kernel& kernel) -> std::unique_ptr<DeviceBackend> {
        if (m_cfg.device.backend == BackendKind::Vfio)
            return vfio::VfioBackend::open(m_cfg.device.sysfs_address);
        return std::make_unique<CopyCheck>(kernel);
    });
}

Platform::Platform(const PlatformConfig& cfg, const BackendFactory& factory):
    m_cfg(cfg) {
    build(factory);
}

Platform::~Platform() = default;

void Platform::build(const BackendFactory& factory) {
    m_cfg.validate();

    m_bus = std::make_unique<Bus>(m_kernel, "bus");
    m_ram = std::make_unique<Ram>("ram", m_cfg.ram.base, m_cfg.ram.size);
    m_msi = std::make_unique<MsiController>(
        "msi", DoorbellConfig{m_cfg.msi.doorbell_base, m_cfg.msi.base_spi,
                              m_cfg.msi.num_spis});

    HostBridgeConfig hb;
    hb.cfg_base = m_cfg.pci_host.cfg_base;
    hb.cfg_size = m_cfg.pci_host.cfg_size;
    hb.mmio_base = m_cfg.pci_host.mmio_window_base;
    hb.mmio_size = m_cfg.pci_host.mmio_window_size;
    hb.io_base = m_cfg.pci_host.io_window_base;
    hb.io_size = m_cfg.pci_host.io_window_size;
    m_host = std::make_unique<HostBridge>(m_kernel, "pci", hb);

    m_bus->map(m_cfg.ram.base, m_cfg.ram.size, *m_ram);
    m_bus->map(hb.cfg_base, hb.cfg_size, m_host->cfg_window());
    m_bus->map(hb.mmio_base, hb.mmio_size, m_host->mmio_window());
    m_bus->map(hb.io_base, hb.io_size, m_host->io_window());
    m_bus->map(m_cfg.msi.doorbell_base, MsiController::REGION_SIZE, *m_msi);
    m_host->dma_socket().bind(*m_bus);

    m_backend = factory(m_kernel);
    if (!m_backend)
        throw ElaborationError("backend factory returned nothing");

    m_device = std::make_unique<VpciDevice>(m_kernel, "vpci", *m_backend,
                                            VpciOptions{m_cfg.quantum});
    m_device->connect_dma(*m_host);
    m_device->set_trace(&m_trace);
    m_host->set_trace(&m_trace);
    m_host->attach(m_cfg.device.slot, m_device->pci_socket());

    m_cpu = std::make_unique<InitiatorSocket>(m_kernel, "cpu");
    m_cpu->bind(*m_bus);
}

void Platform::elaborate() {
    m_device->setup_dma_window(
        {m_cfg.dma_window.base, m_cfg.dma_window.size});
    m_kernel.elaborate();
}

Response Platform::cpu_access(GenericPayload& txn) {
    SimTime delay;
    m_cpu->b_transport(txn, delay);
    if (delay > SimTime())
        m_kernel.run_until(m_kernel.now() + delay);
    return txn.response;
}

Response Platform::cpu_read(u64 addr, unsigned len, u64& value) {
    GenericPayload txn = GenericPayload::read(addr, len);
    const Response rsp = cpu_access(txn);
    value = txn.value();
    return rsp;
}

Response Platform::cpu_write(u64 addr, unsigned len, u64 value) {
    std::vector<u8> bytes(len);
    store_le(bytes, value);
    GenericPayload txn = GenericPayload::write(addr, bytes);
    return cpu_access(txn);
}

u64 Platform::warnings() {
    u64 n = m_host->warnings() + m_msi->warnings();
    if (CopyCheck* m = mock())
        n += m->warnings();
    return n;
}

} // namespace vpcie::harness
