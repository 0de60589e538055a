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


#include "vpcie/vfio/backend.h"

#include <cerrno>
#include <cstdio>
#include <cstring>
#include <filesystem>

#include <fcntl.h>
#include <linux/vfio.h>
#include <sys/eventfd.h>
#include <sys/ioctl.h>
#include <sys/mman.h>
#include <unistd.h>

namespace vpcie::vfio {

namespace fs = std::filesystem;

namespace {

std::string errno_text() {
    return std::strerror(errno);
}

template <typename T>
T volatile_load(const u8* p) {
    return *reinterpret_cast<const volatile T*>(p);
}

template <typename T>
void volatile_store(u8* p, T v) {
    *reinterpret_cast<volatile T*>(p) = v;
}

} // namespace

std::unique_ptr<VfioBackend> VfioBackend::open(std::string_view address,
                                               const VfioPaths& paths) {
    auto addr = PciAddress::parse(address);
    if (!addr)
        throw ConfigError("malformed PCI address '" + std::string(address) +
                          "', expected DDDD:BB:DD.F");

    std::unique_ptr<VfioBackend> dev(new VfioBackend());
    dev->m_address = *addr;
    dev->open_device(paths);
    dev->load_regions();
    dev->map_bars();
    return dev;
}

VfioBackend::~VfioBackend() {
    try {
        irq_teardown();
    } catch (const BackendError&) {
    }

    for (Mapping& m : m_maps) {
        if (m.base)
            munmap(m.base, m.size);
    }
    for (int fd : {m_device, m_group, m_container}) {
        if (fd >= 0)
            close(fd);
    }
}

void VfioBackend::open_device(const VfioPaths& paths) {
    const std::string addr = m_address.str();
    const fs::path dev = fs::path(paths.sysfs_devices) / addr;
    std::error_code ec;

    if (!fs::exists(dev, ec))
        throw BackendError("no PCI device " + addr + " under " +
                           paths.sysfs_devices);

    const fs::path group_link = dev / "iommu_group";
    const fs::path group_target = fs::read_symlink(group_link, ec);
    if (ec)
        throw BackendError("IOMMU unavailable: " + addr +
                           " has no iommu_group; enable the IOMMU on the "
                           "host (e.g. intel_iommu=on)");
    m_group_id = std::stoi(group_target.filename().string());

    const fs::path driver = fs::read_symlink(dev / "driver", ec);
    const std::string driver_name = ec ? "none" : driver.filename().string();
    if (driver_name != "vfio-pci")
        throw BackendError(addr + " is bound to driver '" + driver_name +
                           "'; bind it to vfio-pci first, e.g. echo vfio-pci"
                           " > " + (dev / "driver_override").string() +
                           " && echo " + addr +
                           " > /sys/bus/pci/drivers_probe");

    const std::string container_path = paths.dev_vfio + "/vfio";
    m_container = ::open(container_path.c_str(), O_RDWR | O_CLOEXEC);
    if (m_container < 0)
        throw BackendError("IOMMU unavailable: cannot open " + container_path +
                           ": " + errno_text());

    if (ioctl(m_container, VFIO_GET_API_VERSION) != VFIO_API_VERSION)
        throw BackendError("unsupported VFIO API version");

    int iommu_type = 0;
    if (ioctl(m_container, VFIO_CHECK_EXTENSION, VFIO_TYPE1v2_IOMMU) > 0)
        iommu_type = VFIO_TYPE1v2_IOMMU;
    else if (ioctl(m_container, VFIO_CHECK_EXTENSION, VFIO_TYPE1_IOMMU) > 0)
        iommu_type = VFIO_TYPE1_IOMMU;
    else
        throw BackendError("IOMMU unavailable: container offers no type1 "
                           "IOMMU backend");

    const std::string group_path =
        paths.dev_vfio + "/" + std::to_string(m_group_id);
    m_group = ::open(group_path.c_str(), O_RDWR | O_CLOEXEC);
    if (m_group < 0)
        throw BackendError("cannot open " + group_path + ": " + errno_text());

    vfio_group_status status{};
    status.argsz = sizeof(status);
    if (ioctl(m_group, VFIO_GROUP_GET_STATUS, &status) < 0)
        throw BackendError("VFIO_GROUP_GET_STATUS: " + errno_text());

    if (!(status.flags & VFIO_GROUP_FLAGS_VIABLE)) {
        std::string siblings;
        for (const auto& entry :
             fs::directory_iterator(group_link / "devices", ec)) {
            if (!siblings.empty())
                siblings += ", ";
            siblings += entry.path().filename().string();
        }
        throw BackendError("IOMMU group " + std::to_string(m_group_id) +
                           " is not viable; bind every device in it to "
                           "vfio-pci: " + siblings);
    }

    if (ioctl(m_group, VFIO_GROUP_SET_CONTAINER, &m_container) < 0)
        throw BackendError("VFIO_GROUP_SET_CONTAINER: " + errno_text());
    if (ioctl(m_container, VFIO_SET_IOMMU, iommu_type) < 0)
        throw BackendError("VFIO_SET_IOMMU: " + errno_text());

    m_device = ioctl(m_group, VFIO_GROUP_GET_DEVICE_FD, addr.c_str());
    if (m_device < 0)
        throw BackendError("VFIO_GROUP_GET_DEVICE_FD " + addr + ": " +
                           errno_text());
}

void VfioBackend::load_regions() {
    vfio_device_info info{};
    info.argsz = sizeof(info);
    if (ioctl(m_device, VFIO_DEVICE_GET_INFO, &info) < 0)
        throw BackendError("VFIO_DEVICE_GET_INFO: " + errno_text());
    if (!(info.flags & VFIO_DEVICE_FLAGS_PCI))
        throw BackendError(m_address.str() + " is not a vfio-pci device");

    for (u32 i = 0; i < info.num_regions; i++) {
        vfio_region_info ri{};
        ri.argsz = sizeof(ri);
        ri.index = i;
        if (ioctl(m_device, VFIO_DEVICE_GET_REGION_INFO, &ri) < 0)
            continue;
        m_regions.push_back({i, ri.offset, ri.size,
                             (ri.flags & VFIO_REGION_INFO_FLAG_READ) != 0,
                             (ri.flags & VFIO_REGION_INFO_FLAG_WRITE) != 0,
                             (ri.flags & VFIO_REGION_INFO_FLAG_MMAP) != 0});
    }

    const RegionEntry* cfg = find_region(m_regions, CONFIG_REGION_INDEX);
    if (!cfg || cfg->size < ConfigSpace::SIZE)
        throw BackendError(m_address.str() +
                           ": configuration region missing or short");

    std::array<u8, ConfigSpace::SIZE> raw{};
    if (config_read(0, raw) != Response::Ok)
        throw BackendError(m_address.str() + ": configuration read failed");
    m_bars = parse_bar_regions(m_regions, raw);

    try {
        m_msix = ConfigSpace::from_bytes(raw).msix();
    } catch (const MalformedConfig& err) {
        std::fprintf(stderr, "%s: ignoring capabilities: %s\n",
                     m_address.str().c_str(), err.what());
    }

    if (m_msix) {
        m_msix_table.assign(m_msix->table_bytes(), 0);
        for (u32 v = 0; v < m_msix->table_size; v++)
            m_msix_table[v * PCI_MSIX_ENTRY_SIZE + PCI_MSIX_ENTRY_CTRL] =
                PCI_MSIX_ENTRY_MASKED;
    }
}

void VfioBackend::map_bars() {
    for (const RegionInfo& bar : m_bars) {
        const RegionEntry& r = region(bar.bar);
        if (bar.kind == BarKind::Io || !r.mappable) {
            std::fprintf(stderr, "%s: BAR%u not mappable, using pread/pwrite\n",
                         m_address.str().c_str(), bar.bar);
            continue;
        }

        void* p = mmap(nullptr, r.size, PROT_READ | PROT_WRITE, MAP_SHARED,
                       m_device, static_cast<off_t>(r.offset));
        if (p == MAP_FAILED) {
            std::fprintf(stderr, "%s: mmap of BAR%u failed (%s), using "
                                 "pread/pwrite\n",
                         m_address.str().c_str(), bar.bar,
                         errno_text().c_str());
            continue;
        }
        m_maps[bar.bar] = {static_cast<u8*>(p), r.size};
    }
}

const RegionEntry& VfioBackend::region(u32 index) const {
    const RegionEntry* r = find_region(m_regions, index);
    if (!r)
        throw BackendError(m_address.str() + ": no region " +
                           std::to_string(index));
    return *r;
}

bool VfioBackend::region_mapped(unsigned bar) const {
    return bar < PCI_NUM_BARS && m_maps[bar].base != nullptr;
}

bool VfioBackend::region_fallback(unsigned bar) const {
    for (const RegionInfo& r : m_bars) {
        if (r.bar == bar)
            return !region_mapped(bar);
    }
    return false;
}

Response VfioBackend::config_read(u32 offset, std::span<u8> data) {
    const RegionEntry& cfg = region(CONFIG_REGION_INDEX);
    if (offset >= cfg.size || data.size() > cfg.size - offset)
        return Response::AddressError;

    const ssize_t n = pread(m_device, data.data(), data.size(),
                            static_cast<off_t>(cfg.offset + offset));
    if (n != static_cast<ssize_t>(data.size()))
        throw BackendError(m_address.str() + ": config read at " +
                           hex(offset) + " returned " + std::to_string(n));
    return Response::Ok;
}

Response VfioBackend::config_write(u32 offset, std::span<const u8> data) {
    const RegionEntry& cfg = region(CONFIG_REGION_INDEX);
    if (offset >= cfg.size || data.size() > cfg.size - offset)
        return Response::AddressError;

    const ssize_t n = pwrite(m_device, data.data(), data.size(),
                             static_cast<off_t>(cfg.offset + offset));
    if (n != static_cast<ssize_t>(data.size()))
        throw BackendError(m_address.str() + ": config write at " +
                           hex(offset) + " returned " + std::to_string(n));

    std::vector<u8> back(data.size());
    if (pread(m_device, back.data(), back.size(),
              static_cast<off_t>(cfg.offset + offset)) ==
        static_cast<ssize_t>(back.size())) {
        for (u32 off : write_mismatches(offset, data, back)) {
            m_config_mismatches++;
            if (m_mismatch_logged.insert(off).second)
                std::fprintf(stderr,
                             "%s: config byte %s reads back differently "
                             "from the value written\n",
                             m_address.str().c_str(), hex(off).c_str());
        }
    }
    return Response::Ok;
}

bool VfioBackend::in_msix_table(unsigned bar, u64 offset, u64 len) const {
    if (!m_msix || bar != m_msix->table_bar)
        return false;
    return offset >= m_msix->table_offset &&
           offset + len <= u64(m_msix->table_offset) + m_msix->table_bytes();
}

Response VfioBackend::region_access(unsigned bar, u64 offset,
                                    std::span<u8> data, Direction dir) {
    const RegionInfo* info = nullptr;
    for (const RegionInfo& r : m_bars) {
        if (r.bar == bar)
            info = &r;
    }

    const u64 len = data.size();
    if (!info || offset >= info->size || len > info->size - offset)
        return Response::AddressError;
    if (len == 0 || len > 8 || !is_pow2(len) || offset % len != 0)
        return Response::CommandError;

    const bool write = dir == Direction::Write;

    if (in_msix_table(bar, offset, len)) {
        u8* entry = m_msix_table.data() + (offset - m_msix->table_offset);
        if (write)
            std::memcpy(entry, data.data(), len);
        else
            std::memcpy(data.data(), entry, len);
        return Response::Ok;
    }

    if (region_mapped(bar)) {
        u8* p = m_maps[bar].base + offset;
        u64 v = 0;
        if (write) {
            std::memcpy(&v, data.data(), len);
            switch (len) {
            case 1: volatile_store<u8>(p, static_cast<u8>(v)); break;
            case 2: volatile_store<u16>(p, static_cast<u16>(v)); break;
            case 4: volatile_store<u32>(p, static_cast<u32>(v)); break;
            default: volatile_store<u64>(p, v); break;
            }
        } else {
            switch (len) {
            case 1: v = volatile_load<u8>(p); break;
            case 2: v = volatile_load<u16>(p); break;
            case 4: v = volatile_load<u32>(p); break;
            default: v = volatile_load<u64>(p); break;
            }
            std::memcpy(data.data(), &v, len);
        }
        return Response::Ok;
    }

    const off_t pos = static_cast<off_t>(region(bar).offset + offset);
    const ssize_t n = write ? pwrite(m_device, data.data(), len, pos)
                            : pread(m_device, data.data(), len, pos);
    if (n != static_cast<ssize_t>(len))
        throw BackendError(m_address.str() + ": BAR" + std::to_string(bar) +
                           " access at " + hex(offset) + " failed: " +
                           errno_text());
    return Response::Ok;
}

void VfioBackend::map_dma(u64 iova, std::span<u8> host, u8 perms) {
    const u64 page = static_cast<u64>(sysconf(_SC_PAGESIZE));
    check_dma_args(iova, host.data(), host.size(), page);

    vfio_iommu_type1_dma_map map{};
    map.argsz = sizeof(map);
    map.flags = ((perms & DMA_READ) ? VFIO_DMA_MAP_FLAG_READ : 0) |
                ((perms & DMA_WRITE) ? VFIO_DMA_MAP_FLAG_WRITE : 0);
    map.vaddr = reinterpret_cast<u64>(host.data());
    map.iova = iova;
    map.size = host.size();
    if (ioctl(m_container, VFIO_IOMMU_MAP_DMA, &map) < 0)
        throw BackendError("VFIO_IOMMU_MAP_DMA " + hex(iova) + "+" +
                           hex(host.size()) + ": " + errno_text());
    m_dma_maps++;
}

void VfioBackend::unmap_dma(u64 iova, u64 size) {
    vfio_iommu_type1_dma_unmap unmap{};
    unmap.argsz = sizeof(unmap);
    unmap.iova = iova;
    unmap.size = size;
    if (ioctl(m_container, VFIO_IOMMU_UNMAP_DMA, &unmap) < 0)
        std::fprintf(stderr, "%s: VFIO_IOMMU_UNMAP_DMA %s: %s\n",
                     m_address.str().c_str(), hex(iova).c_str(),
                     errno_text().c_str());
}

std::vector<IrqEvent> VfioBackend::poll_irqs() {
    std::vector<IrqEvent> out;
    for (const IrqEvent& ev : m_inbox.drain()) {
        out.push_back(ev);
        if (ev.kind == IrqKind::Legacy) {
            // the kernel masked the line; present one full level cycle
            IrqEvent low = ev;
            low.asserted = false;
            out.push_back(low);
        }
    }
    return out;
}

void VfioBackend::reset() {
    if (ioctl(m_device, VFIO_DEVICE_RESET) < 0)
        std::fprintf(stderr, "%s: VFIO_DEVICE_RESET: %s\n",
                     m_address.str().c_str(), errno_text().c_str());
    if (m_msix) {
        std::fill(m_msix_table.begin(), m_msix_table.end(), 0);
        for (u32 v = 0; v < m_msix->table_size; v++)
            m_msix_table[v * PCI_MSIX_ENTRY_SIZE + PCI_MSIX_ENTRY_CTRL] =
                PCI_MSIX_ENTRY_MASKED;
    }
}

void VfioBackend::configure_irqs(IrqMode mode, unsigned count) {
    switch (mode) {
    case IrqMode::None:
        irq_teardown();
        break;
    case IrqMode::Legacy:
        irq_setup(IrqKind::Legacy, 1);
        break;
    case IrqMode::Msi:
        irq_setup(IrqKind::Msi, count);
        break;
    case IrqMode::MsiX:
        irq_setup(IrqKind::MsiX, count);
        break;
    }
}

void VfioBackend::irq_delivered(const IrqEvent& ev) {
    if (ev.kind == IrqKind::Legacy && !ev.asserted &&
        m_irq_kind == IrqKind::Legacy)
        set_irqs(VFIO_PCI_INTX_IRQ_INDEX,
                 VFIO_IRQ_SET_DATA_NONE | VFIO_IRQ_SET_ACTION_UNMASK, 0, 1,
                 {});
}

u32 VfioBackend::irq_index(IrqKind kind) const {
    switch (kind) {
    case IrqKind::Legacy:
        return VFIO_PCI_INTX_IRQ_INDEX;
    case IrqKind::Msi:
        return VFIO_PCI_MSI_IRQ_INDEX;
    case IrqKind::MsiX:
        return VFIO_PCI_MSIX_IRQ_INDEX;
    }
    return VFIO_PCI_INTX_IRQ_INDEX;
}

u32 VfioBackend::irq_count(u32 index) const {
    vfio_irq_info info{};
    info.argsz = sizeof(info);
    info.index = index;
    if (ioctl(m_device, VFIO_DEVICE_GET_IRQ_INFO, &info) < 0)
        return 0;
    return info.count;
}

void VfioBackend::irq_setup(IrqKind kind, unsigned count) {
    irq_teardown();

    const u32 index = irq_index(kind);
    const u32 available = irq_count(index);
    if (count == 0 || count > available) {
        std::string supported;
        for (IrqKind k : {IrqKind::Legacy, IrqKind::Msi, IrqKind::MsiX}) {
            const u32 n = irq_count(irq_index(k));
            if (n == 0)
                continue;
            if (!supported.empty())
                supported += ", ";
            supported += std::string(to_string(k)) + "(" +
                         std::to_string(n) + ")";
        }
        throw BackendError(m_address.str() + ": cannot set up " +
                           std::to_string(count) + " " +
                           std::string(to_string(kind)) +
                           " interrupt(s); supported: " +
                           (supported.empty() ? "none" : supported));
    }

    std::vector<IrqListener::Source> sources;
    for (unsigned i = 0; i < count; i++) {
        const int fd = eventfd(0, EFD_CLOEXEC | EFD_NONBLOCK);
        if (fd < 0) {
            const std::string err = errno_text();
            irq_teardown();
            throw BackendError("eventfd: " + err);
        }
        m_eventfds.push_back(fd);
        sources.push_back({fd, kind, i});
    }

    set_irqs(index, VFIO_IRQ_SET_DATA_EVENTFD | VFIO_IRQ_SET_ACTION_TRIGGER, 0,
             count, m_eventfds);
    m_irq_kind = kind;
    m_listener = std::make_unique<IrqListener>(m_inbox, std::move(sources));
}

void VfioBackend::irq_teardown() {
    m_listener.reset();
    if (m_irq_kind) {
        const u32 index = irq_index(*m_irq_kind);
        m_irq_kind.reset();
        set_irqs(index, VFIO_IRQ_SET_DATA_NONE | VFIO_IRQ_SET_ACTION_TRIGGER,
                 0, 0, {});
    }
    for (int fd : m_eventfds)
        close(fd);
    m_eventfds.clear();
}

void VfioBackend::set_irqs(u32 index, u32 flags, u32 start, u32 count,
                           const std::vector<int>& fds) {
    std::vector<u8> buf(sizeof(vfio_irq_set) + fds.size() * sizeof(int));
    auto* set = reinterpret_cast<vfio_irq_set*>(buf.data());
    set->argsz = static_cast<u32>(buf.size());
    set->flags = flags;
    set->index = index;
    set->start = start;
    set->count = count;
    if (!fds.empty())
        std::memcpy(set->data, fds.data(), fds.size() * sizeof(int));

    if (ioctl(m_device, VFIO_DEVICE_SET_IRQS, set) < 0)
        throw BackendError(m_address.str() + ": VFIO_DEVICE_SET_IRQS index " +
                           std::to_string(index) + ": " + errno_text());
}

} // namespace vpcie::vfio
