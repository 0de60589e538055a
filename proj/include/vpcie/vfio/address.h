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


#ifndef VPCIE_VFIO_ADDRESS_H
#define VPCIE_VFIO_ADDRESS_H

#include <optional>
#include <string>
#include <string_view>

#include "vpcie/common.h"

namespace vpcie::vfio {

/// PCI function address in sysfs notation, "DDDD:BB:DD.F". The domain may be
/// omitted on input.
struct PciAddress {
    u16 domain = 0;
    u8 bus = 0;
    u8 device = 0;
    u8 function = 0;

    static std::optional<PciAddress> parse(std::string_view text);
    std::string str() const;

    bool operator==(const PciAddress&) const = default;
};

} // namespace vpcie::vfio

#endif
