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


#include "vpcie/vfio/address.h"

#include <charconv>
#include <cstdio>

namespace vpcie::vfio {

namespace {

std::optional<unsigned> hex_field(std::string_view text, std::size_t digits) {
    if (text.size() != digits)
        return std::nullopt;
    unsigned v = 0;
    auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(),
                                     v, 16);
    if (ec != std::errc() || end != text.data() + text.size())
        return std::nullopt;
    return v;
}

} // namespace

std::optional<PciAddress> PciAddress::parse(std::string_view text) {
    std::string_view domain = "0000";
    const auto first = text.find(':');
    if (first == std::string_view::npos)
        return std::nullopt;
    if (text.find(':', first + 1) != std::string_view::npos) {
        domain = text.substr(0, first);
        text.remove_prefix(first + 1);
    }

    const auto colon = text.find(':');
    const auto dot = text.find('.');
    if (colon == std::string_view::npos || dot == std::string_view::npos ||
        dot < colon)
        return std::nullopt;

    auto d = hex_field(domain, 4);
    auto b = hex_field(text.substr(0, colon), 2);
    auto s = hex_field(text.substr(colon + 1, dot - colon - 1), 2);
    auto f = hex_field(text.substr(dot + 1), 1);
    if (!d || !b || !s || !f || *s > 0x1f || *f > 7)
        return std::nullopt;

    return PciAddress{static_cast<u16>(*d), static_cast<u8>(*b),
                      static_cast<u8>(*s), static_cast<u8>(*f)};
}

std::string PciAddress::str() const {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04x:%02x:%02x.%x", domain, bus, device,
                  function);
    return buf;
}

} // namespace vpcie::vfio
