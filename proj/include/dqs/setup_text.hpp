#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "dqs/optics.hpp"

namespace dqs {

/// Path 0 -> "a", 1 -> "b", ...
std::string path_name(int path);
int path_from_name(std::string_view name);

/// Device token such as `PBS(b,c)`, `HWP(a,0.25pi)`, `R(d)`, `DCBell(a,b)`.
std::string format_device(const Device& d);
Device parse_device(std::string_view token);

/// Sources followed by the sequence, joined by `->`.
std::string format_setup(const OpticalSetup& setup);

/// Parses a full setup. Source tokens must precede every sequence device; the
/// photon count is twice the number of sources. Angles are reduced modulo pi.
OpticalSetup parse_setup(std::string_view text);

/// Parses only a device sequence (no source tokens allowed) and prepends
/// `source_kind` sources on consecutive path pairs.
OpticalSetup parse_sequence(std::string_view text, int n_photons, DeviceKind source_kind = DeviceKind::DCBell);

}  // namespace dqs
