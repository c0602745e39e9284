#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string_view>

namespace ews {

/// The four EWS pillars plus the cross-pillar (XP).
enum class PillarId { P1, P2, P3, P4, XP };

inline constexpr std::array<PillarId, 5> kAllPillars = {PillarId::P1, PillarId::P2, PillarId::P3,
                                                        PillarId::P4, PillarId::XP};

constexpr std::size_t index_of(PillarId p) { return static_cast<std::size_t>(p); }

std::string_view to_string(PillarId p) noexcept;
/// Accepts the short codes "P1".."P4", "XP".
std::optional<PillarId> pillar_from_code(std::string_view code) noexcept;
/// Gold-annotation labels: trimmed, casefolded, "pillar 1".."pillar 4",
/// "cross-pillar" / "cross pillar" / "crosspillar". Short codes also accepted.
std::optional<PillarId> pillar_from_label(std::string_view label) noexcept;
/// Human name, e.g. "Pillar 2: Detection, Observation, Monitoring, Analysis and Forecasting".
std::string_view display_name(PillarId p) noexcept;

}  // namespace ews
