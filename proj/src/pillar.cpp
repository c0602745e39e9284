#include "ewstrack/pillar.hpp"

#include <string>

#include "ewstrack/text.hpp"

namespace ews {

std::string_view to_string(PillarId p) noexcept {
  switch (p) {
    case PillarId::P1: return "P1";
    case PillarId::P2: return "P2";
    case PillarId::P3: return "P3";
    case PillarId::P4: return "P4";
    case PillarId::XP: return "XP";
  }
  return "XP";
}

std::optional<PillarId> pillar_from_code(std::string_view code) noexcept {
  for (PillarId p : kAllPillars) {
    if (code == to_string(p)) return p;
  }
  return std::nullopt;
}

std::optional<PillarId> pillar_from_label(std::string_view label) noexcept {
  const std::string folded = to_lower_ascii(trim(label));
  if (folded == "pillar 1" || folded == "p1") return PillarId::P1;
  if (folded == "pillar 2" || folded == "p2") return PillarId::P2;
  if (folded == "pillar 3" || folded == "p3") return PillarId::P3;
  if (folded == "pillar 4" || folded == "p4") return PillarId::P4;
  if (folded == "cross-pillar" || folded == "cross pillar" || folded == "crosspillar" || folded == "xp") {
    return PillarId::XP;
  }
  return std::nullopt;
}

std::string_view display_name(PillarId p) noexcept {
  switch (p) {
    case PillarId::P1: return "Pillar 1: Disaster Risk Knowledge and Management";
    case PillarId::P2: return "Pillar 2: Detection, Observation, Monitoring, Analysis and Forecasting";
    case PillarId::P3: return "Pillar 3: Warning Dissemination and Communication";
    case PillarId::P4: return "Pillar 4: Preparedness and Response Capabilities";
    case PillarId::XP: return "Cross-Pillar: Foundational Elements for Effective EWS";
  }
  return "";
}

}  // namespace ews
