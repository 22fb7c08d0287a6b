#pragma once

// JSON echo of the run configuration, used in sidecars and manifests.

#include <json.hpp>

#include "twinwave/run_config.hpp"

namespace twinwave {

inline nlohmann::json to_json(const Axis& a) {
  return {{"min", a.min},           {"max", a.max},       {"physical_pitch", a.physical_pitch},
          {"downsample", a.downsample}, {"pitch", a.pitch()}, {"pixels", a.count()}};
}

inline nlohmann::json to_json(const DetectorGeometry& g) {
  return {{"wavelength_nm", to_json(g.wavelength)},
          {"radial_mrad", to_json(g.radial)},
          {"degenerate_nm", g.degenerate_nm},
          {"cone_center_mrad", g.cone_center_mrad()},
          {"arc_half_width_rad", g.arc_half_width},
          {"arc_samples", g.arc_samples},
          {"rows", g.rows()},
          {"cols", g.cols()},
          {"row_axis", "radial_mrad"},
          {"col_axis", "wavelength_nm"},
          {"degenerate_placement", "axis midpoint"}};
}

inline nlohmann::json to_json(const ModelConfig& m) {
  return {{"pump",
           {{"power_mW", m.pump.power_mW},
            {"photons_per_mW", m.pump.photons_per_mW},
            {"crystal_length_mm", m.pump.crystal_length_mm}}},
          {"coupling",
           {{"k0", m.coupling.k0},
            {"kappa_m", m.coupling.kappa_m},
            {"kappa_l", m.coupling.kappa_l},
            {"kappa_q", m.coupling.kappa_q}}},
          {"modes", {{"m_max", m.modes.m_max}, {"l_max", m.modes.l_max}, {"q_max", m.modes.q_max}}},
          {"detector", to_json(m.detector)},
          {"basis", {{"width_nm", m.basis.width_nm}, {"width_mrad", m.basis.width_mrad}}}};
}

inline nlohmann::json to_json(const RunConfig& c) {
  nlohmann::json j = to_json(c.model);
  j["run"] = {{"shots", c.shots},
              {"seed", c.seed},
              {"z_steps", c.z_steps},
              {"pump_partition", to_string(c.partition)}};
  j["noise"] = {{"gain", c.noise.gain}, {"dark_level", c.noise.dark_level}, {"read_noise", c.noise.read_noise}};
  return j;
}

}  // namespace twinwave
