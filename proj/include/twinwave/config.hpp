#pragma once

// TOML run configuration. Sections: [pump] [coupling] [modes] [detector]
// [run]. Every key is optional (defaults below); unknown sections or keys
// are rejected.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>

#define TOML_EXCEPTIONS 1
#include <toml.hpp>

#include "twinwave/run_config.hpp"

namespace twinwave {

/// Missing file, malformed TOML, unknown key or invalid value.
class config_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

struct KeyBinding {
  std::function<void(const toml::node&, const std::string&)> read;
  std::function<void(toml::table&)> write;
};

using KeyTable = std::map<std::string, std::map<std::string, KeyBinding>>;

inline std::string where(const toml::node& n) {
  const auto& src = n.source();
  return " (line " + std::to_string(src.begin.line) + ")";
}

inline KeyBinding real_key(double& target, std::string name) {
  return {[&target](const toml::node& n, const std::string& key) {
            const auto v = n.value<double>();
            if (!v || !(n.is_floating_point() || n.is_integer()))
              throw config_error("config key '" + key + "' must be a number" + where(n));
            target = *v;
          },
          [&target, name](toml::table& t) { t.insert_or_assign(name, target); }};
}

template <class Int>
KeyBinding int_key(Int& target, std::string name) {
  return {[&target](const toml::node& n, const std::string& key) {
            if (!n.is_integer()) throw config_error("config key '" + key + "' must be an integer" + where(n));
            const auto v = *n.value<std::int64_t>();
            if constexpr (std::is_unsigned_v<Int>) {
              if (v < 0) throw config_error("config key '" + key + "' must be non-negative" + where(n));
            }
            target = static_cast<Int>(v);
          },
          [&target, name](toml::table& t) { t.insert_or_assign(name, static_cast<std::int64_t>(target)); }};
}

inline KeyTable bindings(RunConfig& c) {
  auto& m = c.model;
  auto& d = m.detector;
  KeyTable k;
  k["pump"]["power_mW"] = real_key(m.pump.power_mW, "power_mW");
  k["pump"]["photons_per_mW"] = real_key(m.pump.photons_per_mW, "photons_per_mW");
  k["pump"]["crystal_length_mm"] = real_key(m.pump.crystal_length_mm, "crystal_length_mm");

  k["coupling"]["k0"] = real_key(m.coupling.k0, "k0");
  k["coupling"]["kappa_m"] = real_key(m.coupling.kappa_m, "kappa_m");
  k["coupling"]["kappa_l"] = real_key(m.coupling.kappa_l, "kappa_l");
  k["coupling"]["kappa_q"] = real_key(m.coupling.kappa_q, "kappa_q");
  k["coupling"]["pump_partition"] = {
      [&c](const toml::node& n, const std::string& key) {
        const auto v = n.value<std::string>();
        if (!v) throw config_error("config key '" + key + "' must be a string" + where(n));
        try {
          c.partition = parse_partition(*v);
        } catch (const std::invalid_argument& e) {
          throw config_error("config key '" + key + "': " + e.what() + where(n));
        }
      },
      [&c](toml::table& t) { t.insert_or_assign("pump_partition", to_string(c.partition)); }};

  k["modes"]["m_max"] = int_key(m.modes.m_max, "m_max");
  k["modes"]["l_max"] = int_key(m.modes.l_max, "l_max");
  k["modes"]["q_max"] = int_key(m.modes.q_max, "q_max");
  k["modes"]["width_nm"] = real_key(m.basis.width_nm, "width_nm");
  k["modes"]["width_mrad"] = real_key(m.basis.width_mrad, "width_mrad");

  k["detector"]["wavelength_min_nm"] = real_key(d.wavelength.min, "wavelength_min_nm");
  k["detector"]["wavelength_max_nm"] = real_key(d.wavelength.max, "wavelength_max_nm");
  k["detector"]["wavelength_pitch_nm"] = real_key(d.wavelength.physical_pitch, "wavelength_pitch_nm");
  k["detector"]["wavelength_downsample"] = int_key(d.wavelength.downsample, "wavelength_downsample");
  k["detector"]["radial_min_mrad"] = real_key(d.radial.min, "radial_min_mrad");
  k["detector"]["radial_max_mrad"] = real_key(d.radial.max, "radial_max_mrad");
  k["detector"]["radial_pitch_mrad"] = real_key(d.radial.physical_pitch, "radial_pitch_mrad");
  k["detector"]["radial_downsample"] = int_key(d.radial.downsample, "radial_downsample");
  k["detector"]["degenerate_nm"] = real_key(d.degenerate_nm, "degenerate_nm");
  k["detector"]["arc_half_width_rad"] = real_key(d.arc_half_width, "arc_half_width_rad");
  k["detector"]["arc_samples"] = int_key(d.arc_samples, "arc_samples");
  k["detector"]["gain"] = real_key(c.noise.gain, "gain");
  k["detector"]["dark_level"] = real_key(c.noise.dark_level, "dark_level");
  k["detector"]["read_noise"] = real_key(c.noise.read_noise, "read_noise");

  k["run"]["shots"] = int_key(c.shots, "shots");
  k["run"]["seed"] = int_key(c.seed, "seed");
  k["run"]["z_steps"] = int_key(c.z_steps, "z_steps");
  k["run"]["workers"] = int_key(c.workers, "workers");
  return k;
}

// Validation messages already lead with the dotted key they concern.
inline void validate_named(const RunConfig& c) {
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw config_error(std::string("invalid configuration: ") + e.what());
  }
}

}  // namespace detail

/// Parses TOML text; `origin` names the source in error messages.
inline RunConfig parse_config_string(std::string_view text, const std::string& origin = "<string>") {
  toml::table root;
  try {
    root = toml::parse(text, origin);
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << origin << ": parse error at line " << e.source().begin.line << ", column " << e.source().begin.column
        << ": " << e.description();
    throw config_error(msg.str());
  }
  RunConfig cfg;
  auto keys = detail::bindings(cfg);
  for (const auto& [section_key, section_node] : root) {
    const std::string section(section_key.str());
    const auto sec = keys.find(section);
    const auto* table = section_node.as_table();
    if (sec == keys.end()) {
      if (table && !table->empty()) {
        const auto it = table->cbegin();
        throw config_error("unknown config key '" + section + "." + std::string(it->first.str()) + "'" +
                           detail::where(it->second));
      }
      throw config_error("unknown config key '" + section + "'" + detail::where(section_node));
    }
    if (!table) throw config_error("config section '" + section + "' must be a table" + detail::where(section_node));
    for (const auto& [key, node] : *table) {
      const std::string dotted = section + "." + std::string(key.str());
      const auto b = sec->second.find(std::string(key.str()));
      if (b == sec->second.end()) throw config_error("unknown config key '" + dotted + "'" + detail::where(node));
      b->second.read(node, dotted);
    }
  }
  detail::validate_named(cfg);
  return cfg;
}

inline RunConfig parse_config(const std::filesystem::path& path) {
  if (!std::filesystem::is_regular_file(path)) throw config_error("config file not found: " + path.string());
  std::ifstream in(path, std::ios::binary);
  if (!in) throw config_error("cannot open config file: " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config_string(text.str(), path.string());
}

/// Effective configuration (defaults filled in) as TOML; parses back to the
/// same RunConfig.
inline std::string config_to_toml(const RunConfig& cfg) {
  RunConfig copy = cfg;
  const auto keys = detail::bindings(copy);
  toml::table root;
  for (const auto& [section, entries] : keys) {
    toml::table t;
    for (const auto& [name, b] : entries) b.write(t);
    root.insert_or_assign(section, std::move(t));
  }
  std::ostringstream out;
  out << root << "\n";
  return out.str();
}

}  // namespace twinwave
