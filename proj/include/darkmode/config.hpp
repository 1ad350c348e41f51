#pragma once

// JSON scenario configuration. Frequency-like keys carry an `_hz` suffix
// and are converted to rad/s here; nothing downstream sees Hz.
//
//   {
//     "name": "A1",
//     "mechanics": {"omega1_hz": ..., "omega2_hz": ..., "gamma1_hz": 0.65,
//                   "gamma2_hz": 0.62, "n_th1": ..., "n_th2": ...},
//     "cavities":  {"kappa1_hz" | "linewidth1_hz": ..., "detuning1_hz": ...,
//                   "n_opt1": 0, ... same for 2},
//     "coupling":  {"G_hz": [[G11, G12], [G21, G22]]}
//               or {"g_hz": [[...]], "photon_number": [n1, n2]},
//     "probe_weights": [c1, c2],
//     "sweep": {"axis": "Gamma1" | "Gamma12", "rule": "dark_mode_breaking" | "balanced",
//               "spacing": "log" | "linear", "start_hz", "stop_hz", "points",
//               "include_hz": [...], "fixed_Gamma1_hz", "fixed_Gamma12_hz"}
//   }
//
// Unknown keys are rejected. Omitted fields take the built-in defaults.

#include "darkmode/scenario.hpp"

#include "json.hpp"

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace darkmode {

using Json = nlohmann::ordered_json;

namespace detail {

inline void check_keys(const Json& obj, const std::string& where, const std::set<std::string>& allowed) {
  require(obj.is_object(), where + " must be an object");
  for (const auto& [key, _] : obj.items()) {
    if (allowed.contains(key)) continue;
    if (allowed.contains(key + "_hz"))
      throw ValidationError(where + "." + key + ": missing unit suffix, expected '" + key + "_hz'");
    throw ValidationError(where + ": unknown key '" + key + "'");
  }
}

inline double number(const Json& obj, const std::string& where, const std::string& key, double fallback) {
  if (!obj.contains(key)) return fallback;
  const Json& v = obj.at(key);
  require(v.is_number(), where + "." + key + " must be a number");
  const double x = v.get<double>();
  require(std::isfinite(x), where + "." + key + " must be finite");
  return x;
}

inline Eigen::Matrix2d matrix2(const Json& v, const std::string& where) {
  require(v.is_array() && v.size() == 2 && v[0].is_array() && v[0].size() == 2 && v[1].is_array() &&
              v[1].size() == 2,
          where + " must be a 2x2 array");
  Eigen::Matrix2d m;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      require(v[i][j].is_number(), where + " entries must be numbers");
      m(i, j) = v[i][j].get<double>();
    }
  return m;
}

inline std::array<double, 2> pair(const Json& v, const std::string& where) {
  require(v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number(),
          where + " must be a two-element numeric array");
  return {v[0].get<double>(), v[1].get<double>()};
}

template <typename Enum, std::size_t N>
Enum parse_enum(const Json& v, const std::string& where, const std::array<Enum, N>& options) {
  require(v.is_string(), where + " must be a string");
  const auto s = v.get<std::string>();
  for (Enum e : options)
    if (to_string(e) == s) return e;
  throw ValidationError(where + ": invalid value '" + s + "'");
}

inline Json hz_matrix(const Eigen::Matrix2d& m) {
  return Json::array({Json::array({to_hz(m(0, 0)), to_hz(m(0, 1))}),
                      Json::array({to_hz(m(1, 0)), to_hz(m(1, 1))})});
}

}  // namespace detail

/// Full, explicit serialization; load_config(to_json(s)) reproduces s.
inline Json to_json(const Scenario& s) {
  const auto& p = s.base;
  Json j;
  j["name"] = s.name;
  if (!s.description.empty()) j["description"] = s.description;
  j["mechanics"] = {{"omega1_hz", to_hz(p.mech[0].omega)}, {"omega2_hz", to_hz(p.mech[1].omega)},
                    {"gamma1_hz", to_hz(p.mech[0].gamma)}, {"gamma2_hz", to_hz(p.mech[1].gamma)},
                    {"n_th1", p.mech[0].n_th},             {"n_th2", p.mech[1].n_th}};
  j["cavities"] = {{"kappa1_hz", to_hz(p.cav[0].kappa)},       {"kappa2_hz", to_hz(p.cav[1].kappa)},
                   {"detuning1_hz", to_hz(p.cav[0].detuning)}, {"detuning2_hz", to_hz(p.cav[1].detuning)},
                   {"n_opt1", p.cav[0].n_opt},                 {"n_opt2", p.cav[1].n_opt}};
  if (s.rule == CouplingRule::fixed) j["coupling"] = {{"G_hz", detail::hz_matrix(p.coupling.G)}};
  j["probe_weights"] = Json::array({p.probe_weights[0], p.probe_weights[1]});
  if (s.axis != ControlAxis::none) {
    Json sw;
    sw["axis"] = std::string(to_string(s.axis));
    sw["rule"] = std::string(to_string(s.rule));
    sw["spacing"] = std::string(to_string(s.grid.spacing));
    sw["start_hz"] = to_hz(s.grid.start);
    sw["stop_hz"] = to_hz(s.grid.stop);
    sw["points"] = s.grid.points;
    Json inc = Json::array();
    for (double v : s.grid.include) inc.push_back(to_hz(v));
    sw["include_hz"] = inc;
    if (s.axis == ControlAxis::gamma12) sw["fixed_Gamma1_hz"] = to_hz(s.fixed_gamma1);
    if (s.axis == ControlAxis::gamma1 && s.rule == CouplingRule::dark_mode_breaking)
      sw["fixed_Gamma12_hz"] = to_hz(s.fixed_gamma12);
    j["sweep"] = sw;
  }
  return j;
}

inline Scenario scenario_from_json(const Json& j) {
  using namespace detail;
  check_keys(j, "config", {"name", "description", "mechanics", "cavities", "coupling", "probe_weights", "sweep"});

  // Defaults: the standard operating point at dw = 80 Hz.
  Scenario s;
  s.base = default_params(80.0);
  require(j.contains("name") && j.at("name").is_string(), "config.name must be a string");
  s.name = j.at("name").get<std::string>();
  if (j.contains("description")) {
    require(j.at("description").is_string(), "config.description must be a string");
    s.description = j.at("description").get<std::string>();
  }

  auto& p = s.base;
  if (j.contains("mechanics")) {
    const Json& m = j.at("mechanics");
    check_keys(m, "mechanics", {"omega1_hz", "omega2_hz", "gamma1_hz", "gamma2_hz", "n_th1", "n_th2"});
    for (int i = 0; i < 2; ++i) {
      const std::string k = std::to_string(i + 1);
      p.mech[i].omega = hz(number(m, "mechanics", "omega" + k + "_hz", to_hz(p.mech[i].omega)));
      p.mech[i].gamma = hz(number(m, "mechanics", "gamma" + k + "_hz", to_hz(p.mech[i].gamma)));
      p.mech[i].n_th = number(m, "mechanics", "n_th" + k, p.mech[i].n_th);
    }
  }
  // Red detuning follows the mechanics unless given explicitly.
  for (auto& c : p.cav) c.detuning = -p.mean_omega();
  if (j.contains("cavities")) {
    const Json& c = j.at("cavities");
    check_keys(c, "cavities", {"kappa1_hz", "kappa2_hz", "linewidth1_hz", "linewidth2_hz", "detuning1_hz",
                               "detuning2_hz", "n_opt1", "n_opt2"});
    for (int i = 0; i < 2; ++i) {
      const std::string k = std::to_string(i + 1);
      const bool has_kappa = c.contains("kappa" + k + "_hz");
      const bool has_lw = c.contains("linewidth" + k + "_hz");
      require(!(has_kappa && has_lw),
              "cavities.kappa" + k + "_hz conflicts with cavities.linewidth" + k + "_hz; give one");
      if (has_kappa) p.cav[i].kappa = hz(number(c, "cavities", "kappa" + k + "_hz", 0.0));
      if (has_lw)
        p.cav[i].kappa = CavityMode::kappa_from_linewidth_hz(number(c, "cavities", "linewidth" + k + "_hz", 0.0));
      p.cav[i].detuning = hz(number(c, "cavities", "detuning" + k + "_hz", to_hz(p.cav[i].detuning)));
      p.cav[i].n_opt = number(c, "cavities", "n_opt" + k, p.cav[i].n_opt);
    }
  }
  if (j.contains("coupling")) {
    const Json& c = j.at("coupling");
    check_keys(c, "coupling", {"G_hz", "g_hz", "photon_number"});
    const bool has_G = c.contains("G_hz");
    const bool has_g = c.contains("g_hz");
    require(has_g == c.contains("photon_number"),
            "coupling.g_hz and coupling.photon_number must be given together");
    require(has_G || has_g, "coupling needs G_hz or g_hz with photon_number");
    std::optional<CouplingMatrix> direct, derived;
    if (has_G) direct = CouplingMatrix{matrix2(c.at("G_hz"), "coupling.G_hz") * kTwoPi};
    if (has_g)
      derived = CouplingMatrix::from_single_photon(matrix2(c.at("g_hz"), "coupling.g_hz") * kTwoPi,
                                                   pair(c.at("photon_number"), "coupling.photon_number"));
    if (direct && derived) {
      const double diff = (direct->G - derived->G).cwiseAbs().maxCoeff();
      const double scale = std::max(direct->G.cwiseAbs().maxCoeff(), derived->G.cwiseAbs().maxCoeff());
      require(diff <= 1e-9 * scale,
              "coupling.G_hz is inconsistent with coupling.g_hz * sqrt(coupling.photon_number)");
    }
    p.coupling = direct ? *direct : *derived;
  }
  if (j.contains("probe_weights")) p.probe_weights = pair(j.at("probe_weights"), "probe_weights");

  if (j.contains("sweep")) {
    require(!j.contains("coupling"), "coupling conflicts with sweep: the sweep rule derives all couplings");
    const Json& w = j.at("sweep");
    check_keys(w, "sweep", {"axis", "rule", "spacing", "start_hz", "stop_hz", "points", "include_hz",
                            "fixed_Gamma1_hz", "fixed_Gamma12_hz"});
    require(w.contains("axis") && w.contains("rule"), "sweep.axis and sweep.rule are required");
    s.axis = parse_enum(w.at("axis"), "sweep.axis", std::array{ControlAxis::gamma1, ControlAxis::gamma12});
    s.rule = parse_enum(w.at("rule"), "sweep.rule",
                        std::array{CouplingRule::dark_mode_breaking, CouplingRule::balanced});
    if (w.contains("spacing"))
      s.grid.spacing = parse_enum(w.at("spacing"), "sweep.spacing", std::array{GridSpacing::linear, GridSpacing::log});
    require(w.contains("start_hz") && w.contains("stop_hz") && w.contains("points"),
            "sweep.start_hz, sweep.stop_hz and sweep.points are required");
    s.grid.start = hz(number(w, "sweep", "start_hz", 0.0));
    s.grid.stop = hz(number(w, "sweep", "stop_hz", 0.0));
    require(w.at("points").is_number_unsigned(), "sweep.points must be a positive integer");
    s.grid.points = w.at("points").get<std::size_t>();
    if (w.contains("include_hz")) {
      require(w.at("include_hz").is_array(), "sweep.include_hz must be an array");
      for (const auto& v : w.at("include_hz")) {
        require(v.is_number(), "sweep.include_hz entries must be numbers");
        s.grid.include.push_back(hz(v.get<double>()));
      }
    }
    s.fixed_gamma1 = hz(number(w, "sweep", "fixed_Gamma1_hz", 0.0));
    s.fixed_gamma12 = hz(number(w, "sweep", "fixed_Gamma12_hz", 0.0));
  }
  s.validate();
  return s;
}

inline Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file " + path.string());
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError("config " + path.string() + ": " + e.what());
  }
}

/// Accepts either a bare scenario config or an emitted metadata file, whose
/// "config" member holds the resolved scenario.
inline Scenario load_config(const std::filesystem::path& path) {
  Json j = read_json_file(path);
  if (j.is_object() && j.contains("config") && j.contains("tool")) j = j.at("config");
  return scenario_from_json(j);
}

}  // namespace darkmode
