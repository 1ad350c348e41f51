#pragma once

// Writes sweep results: one CSV (or JSON) table, a metadata JSON that
// load_config accepts for re-execution, and optional per-point spectra.
// All frequencies leave in ordinary Hz.

#include "darkmode/config.hpp"
#include "darkmode/sweep.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

namespace darkmode {

inline constexpr std::string_view kToolName = "darkmode";
inline constexpr std::string_view kToolVersion = "1.0.0";

enum class OutputFormat { csv, json };

struct EmitOptions {
  OutputFormat format = OutputFormat::csv;
  bool timestamp = false;  ///< off by default so repeated runs are byte-identical
};

namespace csv {

inline std::string number(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::string number(const std::optional<double>& x) { return x ? number(*x) : std::string(); }

/// RFC 4180 quoting for fields containing separators, quotes or newlines.
inline std::string field(std::string_view s) {
  if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

inline std::string row(const std::vector<std::string>& fields) {
  std::string line;
  for (std::size_t k = 0; k < fields.size(); ++k) {
    if (k) line += ',';
    line += field(fields[k]);
  }
  line += '\n';
  return line;
}

}  // namespace csv

inline const std::vector<std::string>& sweep_columns() {
  static const std::vector<std::string> cols{
      "control_hz",          "omega_plus_hz",        "omega_minus_hz",      "gamma_plus_hz",
      "gamma_minus_hz",      "n1_over_nth",          "n2_over_nth",         "ntotal_over_nth",
      "dark_limit_over_nth", "regime",               "classification",      "eigen_source",
      "ntotal_full_over_nth", "ntotal_traj_over_nth", "ntotal_traj_stderr", "spectrum_file",
      "status"};
  return cols;
}

inline std::string spectrum_file_name(const SweepResult& r, std::size_t k) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "point_%04zu.csv", k);
  return r.scenario.name + "_spectra/" + buf;
}

inline std::vector<std::string> sweep_row_fields(const SweepResult& r, std::size_t k) {
  const SweepRow& row = r.rows[k];
  const double nth = r.n_th_ref;
  auto ratio = [&](std::optional<double> v) -> std::optional<double> {
    if (!v || !(nth > 0.0)) return std::nullopt;
    return *v / nth;
  };
  std::vector<std::string> f;
  f.push_back(csv::number(to_hz(row.control)));
  const EigenmodeReport* e = row.eigen();
  if (e) {
    f.push_back(csv::number(to_hz(e->plus().omega)));
    f.push_back(csv::number(to_hz(e->minus().omega)));
    f.push_back(csv::number(to_hz(e->plus().gamma)));
    f.push_back(csv::number(to_hz(e->minus().gamma)));
  } else {
    f.insert(f.end(), 4, "");
  }
  if (row.reduced) {
    f.push_back(csv::number(ratio(row.reduced->n1)));
    f.push_back(csv::number(ratio(row.reduced->n2)));
    f.push_back(csv::number(ratio(row.reduced->n_total)));
  } else {
    f.insert(f.end(), 3, "");
  }
  f.push_back(r.dark_limit ? csv::number(ratio(r.dark_limit->exact)) : "");
  if (e) {
    f.emplace_back(to_string(e->regime));
    f.push_back(std::string(to_string(e->plus().classification)) + "/" +
                std::string(to_string(e->minus().classification)));
    f.emplace_back(row.closed_form ? "closed_form" : "numeric");
  } else {
    f.insert(f.end(), 3, "");
  }
  f.push_back(row.full ? csv::number(ratio(row.full->n_total)) : "");
  f.push_back(row.trajectory ? csv::number(ratio(row.trajectory->n_total.mean)) : "");
  f.push_back(row.trajectory ? csv::number(ratio(row.trajectory->n_total.std_error)) : "");
  f.push_back(row.spectrum ? spectrum_file_name(r, k) : "");
  f.push_back(row.status);
  return f;
}

inline std::string sweep_csv(const SweepResult& r) {
  std::string out = csv::row(sweep_columns());
  for (std::size_t k = 0; k < r.rows.size(); ++k) out += csv::row(sweep_row_fields(r, k));
  return out;
}

namespace detail {

inline Json eigen_json(const EigenmodeReport& e) {
  Json modes = Json::array();
  for (const auto& m : e.modes)
    modes.push_back({{"omega_hz", to_hz(m.omega)},
                     {"gamma_hz", to_hz(m.gamma)},
                     {"classification", std::string(to_string(m.classification))}});
  return {{"regime", std::string(to_string(e.regime))}, {"plus", modes[0]}, {"minus", modes[1]}};
}

inline Json phonon_json(const PhononReport& p) {
  return {{"n1", p.n1}, {"n2", p.n2}, {"n_total", p.n_total}};
}

}  // namespace detail

inline Json sweep_json(const SweepResult& r) {
  Json rows = Json::array();
  for (std::size_t k = 0; k < r.rows.size(); ++k) {
    const SweepRow& row = r.rows[k];
    Json j;
    j["control_hz"] = to_hz(row.control);
    j["status"] = row.status;
    j["closed_form"] = row.closed_form ? detail::eigen_json(*row.closed_form) : Json(nullptr);
    j["numeric"] = row.numeric ? detail::eigen_json(*row.numeric) : Json(nullptr);
    j["reduced"] = row.reduced ? detail::phonon_json(*row.reduced) : Json(nullptr);
    j["full"] = row.full ? detail::phonon_json(*row.full) : Json(nullptr);
    if (row.trajectory)
      j["trajectory"] = {{"n1", row.trajectory->n1.mean},
                         {"n2", row.trajectory->n2.mean},
                         {"n_total", row.trajectory->n_total.mean},
                         {"n_total_stderr", row.trajectory->n_total.std_error},
                         {"samples", row.trajectory->samples}};
    else
      j["trajectory"] = nullptr;
    j["spectrum_file"] = row.spectrum ? Json(spectrum_file_name(r, k)) : Json(nullptr);
    j["adiabaticity"] = row.adiabaticity;
    j["warnings"] = row.warnings;
    rows.push_back(std::move(j));
  }
  Json out;
  out["scenario"] = r.scenario.name;
  out["n_th"] = r.n_th_ref;
  out["dark_limit"] = r.dark_limit ? Json{{"exact", r.dark_limit->exact}, {"approx", r.dark_limit->approx}}
                                   : Json(nullptr);
  out["rows"] = rows;
  return out;
}

inline Json metadata_json(const SweepResult& r, const EmitOptions& eo) {
  Json m;
  m["tool"] = std::string(kToolName);
  m["version"] = std::string(kToolVersion);
  m["seed"] = r.options.seed;
  m["rng"] = std::string(NormalStream::kIdentity);
  m["options"] = {{"with_full_model", r.options.with_full_model},
                  {"with_spectra", r.options.with_spectra},
                  {"with_trajectory_check", r.options.with_trajectory_check},
                  {"trajectory_steps", r.options.trajectory_steps},
                  {"format", eo.format == OutputFormat::csv ? "csv" : "json"}};
  m["points"] = r.rows.size();
  m["failed_points"] = r.failures();
  m["config"] = to_json(r.scenario);
  if (eo.timestamp) {
    const auto now = std::chrono::system_clock::now();
    m["created_unix"] = std::chrono::duration_cast<std::chrono::seconds>(now.time_since_epoch()).count();
  }
  return m;
}

namespace detail {

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw Error("failed writing " + path.string());
}

}  // namespace detail

/// Writes <name>.csv|json, <name>.meta.json and, for rows carrying a
/// spectrum, <name>_spectra/point_NNNN.csv. Returns the written paths.
inline std::vector<std::filesystem::path> emit(const SweepResult& r, const std::filesystem::path& out_dir,
                                               const EmitOptions& eo = {}) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw Error("cannot create output directory " + out_dir.string() + ": " + ec.message());

  std::vector<fs::path> written;
  const std::string stem = r.scenario.name;
  if (eo.format == OutputFormat::csv) {
    written.push_back(out_dir / (stem + ".csv"));
    detail::write_text(written.back(), sweep_csv(r));
  } else {
    written.push_back(out_dir / (stem + ".json"));
    detail::write_text(written.back(), sweep_json(r).dump(2) + "\n");
  }
  written.push_back(out_dir / (stem + ".meta.json"));
  detail::write_text(written.back(), metadata_json(r, eo).dump(2) + "\n");

  for (std::size_t k = 0; k < r.rows.size(); ++k) {
    if (!r.rows[k].spectrum) continue;
    const fs::path p = out_dir / spectrum_file_name(r, k);
    fs::create_directories(p.parent_path(), ec);
    if (ec) throw Error("cannot create " + p.parent_path().string() + ": " + ec.message());
    write_spectrum_csv(*r.rows[k].spectrum, p);
    written.push_back(p);
  }
  return written;
}

}  // namespace darkmode
