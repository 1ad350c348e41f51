#include <catch_amalgamated.hpp>

#include "darkmode/emit.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace darkmode;
using Catch::Approx;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out(1);
  bool quoted = false;
  for (std::size_t k = 0; k < line.size(); ++k) {
    const char c = line[k];
    if (quoted) {
      if (c == '"' && k + 1 < line.size() && line[k + 1] == '"') {
        out.back() += '"';
        ++k;
      } else if (c == '"') {
        quoted = false;
      } else {
        out.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.emplace_back();
    } else {
      out.back() += c;
    }
  }
  return out;
}

Scenario small(const char* name, std::size_t points) {
  Scenario s = builtin_scenario(name);
  s.grid.points = points;
  return s;
}

fs::path scratch(const char* leaf) {
  const fs::path p = fs::temp_directory_path() / "darkmode_emit_test" / leaf;
  fs::remove_all(p);
  return p;
}

double dark_gamma(const SweepRow& r) { return std::min(r.eigen()->plus().gamma, r.eigen()->minus().gamma); }

}  // namespace

TEST_CASE("A1 sweep: cooling floor at the EP", "[sweep]") {
  const SweepResult r = run_sweep(builtin_scenario("A1"));
  REQUIRE(r.rows.size() == 102);
  REQUIRE(r.failures() == 0);
  REQUIRE(r.dark_limit);
  std::size_t best = 0;
  for (std::size_t k = 0; k < r.rows.size(); ++k)
    if (r.rows[k].reduced->n_total < r.rows[best].reduced->n_total) best = k;
  const double ep = hz(40.0);
  CHECK(std::abs(r.rows[best].control - ep) <= std::abs(r.rows[best + 1].control - r.rows[best - 1].control));
  CHECK(r.rows[best].reduced->n_total == Approx(r.dark_limit->exact).epsilon(0.01));
  for (std::size_t k = best + 1; k < r.rows.size(); ++k)
    REQUIRE(r.rows[k].reduced->n_total > r.rows[k - 1].reduced->n_total);
}

TEST_CASE("A1 sweep: eigenmode shapes", "[sweep]") {
  const SweepResult r = run_sweep(builtin_scenario("A1"));
  const double gamma = 0.5 * (r.scenario.base.mech[0].gamma + r.scenario.base.mech[1].gamma);
  double prev_dark = std::numeric_limits<double>::infinity();
  for (const auto& row : r.rows) {
    const EigenmodeReport& e = *row.eigen();
    REQUIRE(row.closed_form);
    if (row.control < hz(40.0)) {
      REQUIRE(e.regime == Regime::pre_ep);
      REQUIRE(e.plus().omega > e.minus().omega);
      REQUIRE(e.plus().gamma == e.minus().gamma);
    } else {
      REQUIRE(e.regime != Regime::pre_ep);
      REQUIRE(e.plus().omega == e.minus().omega);
      REQUIRE(e.plus().gamma <= e.minus().gamma);
      REQUIRE(e.plus().gamma <= prev_dark);
      prev_dark = e.plus().gamma;
    }
  }
  CHECK(r.rows[r.rows.size() - 1].eigen()->plus().gamma < 2.5 * gamma);
}

TEST_CASE("A2 sweep: dark-mode breaking", "[sweep]") {
  const SweepResult r = run_sweep(builtin_scenario("A2"));
  REQUIRE(r.failures() == 0);
  for (std::size_t k = 1; k < r.rows.size(); ++k) {
    REQUIRE(r.rows[k].reduced->n_total <= r.rows[k - 1].reduced->n_total);
    REQUIRE(dark_gamma(r.rows[k]) > dark_gamma(r.rows[k - 1]));
    REQUIRE_FALSE(r.rows[k].closed_form);
  }
  CHECK(r.rows.back().reduced->n_total <= 0.1 * r.dark_limit->exact);
}

TEST_CASE("B sweep: constant frequencies, growing linewidths", "[sweep]") {
  const SweepResult r = run_sweep(builtin_scenario("B"));
  const auto& first = *r.rows.front().eigen();
  for (std::size_t k = 1; k < r.rows.size(); ++k) {
    const auto& e = *r.rows[k].eigen();
    const auto& prev = *r.rows[k - 1].eigen();
    REQUIRE(e.regime == Regime::not_applicable);
    REQUIRE(std::abs(e.plus().omega - first.plus().omega) <= 1e-9 * first.plus().omega);
    REQUIRE(std::abs(e.minus().omega - first.minus().omega) <= 1e-9 * first.minus().omega);
    REQUIRE(e.plus().gamma > prev.plus().gamma);
    REQUIRE(e.minus().gamma > prev.minus().gamma);
    REQUIRE(r.rows[k].reduced->n_total <= r.rows[k - 1].reduced->n_total);
  }
  CHECK(r.rows.back().reduced->n_total < r.dark_limit->exact);
}

TEST_CASE("optional cross-checks fill their columns", "[sweep]") {
  SweepOptions opt;
  opt.with_full_model = true;
  opt.with_spectra = true;
  opt.with_trajectory_check = true;
  opt.trajectory_steps = 100000;
  opt.seed = 11;
  const SweepResult r = run_sweep(small("B", 3), opt);
  for (const auto& row : r.rows) {
    REQUIRE(row.ok);
    REQUIRE(row.full);
    REQUIRE(row.spectrum);
    REQUIRE(row.trajectory);
    CHECK(row.full->n_total == Approx(row.reduced->n_total).epsilon(0.02));
    CHECK(std::abs(row.trajectory->n_total.mean - row.reduced->n_total) <= 4.0 * row.trajectory->n_total.std_error);
  }
}

TEST_CASE("failing points become rows; a majority of failures is an error", "[sweep]") {
  SweepOptions opt;
  opt.with_trajectory_check = true;
  opt.trajectory_steps = 120;  // far too short for the occupation estimate
  CHECK_THROWS_AS(run_sweep(small("B", 4), opt), NumericError);
}

TEST_CASE("sweeps are independent of thread count", "[sweep]") {
  SweepOptions one, many;
  many.parallelism = 4;
  const Scenario s = small("A1", 30);
  CHECK(sweep_csv(run_sweep(s, one)) == sweep_csv(run_sweep(s, many)));
}

TEST_CASE("thread override from the environment", "[sweep]") {
  ::setenv("DARKMODE_THREADS", "3", 1);
  CHECK(resolve_parallelism(1) == 3);
  ::setenv("DARKMODE_THREADS", "zero", 1);
  CHECK(resolve_parallelism(2) == 2);
  ::unsetenv("DARKMODE_THREADS");
  CHECK(resolve_parallelism(0) == 1);
}

TEST_CASE("CSV layout", "[emit]") {
  const SweepResult r = run_sweep(builtin_scenario("A1"));
  const std::string text = sweep_csv(r);
  CHECK(text.find('\r') == std::string::npos);
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  const auto header = split_csv_line(line);
  const std::vector<std::string> expected{"control_hz",    "omega_plus_hz",    "omega_minus_hz",
                                          "gamma_plus_hz", "gamma_minus_hz",   "n1_over_nth",
                                          "n2_over_nth",   "ntotal_over_nth",  "dark_limit_over_nth",
                                          "regime",        "classification"};
  REQUIRE(header.size() >= expected.size());
  CHECK(std::vector<std::string>(header.begin(), header.begin() + 11) == expected);
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    const auto f = split_csv_line(line);
    REQUIRE(f.size() == header.size());
    // Values re-read from the CSV match the internal rad/s values.
    REQUIRE(hz(std::stod(f[0])) == Approx(r.rows[rows].control).epsilon(1e-12));
    REQUIRE(hz(std::stod(f[1])) == Approx(r.rows[rows].eigen()->plus().omega).epsilon(1e-12));
    ++rows;
  }
  CHECK(rows == r.rows.size());
}

TEST_CASE("CSV quoting", "[emit]") {
  CHECK(csv::field("plain") == "plain");
  CHECK(csv::field("a,b") == "\"a,b\"");
  CHECK(csv::field("say \"hi\"") == "\"say \"\"hi\"\"\"");
  CHECK(csv::field("two\nlines") == "\"two\nlines\"");
  CHECK(csv::number(0.1) == "0.10000000000000001");
  CHECK(csv::number(std::optional<double>{}) == "");
}

TEST_CASE("emission writes table, metadata and spectra", "[emit]") {
  SweepOptions opt;
  opt.with_spectra = true;
  const SweepResult r = run_sweep(small("A1", 4), opt);
  const fs::path out = scratch("spectra");
  const auto files = emit(r, out);
  CHECK(files.size() == 2 + r.rows.size());
  CHECK(fs::exists(out / "A1.csv"));
  CHECK(fs::exists(out / "A1.meta.json"));
  CHECK(fs::exists(out / "A1_spectra" / "point_0000.csv"));
  CHECK(slurp(out / "A1_spectra" / "point_0000.csv").rfind("freq_hz,psd\n", 0) == 0);

  const fs::path plain = scratch("plain");
  CHECK(emit(run_sweep(small("A1", 4)), plain).size() == 2);
}

TEST_CASE("JSON output and metadata", "[emit]") {
  const SweepResult r = run_sweep(small("A2", 5));
  const fs::path out = scratch("json");
  emit(r, out, {OutputFormat::json, false});
  const Json table = Json::parse(slurp(out / "A2.json"));
  CHECK(table["rows"].size() == 5);
  CHECK(table["scenario"] == "A2");
  const Json meta = Json::parse(slurp(out / "A2.meta.json"));
  CHECK(meta["tool"] == "darkmode");
  CHECK(meta["rng"] == std::string(NormalStream::kIdentity));
  CHECK_FALSE(meta.contains("created_unix"));

  const Scenario again = load_config(out / "A2.meta.json");
  CHECK(sweep_csv(run_sweep(again)) == sweep_csv(r));

  const fs::path stamped = scratch("stamped");
  emit(r, stamped, {OutputFormat::json, true});
  CHECK(Json::parse(slurp(stamped / "A2.meta.json")).contains("created_unix"));
}

TEST_CASE("repeated runs are byte-identical", "[emit]") {
  for (const char* name : {"A1", "A2", "B"}) {
    const fs::path a = scratch("det_a"), b = scratch("det_b");
    for (auto fmt : {OutputFormat::csv, OutputFormat::json}) {
      emit(run_sweep(builtin_scenario(name)), a, {fmt, false});
      emit(run_sweep(builtin_scenario(name)), b, {fmt, false});
    }
    for (const char* ext : {".csv", ".json", ".meta.json"}) {
      INFO(name << ext);
      CHECK(slurp(a / (std::string(name) + ext)) == slurp(b / (std::string(name) + ext)));
    }
  }
}

TEST_CASE("unwritable destination", "[emit]") {
  const fs::path dir = scratch("blocked");
  fs::create_directories(dir.parent_path());
  std::ofstream(dir) << "a file, not a directory";
  CHECK_THROWS_AS(emit(run_sweep(small("B", 2)), dir / "sub"), Error);
  fs::remove(dir);
}
