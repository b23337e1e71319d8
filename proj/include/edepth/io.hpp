#pragma once

// Serialization helpers: 17-digit numbers, CSV tables, JSON records, FNV-1a
// checksums and the provenance block embedded in every output.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "edepth/bound.hpp"
#include "edepth/experiment.hpp"
#include "edepth/oracle.hpp"
#include "edepth/rng.hpp"

namespace edepth {

inline constexpr const char* kToolVersion = "1.0.0";

/// Round-trip exact decimal form of a double.
inline std::string format17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ull) {
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw domain_error("cannot open '" + path + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw domain_error("cannot write '" + path + "'");
  out << text;
}

// ---------------------------------------------------------------------------
// CSV

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
  }
  return out;
}

/// Header row plus comma-separated rows; blank lines and '#' comments are skipped.
inline CsvTable parse_csv(const std::string& text) {
  CsvTable t;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos || line[line.find_first_not_of(" \t")] == '#') continue;
    auto cells = split_csv_line(line);
    if (t.header.empty()) {
      t.header = std::move(cells);
    } else {
      if (cells.size() != t.header.size()) throw domain_error("CSV row has " + std::to_string(cells.size()) +
                                                              " cells, header has " + std::to_string(t.header.size()));
      t.rows.push_back(std::move(cells));
    }
  }
  if (t.header.empty()) throw domain_error("CSV input has no header row");
  return t;
}

inline std::size_t csv_column(const CsvTable& t, std::string_view name) {
  for (std::size_t i = 0; i < t.header.size(); ++i) {
    if (t.header[i] == name) return i;
  }
  throw domain_error("CSV column '" + std::string(name) + "' missing");
}

inline double parse_number(const std::string& s) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw domain_error("not a number: '" + s + "'");
  }
  if (used != s.size()) throw domain_error("not a number: '" + s + "'");
  return v;
}

/// Lines starting with '#' carry the provenance block in CSV outputs.
inline std::string csv_preamble(const nlohmann::json& meta) { return "# " + meta.dump() + "\n"; }

inline std::string curve_csv(const BoundCurve& c) {
  std::string s = "p1,p2_min,p2_bound\n";
  for (const auto& x : c.samples) s += format17(x.p1) + "," + format17(x.p2_min) + "," + format17(x.p2_bound) + "\n";
  return s;
}

inline std::string cloud_csv(const ScatterCloud& cloud) {
  std::string s = "p1,p2\n";
  s.reserve(cloud.points.size() * 48);
  for (const auto& p : cloud.points) s += format17(p.p1) + "," + format17(p.p2) + "\n";
  return s;
}

/// Fixed-width histogram of K samples over [min, max].
inline std::string histogram_csv(const std::vector<double>& ks, std::size_t bins = 100) {
  std::string s = "k_lo,k_hi,count\n";
  if (ks.empty()) return s;
  double lo = ks.front(), hi = ks.front();
  for (double k : ks) {
    lo = std::min(lo, k);
    hi = std::max(hi, k);
  }
  if (hi == lo) return s + format17(lo) + "," + format17(hi) + "," + std::to_string(ks.size()) + "\n";
  std::vector<std::size_t> count(bins, 0);
  const double w = (hi - lo) / static_cast<double>(bins);
  for (double k : ks) count[std::min(bins - 1, static_cast<std::size_t>((k - lo) / w))]++;
  for (std::size_t b = 0; b < bins; ++b) {
    s += format17(lo + w * static_cast<double>(b)) + "," +
         format17(b + 1 == bins ? hi : lo + w * static_cast<double>(b + 1)) + "," + std::to_string(count[b]) + "\n";
  }
  return s;
}

// ---------------------------------------------------------------------------
// JSON
//
// nlohmann's own dump prints the shortest round-trip form; outputs here use
// a fixed %.17g instead so every file has the same numeric layout.

namespace detail {

inline void dump17_into(std::string& out, const nlohmann::json& j, int indent, int depth) {
  const std::string pad(static_cast<std::size_t>(indent * (depth + 1)), ' ');
  const std::string pad_end(static_cast<std::size_t>(indent * depth), ' ');
  switch (j.type()) {
    case nlohmann::json::value_t::number_float: {
      const double v = j.get<double>();
      out += std::isfinite(v) ? format17(v) : "null";
      return;
    }
    case nlohmann::json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ",\n";
        first = false;
        out += pad + nlohmann::json(it.key()).dump() + ": ";
        dump17_into(out, it.value(), indent, depth + 1);
      }
      out += "\n" + pad_end + "}";
      return;
    }
    case nlohmann::json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      out += "[\n";
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) out += ",\n";
        out += pad;
        dump17_into(out, j[i], indent, depth + 1);
      }
      out += "\n" + pad_end + "]";
      return;
    }
    default:
      out += j.dump();
  }
}

}  // namespace detail

/// Pretty JSON with every float printed to 17 significant digits.
inline std::string dump17(const nlohmann::json& j) {
  std::string out;
  detail::dump17_into(out, j, 2, 0);
  return out + "\n";
}

inline nlohmann::json to_json(const Uncertain& u) { return {{"value", u.value}, {"sigma", u.sigma}}; }

inline Uncertain uncertain_from_json(const nlohmann::json& j, const char* name) {
  if (!j.contains(name)) throw domain_error(std::string("record field '") + name + "' missing");
  const auto& v = j.at(name);
  if (v.is_number()) return {v.get<double>(), 0.0};
  if (!v.is_object() || !v.contains("value") || !v.at("value").is_number()) {
    throw domain_error(std::string("record field '") + name + "' needs {\"value\": x, \"sigma\": s}");
  }
  Uncertain u{v.at("value").get<double>(), 0.0};
  if (v.contains("sigma")) {
    if (!v.at("sigma").is_number()) throw domain_error(std::string("sigma of '") + name + "' must be a number");
    u.sigma = v.at("sigma").get<double>();
  }
  return u;
}

/// Record schema: {"p1": {value, sigma}, "g2": {...}, "N": {...}, "level": "raw"|...,
/// optional "p1_is_raw": true to push p1 through the efficiency chain}.
inline MeasurementRecord record_from_json(const nlohmann::json& j, const EfficiencyChain& chain) {
  if (!j.is_object()) throw domain_error("measurement record must be a JSON object");
  MeasurementRecord r;
  r.p1 = uncertain_from_json(j, "p1");
  r.g2 = uncertain_from_json(j, "g2");
  r.atoms = uncertain_from_json(j, "N");
  r.level = j.contains("level") ? parse_level(j.at("level").get<std::string>()) : Level::raw;
  if (j.value("p1_is_raw", false)) {
    const double f = undone_efficiency(chain, r.level);
    r.p1 = {effective_p1(r.p1.value, chain, r.level), r.p1.sigma / f};
  }
  r.validate();
  return r;
}

inline nlohmann::json to_json(const MeasurementRecord& r) {
  return {{"p1", to_json(r.p1)}, {"g2", to_json(r.g2)}, {"N", to_json(r.atoms)}, {"level", to_string(r.level)}};
}

inline EfficiencyChain chain_from_json(const nlohmann::json& j) {
  EfficiencyChain c;
  const auto& src = j.contains("chain") ? j.at("chain") : j;
  c.heralding = src.value("heralding", c.heralding);
  c.memory_total = src.value("memory_total", c.memory_total);
  c.detection = src.value("detection", c.detection);
  c.absorption = src.value("absorption", c.absorption);
  c.dephasing = src.value("dephasing", c.dephasing);
  c.validate();
  return c;
}

inline nlohmann::json to_json(const EfficiencyChain& c) {
  return {{"heralding", c.heralding},   {"memory_total", c.memory_total}, {"detection", c.detection},
          {"absorption", c.absorption}, {"dephasing", c.dephasing},       {"reemission", c.reemission()}};
}

/// CSV columns: rate_hz, mean_photon_number, snr_db (or snr). Parameters come separately.
inline SnrDataset snr_from_csv(const std::string& text, const SnrParams& params) {
  const auto t = parse_csv(text);
  const auto cr = csv_column(t, "rate_hz");
  const auto ca = csv_column(t, "mean_photon_number");
  bool in_db = true;
  std::size_t cs = 0;
  try {
    cs = csv_column(t, "snr_db");
  } catch (const domain_error&) {
    cs = csv_column(t, "snr");
    in_db = false;
  }
  SnrDataset d{{}, params};
  for (const auto& row : t.rows) {
    const double v = parse_number(row[cs]);
    d.points.push_back({parse_number(row[cr]), parse_number(row[ca]), in_db ? from_db(v) : v});
  }
  return d;
}

inline std::string snr_csv(const SnrDataset& d) {
  std::string s = "rate_hz,mean_photon_number,snr_db\n";
  for (const auto& p : d.points) s += format17(p.rate) + "," + format17(p.alpha2) + "," + format17(to_db(p.snr)) + "\n";
  return s;
}

inline nlohmann::json to_json(const DepthResult& r, bool with_samples = false) {
  nlohmann::json j = {{"M_max", r.max_groups},
                      {"K", r.k},
                      {"K_mean", r.k_mean},
                      {"K_std", r.k_std},
                      {"K_lower_3sigma", r.k_lower_3sigma},
                      {"K_quantile_0p3", r.k_quantile_0p3},
                      {"n_samples", r.n_samples},
                      {"n_valid", r.n_valid},
                      {"n_undetermined", r.n_undetermined},
                      {"n_infeasible", r.n_infeasible},
                      {"truncation_fraction", {{"p1", r.truncation_p1}, {"g2", r.truncation_g2}, {"N", r.truncation_atoms}}},
                      {"lower_bound_estimator", "max(1, mean - 3 std), capped at K; quantile reported alongside"}};
  if (with_samples) j["K_samples"] = r.k_samples;
  return j;
}

/// Provenance block: tool version, hash of the effective configuration, seed,
/// input checksums and the RNG identifier.
inline nlohmann::json metadata(const nlohmann::json& config, std::uint64_t seed,
                               const std::vector<std::pair<std::string, std::string>>& inputs) {
  nlohmann::json sums = nlohmann::json::object();
  for (const auto& [name, bytes] : inputs) sums[name] = "fnv1a64:" + hex64(fnv1a(bytes));
  return {{"tool", "edepth"},
          {"version", kToolVersion},
          {"config_hash", "fnv1a64:" + hex64(fnv1a(config.dump()))},
          {"config", config},
          {"seed", seed},
          {"rng", Philox4x32::algorithm},
          {"input_checksums", sums}};
}

}  // namespace edepth
