// edepth: certify entanglement depth from photon statistics.
//
//   edepth curve     --M 3,10,100 --grid 512 --output dir
//   edepth certify   --input record.json [--level ii] [--chain chain.json]
//   edepth mc        --input record.json --samples 100000 --seed 1 --output result.json
//   edepth fit-atoms --input snr.csv [--eta 0.07 --delta 0 --t1 250e-6]
//   edepth oracle    --M 3 --grid 40 --starts 256 --seed 1 --output oracle.csv
//   edepth scatter   --M 3 --samples 1000000 --seed 1 --output cloud.csv
//
// Exit codes: 0 ok, 2 input error, 3 undetermined region, 4 consistency failure.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "edepth/edepth.hpp"

namespace {

using nlohmann::json;
using namespace edepth;

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitUndetermined = 3;
constexpr int kExitConsistency = 4;

struct Settings {
  std::string input;
  std::string output = "-";
  std::vector<long long> groups;
  std::size_t grid = 0;
  std::size_t samples = 0;
  std::uint64_t seed = 1;
  std::string level;
  std::string chain_path;
  double tolerance = 1e-6;
  std::size_t starts = 0;
  double eta = SnrParams{}.eta;
  double delta = SnrParams{}.delta;
  double t1 = SnrParams{}.t1;
  std::optional<double> g2_override;
};

json defaults_json() {
  return {{"curve", {{"grid", kDefaultCurveGrid}, {"symmetric_grid", SymmetricOptions{}.grid}}},
          {"certify", {{"frontier_cap", MonteCarloOptions{}.frontier_cap}}},
          {"mc", {{"samples", 100000}, {"seed", 1}, {"symmetric_grid", kFastSymmetric.grid}}},
          {"fit-atoms", {{"eta", SnrParams{}.eta}, {"delta", SnrParams{}.delta}, {"t1", SnrParams{}.t1}}},
          {"oracle", {{"grid", 40}, {"starts", "256 for M <= 5, 1024 otherwise"}, {"tolerance", 1e-6}}},
          {"scatter", {{"samples", 1000000}, {"seed", 1}, {"measure", kSamplingMeasure}}},
          {"chain", to_json(EfficiencyChain{})},
          {"threads_env", kThreadsEnv}};
}

void emit(const std::string& path, const std::string& text) {
  if (path == "-") {
    std::cout << text;
  } else {
    write_file(path, text);
  }
}

std::string sibling(const std::string& path, const std::string& suffix) {
  if (path == "-") return "-";
  std::filesystem::path p(path);
  return (p.parent_path() / (p.stem().string() + suffix)).string();
}

EfficiencyChain load_chain(const Settings& s, std::vector<std::pair<std::string, std::string>>& inputs) {
  if (s.chain_path.empty()) return {};
  const auto text = read_file(s.chain_path);
  inputs.emplace_back(s.chain_path, text);
  try {
    return chain_from_json(json::parse(text));
  } catch (const json::exception& e) {
    throw domain_error(std::string("chain file: ") + e.what());
  }
}

MeasurementRecord load_record(const Settings& s, std::vector<std::pair<std::string, std::string>>& inputs) {
  if (s.input.empty()) throw domain_error("--input record file is required");
  const auto chain = load_chain(s, inputs);
  const auto text = read_file(s.input);
  inputs.emplace_back(s.input, text);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw domain_error(std::string("record file is not JSON: ") + e.what());
  }
  if (!s.level.empty()) j["level"] = s.level;
  try {
    return record_from_json(j, chain);
  } catch (const json::exception& e) {
    throw domain_error(std::string("record schema: ") + e.what());
  }
}

json config_of(const std::string& command, const Settings& s) {
  json c = {{"command", command}};
  if (!s.groups.empty()) c["M"] = s.groups;
  if (s.grid) c["grid"] = s.grid;
  if (s.samples) c["samples"] = s.samples;
  if (!s.level.empty()) c["level"] = s.level;
  if (s.starts) c["starts"] = s.starts;
  if (s.g2_override) c["g2_override"] = *s.g2_override;
  c["tolerance"] = s.tolerance;
  return c;
}

int cmd_curve(const Settings& s) {
  if (s.groups.empty()) throw domain_error("--M is required");
  const std::size_t grid = s.grid ? s.grid : kDefaultCurveGrid;
  const std::string dir = s.output == "-" ? "." : s.output;
  std::filesystem::create_directories(dir);
  const auto meta = metadata(config_of("curve", s), 0, {});
  for (long long m : s.groups) {
    const auto curve = build_curve(m, grid);
    const std::string stem = dir + "/curve_M" + std::to_string(m);
    write_file(stem + ".csv", csv_preamble(meta) + curve_csv(curve));
    json side = {{"M", m},
                 {"interval", {curve.interval_lo, curve.interval_hi}},
                 {"p1_lim1", curve.p1_lim1},
                 {"p1_lim2", curve.p1_lim2},
                 {"p1_max", curve.p1_max},
                 {"convexity_defect", curve.convexity_defect},
                 {"samples", curve.samples.size()},
                 {"metadata", meta}};
    write_file(stem + ".json", dump17(side));
  }
  return kExitOk;
}

MonteCarloOptions mc_options(const Settings& s) {
  MonteCarloOptions o;
  o.g2_override = s.g2_override;
  return o;
}

int cmd_certify(const Settings& s) {
  std::vector<std::pair<std::string, std::string>> inputs;
  const auto rec = load_record(s, inputs);
  auto opt = mc_options(s);
  opt.symmetric = SymmetricOptions{};
  const auto meta = metadata(config_of("certify", s), 0, inputs);
  try {
    const auto [m, k] = point_depth(rec, opt);
    const double g2 = opt.g2_override.value_or(rec.g2.value);
    emit(s.output, dump17({{"classification", "certified"},
                           {"record", to_json(rec)},
                           {"p2", p2_from_g2(rec.p1.value, g2)},
                           {"M_max", m},
                           {"K", k},
                           {"metadata", meta}}));
    return kExitOk;
  } catch (const undetermined_region& e) {
    emit(s.output, dump17({{"classification", "undetermined"}, {"record", to_json(rec)}, {"message", e.what()},
                           {"metadata", meta}}));
    return kExitUndetermined;
  }
}

int cmd_mc(const Settings& s) {
  std::vector<std::pair<std::string, std::string>> inputs;
  const auto rec = load_record(s, inputs);
  const std::size_t n = s.samples ? s.samples : 100000;
  const auto meta = metadata(config_of("mc", s), s.seed, inputs);
  try {
    const auto r = montecarlo_depth(rec, n, s.seed, mc_options(s));
    json j = to_json(r);
    j["record"] = to_json(rec);
    j["metadata"] = meta;
    emit(s.output, dump17(j));
    if (s.output != "-") write_file(sibling(s.output, "_hist.csv"), csv_preamble(meta) + histogram_csv(r.k_samples));
    return kExitOk;
  } catch (const undetermined_region& e) {
    emit(s.output, dump17({{"classification", "undetermined"}, {"message", e.what()}, {"metadata", meta}}));
    return kExitUndetermined;
  }
}

int cmd_fit_atoms(const Settings& s) {
  if (s.input.empty()) throw domain_error("--input SNR CSV is required");
  const auto text = read_file(s.input);
  const auto data = snr_from_csv(text, {s.eta, s.delta, s.t1});
  const auto fit = fit_atom_number(data);
  json cfg = config_of("fit-atoms", s);
  cfg["eta"] = s.eta;
  cfg["delta"] = s.delta;
  cfg["t1"] = s.t1;
  emit(s.output, dump17({{"N", fit.atoms},
                         {"sigma_N", fit.sigma_atoms},
                         {"log10_N", fit.log10_atoms},
                         {"sigma_log10_N", fit.sigma_log10},
                         {"N_dB", fit.db},
                         {"sigma_dB", fit.sigma_db},
                         {"rms_residual_dB", fit.rms_residual_db},
                         {"points", data.points.size()},
                         {"metadata", metadata(cfg, 0, {{s.input, text}})}}));
  return kExitOk;
}

int cmd_oracle(const Settings& s) {
  if (s.groups.size() != 1) throw domain_error("oracle takes exactly one --M");
  const int m = static_cast<int>(s.groups.front());
  const std::size_t grid = s.grid ? s.grid : 40;
  if (grid < 2) throw domain_error("--grid must be >= 2");
  const auto meta = metadata(config_of("oracle", s), s.seed, {});
  const double lo = 0.8 * std::max(p1_lim1(m), p1_lim2(m));
  const double hi = p1_max(m);
  std::string csv = csv_preamble(meta) + "p1,oracle_p2,bound_p2,symmetric_p2,rel_diff\n";
  double worst = 0.0;
  bool symmetric_optimal = true;
  // p2 ~ sqrt(p1_max - p1) at the top, so p1_max itself is left off the grid.
  for (std::size_t i = 0; i < grid; ++i) {
    const double p1 = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(grid);
    const double o = minimize_full(p1, m, {s.starts, s.seed, thread_count()});
    const double b = p2_min(p1, m);
    const double sym = p2_min_symmetric(p1, m);
    const double diff = std::abs(o - b) / std::max(b, 1e-12 / s.tolerance);
    worst = std::max(worst, diff);
    if (o < sym - std::max(s.tolerance * sym, 1e-12)) symmetric_optimal = false;
    csv += format17(p1) + "," + format17(o) + "," + format17(b) + "," + format17(sym) + "," + format17(diff) + "\n";
  }
  emit(s.output, csv);
  const json summary = {{"M", m},
                        {"grid", grid},
                        {"max_rel_disagreement", worst},
                        {"within_tolerance", worst <= s.tolerance},
                        {"symmetric_optimal", symmetric_optimal},
                        {"metadata", meta}};
  if (s.output == "-") {
    std::cerr << dump17(summary);
  } else {
    write_file(sibling(s.output, "_summary.json"), dump17(summary));
  }
  return worst <= s.tolerance ? kExitOk : kExitConsistency;
}

int cmd_scatter(const Settings& s) {
  if (s.groups.size() != 1) throw domain_error("scatter takes exactly one --M");
  const std::size_t n = s.samples ? s.samples : 1000000;
  json cfg = config_of("scatter", s);
  cfg["measure"] = kSamplingMeasure;
  const auto cloud = sample_states(static_cast<int>(s.groups.front()), n, s.seed);
  emit(s.output, csv_preamble(metadata(cfg, s.seed, {})) + cloud_csv(cloud));
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Entanglement-depth certification from one- and two-photon probabilities"};
  app.require_subcommand(0, 1);
  Settings s;
  bool show_config = false;
  app.add_flag("--show-config", show_config, "Print all defaults as JSON and exit");

  auto common = [&](CLI::App* sub) {
    sub->add_option("--output", s.output, "Output file (directory for curve); '-' is stdout");
  };
  auto* curve = app.add_subcommand("curve", "Lower-bound curves p2_min(p1) for each M");
  curve->add_option("--M", s.groups, "Group counts")->delimiter(',')->required();
  curve->add_option("--grid", s.grid, "Log-spaced p1 grid size");
  common(curve);

  auto record_opts = [&](CLI::App* sub) {
    sub->add_option("--input", s.input, "Measurement record (JSON)")->required();
    sub->add_option("--level", s.level, "Modelling level: raw|after_reemission|before_reemission|after_absorption");
    sub->add_option("--chain", s.chain_path, "Efficiency chain (JSON)");
    sub->add_option("--g2-override", s.g2_override, "Use this g2 instead of the record's");
    common(sub);
  };
  auto* certify = app.add_subcommand("certify", "Point-estimate depth for a measurement record");
  record_opts(certify);
  auto* mc = app.add_subcommand("mc", "Monte Carlo depth with 3-sigma lower bound");
  record_opts(mc);
  mc->add_option("--samples", s.samples, "Number of draws");
  mc->add_option("--seed", s.seed, "RNG seed");

  auto* fit = app.add_subcommand("fit-atoms", "Fit N to SNR data");
  fit->add_option("--input", s.input, "CSV with rate_hz, mean_photon_number, snr_db")->required();
  fit->add_option("--eta", s.eta, "Rephasing efficiency");
  fit->add_option("--delta", s.delta, "Detection-noise probability");
  fit->add_option("--t1", s.t1, "Excited-state lifetime [s]");
  common(fit);

  auto* oracle = app.add_subcommand("oracle", "Brute-force minimization against the bound");
  oracle->add_option("--M", s.groups, "Group count")->required();
  oracle->add_option("--grid", s.grid, "Number of p1 points");
  oracle->add_option("--starts", s.starts, "Multistart count");
  oracle->add_option("--seed", s.seed, "RNG seed");
  oracle->add_option("--tolerance", s.tolerance, "Relative agreement tolerance");
  common(oracle);

  auto* scatter = app.add_subcommand("scatter", "Random state cloud (p1, p2)");
  scatter->add_option("--M", s.groups, "Group count")->required();
  scatter->add_option("--samples", s.samples, "Number of states");
  scatter->add_option("--seed", s.seed, "RNG seed");
  common(scatter);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitInput;
  }

  if (show_config) {
    std::cout << dump17(defaults_json());
    return kExitOk;
  }
  try {
    if (*curve) return cmd_curve(s);
    if (*certify) return cmd_certify(s);
    if (*mc) return cmd_mc(s);
    if (*fit) return cmd_fit_atoms(s);
    if (*oracle) return cmd_oracle(s);
    if (*scatter) return cmd_scatter(s);
    std::cerr << app.help();
    return kExitInput;
  } catch (const undetermined_region& e) {
    std::cerr << "undetermined: " << e.what() << "\n";
    return kExitUndetermined;
  } catch (const consistency_error& e) {
    std::cerr << "consistency failure: " << e.what() << "\n";
    return kExitConsistency;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }
}
