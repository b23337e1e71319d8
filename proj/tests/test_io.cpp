#include <cmath>
#include <string>

#include <gtest/gtest.h>
#include <json.hpp>

#include "edepth/io.hpp"

using namespace edepth;
using nlohmann::json;

TEST(Io, Format17RoundTrips) {
  for (double v : {0.1, 1.0 / 3.0, 5.29e-8, 4.0e10, -2.5, 0.0}) EXPECT_EQ(std::stod(format17(v)), v);
}

TEST(Io, Fnv1aKnownVectors) {
  EXPECT_EQ(fnv1a(""), 0xcbf29ce484222325ull);
  EXPECT_EQ(fnv1a("a"), 0xaf63dc4c8601ec8cull);
  EXPECT_EQ(fnv1a("foobar"), 0x85944171f73967e8ull);
  EXPECT_EQ(hex64(0xabcull), "0000000000000abc");
}

TEST(Io, CsvParsing) {
  const auto t = parse_csv("# comment\n\na, b ,c\n1,2,3\n  # indented comment\n4, 5,6\n");
  ASSERT_EQ(t.header.size(), 3u);
  EXPECT_EQ(t.header[1], "b");
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(t.rows[1][1], "5");
  EXPECT_EQ(csv_column(t, "c"), 2u);
  EXPECT_THROW(csv_column(t, "d"), domain_error);
  EXPECT_THROW(parse_csv("a,b\n1\n"), domain_error);
  EXPECT_THROW(parse_csv("# only\n"), domain_error);
}

TEST(Io, ParseNumber) {
  EXPECT_EQ(parse_number("1e6"), 1e6);
  EXPECT_THROW(parse_number("12abc"), domain_error);
  EXPECT_THROW(parse_number(""), domain_error);
}

TEST(Io, Dump17IsStableAndParses) {
  const json j = {{"b", 0.1}, {"a", {1, 2.5, "x"}}, {"c", {{"z", true}, {"y", nullptr}}}, {"e", json::array()}};
  const auto text = dump17(j);
  EXPECT_EQ(text, dump17(json::parse(text)));
  EXPECT_EQ(json::parse(text), j);
  EXPECT_NE(text.find("0.10000000000000001"), std::string::npos);
}

TEST(Io, RecordFromJson) {
  const EfficiencyChain chain;
  const auto r = record_from_json(json::parse(R"({"p1": {"value": 0.013, "sigma": 0.002}, "g2": 0.02,
                                                   "N": {"value": 4e10}, "level": "ii"})"),
                                  chain);
  EXPECT_EQ(r.p1.value, 0.013);
  EXPECT_EQ(r.p1.sigma, 0.002);
  EXPECT_EQ(r.g2.sigma, 0.0);
  EXPECT_EQ(r.atoms.sigma, 0.0);
  EXPECT_EQ(r.level, Level::after_reemission);
  const auto raw = record_from_json(
      json::parse(R"({"p1": {"value": 0.0023, "sigma": 0.0003}, "g2": 0.02, "N": 4e10, "level": "iv",
                      "p1_is_raw": true})"),
      chain);
  EXPECT_NEAR(raw.p1.value, 0.0023 / undone_efficiency(chain, Level::after_absorption), 1e-15);
  EXPECT_NEAR(raw.p1.sigma / raw.p1.value, 0.0003 / 0.0023, 1e-12);
  EXPECT_THROW(record_from_json(json::parse(R"({"g2": 0.02, "N": 4e10})"), chain), domain_error);
  EXPECT_THROW(record_from_json(json::parse(R"({"p1": "x", "g2": 0.02, "N": 4e10})"), chain), domain_error);
  EXPECT_THROW(record_from_json(json::parse(R"({"p1": 0.01, "g2": 0.02, "N": 4e10, "level": "v"})"), chain),
               domain_error);
  EXPECT_THROW(record_from_json(json::parse("[1, 2]"), chain), domain_error);
}

TEST(Io, TableRecordsLoad) {
  const char* levels[] = {"i", "ii", "iii", "iv"};
  const double p1[] = {0.0023, 0.013, 0.016, 0.16};
  for (int k = 0; k < 4; ++k) {
    const auto text = read_file(std::string(EDEPTH_DATA_DIR) + "/table1/level_" + levels[k] + ".json");
    const auto r = record_from_json(json::parse(text), {});
    EXPECT_EQ(r.p1.value, p1[k]);
    EXPECT_EQ(r.g2.value, 0.020);
    EXPECT_EQ(r.atoms.value, 4.0e10);
    EXPECT_EQ(r.level, parse_level(levels[k]));
  }
}

TEST(Io, ChainFromJson) {
  const auto c = chain_from_json(json::parse(read_file(std::string(EDEPTH_DATA_DIR) + "/default_chain.json")));
  EXPECT_EQ(c.detection, 0.17);
  EXPECT_EQ(c.dephasing, 0.10);
  const auto flat = chain_from_json(json::parse(R"({"detection": 0.5})"));
  EXPECT_EQ(flat.detection, 0.5);
  EXPECT_EQ(flat.heralding, 0.19);
  EXPECT_THROW(chain_from_json(json::parse(R"({"detection": 1.5})")), domain_error);
  EXPECT_EQ(to_json(c).at("reemission").get<double>(), c.reemission());
}

TEST(Io, SnrCsvRoundTrip) {
  const SnrParams p{0.07, 1e-5, 250e-6};
  const auto d = synthetic_snr(p, 1e10, {1e2, 1e3, 1e4}, {1e6, 1e6, 1e6}, 0.05, 2);
  const auto back = snr_from_csv(snr_csv(d), p);
  ASSERT_EQ(back.points.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(back.points[i].snr / d.points[i].snr, 1.0, 1e-14);
  const auto linear = snr_from_csv("rate_hz,mean_photon_number,snr\n10,1,100\n", p);
  EXPECT_EQ(linear.points[0].snr, 100.0);
  EXPECT_THROW(snr_from_csv("rate_hz,snr\n10,100\n", p), domain_error);
  EXPECT_THROW(snr_from_csv("rate_hz,mean_photon_number,snr\n10,1,abc\n", p), domain_error);
}

TEST(Io, Histogram) {
  const auto deg = histogram_csv({3.0, 3.0, 3.0});
  EXPECT_EQ(deg, "k_lo,k_hi,count\n3,3,3\n");
  const auto h = parse_csv(histogram_csv({1.0, 2.0, 3.0, 4.0, 10.0}, 3));
  ASSERT_EQ(h.rows.size(), 3u);
  std::size_t total = 0;
  for (const auto& row : h.rows) total += std::stoul(row[2]);
  EXPECT_EQ(total, 5u);
  EXPECT_EQ(parse_number(h.rows.back()[1]), 10.0);
}

TEST(Io, CurveCsvHasHeaderAndRows) {
  const auto curve = build_curve(10, 32);
  const auto t = parse_csv(csv_preamble(metadata({{"command", "curve"}}, 0, {})) + curve_csv(curve));
  EXPECT_EQ(t.header, (std::vector<std::string>{"p1", "p2_min", "p2_bound"}));
  EXPECT_EQ(t.rows.size(), curve.samples.size());
}

TEST(Io, Metadata) {
  const json cfg = {{"command", "mc"}, {"samples", 10}};
  const auto m = metadata(cfg, 7, {{"in.json", "abc"}});
  EXPECT_EQ(m.at("tool"), "edepth");
  EXPECT_EQ(m.at("version"), kToolVersion);
  EXPECT_EQ(m.at("seed"), 7);
  EXPECT_EQ(m.at("config"), cfg);
  EXPECT_EQ(m.at("config_hash"), "fnv1a64:" + hex64(fnv1a(cfg.dump())));
  EXPECT_EQ(m.at("input_checksums").at("in.json"), "fnv1a64:" + hex64(fnv1a("abc")));
  EXPECT_FALSE(m.at("rng").get<std::string>().empty());
}

TEST(Io, DepthResultJson) {
  DepthResult r;
  r.max_groups = 11;
  r.k = 3.6e9;
  r.k_samples = {1.0, 2.0};
  const auto j = to_json(r);
  EXPECT_EQ(j.at("M_max"), 11);
  EXPECT_FALSE(j.contains("K_samples"));
  EXPECT_EQ(to_json(r, true).at("K_samples").size(), 2u);
  EXPECT_TRUE(j.contains("lower_bound_estimator"));
}

TEST(Io, MissingFileThrows) { EXPECT_THROW(read_file("/nonexistent/x.json"), domain_error); }
