#include <gtest/gtest.h>

#include <bit>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "spectraprune/error.hpp"
#include "spectraprune/report.hpp"
#include "test_support.hpp"

namespace spectraprune {
namespace {

using nlohmann::json;

std::vector<std::string> split_lines(const std::string& s) {
  std::vector<std::string> lines;
  std::istringstream in(s);
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  return lines;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::istringstream in(line);
  for (std::string cell; std::getline(in, cell, ',');) cells.push_back(cell);
  return cells;
}

SweepRow awkward_row() {
  SweepRow row;
  row.config.method = Method::kLowRank;
  row.config.q = 0.1;
  row.config.rank_k = 3;
  row.config.seed = 18446744073709551615ull >> 1;
  row.achieved_sparsity = 1.0 / 3.0;
  row.err_two_norm = 4.9406564584124654e-324;
  row.err_f_norm = std::numeric_limits<double>::max();
  row.tilde_f_norm = 2.0 / 7.0;
  row.threshold_t = 0.30000000000000004;
  row.degenerate = true;
  return row;
}

TEST(Report, EmptySweepHasEmptyRows) {
  const std::string text = render_report(sweep_report({}, 0), ReportFormat::kJson);
  const json doc = json::parse(text);
  EXPECT_EQ(doc["schema"], "sweep-v1");
  ASSERT_TRUE(doc["rows"].is_array());
  EXPECT_TRUE(doc["rows"].empty());
  EXPECT_EQ(split_lines(render_report(sweep_report({}, 0), ReportFormat::kCsv)).size(), 1u);
}

TEST(Report, OneSweepRowCsv) {
  const SweepRow row = awkward_row();
  const std::string csv = render_report(sweep_report({&row, 1}, 5), ReportFormat::kCsv);
  const auto lines = split_lines(csv);
  ASSERT_EQ(lines.size(), 2u);
  EXPECT_EQ(lines[0],
            "method,keep_fraction,q,c,rank_k,seed,achieved_sparsity,err_two_norm,err_f_norm,"
            "tilde_f_norm,threshold_t,degenerate");
  const auto cells = split_csv(lines[1]);
  ASSERT_EQ(cells.size(), 12u);
  EXPECT_EQ(cells[0], "lowrank");
  EXPECT_EQ(cells[4], "3");
  EXPECT_EQ(cells[5], "9223372036854775807");
  EXPECT_EQ(cells[11], "true");
  const double expect[] = {row.achieved_sparsity, row.err_two_norm, row.err_f_norm,
                           row.tilde_f_norm, row.threshold_t};
  for (int k = 0; k < 5; ++k) {
    EXPECT_EQ(std::bit_cast<std::uint64_t>(std::strtod(cells[6 + k].c_str(), nullptr)),
              std::bit_cast<std::uint64_t>(expect[k]))
        << cells[6 + k];
  }
}

TEST(Report, JsonReparseBitExact) {
  std::vector<SweepRow> rows(3, awkward_row());
  rows[1].err_f_norm = 1e-300;
  rows[2].achieved_sparsity = 0.0;
  const json doc = json::parse(render_report(sweep_report(rows, 9), ReportFormat::kJson));
  EXPECT_EQ(doc["seed"], 9);
  ASSERT_EQ(doc["rows"].size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    const json& r = doc["rows"][i];
    auto same = [](double got, double want) {
      EXPECT_EQ(std::bit_cast<std::uint64_t>(got), std::bit_cast<std::uint64_t>(want));
    };
    same(r["achieved_sparsity"].get<double>(), rows[i].achieved_sparsity);
    same(r["err_two_norm"].get<double>(), rows[i].err_two_norm);
    same(r["err_f_norm"].get<double>(), rows[i].err_f_norm);
    same(r["tilde_f_norm"].get<double>(), rows[i].tilde_f_norm);
    same(r["threshold_t"].get<double>(), rows[i].threshold_t);
    same(r["q"].get<double>(), rows[i].config.q);
    EXPECT_EQ(r["method"], "lowrank");
    EXPECT_EQ(r["degenerate"], true);
    EXPECT_EQ(r["seed"].get<std::uint64_t>(), rows[i].config.seed);
  }
}

TEST(Report, SchemaNamesAndMeta) {
  SpectrumSummary s;
  s.rows = 3;
  s.cols = 2;
  s.top_singular_values = {2.0, 1.0};
  s.two_norm = 2.0;
  s.f_norm = std::sqrt(5.0);
  s.nnz = 4;
  const json summary = json::parse(render_report(spectrum_report(s, 1), ReportFormat::kJson));
  EXPECT_EQ(summary["schema"], "spectrum-v1");
  EXPECT_EQ(summary["nnz"], 4);
  EXPECT_EQ(summary["rows"].size(), 2u);
  EXPECT_EQ(summary["rows"][1]["singular_value"], 1.0);

  const NormTrajectory t{{"e0", "e1"}, {1.0, 2.0}, {3.0, 4.0}};
  const json traj = json::parse(render_report(trajectory_report_table(t, 0), ReportFormat::kJson));
  EXPECT_EQ(traj["schema"], "trajectory-v1");
  EXPECT_EQ(traj["rows"][1]["label"], "e1");
  EXPECT_EQ(traj["rows"][1]["f_norm"], 4.0);

  const std::vector<ChannelSweepRow> ch = {{0, 1.0, 0.5, 2.0}, {1, 3.0, 1.5, 1.0}};
  const std::size_t removed[] = {0};
  const json chan = json::parse(render_report(channels_report(ch, removed, 2.5, 0), ReportFormat::kJson));
  EXPECT_EQ(chan["schema"], "channels-v1");
  EXPECT_EQ(chan["removed"], json::array({0}));
  EXPECT_EQ(chan["rows"][0]["removed"], true);
  EXPECT_EQ(chan["rows"][1]["removed"], false);

  const SpectrumDelta d{{3.0, 1.0}, {3.0, 0.0}, 1.0, 1.0};
  const json delta = json::parse(render_report(spectrum_delta_report(d, 0), ReportFormat::kJson));
  EXPECT_EQ(delta["schema"], "spectrum-delta-v1");
  EXPECT_EQ(delta["rows"][1]["sigma_modified"], 0.0);
}

TEST(Report, CsvMetaRepeatedAndShadowed) {
  const std::vector<ChannelSweepRow> ch = {{0, 1.0, 0.5, 2.0}, {1, 3.0, 1.5, 1.0}};
  const std::size_t removed[] = {0};
  const auto lines = split_lines(render_report(channels_report(ch, removed, 2.5, 4), ReportFormat::kCsv));
  ASSERT_EQ(lines.size(), 3u);
  EXPECT_EQ(lines[0], "seed,f_norm,channel_index,l1_mass,l2_mass,tilde_f_norm,removed");
  EXPECT_EQ(lines[1], "4,2.5,0,1,0.5,2,true");
  EXPECT_EQ(lines[2], "4,2.5,1,3,1.5,1,false");
}

TEST(Report, CsvQuotesStrings) {
  const NormTrajectory t{{"epoch,1"}, {1.0}, {2.0}};
  const auto lines = split_lines(render_report(trajectory_report_table(t, 0), ReportFormat::kCsv));
  EXPECT_EQ(lines[1], "0,\"epoch,1\",1,2");
}

TEST(Report, WriteAndFormats) {
  testing::TempDir dir;
  write_report(dir / "r.json", sweep_report({}, 0), ReportFormat::kJson);
  std::ifstream in(dir / "r.json");
  std::stringstream ss;
  ss << in.rdbuf();
  EXPECT_EQ(ss.str(), render_report(sweep_report({}, 0), ReportFormat::kJson));
  EXPECT_THROW(write_report(dir / "missing" / "r.json", sweep_report({}, 0), ReportFormat::kJson),
               IoError);
  EXPECT_EQ(parse_report_format("csv"), ReportFormat::kCsv);
  EXPECT_THROW(parse_report_format("xml"), ParameterError);
  EXPECT_EQ(format_double(0.1), "0.10000000000000001");
}

}  // namespace
}  // namespace spectraprune
