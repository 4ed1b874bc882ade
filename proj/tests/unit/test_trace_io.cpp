#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "rbmlab/trace_io.hpp"

using namespace rbm;

TEST(FormatDouble, ShortestRoundTrip) {
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(format_double(1.0), "1");
  EXPECT_EQ(format_double(std::numeric_limits<double>::quiet_NaN()), "nan");
  EXPECT_EQ(format_double(-std::numeric_limits<double>::infinity()), "-inf");
  for (double v : {1.0 / 3.0, 2.5e-17, -123456.789, 0.844356123456789}) EXPECT_EQ(std::stod(format_double(v)), v);
}

TEST(OverlapTrace, HeaderAndEmptyColumns) {
  Mat a(2, 1), b(2, 1);
  a << 0.5, 0.25;
  b << 0.75, 0.125;
  const std::string csv = overlap_trace_csv({a, b}, {1e-3, 2e-4}, {});
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "t,overlap_1_1,overlap_2_1,residual,objective");
  std::getline(in, line);
  EXPECT_EQ(line, "0,0.5,0.25,0.001,");
  std::getline(in, line);
  EXPECT_EQ(line, "1,0.75,0.125,2e-04,");
  EXPECT_FALSE(std::getline(in, line));
}

TEST(WriteAtomic, ReplacesContentAndLeavesNoTemp) {
  const auto dir = std::filesystem::temp_directory_path() / "rbmlab_atomic";
  std::filesystem::create_directories(dir);
  const auto path = (dir / "f.csv").string();
  write_atomic(path, "first\n");
  write_atomic(path, "second\n");
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  EXPECT_EQ(ss.str(), "second\n");
  int files = 0;
  for (const auto& e : std::filesystem::directory_iterator(dir)) files += e.is_regular_file();
  EXPECT_EQ(files, 1);
  std::filesystem::remove_all(dir);
}
