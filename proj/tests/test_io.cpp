#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <string>

#include "gapfill/io.hpp"

namespace gapfill::io {
namespace {

namespace fs = std::filesystem;

class TempDir : public ::testing::Test {
 protected:
  void SetUp() override {
    dir = fs::temp_directory_path() /
          ("gapfill_io_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::create_directories(dir);
  }
  void TearDown() override { fs::remove_all(dir); }
  fs::path dir;
};

TEST(FormatDouble, RoundTripsExactly) {
  for (double x : {0.1, 1.0 / 3.0, 2.5e-300, 123456789.125, -0.0}) {
    EXPECT_EQ(std::stod(format_double(x)), x);
  }
  EXPECT_EQ(format_double(0.1), "0.10000000000000001");
  EXPECT_EQ(format_double(2.0), "2");
}

TEST(SplitCsv, QuotedFields) {
  EXPECT_EQ(split_csv_line("a,\"b,c\",d"), (std::vector<std::string>{"a", "b,c", "d"}));
  EXPECT_EQ(split_csv_line("1,,2"), (std::vector<std::string>{"1", "", "2"}));
}

TEST_F(TempDir, EventsRoundTrip) {
  const std::vector<double> times{0.125, 1.0 / 3.0, 2.75};
  write_events(dir / "e.csv", times);
  EXPECT_EQ(read_events(dir / "e.csv").times(), times);
  EXPECT_EQ(format_events(times), read_text(dir / "e.csv"));
}

TEST_F(TempDir, EventsErrors) {
  EXPECT_THROW(read_events(dir / "missing.csv"), IoError);
  write_text(dir / "bad.csv", "when\n1\n");
  EXPECT_THROW(read_events(dir / "bad.csv"), IoError);
  write_text(dir / "nan.csv", "time\nabc\n");
  EXPECT_THROW(read_events(dir / "nan.csv"), IoError);
  write_text(dir / "order.csv", "time\n2\n1\n");
  EXPECT_THROW(read_events(dir / "order.csv"), DomainError);
}

TEST_F(TempDir, CountsRoundTrip) {
  lgcp::DailyCounts c;
  c.first_day = 5;
  c.counts = {3, 0, 7};
  c.observed = {true, false, true};
  write_counts(dir / "c.csv", c);
  const auto back = read_counts(dir / "c.csv");
  EXPECT_EQ(back.first_day, 5);
  EXPECT_EQ(back.counts, c.counts);
  EXPECT_EQ(back.observed, c.observed);
}

TEST_F(TempDir, CountsErrors) {
  write_text(dir / "gap.csv", "day,count,observed\n0,1,1\n2,1,1\n");
  EXPECT_THROW(read_counts(dir / "gap.csv"), IoError);
  write_text(dir / "flag.csv", "day,count,observed\n0,1,2\n");
  EXPECT_THROW(read_counts(dir / "flag.csv"), IoError);
  write_text(dir / "neg.csv", "day,count,observed\n0,-4,1\n");
  EXPECT_THROW(read_counts(dir / "neg.csv"), DomainError);
}

TEST_F(TempDir, HiddenCountsAreDiscarded) {
  write_text(dir / "hidden.csv", "day,count,observed\n0,4,0\n1,2,1\n");
  const auto c = read_counts(dir / "hidden.csv");
  EXPECT_EQ(c.counts, (std::vector<std::int64_t>{0, 2}));
}

TEST_F(TempDir, UnwritablePath) {
  EXPECT_THROW(write_text(dir / "no" / "such" / "dir" / "x.txt", "x"), IoError);
}

}  // namespace
}  // namespace gapfill::io
