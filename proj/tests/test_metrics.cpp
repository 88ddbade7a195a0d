#include <gtest/gtest.h>

#include <sstream>

#include "lodsync/metrics.hpp"

using namespace lodsync;

TEST(MetricEvent, CsvRoundTripWithEmptyFields) {
  const std::vector<MetricEvent> events{
      {0, EventKind::kPktsOut, std::nullopt, std::nullopt, 4000},
      {1000, EventKind::kPktsOut, std::nullopt, 2, 25},
      {5000, EventKind::kReassignment, 7, 1, 10},
      {5451, EventKind::kLossPercent, std::nullopt, std::nullopt, 12.5},
      {2000, EventKind::kStalenessSample, 1, 0, 2.0 / 3.0},
  };
  for (const auto& e : events) {
    std::ostringstream os;
    write_event(os, e);
    std::string line = os.str();
    ASSERT_EQ(line.back(), '\n');
    line.pop_back();
    EXPECT_EQ(parse_event(line), e) << line;
  }
  std::ostringstream os;
  write_event(os, events[0]);
  EXPECT_EQ(os.str(), "0,pkts_out,,,4000\n");
}

TEST(MetricEvent, RejectsMalformedRows) {
  EXPECT_FALSE(parse_event(""));
  EXPECT_FALSE(parse_event("1,pkts_out,,"));
  EXPECT_FALSE(parse_event("x,pkts_out,,,1"));
  EXPECT_FALSE(parse_event("1,bogus,,,1"));
  EXPECT_FALSE(parse_event("1,pkts_out,,300,1"));
}

TEST(EventKind, NamesRoundTrip) {
  for (auto k : {EventKind::kUpdateApplied, EventKind::kStalenessSample, EventKind::kReassignment,
                 EventKind::kLossPercent, EventKind::kPktsOut, EventKind::kPktsIn}) {
    EXPECT_EQ(parse_event_kind(to_string(k)), k);
  }
}

TEST(PerSecondCounter, AggregatesBySecondAndKey) {
  PerSecondCounter c(EventKind::kPktsIn);
  c.count(0, std::nullopt, std::nullopt);
  c.count(999, std::nullopt, std::nullopt);
  c.count(999, std::nullopt, 1);
  c.count(1000, std::nullopt, std::nullopt);
  MetricsLog log;
  c.flush(log, 1);
  ASSERT_EQ(log.events().size(), 2u);
  EXPECT_EQ(log.events()[0], (MetricEvent{0, EventKind::kPktsIn, std::nullopt, std::nullopt, 2}));
  EXPECT_EQ(log.events()[1], (MetricEvent{0, EventKind::kPktsIn, std::nullopt, 1, 1}));
  c.flush_all(log);
  ASSERT_EQ(log.events().size(), 3u);
  EXPECT_EQ(log.events()[2].time_ms, 1000);
}

TEST(FormatNumber, ShortestRoundTrip) {
  EXPECT_EQ(format_number(4000), "4000");
  EXPECT_EQ(format_number(0.1), "0.1");
  EXPECT_EQ(std::stod(format_number(2.0 / 3.0)), 2.0 / 3.0);
}
