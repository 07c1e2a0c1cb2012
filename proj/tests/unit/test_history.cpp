#include <gtest/gtest.h>

#include <algorithm>
#include <sstream>

#include "cjsis/error.hpp"
#include "cjsis/history.hpp"

using namespace cjsis;

namespace {

CaptureHistory h(std::initializer_list<int> bits, std::optional<int> cohort = std::nullopt) {
  std::vector<std::uint8_t> v;
  for (const int b : bits) v.push_back(static_cast<std::uint8_t>(b));
  return CaptureHistory(v, cohort);
}

CompressedDataset parse(const std::string& text) {
  std::istringstream in(text);
  return parse_dataset(in);
}

std::string parse_error(const std::string& text) {
  try {
    parse(text);
  } catch (const ParseError& e) {
    return e.what();
  }
  return "";
}

/// Every (f, l) pair with f in releases and f <= l <= T, one individual each.
CompressedDataset all_pairs(int T, int first_release, int last_release) {
  std::vector<CaptureHistory> rows;
  for (int f = first_release; f <= last_release; ++f) {
    for (int l = f; l <= T; ++l) {
      std::vector<std::uint8_t> bits(static_cast<std::size_t>(T), 0);
      bits[static_cast<std::size_t>(f - 1)] = 1;
      bits[static_cast<std::size_t>(l - 1)] = 1;
      rows.emplace_back(bits);
    }
  }
  return CompressedDataset::compress(T, rows);
}

}  // namespace

TEST(CaptureHistory, FirstLast) {
  EXPECT_EQ(first_last(h({0, 1, 1, 0})), std::make_pair(2, 3));
  EXPECT_EQ(first_last(h({1, 0, 0, 0})), std::make_pair(1, 1));
  EXPECT_EQ(first_last(h({0, 0, 0, 1})), std::make_pair(4, 4));
}

TEST(CaptureHistory, RejectsAllZeroAndNonBinary) {
  EXPECT_THROW(h({0, 0, 0}), Error);
  EXPECT_THROW(h({1, 2, 0}), Error);
}

TEST(ParseDataset, CollapsesDuplicates) {
  const auto d = parse("1,0,1\n1,0,1\n0,1,0\n");
  ASSERT_EQ(d.num_entries(), 2u);
  EXPECT_EQ(d.total_individuals(), 3);
  std::vector<std::int64_t> mult;
  for (const auto& e : d.entries()) mult.push_back(e.multiplicity);
  std::sort(mult.begin(), mult.end());
  EXPECT_EQ(mult, (std::vector<std::int64_t>{1, 2}));
  EXPECT_TRUE(d.is_strict());
}

TEST(ParseDataset, NonBinaryCellNamesLine) { EXPECT_EQ(parse_error("1,2,0\n"), "non-binary cell at line 1"); }

TEST(ParseDataset, OtherErrorsNameLines) {
  EXPECT_EQ(parse_error("1,0,1\n0,0,0\n"), "all-zero history at line 2");
  EXPECT_NE(parse_error("1,0,1\n1,0\n").find("inconsistent row length"), std::string::npos);
  EXPECT_NE(parse_error("1,0,1\n1,0,1\n1,x,1\n").find("at line 3"), std::string::npos);
}

TEST(ParseDataset, HeaderAndCohortColumn) {
  const auto d = parse("t1,t2,t3,cohort_age\r\n1,0,1,1\n\n0,1,1,2\n");
  EXPECT_EQ(d.num_occasions(), 3);
  EXPECT_EQ(d.total_individuals(), 2);
  EXPECT_TRUE(d.has_cohort_age());
}

TEST(ParseDataset, HeaderShiftsLineNumbers) { EXPECT_EQ(parse_error("a,b,c\n1,0,1\n1,3,1\n"), "non-binary cell at line 3"); }

TEST(ParseDataset, DeterministicOrdering) {
  const auto a = parse("0,1,0\n1,0,1\n1,1,1\n");
  const auto b = parse("1,1,1\n0,1,0\n1,0,1\n");
  ASSERT_EQ(a.num_entries(), b.num_entries());
  for (std::size_t i = 0; i < a.num_entries(); ++i) EXPECT_EQ(a.entries()[i].history, b.entries()[i].history);
  EXPECT_TRUE(std::is_sorted(a.entries().begin(), a.entries().end(),
                             [](const auto& x, const auto& y) { return x.history < y.history; }));
}

TEST(CompressedDataset, WriteParseRoundTrip) {
  const auto d = parse("t1,t2,t3,t4,cohort_age\n1,0,1,0,1\n1,0,1,0,1\n0,1,0,0,3\n0,1,0,0,2\n");
  std::ostringstream out;
  write_dataset(out, d);
  const auto back = parse(out.str());
  ASSERT_EQ(back.num_entries(), d.num_entries());
  for (std::size_t i = 0; i < d.num_entries(); ++i) {
    EXPECT_EQ(back.entries()[i].history, d.entries()[i].history);
    EXPECT_EQ(back.entries()[i].multiplicity, d.entries()[i].multiplicity);
  }
}

TEST(CompressedDataset, ExpandIsPermutationOfRows) {
  std::vector<CaptureHistory> rows{h({1, 0, 1}), h({0, 1, 0}), h({1, 0, 1}), h({1, 1, 1}), h({0, 1, 0})};
  const auto d = CompressedDataset::compress(3, rows);
  auto expanded = d.expand();
  std::sort(rows.begin(), rows.end());
  std::sort(expanded.begin(), expanded.end());
  EXPECT_EQ(expanded, rows);
}

TEST(Stratify, FirstLastDirectGrouping) {
  const auto d = CompressedDataset::compress(3, {h({1, 0, 0}), h({1, 1, 0}), h({0, 1, 1})});
  const auto strata = stratify(d, StratificationScheme::first_last);
  ASSERT_EQ(strata.size(), 3u);
  EXPECT_EQ(strata.at(StratumKey{1, 1, std::nullopt}).size(), 1u);
  EXPECT_EQ(strata.at(StratumKey{1, 2, std::nullopt}).size(), 1u);
  EXPECT_EQ(strata.at(StratumKey{2, 3, std::nullopt}).size(), 1u);
}

TEST(Stratify, UniformSingleStratum) {
  const auto d = CompressedDataset(3, {{h({1, 0, 0}), 4}, {h({0, 1, 1}), 3}});
  const auto strata = stratify(d, StratificationScheme::uniform);
  ASSERT_EQ(strata.size(), 1u);
  EXPECT_EQ(strata.begin()->second.size(), 7u);
}

TEST(Stratify, RealizedStrataCounts) {
  // Releases 1..9 with every l >= f realized: sum_{f=1}^{9} (12 - f) = 63.
  EXPECT_EQ(stratify(all_pairs(11, 1, 9), StratificationScheme::first_last).size(), 63u);
  // The 54 figure corresponds to releases 2..10 (or 1..9 with l > f only).
  EXPECT_EQ(stratify(all_pairs(11, 2, 10), StratificationScheme::first_last).size(), 54u);
  // Upper bound over f <= T - 1.
  EXPECT_LE(stratify(all_pairs(11, 1, 10), StratificationScheme::first_last).size(), 11u * 12u / 2u);
}

TEST(Stratify, SlotCountsSumToTotal) {
  const auto d = CompressedDataset(4, {{h({1, 0, 0, 0}, 1), 5}, {h({0, 1, 1, 0}, 2), 3}, {h({0, 1, 1, 0}, 1), 2}});
  for (const auto scheme :
       {StratificationScheme::uniform, StratificationScheme::first_last, StratificationScheme::first_last_cohort}) {
    std::size_t total = 0;
    for (const auto& [key, slots] : stratify(d, scheme)) total += slots.size();
    EXPECT_EQ(static_cast<std::int64_t>(total), d.total_individuals());
  }
  EXPECT_EQ(stratify(d, StratificationScheme::first_last_cohort).size(), 3u);
}

TEST(Stratify, CohortSchemeNeedsCohortAge) {
  const auto d = CompressedDataset::compress(3, {h({1, 0, 0})});
  EXPECT_THROW(stratify(d, StratificationScheme::first_last_cohort), ConfigError);
}

TEST(CapMultiplicity, SplitsIntoReplicates) {
  const auto d = CompressedDataset(3, {{h({1, 0, 1}), 450}, {h({0, 1, 0}), 7}});
  const auto capped = cap_multiplicity(d, 200);
  std::vector<std::int64_t> mult;
  for (const auto& e : capped.entries()) {
    if (e.history == h({1, 0, 1})) mult.push_back(e.multiplicity);
  }
  EXPECT_EQ(mult, (std::vector<std::int64_t>{200, 200, 50}));
  EXPECT_EQ(capped.total_individuals(), d.total_individuals());
  EXPECT_FALSE(capped.is_strict());
}

TEST(CapMultiplicity, NoOpAboveMax) {
  const auto d = CompressedDataset(3, {{h({1, 0, 1}), 45}, {h({0, 1, 0}), 7}});
  const auto capped = cap_multiplicity(d, 45);
  ASSERT_EQ(capped.num_entries(), d.num_entries());
  for (std::size_t i = 0; i < d.num_entries(); ++i) EXPECT_EQ(capped.entries()[i].multiplicity, d.entries()[i].multiplicity);
}

TEST(CapMultiplicity, PreservesMultisetForAllCaps) {
  const auto d = CompressedDataset(3, {{h({1, 0, 1}), 17}, {h({0, 1, 0}), 5}, {h({1, 1, 1}), 1}});
  for (std::int64_t cap = 1; cap <= 20; ++cap) {
    auto a = d.expand();
    auto b = cap_multiplicity(d, cap).expand();
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    EXPECT_EQ(a, b) << "cap " << cap;
    EXPECT_LE(cap_multiplicity(d, cap).max_multiplicity(), cap);
  }
  EXPECT_THROW(cap_multiplicity(d, 0), Error);
}
