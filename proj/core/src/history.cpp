#include "cjsis/history.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>

#include "cjsis/error.hpp"

namespace cjsis {

CaptureHistory::CaptureHistory(std::vector<std::uint8_t> occasions, std::optional<int> cohort_age)
    : occasions_(std::move(occasions)), cohort_age_(cohort_age) {
  for (std::size_t t = 0; t < occasions_.size(); ++t) {
    if (occasions_[t] > 1) throw Error("capture history cell outside {0,1}");
    if (occasions_[t] == 1) {
      if (first_ == 0) first_ = static_cast<Occasion>(t + 1);
      last_ = static_cast<Occasion>(t + 1);
    }
  }
  if (first_ == 0) throw Error("capture history has no observation");
  if (cohort_age_ && *cohort_age_ < 0) throw Error("cohort_age must be non-negative");
}

std::strong_ordering operator<=>(const CaptureHistory& a, const CaptureHistory& b) noexcept {
  if (auto c = a.occasions_ <=> b.occasions_; c != 0) return c;
  return a.cohort_age_ <=> b.cohort_age_;
}

bool operator==(const CaptureHistory& a, const CaptureHistory& b) noexcept {
  return a.occasions_ == b.occasions_ && a.cohort_age_ == b.cohort_age_;
}

std::pair<Occasion, Occasion> first_last(const CaptureHistory& history) noexcept {
  return {history.first(), history.last()};
}

CompressedDataset::CompressedDataset(int num_occasions, std::vector<HistoryEntry> entries)
    : num_occasions_(num_occasions), entries_(std::move(entries)) {
  for (const auto& e : entries_) {
    if (e.history.num_occasions() != num_occasions_) throw Error("entries have inconsistent numbers of occasions");
    if (e.multiplicity < 1) throw Error("multiplicity must be positive");
    total_ += e.multiplicity;
  }
}

CompressedDataset CompressedDataset::compress(int num_occasions, std::vector<CaptureHistory> individuals) {
  std::sort(individuals.begin(), individuals.end());
  std::vector<HistoryEntry> entries;
  for (auto& h : individuals) {
    if (!entries.empty() && entries.back().history == h) {
      ++entries.back().multiplicity;
    } else {
      entries.push_back({std::move(h), 1});
    }
  }
  return CompressedDataset(num_occasions, std::move(entries));
}

bool CompressedDataset::has_cohort_age() const noexcept {
  return !entries_.empty() &&
         std::all_of(entries_.begin(), entries_.end(), [](const HistoryEntry& e) { return e.history.cohort_age(); });
}

bool CompressedDataset::is_strict() const noexcept {
  for (std::size_t i = 1; i < entries_.size(); ++i) {
    if (!(entries_[i - 1].history < entries_[i].history)) return false;
  }
  return true;
}

std::int64_t CompressedDataset::max_multiplicity() const noexcept {
  std::int64_t m = 0;
  for (const auto& e : entries_) m = std::max(m, e.multiplicity);
  return m;
}

std::vector<CaptureHistory> CompressedDataset::expand() const {
  std::vector<CaptureHistory> out;
  out.reserve(static_cast<std::size_t>(total_));
  for (const auto& e : entries_) {
    for (std::int64_t c = 0; c < e.multiplicity; ++c) out.push_back(e.history);
  }
  return out;
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_cells(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    cells.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

std::optional<long long> parse_integer(std::string_view cell) {
  long long value = 0;
  const auto* begin = cell.data();
  const auto* end = cell.data() + cell.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (cell.empty() || ec != std::errc{} || ptr != end) return std::nullopt;
  return value;
}

}  // namespace

CompressedDataset parse_dataset(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  bool seen_first_row = false;
  bool has_cohort = false;
  int num_occasions = -1;
  std::vector<CaptureHistory> individuals;

  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view view = trim(line);
    if (view.empty()) continue;
    const auto cells = split_cells(view);

    if (!seen_first_row) {
      seen_first_row = true;
      const bool is_header =
          std::any_of(cells.begin(), cells.end(), [](std::string_view c) { return !parse_integer(c); });
      if (is_header) {
        has_cohort = cells.back() == "cohort_age";
        num_occasions = static_cast<int>(cells.size()) - (has_cohort ? 1 : 0);
        if (num_occasions < 1) throw ParseError("header declares no occasions", line_no);
        continue;
      }
    }

    const int expected_cells = num_occasions < 0 ? static_cast<int>(cells.size()) : num_occasions + (has_cohort ? 1 : 0);
    if (static_cast<int>(cells.size()) != expected_cells) {
      throw ParseError("inconsistent row length (expected " + std::to_string(expected_cells) + " cells, got " +
                           std::to_string(cells.size()) + ")",
                       line_no);
    }
    if (num_occasions < 0) num_occasions = expected_cells;

    std::vector<std::uint8_t> occasions(static_cast<std::size_t>(num_occasions));
    bool any = false;
    for (int t = 0; t < num_occasions; ++t) {
      const auto v = parse_integer(cells[static_cast<std::size_t>(t)]);
      if (!v) throw ParseError("malformed cell '" + std::string(cells[static_cast<std::size_t>(t)]) + "'", line_no);
      if (*v != 0 && *v != 1) throw ParseError("non-binary cell", line_no);
      occasions[static_cast<std::size_t>(t)] = static_cast<std::uint8_t>(*v);
      any = any || *v == 1;
    }
    if (!any) throw ParseError("all-zero history", line_no);

    std::optional<int> cohort_age;
    if (has_cohort) {
      const auto v = parse_integer(cells.back());
      if (!v || *v < 0) throw ParseError("malformed cohort_age", line_no);
      cohort_age = static_cast<int>(*v);
    }
    individuals.emplace_back(std::move(occasions), cohort_age);
  }
  if (in.bad()) throw Error("read failure while parsing capture histories");
  return CompressedDataset::compress(std::max(num_occasions, 0), std::move(individuals));
}

CompressedDataset read_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open dataset " + path.string());
  return parse_dataset(in);
}

void write_dataset(std::ostream& out, const CompressedDataset& data) {
  const bool cohort = data.has_cohort_age();
  for (int t = 1; t <= data.num_occasions(); ++t) out << (t > 1 ? "," : "") << 't' << t;
  if (cohort) out << ",cohort_age";
  out << '\n';
  std::string row;
  for (const auto& e : data.entries()) {
    row.clear();
    for (std::size_t t = 0; t < e.history.occasions().size(); ++t) {
      if (t > 0) row += ',';
      row += e.history.occasions()[t] ? '1' : '0';
    }
    if (cohort) row += ',' + std::to_string(*e.history.cohort_age());
    row += '\n';
    for (std::int64_t c = 0; c < e.multiplicity; ++c) out << row;
  }
}

void write_dataset(const std::filesystem::path& path, const CompressedDataset& data) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write dataset " + path.string());
  write_dataset(out, data);
}

Strata stratify(const CompressedDataset& data, StratificationScheme scheme) {
  if (scheme == StratificationScheme::first_last_cohort && !data.empty() && !data.has_cohort_age()) {
    throw ConfigError("first_last_cohort stratification requires cohort_age on every history");
  }
  Strata strata;
  for (std::size_t e = 0; e < data.entries().size(); ++e) {
    const auto& entry = data.entries()[e];
    StratumKey key;
    if (scheme != StratificationScheme::uniform) {
      key.first = entry.history.first();
      key.last = entry.history.last();
      if (scheme == StratificationScheme::first_last_cohort) key.cohort_age = entry.history.cohort_age();
    }
    auto& slots = strata[key];
    for (std::int64_t c = 0; c < entry.multiplicity; ++c) slots.push_back({e, c});
  }
  return strata;
}

CompressedDataset cap_multiplicity(const CompressedDataset& data, std::int64_t cap) {
  if (cap < 1) throw ConfigError("multiplicity cap must be at least 1");
  std::vector<HistoryEntry> entries;
  for (const auto& e : data.entries()) {
    for (std::int64_t remaining = e.multiplicity; remaining > 0; remaining -= cap) {
      entries.push_back({e.history, std::min(remaining, cap)});
    }
  }
  return CompressedDataset(data.num_occasions(), std::move(entries));
}

StratificationScheme parse_scheme(const std::string& name) {
  if (name == "uniform") return StratificationScheme::uniform;
  if (name == "first_last") return StratificationScheme::first_last;
  if (name == "first_last_cohort") return StratificationScheme::first_last_cohort;
  throw ConfigError("unknown stratification scheme '" + name + "'");
}

const char* to_string(StratificationScheme scheme) noexcept {
  switch (scheme) {
    case StratificationScheme::uniform: return "uniform";
    case StratificationScheme::first_last: return "first_last";
    case StratificationScheme::first_last_cohort: return "first_last_cohort";
  }
  return "unknown";
}

}  // namespace cjsis
