#ifndef CJSIS_HISTORY_HPP
#define CJSIS_HISTORY_HPP

#include <compare>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace cjsis {

/// Occasion index, 1-based (1..T).
using Occasion = int;

/// One individual's binary capture record over T occasions.
///
/// Invariant: at least one occasion equals 1, so first() <= last() always
/// holds. `cohort_age` is the age (in occasions) at first capture and is only
/// consulted by age-structured models.
class CaptureHistory {
 public:
  explicit CaptureHistory(std::vector<std::uint8_t> occasions, std::optional<int> cohort_age = std::nullopt);

  [[nodiscard]] const std::vector<std::uint8_t>& occasions() const noexcept { return occasions_; }
  [[nodiscard]] int num_occasions() const noexcept { return static_cast<int>(occasions_.size()); }
  [[nodiscard]] bool seen(Occasion t) const noexcept { return occasions_[static_cast<std::size_t>(t - 1)] != 0; }
  [[nodiscard]] Occasion first() const noexcept { return first_; }
  [[nodiscard]] Occasion last() const noexcept { return last_; }
  [[nodiscard]] std::optional<int> cohort_age() const noexcept { return cohort_age_; }

  // Lexicographic by occasion bits, then cohort_age (absent sorts first).
  friend std::strong_ordering operator<=>(const CaptureHistory& a, const CaptureHistory& b) noexcept;
  friend bool operator==(const CaptureHistory& a, const CaptureHistory& b) noexcept;

 private:
  std::vector<std::uint8_t> occasions_;
  std::optional<int> cohort_age_;
  Occasion first_ = 0;
  Occasion last_ = 0;
};

/// (first, last) occasion of a history.
std::pair<Occasion, Occasion> first_last(const CaptureHistory& history) noexcept;

struct HistoryEntry {
  CaptureHistory history;
  std::int64_t multiplicity = 1;
};

/// Capture histories stored once per distinct record with a multiplicity.
///
/// A dataset built by compress() is strict: entries are pairwise distinct and
/// sorted. cap_multiplicity() produces a non-strict dataset in which a history
/// may be repeated across several entries.
class CompressedDataset {
 public:
  CompressedDataset() = default;

  /// Validates entries (common T, positive multiplicities) without merging them.
  CompressedDataset(int num_occasions, std::vector<HistoryEntry> entries);

  /// Strict compression of individual rows; entry order is deterministic.
  static CompressedDataset compress(int num_occasions, std::vector<CaptureHistory> individuals);

  [[nodiscard]] int num_occasions() const noexcept { return num_occasions_; }
  [[nodiscard]] const std::vector<HistoryEntry>& entries() const noexcept { return entries_; }
  [[nodiscard]] std::size_t num_entries() const noexcept { return entries_.size(); }
  [[nodiscard]] std::int64_t total_individuals() const noexcept { return total_; }
  [[nodiscard]] bool empty() const noexcept { return total_ == 0; }
  [[nodiscard]] bool has_cohort_age() const noexcept;
  [[nodiscard]] bool is_strict() const noexcept;
  [[nodiscard]] std::int64_t max_multiplicity() const noexcept;

  /// One history per individual, in entry order.
  [[nodiscard]] std::vector<CaptureHistory> expand() const;

 private:
  int num_occasions_ = 0;
  std::vector<HistoryEntry> entries_;
  std::int64_t total_ = 0;
};

/// Parses the capture-history CSV format.
///
/// One row per individual with T cells in {0,1}. An optional header row is
/// recognised by any non-numeric cell; a header whose last column is named
/// `cohort_age` declares a trailing integer column. Blank lines are skipped.
/// Errors carry the 1-based physical line number.
CompressedDataset parse_dataset(std::istream& in);
CompressedDataset read_dataset(const std::filesystem::path& path);

/// Writes one row per individual (expanded) with a `t1..tT[,cohort_age]` header.
void write_dataset(std::ostream& out, const CompressedDataset& data);
void write_dataset(const std::filesystem::path& path, const CompressedDataset& data);

enum class StratificationScheme { uniform, first_last, first_last_cohort };

struct StratumKey {
  Occasion first = 0;
  Occasion last = 0;
  std::optional<int> cohort_age;

  friend auto operator<=>(const StratumKey&, const StratumKey&) = default;
};

/// One individual: copy `copy` of entry `entry`.
struct Slot {
  std::size_t entry = 0;
  std::int64_t copy = 0;

  friend bool operator==(const Slot&, const Slot&) = default;
};

using Strata = std::map<StratumKey, std::vector<Slot>>;

/// Groups individuals into strata. The uniform scheme yields a single stratum
/// with key {0, 0}. Only non-empty strata are emitted. Throws ConfigError for
/// first_last_cohort when some entry lacks cohort_age.
Strata stratify(const CompressedDataset& data, StratificationScheme scheme);

/// Splits every entry with multiplicity above `cap` into ceil(n / cap)
/// adjacent replicate entries of multiplicity at most `cap`.
CompressedDataset cap_multiplicity(const CompressedDataset& data, std::int64_t cap);

StratificationScheme parse_scheme(const std::string& name);
const char* to_string(StratificationScheme scheme) noexcept;

}  // namespace cjsis

#endif
