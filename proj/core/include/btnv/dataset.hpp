#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <utility>
#include <vector>

#include "btnv/model.hpp"

namespace btnv {

/// Paired input/output sequences. When `split` is set, samples [0, split)
/// form the estimation part and [split, N) the validation part.
struct Dataset {
  std::vector<double> u;
  std::vector<double> y;
  std::optional<std::size_t> split;

  std::size_t size() const noexcept { return u.size(); }
  /// Throws DomainError on unequal lengths, non-finite values or a bad split.
  void validate() const;

  Dataset estimation() const;
  Dataset validation() const;
};

/// Two-column CSV with header `u,y`. Errors carry the offending line number.
Dataset read_csv(std::istream& in);
Dataset load_csv(const std::filesystem::path& path);

void write_csv(std::ostream& out, const Dataset& data);
void save_csv(const std::filesystem::path& path, const Dataset& data);

/// Input min/max and output mean/population std over the first
/// `estimation_count` samples (all samples when not given).
NormalizationRecord fit_normalization(const Dataset& data,
                                      std::optional<std::size_t> estimation_count = {});

Dataset apply_normalization(const Dataset& data, const NormalizationRecord& record);

/// fit_normalization on the estimation part, then apply to the whole set.
std::pair<Dataset, NormalizationRecord> normalize(const Dataset& data);

}  // namespace btnv
