#pragma once

// Model artifacts on disk: a directory holding `manifest.json` and one
// little-endian float64 blob per factor mean and covariance, stored row-major
// with the shape declared in the manifest.

#include <cstdint>
#include <filesystem>

#include "btnv/model.hpp"
#include "btnv/vi.hpp"

namespace btnv {

inline constexpr int kModelFormatVersion = 1;

struct ModelArtifact {
  ModelState state;
  FitTrace trace;
  FitConfig config;
};

void save_model(const ModelArtifact& artifact, const std::filesystem::path& dir);
void save_model(const ModelState& state, const std::filesystem::path& dir);

/// Throws FormatError on version, shape or byte-count mismatches.
ModelArtifact load_model(const std::filesystem::path& dir);

}  // namespace btnv
