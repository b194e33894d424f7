#pragma once

#include <cstdint>
#include <filesystem>

#include "sdom/dataset.hpp"

namespace sdom {

// Binary container: magic "SDOM", u16 version, header (C, T, N, O, sample
// rate), then per trial one label byte, one provenance byte (255 = unknown)
// and the C x T signal block as little-endian float64. Round trips are
// bit-exact.
inline constexpr std::uint16_t kDatasetFormatVersion = 1;

void save_dataset(const Dataset& ds, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);

// CSV import, one row per channel/time cell with a header line:
//   trial,channel,time,value,label
// Parse errors report the offending line number.
Dataset load_dataset_csv(const std::filesystem::path& path, double sample_rate_hz = 250.0);

} // namespace sdom
