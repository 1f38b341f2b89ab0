#pragma once

#include <string>
#include <vector>

#include "ksamp/phantom.hpp"

namespace ksamp {

// Train/test collection of cine series. `metadata` carries the generation
// parameters as a JSON string; it travels in the stage manifest, not in the
// binary dataset file.
struct Dataset {
    std::vector<CineSeries> train;
    std::vector<CineSeries> test;
    std::string metadata;
};

// Binary dataset file, magic "KCIN1\0", little-endian:
//   u32 series_count
//   per series: u32 id, u32 frame_count, u32 height, u32 width, u8 split (0 train, 1 test)
//   frame payload in header order: per frame, row-major interleaved f32 (re, im)
void write_dataset(const Dataset& ds, const std::string& path);
Dataset read_dataset(const std::string& path);

// Seeded shuffle followed by a prefix split. At least one series lands on
// each side.
Dataset split_dataset(const std::vector<CineSeries>& series, double train_fraction,
                      std::uint64_t seed);

std::vector<const CineSeries*> all_series(const Dataset& ds);

}  // namespace ksamp
