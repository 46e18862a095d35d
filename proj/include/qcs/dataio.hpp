// Synthetic LIDAR-quartile sample generation, preprocessing (zero removal,
// linear normalization, train/test split), disjoint subset draws, and CSV
// persistence with a JSON sidecar for the split and normalization constants.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qcs/encoding.hpp"

namespace qcs {

// How min/max normalization constants are computed in preprocess.
enum class NormalizationScope {
    global_range, // one min/max across every pixel of every sample
    per_pixel,    // independent min/max per pixel column
};

struct Dataset {
    std::vector<Signal> samples; // normalized to [0,1]
    std::vector<std::int64_t> train_indices;
    std::vector<std::int64_t> test_indices;
    // One entry under global_range normalization, one per pixel otherwise.
    std::vector<double> min_values;
    std::vector<double> max_values;
    std::uint64_t seed = 0;

    int num_pixels() const;
    std::vector<Signal> train_samples() const;
    std::vector<Signal> test_samples() const;
    void validate() const;
};

// Simulated tree-canopy return profiles reduced to 5 pixels: the heights at
// which cumulative return energy crosses each quartile, plus the total
// height. Values are in meters, non-negative, non-decreasing per sample.
// A zero_fraction share of samples is all-zero to exercise zero removal.
// Sample i depends only on (seed, i), so generation is order-independent.
std::vector<Signal> generate_synthetic_lidar(std::int64_t n_samples, std::uint64_t seed,
                                             double zero_fraction = 0.1);

// Drops all-zero samples, normalizes linearly to [0,1], and draws a shuffled
// 70/30 train/test split (|train| = round(0.7 N)). Requires at least 10
// non-zero samples.
Dataset preprocess(const std::vector<Signal>& raw, std::uint64_t seed,
                   NormalizationScope scope = NormalizationScope::global_range);

// Inverts the stored normalization for one sample.
Signal denormalize(const Dataset& dataset, const Signal& normalized);

struct SubsetDraw {
    std::vector<std::vector<Signal>> subsets; // disjoint draws from the train split
    int requested_repeats = 0;
    int actual_repeats = 0; // reduced when size * repeats exceeds the split
};

// Draws `repeats` disjoint uniform subsets of the train split; when the split
// cannot supply that many, the count is reduced to the maximum feasible
// (reported in the result). Throws if not even one subset fits.
SubsetDraw sample_subsets(const Dataset& dataset, int size, int repeats, std::uint64_t seed);

// Pixel rows only, no sidecar: header pixel_0..pixel_{k-1}, one sample per
// row, 12 significant digits. Used for raw (pre-normalization) data.
void save_samples_csv(const std::vector<Signal>& samples, const std::string& path);
std::vector<Signal> load_samples_csv(const std::string& path);

// Full dataset: pixel rows at `path` plus a JSON sidecar (same path with a
// .json extension) holding {seed, min, max, train_indices, test_indices}.
void save_csv(const Dataset& dataset, const std::string& path);
Dataset load_csv(const std::string& path);

// Sidecar path derived from a CSV path (extension swapped for .json).
std::string sidecar_path(const std::string& csv_path);

} // namespace qcs
