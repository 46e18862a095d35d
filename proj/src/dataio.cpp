#include "qcs/dataio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "qcs/rng.hpp"

namespace qcs {

namespace {

bool is_all_zero(const Signal& sample) {
    return std::all_of(sample.begin(), sample.end(), [](double v) { return v == 0.0; });
}

std::string format_value(double v) {
    char buffer[64];
    std::snprintf(buffer, sizeof(buffer), "%.12g", v);
    return buffer;
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream stream(line);
    while (std::getline(stream, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

double parse_cell(const std::string& cell, std::int64_t line_number, std::size_t column) {
    std::size_t consumed = 0;
    double value = 0.0;
    try {
        value = std::stod(cell, &consumed);
    } catch (const std::exception&) {
        throw std::runtime_error("csv line " + std::to_string(line_number) + ", column " +
                                 std::to_string(column + 1) + ": non-numeric cell '" + cell + "'");
    }
    while (consumed < cell.size() && std::isspace(static_cast<unsigned char>(cell[consumed]))) {
        ++consumed;
    }
    if (consumed != cell.size() || !std::isfinite(value)) {
        throw std::runtime_error("csv line " + std::to_string(line_number) + ", column " +
                                 std::to_string(column + 1) + ": non-numeric cell '" + cell + "'");
    }
    return value;
}

// Samples one return-energy profile (ground peak plus 0-2 canopy lobes,
// truncated Gaussians over a fixed height grid) and reduces it to the four
// quartile-crossing heights plus the total height.
Signal lidar_sample(std::mt19937_64& rng) {
    constexpr int kBins = 256;
    constexpr double kMaxHeight = 50.0; // meters
    constexpr double kTruncationSigmas = 3.5;

    struct Lobe {
        double center;
        double sigma;
        double amplitude;
    };
    std::vector<Lobe> lobes;

    std::uniform_real_distribution<double> ground_amp(0.5, 1.5);
    std::uniform_real_distribution<double> ground_sigma(0.3, 1.0);
    lobes.push_back(Lobe{0.0, ground_sigma(rng), ground_amp(rng)});

    std::uniform_real_distribution<double> canopy_top_dist(5.0, 40.0);
    const double canopy_top = canopy_top_dist(rng);
    std::uniform_int_distribution<int> lobe_count_dist(0, 2);
    const int lobe_count = lobe_count_dist(rng);
    std::uniform_real_distribution<double> lobe_center(0.4 * canopy_top, canopy_top);
    std::uniform_real_distribution<double> lobe_sigma(0.5, 3.0);
    std::uniform_real_distribution<double> lobe_amp(0.3, 1.2);
    for (int k = 0; k < lobe_count; ++k) {
        lobes.push_back(Lobe{lobe_center(rng), lobe_sigma(rng), lobe_amp(rng)});
    }

    std::vector<double> energy(kBins, 0.0);
    for (int b = 0; b < kBins; ++b) {
        const double h = (b + 0.5) * kMaxHeight / kBins;
        for (const Lobe& lobe : lobes) {
            const double d = (h - lobe.center) / lobe.sigma;
            if (std::abs(d) > kTruncationSigmas) continue;
            energy[static_cast<std::size_t>(b)] += lobe.amplitude * std::exp(-0.5 * d * d);
        }
    }

    const double total = std::accumulate(energy.begin(), energy.end(), 0.0);
    const double peak = *std::max_element(energy.begin(), energy.end());

    // Height at which cumulative energy first reaches the given fraction.
    auto quartile_height = [&](double fraction) {
        const double target = fraction * total;
        double cumulative = 0.0;
        for (int b = 0; b < kBins; ++b) {
            cumulative += energy[static_cast<std::size_t>(b)];
            if (cumulative >= target) return (b + 1) * kMaxHeight / kBins;
        }
        return kMaxHeight;
    };

    Signal sample(5);
    sample[0] = quartile_height(0.25);
    sample[1] = quartile_height(0.50);
    sample[2] = quartile_height(0.75);
    sample[3] = quartile_height(1.0 - 1e-9);
    double top = 0.0;
    for (int b = kBins - 1; b >= 0; --b) {
        if (energy[static_cast<std::size_t>(b)] > 1e-3 * peak) {
            top = (b + 1) * kMaxHeight / kBins;
            break;
        }
    }
    sample[4] = std::max(top, sample[3]);
    return sample;
}

} // namespace

int Dataset::num_pixels() const {
    return samples.empty() ? 0 : static_cast<int>(samples.front().size());
}

std::vector<Signal> Dataset::train_samples() const {
    std::vector<Signal> out;
    out.reserve(train_indices.size());
    for (std::int64_t i : train_indices) out.push_back(samples[static_cast<std::size_t>(i)]);
    return out;
}

std::vector<Signal> Dataset::test_samples() const {
    std::vector<Signal> out;
    out.reserve(test_indices.size());
    for (std::int64_t i : test_indices) out.push_back(samples[static_cast<std::size_t>(i)]);
    return out;
}

void Dataset::validate() const {
    if (samples.empty()) throw std::runtime_error("dataset: no samples");
    const std::size_t k = samples.front().size();
    for (const Signal& s : samples) {
        if (s.size() != k) throw std::runtime_error("dataset: ragged sample lengths");
        for (double v : s) {
            if (!(v >= -1e-9 && v <= 1.0 + 1e-9)) {
                throw std::runtime_error("dataset: pixel value " + format_value(v) +
                                         " outside [0,1]");
            }
        }
    }
    if (min_values.size() != max_values.size() ||
        (min_values.size() != 1 && min_values.size() != k)) {
        throw std::runtime_error("dataset: normalization constants must hold one entry "
                                 "or one per pixel");
    }
    std::vector<char> seen(samples.size(), 0);
    auto mark = [&](const std::vector<std::int64_t>& indices) {
        for (std::int64_t i : indices) {
            if (i < 0 || i >= static_cast<std::int64_t>(samples.size())) {
                throw std::runtime_error("dataset: split index " + std::to_string(i) +
                                         " out of range");
            }
            if (seen[static_cast<std::size_t>(i)]++) {
                throw std::runtime_error("dataset: split index " + std::to_string(i) +
                                         " appears twice");
            }
        }
    };
    mark(train_indices);
    mark(test_indices);
    if (train_indices.size() + test_indices.size() != samples.size()) {
        throw std::runtime_error("dataset: split does not cover all samples");
    }
}

std::vector<Signal> generate_synthetic_lidar(std::int64_t n_samples, std::uint64_t seed,
                                             double zero_fraction) {
    if (n_samples < 1) throw std::invalid_argument("generate: n_samples must be >= 1");
    if (!(zero_fraction >= 0.0 && zero_fraction <= 1.0)) {
        throw std::invalid_argument("generate: zero_fraction must be in [0,1]");
    }
    std::vector<Signal> samples(static_cast<std::size_t>(n_samples));
    for (std::int64_t i = 0; i < n_samples; ++i) {
        std::mt19937_64 rng = make_engine(derive_seed(seed, static_cast<std::uint64_t>(i)));
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        if (unit(rng) < zero_fraction) {
            samples[static_cast<std::size_t>(i)] = Signal(5, 0.0);
        } else {
            samples[static_cast<std::size_t>(i)] = lidar_sample(rng);
        }
    }
    return samples;
}

Dataset preprocess(const std::vector<Signal>& raw, std::uint64_t seed,
                   NormalizationScope scope) {
    std::vector<Signal> kept;
    kept.reserve(raw.size());
    for (const Signal& s : raw) {
        if (s.empty()) throw std::invalid_argument("preprocess: empty sample");
        if (s.size() != raw.front().size()) {
            throw std::invalid_argument("preprocess: ragged sample lengths");
        }
        if (!is_all_zero(s)) kept.push_back(s);
    }
    if (kept.empty()) throw std::invalid_argument("preprocess: all samples are zero");
    if (kept.size() < 10) {
        throw std::invalid_argument("preprocess: needs at least 10 non-zero samples, got " +
                                    std::to_string(kept.size()));
    }

    const std::size_t k = kept.front().size();
    Dataset dataset;
    dataset.seed = seed;
    if (scope == NormalizationScope::global_range) {
        double lo = kept[0][0];
        double hi = kept[0][0];
        for (const Signal& s : kept) {
            for (double v : s) {
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
        }
        if (!(hi > lo)) throw std::invalid_argument("preprocess: degenerate value range");
        dataset.min_values = {lo};
        dataset.max_values = {hi};
    } else {
        dataset.min_values.resize(k);
        dataset.max_values.resize(k);
        for (std::size_t p = 0; p < k; ++p) {
            double lo = kept[0][p];
            double hi = kept[0][p];
            for (const Signal& s : kept) {
                lo = std::min(lo, s[p]);
                hi = std::max(hi, s[p]);
            }
            if (!(hi > lo)) {
                throw std::invalid_argument("preprocess: degenerate range in pixel " +
                                            std::to_string(p));
            }
            dataset.min_values[p] = lo;
            dataset.max_values[p] = hi;
        }
    }

    dataset.samples.reserve(kept.size());
    for (const Signal& s : kept) {
        Signal normalized(k);
        for (std::size_t p = 0; p < k; ++p) {
            const std::size_t c = dataset.min_values.size() == 1 ? 0 : p;
            normalized[p] = (s[p] - dataset.min_values[c]) /
                            (dataset.max_values[c] - dataset.min_values[c]);
        }
        dataset.samples.push_back(std::move(normalized));
    }

    std::vector<std::int64_t> order(dataset.samples.size());
    std::iota(order.begin(), order.end(), std::int64_t{0});
    std::mt19937_64 rng = make_engine(seed);
    std::shuffle(order.begin(), order.end(), rng);
    const auto n_train =
        static_cast<std::size_t>(std::llround(0.7 * static_cast<double>(order.size())));
    dataset.train_indices.assign(order.begin(), order.begin() + static_cast<std::int64_t>(n_train));
    dataset.test_indices.assign(order.begin() + static_cast<std::int64_t>(n_train), order.end());
    std::sort(dataset.train_indices.begin(), dataset.train_indices.end());
    std::sort(dataset.test_indices.begin(), dataset.test_indices.end());
    dataset.validate();
    return dataset;
}

Signal denormalize(const Dataset& dataset, const Signal& normalized) {
    Signal raw(normalized.size());
    for (std::size_t p = 0; p < normalized.size(); ++p) {
        const std::size_t c = dataset.min_values.size() == 1 ? 0 : p;
        if (c >= dataset.min_values.size()) {
            throw std::invalid_argument("denormalize: sample wider than normalization constants");
        }
        raw[p] = normalized[p] * (dataset.max_values[c] - dataset.min_values[c]) +
                 dataset.min_values[c];
    }
    return raw;
}

SubsetDraw sample_subsets(const Dataset& dataset, int size, int repeats, std::uint64_t seed) {
    if (size < 1) throw std::invalid_argument("sample_subsets: size must be >= 1");
    if (repeats < 1) throw std::invalid_argument("sample_subsets: repeats must be >= 1");
    const auto train = static_cast<std::int64_t>(dataset.train_indices.size());
    if (size > train) {
        throw std::invalid_argument("sample_subsets: subset size " + std::to_string(size) +
                                    " exceeds the train split (" + std::to_string(train) +
                                    " samples)");
    }
    SubsetDraw draw;
    draw.requested_repeats = repeats;
    draw.actual_repeats =
        static_cast<int>(std::min<std::int64_t>(repeats, train / size));

    std::vector<std::int64_t> order(dataset.train_indices.begin(), dataset.train_indices.end());
    std::mt19937_64 rng = make_engine(seed);
    std::shuffle(order.begin(), order.end(), rng);

    draw.subsets.resize(static_cast<std::size_t>(draw.actual_repeats));
    for (int r = 0; r < draw.actual_repeats; ++r) {
        auto& subset = draw.subsets[static_cast<std::size_t>(r)];
        subset.reserve(static_cast<std::size_t>(size));
        for (int j = 0; j < size; ++j) {
            const std::int64_t idx = order[static_cast<std::size_t>(r) * size +
                                           static_cast<std::size_t>(j)];
            subset.push_back(dataset.samples[static_cast<std::size_t>(idx)]);
        }
    }
    return draw;
}

void save_samples_csv(const std::vector<Signal>& samples, const std::string& path) {
    if (samples.empty()) throw std::invalid_argument("save csv: no samples");
    const std::size_t k = samples.front().size();
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save csv: cannot open '" + path + "' for writing");
    for (std::size_t p = 0; p < k; ++p) out << (p ? "," : "") << "pixel_" << p;
    out << "\n";
    for (const Signal& s : samples) {
        if (s.size() != k) throw std::invalid_argument("save csv: ragged sample lengths");
        for (std::size_t p = 0; p < k; ++p) out << (p ? "," : "") << format_value(s[p]);
        out << "\n";
    }
    if (!out) throw std::runtime_error("save csv: write to '" + path + "' failed");
}

std::vector<Signal> load_samples_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load csv: cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("load csv: '" + path + "' is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();

    const std::vector<std::string> header = split_line(line);
    if (header.empty()) throw std::runtime_error("load csv: empty header");
    for (std::size_t p = 0; p < header.size(); ++p) {
        const std::string expected = "pixel_" + std::to_string(p);
        if (header[p] != expected) {
            throw std::runtime_error("csv line 1: expected column '" + expected + "', found '" +
                                     header[p] + "'");
        }
    }
    const std::size_t k = header.size();

    std::vector<Signal> samples;
    std::int64_t line_number = 1;
    while (std::getline(in, line)) {
        ++line_number;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::vector<std::string> cells = split_line(line);
        if (cells.size() != k) {
            throw std::runtime_error("csv line " + std::to_string(line_number) + ": expected " +
                                     std::to_string(k) + " pixels, found " +
                                     std::to_string(cells.size()));
        }
        Signal sample(k);
        for (std::size_t p = 0; p < k; ++p) sample[p] = parse_cell(cells[p], line_number, p);
        samples.push_back(std::move(sample));
    }
    if (samples.empty()) throw std::runtime_error("load csv: '" + path + "' has no data rows");
    return samples;
}

std::string sidecar_path(const std::string& csv_path) {
    const std::size_t dot = csv_path.find_last_of('.');
    const std::size_t slash = csv_path.find_last_of("/\\");
    if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) {
        return csv_path + ".json";
    }
    return csv_path.substr(0, dot) + ".json";
}

void save_csv(const Dataset& dataset, const std::string& path) {
    dataset.validate();
    save_samples_csv(dataset.samples, path);

    nlohmann::json meta;
    meta["seed"] = dataset.seed;
    if (dataset.min_values.size() == 1) {
        meta["min"] = dataset.min_values[0];
        meta["max"] = dataset.max_values[0];
    } else {
        meta["min"] = dataset.min_values;
        meta["max"] = dataset.max_values;
    }
    meta["train_indices"] = dataset.train_indices;
    meta["test_indices"] = dataset.test_indices;

    const std::string side = sidecar_path(path);
    std::ofstream out(side);
    if (!out) throw std::runtime_error("save csv: cannot open '" + side + "' for writing");
    out << meta.dump(2) << "\n";
    if (!out) throw std::runtime_error("save csv: write to '" + side + "' failed");
}

Dataset load_csv(const std::string& path) {
    Dataset dataset;
    dataset.samples = load_samples_csv(path);

    const std::string side = sidecar_path(path);
    std::ifstream in(side);
    if (!in) {
        throw std::runtime_error("load csv: missing sidecar '" + side +
                                 "' (raw pixel files load via load_samples_csv)");
    }
    nlohmann::json meta;
    try {
        in >> meta;
    } catch (const std::exception& e) {
        throw std::runtime_error("load csv: sidecar '" + side + "': " + e.what());
    }
    try {
        dataset.seed = meta.at("seed").get<std::uint64_t>();
        if (meta.at("min").is_array()) {
            dataset.min_values = meta.at("min").get<std::vector<double>>();
            dataset.max_values = meta.at("max").get<std::vector<double>>();
        } else {
            dataset.min_values = {meta.at("min").get<double>()};
            dataset.max_values = {meta.at("max").get<double>()};
        }
        dataset.train_indices = meta.at("train_indices").get<std::vector<std::int64_t>>();
        dataset.test_indices = meta.at("test_indices").get<std::vector<std::int64_t>>();
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("load csv: sidecar '" + side + "': " + e.what());
    }
    dataset.validate();
    return dataset;
}

} // namespace qcs
