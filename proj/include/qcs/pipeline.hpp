// End-to-end compressive-sensing reconstruction: classical sensing of chosen
// pixels, projection-Hamiltonian construction, imaginary-time projection of a
// Born machine onto the sensed outcome, sampling/decoding of the unmeasured
// pixels, sigma-weighted RMSE scoring, and the sweep harness that runs the
// whole chain over a test set.
#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <vector>

#include "qcs/bornmachine.hpp"
#include "qcs/qite.hpp"

namespace qcs {

struct SensingOutcome {
    std::vector<int> indices;       // measured pixel positions, strictly ascending
    std::vector<double> raw_values; // signal values at those pixels
    std::vector<int> bits;          // binarized: 1 where value > midpoint, ties to 0

    void validate(int n_pixels) const;
};

// Copies the selected pixel values and binarizes each against its rescaling
// midpoint (value > v -> 1, ties -> 0). The selection must leave at least one
// pixel unmeasured.
SensingOutcome sense(const Signal& signal, const std::vector<int>& indices,
                     const PixelMap& map);

// H = -sum_i s_i Z_i over the measured pixels, s_i = +1 for bit 0 and -1 for
// bit 1, so every matching basis state sits in the ground space at energy
// -N_c and mismatched states are suppressed under imaginary time.
Hamiltonian build_projection_hamiltonian(const SensingOutcome& outcome, int n_pixels);

// Real-valued variant: per measured pixel, (Z_i - cos(pi f_v(x_i)))^2
// expanded into an identity term and a Z_i term. Pins <Z_i> toward the
// encoded value rather than a hard bit; reduces to a shifted/scaled
// build_projection_hamiltonian when x_i sits at 0 or 1.
Hamiltonian build_projection_hamiltonian_general(const SensingOutcome& outcome, int n_pixels,
                                                 const PixelMap& map);

struct ProjectionOutcome {
    BornMachine machine;
    QiteTrajectory trajectory;
};

// Imaginary-time projection of the machine onto the outcome's ground space.
// Pure machines run as statevectors (noiseless, or a single stochastic
// trajectory for flip/depolarizing noise); amplitude damping and mixed
// machines run in density-matrix mode with exact channels.
BornMachine project(const BornMachine& machine, const Hamiltonian& h,
                    const QiteConfig& qcfg, const NoiseSpec& spec, std::mt19937_64& rng);
ProjectionOutcome project_with_trajectory(const BornMachine& machine, const Hamiltonian& h,
                                          const QiteConfig& qcfg, const NoiseSpec& spec,
                                          std::mt19937_64& rng);

struct ReconstructionResult {
    std::vector<int> unmeasured_indices;
    std::vector<double> per_pixel_estimates; // decoded values for those pixels
    std::vector<double> per_pixel_truth;     // filled by the scoring caller
    std::int64_t n_samples_used = 0;
    double srmse = 0.0; // 0 until scored
};

// Draws n_samples full-register measurements from the projected machine and
// decodes, per unmeasured pixel, the frequency of bit 1 back to a pixel
// value. The stored state is sampled repeatedly; re-preparing it per sample
// would not change the statistics of a simulator (see the hardware-faithful
// variant for cost accounting).
ReconstructionResult sample_reconstruction(const BornMachine& projected,
                                           const SensingOutcome& outcome, const PixelMap& map,
                                           std::int64_t n_samples, std::mt19937_64& rng);

// Cost-accounting mode: re-runs the projection before every single-shot
// sample, as hardware without state storage would. Statistically equivalent
// to sample_reconstruction for deterministic projections.
ReconstructionResult sample_reconstruction_hardware_faithful(
    const BornMachine& machine, const Hamiltonian& h, const SensingOutcome& outcome,
    const PixelMap& map, const QiteConfig& qcfg, const NoiseSpec& spec,
    std::int64_t n_samples, std::mt19937_64& rng);

// sqrt( mean_i ((predictions_i - truths_i) / sigmas_i)^2 ). All sigmas must
// be positive; callers exclude degenerate pixels beforehand.
double mean_srmse(const std::vector<double>& predictions, const std::vector<double>& truths,
                  const std::vector<double>& sigmas);

// Population standard deviation per pixel across the given samples.
std::vector<double> pixel_sigmas(const std::vector<Signal>& samples);

struct SweepRow {
    int n_c;
    std::int64_t test_index;
    double srmse;
    double final_energy; // projection energy at the end of the trajectory
};

struct SweepResult {
    std::vector<SweepRow> rows;              // one per (N_c, test signal)
    std::map<int, double> mean_srmse_by_nc;  // equal-weight mean over test signals
    std::vector<int> excluded_pixels;        // sigma <= 0, left out of scoring
};

// One sweep cell — the (N_c slot, test signal) unit of the reconstruction
// sweep on its own derived stream. The sweep is a deterministic fold of these
// cells, so callers may fan them out to workers and reassemble by index.
// hardware_faithful switches the sampler to the per-sample re-projection mode.
SweepRow run_reconstruction_case(const std::vector<Signal>& test_set, std::size_t test_index,
                                 const BornMachine& machine, const PixelMap& map, int n_c,
                                 std::size_t nc_slot, const QiteConfig& qcfg,
                                 const NoiseSpec& spec, const std::vector<double>& sigmas,
                                 std::int64_t n_samples, std::uint64_t seed,
                                 bool general_hamiltonian = false,
                                 bool hardware_faithful = false);

// For every N_c and test signal: draws a random pixel selection on a stream
// derived from (seed, N_c, test index), senses, projects, samples, and scores
// against the training-data sigmas. general_hamiltonian switches the
// projection operator to the real-valued variant.
SweepResult run_reconstruction_sweep(const std::vector<Signal>& test_set,
                                     const BornMachine& machine, const PixelMap& map,
                                     const std::vector<int>& nc_values,
                                     const QiteConfig& qcfg, const NoiseSpec& spec,
                                     const std::vector<double>& sigmas,
                                     std::int64_t n_samples, std::uint64_t seed,
                                     bool general_hamiltonian = false);

} // namespace qcs
