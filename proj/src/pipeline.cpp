#include "qcs/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "qcs/rng.hpp"

namespace qcs {

namespace {

std::vector<int> unmeasured_pixels(const SensingOutcome& outcome, int n_pixels) {
    std::vector<int> out;
    for (int q = 0; q < n_pixels; ++q) {
        if (!std::binary_search(outcome.indices.begin(), outcome.indices.end(), q)) {
            out.push_back(q);
        }
    }
    return out;
}

// Frequency of bit 1 per register position across a measurement histogram.
std::vector<double> bit_frequencies(const std::map<std::string, std::int64_t>& counts,
                                    int n_pixels, std::int64_t n_samples) {
    std::vector<double> freq(static_cast<std::size_t>(n_pixels), 0.0);
    for (const auto& [bits, count] : counts) {
        for (int q = 0; q < n_pixels; ++q) {
            if (bits[static_cast<std::size_t>(q)] == '1') {
                freq[static_cast<std::size_t>(q)] += static_cast<double>(count);
            }
        }
    }
    for (double& f : freq) f /= static_cast<double>(n_samples);
    return freq;
}

ReconstructionResult decode_frequencies(const std::vector<double>& freq,
                                        const SensingOutcome& outcome, const PixelMap& map,
                                        std::int64_t n_samples) {
    ReconstructionResult result;
    result.unmeasured_indices = unmeasured_pixels(outcome, static_cast<int>(map.size()));
    result.n_samples_used = n_samples;
    result.per_pixel_estimates.reserve(result.unmeasured_indices.size());
    for (int q : result.unmeasured_indices) {
        result.per_pixel_estimates.push_back(
            decode_frequency(freq[static_cast<std::size_t>(q)], map[static_cast<std::size_t>(q)]));
    }
    return result;
}

} // namespace

void SensingOutcome::validate(int n_pixels) const {
    if (indices.empty()) throw std::invalid_argument("sensing: no measured pixels");
    if (indices.size() != raw_values.size() || indices.size() != bits.size()) {
        throw std::invalid_argument("sensing: indices/values/bits lengths disagree");
    }
    if (static_cast<int>(indices.size()) >= n_pixels) {
        throw std::invalid_argument("sensing: all " + std::to_string(n_pixels) +
                                    " pixels measured; nothing left to reconstruct");
    }
    for (std::size_t j = 0; j < indices.size(); ++j) {
        if (indices[j] < 0 || indices[j] >= n_pixels) {
            throw std::invalid_argument("sensing: pixel index " + std::to_string(indices[j]) +
                                        " out of range for " + std::to_string(n_pixels) +
                                        " pixels");
        }
        if (j > 0 && indices[j] <= indices[j - 1]) {
            throw std::invalid_argument("sensing: indices must be strictly ascending");
        }
        if (bits[j] != 0 && bits[j] != 1) {
            throw std::invalid_argument("sensing: bits must be 0 or 1");
        }
    }
}

SensingOutcome sense(const Signal& signal, const std::vector<int>& indices,
                     const PixelMap& map) {
    if (signal.size() != map.size()) {
        throw std::invalid_argument("sense: signal has " + std::to_string(signal.size()) +
                                    " pixels but map has " + std::to_string(map.size()));
    }
    SensingOutcome outcome;
    outcome.indices = indices;
    outcome.raw_values.reserve(indices.size());
    outcome.bits.reserve(indices.size());
    for (int q : indices) {
        if (q < 0 || q >= static_cast<int>(signal.size())) {
            throw std::invalid_argument("sense: pixel index " + std::to_string(q) +
                                        " out of range");
        }
        const double value = signal[static_cast<std::size_t>(q)];
        outcome.raw_values.push_back(value);
        outcome.bits.push_back(value > map[static_cast<std::size_t>(q)] ? 1 : 0);
    }
    outcome.validate(static_cast<int>(signal.size()));
    return outcome;
}

Hamiltonian build_projection_hamiltonian(const SensingOutcome& outcome, int n_pixels) {
    outcome.validate(n_pixels);
    Hamiltonian h;
    h.terms.reserve(outcome.indices.size());
    for (std::size_t j = 0; j < outcome.indices.size(); ++j) {
        PauliTerm term;
        term.coefficient = outcome.bits[j] == 1 ? 1.0 : -1.0;
        term.axes.assign(static_cast<std::size_t>(n_pixels), 'I');
        term.axes[static_cast<std::size_t>(outcome.indices[j])] = 'Z';
        h.terms.push_back(std::move(term));
    }
    return h;
}

Hamiltonian build_projection_hamiltonian_general(const SensingOutcome& outcome, int n_pixels,
                                                 const PixelMap& map) {
    outcome.validate(n_pixels);
    if (static_cast<int>(map.size()) != n_pixels) {
        throw std::invalid_argument("projection: map has " + std::to_string(map.size()) +
                                    " midpoints for " + std::to_string(n_pixels) + " pixels");
    }
    Hamiltonian h;
    for (std::size_t j = 0; j < outcome.indices.size(); ++j) {
        const int q = outcome.indices[j];
        const double target =
            std::cos(encoding_angle(outcome.raw_values[j], map[static_cast<std::size_t>(q)]));
        // (Z - target)^2 = (1 + target^2) I - 2 target Z
        PauliTerm identity;
        identity.coefficient = 1.0 + target * target;
        identity.axes.assign(static_cast<std::size_t>(n_pixels), 'I');
        h.terms.push_back(std::move(identity));
        PauliTerm z;
        z.coefficient = -2.0 * target;
        z.axes.assign(static_cast<std::size_t>(n_pixels), 'I');
        z.axes[static_cast<std::size_t>(q)] = 'Z';
        h.terms.push_back(std::move(z));
    }
    return h;
}

ProjectionOutcome project_with_trajectory(const BornMachine& machine, const Hamiltonian& h,
                                          const QiteConfig& qcfg, const NoiseSpec& spec,
                                          std::mt19937_64& rng) {
    QiteTrajectory trajectory;
    if (machine.is_pure()) {
        if (spec.kind == NoiseKind::none || spec.probability == 0.0) {
            trajectory = qite_run(h, machine.pure_state(), qcfg, rng);
        } else {
            // One stochastic trajectory: each reconstruction experiences a
            // single noise realization, like a single hardware run would.
            trajectory = qite_run_noisy(h, machine.pure_state(), qcfg, spec, rng, 1);
        }
    } else {
        trajectory = qite_run_density(h, machine.mixed_state(), qcfg, spec, rng);
    }

    BornMachine projected =
        trajectory.final_is_pure()
            ? BornMachine::from_state(trajectory.final_pure(), machine.provenance(),
                                      machine.training_size())
            : BornMachine::from_mixture(trajectory.final_mixed(), machine.training_size());
    return ProjectionOutcome{std::move(projected), std::move(trajectory)};
}

BornMachine project(const BornMachine& machine, const Hamiltonian& h, const QiteConfig& qcfg,
                    const NoiseSpec& spec, std::mt19937_64& rng) {
    return project_with_trajectory(machine, h, qcfg, spec, rng).machine;
}

ReconstructionResult sample_reconstruction(const BornMachine& projected,
                                           const SensingOutcome& outcome, const PixelMap& map,
                                           std::int64_t n_samples, std::mt19937_64& rng) {
    const int n = static_cast<int>(map.size());
    outcome.validate(n);
    if (projected.num_qubits() != n) {
        throw std::invalid_argument("reconstruction: machine has " +
                                    std::to_string(projected.num_qubits()) +
                                    " qubits but map has " + std::to_string(n) + " pixels");
    }
    if (n_samples < 1) throw std::invalid_argument("reconstruction: n_samples must be >= 1");

    const std::map<std::string, std::int64_t> counts =
        projected.is_pure() ? sample_counts(projected.pure_state(), n_samples, rng)
                            : sample_counts(projected.mixed_state(), n_samples, rng);
    return decode_frequencies(bit_frequencies(counts, n, n_samples), outcome, map, n_samples);
}

namespace {

ReconstructionResult hardware_faithful_impl(const BornMachine& machine, const Hamiltonian& h,
                                            const SensingOutcome& outcome, const PixelMap& map,
                                            const QiteConfig& qcfg, const NoiseSpec& spec,
                                            std::int64_t n_samples, std::mt19937_64& rng,
                                            double* last_energy) {
    const int n = static_cast<int>(map.size());
    outcome.validate(n);
    if (n_samples < 1) throw std::invalid_argument("reconstruction: n_samples must be >= 1");

    std::vector<double> freq(static_cast<std::size_t>(n), 0.0);
    for (std::int64_t s = 0; s < n_samples; ++s) {
        const ProjectionOutcome projection = project_with_trajectory(machine, h, qcfg, spec, rng);
        if (last_energy) *last_energy = projection.trajectory.final_energy();
        const std::map<std::string, std::int64_t> counts =
            projection.machine.is_pure()
                ? sample_counts(projection.machine.pure_state(), 1, rng)
                : sample_counts(projection.machine.mixed_state(), 1, rng);
        for (int q = 0; q < n; ++q) {
            if (counts.begin()->first[static_cast<std::size_t>(q)] == '1') {
                freq[static_cast<std::size_t>(q)] += 1.0;
            }
        }
    }
    for (double& f : freq) f /= static_cast<double>(n_samples);
    return decode_frequencies(freq, outcome, map, n_samples);
}

} // namespace

ReconstructionResult sample_reconstruction_hardware_faithful(
    const BornMachine& machine, const Hamiltonian& h, const SensingOutcome& outcome,
    const PixelMap& map, const QiteConfig& qcfg, const NoiseSpec& spec,
    std::int64_t n_samples, std::mt19937_64& rng) {
    return hardware_faithful_impl(machine, h, outcome, map, qcfg, spec, n_samples, rng, nullptr);
}

double mean_srmse(const std::vector<double>& predictions, const std::vector<double>& truths,
                  const std::vector<double>& sigmas) {
    if (predictions.empty() || predictions.size() != truths.size() ||
        predictions.size() != sigmas.size()) {
        throw std::invalid_argument("srmse: prediction/truth/sigma lengths must agree and "
                                    "be non-empty");
    }
    double total = 0.0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        if (!(sigmas[i] > 0.0)) {
            throw std::invalid_argument("srmse: sigma for entry " + std::to_string(i) +
                                        " is not positive (degenerate pixel)");
        }
        const double scaled = (predictions[i] - truths[i]) / sigmas[i];
        total += scaled * scaled;
    }
    return std::sqrt(total / static_cast<double>(predictions.size()));
}

std::vector<double> pixel_sigmas(const std::vector<Signal>& samples) {
    if (samples.empty()) throw std::invalid_argument("sigmas: no samples");
    const std::size_t k = samples.front().size();
    std::vector<double> mean(k, 0.0);
    std::vector<double> mean_sq(k, 0.0);
    for (const Signal& s : samples) {
        if (s.size() != k) throw std::invalid_argument("sigmas: ragged sample lengths");
        for (std::size_t p = 0; p < k; ++p) {
            mean[p] += s[p];
            mean_sq[p] += s[p] * s[p];
        }
    }
    std::vector<double> sigma(k);
    const auto n = static_cast<double>(samples.size());
    for (std::size_t p = 0; p < k; ++p) {
        mean[p] /= n;
        const double variance = std::max(0.0, mean_sq[p] / n - mean[p] * mean[p]);
        sigma[p] = std::sqrt(variance);
    }
    return sigma;
}

SweepRow run_reconstruction_case(const std::vector<Signal>& test_set, std::size_t test_index,
                                 const BornMachine& machine, const PixelMap& map, int n_c,
                                 std::size_t nc_slot, const QiteConfig& qcfg,
                                 const NoiseSpec& spec, const std::vector<double>& sigmas,
                                 std::int64_t n_samples, std::uint64_t seed,
                                 bool general_hamiltonian, bool hardware_faithful) {
    const int n = static_cast<int>(map.size());
    if (test_index >= test_set.size()) throw std::invalid_argument("sweep: test index out of range");
    if (sigmas.size() != map.size()) {
        throw std::invalid_argument("sweep: sigma count does not match pixel count");
    }
    if (machine.num_qubits() != n) {
        throw std::invalid_argument("sweep: machine register does not match pixel count");
    }
    if (n_c < 1 || n_c >= n) {
        throw std::invalid_argument("sweep: N_c = " + std::to_string(n_c) + " must be in [1, " +
                                    std::to_string(n - 1) + "]");
    }
    const std::uint64_t nc_seed = derive_seed(seed, static_cast<std::uint64_t>(nc_slot));
    std::mt19937_64 rng = make_engine(derive_seed(nc_seed, static_cast<std::uint64_t>(test_index)));
    const Signal& signal = test_set[test_index];

    std::vector<int> pixels(static_cast<std::size_t>(n));
    std::iota(pixels.begin(), pixels.end(), 0);
    std::shuffle(pixels.begin(), pixels.end(), rng);
    std::vector<int> chosen(pixels.begin(), pixels.begin() + n_c);
    std::sort(chosen.begin(), chosen.end());

    const SensingOutcome outcome = sense(signal, chosen, map);
    const Hamiltonian h = general_hamiltonian
                              ? build_projection_hamiltonian_general(outcome, n, map)
                              : build_projection_hamiltonian(outcome, n);

    ReconstructionResult recon;
    double final_energy = 0.0;
    if (hardware_faithful) {
        recon = hardware_faithful_impl(machine, h, outcome, map, qcfg, spec, n_samples, rng,
                                       &final_energy);
    } else {
        ProjectionOutcome projection = project_with_trajectory(machine, h, qcfg, spec, rng);
        recon = sample_reconstruction(projection.machine, outcome, map, n_samples, rng);
        final_energy = projection.trajectory.final_energy();
    }

    // Score only the unmeasured pixels with a usable sigma.
    std::vector<double> predictions;
    std::vector<double> truths;
    std::vector<double> weights;
    for (std::size_t j = 0; j < recon.unmeasured_indices.size(); ++j) {
        const int q = recon.unmeasured_indices[j];
        if (!(sigmas[static_cast<std::size_t>(q)] > 0.0)) continue;
        predictions.push_back(recon.per_pixel_estimates[j]);
        truths.push_back(signal[static_cast<std::size_t>(q)]);
        weights.push_back(sigmas[static_cast<std::size_t>(q)]);
    }
    if (predictions.empty()) {
        throw std::runtime_error("sweep: every unmeasured pixel of test case " +
                                 std::to_string(test_index) + " has degenerate sigma");
    }
    const double score = mean_srmse(predictions, truths, weights);
    return SweepRow{n_c, static_cast<std::int64_t>(test_index), score, final_energy};
}

SweepResult run_reconstruction_sweep(const std::vector<Signal>& test_set,
                                     const BornMachine& machine, const PixelMap& map,
                                     const std::vector<int>& nc_values,
                                     const QiteConfig& qcfg, const NoiseSpec& spec,
                                     const std::vector<double>& sigmas,
                                     std::int64_t n_samples, std::uint64_t seed,
                                     bool general_hamiltonian) {
    const int n = static_cast<int>(map.size());
    if (test_set.empty()) throw std::invalid_argument("sweep: empty test set");
    if (sigmas.size() != map.size()) {
        throw std::invalid_argument("sweep: sigma count does not match pixel count");
    }

    SweepResult result;
    for (int q = 0; q < n; ++q) {
        if (!(sigmas[static_cast<std::size_t>(q)] > 0.0)) result.excluded_pixels.push_back(q);
    }

    for (std::size_t nc_slot = 0; nc_slot < nc_values.size(); ++nc_slot) {
        const int n_c = nc_values[nc_slot];
        double srmse_sum = 0.0;
        for (std::size_t t = 0; t < test_set.size(); ++t) {
            const SweepRow row = run_reconstruction_case(test_set, t, machine, map, n_c, nc_slot,
                                                         qcfg, spec, sigmas, n_samples, seed,
                                                         general_hamiltonian);
            srmse_sum += row.srmse;
            result.rows.push_back(row);
        }
        result.mean_srmse_by_nc[n_c] = srmse_sum / static_cast<double>(test_set.size());
    }
    return result;
}

} // namespace qcs
