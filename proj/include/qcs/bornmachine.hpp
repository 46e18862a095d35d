// Born machines holding the quantum average of a training set: the direct
// renormalized-sum construction, the postselected multiplexer circuit that
// witnesses it gate-by-gate, noisy trajectory mixtures, and the fidelity
// experiments that compare machines across training-set sizes and noise.
#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <variant>
#include <vector>

#include "qcs/encoding.hpp"
#include "qcs/noise.hpp"
#include "qcs/qcore.hpp"

namespace qcs {

struct TrainingSet {
    std::vector<Signal> samples;
    PixelMap map;

    int num_pixels() const;
    void validate() const;
};

enum class MachineProvenance { direct, circuit, noisy_mixture };

// Holder for a trained state: pure for noiseless constructions, a density
// matrix for noisy trajectory mixtures.
class BornMachine {
  public:
    static BornMachine from_state(StateVector state, MachineProvenance provenance,
                                  std::int64_t training_size);
    static BornMachine from_mixture(DensityMatrix rho, std::int64_t training_size);

    bool is_pure() const { return std::holds_alternative<StateVector>(state_); }
    const StateVector& pure_state() const;
    const DensityMatrix& mixed_state() const;
    DensityMatrix as_density() const;
    int num_qubits() const;
    MachineProvenance provenance() const { return provenance_; }
    std::int64_t training_size() const { return training_size_; }

  private:
    std::variant<StateVector, DensityMatrix> state_{StateVector(1)};
    MachineProvenance provenance_ = MachineProvenance::direct;
    std::int64_t training_size_ = 0;
};

double fidelity(const BornMachine& a, const BornMachine& b);
double fidelity(const BornMachine& a, const StateVector& b);

// Renormalized sum of the encoded training states. Fast path with no circuit.
BornMachine quantum_average_direct(const TrainingSet& data);

struct CircuitAverageResult {
    BornMachine machine;
    double success_probability; // analytic postselection probability
    int attempts;               // simulated repeat-until-success count
};

// Gate-level construction: log2(|D|) control qubits in uniform superposition,
// one controlled encoding per sample, a Hadamard transform on the controls,
// then postselection of the all-zeros control outcome. Requires |D| to be a
// power of two (see pad_to_power_of_two).
CircuitAverageResult quantum_average_circuit(const TrainingSet& data, std::mt19937_64& rng);

// Pads the sample list by repeating the last sample up to the next power of
// two. Duplicates reweight the renormalized sum; callers opt in explicitly.
TrainingSet pad_to_power_of_two(TrainingSet data);

// Mean of n_traj projectors of noisy state-preparation trajectories, with one
// noise draw after each encoding rotation on target qubits. Flip and
// depolarizing noise use the fixed-probability Pauli unraveling; ampdamp uses
// norm-weighted jump trajectories. probability == 0 returns the noiseless
// projector exactly.
BornMachine train_noisy_mixture(const TrainingSet& data, const NoiseSpec& spec,
                                int n_traj, std::mt19937_64& rng);

// Uniform superposition over all basis states; reference for fidelity floors.
StateVector psi_even(int n_qubits);

struct FidelityRow {
    int subset_size;
    int repeat_index;
    double fidelity_global;
    double fidelity_even;
};

struct FidelityBySizeResult {
    std::vector<FidelityRow> rows;
    std::int64_t global_size;            // samples behind psi_global
    std::map<int, int> actual_repeats;   // per size, after feasibility reduction
};

// Builds psi_global from up to global_cap training samples, then for each size
// draws disjoint subsets and reports per-repeat fidelities against psi_global
// and the uniform state. Repeats are reduced when size * repeats exceeds the
// training split.
FidelityBySizeResult fidelity_vs_size_experiment(const std::vector<Signal>& train,
                                                 const PixelMap& map,
                                                 const std::vector<int>& sizes, int repeats,
                                                 std::int64_t global_cap, std::uint64_t seed);

struct NoiseFidelityRow {
    NoiseKind kind;
    double probability;
    double fidelity_global;
};

// Fidelity of noisy trajectory mixtures (one fixed subset of subset_size
// samples) against psi_global, for each (kind, probability) pair. Trajectory
// seeds depend only on the trajectory index, so ensembles are coupled across
// probabilities: flip events at a lower probability are a subset of those at
// a higher one.
std::vector<NoiseFidelityRow> noise_fidelity_experiment(
    const std::vector<Signal>& train, const PixelMap& map, int subset_size,
    const std::vector<NoiseKind>& kinds, const std::vector<double>& probabilities,
    int n_traj, std::int64_t global_cap, std::uint64_t seed);

} // namespace qcs
