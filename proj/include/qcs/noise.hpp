// Single-qubit noise channels in Kraus form, exact density-matrix application,
// stochastic statevector unraveling, and basis-state sampling.
#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "qcs/qcore.hpp"

namespace qcs {

enum class NoiseKind { none, bitflip, phaseflip, bitphaseflip, depolarizing, ampdamp };

NoiseKind noise_kind_from_string(const std::string& name);
std::string to_string(NoiseKind kind);

struct KrausChannel {
    std::string label;
    std::vector<Eigen::Matrix2cd> operators;
};

// Builds the channel for a flip probability (flip channels, depolarizing) or
// damping strength (ampdamp) in [0,1]. kind == none gives the identity channel.
KrausChannel channel_kraus(NoiseKind kind, double param);

// Max-abs deviation of sum_k K_k^dagger K_k from the identity.
double completeness_defect(const KrausChannel& channel);

struct NoiseSpec {
    NoiseKind kind = NoiseKind::none;
    double probability = 0.0;
    std::vector<int> targets; // qubits eligible for injection; non-empty unless none
};

NoiseSpec no_noise();
// Spec targeting every qubit of an n-qubit register.
NoiseSpec noise_on_all(NoiseKind kind, double probability, int n_qubits);
void validate_noise_spec(const NoiseSpec& spec, int n_qubits);

// Exact channel application on one qubit: rho -> sum_k K_k rho K_k^dagger.
void apply_channel(DensityMatrix& rho, const KrausChannel& channel, int qubit);

// One stochastic Pauli draw on a single qubit: bitflip applies X with the
// given probability, phaseflip Z, bitphaseflip Y, depolarizing X, Y or Z with
// probability p/4 each. Always consumes the same number of engine draws for a
// given kind, so streams stay aligned across probability values. Throws for
// ampdamp, whose unraveling is norm-weighted (see jump_trajectory_step).
void inject_stochastic(StateVector& state, NoiseKind kind, double probability,
                       int qubit, std::mt19937_64& rng);

// Applies one stochastic draw to every target qubit of the spec.
void inject_stochastic(StateVector& state, const NoiseSpec& spec, std::mt19937_64& rng);

// General quantum-trajectory step: picks Kraus operator k with probability
// ||K_k psi||^2 and applies K_k with renormalization. Valid for any channel,
// including amplitude damping; the trajectory mean reproduces the exact
// channel. Consumes exactly one engine draw.
void jump_trajectory_step(StateVector& state, const KrausChannel& channel, int qubit,
                          std::mt19937_64& rng);

// Histogram of n_shots full-register measurements; keys are bitstrings with
// qubit 0 leftmost. The state is not collapsed between shots.
std::map<std::string, std::int64_t> sample_counts(const StateVector& state,
                                                  std::int64_t n_shots,
                                                  std::mt19937_64& rng);
std::map<std::string, std::int64_t> sample_counts(const DensityMatrix& rho,
                                                  std::int64_t n_shots,
                                                  std::mt19937_64& rng);

} // namespace qcs
