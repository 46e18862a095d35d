// Quantum imaginary time evolution by fitted unitaries: per-term Pauli
// tomography on a small qubit domain, a regularized least-squares generator
// fit, Trotterized sweeps with per-step energy tracking, shot-based
// tomography, and a retry heuristic that discards steps whose energy went up.
// Noise enters either as stochastic statevector trajectories or as exact
// density-matrix channels.
#pragma once

#include <cstdint>
#include <random>
#include <variant>
#include <vector>

#include "qcs/noise.hpp"
#include "qcs/qcore.hpp"

namespace qcs {

struct TomographyMode {
    std::int64_t n_shots = 0; // 0 means exact expectation values

    static TomographyMode exact() { return TomographyMode{0}; }
    static TomographyMode shots(std::int64_t n);
    bool is_exact() const { return n_shots == 0; }
};

// Expectation estimates of the observables, coefficients included. Exact mode
// returns true expectation values and draws nothing from the engine; shots
// mode returns one empirical mean per observable, each from n_shots
// measurements of that observable in its own basis. Estimates held at an
// eigenvalue bound (|bare expectation| = 1) are returned exactly.
std::vector<double> tomography(const StateVector& state,
                               const std::vector<PauliTerm>& observables,
                               TomographyMode mode, std::mt19937_64& rng);
std::vector<double> tomography(const DensityMatrix& rho,
                               const std::vector<PauliTerm>& observables,
                               TomographyMode mode, std::mt19937_64& rng);

struct QiteConfig {
    double d_beta = 0.005;        // imaginary-time substep
    double total_beta = 3.0;      // total evolution time
    TomographyMode tomography{};  // exact or shots(n) per observable
    int max_discards = 30;        // retries of a step whose energy increased
    int domain_size = 1;          // minimum qubit support of fitted generators
    double regularization = 1e-8; // Tikhonov lambda for the generator solve

    // Number of Trotter sweeps: round(total_beta / d_beta), at least 1.
    int num_steps() const;
    void validate() const;
};

struct QiteStepResult {
    StateVector state;
    bool accepted; // false when the fitted generator was numerically zero
};

struct QiteStepDensityResult {
    DensityMatrix state;
    bool accepted;
};

// One imaginary-time substep for a single Hamiltonian term: estimates all
// non-identity Pauli strings on the term's domain (its support, expanded with
// nearest-index qubits up to domain_size), solves the regularized normal
// equations for the generator that best mimics exp(-d_beta * term) to first
// order, and applies the exact exponential of that generator. Eigenstates of
// the term are fixed points: the generator vanishes and the input is returned
// with accepted = false.
QiteStepResult qite_step(const StateVector& state, const PauliTerm& term,
                         const QiteConfig& config, std::mt19937_64& rng);
QiteStepDensityResult qite_step(const DensityMatrix& rho, const PauliTerm& term,
                                const QiteConfig& config, std::mt19937_64& rng);

struct TrajectoryPoint {
    double beta;
    double energy;
};

struct QiteTrajectory {
    // (0, E0) followed by one point per Trotter sweep; betas strictly increase.
    std::vector<TrajectoryPoint> points;
    // Discarded attempts per sweep (points.size() - 1 entries); trajectory
    // ensembles record the total across member trajectories.
    std::vector<int> discards_used;
    // Statevector for pure runs; density matrix for exact-channel runs and
    // for trajectory-ensemble means when the register fits the density limit.
    std::variant<StateVector, DensityMatrix> final_state{StateVector(1)};

    bool final_is_pure() const;
    const StateVector& final_pure() const;
    const DensityMatrix& final_mixed() const;
    double final_energy() const; // energy of the last recorded point
};

// Trotterized evolution: num_steps() sweeps, each applying qite_step for
// every Hamiltonian term in declaration order, recording the tomographic
// energy estimate after each sweep. Retry policy: if a sweep's energy exceeds
// the previous recorded energy by more than the tolerance (1e-9 with exact
// tomography, 0 in shot mode), the tomography is resampled and the sweep
// redone, up to max_discards times, after which the last attempt is accepted.
QiteTrajectory qite_run(const Hamiltonian& h, const StateVector& state0,
                        const QiteConfig& config, std::mt19937_64& rng);

// Noisy variant: injects noise after each applied term unitary, on the fitted
// domain qubits that are also spec targets. Flip and depolarizing kinds run
// n_traj stochastic statevector trajectories on derived engine streams
// (energies averaged pointwise, discards totalled); n_traj == 1 consumes the
// caller's engine directly. Amplitude damping switches to density-matrix
// evolution with the exact channel, which is already the trajectory mean.
// probability == 0 short-circuits to qite_run.
QiteTrajectory qite_run_noisy(const Hamiltonian& h, const StateVector& state0,
                              const QiteConfig& config, const NoiseSpec& spec,
                              std::mt19937_64& rng, int n_traj = 50);

// The same sweep/retry loop on a density matrix, with any noise kind applied
// as the exact channel after each term unitary.
QiteTrajectory qite_run_density(const Hamiltonian& h, const DensityMatrix& rho0,
                                const QiteConfig& config, const NoiseSpec& spec,
                                std::mt19937_64& rng);

// Tomographic energy estimate: one observable per Hamiltonian term.
double estimate_energy(const StateVector& state, const Hamiltonian& h,
                       TomographyMode mode, std::mt19937_64& rng);
double estimate_energy(const DensityMatrix& rho, const Hamiltonian& h,
                       TomographyMode mode, std::mt19937_64& rng);

} // namespace qcs
