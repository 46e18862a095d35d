#include "qcs/bornmachine.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "qcs/rng.hpp"

namespace qcs {

namespace {

constexpr double kNormFloor = 1e-12;

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

int log2_exact(std::size_t n) {
    int c = 0;
    while ((std::size_t{1} << c) < n) ++c;
    return c;
}

// Unnormalized sum of encoded sample states; shared by the direct and noisy
// constructions.
Eigen::VectorXcd encoded_sum(const TrainingSet& data) {
    const int n = data.num_pixels();
    Eigen::VectorXcd sum = Eigen::VectorXcd::Zero(std::int64_t{1} << n);
    for (const auto& sample : data.samples) {
        sum += encode_signal(sample, data.map).amplitudes();
    }
    return sum;
}

} // namespace

int TrainingSet::num_pixels() const { return static_cast<int>(map.size()); }

void TrainingSet::validate() const {
    if (map.empty()) throw std::invalid_argument("training set: empty pixel map");
    if (samples.empty()) throw std::invalid_argument("training set: no samples");
    if (num_pixels() > limits::max_statevector_qubits) {
        throw std::invalid_argument("training set: " + std::to_string(num_pixels()) +
                                    " pixels exceeds the statevector limit of " +
                                    std::to_string(limits::max_statevector_qubits));
    }
    for (const auto& sample : samples) {
        if (static_cast<int>(sample.size()) != num_pixels()) {
            throw std::invalid_argument("training set: sample length " +
                                        std::to_string(sample.size()) +
                                        " does not match pixel map size " +
                                        std::to_string(map.size()));
        }
    }
}

BornMachine BornMachine::from_state(StateVector state, MachineProvenance provenance,
                                    std::int64_t training_size) {
    BornMachine m;
    m.state_ = std::move(state);
    m.provenance_ = provenance;
    m.training_size_ = training_size;
    return m;
}

BornMachine BornMachine::from_mixture(DensityMatrix rho, std::int64_t training_size) {
    BornMachine m;
    m.state_ = std::move(rho);
    m.provenance_ = MachineProvenance::noisy_mixture;
    m.training_size_ = training_size;
    return m;
}

const StateVector& BornMachine::pure_state() const {
    if (!is_pure()) throw std::logic_error("born machine: state is a mixture, not pure");
    return std::get<StateVector>(state_);
}

const DensityMatrix& BornMachine::mixed_state() const {
    if (is_pure()) throw std::logic_error("born machine: state is pure, not a mixture");
    return std::get<DensityMatrix>(state_);
}

DensityMatrix BornMachine::as_density() const {
    if (is_pure()) return DensityMatrix::from_pure(std::get<StateVector>(state_));
    return std::get<DensityMatrix>(state_);
}

int BornMachine::num_qubits() const {
    if (is_pure()) return std::get<StateVector>(state_).num_qubits();
    return std::get<DensityMatrix>(state_).num_qubits();
}

double fidelity(const BornMachine& a, const BornMachine& b) {
    if (a.is_pure() && b.is_pure()) return fidelity(a.pure_state(), b.pure_state());
    if (a.is_pure()) return fidelity(b.mixed_state(), a.pure_state());
    if (b.is_pure()) return fidelity(a.mixed_state(), b.pure_state());
    return fidelity(a.mixed_state(), b.mixed_state());
}

double fidelity(const BornMachine& a, const StateVector& b) {
    if (a.is_pure()) return fidelity(a.pure_state(), b);
    return fidelity(a.mixed_state(), b);
}

BornMachine quantum_average_direct(const TrainingSet& data) {
    data.validate();
    Eigen::VectorXcd sum = encoded_sum(data);
    const double norm = sum.norm();
    if (norm < kNormFloor) {
        throw std::runtime_error("quantum average: encoded samples cancel to the zero vector");
    }
    StateVector state(data.num_pixels(), sum / norm);
    return BornMachine::from_state(std::move(state), MachineProvenance::direct,
                                   static_cast<std::int64_t>(data.samples.size()));
}

CircuitAverageResult quantum_average_circuit(const TrainingSet& data, std::mt19937_64& rng) {
    data.validate();
    const std::size_t d = data.samples.size();
    if (!is_power_of_two(d)) {
        throw std::invalid_argument("circuit average: sample count " + std::to_string(d) +
                                    " is not a power of two; pad_to_power_of_two first");
    }
    const int n = data.num_pixels();
    const int c = log2_exact(d);
    if (n + c > limits::max_statevector_qubits) {
        throw std::invalid_argument("circuit average: " + std::to_string(n + c) +
                                    " total qubits exceeds the statevector limit");
    }

    // One sample needs no controls: the circuit is just the encoding itself.
    if (c == 0) {
        StateVector state = encode_signal(data.samples[0], data.map);
        return CircuitAverageResult{
            BornMachine::from_state(std::move(state), MachineProvenance::circuit, 1), 1.0, 1};
    }

    // Controls are qubits 0..c-1, pixels are qubits c..c+n-1.
    StateVector state(n + c);
    for (int q = 0; q < c; ++q) apply_gate(state, gate_h(q));
    std::vector<int> controls(c);
    std::iota(controls.begin(), controls.end(), 0);
    std::vector<int> bits(c);
    for (std::size_t z = 0; z < d; ++z) {
        for (int q = 0; q < c; ++q) bits[q] = static_cast<int>((z >> (c - 1 - q)) & 1u);
        for (int pixel = 0; pixel < n; ++pixel) {
            const double theta = encoding_angle(data.samples[z][pixel], data.map[pixel]);
            apply_controlled_ry(state, controls, bits, c + pixel, theta);
        }
    }
    for (int q = 0; q < c; ++q) apply_gate(state, gate_h(q));

    std::vector<int> zeros(c, 0);
    PostselectionRecord post = postselect(state, controls, zeros);

    // Repeat-until-success: number of preparations until the all-zeros control
    // outcome, geometric in the success probability.
    int attempts = 1;
    if (post.probability < 1.0 - 1e-15) {
        std::geometric_distribution<int> failures(post.probability);
        attempts = 1 + failures(rng);
    }

    return CircuitAverageResult{
        BornMachine::from_state(std::move(post.state), MachineProvenance::circuit,
                                static_cast<std::int64_t>(d)),
        post.probability, attempts};
}

TrainingSet pad_to_power_of_two(TrainingSet data) {
    data.validate();
    while (!is_power_of_two(data.samples.size())) {
        data.samples.push_back(data.samples.back());
    }
    return data;
}

BornMachine train_noisy_mixture(const TrainingSet& data, const NoiseSpec& spec,
                                int n_traj, std::mt19937_64& rng) {
    data.validate();
    const int n = data.num_pixels();
    validate_noise_spec(spec, n);
    if (n_traj < 1) throw std::invalid_argument("noisy training: n_traj must be >= 1");
    if (n > limits::max_density_qubits) {
        throw std::invalid_argument("noisy training: " + std::to_string(n) +
                                    " pixels exceeds the density-matrix limit of " +
                                    std::to_string(limits::max_density_qubits));
    }
    const auto size = static_cast<std::int64_t>(data.samples.size());

    // Without noise every trajectory is identical; return the exact projector.
    if (spec.kind == NoiseKind::none || spec.probability == 0.0) {
        BornMachine pure = quantum_average_direct(data);
        return BornMachine::from_mixture(pure.as_density(), size);
    }

    // Angles are noise-independent; precompute once across trajectories.
    std::vector<std::vector<double>> angles(data.samples.size(), std::vector<double>(n));
    for (std::size_t s = 0; s < data.samples.size(); ++s) {
        for (int q = 0; q < n; ++q) {
            angles[s][q] =
                encoding_angle(data.samples[s][static_cast<std::size_t>(q)],
                               data.map[static_cast<std::size_t>(q)]);
        }
    }

    const bool damping = (spec.kind == NoiseKind::ampdamp);
    KrausChannel damp_kraus;
    if (damping) damp_kraus = channel_kraus(NoiseKind::ampdamp, spec.probability);

    // Each trajectory runs on its own derived stream so the mixture does not
    // depend on evaluation order and stays coupled across noise levels.
    const std::uint64_t master = rng();
    const std::int64_t dim = std::int64_t{1} << n;
    Eigen::MatrixXcd accum = Eigen::MatrixXcd::Zero(dim, dim);
    for (int t = 0; t < n_traj; ++t) {
        std::mt19937_64 traj_rng = make_engine(derive_seed(master, static_cast<std::uint64_t>(t)));
        Eigen::VectorXcd sum = Eigen::VectorXcd::Zero(dim);
        for (std::size_t s = 0; s < data.samples.size(); ++s) {
            StateVector state(n);
            for (int q = 0; q < n; ++q) {
                apply_gate(state, gate_ry(angles[s][static_cast<std::size_t>(q)], q));
                if (std::find(spec.targets.begin(), spec.targets.end(), q) ==
                    spec.targets.end()) {
                    continue;
                }
                if (damping) {
                    jump_trajectory_step(state, damp_kraus, q, traj_rng);
                } else {
                    inject_stochastic(state, spec.kind, spec.probability, q, traj_rng);
                }
            }
            sum += state.amplitudes();
        }
        const double norm = sum.norm();
        if (norm < kNormFloor) {
            throw std::runtime_error(
                "noisy training: encoded samples cancel to the zero vector in a trajectory");
        }
        sum /= norm;
        accum.noalias() += sum * sum.adjoint();
    }
    accum /= static_cast<double>(n_traj);
    return BornMachine::from_mixture(DensityMatrix::from_matrix(std::move(accum)), size);
}

StateVector psi_even(int n_qubits) {
    StateVector state(n_qubits);
    for (int q = 0; q < n_qubits; ++q) apply_gate(state, gate_h(q));
    return state;
}

FidelityBySizeResult fidelity_vs_size_experiment(const std::vector<Signal>& train,
                                                 const PixelMap& map,
                                                 const std::vector<int>& sizes, int repeats,
                                                 std::int64_t global_cap, std::uint64_t seed) {
    if (train.empty()) throw std::invalid_argument("size experiment: empty training split");
    if (repeats < 1) throw std::invalid_argument("size experiment: repeats must be >= 1");
    if (global_cap < 1) throw std::invalid_argument("size experiment: global_cap must be >= 1");

    const auto total = static_cast<std::int64_t>(train.size());
    const std::int64_t global_size = std::min(global_cap, total);
    TrainingSet global_set{{train.begin(), train.begin() + global_size}, map};
    const BornMachine psi_global = quantum_average_direct(global_set);
    const StateVector even = psi_even(static_cast<int>(map.size()));

    FidelityBySizeResult result;
    result.global_size = global_size;
    for (std::size_t si = 0; si < sizes.size(); ++si) {
        const int size = sizes[si];
        if (size < 1) throw std::invalid_argument("size experiment: subset sizes must be >= 1");
        const int feasible =
            static_cast<int>(std::min<std::int64_t>(repeats, total / size));
        if (feasible == 0) {
            throw std::invalid_argument("size experiment: subset size " + std::to_string(size) +
                                        " exceeds the training split (" + std::to_string(total) +
                                        " samples)");
        }
        result.actual_repeats[size] = feasible;

        // Fresh shuffle per size, then disjoint consecutive blocks per repeat.
        std::vector<std::int64_t> order(train.size());
        std::iota(order.begin(), order.end(), std::int64_t{0});
        std::mt19937_64 shuffle_rng =
            make_engine(derive_seed(seed, static_cast<std::uint64_t>(si)));
        std::shuffle(order.begin(), order.end(), shuffle_rng);

        for (int r = 0; r < feasible; ++r) {
            TrainingSet subset{{}, map};
            subset.samples.reserve(static_cast<std::size_t>(size));
            for (int k = 0; k < size; ++k) {
                subset.samples.push_back(
                    train[static_cast<std::size_t>(order[static_cast<std::size_t>(r) * size + k])]);
            }
            const BornMachine machine = quantum_average_direct(subset);
            result.rows.push_back(FidelityRow{size, r, fidelity(machine, psi_global),
                                              fidelity(machine, even)});
        }
    }
    return result;
}

std::vector<NoiseFidelityRow> noise_fidelity_experiment(
    const std::vector<Signal>& train, const PixelMap& map, int subset_size,
    const std::vector<NoiseKind>& kinds, const std::vector<double>& probabilities,
    int n_traj, std::int64_t global_cap, std::uint64_t seed) {
    if (train.empty()) throw std::invalid_argument("noise experiment: empty training split");
    if (subset_size < 1 || subset_size > static_cast<int>(train.size())) {
        throw std::invalid_argument("noise experiment: subset size out of range");
    }

    const auto total = static_cast<std::int64_t>(train.size());
    const std::int64_t global_size = std::min(global_cap, total);
    TrainingSet global_set{{train.begin(), train.begin() + global_size}, map};
    const BornMachine psi_global = quantum_average_direct(global_set);

    TrainingSet subset{{train.begin(), train.begin() + subset_size}, map};
    const int n = static_cast<int>(map.size());
    std::vector<int> all_qubits(static_cast<std::size_t>(n));
    std::iota(all_qubits.begin(), all_qubits.end(), 0);

    std::vector<NoiseFidelityRow> rows;
    for (NoiseKind kind : kinds) {
        for (double p : probabilities) {
            // Seed by the kind value only: within one kind the trajectory
            // streams are identical across probabilities, so rarer noise
            // draws a subset of the flips of commoner noise and fidelity
            // degrades monotonically.
            std::mt19937_64 rng =
                make_engine(derive_seed(seed, static_cast<std::uint64_t>(kind)));
            NoiseSpec spec{kind, p, all_qubits};
            BornMachine noisy = train_noisy_mixture(subset, spec, n_traj, rng);
            rows.push_back(NoiseFidelityRow{kind, p, fidelity(noisy, psi_global)});
        }
    }
    return rows;
}

} // namespace qcs
