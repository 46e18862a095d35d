#include "qcs/noise.hpp"

#include <cmath>
#include <stdexcept>

namespace qcs {

NoiseKind noise_kind_from_string(const std::string& name) {
    if (name == "none") return NoiseKind::none;
    if (name == "bitflip") return NoiseKind::bitflip;
    if (name == "phaseflip" || name == "dephasing") return NoiseKind::phaseflip;
    if (name == "bitphaseflip") return NoiseKind::bitphaseflip;
    if (name == "depolarizing") return NoiseKind::depolarizing;
    if (name == "ampdamp") return NoiseKind::ampdamp;
    throw std::invalid_argument("noise kind \"" + name +
                                "\" unknown (expected none, bitflip, phaseflip, "
                                "bitphaseflip, depolarizing or ampdamp)");
}

std::string to_string(NoiseKind kind) {
    switch (kind) {
    case NoiseKind::none: return "none";
    case NoiseKind::bitflip: return "bitflip";
    case NoiseKind::phaseflip: return "phaseflip";
    case NoiseKind::bitphaseflip: return "bitphaseflip";
    case NoiseKind::depolarizing: return "depolarizing";
    case NoiseKind::ampdamp: return "ampdamp";
    }
    throw std::logic_error("to_string: unhandled noise kind");
}

namespace {

Eigen::Matrix2cd pauli_i() { return Eigen::Matrix2cd::Identity(); }
Eigen::Matrix2cd pauli_x() {
    Eigen::Matrix2cd m;
    m << 0, 1, 1, 0;
    return m;
}
Eigen::Matrix2cd pauli_y() {
    Eigen::Matrix2cd m;
    m << 0, complex(0, -1), complex(0, 1), 0;
    return m;
}
Eigen::Matrix2cd pauli_z() {
    Eigen::Matrix2cd m;
    m << 1, 0, 0, -1;
    return m;
}

void check_param(NoiseKind kind, double param) {
    if (!(param >= 0.0 && param <= 1.0))
        throw std::invalid_argument("channel_kraus: parameter " + std::to_string(param) +
                                    " for " + to_string(kind) + " outside [0,1]");
}

} // namespace

KrausChannel channel_kraus(NoiseKind kind, double param) {
    check_param(kind, param);
    KrausChannel ch;
    ch.label = to_string(kind);
    switch (kind) {
    case NoiseKind::none:
        ch.operators = {pauli_i()};
        break;
    case NoiseKind::bitflip:
        ch.operators = {std::sqrt(1.0 - param) * pauli_i(), std::sqrt(param) * pauli_x()};
        break;
    case NoiseKind::phaseflip:
        ch.operators = {std::sqrt(1.0 - param) * pauli_i(), std::sqrt(param) * pauli_z()};
        break;
    case NoiseKind::bitphaseflip:
        ch.operators = {std::sqrt(1.0 - param) * pauli_i(), std::sqrt(param) * pauli_y()};
        break;
    case NoiseKind::depolarizing:
        ch.operators = {std::sqrt(1.0 - 0.75 * param) * pauli_i(),
                        std::sqrt(param / 4.0) * pauli_x(),
                        std::sqrt(param / 4.0) * pauli_y(),
                        std::sqrt(param / 4.0) * pauli_z()};
        break;
    case NoiseKind::ampdamp: {
        Eigen::Matrix2cd k0, k1;
        k0 << 1, 0, 0, std::sqrt(1.0 - param);
        k1 << 0, std::sqrt(param), 0, 0;
        ch.operators = {k0, k1};
        break;
    }
    }
    const double defect = completeness_defect(ch);
    if (defect > 1e-10)
        throw std::runtime_error("channel_kraus: completeness defect " +
                                 std::to_string(defect) + " exceeds 1e-10");
    return ch;
}

double completeness_defect(const KrausChannel& channel) {
    if (channel.operators.empty())
        throw std::invalid_argument("completeness_defect: channel has no operators");
    Eigen::Matrix2cd sum = Eigen::Matrix2cd::Zero();
    for (const auto& k : channel.operators) sum += k.adjoint() * k;
    return (sum - Eigen::Matrix2cd::Identity()).cwiseAbs().maxCoeff();
}

NoiseSpec no_noise() { return NoiseSpec{}; }

NoiseSpec noise_on_all(NoiseKind kind, double probability, int n_qubits) {
    NoiseSpec spec;
    spec.kind = kind;
    spec.probability = probability;
    for (int q = 0; q < n_qubits; ++q) spec.targets.push_back(q);
    return spec;
}

void validate_noise_spec(const NoiseSpec& spec, int n_qubits) {
    if (!(spec.probability >= 0.0 && spec.probability <= 1.0))
        throw std::invalid_argument("NoiseSpec: probability " +
                                    std::to_string(spec.probability) + " outside [0,1]");
    if (spec.kind == NoiseKind::none) return;
    if (spec.targets.empty())
        throw std::invalid_argument("NoiseSpec: target list empty for kind " +
                                    to_string(spec.kind));
    for (int q : spec.targets)
        if (q < 0 || q >= n_qubits)
            throw std::invalid_argument("NoiseSpec: target qubit " + std::to_string(q) +
                                        " out of range for " + std::to_string(n_qubits) +
                                        "-qubit state");
}

void apply_channel(DensityMatrix& rho, const KrausChannel& channel, int qubit) {
    if (qubit < 0 || qubit >= rho.num_qubits())
        throw std::invalid_argument("apply_channel: qubit " + std::to_string(qubit) +
                                    " out of range");
    if (completeness_defect(channel) > 1e-10)
        throw std::invalid_argument("apply_channel: channel \"" + channel.label +
                                    "\" violates completeness beyond 1e-10");
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(rho.dim(), rho.dim());
    for (const auto& k : channel.operators) {
        Eigen::MatrixXcd branch = rho.matrix();
        detail::conjugate_local_operator(branch, rho.num_qubits(), k, {qubit});
        out += branch;
    }
    rho.matrix() = std::move(out);
}

void inject_stochastic(StateVector& state, NoiseKind kind, double probability, int qubit,
                       std::mt19937_64& rng) {
    if (qubit < 0 || qubit >= state.num_qubits())
        throw std::invalid_argument("inject_stochastic: qubit out of range");
    if (!(probability >= 0.0 && probability <= 1.0))
        throw std::invalid_argument("inject_stochastic: probability outside [0,1]");
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    switch (kind) {
    case NoiseKind::none:
        return;
    case NoiseKind::bitflip: {
        if (uniform(rng) < probability) apply_gate(state, gate_x(qubit));
        return;
    }
    case NoiseKind::phaseflip: {
        if (uniform(rng) < probability) apply_gate(state, gate_z(qubit));
        return;
    }
    case NoiseKind::bitphaseflip: {
        if (uniform(rng) < probability) apply_gate(state, gate_y(qubit));
        return;
    }
    case NoiseKind::depolarizing: {
        const double u = uniform(rng);
        const double v = uniform(rng); // always consumed to keep streams aligned
        if (u < 0.75 * probability) {
            if (v < 1.0 / 3.0)
                apply_gate(state, gate_x(qubit));
            else if (v < 2.0 / 3.0)
                apply_gate(state, gate_y(qubit));
            else
                apply_gate(state, gate_z(qubit));
        }
        return;
    }
    case NoiseKind::ampdamp:
        throw std::invalid_argument(
            "inject_stochastic: ampdamp has no fixed-probability Pauli unraveling; "
            "use jump_trajectory_step or density-matrix channels");
    }
    throw std::logic_error("inject_stochastic: unhandled noise kind");
}

void inject_stochastic(StateVector& state, const NoiseSpec& spec, std::mt19937_64& rng) {
    validate_noise_spec(spec, state.num_qubits());
    if (spec.kind == NoiseKind::none) return;
    for (int q : spec.targets) inject_stochastic(state, spec.kind, spec.probability, q, rng);
}

void jump_trajectory_step(StateVector& state, const KrausChannel& channel, int qubit,
                          std::mt19937_64& rng) {
    if (qubit < 0 || qubit >= state.num_qubits())
        throw std::invalid_argument("jump_trajectory_step: qubit out of range");
    const std::size_t n_ops = channel.operators.size();
    if (n_ops == 0)
        throw std::invalid_argument("jump_trajectory_step: channel has no operators");

    // Branch weights ||K_k psi||^2; sum to 1 by completeness.
    std::vector<Eigen::VectorXcd> branches;
    branches.reserve(n_ops);
    std::vector<double> weights(n_ops, 0.0);
    for (std::size_t k = 0; k < n_ops; ++k) {
        Eigen::VectorXcd candidate = state.amplitudes();
        detail::apply_local_operator(candidate, state.num_qubits(), channel.operators[k],
                                     {qubit});
        weights[k] = candidate.squaredNorm();
        branches.push_back(std::move(candidate));
    }

    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    const double u = uniform(rng);
    double cum = 0;
    std::size_t pick = n_ops - 1;
    for (std::size_t k = 0; k < n_ops; ++k) {
        cum += weights[k];
        if (u < cum) {
            pick = k;
            break;
        }
    }
    if (weights[pick] < 1e-300)
        throw std::runtime_error("jump_trajectory_step: selected branch has zero weight");
    state.amplitudes() = branches[pick] / std::sqrt(weights[pick]);
}

namespace {

std::string basis_label(std::uint64_t index, int n) {
    std::string s(static_cast<std::size_t>(n), '0');
    for (int q = 0; q < n; ++q)
        if ((index >> (n - 1 - q)) & 1) s[static_cast<std::size_t>(q)] = '1';
    return s;
}

std::map<std::string, std::int64_t> sample_from_probabilities(const std::vector<double>& probs,
                                                              int n, std::int64_t n_shots,
                                                              std::mt19937_64& rng) {
    if (n_shots < 1)
        throw std::invalid_argument("sample_counts: n_shots must be positive");
    std::discrete_distribution<std::size_t> dist(probs.begin(), probs.end());
    std::map<std::string, std::int64_t> counts;
    std::vector<std::int64_t> tally(probs.size(), 0);
    for (std::int64_t s = 0; s < n_shots; ++s) ++tally[dist(rng)];
    for (std::size_t i = 0; i < tally.size(); ++i)
        if (tally[i] > 0) counts[basis_label(i, n)] = tally[i];
    return counts;
}

} // namespace

std::map<std::string, std::int64_t> sample_counts(const StateVector& state,
                                                  std::int64_t n_shots,
                                                  std::mt19937_64& rng) {
    std::vector<double> probs(static_cast<std::size_t>(state.dim()));
    for (Eigen::Index i = 0; i < state.dim(); ++i)
        probs[static_cast<std::size_t>(i)] = std::norm(state.amplitudes()(i));
    return sample_from_probabilities(probs, state.num_qubits(), n_shots, rng);
}

std::map<std::string, std::int64_t> sample_counts(const DensityMatrix& rho,
                                                  std::int64_t n_shots,
                                                  std::mt19937_64& rng) {
    std::vector<double> probs(static_cast<std::size_t>(rho.dim()));
    for (Eigen::Index i = 0; i < rho.dim(); ++i)
        probs[static_cast<std::size_t>(i)] = std::max(0.0, rho.matrix()(i, i).real());
    return sample_from_probabilities(probs, rho.num_qubits(), n_shots, rng);
}

} // namespace qcs
