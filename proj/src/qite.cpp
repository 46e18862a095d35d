#include "qcs/qite.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>

#include "qcs/rng.hpp"

namespace qcs {

namespace {

constexpr double kZeroGenerator = 1e-14;   // max|a| below which no unitary is applied
constexpr double kNormFactorFloor = 0.01;  // clamp for the first-order norm factor
constexpr double kExactIncreaseTol = 1e-9; // energy-increase slack, exact mode
constexpr int kMaxDomainQubits = 6;        // 4^D - 1 observables; quartic growth

// Single-qubit Pauli composition, digits 0..3 = I,X,Y,Z. The product
// sigma_a sigma_b equals i^phase * sigma_digit.
constexpr int kProductDigit[4][4] = {
    {0, 1, 2, 3},
    {1, 0, 3, 2},
    {2, 3, 0, 1},
    {3, 2, 1, 0},
};
constexpr int kProductPhase[4][4] = {
    {0, 0, 0, 0},
    {0, 0, 1, 3},
    {0, 3, 0, 1},
    {0, 1, 3, 0},
};

constexpr char kAxisLetters[5] = "IXYZ";

int axis_digit(char axis) {
    switch (axis) {
    case 'I': return 0;
    case 'X': return 1;
    case 'Y': return 2;
    case 'Z': return 3;
    default: throw std::invalid_argument(std::string("qite: invalid Pauli axis '") + axis + "'");
    }
}

// Digit-string product of two packed Pauli codes on a d-qubit domain; returns
// the packed product code and the power of i accumulated across positions.
std::pair<int, int> pauli_product(int code_a, int code_b, int d) {
    int code = 0;
    int phase = 0;
    for (int pos = 0; pos < d; ++pos) {
        const int shift = 2 * (d - 1 - pos);
        const int a = (code_a >> shift) & 3;
        const int b = (code_b >> shift) & 3;
        code |= kProductDigit[a][b] << shift;
        phase += kProductPhase[a][b];
    }
    return {code, phase & 3};
}

Eigen::Matrix2cd pauli_matrix(int digit) {
    const complex i(0.0, 1.0);
    Eigen::Matrix2cd m;
    switch (digit) {
    case 0: m << 1, 0, 0, 1; break;
    case 1: m << 0, 1, 1, 0; break;
    case 2: m << 0, -i, i, 0; break;
    default: m << 1, 0, 0, -1; break;
    }
    return m;
}

Eigen::MatrixXcd kron(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
    Eigen::MatrixXcd out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index r = 0; r < a.rows(); ++r) {
        for (Eigen::Index c = 0; c < a.cols(); ++c) {
            out.block(r * b.rows(), c * b.cols(), b.rows(), b.cols()) = a(r, c) * b;
        }
    }
    return out;
}

// Dense matrix of a packed Pauli code over the domain; position 0 (the
// smallest domain qubit) is the most significant local factor, matching the
// ascending-qubit convention of apply_unitary.
Eigen::MatrixXcd pauli_string_matrix(int code, int d) {
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Ones(1, 1);
    for (int pos = 0; pos < d; ++pos) {
        const int shift = 2 * (d - 1 - pos);
        m = kron(m, pauli_matrix((code >> shift) & 3));
    }
    return m;
}

// Everything qite_step needs that depends only on the term and the register
// size: the fitted domain and the full non-identity observable list on it.
struct StepPlan {
    std::vector<int> domain;            // ascending qubit indices
    int term_code = 0;                  // term's Pauli digits packed on the domain
    std::vector<PauliTerm> observables; // codes 1 .. 4^D - 1, in code order
    int dim = 0;                        // 4^D
};

// Expands the term's support with nearest-index qubits until the domain holds
// min_size qubits (capped at the register size).
std::vector<int> expand_domain(const std::vector<int>& support, int n, int min_size) {
    std::vector<int> domain = support;
    const int lo = support.front();
    const int hi = support.back();
    const int target = std::min(n, std::max<int>(min_size, static_cast<int>(support.size())));
    while (static_cast<int>(domain.size()) < target) {
        int best = -1;
        int best_dist = std::numeric_limits<int>::max();
        for (int q = 0; q < n; ++q) {
            if (std::find(domain.begin(), domain.end(), q) != domain.end()) continue;
            const int dist = q < lo ? lo - q : (q > hi ? q - hi : 0);
            if (dist < best_dist) {
                best_dist = dist;
                best = q;
            }
        }
        domain.push_back(best);
    }
    std::sort(domain.begin(), domain.end());
    return domain;
}

StepPlan make_step_plan(const PauliTerm& term, int n, int domain_size) {
    StepPlan plan;
    const std::vector<int> support = term.support();
    if (support.empty()) return plan; // identity term: nothing to fit

    plan.domain = expand_domain(support, n, domain_size);
    const int d = static_cast<int>(plan.domain.size());
    if (d > kMaxDomainQubits) {
        throw std::invalid_argument("qite_step: fitted domain of " + std::to_string(d) +
                                    " qubits needs " + std::to_string((1 << (2 * d)) - 1) +
                                    " observables; the limit is " +
                                    std::to_string(kMaxDomainQubits) + " qubits");
    }
    plan.dim = 1 << (2 * d);

    for (int pos = 0; pos < d; ++pos) {
        const int digit = axis_digit(term.axes[static_cast<std::size_t>(plan.domain[pos])]);
        plan.term_code |= digit << (2 * (d - 1 - pos));
    }

    plan.observables.reserve(static_cast<std::size_t>(plan.dim - 1));
    for (int code = 1; code < plan.dim; ++code) {
        PauliTerm obs;
        obs.coefficient = 1.0;
        obs.axes.assign(static_cast<std::size_t>(n), 'I');
        for (int pos = 0; pos < d; ++pos) {
            const int digit = (code >> (2 * (d - 1 - pos))) & 3;
            obs.axes[static_cast<std::size_t>(plan.domain[pos])] = kAxisLetters[digit];
        }
        plan.observables.push_back(std::move(obs));
    }
    return plan;
}

// Solves the normal equations for the generator coefficients: Gram matrix
// S_IJ = Re<sigma_I sigma_J>, right-hand side b_I = Im<sigma_I h> / sqrt(c)
// with the first-order norm factor c = 1 - 2*d_beta*<h>. Both reduce to
// signed shared estimates through the Pauli composition table, so shot noise
// enters each string exactly once.
Eigen::VectorXd solve_generator(const StepPlan& plan, double coefficient,
                                const QiteConfig& config, const std::vector<double>& est) {
    const int d = static_cast<int>(plan.domain.size());
    const int m = plan.dim - 1;

    const double h_expectation = coefficient * est[static_cast<std::size_t>(plan.term_code)];
    const double norm_factor =
        std::max(kNormFactorFloor, 1.0 - 2.0 * config.d_beta * h_expectation);
    const double inv_sqrt_c = 1.0 / std::sqrt(norm_factor);

    Eigen::MatrixXd s(m, m);
    Eigen::VectorXd b(m);
    for (int i = 1; i < plan.dim; ++i) {
        const auto [b_code, b_phase] = pauli_product(i, plan.term_code, d);
        b(i - 1) = (b_phase % 2 == 1)
                       ? (b_phase == 1 ? 1.0 : -1.0) * coefficient *
                             est[static_cast<std::size_t>(b_code)] * inv_sqrt_c
                       : 0.0;
        for (int j = 1; j < plan.dim; ++j) {
            const auto [s_code, s_phase] = pauli_product(i, j, d);
            s(i - 1, j - 1) = (s_phase % 2 == 0)
                                  ? (s_phase == 0 ? 1.0 : -1.0) *
                                        est[static_cast<std::size_t>(s_code)]
                                  : 0.0;
        }
    }

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s);
    if (es.info() != Eigen::Success) {
        throw std::runtime_error("qite_step: eigensolver failed on the Gram matrix");
    }
    const Eigen::VectorXd& eig = es.eigenvalues();
    if (config.regularization == 0.0) {
        const double scale = std::max(1.0, eig.cwiseAbs().maxCoeff());
        if (eig.minCoeff() < 1e-12 * scale) {
            throw std::runtime_error(
                "qite_step: degenerate tomography (singular Gram matrix); "
                "set regularization > 0");
        }
    }
    const Eigen::VectorXd projected = es.eigenvectors().transpose() * b;
    Eigen::VectorXd a = Eigen::VectorXd::Zero(m);
    for (int i = 0; i < m; ++i) {
        // Clamp noise-induced negative eigenvalues; S is PSD in exact arithmetic.
        const double lambda = std::max(eig(i), 0.0) + config.regularization;
        if (lambda <= 0.0) continue;
        a += (projected(i) / lambda) * es.eigenvectors().col(i);
    }
    return a;
}

Eigen::MatrixXcd step_unitary(const StepPlan& plan, const Eigen::VectorXd& a, double d_beta) {
    const int d = static_cast<int>(plan.domain.size());
    const Eigen::Index dim = Eigen::Index{1} << d;
    Eigen::MatrixXcd generator = Eigen::MatrixXcd::Zero(dim, dim);
    for (int code = 1; code < plan.dim; ++code) {
        const double weight = a(code - 1);
        if (std::abs(weight) < 1e-16) continue;
        generator += weight * pauli_string_matrix(code, d);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(generator);
    if (es.info() != Eigen::Success) {
        throw std::runtime_error("qite_step: eigensolver failed on the fitted generator");
    }
    const complex i(0.0, 1.0);
    Eigen::VectorXcd phases(es.eigenvalues().size());
    for (Eigen::Index k = 0; k < phases.size(); ++k) {
        phases(k) = std::exp(-i * d_beta * es.eigenvalues()(k));
    }
    return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

// One term substep on either state representation. Returns whether a unitary
// was applied; plan_out receives the fitted domain for noise injection.
template <typename State>
bool term_update(State& state, const PauliTerm& term, const QiteConfig& config,
                 std::mt19937_64& rng, std::vector<int>* domain_out) {
    if (domain_out) domain_out->clear();
    if (term.num_qubits() != state.num_qubits()) {
        throw std::invalid_argument("qite_step: term has " + std::to_string(term.num_qubits()) +
                                    " qubits but the state has " +
                                    std::to_string(state.num_qubits()));
    }
    const StepPlan plan = make_step_plan(term, state.num_qubits(), config.domain_size);
    if (plan.domain.empty()) return false;
    if (domain_out) *domain_out = plan.domain;

    std::vector<double> est(static_cast<std::size_t>(plan.dim), 1.0);
    const std::vector<double> measured =
        tomography(state, plan.observables, config.tomography, rng);
    std::copy(measured.begin(), measured.end(), est.begin() + 1);

    const Eigen::VectorXd a = solve_generator(plan, term.coefficient, config, est);
    if (a.cwiseAbs().maxCoeff() < kZeroGenerator) return false;

    apply_unitary(state, step_unitary(plan, a, config.d_beta), plan.domain);
    return true;
}

double shot_estimate(double bare, double coefficient, std::int64_t n_shots,
                     std::mt19937_64& rng) {
    const double p1 = std::clamp(0.5 * (1.0 + bare), 0.0, 1.0);
    // Eigenvalue-bound estimates are exact and draw nothing; this also dodges
    // degenerate binomial parameters.
    if (p1 <= 0.0) return -coefficient;
    if (p1 >= 1.0) return coefficient;
    std::binomial_distribution<std::int64_t> dist(n_shots, p1);
    const double mean = 2.0 * static_cast<double>(dist(rng)) / static_cast<double>(n_shots) - 1.0;
    return coefficient * mean;
}

template <typename State>
std::vector<double> tomography_impl(const State& state,
                                    const std::vector<PauliTerm>& observables,
                                    TomographyMode mode, std::mt19937_64& rng) {
    if (!mode.is_exact() && mode.n_shots < 1) {
        throw std::invalid_argument("tomography: n_shots must be >= 1");
    }
    std::vector<double> out;
    out.reserve(observables.size());
    for (const PauliTerm& obs : observables) {
        if (mode.is_exact()) {
            out.push_back(expectation(state, obs));
            continue;
        }
        PauliTerm bare = obs;
        bare.coefficient = 1.0;
        out.push_back(shot_estimate(expectation(state, bare), obs.coefficient, mode.n_shots, rng));
    }
    return out;
}

template <typename State>
double estimate_energy_impl(const State& state, const Hamiltonian& h, TomographyMode mode,
                            std::mt19937_64& rng) {
    const std::vector<double> estimates = tomography(state, h.terms, mode, rng);
    double total = 0.0;
    for (double e : estimates) total += e;
    return total;
}

// The shared sweep/retry loop. `inject` is called after every applied term
// unitary with the fitted domain, and is a no-op for noiseless runs.
template <typename State, typename Inject>
QiteTrajectory run_loop(const Hamiltonian& h, State state, const QiteConfig& config,
                        Inject inject, std::mt19937_64& rng) {
    config.validate();
    if (h.terms.empty()) throw std::invalid_argument("qite_run: empty Hamiltonian");
    if (h.num_qubits() != state.num_qubits()) {
        throw std::invalid_argument("qite_run: Hamiltonian has " +
                                    std::to_string(h.num_qubits()) +
                                    " qubits but the state has " +
                                    std::to_string(state.num_qubits()));
    }

    const int steps = config.num_steps();
    const double tol = config.tomography.is_exact() ? kExactIncreaseTol : 0.0;

    QiteTrajectory trajectory;
    trajectory.points.reserve(static_cast<std::size_t>(steps) + 1);
    trajectory.discards_used.reserve(static_cast<std::size_t>(steps));

    double previous_energy = estimate_energy(state, h, config.tomography, rng);
    trajectory.points.push_back(TrajectoryPoint{0.0, previous_energy});

    std::vector<int> domain;
    for (int step = 1; step <= steps; ++step) {
        int discards = 0;
        for (int attempt = 0;; ++attempt) {
            State candidate = state;
            for (const PauliTerm& term : h.terms) {
                const bool applied = term_update(candidate, term, config, rng, &domain);
                if (applied) inject(candidate, domain, rng);
            }
            const double energy = estimate_energy(candidate, h, config.tomography, rng);
            if (energy <= previous_energy + tol || attempt == config.max_discards) {
                state = std::move(candidate);
                previous_energy = energy;
                break;
            }
            ++discards;
        }
        trajectory.points.push_back(TrajectoryPoint{step * config.d_beta, previous_energy});
        trajectory.discards_used.push_back(discards);
    }
    trajectory.final_state = std::move(state);
    return trajectory;
}

struct NoInject {
    template <typename State>
    void operator()(State&, const std::vector<int>&, std::mt19937_64&) const {}
};

// Restricts the fitted domain to the spec's target qubits, ascending.
std::vector<int> noisy_qubits(const std::vector<int>& domain, const NoiseSpec& spec) {
    std::vector<int> out;
    for (int q : domain) {
        if (std::find(spec.targets.begin(), spec.targets.end(), q) != spec.targets.end()) {
            out.push_back(q);
        }
    }
    return out;
}

} // namespace

TomographyMode TomographyMode::shots(std::int64_t n) {
    if (n < 1) throw std::invalid_argument("tomography: n_shots must be >= 1");
    return TomographyMode{n};
}

std::vector<double> tomography(const StateVector& state,
                               const std::vector<PauliTerm>& observables,
                               TomographyMode mode, std::mt19937_64& rng) {
    return tomography_impl(state, observables, mode, rng);
}

std::vector<double> tomography(const DensityMatrix& rho,
                               const std::vector<PauliTerm>& observables,
                               TomographyMode mode, std::mt19937_64& rng) {
    return tomography_impl(rho, observables, mode, rng);
}

int QiteConfig::num_steps() const {
    return std::max(1, static_cast<int>(std::llround(total_beta / d_beta)));
}

void QiteConfig::validate() const {
    if (!(d_beta > 0.0) || !std::isfinite(d_beta)) {
        throw std::invalid_argument("qite config: d_beta must be positive and finite");
    }
    if (!(total_beta >= d_beta) || !std::isfinite(total_beta)) {
        throw std::invalid_argument("qite config: total_beta must be >= d_beta");
    }
    if (!tomography.is_exact() && tomography.n_shots < 1) {
        throw std::invalid_argument("qite config: n_shots must be >= 1");
    }
    if (max_discards < 0) throw std::invalid_argument("qite config: max_discards must be >= 0");
    if (domain_size < 1) throw std::invalid_argument("qite config: domain_size must be >= 1");
    if (!(regularization >= 0.0) || !std::isfinite(regularization)) {
        throw std::invalid_argument("qite config: regularization must be >= 0 and finite");
    }
}

QiteStepResult qite_step(const StateVector& state, const PauliTerm& term,
                         const QiteConfig& config, std::mt19937_64& rng) {
    config.validate();
    StateVector out = state;
    const bool applied = term_update(out, term, config, rng, nullptr);
    return QiteStepResult{std::move(out), applied};
}

QiteStepDensityResult qite_step(const DensityMatrix& rho, const PauliTerm& term,
                                const QiteConfig& config, std::mt19937_64& rng) {
    config.validate();
    DensityMatrix out = rho;
    const bool applied = term_update(out, term, config, rng, nullptr);
    return QiteStepDensityResult{std::move(out), applied};
}

bool QiteTrajectory::final_is_pure() const {
    return std::holds_alternative<StateVector>(final_state);
}

const StateVector& QiteTrajectory::final_pure() const {
    if (!final_is_pure()) {
        throw std::logic_error("qite trajectory: final state is a density matrix");
    }
    return std::get<StateVector>(final_state);
}

const DensityMatrix& QiteTrajectory::final_mixed() const {
    if (final_is_pure()) {
        throw std::logic_error("qite trajectory: final state is a statevector");
    }
    return std::get<DensityMatrix>(final_state);
}

double QiteTrajectory::final_energy() const {
    if (points.empty()) throw std::logic_error("qite trajectory: no recorded points");
    return points.back().energy;
}

QiteTrajectory qite_run(const Hamiltonian& h, const StateVector& state0,
                        const QiteConfig& config, std::mt19937_64& rng) {
    return run_loop(h, state0, config, NoInject{}, rng);
}

QiteTrajectory qite_run_density(const Hamiltonian& h, const DensityMatrix& rho0,
                                const QiteConfig& config, const NoiseSpec& spec,
                                std::mt19937_64& rng) {
    validate_noise_spec(spec, rho0.num_qubits());
    if (spec.kind == NoiseKind::none || spec.probability == 0.0) {
        return run_loop(h, rho0, config, NoInject{}, rng);
    }
    const KrausChannel channel = channel_kraus(spec.kind, spec.probability);
    auto inject = [&](DensityMatrix& rho, const std::vector<int>& domain, std::mt19937_64&) {
        for (int q : noisy_qubits(domain, spec)) apply_channel(rho, channel, q);
    };
    return run_loop(h, rho0, config, inject, rng);
}

QiteTrajectory qite_run_noisy(const Hamiltonian& h, const StateVector& state0,
                              const QiteConfig& config, const NoiseSpec& spec,
                              std::mt19937_64& rng, int n_traj) {
    validate_noise_spec(spec, state0.num_qubits());
    if (n_traj < 1) throw std::invalid_argument("qite_run_noisy: n_traj must be >= 1");
    if (spec.kind == NoiseKind::none || spec.probability == 0.0) {
        return qite_run(h, state0, config, rng);
    }
    if (spec.kind == NoiseKind::ampdamp) {
        // The exact channel equals the mean over jump trajectories, so one
        // density-matrix run stands in for the whole ensemble.
        if (state0.num_qubits() > limits::max_density_qubits) {
            throw std::invalid_argument(
                "qite_run_noisy: amplitude damping runs in density-matrix mode, "
                "limited to " +
                std::to_string(limits::max_density_qubits) + " qubits");
        }
        return qite_run_density(h, DensityMatrix::from_pure(state0), config, spec, rng);
    }

    auto inject = [&](StateVector& state, const std::vector<int>& domain,
                      std::mt19937_64& engine) {
        for (int q : noisy_qubits(domain, spec)) {
            inject_stochastic(state, spec.kind, spec.probability, q, engine);
        }
    };

    if (n_traj == 1) return run_loop(h, state0, config, inject, rng);

    // Independent trajectories on derived streams; pointwise mean energies.
    const std::uint64_t master = rng();
    QiteTrajectory ensemble;
    const int n = state0.num_qubits();
    const bool keep_density = n <= limits::max_density_qubits;
    Eigen::MatrixXcd projector_sum;
    if (keep_density) {
        const Eigen::Index dim = Eigen::Index{1} << n;
        projector_sum = Eigen::MatrixXcd::Zero(dim, dim);
    }
    QiteTrajectory last;
    for (int t = 0; t < n_traj; ++t) {
        std::mt19937_64 engine = make_engine(derive_seed(master, static_cast<std::uint64_t>(t)));
        QiteTrajectory one = run_loop(h, state0, config, inject, engine);
        if (t == 0) {
            ensemble.points = one.points;
            ensemble.discards_used = one.discards_used;
        } else {
            for (std::size_t i = 0; i < ensemble.points.size(); ++i) {
                ensemble.points[i].energy += one.points[i].energy;
            }
            for (std::size_t i = 0; i < ensemble.discards_used.size(); ++i) {
                ensemble.discards_used[i] += one.discards_used[i];
            }
        }
        if (keep_density) {
            const Eigen::VectorXcd& amps = one.final_pure().amplitudes();
            projector_sum.noalias() += amps * amps.adjoint();
        }
        if (t == n_traj - 1) last = std::move(one);
    }
    for (TrajectoryPoint& point : ensemble.points) {
        point.energy /= static_cast<double>(n_traj);
    }
    if (keep_density) {
        projector_sum /= static_cast<double>(n_traj);
        ensemble.final_state = DensityMatrix::from_matrix_unchecked(std::move(projector_sum));
    } else {
        ensemble.final_state = std::move(last.final_state);
    }
    return ensemble;
}

double estimate_energy(const StateVector& state, const Hamiltonian& h, TomographyMode mode,
                       std::mt19937_64& rng) {
    return estimate_energy_impl(state, h, mode, rng);
}

double estimate_energy(const DensityMatrix& rho, const Hamiltonian& h, TomographyMode mode,
                       std::mt19937_64& rng) {
    return estimate_energy_impl(rho, h, mode, rng);
}

} // namespace qcs
