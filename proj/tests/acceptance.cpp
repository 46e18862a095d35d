// Acceptance checks for the full pipeline: one line per criterion, exit code
// equal to the number of failures. Each criterion runs in isolation so a
// failure or exception in one does not mask the others. Tolerances are pinned
// here, next to the checks they guard.
#include <qcs/bornmachine.hpp>
#include <qcs/dataio.hpp>
#include <qcs/encoding.hpp>
#include <qcs/noise.hpp>
#include <qcs/pipeline.hpp>
#include <qcs/qcore.hpp>
#include <qcs/qite.hpp>
#include <qcs/rng.hpp>

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "oracle.hpp"
#include "stats.hpp"

using namespace qcs;

namespace {

int failures = 0;

void run_criterion(int id, const std::string& name,
                   const std::function<std::pair<bool, std::string>()>& body) {
    bool pass = false;
    std::string detail;
    try {
        const auto [ok, text] = body();
        pass = ok;
        detail = text;
    } catch (const std::exception& e) {
        pass = false;
        detail = std::string("exception: ") + e.what();
    }
    if (!pass) ++failures;
    std::printf("[%s] criterion %d: %s%s%s\n", pass ? "PASS" : "FAIL", id, name.c_str(),
                detail.empty() ? "" : " -- ", detail.c_str());
    std::fflush(stdout);
}

double seconds_since(const std::chrono::steady_clock::time_point& start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string fmt(double v) {
    char buffer[64];
    std::snprintf(buffer, sizeof(buffer), "%.6g", v);
    return buffer;
}

// Shared fixture: a fixed synthetic dataset and the 256-sample machine.
struct Fixture {
    Dataset dataset;
    std::vector<Signal> train256;
    PixelMap map;
    BornMachine machine;

    Fixture()
        : dataset(preprocess(generate_synthetic_lidar(10000, 4242, 0.1), 4242)),
          map(uniform_midpoints(5)) {
        const std::vector<Signal> train = dataset.train_samples();
        train256.assign(train.begin(), train.begin() + 256);
        TrainingSet data;
        data.samples = train256;
        data.map = map;
        machine = quantum_average_direct(data);
    }
};

const Fixture& fixture() {
    static const Fixture f;
    return f;
}

StateVector uniform_start(int n) {
    StateVector psi(n);
    for (int q = 0; q < n; ++q) apply_gate(psi, gate_h(q));
    return psi;
}

} // namespace

// --- criterion 1: exact imaginary-time evolution reaches the ground energy --

static std::pair<bool, std::string> criterion_1() {
    const auto start = std::chrono::steady_clock::now();
    const Hamiltonian h = parse_hamiltonian("-ZII -IIZ");
    QiteConfig cfg;
    cfg.tomography = TomographyMode::exact();
    std::mt19937_64 rng = make_engine(1);
    const QiteTrajectory run = qite_run(h, uniform_start(3), cfg, rng);
    const double energy = run.final_energy();
    const double elapsed = seconds_since(start);
    const bool pass = std::abs(energy + 2.0) <= 0.05 && elapsed < 10.0;
    return {pass, "final energy " + fmt(energy) + " (target -2 +/- 0.05), " + fmt(elapsed) + "s"};
}

// --- criterion 2: projecting the trained machine converges monotonically ----

static std::pair<bool, std::string> criterion_2() {
    const auto start = std::chrono::steady_clock::now();
    const Hamiltonian h = parse_hamiltonian("-ZIIII -IIZII");
    QiteConfig cfg;
    cfg.tomography = TomographyMode::exact();
    // Single-qubit generators cannot move entanglement between the measured
    // qubits and the rest of the register, so the flow stalls above the ground
    // energy; overlapping three-qubit domains restore full convergence.
    cfg.domain_size = 3;
    std::mt19937_64 rng = make_engine(2);
    const ProjectionOutcome out =
        project_with_trajectory(fixture().machine, h, cfg, no_noise(), rng);

    bool monotone = true;
    const std::vector<TrajectoryPoint>& pts = out.trajectory.points;
    for (std::size_t i = 1; i < pts.size(); ++i)
        if (pts[i].energy > pts[i - 1].energy + 1e-9) monotone = false;
    const double energy = out.trajectory.final_energy();
    const double elapsed = seconds_since(start);
    const bool pass = monotone && std::abs(energy + 2.0) <= 0.05 && elapsed < 60.0;
    return {pass, std::string(monotone ? "monotone" : "NOT monotone") + ", final energy " +
                      fmt(energy) + " (target -2 +/- 0.05), " + fmt(elapsed) + "s"};
}

// --- criterion 3: noise degrades training and projection monotonically ------

static std::pair<bool, std::string> criterion_3() {
    const auto start = std::chrono::steady_clock::now();
    const std::vector<NoiseKind> kinds{NoiseKind::bitflip, noise_kind_from_string("dephasing"),
                                       NoiseKind::depolarizing, NoiseKind::ampdamp};
    const std::vector<double> probs{1e-6, 1e-5, 1e-4};
    std::ostringstream note;

    // (a) trained-machine fidelity against the noiseless reference is
    // non-increasing in p for every channel, on common random numbers.
    const std::vector<NoiseFidelityRow> rows =
        noise_fidelity_experiment(fixture().train256, fixture().map, 256, kinds, probs, 50, 256,
                                  90011);
    bool train_ok = true;
    for (const NoiseKind kind : kinds) {
        double previous = 2.0;
        for (const NoiseFidelityRow& row : rows) {
            if (row.kind != kind) continue;
            if (row.fidelity_global > previous + 1e-9) {
                train_ok = false;
                note << " train " << to_string(kind) << "@p=" << fmt(row.probability)
                     << " rose to " << fmt(row.fidelity_global) << ";";
            }
            previous = row.fidelity_global;
        }
    }

    // (b) mean projection energy drifts away from the ground energy as p
    // grows; the instance pins both measured bits to 1 so amplitude damping
    // (decay toward bit 0) also pulls away from the ground space. The mean is
    // taken over the full trajectory ensemble by evolving the density matrix
    // under the exact channel: at p <= 1e-5 a 50-trajectory sample sees only
    // 0-2 discrete kicks, and near the finite-beta convergence edge a single
    // kick can genuinely lower the energy, so the sampled mean is not yet
    // monotone while its limit is. Trajectory-vs-channel agreement is pinned
    // separately below.
    const Hamiltonian h = parse_hamiltonian("+ZIIII +IIZII");
    QiteConfig cfg;
    cfg.tomography = TomographyMode::exact();
    cfg.max_discards = 0;
    cfg.domain_size = 3; // wide enough to reach the ground space from the entangled start
    const DensityMatrix start_state = DensityMatrix::from_pure(fixture().machine.pure_state());
    bool project_ok = true;
    for (const NoiseKind kind : kinds) {
        double previous = -1e300;
        for (const double p : probs) {
            const NoiseSpec spec = noise_on_all(kind, p, 5);
            std::mt19937_64 rng =
                make_engine(derive_seed(90012, static_cast<std::uint64_t>(kind)));
            const QiteTrajectory run = qite_run_density(h, start_state, cfg, spec, rng);
            const double energy = run.final_energy();
            if (energy < previous - 1e-9) {
                project_ok = false;
                note << " project " << to_string(kind) << "@p=" << fmt(p) << " fell to "
                     << fmt(energy) << ";";
            }
            previous = energy;
        }
    }

    const double elapsed = seconds_since(start);
    const bool pass = train_ok && project_ok && elapsed < 600.0;
    return {pass, (note.str().empty() ? "all channels ordered" : note.str()) + ", " +
                      fmt(elapsed) + "s"};
}

// --- criterion 4: machine fidelity climbs with the training-subset size -----

static std::pair<bool, std::string> criterion_4() {
    const std::vector<Signal> train = fixture().dataset.train_samples();
    const std::vector<int> sizes{8, 16, 32, 64, 128, 256, 512, 1024};
    const FidelityBySizeResult result =
        fidelity_vs_size_experiment(train, fixture().map, sizes, 5,
                                    static_cast<std::int64_t>(train.size()), 90013);

    std::map<int, double> mean_global, mean_even;
    std::map<int, int> counts;
    for (const FidelityRow& row : result.rows) {
        mean_global[row.subset_size] += row.fidelity_global;
        mean_even[row.subset_size] += row.fidelity_even;
        ++counts[row.subset_size];
    }
    std::vector<double> xs, ys;
    for (const int size : sizes) {
        mean_global[size] /= counts[size];
        mean_even[size] /= counts[size];
        xs.push_back(static_cast<double>(size));
        ys.push_back(mean_global[size]);
    }

    const double p_value = stats::spearman_pvalue_exact(xs, ys);
    const bool rising = p_value < 0.05 && stats::spearman_rho(xs, ys) > 0.0;
    const bool separated = mean_even[1024] < mean_global[1024];
    const bool pass = rising && separated;
    return {pass, "Spearman p=" + fmt(p_value) + ", fidelity at 256 samples " +
                      fmt(mean_global[256]) + ", at 1024: global " + fmt(mean_global[1024]) +
                      " vs uniform-reference " + fmt(mean_even[1024])};
}

// --- criterion 5: noise channels are complete and match their trajectories --

static std::pair<bool, std::string> criterion_5() {
    std::mt19937_64 rng = make_engine(90014);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    const std::vector<NoiseKind> kinds{NoiseKind::bitflip, NoiseKind::phaseflip,
                                       NoiseKind::bitphaseflip, NoiseKind::depolarizing,
                                       NoiseKind::ampdamp};
    double worst_defect = 0.0;
    double worst_trace = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        const NoiseKind kind = kinds[rng() % kinds.size()];
        const double param = uniform(rng);
        const KrausChannel channel = channel_kraus(kind, param);
        worst_defect = std::max(worst_defect, completeness_defect(channel));

        DensityMatrix rho = DensityMatrix::from_matrix_unchecked(oracle::random_density(4, rng));
        apply_channel(rho, channel, static_cast<int>(rng() % 2));
        worst_trace = std::max(worst_trace, std::abs(rho.trace_real() - 1.0));
    }

    // Stochastic unravelings agree with the exact channel in distribution.
    double worst_td = 0.0;
    struct Case { NoiseKind kind; double p; };
    for (const Case c : {Case{NoiseKind::bitflip, 0.3}, Case{NoiseKind::depolarizing, 0.3},
                         Case{NoiseKind::ampdamp, 0.4}}) {
        const KrausChannel channel = channel_kraus(c.kind, c.p);
        const Eigen::VectorXcd psi0 = oracle::random_state(4, rng);
        const int target = 1;
        Eigen::MatrixXcd mean = Eigen::MatrixXcd::Zero(4, 4);
        const int n_traj = 5000;
        for (int t = 0; t < n_traj; ++t) {
            StateVector psi(2, psi0);
            if (c.kind == NoiseKind::ampdamp) {
                jump_trajectory_step(psi, channel, target, rng);
            } else {
                inject_stochastic(psi, c.kind, c.p, target, rng);
            }
            mean += psi.amplitudes() * psi.amplitudes().adjoint();
        }
        mean /= static_cast<double>(n_traj);
        DensityMatrix exact = DensityMatrix::from_pure(StateVector(2, psi0));
        apply_channel(exact, channel, target);
        worst_td = std::max(worst_td,
                            trace_distance(DensityMatrix::from_matrix_unchecked(mean), exact));
    }

    const bool pass = worst_defect <= 1e-10 && worst_trace <= 1e-10 && worst_td < 0.02;
    return {pass, "max completeness defect " + fmt(worst_defect) + ", max trace drift " +
                      fmt(worst_trace) + ", max trajectory-mean distance " + fmt(worst_td)};
}

// --- criterion 6: the averaging circuit reproduces the direct average -------

static std::pair<bool, std::string> criterion_6() {
    std::mt19937_64 rng = make_engine(90015);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    double worst_fidelity = 1.0;
    bool success_ok = true;
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 1 + static_cast<int>(rng() % 4);
        const int count = 1 << (rng() % 4); // 1, 2, 4, or 8 samples
        TrainingSet data;
        data.map = uniform_midpoints(n);
        for (int s = 0; s < count; ++s) {
            Signal sample(static_cast<std::size_t>(n));
            for (double& v : sample) v = uniform(rng);
            data.samples.push_back(std::move(sample));
        }
        const BornMachine direct = quantum_average_direct(data);
        const CircuitAverageResult circuit = quantum_average_circuit(data, rng);
        worst_fidelity = std::min(worst_fidelity, fidelity(circuit.machine, direct));
        if (circuit.success_probability < 1.0 / static_cast<double>(count) - 1e-12 ||
            circuit.attempts < 1) {
            success_ok = false;
        }
    }
    const bool pass = worst_fidelity >= 1.0 - 1e-9 && success_ok;
    return {pass, "worst fidelity to the direct average " + fmt(worst_fidelity) +
                      (success_ok ? ", success floor held" : ", success floor VIOLATED")};
}

// --- criterion 7: single steps track the exact imaginary flow ---------------

static std::pair<bool, std::string> criterion_7() {
    std::mt19937_64 rng = make_engine(90016);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    QiteConfig cfg;
    cfg.tomography = TomographyMode::exact();
    double worst = 1.0;
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 1 + static_cast<int>(rng() % 3);
        const int target = static_cast<int>(rng() % n);
        std::string axes(static_cast<std::size_t>(n), 'I');
        axes[static_cast<std::size_t>(target)] = 'Z';
        const double coeff = (rng() % 2 == 0 ? 1.0 : -1.0) * (0.25 + 1.75 * uniform(rng));

        const StateVector psi(n, oracle::random_state(Eigen::Index{1} << n, rng));
        const Eigen::VectorXcd expected = oracle::imaginary_evolve(
            coeff * oracle::word_matrix(axes), psi.amplitudes(), cfg.d_beta);
        const QiteStepResult stepped = qite_step(psi, PauliTerm{coeff, axes}, cfg, rng);
        worst = std::min(worst, std::norm(stepped.state.amplitudes().dot(expected)));
    }
    const double floor = 1.0 - 10.0 * cfg.d_beta * cfg.d_beta;
    return {worst >= floor, "worst step fidelity " + fmt(worst) + " (floor " + fmt(floor) + ")"};
}

// --- criterion 8: discarding energy-raising sweeps helps under shot noise ---

static std::pair<bool, std::string> criterion_8() {
    const Hamiltonian h = parse_hamiltonian("-ZII -IIZ");
    const StateVector init = uniform_start(3);

    auto mean_drift = [&](int max_discards) {
        double total = 0.0;
        for (std::uint64_t seed = 1; seed <= 5; ++seed) {
            QiteConfig cfg;
            cfg.tomography = TomographyMode::shots(100000);
            cfg.max_discards = max_discards;
            std::mt19937_64 rng = make_engine(seed);
            const QiteTrajectory run = qite_run(h, init, cfg, rng);
            // Score the true energy of the state the run ends in, not the
            // shot estimate, which saturates at the spectrum edge.
            std::mt19937_64 probe = make_engine(1);
            total += std::abs(
                estimate_energy(run.final_pure(), h, TomographyMode::exact(), probe) + 2.0);
        }
        return total / 5.0;
    };

    const double drift_plain = mean_drift(0);
    const double drift_retry = mean_drift(30);
    const bool pass = drift_retry < drift_plain;
    return {pass, "mean |E + 2| over 5 seeds: " + fmt(drift_retry) + " with retries vs " +
                      fmt(drift_plain) + " without"};
}

// --- criterion 9: projected machines sample the conditioned distribution ----

static std::pair<bool, std::string> criterion_9() {
    struct Case {
        std::vector<Signal> samples;
        std::vector<int> measured;
        Signal probe; // signal whose sensed bits define the conditioning
    };
    const std::vector<Case> cases{
        {{{0.0, 1.0, 0.0}}, {1}, {0.0, 1.0, 0.0}},
        {{{0.0, 0.5, 1.0}, {1.0, 0.5, 0.0}, {0.2, 0.9, 0.4}}, {0}, {0.1, 0.5, 0.5}},
        {{{0.3, 0.6}, {0.8, 0.2}}, {1}, {0.5, 0.1}},
    };

    double worst_tv = 0.0;
    for (const Case& c : cases) {
        const int n = static_cast<int>(c.samples.front().size());
        TrainingSet data;
        data.map = uniform_midpoints(n);
        data.samples = c.samples;
        const BornMachine machine = quantum_average_direct(data);

        const SensingOutcome outcome = sense(c.probe, c.measured, data.map);
        const std::vector<double> conditioned = oracle::conditional_born(
            machine.pure_state().amplitudes(), outcome.indices, outcome.bits, n);

        QiteConfig cfg;
        cfg.tomography = TomographyMode::exact();
        cfg.domain_size = n; // full-register generators track the exact flow
        std::mt19937_64 rng = make_engine(90017);
        const BornMachine projected =
            project(machine, build_projection_hamiltonian(outcome, n), cfg, no_noise(), rng);

        const std::int64_t n_samples = 100000;
        const std::map<std::string, std::int64_t> counts =
            sample_counts(projected.pure_state(), n_samples, rng);
        std::vector<double> empirical(std::size_t{1} << n, 0.0);
        for (const auto& [bits, count] : counts) {
            std::size_t index = 0;
            for (const char b : bits) index = (index << 1) | (b == '1' ? 1u : 0u);
            empirical[index] = static_cast<double>(count) / static_cast<double>(n_samples);
        }
        worst_tv = std::max(worst_tv, oracle::total_variation(empirical, conditioned));
    }
    return {worst_tv < 0.05, "worst total variation " + fmt(worst_tv) + " (bound 0.05)"};
}

// --- criterion 10: the error metric is exact and errors shrink with N_c -----

static std::pair<bool, std::string> criterion_10() {
    std::mt19937_64 rng = make_engine(90018);
    std::uniform_real_distribution<double> uniform(-1.0, 1.0);
    double worst_metric = 0.0;
    for (int trial = 0; trial < 10000; ++trial) {
        const std::size_t k = 1 + rng() % 8;
        std::vector<double> p(k), t(k), s(k);
        double total = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            p[i] = uniform(rng);
            t[i] = uniform(rng);
            s[i] = 0.05 + std::abs(uniform(rng));
            const double scaled = (p[i] - t[i]) / s[i];
            total += scaled * scaled;
        }
        const double expected = std::sqrt(total / static_cast<double>(k));
        worst_metric = std::max(worst_metric, std::abs(mean_srmse(p, t, s) - expected));
    }

    const std::vector<Signal> test_all = fixture().dataset.test_samples();
    const std::vector<Signal> test_set(test_all.begin(), test_all.begin() + 64);
    const std::vector<double> sigmas = pixel_sigmas(fixture().dataset.train_samples());
    QiteConfig cfg;
    cfg.tomography = TomographyMode::exact();
    cfg.domain_size = 3; // wide enough to reach the ground space from the entangled start
    const SweepResult sweep =
        run_reconstruction_sweep(test_set, fixture().machine, fixture().map, {2, 3, 4}, cfg,
                                 no_noise(), sigmas, 10000, 90019);
    const double m2 = sweep.mean_srmse_by_nc.at(2);
    const double m3 = sweep.mean_srmse_by_nc.at(3);
    const double m4 = sweep.mean_srmse_by_nc.at(4);
    const bool ordered = m3 <= m2 + 1e-9 && m4 <= m3 + 1e-9;

    const bool pass = worst_metric <= 1e-12 && ordered;
    return {pass, "metric max deviation " + fmt(worst_metric) + "; mean error by measured pixels " +
                      fmt(m2) + " -> " + fmt(m3) + " -> " + fmt(m4) +
                      (ordered ? " (non-increasing)" : " (NOT non-increasing)")};
}

int main() {
    run_criterion(1, "exact evolution reaches the two-term ground energy", criterion_1);
    run_criterion(2, "machine projection converges monotonically to -2", criterion_2);
    run_criterion(3, "noise moves training fidelity down and projection energy up", criterion_3);
    run_criterion(4, "machine fidelity climbs with training-subset size", criterion_4);
    run_criterion(5, "noise channels are complete and match their unravelings", criterion_5);
    run_criterion(6, "the averaging circuit reproduces the direct average", criterion_6);
    run_criterion(7, "single steps track the exact imaginary flow", criterion_7);
    run_criterion(8, "retrying energy-raising sweeps helps under shot noise", criterion_8);
    run_criterion(9, "projected machines sample the conditioned distribution", criterion_9);
    run_criterion(10, "the error metric is exact and shrinks with more measured pixels",
                  criterion_10);
    if (failures == 0) {
        std::printf("all criteria passed\n");
    } else {
        std::printf("%d criteria failed\n", failures);
    }
    return failures;
}
