// Noise channels: Kraus completeness, exact application vs a dense reference,
// trajectory-unraveling means, stream alignment across probabilities, and
// basis-state sampling.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <qcs/noise.hpp>
#include <qcs/qcore.hpp>
#include <qcs/rng.hpp>

#include <cmath>

#include "oracle.hpp"

using namespace qcs;

namespace {

const NoiseKind kStochasticKinds[] = {NoiseKind::bitflip, NoiseKind::phaseflip,
                                      NoiseKind::bitphaseflip, NoiseKind::depolarizing};
const NoiseKind kAllKinds[] = {NoiseKind::none,         NoiseKind::bitflip,
                               NoiseKind::phaseflip,    NoiseKind::bitphaseflip,
                               NoiseKind::depolarizing, NoiseKind::ampdamp};

} // namespace

TEST_CASE("kind names round-trip and accept the dephasing alias") {
    for (const NoiseKind kind : kAllKinds) {
        CHECK(noise_kind_from_string(to_string(kind)) == kind);
    }
    CHECK(noise_kind_from_string("dephasing") == NoiseKind::phaseflip);
    CHECK_THROWS_AS(noise_kind_from_string("thermal"), std::invalid_argument);
}

TEST_CASE("kraus families are complete for 1000 random parameters") {
    std::mt19937_64 rng = make_engine(811);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    for (int trial = 0; trial < 1000; ++trial) {
        const NoiseKind kind = kAllKinds[rng() % 6];
        const double param = uniform(rng);
        const KrausChannel ch = channel_kraus(kind, param);
        CHECK(completeness_defect(ch) <= 1e-10);
    }
    CHECK_THROWS_AS(channel_kraus(NoiseKind::bitflip, 1.5), std::invalid_argument);
    CHECK_THROWS_AS(channel_kraus(NoiseKind::ampdamp, -0.1), std::invalid_argument);
}

TEST_CASE("exact channel application matches the dense conjugation sum") {
    std::mt19937_64 rng = make_engine(822);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    const int n = 3;
    for (int trial = 0; trial < 60; ++trial) {
        const NoiseKind kind = kAllKinds[trial % 6];
        const double param = uniform(rng);
        const int qubit = static_cast<int>(rng() % n);
        const KrausChannel ch = channel_kraus(kind, param);

        DensityMatrix rho = DensityMatrix::from_matrix(oracle::random_density(8, rng));
        const Eigen::MatrixXcd expected =
            oracle::channel_on_qubit(rho.matrix(), ch.operators, qubit, n);
        apply_channel(rho, ch, qubit);
        CHECK((rho.matrix() - expected).norm() == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(rho.trace_real() == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("trajectory means reproduce the exact channel within 0.02 at 5000 runs") {
    std::mt19937_64 rng = make_engine(833);
    const int n = 2;
    const int n_traj = 5000;
    const double p = 0.3;
    for (const NoiseKind kind :
         {NoiseKind::bitflip, NoiseKind::depolarizing, NoiseKind::ampdamp}) {
        const StateVector base(n, oracle::random_state(4, rng));
        const KrausChannel ch = channel_kraus(kind, p);

        DensityMatrix exact = DensityMatrix::from_pure(base);
        apply_channel(exact, ch, 0);

        Eigen::MatrixXcd mean = Eigen::MatrixXcd::Zero(4, 4);
        for (int t = 0; t < n_traj; ++t) {
            StateVector traj = base;
            if (kind == NoiseKind::ampdamp) {
                jump_trajectory_step(traj, ch, 0, rng);
            } else {
                inject_stochastic(traj, kind, p, 0, rng);
            }
            mean.noalias() += traj.amplitudes() * traj.amplitudes().adjoint();
        }
        mean /= static_cast<double>(n_traj);
        const double td = trace_distance(exact, DensityMatrix::from_matrix_unchecked(mean));
        CHECK(td < 0.02);
    }
}

TEST_CASE("zero-probability injection is an exact no-op") {
    std::mt19937_64 rng = make_engine(844);
    for (const NoiseKind kind : kStochasticKinds) {
        StateVector psi(2, oracle::random_state(4, rng));
        const Eigen::VectorXcd before = psi.amplitudes();
        inject_stochastic(psi, kind, 0.0, 1, rng);
        CHECK((psi.amplitudes() - before).norm() == 0.0);
    }
}

TEST_CASE("injection streams are coupled: flips at low p are a subset of high p") {
    // Same engine seed, increasing probability: whenever the draw flips the
    // state at the smaller p it must also flip at the larger p. This is the
    // common-random-numbers property the noise-sweep experiments rely on.
    for (std::uint64_t s = 0; s < 200; ++s) {
        bool flipped_low = false, flipped_high = false;
        {
            std::mt19937_64 rng = make_engine(derive_seed(900, s));
            StateVector psi(1);
            inject_stochastic(psi, NoiseKind::bitflip, 0.2, 0, rng);
            flipped_low = std::abs(psi.amplitudes()(1)) > 0.5;
        }
        {
            std::mt19937_64 rng = make_engine(derive_seed(900, s));
            StateVector psi(1);
            inject_stochastic(psi, NoiseKind::bitflip, 0.7, 0, rng);
            flipped_high = std::abs(psi.amplitudes()(1)) > 0.5;
        }
        if (flipped_low) CHECK(flipped_high);
    }
}

TEST_CASE("depolarizing draw count does not depend on the branch taken") {
    // Two engines from one seed: injections at different p must leave the
    // engines in the same position, otherwise coupled sweeps would drift.
    std::mt19937_64 a = make_engine(911);
    std::mt19937_64 b = make_engine(911);
    StateVector psi_a(1), psi_b(1);
    inject_stochastic(psi_a, NoiseKind::depolarizing, 0.05, 0, a);
    inject_stochastic(psi_b, NoiseKind::depolarizing, 0.95, 0, b);
    CHECK(a() == b());
}

TEST_CASE("stochastic unraveling rejects amplitude damping") {
    std::mt19937_64 rng = make_engine(922);
    StateVector psi(1);
    CHECK_THROWS_AS(inject_stochastic(psi, NoiseKind::ampdamp, 0.1, 0, rng),
                    std::invalid_argument);
}

TEST_CASE("jump trajectories preserve the norm and consume one draw") {
    std::mt19937_64 rng = make_engine(933);
    const KrausChannel ch = channel_kraus(NoiseKind::ampdamp, 0.4);
    StateVector psi(1);
    apply_gate(psi, gate_h(0));
    std::mt19937_64 probe = rng; // copy to count draws
    jump_trajectory_step(psi, ch, 0, rng);
    CHECK(psi.norm() == doctest::Approx(1.0).epsilon(1e-12));
    probe.discard(1);
    CHECK(probe() == rng());
}

TEST_CASE("spec helpers and validation") {
    const NoiseSpec silent = no_noise();
    CHECK(silent.kind == NoiseKind::none);
    validate_noise_spec(silent, 3); // must not throw

    const NoiseSpec all = noise_on_all(NoiseKind::bitflip, 0.1, 3);
    CHECK(all.targets == std::vector<int>{0, 1, 2});
    validate_noise_spec(all, 3);

    NoiseSpec bad = all;
    bad.probability = 1.5;
    CHECK_THROWS_AS(validate_noise_spec(bad, 3), std::invalid_argument);
    bad = all;
    bad.targets = {3};
    CHECK_THROWS_AS(validate_noise_spec(bad, 3), std::invalid_argument);
    bad = all;
    bad.targets.clear();
    CHECK_THROWS_AS(validate_noise_spec(bad, 3), std::invalid_argument);
}

TEST_CASE("spec-level injection hits every target qubit") {
    // p = 1 bitflip on qubits {0, 2} of |000> gives |101> deterministically.
    std::mt19937_64 rng = make_engine(944);
    StateVector psi(3);
    inject_stochastic(psi, NoiseSpec{NoiseKind::bitflip, 1.0, {0, 2}}, rng);
    CHECK(std::abs(psi.amplitudes()(5)) == doctest::Approx(1.0));
}

TEST_CASE("sample_counts histograms follow the Born distribution") {
    std::mt19937_64 rng = make_engine(955);
    StateVector psi(2);
    apply_gate(psi, gate_h(0)); // (|00> + |10>)/sqrt(2)
    const std::int64_t shots = 20000;
    const auto counts = sample_counts(psi, shots, rng);

    std::int64_t total = 0;
    for (const auto& [key, count] : counts) {
        total += count;
        CHECK((key == "00" || key == "10"));
    }
    CHECK(total == shots);
    // 4-sigma window around the even split.
    CHECK(std::abs(static_cast<double>(counts.at("00")) - shots / 2.0) <
          4.0 * std::sqrt(shots * 0.25));

    // The density-matrix overload agrees statistically on the same state.
    const auto dm_counts = sample_counts(DensityMatrix::from_pure(psi), shots, rng);
    std::int64_t dm_total = 0;
    for (const auto& [key, count] : dm_counts) {
        dm_total += count;
        CHECK((key == "00" || key == "10"));
    }
    CHECK(dm_total == shots);

    CHECK_THROWS_AS(sample_counts(psi, 0, rng), std::invalid_argument);
}
