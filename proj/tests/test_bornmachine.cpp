// Born-machine training: the direct quantum average, the multiplexed circuit
// with postselection, noisy trajectory mixtures, and the two fidelity
// experiments behind the training study.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <qcs/bornmachine.hpp>
#include <qcs/encoding.hpp>
#include <qcs/noise.hpp>
#include <qcs/rng.hpp>

#include <cmath>

#include "oracle.hpp"

using namespace qcs;

namespace {

TrainingSet random_training_set(int n_pixels, std::size_t n_samples, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    TrainingSet set;
    set.map = uniform_midpoints(n_pixels);
    set.samples.resize(n_samples);
    for (auto& sample : set.samples) {
        sample.resize(static_cast<std::size_t>(n_pixels));
        for (double& y : sample) y = uniform(rng);
    }
    return set;
}

} // namespace

TEST_CASE("direct average is the normalized sum of encoded samples") {
    TrainingSet set;
    set.map = uniform_midpoints(2);
    set.samples = {{0.2, 0.9}, {0.7, 0.4}};
    const BornMachine machine = quantum_average_direct(set);
    REQUIRE(machine.is_pure());
    CHECK(machine.provenance() == MachineProvenance::direct);
    CHECK(machine.training_size() == 2);

    Eigen::VectorXcd sum = encode_signal(set.samples[0], set.map).amplitudes() +
                           encode_signal(set.samples[1], set.map).amplitudes();
    sum /= sum.norm();
    CHECK((machine.pure_state().amplitudes() - sum).norm() ==
          doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("training sets validate shape and size") {
    TrainingSet set;
    set.map = uniform_midpoints(2);
    CHECK_THROWS_AS(set.validate(), std::invalid_argument); // no samples
    set.samples = {{0.5}};
    CHECK_THROWS_AS(set.validate(), std::invalid_argument); // ragged sample
    set.samples = {{0.5, 0.5}};
    set.validate();
}

TEST_CASE("circuit preparation with postselection equals the direct average") {
    std::mt19937_64 rng = make_engine(1201);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    const std::size_t sizes[] = {1, 2, 4, 8};
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 1 + static_cast<int>(rng() % 4);
        const std::size_t d = sizes[rng() % 4];
        TrainingSet set = random_training_set(n, d, rng);

        const BornMachine direct = quantum_average_direct(set);
        const CircuitAverageResult circuit = quantum_average_circuit(set, rng);

        CHECK(fidelity(circuit.machine, direct) >= 1.0 - 1e-9);
        // Encoded amplitudes are non-negative, so pairwise overlaps are too,
        // which bounds the all-zeros control outcome from below by 1/|D|.
        CHECK(circuit.success_probability >= 1.0 / static_cast<double>(d) - 1e-12);
        CHECK(circuit.attempts >= 1);
        CHECK(circuit.machine.provenance() == MachineProvenance::circuit);
    }
}

TEST_CASE("circuit preparation requires a power-of-two sample count") {
    std::mt19937_64 rng = make_engine(1202);
    TrainingSet set = random_training_set(2, 3, rng);
    CHECK_THROWS_AS(quantum_average_circuit(set, rng), std::invalid_argument);

    const TrainingSet padded = pad_to_power_of_two(set);
    CHECK(padded.samples.size() == 4);
    CHECK(padded.samples[3] == padded.samples[2]); // padded by repeating the last sample
    const CircuitAverageResult result = quantum_average_circuit(padded, rng);
    CHECK(result.machine.num_qubits() == 2);
}

TEST_CASE("repeat-until-success attempt counts are geometric on average") {
    // With |D| identical samples the control register disentangles and the
    // postselection succeeds with probability 1, so exactly one attempt.
    std::mt19937_64 rng = make_engine(1203);
    TrainingSet set;
    set.map = uniform_midpoints(1);
    set.samples = {{0.3}, {0.3}, {0.3}, {0.3}};
    const CircuitAverageResult result = quantum_average_circuit(set, rng);
    CHECK(result.success_probability == doctest::Approx(1.0));
    CHECK(result.attempts == 1);
}

TEST_CASE("noiseless mixture training returns the exact projector") {
    std::mt19937_64 rng = make_engine(1204);
    TrainingSet set = random_training_set(3, 5, rng);
    const BornMachine pure = quantum_average_direct(set);
    const BornMachine mixture = train_noisy_mixture(set, no_noise(), 7, rng);
    REQUIRE_FALSE(mixture.is_pure());
    CHECK(mixture.provenance() == MachineProvenance::noisy_mixture);
    CHECK(fidelity(mixture, pure) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(mixture.mixed_state().trace_real() == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("noisy mixtures lose fidelity monotonically on coupled streams") {
    std::mt19937_64 rng = make_engine(1205);
    TrainingSet set = random_training_set(3, 8, rng);
    const BornMachine pure = quantum_average_direct(set);

    double previous = 1.0 + 1e-9;
    for (const double p : {1e-4, 1e-3, 1e-1}) {
        // Same master seed per level: trajectories share their draws, so more
        // probability can only move each flip threshold further.
        std::mt19937_64 level = make_engine(4242);
        const BornMachine noisy =
            train_noisy_mixture(set, noise_on_all(NoiseKind::bitflip, p, 3), 40, level);
        const double f = fidelity(noisy, pure);
        CHECK(f <= previous + 1e-9);
        previous = f;
    }
}

TEST_CASE("psi_even is the uniform superposition") {
    const StateVector even = psi_even(3);
    for (int i = 0; i < 8; ++i)
        CHECK(even.amplitudes()(i).real() == doctest::Approx(1.0 / std::sqrt(8.0)));
}

TEST_CASE("size experiment reports disjoint-subset fidelities deterministically") {
    std::mt19937_64 rng = make_engine(1206);
    TrainingSet set = random_training_set(2, 40, rng);

    const std::vector<int> sizes{2, 8, 16};
    const FidelityBySizeResult a =
        fidelity_vs_size_experiment(set.samples, set.map, sizes, 3, 40, 99);
    const FidelityBySizeResult b =
        fidelity_vs_size_experiment(set.samples, set.map, sizes, 3, 40, 99);

    // 3 repeats of sizes 2 and 8; size 16 only fits twice into 40 samples.
    CHECK(a.rows.size() == 3 + 3 + 2);
    CHECK(a.actual_repeats.at(16) == 2);
    CHECK(a.global_size == 40);
    REQUIRE(b.rows.size() == a.rows.size());
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
        CHECK(a.rows[i].fidelity_global == b.rows[i].fidelity_global);
        CHECK(a.rows[i].fidelity_even == b.rows[i].fidelity_even);
        CHECK(a.rows[i].fidelity_global >= 0.0);
        CHECK(a.rows[i].fidelity_global <= 1.0);
    }

    CHECK_THROWS_AS(fidelity_vs_size_experiment(set.samples, set.map, {64}, 1, 40, 99),
                    std::invalid_argument); // no subset fits
}

TEST_CASE("noise experiment slices by kind reproduce the combined table") {
    std::mt19937_64 rng = make_engine(1207);
    TrainingSet set = random_training_set(2, 12, rng);
    const std::vector<double> probs{1e-4, 1e-2};

    const auto combined = noise_fidelity_experiment(
        set.samples, set.map, 8, {NoiseKind::bitflip, NoiseKind::depolarizing}, probs, 10, 12,
        555);
    const auto flips = noise_fidelity_experiment(set.samples, set.map, 8, {NoiseKind::bitflip},
                                                 probs, 10, 12, 555);
    const auto depol = noise_fidelity_experiment(set.samples, set.map, 8,
                                                 {NoiseKind::depolarizing}, probs, 10, 12, 555);

    REQUIRE(combined.size() == 4);
    REQUIRE(flips.size() == 2);
    REQUIRE(depol.size() == 2);
    for (std::size_t i = 0; i < 2; ++i) {
        CHECK(combined[i].fidelity_global == flips[i].fidelity_global);
        CHECK(combined[2 + i].fidelity_global == depol[i].fidelity_global);
    }
}

TEST_CASE("noise experiment fidelities decrease with probability per kind") {
    std::mt19937_64 rng = make_engine(1208);
    TrainingSet set = random_training_set(3, 16, rng);
    const std::vector<double> probs{1e-5, 1e-3, 1e-1};
    const auto rows = noise_fidelity_experiment(set.samples, set.map, 16,
                                                {NoiseKind::bitflip, NoiseKind::phaseflip}, probs,
                                                30, 16, 777);
    REQUIRE(rows.size() == 6);
    CHECK(rows[0].fidelity_global + 1e-9 >= rows[1].fidelity_global);
    CHECK(rows[1].fidelity_global + 1e-9 >= rows[2].fidelity_global);
    CHECK(rows[3].fidelity_global + 1e-9 >= rows[4].fidelity_global);
    CHECK(rows[4].fidelity_global + 1e-9 >= rows[5].fidelity_global);
}
