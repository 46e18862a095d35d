// qcs — command-line front end for the quantum compressive-sensing library.
//
// Subcommands:
//   gen-data     write a synthetic LIDAR-quartile dataset (CSV + JSON sidecar)
//   train        Born-machine fidelity tables: subset-size sweep or noise sweep
//   qite         imaginary-time energy trajectories for a Pauli Hamiltonian
//   reconstruct  sensing + projection + sampling sRMSE sweep over N_c
//
// Every command is deterministic under --seed: rerunning reproduces the CSV
// body byte for byte (the timestamped banner line is suppressed by
// --no-banner). Workers sized by --jobs only ever fan out over independent
// derived streams, so --jobs never changes any output. Tables are built in
// memory and written in one pass; a validation failure produces no file.
//
// Exit codes: 0 success, 2 validation error, 3 runtime failure.

#include <CLI11.hpp>

#include <qcs/bornmachine.hpp>
#include <qcs/dataio.hpp>
#include <qcs/encoding.hpp>
#include <qcs/noise.hpp>
#include <qcs/pipeline.hpp>
#include <qcs/qcore.hpp>
#include <qcs/qite.hpp>
#include <qcs/rng.hpp>

#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace {

using namespace qcs;

struct GlobalOptions {
    std::uint64_t seed = 42;
    int jobs = 1;
    std::string out; // gen-data: output directory; other commands: CSV path, stdout if empty
    bool no_banner = false;
};

std::string fmt(double value) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", value);
    return buf;
}

std::string utc_timestamp() {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// Serialized, whole-file output: the body is complete before anything is
// opened, so failed runs never leave partial tables behind.
void write_table(const GlobalOptions& g, const std::string& command, const std::string& body) {
    std::string text;
    if (!g.no_banner) {
        text = "# qcs " + command + " seed=" + std::to_string(g.seed) +
               " generated=" + utc_timestamp() + "\n";
    }
    text += body;
    if (g.out.empty()) {
        std::cout << text;
        return;
    }
    const std::filesystem::path path(g.out);
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream file(path, std::ios::binary | std::ios::trunc);
    if (!file) throw std::runtime_error("cannot open output file: " + g.out);
    file << text;
    file.flush();
    if (!file.good()) throw std::runtime_error("short write to output file: " + g.out);
}

// Runs body(0..count-1) on up to `jobs` threads. Each index must touch only
// its own slot; the first exception wins and is rethrown after the join.
void parallel_for(int jobs, std::size_t count, const std::function<void(std::size_t)>& body) {
    if (count == 0) return;
    const std::size_t workers =
        std::min<std::size_t>(static_cast<std::size_t>(std::max(jobs, 1)), count);
    if (workers == 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto drain = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count || failed.load()) return;
            try {
                body(i);
            } catch (...) {
                const std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
                failed.store(true);
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(drain);
    for (std::thread& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

std::vector<std::string> split_commas(const std::string& text) {
    std::vector<std::string> parts;
    std::string item;
    std::istringstream stream(text);
    while (std::getline(stream, item, ',')) parts.push_back(item);
    return parts;
}

int parse_int(const std::string& text, const std::string& what) {
    std::size_t used = 0;
    int value = 0;
    try {
        value = std::stoi(text, &used);
    } catch (const std::exception&) {
        throw std::invalid_argument(what + ": '" + text + "' is not an integer");
    }
    if (used != text.size())
        throw std::invalid_argument(what + ": '" + text + "' is not an integer");
    return value;
}

double parse_double(const std::string& text, const std::string& what) {
    std::size_t used = 0;
    double value = 0;
    try {
        value = std::stod(text, &used);
    } catch (const std::exception&) {
        throw std::invalid_argument(what + ": '" + text + "' is not a number");
    }
    if (used != text.size() || !std::isfinite(value))
        throw std::invalid_argument(what + ": '" + text + "' is not a finite number");
    return value;
}

std::vector<int> parse_int_list(const std::string& text, const std::string& what) {
    std::vector<int> values;
    for (const std::string& part : split_commas(text)) values.push_back(parse_int(part, what));
    if (values.empty()) throw std::invalid_argument(what + ": empty list");
    return values;
}

std::vector<double> parse_double_list(const std::string& text, const std::string& what) {
    std::vector<double> values;
    for (const std::string& part : split_commas(text)) values.push_back(parse_double(part, what));
    if (values.empty()) throw std::invalid_argument(what + ": empty list");
    return values;
}

std::vector<NoiseKind> parse_kind_list(const std::string& text) {
    std::vector<NoiseKind> kinds;
    for (const std::string& part : split_commas(text)) kinds.push_back(noise_kind_from_string(part));
    if (kinds.empty()) throw std::invalid_argument("--noise-kinds: empty list");
    return kinds;
}

TomographyMode parse_shots(const std::string& text) {
    if (text == "exact") return TomographyMode::exact();
    double value = 0;
    try {
        value = parse_double(text, "--shots");
    } catch (const std::invalid_argument&) {
        throw std::invalid_argument("--shots must be 'exact' or a shot count, got '" + text + "'");
    }
    if (!(value >= 1.0))
        throw std::invalid_argument("--shots must be 'exact' or a count >= 1, got '" + text + "'");
    return TomographyMode::shots(static_cast<std::int64_t>(std::llround(value)));
}

// Shared dataset knobs for commands that can either read a saved dataset or
// regenerate one on the fly from the global seed.
struct DatasetOptions {
    std::string data_path;
    std::int64_t synth_n = 10000;
    double zero_fraction = 0.1;
    bool per_pixel_norm = false;
};

void add_dataset_options(CLI::App* cmd, DatasetOptions& o) {
    cmd->add_option("--data", o.data_path, "Dataset CSV written by gen-data (sidecar required); "
                                           "omitted: regenerate synthetically from --seed");
    cmd->add_option("--n", o.synth_n, "Synthetic sample count when --data is omitted")
        ->capture_default_str();
    cmd->add_option("--zero-frac", o.zero_fraction, "Synthetic empty-return fraction")
        ->capture_default_str();
    cmd->add_flag("--per-pixel-norm", o.per_pixel_norm,
                  "Normalize each pixel by its own range instead of the global one");
}

Dataset load_or_generate(const GlobalOptions& g, const DatasetOptions& o) {
    if (!o.data_path.empty()) return load_csv(o.data_path);
    const NormalizationScope scope =
        o.per_pixel_norm ? NormalizationScope::per_pixel : NormalizationScope::global_range;
    return preprocess(generate_synthetic_lidar(o.synth_n, g.seed, o.zero_fraction), g.seed, scope);
}

// ---------------------------------------------------------------------------
// gen-data

void run_gen_data(const GlobalOptions& g, const DatasetOptions& o) {
    if (g.out.empty())
        throw std::invalid_argument("gen-data requires --out <directory> for the dataset files");
    const NormalizationScope scope =
        o.per_pixel_norm ? NormalizationScope::per_pixel : NormalizationScope::global_range;
    const Dataset dataset =
        preprocess(generate_synthetic_lidar(o.synth_n, g.seed, o.zero_fraction), g.seed, scope);
    std::filesystem::create_directories(g.out);
    const std::string csv = (std::filesystem::path(g.out) / "data.csv").string();
    save_csv(dataset, csv);
    std::cout << "wrote " << csv << " + " << sidecar_path(csv) << " ("
              << dataset.samples.size() << " samples, " << dataset.num_pixels() << " pixels, "
              << dataset.train_indices.size() << " train / " << dataset.test_indices.size()
              << " test)\n";
}

// ---------------------------------------------------------------------------
// train

struct TrainOptions {
    DatasetOptions dataset;
    std::string sizes = "8,16,32,64,128,256,512,1024";
    int repeats = 5;
    std::int64_t global_cap = 0; // 0: use the whole training split
    bool noise = false;
    int subset_size = 256;
    std::string kinds = "bitflip,phaseflip,depolarizing";
    std::string probs = "1e-6,1e-5,1e-4,1e-3,1e-2";
    int n_traj = 100;
};

void run_train(const GlobalOptions& g, const TrainOptions& o) {
    const Dataset dataset = load_or_generate(g, o.dataset);
    const std::vector<Signal> train = dataset.train_samples();
    const PixelMap map = uniform_midpoints(dataset.num_pixels());
    const std::int64_t cap =
        o.global_cap > 0 ? o.global_cap : static_cast<std::int64_t>(train.size());

    std::ostringstream body;
    if (o.noise) {
        const std::vector<NoiseKind> kinds = parse_kind_list(o.kinds);
        const std::vector<double> probs = parse_double_list(o.probs, "--noise-probs");
        const std::uint64_t experiment_seed = derive_seed(g.seed, 4);
        // Streams are keyed by noise kind, so a one-kind call reproduces that
        // kind's slice of the full table and kinds can fan out to workers.
        std::vector<std::vector<NoiseFidelityRow>> per_kind(kinds.size());
        parallel_for(g.jobs, kinds.size(), [&](std::size_t k) {
            per_kind[k] = noise_fidelity_experiment(train, map, o.subset_size, {kinds[k]}, probs,
                                                    o.n_traj, cap, experiment_seed);
        });
        body << "noise_kind,p,fidelity_global\n";
        for (const std::vector<NoiseFidelityRow>& rows : per_kind) {
            for (const NoiseFidelityRow& row : rows) {
                body << to_string(row.kind) << ',' << fmt(row.probability) << ','
                     << fmt(row.fidelity_global) << '\n';
            }
        }
    } else {
        const std::vector<int> sizes = parse_int_list(o.sizes, "--sizes");
        const FidelityBySizeResult result =
            fidelity_vs_size_experiment(train, map, sizes, o.repeats, cap, derive_seed(g.seed, 3));
        for (const auto& [size, actual] : result.actual_repeats) {
            if (actual < o.repeats) {
                std::cerr << "note: subset size " << size << " reduced to " << actual
                          << " repeats (training split holds " << train.size() << " samples)\n";
            }
        }
        body << "subset_size,repeat,fidelity_global,fidelity_even\n";
        for (const FidelityRow& row : result.rows) {
            body << row.subset_size << ',' << row.repeat_index << ',' << fmt(row.fidelity_global)
                 << ',' << fmt(row.fidelity_even) << '\n';
        }
    }
    write_table(g, "train", body.str());
}

// ---------------------------------------------------------------------------
// qite

struct QiteOptions {
    std::string hamiltonian;
    double d_beta = 0.005;
    double total_beta = 3.0;
    std::string shots = "exact";
    int max_discards = 30;
    int domain_size = 1;
    double regularization = 1e-8;
    std::string noise_kind = "none";
    double noise_prob = 0.0;
    int n_traj = 1;
};

void run_qite(const GlobalOptions& g, const QiteOptions& o) {
    const Hamiltonian h = parse_hamiltonian(o.hamiltonian);
    const int n = h.num_qubits();
    const StateVector init = psi_even(n);

    QiteConfig cfg;
    cfg.d_beta = o.d_beta;
    cfg.total_beta = o.total_beta;
    cfg.tomography = parse_shots(o.shots);
    cfg.max_discards = o.max_discards;
    cfg.domain_size = o.domain_size;
    cfg.regularization = o.regularization;
    cfg.validate();

    const NoiseKind kind = noise_kind_from_string(o.noise_kind);
    if (kind == NoiseKind::none && o.noise_prob != 0.0)
        throw std::invalid_argument("--noise-prob needs a --noise-kind other than 'none'");
    if (o.n_traj < 1) throw std::invalid_argument("--n-traj must be >= 1");
    const NoiseSpec spec = noise_on_all(kind, o.noise_prob, n);
    validate_noise_spec(spec, n);

    // Stochastic kinds emit one curve per trajectory id, each on its own
    // derived stream; exact evolutions (noiseless, amplitude damping) are a
    // single curve with id 0.
    std::vector<QiteTrajectory> curves;
    if (kind == NoiseKind::none || spec.probability == 0.0 || kind == NoiseKind::ampdamp) {
        std::mt19937_64 rng = make_engine(derive_seed(g.seed, 0));
        curves.push_back(kind == NoiseKind::none || spec.probability == 0.0
                             ? qite_run(h, init, cfg, rng)
                             : qite_run_noisy(h, init, cfg, spec, rng, 1));
    } else {
        curves.resize(static_cast<std::size_t>(o.n_traj));
        parallel_for(g.jobs, curves.size(), [&](std::size_t id) {
            std::mt19937_64 rng = make_engine(derive_seed(g.seed, id));
            curves[id] = qite_run_noisy(h, init, cfg, spec, rng, 1);
        });
    }

    std::ostringstream body;
    body << "beta,energy,discards,trajectory_id\n";
    for (std::size_t id = 0; id < curves.size(); ++id) {
        const QiteTrajectory& curve = curves[id];
        for (std::size_t i = 0; i < curve.points.size(); ++i) {
            const int discards = i == 0 ? 0 : curve.discards_used[i - 1];
            body << fmt(curve.points[i].beta) << ',' << fmt(curve.points[i].energy) << ','
                 << discards << ',' << id << '\n';
        }
    }
    write_table(g, "qite", body.str());
}

// ---------------------------------------------------------------------------
// reconstruct

struct ReconstructOptions {
    DatasetOptions dataset;
    int train_size = 256;
    int test_size = 64;
    std::string nc = "2,3,4";
    std::int64_t n_samples = 10000;
    std::string noise_kind = "none";
    double noise_prob = 0.0;
    double d_beta = 0.005;
    double total_beta = 3.0;
    std::string shots = "exact";
    int max_discards = 30;
    int domain_size = 1;
    double regularization = 1e-8;
    bool general_hamiltonian = false;
    bool hardware_faithful = false;
};

void run_reconstruct(const GlobalOptions& g, const ReconstructOptions& o) {
    const Dataset dataset = load_or_generate(g, o.dataset);
    const std::vector<Signal> train = dataset.train_samples();
    const std::vector<Signal> test_all = dataset.test_samples();
    const int n = dataset.num_pixels();
    if (o.train_size < 1 || o.train_size > static_cast<int>(train.size())) {
        throw std::invalid_argument("--train-size " + std::to_string(o.train_size) +
                                    " outside the training split (" +
                                    std::to_string(train.size()) + " samples)");
    }
    if (o.test_size < 1 || o.test_size > static_cast<int>(test_all.size())) {
        throw std::invalid_argument("--test-size " + std::to_string(o.test_size) +
                                    " outside the testing split (" +
                                    std::to_string(test_all.size()) + " samples)");
    }
    if (o.hardware_faithful && o.n_samples > 1000) {
        throw std::invalid_argument("--hardware-faithful re-projects per sample; cap "
                                    "--n-samples at 1000");
    }

    const PixelMap map = uniform_midpoints(n);
    const TrainingSet training{{train.begin(), train.begin() + o.train_size}, map};
    const BornMachine machine = quantum_average_direct(training);
    const std::vector<Signal> test(test_all.begin(), test_all.begin() + o.test_size);
    const std::vector<double> sigmas = pixel_sigmas(train);
    const std::vector<int> nc_values = parse_int_list(o.nc, "--nc");

    const NoiseKind kind = noise_kind_from_string(o.noise_kind);
    if (kind == NoiseKind::none && o.noise_prob != 0.0)
        throw std::invalid_argument("--noise-prob needs a --noise-kind other than 'none'");
    const NoiseSpec spec = noise_on_all(kind, o.noise_prob, n);
    validate_noise_spec(spec, n);

    QiteConfig cfg;
    cfg.d_beta = o.d_beta;
    cfg.total_beta = o.total_beta;
    cfg.tomography = parse_shots(o.shots);
    cfg.max_discards = o.max_discards;
    cfg.domain_size = o.domain_size;
    cfg.regularization = o.regularization;
    cfg.validate();
    for (const int n_c : nc_values) {
        if (n_c < 1 || n_c >= n) {
            throw std::invalid_argument("--nc value " + std::to_string(n_c) +
                                        " must be in [1, " + std::to_string(n - 1) + "]");
        }
    }

    // Each (N_c slot, test signal) cell runs on its own derived stream, so the
    // flattened fan-out below reproduces the serial sweep row for row.
    const std::size_t n_tests = test.size();
    std::vector<SweepRow> rows(nc_values.size() * n_tests);
    parallel_for(g.jobs, rows.size(), [&](std::size_t i) {
        const std::size_t slot = i / n_tests;
        const std::size_t t = i % n_tests;
        rows[i] = run_reconstruction_case(test, t, machine, map, nc_values[slot], slot, cfg, spec,
                                          sigmas, o.n_samples, g.seed, o.general_hamiltonian,
                                          o.hardware_faithful);
    });

    const std::string kind_name = to_string(kind);
    std::ostringstream body;
    body << "N_c,noise_kind,p,test_index,srmse,mean_srmse\n";
    for (std::size_t slot = 0; slot < nc_values.size(); ++slot) {
        double sum = 0.0;
        for (std::size_t t = 0; t < n_tests; ++t) {
            const SweepRow& row = rows[slot * n_tests + t];
            sum += row.srmse;
            body << row.n_c << ',' << kind_name << ',' << fmt(spec.probability) << ','
                 << row.test_index << ',' << fmt(row.srmse) << ",\n";
        }
        body << nc_values[slot] << ',' << kind_name << ',' << fmt(spec.probability) << ",-1,,"
             << fmt(sum / static_cast<double>(n_tests)) << '\n';
    }
    write_table(g, "reconstruct", body.str());
}

} // namespace

int main(int argc, char** argv) {
    GlobalOptions g;
    CLI::App app{"quantum compressive sensing: data synthesis, Born-machine training, "
                 "imaginary-time projection, and reconstruction sweeps"};
    app.fallthrough();
    app.require_subcommand(1);
    app.add_option("--seed", g.seed, "Master seed; every stream derives from it")
        ->capture_default_str();
    app.add_option("--jobs", g.jobs, "Worker threads for independent trials")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    app.add_option("--out", g.out,
                   "gen-data: output directory (required); other commands: CSV path "
                   "(default stdout)");
    app.add_flag("--no-banner", g.no_banner, "Suppress the timestamped comment line");

    DatasetOptions gen_opts;
    CLI::App* gen = app.add_subcommand("gen-data", "Write a synthetic dataset + JSON sidecar");
    add_dataset_options(gen, gen_opts);

    TrainOptions train_opts;
    CLI::App* train = app.add_subcommand("train", "Born-machine fidelity tables");
    add_dataset_options(train, train_opts.dataset);
    train->add_option("--sizes", train_opts.sizes, "Comma-separated subset sizes")
        ->capture_default_str();
    train->add_option("--repeats", train_opts.repeats, "Disjoint subsets per size")
        ->capture_default_str();
    train->add_option("--global-cap", train_opts.global_cap,
                      "Training samples behind the reference state (0: all)")
        ->capture_default_str();
    train->add_flag("--noise", train_opts.noise, "Noise sweep instead of the size sweep");
    train->add_option("--subset-size", train_opts.subset_size, "Noise sweep: samples per machine")
        ->capture_default_str();
    train->add_option("--noise-kinds", train_opts.kinds, "Noise sweep: comma-separated kinds")
        ->capture_default_str();
    train->add_option("--noise-probs", train_opts.probs, "Noise sweep: comma-separated p values")
        ->capture_default_str();
    train->add_option("--n-traj", train_opts.n_traj, "Noise sweep: trajectories per mixture")
        ->capture_default_str();

    QiteOptions qite_opts;
    CLI::App* qite = app.add_subcommand("qite", "Imaginary-time energy trajectories");
    qite->add_option("--hamiltonian", qite_opts.hamiltonian,
                     "Signed Pauli words, e.g. \"-ZII -IIZ\" (qubit 0 leftmost)")
        ->required();
    qite->add_option("--dbeta", qite_opts.d_beta, "Imaginary-time substep")
        ->capture_default_str();
    qite->add_option("--beta", qite_opts.total_beta, "Total imaginary time")
        ->capture_default_str();
    qite->add_option("--shots", qite_opts.shots, "'exact' or shots per observable (e.g. 1e6)")
        ->capture_default_str();
    qite->add_option("--max-discards", qite_opts.max_discards,
                     "Retries of a sweep whose energy went up")
        ->capture_default_str();
    qite->add_option("--domain-size", qite_opts.domain_size, "Minimum generator support")
        ->capture_default_str();
    qite->add_option("--regularization", qite_opts.regularization, "Tikhonov lambda")
        ->capture_default_str();
    qite->add_option("--noise-kind", qite_opts.noise_kind,
                     "none|bitflip|phaseflip|bitphaseflip|depolarizing|ampdamp")
        ->capture_default_str();
    qite->add_option("--noise-prob", qite_opts.noise_prob, "Per-gate noise probability")
        ->capture_default_str();
    qite->add_option("--n-traj", qite_opts.n_traj, "Trajectory curves for stochastic kinds")
        ->capture_default_str();

    ReconstructOptions rec_opts;
    CLI::App* rec = app.add_subcommand("reconstruct", "sRMSE sweep over compression levels");
    add_dataset_options(rec, rec_opts.dataset);
    rec->add_option("--train-size", rec_opts.train_size, "Training samples behind the machine")
        ->capture_default_str();
    rec->add_option("--test-size", rec_opts.test_size, "Test signals to reconstruct")
        ->capture_default_str();
    rec->add_option("--nc", rec_opts.nc, "Comma-separated measured-pixel counts")
        ->capture_default_str();
    rec->add_option("--n-samples", rec_opts.n_samples, "Samples per reconstruction")
        ->capture_default_str();
    rec->add_option("--noise-kind", rec_opts.noise_kind,
                    "none|bitflip|phaseflip|bitphaseflip|depolarizing|ampdamp")
        ->capture_default_str();
    rec->add_option("--noise-prob", rec_opts.noise_prob, "Per-gate noise probability")
        ->capture_default_str();
    rec->add_option("--dbeta", rec_opts.d_beta, "Imaginary-time substep")
        ->capture_default_str();
    rec->add_option("--beta", rec_opts.total_beta, "Total imaginary time")
        ->capture_default_str();
    rec->add_option("--shots", rec_opts.shots, "'exact' or shots per observable")
        ->capture_default_str();
    rec->add_option("--max-discards", rec_opts.max_discards,
                    "Retries of a sweep whose energy went up")
        ->capture_default_str();
    rec->add_option("--domain-size", rec_opts.domain_size, "Minimum generator support")
        ->capture_default_str();
    rec->add_option("--regularization", rec_opts.regularization, "Tikhonov lambda")
        ->capture_default_str();
    rec->add_flag("--general-hamiltonian", rec_opts.general_hamiltonian,
                  "Quadratic pinning terms instead of bare Z projectors");
    rec->add_flag("--hardware-faithful", rec_opts.hardware_faithful,
                  "Re-project before every sample (caps --n-samples at 1000)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (gen->parsed()) run_gen_data(g, gen_opts);
        if (train->parsed()) run_train(g, train_opts);
        if (qite->parsed()) run_qite(g, qite_opts);
        if (rec->parsed()) run_reconstruct(g, rec_opts);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
    return 0;
}
