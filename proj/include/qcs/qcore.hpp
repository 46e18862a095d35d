// Dense statevector / density-matrix simulator core: states, gates, Pauli
// observables, partial trace, fidelity, measurement and postselection.
//
// Qubit ordering convention used everywhere: qubit 0 is the leftmost letter
// of a Pauli word and the most significant bit of a basis index, so "ZII"
// acts on qubit 0 and basis state |100> of 3 qubits has index 4.
#pragma once

#include <complex>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace qcs {

using complex = std::complex<double>;

namespace limits {
// Size guards; dense simulation cost grows as 2^n (vectors) and 4^n (matrices).
inline constexpr int max_statevector_qubits = 20;
inline constexpr int max_density_qubits = 12;
} // namespace limits

// ============================================================================
// States
// ============================================================================

class StateVector {
  public:
    // |0...0> on n qubits.
    explicit StateVector(int n_qubits);
    // Takes ownership of an amplitude vector of length 2^n; must be normalized
    // within 1e-6 (renormalized exactly on construction).
    StateVector(int n_qubits, Eigen::VectorXcd amplitudes);

    int num_qubits() const { return n_; }
    Eigen::Index dim() const { return amps_.size(); }
    const Eigen::VectorXcd& amplitudes() const { return amps_; }
    Eigen::VectorXcd& amplitudes() { return amps_; }
    double norm() const { return amps_.norm(); }
    void renormalize();

  private:
    int n_;
    Eigen::VectorXcd amps_;
};

class DensityMatrix {
  public:
    // Validates hermiticity and unit trace within 1e-10 and positive
    // semidefiniteness (eigenvalues >= -1e-9).
    static DensityMatrix from_matrix(Eigen::MatrixXcd m);
    // Trusted path for operators produced by CPTP maps inside the library;
    // checks only shape, hermiticity and trace.
    static DensityMatrix from_matrix_unchecked(Eigen::MatrixXcd m);
    static DensityMatrix from_pure(const StateVector& psi);

    int num_qubits() const { return n_; }
    Eigen::Index dim() const { return mat_.rows(); }
    const Eigen::MatrixXcd& matrix() const { return mat_; }
    Eigen::MatrixXcd& matrix() { return mat_; }
    double trace_real() const { return mat_.trace().real(); }

  private:
    DensityMatrix(int n, Eigen::MatrixXcd m) : n_(n), mat_(std::move(m)) {}
    int n_;
    Eigen::MatrixXcd mat_;
};

// ============================================================================
// Gates
// ============================================================================

struct GateOp {
    std::string label;
    Eigen::MatrixXcd matrix; // 2x2 (one target) or 4x4 (two targets)
    std::vector<int> targets;
};

GateOp gate_x(int target);
GateOp gate_y(int target);
GateOp gate_z(int target);
GateOp gate_h(int target);
// Ry(theta)|0> = cos(theta/2)|0> + sin(theta/2)|1>
GateOp gate_ry(double theta, int target);
GateOp gate_rz(double theta, int target);
GateOp gate_cnot(int control, int target);

void apply_gate(StateVector& state, const GateOp& gate);
void apply_gate(DensityMatrix& rho, const GateOp& gate);

// Applies a dense 2^k x 2^k unitary to the listed qubits (ascending index
// order maps to most-significant-first local basis). Unitarity is checked
// within 1e-10.
void apply_unitary(StateVector& state, const Eigen::MatrixXcd& u,
                   const std::vector<int>& qubits);
void apply_unitary(DensityMatrix& rho, const Eigen::MatrixXcd& u,
                   const std::vector<int>& qubits);

// Ry(theta) on `target`, applied only to components where every control
// qubit carries the required bit value. Building block for multiplexed
// state preparation.
void apply_controlled_ry(StateVector& state, const std::vector<int>& controls,
                         const std::vector<int>& control_bits, int target,
                         double theta);

// ============================================================================
// Observables
// ============================================================================

struct PauliTerm {
    double coefficient = 1.0;
    std::string axes; // one of I,X,Y,Z per qubit, axes[q] acts on qubit q

    int num_qubits() const { return static_cast<int>(axes.size()); }
    // Qubits with a non-identity letter, ascending.
    std::vector<int> support() const;
};

struct Hamiltonian {
    std::vector<PauliTerm> terms;
    int num_qubits() const;
};

// Parses whitespace-separated signed Pauli words of uniform length,
// e.g. "-ZII -IIZ" on 3 qubits. A word without a sign is positive.
Hamiltonian parse_hamiltonian(const std::string& text);
std::string to_string(const PauliTerm& term);

double expectation(const StateVector& state, const PauliTerm& term);
double expectation(const StateVector& state, const Hamiltonian& h);
double expectation(const DensityMatrix& rho, const PauliTerm& term);
double expectation(const DensityMatrix& rho, const Hamiltonian& h);

// ============================================================================
// Reductions and comparisons
// ============================================================================

// Reduced density matrix on `keep` (ascending, non-empty, at most
// limits::max_density_qubits).
DensityMatrix partial_trace(const StateVector& state, const std::vector<int>& keep);
DensityMatrix partial_trace(const DensityMatrix& rho, const std::vector<int>& keep);

// Uhlmann fidelity; pure/pure and pure/mixed cases take the cheap closed
// forms. Results are clamped to [0,1] within 1e-9.
double fidelity(const StateVector& a, const StateVector& b);
double fidelity(const StateVector& a, const DensityMatrix& b);
double fidelity(const DensityMatrix& a, const StateVector& b);
double fidelity(const DensityMatrix& a, const DensityMatrix& b);

double trace_distance(const DensityMatrix& a, const DensityMatrix& b);

// ============================================================================
// Measurement
// ============================================================================

struct MeasurementRecord {
    std::vector<int> bits;         // one per measured index, in given order
    StateVector state;             // collapsed, same qubit count as input
    double probability;            // Born probability of the drawn outcome
};

MeasurementRecord measure_qubits(const StateVector& state,
                                 const std::vector<int>& indices,
                                 std::mt19937_64& rng);

struct PostselectionRecord {
    StateVector state;             // postselected qubits removed
    double probability;
};

// Projects the listed qubits onto the given bits and drops them from the
// register. Throws if the outcome probability is below 1e-12 or if no
// qubit would remain.
PostselectionRecord postselect(const StateVector& state,
                               const std::vector<int>& indices,
                               const std::vector<int>& bits);

namespace detail {
// Applies a dense 2^k x 2^k operator (not necessarily unitary) to the listed
// qubits of an amplitude vector. Shared kernel for gates, Kraus operators and
// fitted step unitaries.
void apply_local_operator(Eigen::Ref<Eigen::VectorXcd> amps, int n_qubits,
                          const Eigen::MatrixXcd& m, const std::vector<int>& qubits);
// rho -> M rho M^dagger on the listed qubits.
void conjugate_local_operator(Eigen::MatrixXcd& rho, int n_qubits,
                              const Eigen::MatrixXcd& m, const std::vector<int>& qubits);
bool is_unitary(const Eigen::MatrixXcd& m, double tol);
} // namespace detail

} // namespace qcs
