#include "qcs/qcore.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace qcs {

namespace {

std::string describe(const char* op, const std::string& what) {
    return std::string(op) + ": " + what;
}

void check_qubit_count(const char* op, int n, int max) {
    if (n < 1)
        throw std::invalid_argument(describe(op, "need at least one qubit"));
    if (n > max)
        throw std::invalid_argument(describe(op, "qubit count " + std::to_string(n) +
                                                 " exceeds limit " + std::to_string(max)));
}

void check_indices(const char* op, const std::vector<int>& indices, int n,
                   bool require_sorted) {
    if (indices.empty())
        throw std::invalid_argument(describe(op, "empty qubit index list"));
    std::vector<int> seen;
    for (int q : indices) {
        if (q < 0 || q >= n)
            throw std::invalid_argument(describe(op, "qubit index " + std::to_string(q) +
                                                     " out of range for " +
                                                     std::to_string(n) + "-qubit state"));
        if (std::find(seen.begin(), seen.end(), q) != seen.end())
            throw std::invalid_argument(describe(op, "duplicate qubit index " + std::to_string(q)));
        seen.push_back(q);
    }
    if (require_sorted && !std::is_sorted(indices.begin(), indices.end()))
        throw std::invalid_argument(describe(op, "qubit indices must be ascending"));
}

// Bit position of qubit q inside a basis index (qubit 0 is most significant).
inline int bit_position(int n, int q) { return n - 1 - q; }

inline std::uint64_t qubit_mask(int n, int q) {
    return std::uint64_t{1} << bit_position(n, q);
}

} // namespace

// ============================================================================
// StateVector / DensityMatrix
// ============================================================================

StateVector::StateVector(int n_qubits) : n_(n_qubits) {
    check_qubit_count("StateVector", n_qubits, limits::max_statevector_qubits);
    amps_ = Eigen::VectorXcd::Zero(Eigen::Index{1} << n_qubits);
    amps_(0) = 1.0;
}

StateVector::StateVector(int n_qubits, Eigen::VectorXcd amplitudes) : n_(n_qubits) {
    check_qubit_count("StateVector", n_qubits, limits::max_statevector_qubits);
    if (amplitudes.size() != (Eigen::Index{1} << n_qubits))
        throw std::invalid_argument("StateVector: amplitude vector length " +
                                    std::to_string(amplitudes.size()) +
                                    " does not match 2^" + std::to_string(n_qubits));
    const double nrm = amplitudes.norm();
    if (std::abs(nrm - 1.0) > 1e-6)
        throw std::invalid_argument("StateVector: amplitudes are not normalized (norm " +
                                    std::to_string(nrm) + ")");
    amps_ = std::move(amplitudes);
    amps_ /= nrm;
}

void StateVector::renormalize() {
    const double nrm = amps_.norm();
    if (nrm < 1e-12)
        throw std::runtime_error("StateVector: cannot renormalize a zero vector");
    amps_ /= nrm;
}

DensityMatrix DensityMatrix::from_matrix_unchecked(Eigen::MatrixXcd m) {
    if (m.rows() != m.cols() || m.rows() < 2)
        throw std::invalid_argument("DensityMatrix: matrix must be square with dim >= 2");
    const auto dim = m.rows();
    int n = 0;
    while ((Eigen::Index{1} << n) < dim) ++n;
    if ((Eigen::Index{1} << n) != dim)
        throw std::invalid_argument("DensityMatrix: dimension " + std::to_string(dim) +
                                    " is not a power of two");
    check_qubit_count("DensityMatrix", n, limits::max_density_qubits);
    if ((m - m.adjoint()).cwiseAbs().maxCoeff() > 1e-10)
        throw std::invalid_argument("DensityMatrix: matrix is not Hermitian within 1e-10");
    if (std::abs(m.trace().real() - 1.0) > 1e-10 || std::abs(m.trace().imag()) > 1e-10)
        throw std::invalid_argument("DensityMatrix: trace is not 1 within 1e-10");
    return DensityMatrix(n, std::move(m));
}

DensityMatrix DensityMatrix::from_matrix(Eigen::MatrixXcd m) {
    DensityMatrix rho = from_matrix_unchecked(std::move(m));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(rho.mat_, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1e-9)
        throw std::invalid_argument("DensityMatrix: matrix has eigenvalue below -1e-9");
    return rho;
}

DensityMatrix DensityMatrix::from_pure(const StateVector& psi) {
    check_qubit_count("DensityMatrix", psi.num_qubits(), limits::max_density_qubits);
    Eigen::MatrixXcd m = psi.amplitudes() * psi.amplitudes().adjoint();
    return DensityMatrix(psi.num_qubits(), std::move(m));
}

// ============================================================================
// Local operator kernels
// ============================================================================

namespace detail {

bool is_unitary(const Eigen::MatrixXcd& m, double tol) {
    if (m.rows() != m.cols()) return false;
    Eigen::MatrixXcd delta = m.adjoint() * m;
    delta -= Eigen::MatrixXcd::Identity(m.rows(), m.cols());
    return delta.cwiseAbs().maxCoeff() <= tol;
}

void apply_local_operator(Eigen::Ref<Eigen::VectorXcd> amps, int n_qubits,
                          const Eigen::MatrixXcd& m, const std::vector<int>& qubits) {
    const int k = static_cast<int>(qubits.size());
    const Eigen::Index dim_local = Eigen::Index{1} << k;
    if (m.rows() != dim_local || m.cols() != dim_local)
        throw std::invalid_argument("apply_local_operator: matrix dimension does not match qubit count");

    // scatter[l]: contribution of local basis index l to the full index.
    // Local bit j (most significant first) belongs to qubits[j].
    std::vector<std::uint64_t> scatter(static_cast<std::size_t>(dim_local), 0);
    for (Eigen::Index l = 0; l < dim_local; ++l)
        for (int j = 0; j < k; ++j)
            if ((l >> (k - 1 - j)) & 1)
                scatter[static_cast<std::size_t>(l)] |= qubit_mask(n_qubits, qubits[j]);

    std::uint64_t rest_mask = (std::uint64_t{1} << n_qubits) - 1;
    for (int q : qubits) rest_mask &= ~qubit_mask(n_qubits, q);

    Eigen::VectorXcd local(dim_local);
    std::uint64_t r = 0;
    while (true) {
        for (Eigen::Index l = 0; l < dim_local; ++l)
            local(l) = amps(static_cast<Eigen::Index>(r | scatter[static_cast<std::size_t>(l)]));
        local = m * local;
        for (Eigen::Index l = 0; l < dim_local; ++l)
            amps(static_cast<Eigen::Index>(r | scatter[static_cast<std::size_t>(l)])) = local(l);
        if (r == rest_mask) break;
        r = (r - rest_mask) & rest_mask; // next subset of rest_mask
    }
}

void conjugate_local_operator(Eigen::MatrixXcd& rho, int n_qubits,
                              const Eigen::MatrixXcd& m, const std::vector<int>& qubits) {
    // rho -> (M rho) M^dagger, column pass then row pass via the adjoint.
    for (Eigen::Index c = 0; c < rho.cols(); ++c)
        apply_local_operator(rho.col(c), n_qubits, m, qubits);
    Eigen::MatrixXcd t = rho.adjoint();
    for (Eigen::Index c = 0; c < t.cols(); ++c)
        apply_local_operator(t.col(c), n_qubits, m, qubits);
    rho = t.adjoint();
}

} // namespace detail

// ============================================================================
// Gates
// ============================================================================

namespace {

GateOp single_qubit_gate(std::string label, int target, Eigen::Matrix2cd m) {
    GateOp g;
    g.label = std::move(label);
    g.matrix = m;
    g.targets = {target};
    return g;
}

} // namespace

GateOp gate_x(int target) {
    Eigen::Matrix2cd m;
    m << 0, 1, 1, 0;
    return single_qubit_gate("x", target, m);
}

GateOp gate_y(int target) {
    Eigen::Matrix2cd m;
    m << 0, complex(0, -1), complex(0, 1), 0;
    return single_qubit_gate("y", target, m);
}

GateOp gate_z(int target) {
    Eigen::Matrix2cd m;
    m << 1, 0, 0, -1;
    return single_qubit_gate("z", target, m);
}

GateOp gate_h(int target) {
    const double s = 1.0 / std::sqrt(2.0);
    Eigen::Matrix2cd m;
    m << s, s, s, -s;
    return single_qubit_gate("h", target, m);
}

GateOp gate_ry(double theta, int target) {
    const double c = std::cos(theta / 2.0), s = std::sin(theta / 2.0);
    Eigen::Matrix2cd m;
    m << c, -s, s, c;
    return single_qubit_gate("ry", target, m);
}

GateOp gate_rz(double theta, int target) {
    Eigen::Matrix2cd m;
    m << std::exp(complex(0, -theta / 2.0)), 0, 0, std::exp(complex(0, theta / 2.0));
    return single_qubit_gate("rz", target, m);
}

GateOp gate_cnot(int control, int target) {
    // Basis order (control bit, target bit) with the control bit major.
    Eigen::Matrix4cd m = Eigen::Matrix4cd::Zero();
    m(0, 0) = 1;
    m(1, 1) = 1;
    m(2, 3) = 1;
    m(3, 2) = 1;
    GateOp g;
    g.label = "cnot";
    g.matrix = m;
    g.targets = {control, target};
    return g;
}

namespace {

void validate_gate(const char* op, const GateOp& gate, int n) {
    check_indices(op, gate.targets, n, /*require_sorted=*/false);
    const auto k = gate.targets.size();
    if (k != 1 && k != 2)
        throw std::invalid_argument(describe(op, "gate \"" + gate.label +
                                                 "\" must target one or two qubits"));
    const Eigen::Index want = Eigen::Index{1} << k;
    if (gate.matrix.rows() != want || gate.matrix.cols() != want)
        throw std::invalid_argument(describe(op, "gate \"" + gate.label +
                                                 "\" matrix dimension does not match target count"));
    if (!detail::is_unitary(gate.matrix, 1e-10))
        throw std::invalid_argument(describe(op, "gate \"" + gate.label +
                                                 "\" matrix is not unitary within 1e-10"));
}

} // namespace

void apply_gate(StateVector& state, const GateOp& gate) {
    validate_gate("apply_gate", gate, state.num_qubits());
    detail::apply_local_operator(state.amplitudes(), state.num_qubits(), gate.matrix,
                                 gate.targets);
}

void apply_gate(DensityMatrix& rho, const GateOp& gate) {
    validate_gate("apply_gate", gate, rho.num_qubits());
    detail::conjugate_local_operator(rho.matrix(), rho.num_qubits(), gate.matrix,
                                     gate.targets);
}

void apply_unitary(StateVector& state, const Eigen::MatrixXcd& u,
                   const std::vector<int>& qubits) {
    check_indices("apply_unitary", qubits, state.num_qubits(), /*require_sorted=*/true);
    if (!detail::is_unitary(u, 1e-10))
        throw std::invalid_argument("apply_unitary: matrix is not unitary within 1e-10");
    detail::apply_local_operator(state.amplitudes(), state.num_qubits(), u, qubits);
}

void apply_unitary(DensityMatrix& rho, const Eigen::MatrixXcd& u,
                   const std::vector<int>& qubits) {
    check_indices("apply_unitary", qubits, rho.num_qubits(), /*require_sorted=*/true);
    if (!detail::is_unitary(u, 1e-10))
        throw std::invalid_argument("apply_unitary: matrix is not unitary within 1e-10");
    detail::conjugate_local_operator(rho.matrix(), rho.num_qubits(), u, qubits);
}

void apply_controlled_ry(StateVector& state, const std::vector<int>& controls,
                         const std::vector<int>& control_bits, int target,
                         double theta) {
    const int n = state.num_qubits();
    if (target < 0 || target >= n)
        throw std::invalid_argument("apply_controlled_ry: target out of range");
    if (controls.size() != control_bits.size())
        throw std::invalid_argument("apply_controlled_ry: controls and bits differ in length");
    std::uint64_t control_mask = 0, required = 0;
    for (std::size_t j = 0; j < controls.size(); ++j) {
        const int q = controls[j];
        if (q < 0 || q >= n || q == target)
            throw std::invalid_argument("apply_controlled_ry: bad control qubit " +
                                        std::to_string(q));
        const std::uint64_t mask = qubit_mask(n, q);
        if (control_mask & mask)
            throw std::invalid_argument("apply_controlled_ry: duplicate control qubit");
        control_mask |= mask;
        if (control_bits[j] != 0 && control_bits[j] != 1)
            throw std::invalid_argument("apply_controlled_ry: control bits must be 0 or 1");
        if (control_bits[j]) required |= mask;
    }

    const double c = std::cos(theta / 2.0), s = std::sin(theta / 2.0);
    const std::uint64_t tmask = qubit_mask(n, target);
    auto& amps = state.amplitudes();
    const std::uint64_t dim = std::uint64_t{1} << n;
    for (std::uint64_t i = 0; i < dim; ++i) {
        if (i & tmask) continue;
        if ((i & control_mask) != required) continue;
        const auto i0 = static_cast<Eigen::Index>(i);
        const auto i1 = static_cast<Eigen::Index>(i | tmask);
        const complex a0 = amps(i0), a1 = amps(i1);
        amps(i0) = c * a0 - s * a1;
        amps(i1) = s * a0 + c * a1;
    }
}

// ============================================================================
// Observables
// ============================================================================

std::vector<int> PauliTerm::support() const {
    std::vector<int> qs;
    for (int q = 0; q < num_qubits(); ++q)
        if (axes[static_cast<std::size_t>(q)] != 'I') qs.push_back(q);
    return qs;
}

int Hamiltonian::num_qubits() const {
    if (terms.empty())
        throw std::invalid_argument("Hamiltonian: no terms");
    return terms.front().num_qubits();
}

namespace {

void validate_term(const char* op, const PauliTerm& term, int n) {
    if (term.num_qubits() != n)
        throw std::invalid_argument(describe(op, "Pauli word \"" + term.axes +
                                                 "\" does not act on " + std::to_string(n) +
                                                 " qubits"));
    for (char c : term.axes)
        if (c != 'I' && c != 'X' && c != 'Y' && c != 'Z')
            throw std::invalid_argument(describe(op, std::string("invalid Pauli letter '") +
                                                     c + "' in \"" + term.axes + "\""));
    if (!std::isfinite(term.coefficient))
        throw std::invalid_argument(describe(op, "non-finite coefficient"));
}

// A Pauli word maps |b> to phase(b) |b ^ flip_mask>; phase factors come in
// powers of i tracked per basis state.
struct PauliAction {
    std::uint64_t flip_mask = 0;
    std::uint64_t y_mask = 0;
    std::uint64_t z_mask = 0;
    int y_count = 0;

    explicit PauliAction(const PauliTerm& term) {
        const int n = term.num_qubits();
        for (int q = 0; q < n; ++q) {
            const std::uint64_t mask = qubit_mask(n, q);
            switch (term.axes[static_cast<std::size_t>(q)]) {
            case 'X': flip_mask |= mask; break;
            case 'Y': flip_mask |= mask; y_mask |= mask; ++y_count; break;
            case 'Z': z_mask |= mask; break;
            default: break;
            }
        }
    }

    // Phase of P|b>: i^{y_count} * (-1)^{|b & (y_mask|z_mask)|}.
    complex phase(std::uint64_t b) const {
        static const complex i_pow[4] = {complex(1, 0), complex(0, 1), complex(-1, 0),
                                         complex(0, -1)};
        const int minus = std::popcount(b & (y_mask | z_mask)) & 1;
        complex p = i_pow[y_count & 3];
        return minus ? -p : p;
    }
};

} // namespace

double expectation(const StateVector& state, const PauliTerm& term) {
    validate_term("expectation", term, state.num_qubits());
    const PauliAction action(term);
    const auto& amps = state.amplitudes();
    const std::uint64_t dim = std::uint64_t{1} << state.num_qubits();
    complex acc = 0;
    for (std::uint64_t b = 0; b < dim; ++b) {
        const std::uint64_t t = b ^ action.flip_mask;
        acc += std::conj(amps(static_cast<Eigen::Index>(t))) * action.phase(b) *
               amps(static_cast<Eigen::Index>(b));
    }
    acc *= term.coefficient;
    if (std::abs(acc.imag()) >= 1e-9)
        throw std::runtime_error("expectation: non-negligible imaginary part " +
                                 std::to_string(acc.imag()));
    return acc.real();
}

double expectation(const DensityMatrix& rho, const PauliTerm& term) {
    validate_term("expectation", term, rho.num_qubits());
    const PauliAction action(term);
    const auto& m = rho.matrix();
    const std::uint64_t dim = std::uint64_t{1} << rho.num_qubits();
    complex acc = 0;
    for (std::uint64_t b = 0; b < dim; ++b)
        acc += m(static_cast<Eigen::Index>(b),
                 static_cast<Eigen::Index>(b ^ action.flip_mask)) *
               action.phase(b);
    acc *= term.coefficient;
    if (std::abs(acc.imag()) >= 1e-9)
        throw std::runtime_error("expectation: non-negligible imaginary part " +
                                 std::to_string(acc.imag()));
    return acc.real();
}

double expectation(const StateVector& state, const Hamiltonian& h) {
    double e = 0;
    for (const auto& term : h.terms) e += expectation(state, term);
    return e;
}

double expectation(const DensityMatrix& rho, const Hamiltonian& h) {
    double e = 0;
    for (const auto& term : h.terms) e += expectation(rho, term);
    return e;
}

Hamiltonian parse_hamiltonian(const std::string& text) {
    Hamiltonian h;
    std::istringstream in(text);
    std::string word;
    std::size_t width = 0;
    while (in >> word) {
        double coeff = 1.0;
        std::string axes = word;
        if (!axes.empty() && (axes.front() == '+' || axes.front() == '-')) {
            coeff = axes.front() == '-' ? -1.0 : 1.0;
            axes.erase(axes.begin());
        }
        if (axes.empty())
            throw std::invalid_argument("parse_hamiltonian: dangling sign in \"" + word + "\"");
        for (char c : axes)
            if (c != 'I' && c != 'X' && c != 'Y' && c != 'Z')
                throw std::invalid_argument(
                    "parse_hamiltonian: invalid character '" + std::string(1, c) +
                    "' in term \"" + word + "\" (expected letters I, X, Y, Z)");
        if (width == 0)
            width = axes.size();
        else if (axes.size() != width)
            throw std::invalid_argument("parse_hamiltonian: term \"" + word +
                                        "\" has length " + std::to_string(axes.size()) +
                                        ", expected " + std::to_string(width));
        h.terms.push_back(PauliTerm{coeff, axes});
    }
    if (h.terms.empty())
        throw std::invalid_argument("parse_hamiltonian: no terms found");
    return h;
}

std::string to_string(const PauliTerm& term) {
    std::ostringstream out;
    out << (term.coefficient < 0 ? "-" : "+");
    const double mag = std::abs(term.coefficient);
    if (std::abs(mag - 1.0) > 1e-12) out << mag << "*";
    out << term.axes;
    return out.str();
}

// ============================================================================
// Partial trace
// ============================================================================

namespace {

struct TraceLayout {
    std::vector<std::uint64_t> keep_base; // 2^k entries
    std::vector<std::uint64_t> env_base;  // 2^(n-k) entries
};

TraceLayout trace_layout(int n, const std::vector<int>& keep) {
    const int k = static_cast<int>(keep.size());
    std::vector<int> env;
    for (int q = 0; q < n; ++q)
        if (std::find(keep.begin(), keep.end(), q) == keep.end()) env.push_back(q);

    TraceLayout layout;
    layout.keep_base.resize(std::size_t{1} << k, 0);
    for (std::uint64_t a = 0; a < layout.keep_base.size(); ++a)
        for (int j = 0; j < k; ++j)
            if ((a >> (k - 1 - j)) & 1)
                layout.keep_base[a] |= qubit_mask(n, keep[static_cast<std::size_t>(j)]);

    const int e = n - k;
    layout.env_base.resize(std::size_t{1} << e, 0);
    for (std::uint64_t v = 0; v < layout.env_base.size(); ++v)
        for (int j = 0; j < e; ++j)
            if ((v >> (e - 1 - j)) & 1)
                layout.env_base[v] |= qubit_mask(n, env[static_cast<std::size_t>(j)]);
    return layout;
}

} // namespace

DensityMatrix partial_trace(const StateVector& state, const std::vector<int>& keep) {
    const int n = state.num_qubits();
    check_indices("partial_trace", keep, n, /*require_sorted=*/true);
    check_qubit_count("partial_trace", static_cast<int>(keep.size()),
                      limits::max_density_qubits);
    const TraceLayout layout = trace_layout(n, keep);
    const auto dim_keep = static_cast<Eigen::Index>(layout.keep_base.size());
    const auto& amps = state.amplitudes();
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(dim_keep, dim_keep);
    for (Eigen::Index a = 0; a < dim_keep; ++a)
        for (Eigen::Index b = 0; b < dim_keep; ++b) {
            complex acc = 0;
            for (std::uint64_t eb : layout.env_base)
                acc += amps(static_cast<Eigen::Index>(layout.keep_base[static_cast<std::size_t>(a)] | eb)) *
                       std::conj(amps(static_cast<Eigen::Index>(layout.keep_base[static_cast<std::size_t>(b)] | eb)));
            out(a, b) = acc;
        }
    return DensityMatrix::from_matrix_unchecked(std::move(out));
}

DensityMatrix partial_trace(const DensityMatrix& rho, const std::vector<int>& keep) {
    const int n = rho.num_qubits();
    check_indices("partial_trace", keep, n, /*require_sorted=*/true);
    check_qubit_count("partial_trace", static_cast<int>(keep.size()),
                      limits::max_density_qubits);
    const TraceLayout layout = trace_layout(n, keep);
    const auto dim_keep = static_cast<Eigen::Index>(layout.keep_base.size());
    const auto& m = rho.matrix();
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(dim_keep, dim_keep);
    for (Eigen::Index a = 0; a < dim_keep; ++a)
        for (Eigen::Index b = 0; b < dim_keep; ++b) {
            complex acc = 0;
            for (std::uint64_t eb : layout.env_base)
                acc += m(static_cast<Eigen::Index>(layout.keep_base[static_cast<std::size_t>(a)] | eb),
                         static_cast<Eigen::Index>(layout.keep_base[static_cast<std::size_t>(b)] | eb));
            out(a, b) = acc;
        }
    return DensityMatrix::from_matrix_unchecked(std::move(out));
}

// ============================================================================
// Fidelity and trace distance
// ============================================================================

namespace {

double clamp_fidelity(double f) {
    if (f < -1e-9 || f > 1.0 + 1e-9)
        throw std::runtime_error("fidelity: value " + std::to_string(f) +
                                 " outside [0,1] beyond tolerance");
    return std::clamp(f, 0.0, 1.0);
}

void check_same_dim(const char* op, Eigen::Index a, Eigen::Index b) {
    if (a != b)
        throw std::invalid_argument(describe(op, "dimension mismatch (" + std::to_string(a) +
                                                 " vs " + std::to_string(b) + ")"));
}

Eigen::MatrixXcd matrix_sqrt_psd(const Eigen::MatrixXcd& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m);
    Eigen::VectorXd vals = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * vals.asDiagonal() * es.eigenvectors().adjoint();
}

} // namespace

double fidelity(const StateVector& a, const StateVector& b) {
    check_same_dim("fidelity", a.dim(), b.dim());
    const complex overlap = a.amplitudes().dot(b.amplitudes());
    return clamp_fidelity(std::norm(overlap));
}

double fidelity(const StateVector& a, const DensityMatrix& b) {
    check_same_dim("fidelity", a.dim(), b.dim());
    const complex v = (a.amplitudes().adjoint() * b.matrix() * a.amplitudes())(0);
    return clamp_fidelity(v.real());
}

double fidelity(const DensityMatrix& a, const StateVector& b) { return fidelity(b, a); }

double fidelity(const DensityMatrix& a, const DensityMatrix& b) {
    check_same_dim("fidelity", a.dim(), b.dim());
    const Eigen::MatrixXcd root = matrix_sqrt_psd(a.matrix());
    Eigen::MatrixXcd inner = root * b.matrix() * root;
    inner = 0.5 * (inner + inner.adjoint().eval()); // re-hermitianize
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(inner, Eigen::EigenvaluesOnly);
    const double sum = es.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
    return clamp_fidelity(sum * sum);
}

double trace_distance(const DensityMatrix& a, const DensityMatrix& b) {
    check_same_dim("trace_distance", a.dim(), b.dim());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(a.matrix() - b.matrix(),
                                                       Eigen::EigenvaluesOnly);
    return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

// ============================================================================
// Measurement and postselection
// ============================================================================

MeasurementRecord measure_qubits(const StateVector& state, const std::vector<int>& indices,
                                 std::mt19937_64& rng) {
    const int n = state.num_qubits();
    check_indices("measure_qubits", indices, n, /*require_sorted=*/false);
    const int m = static_cast<int>(indices.size());
    const auto& amps = state.amplitudes();
    const std::uint64_t dim = std::uint64_t{1} << n;

    // Outcome index packs the measured bits in the order given.
    std::vector<double> probs(std::size_t{1} << m, 0.0);
    for (std::uint64_t b = 0; b < dim; ++b) {
        std::uint64_t o = 0;
        for (int j = 0; j < m; ++j)
            o = (o << 1) | ((b >> bit_position(n, indices[static_cast<std::size_t>(j)])) & 1);
        probs[o] += std::norm(amps(static_cast<Eigen::Index>(b)));
    }

    std::discrete_distribution<std::size_t> dist(probs.begin(), probs.end());
    const std::size_t outcome = dist(rng);
    const double p = probs[outcome];

    Eigen::VectorXcd collapsed = Eigen::VectorXcd::Zero(state.dim());
    const double scale = 1.0 / std::sqrt(p);
    for (std::uint64_t b = 0; b < dim; ++b) {
        std::uint64_t o = 0;
        for (int j = 0; j < m; ++j)
            o = (o << 1) | ((b >> bit_position(n, indices[static_cast<std::size_t>(j)])) & 1);
        if (o == outcome)
            collapsed(static_cast<Eigen::Index>(b)) = amps(static_cast<Eigen::Index>(b)) * scale;
    }

    MeasurementRecord rec{std::vector<int>(static_cast<std::size_t>(m)),
                          StateVector(n, std::move(collapsed)), p};
    for (int j = 0; j < m; ++j)
        rec.bits[static_cast<std::size_t>(j)] =
            static_cast<int>((outcome >> (m - 1 - j)) & 1);
    return rec;
}

PostselectionRecord postselect(const StateVector& state, const std::vector<int>& indices,
                               const std::vector<int>& bits) {
    const int n = state.num_qubits();
    check_indices("postselect", indices, n, /*require_sorted=*/false);
    if (bits.size() != indices.size())
        throw std::invalid_argument("postselect: indices and bits differ in length");
    if (static_cast<int>(indices.size()) == n)
        throw std::invalid_argument("postselect: cannot postselect every qubit");
    std::uint64_t sel_mask = 0, required = 0;
    for (std::size_t j = 0; j < indices.size(); ++j) {
        if (bits[j] != 0 && bits[j] != 1)
            throw std::invalid_argument("postselect: bits must be 0 or 1");
        const std::uint64_t mask = qubit_mask(n, indices[j]);
        sel_mask |= mask;
        if (bits[j]) required |= mask;
    }

    std::vector<int> remaining;
    for (int q = 0; q < n; ++q)
        if (!(sel_mask & qubit_mask(n, q))) remaining.push_back(q);
    const int k = static_cast<int>(remaining.size());

    const auto& amps = state.amplitudes();
    const std::uint64_t dim = std::uint64_t{1} << n;
    Eigen::VectorXcd reduced = Eigen::VectorXcd::Zero(Eigen::Index{1} << k);
    double p = 0;
    for (std::uint64_t b = 0; b < dim; ++b) {
        if ((b & sel_mask) != required) continue;
        const complex amp = amps(static_cast<Eigen::Index>(b));
        p += std::norm(amp);
        std::uint64_t r = 0;
        for (int j = 0; j < k; ++j)
            r = (r << 1) | ((b >> bit_position(n, remaining[static_cast<std::size_t>(j)])) & 1);
        reduced(static_cast<Eigen::Index>(r)) = amp;
    }
    if (p < 1e-12)
        throw std::runtime_error("postselect: impossible postselection (probability " +
                                 std::to_string(p) + " below 1e-12)");
    reduced /= std::sqrt(p);
    return PostselectionRecord{StateVector(k, std::move(reduced)), p};
}

} // namespace qcs
