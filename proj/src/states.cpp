#include "gpassivity/states.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

namespace gpassivity {

std::vector<int> SetupDescriptor::dims() const {
    std::vector<int> d;
    for (const auto& s : subsystems) d.push_back(s.dim);
    return d;
}

long SetupDescriptor::total_dim() const {
    long total = 1;
    for (const auto& s : subsystems) total *= s.dim;
    return total;
}

void SetupDescriptor::validate() const {
    const int n = static_cast<int>(subsystems.size());
    if (n == 0) throw Error("setup has no subsystems");
    for (const auto& s : subsystems) {
        if (s.local_hamiltonian.rows() != s.dim || s.local_hamiltonian.cols() != s.dim)
            throw Error("subsystem '" + s.name + "': local Hamiltonian dimension mismatch");
        if ((s.role == Role::Microbath) != s.beta.has_value())
            throw Error("subsystem '" + s.name + "': beta must be present exactly for microbaths");
        if (s.beta && *s.beta < 0) throw Error("subsystem '" + s.name + "': beta must be >= 0");
    }
    std::vector<int> covered(n, 0);
    for (int q : partition.system) {
        if (q < 0 || q >= n) throw Error("partition: system index out of range");
        covered[q]++;
    }
    for (int q : partition.environment) {
        if (q < 0 || q >= n) throw Error("partition: environment index out of range");
        covered[q]++;
    }
    for (int q = 0; q < n; ++q)
        if (covered[q] != 1) throw Error("partition must cover every factor exactly once");
    if (explicit_initial_state && explicit_initial_state->dim() != total_dim())
        throw Error("explicit initial state dimension does not match the setup");
    if (initial_coupling && initial_coupling->dim() != total_dim())
        throw Error("initial coupling dimension does not match the setup");
}

DensityMatrix gibbs_state(const HermitianOperator& h, double beta) {
    if (beta < 0) throw Error("gibbs_state: beta must be >= 0");
    const EigenSystem& es = h.eig();
    const double shift = es.eigenvalues.minCoeff();
    RVec weights(es.eigenvalues.size());
    for (int i = 0; i < weights.size(); ++i)
        weights[i] = std::exp(-beta * (es.eigenvalues[i] - shift));
    weights /= weights.sum();
    return DensityMatrix(
        HermitianOperator::from_eigensystem({weights, es.eigenvectors}, h.dims()));
}

DensityMatrix product_initial_state(const SetupDescriptor& setup,
                                    const std::optional<DensityMatrix>& system_state) {
    setup.validate();
    if (setup.initial_coupling)
        throw Error("setup declares an initial coupling; use coupled_thermal_state");
    const bool has_system = std::any_of(setup.subsystems.begin(), setup.subsystems.end(),
                                        [](const SubsystemSpec& s) { return s.role == Role::System; });
    if (has_system != system_state.has_value())
        throw Error("system_state must be given exactly when a system subsystem exists");

    Mat rho = Mat::Identity(1, 1);
    for (const auto& s : setup.subsystems) {
        if (s.role == Role::System) {
            if (system_state->dim() != s.dim)
                throw Error("system state dimension does not match subsystem '" + s.name + "'");
            const double min_eig = system_state->eig().eigenvalues.minCoeff();
            if (min_eig <= 1e-12)
                throw SingularStateError(
                    "system state is rank deficient; its B operator is undefined", min_eig);
            rho = kron(rho, system_state->matrix()).eval();
        } else {
            HermitianOperator local(s.local_hamiltonian, {s.dim});
            rho = kron(rho, gibbs_state(local, *s.beta).matrix()).eval();
        }
    }
    return DensityMatrix(rho, setup.dims());
}

namespace {

// Factors on which an operator acts non-trivially (not proportional to
// identity on that factor), detected by comparing against the partial trace.
std::vector<int> support_factors(const HermitianOperator& op) {
    std::vector<int> support;
    const auto& dims = op.dims();
    if (op.matrix().cwiseAbs().maxCoeff() < 1e-14) return support;
    for (int q = 0; q < static_cast<int>(dims.size()); ++q) {
        std::vector<int> others;
        for (int p = 0; p < static_cast<int>(dims.size()); ++p)
            if (p != q) others.push_back(p);
        if (others.empty()) {
            support.push_back(q);
            continue;
        }
        Mat reduced = partial_trace(op.matrix(), others, dims);
        Mat rebuilt = embed_on_factors(reduced / static_cast<double>(dims[q]), others, dims);
        if ((rebuilt - op.matrix()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, operator_norm(op)))
            support.push_back(q);
    }
    return support;
}

}  // namespace

DensityMatrix coupled_thermal_state(const SetupDescriptor& setup) {
    setup.validate();
    if (!setup.initial_coupling) throw Error("coupled_thermal_state requires an initial coupling");
    const auto dims = setup.dims();
    const int n = static_cast<int>(dims.size());

    std::vector<int> support = support_factors(*setup.initial_coupling);
    std::set<int> block(setup.partition.system.begin(), setup.partition.system.end());
    std::optional<int> coupled_bath;
    for (int q : support) {
        if (block.count(q)) continue;
        if (setup.subsystems[q].role != Role::Microbath)
            throw Error("initial coupling acts on a non-microbath factor outside the system");
        if (coupled_bath && *coupled_bath != q)
            throw Error("initial coupling acts on more than one microbath");
        coupled_bath = q;
    }
    if (!coupled_bath) {
        // Zero (or system-only) coupling: thermalize the system with the
        // first microbath's beta so the decoupled limit is well defined.
        for (int q = 0; q < n; ++q)
            if (setup.subsystems[q].role == Role::Microbath) {
                coupled_bath = q;
                break;
            }
        if (!coupled_bath) throw Error("coupled_thermal_state requires at least one microbath");
    }
    block.insert(*coupled_bath);
    const double beta_h = *setup.subsystems[*coupled_bath].beta;

    std::vector<int> block_factors(block.begin(), block.end());
    std::vector<int> block_dims;
    long block_dim = 1;
    for (int q : block_factors) {
        block_dims.push_back(dims[q]);
        block_dim *= dims[q];
    }

    // H_block = sum of local Hamiltonians on the block + H_I0 restricted to it.
    Mat h_block = Mat::Zero(block_dim, block_dim);
    for (size_t k = 0; k < block_factors.size(); ++k)
        h_block += embed_local(setup.subsystems[block_factors[k]].local_hamiltonian,
                               static_cast<int>(k), block_dims);
    std::vector<int> rest;
    for (int q = 0; q < n; ++q)
        if (!block.count(q)) rest.push_back(q);
    Mat coupling_block = rest.empty()
                             ? setup.initial_coupling->matrix()
                             : partial_trace(setup.initial_coupling->matrix(), block_factors, dims) /
                                   static_cast<double>(setup.total_dim() / block_dim);
    h_block += coupling_block;

    DensityMatrix block_state = gibbs_state(HermitianOperator(h_block, block_dims), beta_h);

    // Assemble in subsystem order: thermal block factors interleaved with
    // the remaining Gibbs factors.
    Mat rho = embed_on_factors(block_state.matrix(), block_factors, dims);
    for (int q : rest) {
        if (setup.subsystems[q].role != Role::Microbath)
            throw Error("factors outside the coupled block must be microbaths");
        HermitianOperator local(setup.subsystems[q].local_hamiltonian, {dims[q]});
        Mat g = gibbs_state(local, *setup.subsystems[q].beta).matrix();
        rho = (rho * embed_on_factors(g, {q}, dims)).eval();
    }
    return DensityMatrix(rho, dims);
}

double correlated_pair_feasible_bound(double beta_c, double beta_h) {
    return 1.0 / (4.0 * std::cosh(beta_c) * std::cosh(beta_h));
}

DensityMatrix correlated_pair_state(double beta_c, double beta_h, double c) {
    const Mat sz = pauli_matrix(Axis::Z);
    Mat rho = kron(gibbs_state(HermitianOperator(sz, {2}), beta_c).matrix(),
                   gibbs_state(HermitianOperator(sz, {2}), beta_h).matrix());
    rho(1, 2) += c;
    rho(2, 1) += c;
    const double bound = correlated_pair_feasible_bound(beta_c, beta_h);
    if (std::abs(c) > bound + 1e-12) {
        std::ostringstream msg;
        msg << "correlation C = " << c << " is infeasible; the state stays PSD only for |C| <= "
            << bound;
        throw InfeasibleCorrelationError(msg.str(), bound);
    }
    return DensityMatrix(rho, {2, 2});
}

HermitianOperator b_operator(const DensityMatrix& rho0) {
    const double min_eig = rho0.eig().eigenvalues.minCoeff();
    if (min_eig <= 1e-12) {
        std::ostringstream msg;
        msg << "state is singular (eigenvalue " << min_eig << "); -ln(rho) is undefined";
        throw SingularStateError(msg.str(), min_eig);
    }
    return matrix_function(rho0, [](double x) { return -std::log(x); },
                           FunctionDomain{0.0, true});
}

BOperators b_correlation_split(const DensityMatrix& rho0, const Partition& partition) {
    const auto& dims = rho0.dims();
    std::vector<int> sys = partition.system;
    std::vector<int> env = partition.environment;
    std::sort(sys.begin(), sys.end());
    std::sort(env.begin(), env.end());
    if (sys.empty() || env.empty())
        throw Error("b_correlation_split needs a nonempty system and environment");

    HermitianOperator b_tot = b_operator(rho0);
    DensityMatrix rho_sys(partial_trace(rho0, sys));
    DensityMatrix rho_env(partial_trace(rho0, env));
    HermitianOperator b_sys = b_operator(rho_sys);
    HermitianOperator b_env = b_operator(rho_env);
    Mat b_corr = b_tot.matrix() - embed_on_factors(b_sys.matrix(), sys, dims) -
                 embed_on_factors(b_env.matrix(), env, dims);

    BOperators out;
    out.b_tot = b_tot;
    out.b_sys = b_sys;
    out.b_env = b_env;
    out.b_corr = HermitianOperator(b_corr, dims);
    out.log_partition = b_tot.trace() / static_cast<double>(b_tot.dim());
    return out;
}

std::vector<Mat> gell_mann_basis(int dim) {
    if (dim < 2) throw Error("gell_mann_basis requires dim >= 2");
    std::vector<Mat> basis;
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    for (int j = 0; j < dim; ++j) {
        for (int k = j + 1; k < dim; ++k) {
            Mat sym = Mat::Zero(dim, dim);
            sym(j, k) = inv_sqrt2;
            sym(k, j) = inv_sqrt2;
            basis.push_back(sym);
            Mat asym = Mat::Zero(dim, dim);
            asym(j, k) = Cplx(0, -inv_sqrt2);
            asym(k, j) = Cplx(0, inv_sqrt2);
            basis.push_back(asym);
        }
    }
    for (int l = 1; l < dim; ++l) {
        Mat diag = Mat::Zero(dim, dim);
        const double norm = 1.0 / std::sqrt(static_cast<double>(l) * (l + 1));
        for (int j = 0; j < l; ++j) diag(j, j) = norm;
        diag(l, l) = -static_cast<double>(l) * norm;
        basis.push_back(diag);
    }
    return basis;
}

BDecomposition b_general_decomposition(const HermitianOperator& b_tot, int dim_a, int dim_b) {
    if (b_tot.dim() != static_cast<long>(dim_a) * dim_b)
        throw Error("b_general_decomposition: dimensions do not match the operator");
    const std::vector<Mat> za = gell_mann_basis(dim_a);
    const std::vector<Mat> zb = gell_mann_basis(dim_b);
    const Mat ia = Mat::Identity(dim_a, dim_a);
    const Mat ib = Mat::Identity(dim_b, dim_b);
    const Mat& m = b_tot.matrix();

    BDecomposition out;
    out.r_a.resize(za.size());
    out.r_b.resize(zb.size());
    out.t.resize(za.size(), zb.size());
    Mat ba = Mat::Zero(m.rows(), m.cols());
    Mat bb = Mat::Zero(m.rows(), m.cols());
    Mat bint = Mat::Zero(m.rows(), m.cols());
    for (size_t i = 0; i < za.size(); ++i) {
        const Mat zi_ib = kron(za[i], ib);
        out.r_a[i] = (m * zi_ib).trace().real();
        ba += out.r_a[i] / dim_b * zi_ib;
    }
    for (size_t j = 0; j < zb.size(); ++j) {
        const Mat ia_zj = kron(ia, zb[j]);
        out.r_b[j] = (m * ia_zj).trace().real();
        bb += out.r_b[j] / dim_a * ia_zj;
    }
    for (size_t i = 0; i < za.size(); ++i) {
        for (size_t j = 0; j < zb.size(); ++j) {
            const Mat zz = kron(za[i], zb[j]);
            out.t(i, j) = (m * zz).trace().real();
            bint += out.t(i, j) * zz;
        }
    }
    out.identity_coefficient = m.trace().real();
    const std::vector<int> dims = {dim_a, dim_b};
    out.b_a = HermitianOperator(ba, dims);
    out.b_b = HermitianOperator(bb, dims);
    out.b_int = HermitianOperator(bint, dims);
    return out;
}

HermitianOperator effective_system_hamiltonian(const HermitianOperator& h_s,
                                               const HermitianOperator& h_i0,
                                               const HermitianOperator& h_h, double beta_h) {
    if (beta_h <= 0) throw Error("effective_system_hamiltonian: beta_h must be positive");
    const int ds = h_s.dim();
    const int dh = h_h.dim();
    const std::vector<int> dims = {ds, dh};
    if (h_i0.dim() != static_cast<long>(ds) * dh)
        throw Error("effective_system_hamiltonian: coupling dimension mismatch");
    Mat joint = embed_local(h_s.matrix(), 0, dims) + embed_local(h_h.matrix(), 1, dims) +
                h_i0.matrix();
    HermitianOperator h_joint(joint, dims);
    // Work with the shifted spectrum to avoid overflow, then undo the shift.
    const double shift = h_joint.eig().eigenvalues.minCoeff();
    HermitianOperator weight = matrix_function(
        h_joint, [&](double x) { return std::exp(-beta_h * (x - shift)); });
    Mat reduced = partial_trace(weight.matrix(), {0}, dims);
    HermitianOperator log_reduced = matrix_function(HermitianOperator(reduced, {ds}),
                                                    [](double x) { return std::log(x); },
                                                    FunctionDomain{0.0, true});
    Mat out = -(1.0 / beta_h) * log_reduced.matrix() + shift * Mat::Identity(ds, ds);
    return HermitianOperator(out, {ds});
}

}  // namespace gpassivity
