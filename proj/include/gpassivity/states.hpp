#pragma once

#include <optional>
#include <string>
#include <vector>

#include "gpassivity/linalg.hpp"

namespace gpassivity {

enum class Role { System, Microbath };

// One tensor factor of the setup. Microbaths carry an inverse temperature
// and start in the Gibbs state of their local Hamiltonian.
struct SubsystemSpec {
    std::string name;
    int dim = 2;
    Mat local_hamiltonian;  // on this factor alone
    Role role = Role::Microbath;
    std::optional<double> beta;  // required iff role == Microbath
};

// Which factors form the system and which the environment. Together they
// must cover every factor exactly once.
struct Partition {
    std::vector<int> system;
    std::vector<int> environment;
};

struct SetupDescriptor {
    std::vector<SubsystemSpec> subsystems;
    std::optional<HermitianOperator> initial_coupling;  // H_{I,0} on the full space
    std::optional<DensityMatrix> explicit_initial_state;
    Partition partition;

    std::vector<int> dims() const;
    long total_dim() const;
    void validate() const;
};

// The family of time-independent operators built from the initial state.
// b_sys / b_env live on their own factor subsets; b_tot and b_corr on the
// full space. log_partition is the identity component tr(b_tot)/dim, which
// equals ln Z0 for traceless local Hamiltonians.
struct BOperators {
    HermitianOperator b_tot;
    HermitianOperator b_sys;
    HermitianOperator b_env;
    HermitianOperator b_corr;
    double log_partition = 0.0;
};

// Expansion of a bipartite operator over orthonormal traceless Hermitian
// bases (normalized to tr(Z_i Z_j) = delta_ij) plus the identity component:
//   b_tot = b_a + b_b + b_int + identity_coefficient * I / (N_A N_B)
struct BDecomposition {
    HermitianOperator b_a;    // sum_i r_a[i] Z_i x I/N_B   (full space)
    HermitianOperator b_b;    // sum_j r_b[j] I/N_A x Z_j   (full space)
    HermitianOperator b_int;  // sum_ij t(i,j) Z_i x Z_j    (full space)
    RVec r_a;
    RVec r_b;
    Eigen::MatrixXd t;
    double identity_coefficient = 0.0;  // tr(b_tot)
};

// exp(-beta H) / tr[exp(-beta H)], spectrum-shifted before exponentiation.
DensityMatrix gibbs_state(const HermitianOperator& h, double beta);

// Tensor product of the system state and per-microbath Gibbs states, in
// subsystem order. The setup must not declare an initial coupling.
DensityMatrix product_initial_state(const SetupDescriptor& setup,
                                    const std::optional<DensityMatrix>& system_state);

// Coupled thermal state: the system and the microbath touched by the
// initial coupling form one thermal block at that bath's beta,
// exp(-beta_h (H_s + H_h + H_I0)) / Z_hs; remaining microbaths stay Gibbs.
DensityMatrix coupled_thermal_state(const SetupDescriptor& setup);

// Two qubits (cold, hot), local Hamiltonians sigma_z, with a real coherence
// C on the |01><10| block. PSD is validated at construction.
DensityMatrix correlated_pair_state(double beta_c, double beta_h, double c);

// Largest |C| for which correlated_pair_state stays PSD.
double correlated_pair_feasible_bound(double beta_c, double beta_h);

// -ln(rho0); requires min eigenvalue > 1e-12.
HermitianOperator b_operator(const DensityMatrix& rho0);

BOperators b_correlation_split(const DensityMatrix& rho0, const Partition& partition);

// Orthonormal traceless Hermitian basis (generalized Gell-Mann matrices,
// tr(Z_i Z_j) = delta_ij), size dim^2 - 1.
std::vector<Mat> gell_mann_basis(int dim);

BDecomposition b_general_decomposition(const HermitianOperator& b_tot, int dim_a, int dim_b);

// H_s^eff = -(1/beta_h) ln tr_h exp(-beta_h (H_s + H_I0 + H_h)) on the
// system factor. The joint space is ordered (system, bath).
HermitianOperator effective_system_hamiltonian(const HermitianOperator& h_s,
                                               const HermitianOperator& h_i0,
                                               const HermitianOperator& h_h, double beta_h);

}  // namespace gpassivity
