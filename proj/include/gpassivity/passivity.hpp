#pragma once

#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "gpassivity/dynamics.hpp"
#include "gpassivity/states.hpp"

namespace gpassivity {

struct PassivityCheck {
    bool passive = false;
    // On failure: adjacent positions (i, i+1) in the operator-sorted basis
    // where the state probabilities increase.
    std::pair<int, int> witness{-1, -1};
};

// (A, rho) passive: [A, rho] = 0 within tol * |A| * |rho| and, sorted by
// ascending A-eigenvalue, the rho-eigenvalues are non-increasing. Within
// degenerate A blocks the rho-eigenvalues are sorted descending first, so
// tie order is irrelevant.
PassivityCheck is_passive(const HermitianOperator& a, const DensityMatrix& rho, double tol = 1e-9);

struct PassiveFloor {
    DensityMatrix state;  // descending rho-eigenvalues on ascending A-eigenvectors
    double floor = 0.0;   // lowest <A> reachable from rho by mixtures of unitaries
};

PassiveFloor passive_floor(const DensityMatrix& rho, const HermitianOperator& a);

// tr(rho A) - passive floor, always >= 0.
double ergotropy(const DensityMatrix& rho, const HermitianOperator& a);

// <A>_pass - <A>_0: a rho_f-independent lower bound on Delta<A> over
// mixtures of unitaries, even when (A, rho0) is not passive.
double shifted_reference_bound(const DensityMatrix& rho0, const HermitianOperator& a);

// -tr(rho ln rho) in nats; 0 ln 0 = 0.
double von_neumann_entropy(const DensityMatrix& rho);

// D(rho2 | rho1) = tr[rho2 (ln rho2 - ln rho1)] >= 0. Throws
// InfiniteDivergenceError when rho2 has weight outside the support of rho1.
double relative_entropy(const DensityMatrix& rho2, const DensityMatrix& rho1);

// (B + shift)^alpha via the spectral decomposition. Eigenvalues of the
// shifted operator in (-1e-10, 0) are clipped to 0; anything lower is a
// DomainError telling the caller to shift.
HermitianOperator alpha_power(const HermitianOperator& b, double alpha,
                              std::optional<double> shift = std::nullopt);

// Delta<B^alpha>(t) = tr[(rho_t - rho_0) B^alpha] for each requested alpha.
std::map<double, std::vector<double>> alpha_gpi_series(const HermitianOperator& b,
                                                       const Trajectory& trajectory,
                                                       const std::vector<double>& alphas);

struct HierarchyCheck {
    double lhs = 0.0;  // Delta<B^q> / (q |B|^q), the smaller exponent
    double rhs = 0.0;  // Delta<B^p> / (p |B|^p), the larger exponent
    bool holds = false;
};

// Normalized-delta ordering for exponents p > q > 0: the smaller exponent
// side dominates. The normalized deltas are non-increasing in the exponent
// and nonnegative for mixture-of-unitaries finals.
HierarchyCheck hierarchy_check(const HermitianOperator& b, const DensityMatrix& rho0,
                               const DensityMatrix& rhof, double p, double q, double tol = 1e-10);

// d_n = Delta<B^n> / (n |B|^n) for n = 1..n_max.
std::vector<double> hierarchy_chain(const HermitianOperator& b, const DensityMatrix& rho0,
                                    const DensityMatrix& rhof, int n_max);

// Terms appearing when the initial state is a coupled thermal state.
struct CoupledTerms {
    double bare_beta_q = 0.0;      // sum_k beta_k q_k
    double coupling_energy = 0.0;  // beta_h * Delta<H_I0>
    double dressing = 0.0;         // beta_h * Delta<H_s - H_s_eff>
};

struct InequalityReport {
    double time = 0.0;
    double ci_lhs = 0.0;        // dS_sys + sum_k beta_k q_k
    double obs_only_lhs = 0.0;  // Delta<B_sys> + sum_k beta_k q_k
    double cci_lhs = 0.0;       // dS_sys + Delta<B_tot> - Delta<B_sys>
    double delta_s_sys = 0.0;
    double delta_s_tot = 0.0;
    double delta_b_tot = 0.0;
    double delta_b_sys = 0.0;
    std::vector<double> beta_q;  // per microbath, subsystem order
    std::optional<CoupledTerms> coupled_terms;
    double relative_entropy_tot = 0.0;
    double relative_entropy_sys = 0.0;
    std::map<double, double> alpha_deltas;
    bool ci_violated = false;
    bool cci_violated = false;
    bool obs_only_violated = false;
};

// Per-time evaluation of the CI, its observable-only analog, the CCI and the
// alpha family along a trajectory. The identity
// Delta<B_tot> = dS_tot + D(rho_t | rho_0) is asserted at every time.
std::vector<InequalityReport> ci_cci_report(const SetupDescriptor& setup,
                                            const DensityMatrix& rho0,
                                            const Trajectory& trajectory,
                                            const std::vector<double>& alphas = {});

// Violation flag threshold: lhs < -1e-8 * max(1, running max |lhs|).
bool flags_violation(double lhs, double running_scale);

// Inputs for the dephasing covariance bounds; all operators on the full
// setup space. The interaction must commute with both h_env and the system
// Hamiltonian (verified numerically).
struct DephasingOperators {
    HermitianOperator h_env;          // environment Hamiltonian
    HermitianOperator h_sys;          // system Hamiltonian
    HermitianOperator sigma_x_sys;    // system coherence observable
    HermitianOperator h_interaction;  // dephasing coupling
    double beta = 1.0;
    double beta_x = 0.5;
};

struct DephasingBounds {
    std::vector<double> times;
    std::vector<double> corr_1;  // cov[H_env, sigma_x](t)
    std::vector<double> lower_1;
    std::vector<double> upper_1;
    std::vector<double> corr_2;  // cov[P(H_env), sigma_x](t)
    std::vector<double> lower_2;
    std::vector<double> upper_2;
    double c0 = 0.0;  // time- and process-independent alpha=3 constant
    double var_h_env = 0.0;
    double var_p = 0.0;
    std::vector<double> var_sigma_x;  // for correlation-normalized plots
};

// Lower bounds from the alpha = 2, 3 global passivity inequalities of the
// shifted operator beta (H_env - E0) + beta_x (sigma_x + 1); upper bounds
// from the shifted-reference bound after a pi pulse. The sandwich
// lower <= measured <= upper is asserted at every recorded time.
DephasingBounds dephasing_covariance_bounds(const DephasingOperators& ops,
                                            const Trajectory& trajectory);

struct DressingTerms {
    HermitianOperator exact;        // ln f(-beta eps Hs) on the system factor
    HermitianOperator first_order;  // ln(Z_b0) I - beta eps <Hb>_0 Hs
    bool used_series = false;
};

// Dressing of the system Hamiltonian induced by a dephasing coupling
// eps Hs x Hb to a bath thermal at beta, where [Hb, h_b] = 0. Equals
// beta (H_s - H_s_eff) up to the computation path.
DressingTerms dephasing_dressing_term(const HermitianOperator& hs_factor,
                                      const HermitianOperator& hb_factor,
                                      const HermitianOperator& h_b, double beta, double epsilon);

}  // namespace gpassivity
