#pragma once

#include <variant>
#include <vector>

#include "gpassivity/linalg.hpp"

namespace gpassivity {

// Exact evolution under a constant Hamiltonian for a fixed duration.
struct UnitarySegment {
    HermitianOperator hamiltonian;
    double duration = 0.0;
};

// rho -> sum_k p_k U_k rho U_k^dag, evaluated as an exact channel.
struct UnitaryMixture {
    std::vector<std::pair<double, Mat>> branches;  // (probability, unitary)

    static UnitaryMixture from_hamiltonians(
        const std::vector<std::tuple<double, HermitianOperator, double>>& branches);
};

struct JumpOperator {
    Mat op;
    double rate = 0.0;  // gamma >= 0
};

// Fixed-step RK4 integration of the Lindblad master equation.
struct LindbladSegment {
    HermitianOperator hamiltonian;
    std::vector<JumpOperator> jumps;
    double duration = 0.0;
    double dt = 1e-2;
};

// Measure {projectors}, apply the matching conditional unitary, all with
// probability chi; do nothing with probability 1 - chi.
struct LazyFeedback {
    std::vector<Mat> projectors;
    std::vector<Mat> unitaries;
    double chi = 1.0;
};

using ProtocolStep = std::variant<UnitarySegment, UnitaryMixture, LindbladSegment, LazyFeedback>;

struct Trajectory {
    std::vector<double> times;
    std::vector<DensityMatrix> states;

    const DensityMatrix& initial() const { return states.front(); }
    const DensityMatrix& final_state() const { return states.back(); }
};

DensityMatrix apply_unitary_mixture(const DensityMatrix& rho,
                                    const std::vector<std::pair<double, Mat>>& branches);

// Integrates d rho/dt = -i[H, rho] + sum_j gamma_j (L rho L^dag - {L^dag L, rho}/2)
// over [0, T], recording states at `sample_times` (plus t = 0 and t = T when
// absent). Trace drift beyond 1e-8 is an error, never silently renormalized.
Trajectory lindblad_evolve(const DensityMatrix& rho, const HermitianOperator& h,
                           const std::vector<JumpOperator>& jumps, double t_final, double dt,
                           std::vector<double> sample_times = {});

DensityMatrix lazy_feedback_channel(const DensityMatrix& rho, const std::vector<Mat>& projectors,
                                    const std::vector<Mat>& unitaries, double chi);

// Sequential application of the steps; states recorded on `sample_grid`
// (absolute times; instantaneous steps do not advance time). The final state
// is always recorded.
Trajectory run_protocol(const DensityMatrix& rho0, const std::vector<ProtocolStep>& steps,
                        const std::vector<double>& sample_grid);

// Conjugation by the site-local pi rotation about `axis` (for Z, flips the
// sign of <sigma_x> and <sigma_y> on that site).
DensityMatrix pi_pulse(const DensityMatrix& rho, int site, Axis axis);

}  // namespace gpassivity
