#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gpassivity/passivity.hpp"

namespace gpassivity {

// Two-spin heat exchange with an optional initial coherence between |01>
// and |10>. The cold spin is the system, the hot spin the single microbath.
struct CorrelatedHeatFlowParams {
    double beta_c = 1.0 / 3.0;
    double beta_h = 1.0 / 5.0;
    double c = -0.19;
    double coupling = 1.0;
    // "rotation": i(s+ s- - s- s+), couples to a real |01><10| coherence at
    // first order. "hopping": s+ s- + s- s+, which leaves populations blind
    // to a real coherence.
    std::string exchange_form = "rotation";
    double t_max = 3.0;
    int n_samples = 121;
};

struct CorrelatedHeatFlowResult {
    CorrelatedHeatFlowParams params;
    std::vector<double> times;
    std::vector<InequalityReport> reports;
    std::vector<double> q_c;
    std::vector<double> q_h;
    double min_ci = 0.0;
    double min_cci = 0.0;
    bool ci_violated = false;
    bool cci_violated = false;
};

CorrelatedHeatFlowResult correlated_heat_flow(const CorrelatedHeatFlowParams& params);

// Three-qubit chip with two simultaneous CNOT generators and a weak decay
// to a zero-temperature bath on every qubit.
struct HeatLeakParams {
    double gamma = 1e-3;
    double epsilon = 1.0;
    std::vector<double> betas = {1.0, 0.5, 0.1};
    std::vector<double> alphas = {1, 2, 3, 4, 5, 6};
    double t_max = 10.0;
    int n_samples = 4001;
    double dt = 0.0025;
    int cnot_control_state = 1;   // basis index of the control-on state
    std::string b_shift = "none";  // "none" | "min0"
};

struct HeatLeakResult {
    HeatLeakParams params;
    std::vector<double> times;
    std::map<double, std::vector<double>> alpha_series;
    std::map<double, std::optional<double>> first_violation;
    std::vector<std::vector<double>> polarization;  // <sigma_z^i>(t) per qubit
    double max_polarization_deviation = 0.0;        // vs the gamma = 0 run, t <= 3
    bool control_clean = false;                     // gamma = 0 run has no violations
    bool any_violation = false;
};

HeatLeakResult heat_leak_detection(const HeatLeakParams& params);

// One spin with initial x coherence dephasing against a three-spin microbath.
struct DephasingParams {
    double beta = 1.0;
    double beta_x = 0.5;
    std::vector<double> xis = {0.7, 0.5, 0.3};
    double t_max = 6.0;
    int n_samples = 121;
};

struct DephasingResult {
    DephasingParams params;
    DephasingBounds bounds;
};

DephasingResult dephasing_bounds(const DephasingParams& params);

struct DetectionCurve {
    std::vector<double> alphas;
    std::vector<double> chi_star;  // NaN where no chi in [0, 1] violates
    double chi_crit = 0.0;         // chi_star at alpha = 1
};

// Two two-spin microbaths, all-to-all hopping until t_evolve, then a lazy
// conditional flip of |uudd> onto |dduu>.
struct LazyDemonParams {
    double t_c = 1.5;
    double t_h = 2.5;
    double t_evolve = 1.0;
    double alpha_min = 1.0;
    double alpha_max = 6.0;
    double alpha_step = 0.1;
    double field_scale = 0.5;          // local Hamiltonians field_scale * sigma_z
    std::string b_shift = "min0";      // "none" | "min0"
    std::string measurement = "two-projector";  // or "full-basis"
    std::optional<double> chi;         // single-chi evaluation instead of the sweep
    double threshold = 1e-8;
};

struct LazyDemonResult {
    LazyDemonParams params;
    DetectionCurve curve;
    std::vector<double> delta_chi0;  // Delta<B^alpha> endpoints per alpha
    std::vector<double> delta_chi1;
    std::vector<double> delta_at_chi;  // filled in single-chi mode
    double alpha_opt = 0.0;            // argmin of chi_star
    double chi_star_min = 0.0;
    bool any_violation = false;
};

LazyDemonResult lazy_demon_sweep(const LazyDemonParams& params);

// Brute-force chi-grid oracle: smallest grid chi whose fully re-applied
// channel violates Delta<B^alpha> >= -threshold. NaN when none does.
double lazy_demon_chi_scan(const LazyDemonParams& params, double alpha, double chi_resolution);

}  // namespace gpassivity
