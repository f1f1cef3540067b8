#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "nldiss/fock.hpp"
#include "nldiss/liouvillian.hpp"

namespace nldiss {

class ProjectorGadget;

enum class Integrator {
    /// Dormand-Prince 5(4) in the interaction picture of diag(K): the Hadamard
    /// part (d_n + conj d_m) rho_nm is integrated exactly, the rest explicitly.
    /// Removes the step restriction from the large decay rates of high Fock
    /// levels. Fixed points are not preserved exactly and Tr rho only to the
    /// local error, so the trace is reset after every step.
    LawsonDopri5,
    /// Plain Dormand-Prince 5(4).
    Dopri5,
    /// Classical RK4 at PropagateOptions::fixed_step.
    Rk4Fixed,
};

Integrator parse_integrator(const std::string& name);
std::string to_string(Integrator method);

struct PropagateOptions {
    /// Absolute and relative local error target per step (RMS norm).
    double tol = 1e-9;
    Integrator method = Integrator::LawsonDopri5;
    double fixed_step = 0.0;
    /// Abort when the population of the last basis state exceeds the limit.
    bool truncation_guard = true;
    double top_population_limit = 1e-6;
    long max_steps = 20'000'000;
    /// When false only the final state is kept in Trajectory::states.
    bool keep_states = true;
    /// Called for every recorded grid point, in order.
    std::function<void(double, const DensityMatrix&)> observer;
};

struct StepDiagnostics {
    double time = 0.0;
    double trace_error = 0.0;
    double hermiticity_error = 0.0;
    double min_eigenvalue = 0.0;
    double top_population = 0.0;
};

struct Trajectory {
    std::vector<double> times;
    std::vector<DensityMatrix> states;
    std::vector<StepDiagnostics> diagnostics;
    long accepted_steps = 0;
    long rejected_steps = 0;
    long rhs_evaluations = 0;
    /// Largest top-level population seen over every accepted step.
    double max_top_population = 0.0;
    /// Largest trace error over every accepted step.
    double max_trace_error = 0.0;
    /// Largest |Tr rho - 1| produced by a single step before the trace is
    /// reset to one. Of the order of the local error for a healthy run.
    double max_step_trace_correction = 0.0;
};

/// Integrates drho/dt = L rho starting from rho0 at grid[0] and records the
/// state at every grid time. Throws TruncationBreachError, StepSizeUnderflowError
/// or CorruptedStateError.
Trajectory propagate(const MasterEquation& me, const DensityMatrix& rho0, std::span<const double> grid,
                     const PropagateOptions& options = {});
Trajectory propagate(const Generator& gen, const DensityMatrix& rho0, std::span<const double> grid,
                     const PropagateOptions& options = {});

struct SteadyOptions {
    /// Stop once ||L rho||_F falls below this.
    double tol = 1e-10;
    double t_max = 1e4;
    PropagateOptions propagate;
    /// An explicit integrator settles at a residual floor of roughly
    /// tol * ||L||. Once the residual has not dropped by 10% over this many
    /// accepted steps, the run continues with backward-Euler steps of growing
    /// size (sparse LU of I - hL), which carry the state to the exact limit.
    int stall_steps = 200;
    /// Largest dimension for the backward-Euler phase; above it a stalled
    /// run is returned unconverged.
    int implicit_max_dim = 160;
};

struct SteadyResult {
    DensityMatrix state;
    bool converged = false;
    double time = 0.0;
    double residual = 0.0;
    std::string method;
    /// Step counters of the integration; empty for direct solves.
    Trajectory stats;
};

/// Integrates until ||L rho||_F < tol or t_max. An unconverged result is
/// returned with converged = false rather than thrown.
SteadyResult evolve_to_steady(const MasterEquation& me, const DensityMatrix& rho0, const SteadyOptions& options = {});
SteadyResult evolve_to_steady(const Generator& gen, const DensityMatrix& rho0, const SteadyOptions& options = {});

/// ||P rho P - Tr{P rho0} |c><c|||_F for the gadget projector P and complement |c>.
double gadget_residual(const ProjectorGadget& g, const DensityMatrix& rho, double initial_weight);

/// Least-squares slope of -log(residual) against time over the samples whose
/// residual lies in [1e-8, 1e-2]. Throws InsufficientDecayError with fewer
/// than two such samples.
double decay_rate_fit(const Trajectory& traj, const ProjectorGadget& g);

/// n points from t0 to t1 inclusive, linear or geometric spacing.
std::vector<double> linear_grid(double t0, double t1, int n);
std::vector<double> log_grid(double t0, double t1, int n);

}  // namespace nldiss
