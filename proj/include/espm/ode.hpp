#pragma once

#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

namespace espm {

struct OdeSystem {
    int n = 0;
    std::function<void(double t, const double* y, double* f)> rhs;
    // Half-open index ranges with no rhs cross-coupling; the finite-difference
    // Jacobian is evaluated block-wise with grouped perturbations and the
    // Newton matrix factored per block. Defaults to one full block.
    std::vector<std::pair<int, int>> blocks;
};

struct OdeEvent {
    int id = 0;
    std::function<double(double t, const double* y)> g;
    int direction = 0;  // +1 fire on upcrossing, -1 on downcrossing, 0 on any
};

struct OdeOptions {
    double rtol = 1e-6;
    std::vector<double> atol;  // per component
    double h0 = 0.0;           // 0 = automatic
    double hmax = std::numeric_limits<double>::infinity();
    double hmin_rel = 1e-13;   // step-size collapse threshold, relative to span
    long max_steps = 2'000'000;
};

// Cubic Hermite interpolant over one accepted step.
struct DenseStep {
    double t0, t1;
    const std::vector<double>*y0, *y1, *f0, *f1;

    void eval(double t, std::vector<double>& out) const;
    double eval_component(double t, int i) const;
};

enum class OdeStatus { ReachedEnd, EventFired, Aborted };

struct OdeResult {
    OdeStatus status = OdeStatus::ReachedEnd;
    int event_id = -1;
    double t = 0.0;
    long steps = 0;       // attempted steps
    long accepted = 0;
    long error_rejects = 0;
    long newton_fails = 0;
    long rhs_evals = 0;
    long jacobians = 0;
};

// Adaptive BDF1/2 with a full Newton corrector, block finite-difference
// Jacobian, Hermite dense output, and event localization by bisection on the
// interpolant. Integrates y in place from t0 toward t1; returns on t1, on the
// first event crossing, or when on_step returns false. Throws on step-size
// collapse.
OdeResult integrate_bdf(const OdeSystem& sys, double t0, double t1, std::vector<double>& y,
                        const OdeOptions& opt, const std::vector<OdeEvent>& events,
                        const std::function<bool(const DenseStep&)>& on_step);

}  // namespace espm
