#include "espm/ode.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

namespace espm {

void DenseStep::eval(double t, std::vector<double>& out) const {
    const double h = t1 - t0;
    const double th = (t - t0) / h;
    const double h00 = (1.0 + 2.0 * th) * (1.0 - th) * (1.0 - th);
    const double h10 = th * (1.0 - th) * (1.0 - th);
    const double h01 = th * th * (3.0 - 2.0 * th);
    const double h11 = th * th * (th - 1.0);
    const int n = static_cast<int>(y0->size());
    out.resize(n);
    for (int i = 0; i < n; ++i)
        out[i] = h00 * (*y0)[i] + h * h10 * (*f0)[i] + h01 * (*y1)[i] + h * h11 * (*f1)[i];
}

double DenseStep::eval_component(double t, int i) const {
    const double h = t1 - t0;
    const double th = (t - t0) / h;
    const double h00 = (1.0 + 2.0 * th) * (1.0 - th) * (1.0 - th);
    const double h10 = th * (1.0 - th) * (1.0 - th);
    const double h01 = th * th * (3.0 - 2.0 * th);
    const double h11 = th * th * (th - 1.0);
    return h00 * (*y0)[i] + h * h10 * (*f0)[i] + h01 * (*y1)[i] + h * h11 * (*f1)[i];
}

namespace {

class BdfIntegrator {
  public:
    BdfIntegrator(const OdeSystem& sys, const OdeOptions& opt)
        : sys_(sys), opt_(opt), n_(sys.n) {
        blocks_ = sys.blocks;
        if (blocks_.empty()) blocks_.push_back({0, n_});
        jac_.resize(blocks_.size());
        lu_.resize(blocks_.size());
        for (size_t b = 0; b < blocks_.size(); ++b) {
            int m = blocks_[b].second - blocks_[b].first;
            jac_[b].resize(m, m);
        }
        y_.resize(n_);
        f_.resize(n_);
        y_prev_.resize(n_);
        y_prev2_.resize(n_);
        y_try_.resize(n_);
        f_try_.resize(n_);
        y_pred_.resize(n_);
        psi_.resize(n_);
        resid_.resize(n_);
        dx_.resize(n_);
        f_pert_.resize(n_);
        y_pert_.resize(n_);
        weights_.resize(n_);
    }

    OdeResult run(double t0, double t1, std::vector<double>& y,
                  const std::vector<OdeEvent>& events,
                  const std::function<bool(const DenseStep&)>& on_step) {
        OdeResult res;
        t_ = t0;
        span_ = t1 - t0;
        y_ = y;
        eval_rhs(t_, y_.data(), f_.data());
        update_weights(y_);

        double h = opt_.h0 > 0 ? opt_.h0 : initial_step(t1);
        int order = 1;
        int history = 0;  // how many previous states are available
        double h_prev = 0.0, h_prev2 = 0.0;
        int consecutive_rejects = 0;
        jac_ok_ = false;

        while (t_ < t1) {
            if (res.steps >= opt_.max_steps)
                throw std::runtime_error("ODE integrator exceeded max step count at t = " +
                                         std::to_string(t_));
            const double hmin = 64.0 * std::numeric_limits<double>::epsilon() *
                                std::max({std::abs(t_), std::abs(t1) * 1e-3, 1e-30});
            h = std::min({h, opt_.hmax, t1 - t_});
            if (h < hmin) {
                if (t1 - t_ < hmin) break;  // nothing left to integrate
                if (++at_hmin_ > 12)
                    throw std::runtime_error(
                        "step-size collapse at t = " + std::to_string(t_) + " s (h = " +
                        std::to_string(h) + ", last outcome " + last_outcome_ + ", err = " +
                        std::to_string(err_) + ", worst component " +
                        std::to_string(worst_comp_) + ")");
                h = hmin;
            } else {
                at_hmin_ = 0;
            }

            StepOutcome out = attempt_step(h, order, history, h_prev, h_prev2);
            ++res.steps;
            if (out == StepOutcome::NewtonFail) {
                ++res.newton_fails;
                if (!jac_was_fresh_) {
                    refresh_jacobian();
                    ++res.jacobians;
                    continue;  // retry same h with fresh Jacobian
                }
                h *= 0.25;
                order = 1;
                ++consecutive_rejects;
                continue;
            }
            if (out == StepOutcome::ErrorReject) {
                ++res.error_rejects;
                double fac = 0.9 * std::pow(1.0 / err_, 1.0 / (order + 1));
                h *= std::clamp(fac, 0.1, 0.5);
                if (++consecutive_rejects >= 4) {
                    order = 1;
                    jac_ok_ = false;
                }
                continue;
            }
            consecutive_rejects = 0;
            ++res.accepted;

            // accepted: y_try_/f_try_ hold the new state
            DenseStep dense{t_, t_ + h, &y_, &y_try_, &f_, &f_try_};

            // event localization on the interpolant
            int fired = -1;
            double t_event = t_ + h;
            for (const auto& ev : events) {
                double g0 = ev.g(t_, y_.data());
                double g1 = ev.g(t_ + h, y_try_.data());
                bool up = ev.direction >= 0 && g0 < 0.0 && g1 >= 0.0;
                bool down = ev.direction <= 0 && g0 > 0.0 && g1 <= 0.0;
                if (!(up || down)) continue;
                double te = locate(dense, ev, t_, t_ + h);
                if (te < t_event) {
                    t_event = te;
                    fired = ev.id;
                }
            }

            if (fired >= 0) {
                std::vector<double> y_event(n_);
                dense.eval(t_event, y_event);
                y_try_ = y_event;
                eval_rhs(t_event, y_try_.data(), f_try_.data());
                DenseStep trunc{t_, t_event, &y_, &y_try_, &f_, &f_try_};
                bool keep = on_step(trunc);
                t_ = t_event;
                y_.swap(y_try_);
                f_.swap(f_try_);
                y = y_;
                res.status = keep ? OdeStatus::EventFired : OdeStatus::Aborted;
                res.event_id = fired;
                res.t = t_;
                res.rhs_evals = rhs_evals_;
                return res;
            }

            bool keep = on_step(dense);
            y_prev2_.swap(y_prev_);
            h_prev2 = h_prev;
            y_prev_ = y_;
            h_prev = h;
            history = std::min(history + 1, 2);
            y_.swap(y_try_);
            f_.swap(f_try_);
            t_ += h;
            update_weights(y_);
            if (!keep) {
                y = y_;
                res.status = OdeStatus::Aborted;
                res.t = t_;
                res.rhs_evals = rhs_evals_;
                return res;
            }

            double fac = err_ > 0 ? 0.9 * std::pow(1.0 / err_, 1.0 / (order + 1)) : 4.0;
            h *= std::clamp(fac, 0.2, 4.0);
            if (order == 1 && history >= 2) order = 2;
        }
        y = y_;
        res.status = OdeStatus::ReachedEnd;
        res.t = t_;
        res.rhs_evals = rhs_evals_;
        return res;
    }

  private:
    enum class StepOutcome { Accepted, ErrorReject, NewtonFail };

    void eval_rhs(double t, const double* yv, double* fv) {
        sys_.rhs(t, yv, fv);
        ++rhs_evals_;
    }

    void update_weights(const std::vector<double>& yref) {
        for (int i = 0; i < n_; ++i)
            weights_[i] = opt_.atol[i] + opt_.rtol * std::abs(yref[i]);
    }

    double wrms(const std::vector<double>& v) const {
        double s = 0.0;
        for (int i = 0; i < n_; ++i) {
            double r = v[i] / weights_[i];
            s += r * r;
        }
        return std::sqrt(s / n_);
    }

    double initial_step(double t1) {
        double fn = wrms(f_);
        double h = fn > 0 ? 0.01 / fn : (t1 - t_) / 10.0;
        return std::min({h, opt_.hmax, (t1 - t_) / 10.0 + 1e-300});
    }

    // Variable-step BDF; solves y - beta*h*f(t+h,y) = psi. Predictors are
    // built from the y-history alone: an f-based extrapolation would amplify
    // the Newton residue of stiff slaved components by the fastest eigenvalue
    // and wreck the error estimate.
    StepOutcome attempt_step(double h, int order, int history, double h_prev, double h_prev2) {
        double beta;
        double err_coeff;  // maps |y_corr - y_pred| to the LTE estimate
        if (order == 2 && history >= 2) {
            double w = h / h_prev;
            double denom = 1.0 + 2.0 * w;
            beta = (1.0 + w) / denom;
            for (int i = 0; i < n_; ++i)
                psi_[i] = ((1.0 + w) * (1.0 + w) * y_[i] - w * w * y_prev_[i]) / denom;
            // quadratic extrapolation through the last three states
            for (int i = 0; i < n_; ++i) {
                double f12 = (y_[i] - y_prev_[i]) / h_prev;
                double f01 = (y_prev_[i] - y_prev2_[i]) / h_prev2;
                double f012 = (f12 - f01) / (h_prev + h_prev2);
                y_pred_[i] = y_[i] + h * f12 + h * (h + h_prev) * f012;
            }
            double lte_c = 2.0 / 9.0 * h * h * h;
            double pred_c = h * (h + h_prev) * (h + h_prev + h_prev2) / 6.0;
            err_coeff = lte_c / (lte_c + pred_c);
        } else if (history >= 1) {
            order = 1;
            beta = 1.0;
            psi_ = y_;
            for (int i = 0; i < n_; ++i)
                y_pred_[i] = y_[i] + h * (y_[i] - y_prev_[i]) / h_prev;
            err_coeff = h / (2.0 * h + h_prev);
        } else {
            // very first step: forward-Euler predictor (y0 is caller-supplied)
            order = 1;
            beta = 1.0;
            psi_ = y_;
            for (int i = 0; i < n_; ++i) y_pred_[i] = y_[i] + h * f_[i];
            err_coeff = 0.5;
        }

        if (!jac_ok_) {
            refresh_jacobian();
        }
        factor(h * beta);
        jac_was_fresh_ = jac_fresh_;

        // Newton iteration from the predictor
        y_try_ = y_pred_;
        double t_new = t_ + h;
        double prev_norm = std::numeric_limits<double>::infinity();
        bool converged = false;
        for (int it = 0; it < 8; ++it) {
            try {
                eval_rhs(t_new, y_try_.data(), f_try_.data());
            } catch (const std::exception& e) {
                last_outcome_ = std::string("newton-rhs-throw: ") + e.what();
                return StepOutcome::NewtonFail;  // rhs rejected iterate
            }
            for (int i = 0; i < n_; ++i)
                resid_[i] = y_try_[i] - beta * h * f_try_[i] - psi_[i];
            solve(resid_, dx_);
            for (int i = 0; i < n_; ++i) y_try_[i] -= dx_[i];
            double norm = wrms(dx_);
            if (!std::isfinite(norm)) {
                last_outcome_ = "newton-nonfinite";
                return StepOutcome::NewtonFail;
            }
            if (norm < 1e-4) {
                converged = true;
                break;
            }
            if (it >= 2 && norm > 0.9 * prev_norm) {
                last_outcome_ = "newton-diverged";
                return StepOutcome::NewtonFail;
            }
            prev_norm = norm;
        }
        if (!converged) {
            last_outcome_ = "newton-slow";
            return StepOutcome::NewtonFail;
        }
        try {
            eval_rhs(t_new, y_try_.data(), f_try_.data());
        } catch (const std::exception&) {
            return StepOutcome::NewtonFail;
        }

        double s = 0.0;
        double worst = 0.0;
        for (int i = 0; i < n_; ++i) {
            double r = err_coeff * (y_try_[i] - y_pred_[i]) / weights_[i];
            s += r * r;
            if (std::abs(r) > worst) {
                worst = std::abs(r);
                worst_comp_ = i;
            }
        }
        err_ = std::sqrt(s / n_);
        if (!std::isfinite(err_)) return StepOutcome::NewtonFail;
        if (err_ > 1.0) {
            last_outcome_ = "error-reject";
            return StepOutcome::ErrorReject;
        }
        last_outcome_ = "accepted";
        jac_fresh_ = false;  // reuse until Newton degrades
        return StepOutcome::Accepted;
    }

    void refresh_jacobian() {
        // f_ already holds rhs(t_, y_)
        const double srur = std::sqrt(std::numeric_limits<double>::epsilon());
        int max_m = 0;
        for (auto& b : blocks_) max_m = std::max(max_m, b.second - b.first);
        for (int k = 0; k < max_m; ++k) {
            y_pert_ = y_;
            for (size_t b = 0; b < blocks_.size(); ++b) {
                int j = blocks_[b].first + k;
                if (j >= blocks_[b].second) continue;
                double dy = srur * std::max(std::abs(y_[j]), 100.0 * opt_.atol[j]);
                if (y_[j] < 0) dy = -dy;
                y_pert_[j] += dy;
            }
            eval_rhs(t_, y_pert_.data(), f_pert_.data());
            for (size_t b = 0; b < blocks_.size(); ++b) {
                int j = blocks_[b].first + k;
                if (j >= blocks_[b].second) continue;
                double dy = y_pert_[j] - y_[j];
                int lo = blocks_[b].first, hi = blocks_[b].second;
                for (int i = lo; i < hi; ++i)
                    jac_[b](i - lo, k) = (f_pert_[i] - f_[i]) / dy;
            }
        }
        jac_ok_ = true;
        jac_fresh_ = true;
        factored_hb_ = -1.0;
    }

    void factor(double hb) {
        if (hb == factored_hb_) return;
        for (size_t b = 0; b < blocks_.size(); ++b) {
            int m = blocks_[b].second - blocks_[b].first;
            Eigen::MatrixXd M = Eigen::MatrixXd::Identity(m, m) - hb * jac_[b];
            lu_[b].compute(M);
        }
        factored_hb_ = hb;
    }

    void solve(const std::vector<double>& rhs, std::vector<double>& out) {
        for (size_t b = 0; b < blocks_.size(); ++b) {
            int lo = blocks_[b].first, m = blocks_[b].second - blocks_[b].first;
            Eigen::Map<const Eigen::VectorXd> r(rhs.data() + lo, m);
            Eigen::VectorXd x = lu_[b].solve(r);
            for (int i = 0; i < m; ++i) out[lo + i] = x[i];
        }
    }

    double locate(const DenseStep& dense, const OdeEvent& ev, double ta, double tb) {
        double ga = ev.g(ta, y_.data());
        std::vector<double> ym(n_);
        for (int it = 0; it < 200 && (tb - ta) > 4.0 * std::numeric_limits<double>::epsilon() *
                                                       std::max({std::abs(ta), std::abs(tb), 1e-6});
             ++it) {
            double tm = 0.5 * (ta + tb);
            dense.eval(tm, ym);
            double gm = ev.g(tm, ym.data());
            if ((ga < 0 && gm < 0) || (ga > 0 && gm > 0)) {
                ta = tm;
                ga = gm;
            } else {
                tb = tm;
            }
        }
        return tb;  // post-crossing side, trigger condition holds there
    }

    const OdeSystem& sys_;
    const OdeOptions& opt_;
    int n_;
    std::vector<std::pair<int, int>> blocks_;
    std::vector<Eigen::MatrixXd> jac_;
    std::vector<Eigen::PartialPivLU<Eigen::MatrixXd>> lu_;
    double factored_hb_ = -1.0;
    bool jac_ok_ = false, jac_fresh_ = false, jac_was_fresh_ = false;
    double t_ = 0.0, span_ = 0.0, err_ = 0.0;
    int at_hmin_ = 0;
    int worst_comp_ = -1;
    std::string last_outcome_ = "none";
    long rhs_evals_ = 0;
    std::vector<double> y_, f_, y_prev_, y_prev2_, y_try_, f_try_, y_pred_, psi_, resid_, dx_,
        f_pert_, y_pert_, weights_;
};

}  // namespace

OdeResult integrate_bdf(const OdeSystem& sys, double t0, double t1, std::vector<double>& y,
                        const OdeOptions& opt, const std::vector<OdeEvent>& events,
                        const std::function<bool(const DenseStep&)>& on_step) {
    if (static_cast<int>(y.size()) != sys.n)
        throw std::invalid_argument("integrate_bdf: state size mismatch");
    if (static_cast<int>(opt.atol.size()) != sys.n)
        throw std::invalid_argument("integrate_bdf: atol size mismatch");
    if (t1 <= t0) return {OdeStatus::ReachedEnd, -1, t0, 0, 0, 0};
    BdfIntegrator integ(sys, opt);
    return integ.run(t0, t1, y, events, on_step);
}

}  // namespace espm
