#pragma once

// Causal implicit time stepping for (d/dt) M0 U + M1 U + A U = F.
//
// Each implicit step solves a positive-real system K = D + S with D
// symmetric positive definite (guaranteed by material admissibility at
// nu = 1/dt) and S antisymmetric. The solver symmetrically preconditions by
// D^{-1/2}, which turns K into identity-plus-antisymmetric, and runs GMRES
// with fixed reduction order; runs are bit-reproducible.
//
// Both schemes are one-step and strictly causal: zero state and zero
// forcing propagate to exactly zero, with no roundoff leakage ahead of the
// forcing onset.

#include <cmath>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "evosim/material.hpp"
#include "evosim/sparse.hpp"

namespace evosim {

struct EvoSystem {
    SparseOperator m0;
    SparseOperator m1;
    SparseOperator a;
    std::int64_t state_dim = 0;
    double volume_weight = 1.0;  // inner-product weight of one degree of freedom

    EvoSystem() = default;
    EvoSystem(SparseOperator m0_in, SparseOperator m1_in, SparseOperator a_in, double vol = 1.0)
        : m0(std::move(m0_in)), m1(std::move(m1_in)), a(std::move(a_in)), volume_weight(vol) {
        state_dim = m0.rows();
        if (m0.rows() != m0.cols() || m1.rows() != m1.cols() || a.rows() != a.cols() ||
            m1.rows() != state_dim || a.rows() != state_dim)
            throw DimensionError("EvoSystem: operator dimensions disagree");
    }

    MaterialLaw law() const { return MaterialLaw(m0, m1, "system"); }
};

struct TimeGrid {
    double t0 = 0.0;
    double dt = 0.0;
    std::int64_t steps = 0;

    TimeGrid() = default;
    TimeGrid(double t0_in, double dt_in, std::int64_t steps_in) : t0(t0_in), dt(dt_in), steps(steps_in) {
        if (!(dt > 0.0)) throw Error("TimeGrid: dt must be positive");
        if (steps < 1) throw Error("TimeGrid: need at least one step");
    }

    double time(std::int64_t n) const { return t0 + static_cast<double>(n) * dt; }
};

struct Trajectory {
    double t0 = 0.0;
    double dt = 0.0;
    std::vector<std::vector<double>> states;  // steps + 1 entries

    double time(std::size_t n) const { return t0 + static_cast<double>(n) * dt; }
    std::size_t step_count() const { return states.empty() ? 0 : states.size() - 1; }
};

enum class Scheme { ImplicitEuler, CrankNicolson };

using ForcingFn = std::function<std::vector<double>(double)>;

inline ForcingFn zero_forcing(std::int64_t dim) {
    return [dim](double) { return std::vector<double>(static_cast<std::size_t>(dim), 0.0); };
}

namespace detail {

inline double dot_seq(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm2_seq(std::span<const double> a) { return std::sqrt(dot_seq(a, a)); }

} // namespace detail

/// Solver for K = D + S with D = sym(K) positive definite. Construction
/// factors D once (per diagonal block, found as connected components);
/// solve() then runs preconditioned GMRES to the requested relative
/// residual on the original system.
class PositiveRealSolver {
public:
    explicit PositiveRealSolver(const SparseOperator &k, double tol = 1e-10, int max_iters = 400)
        : k_(k), tol_(tol), max_iters_(max_iters) {
        if (k.rows() != k.cols()) throw DimensionError("PositiveRealSolver: matrix not square");
        SparseOperator d = symmetric_part(k);

        SparseComponents comps = connected_components(d);
        std::vector<CooEntry> coo;
        for (const auto &members : comps.members) {
            const int nb = static_cast<int>(members.size());
            DenseMatrix block(nb, nb);
            std::vector<std::int64_t> local(static_cast<std::size_t>(k.rows()), -1);
            for (int i = 0; i < nb; ++i) local[static_cast<std::size_t>(members[static_cast<std::size_t>(i)])] = i;
            const auto &csr = d.csr();
            for (int i = 0; i < nb; ++i) {
                const std::int64_t r = members[static_cast<std::size_t>(i)];
                for (std::int64_t p = csr.row_ptr[static_cast<std::size_t>(r)]; p < csr.row_ptr[static_cast<std::size_t>(r) + 1]; ++p) {
                    const std::int64_t lc = local[static_cast<std::size_t>(csr.col_idx[static_cast<std::size_t>(p)])];
                    if (lc < 0) continue;  // stored zero pointing outside the component
                    block(i, static_cast<int>(lc)) = csr.values[static_cast<std::size_t>(p)];
                }
            }
            SymmetricEigen eig = jacobi_eigen(block);
            if (eig.values.front() <= 0.0)
                throw InadmissibleMaterialError(
                    "PositiveRealSolver: symmetric part is not positive definite (system not solvable)");
            for (int i = 0; i < nb; ++i)
                for (int j = 0; j < nb; ++j) {
                    double acc = 0.0;
                    for (int t = 0; t < nb; ++t)
                        acc += eig.vectors(i, t) * eig.vectors(j, t) / std::sqrt(eig.values[static_cast<std::size_t>(t)]);
                    if (acc != 0.0)
                        coo.push_back({members[static_cast<std::size_t>(i)], members[static_cast<std::size_t>(j)], acc});
                }
        }
        d_inv_sqrt_ = SparseOperator::from_coo(k.rows(), k.rows(), std::move(coo), false);
        k_hat_ = d_inv_sqrt_ * k * d_inv_sqrt_;
    }

    std::vector<double> solve(std::span<const double> b) const {
        const std::size_t n = static_cast<std::size_t>(k_.rows());
        if (b.size() != n) throw DimensionError("PositiveRealSolver::solve: rhs size mismatch");
        std::vector<double> x(n, 0.0);
        const double b_norm = detail::norm2_seq(b);
        if (b_norm == 0.0) return x;

        std::vector<double> history;
        std::vector<double> residual(b.begin(), b.end());
        // A few outer rounds guard against the preconditioned residual
        // understating the true one.
        for (int round = 0; round < 4; ++round) {
            std::vector<double> rhat(n);
            d_inv_sqrt_.apply(residual, rhat);
            std::vector<double> yhat = gmres(rhat, history);
            std::vector<double> dx(n);
            d_inv_sqrt_.apply(yhat, dx);
            for (std::size_t i = 0; i < n; ++i) x[i] += dx[i];

            std::vector<double> kx(n);
            k_.apply(x, kx);
            for (std::size_t i = 0; i < n; ++i) residual[i] = b[i] - kx[i];
            const double rel = detail::norm2_seq(residual) / b_norm;
            history.push_back(rel);
            if (rel <= tol_) return x;
        }
        throw SolverError("PositiveRealSolver: did not reach tolerance within the iteration cap", history);
    }

    const SparseOperator &matrix() const { return k_; }

private:
    // Plain GMRES with modified Gram-Schmidt and Givens updates; solves
    // k_hat y = rhat to the residual target.
    std::vector<double> gmres(std::span<const double> rhat, std::vector<double> &history) const {
        const std::size_t n = rhat.size();
        const int m = static_cast<int>(std::min<std::int64_t>(max_iters_, k_.rows()));
        const double beta = detail::norm2_seq(rhat);
        std::vector<double> y(n, 0.0);
        if (beta == 0.0) return y;

        std::vector<std::vector<double>> v;
        v.emplace_back(rhat.begin(), rhat.end());
        for (double &val : v[0]) val /= beta;

        std::vector<std::vector<double>> h_cols;
        std::vector<double> cs, sn;
        std::vector<double> g(1, beta);

        int k = 0;
        for (; k < m; ++k) {
            std::vector<double> w(n);
            k_hat_.apply(v[static_cast<std::size_t>(k)], w);
            std::vector<double> h(static_cast<std::size_t>(k) + 2, 0.0);
            for (int i = 0; i <= k; ++i) {
                h[static_cast<std::size_t>(i)] = detail::dot_seq(w, v[static_cast<std::size_t>(i)]);
                for (std::size_t j = 0; j < n; ++j) w[j] -= h[static_cast<std::size_t>(i)] * v[static_cast<std::size_t>(i)][j];
            }
            h[static_cast<std::size_t>(k) + 1] = detail::norm2_seq(w);

            for (int i = 0; i < k; ++i) {
                const double t = cs[static_cast<std::size_t>(i)] * h[static_cast<std::size_t>(i)] +
                                 sn[static_cast<std::size_t>(i)] * h[static_cast<std::size_t>(i) + 1];
                h[static_cast<std::size_t>(i) + 1] = -sn[static_cast<std::size_t>(i)] * h[static_cast<std::size_t>(i)] +
                                                     cs[static_cast<std::size_t>(i)] * h[static_cast<std::size_t>(i) + 1];
                h[static_cast<std::size_t>(i)] = t;
            }
            const double denom = std::hypot(h[static_cast<std::size_t>(k)], h[static_cast<std::size_t>(k) + 1]);
            const double c = denom == 0.0 ? 1.0 : h[static_cast<std::size_t>(k)] / denom;
            const double s = denom == 0.0 ? 0.0 : h[static_cast<std::size_t>(k) + 1] / denom;
            cs.push_back(c);
            sn.push_back(s);
            h[static_cast<std::size_t>(k)] = denom;
            h[static_cast<std::size_t>(k) + 1] = 0.0;
            g.push_back(-s * g[static_cast<std::size_t>(k)]);
            g[static_cast<std::size_t>(k)] = c * g[static_cast<std::size_t>(k)];
            h_cols.push_back(std::move(h));

            const double rel = std::abs(g[static_cast<std::size_t>(k) + 1]) / beta;
            history.push_back(rel);
            if (rel <= 0.1 * tol_) {
                ++k;
                break;
            }
            if (k + 1 < m) {
                std::vector<double> vk = w;
                const double nv = detail::norm2_seq(vk);
                if (nv == 0.0) {  // lucky breakdown: Krylov space is exhausted
                    ++k;
                    break;
                }
                for (double &val : vk) val /= nv;
                v.push_back(std::move(vk));
            }
        }

        // Back-substitute the triangular system.
        std::vector<double> coef(static_cast<std::size_t>(k), 0.0);
        for (int i = k - 1; i >= 0; --i) {
            double acc = g[static_cast<std::size_t>(i)];
            for (int j = i + 1; j < k; ++j)
                acc -= h_cols[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] * coef[static_cast<std::size_t>(j)];
            coef[static_cast<std::size_t>(i)] = acc / h_cols[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)];
        }
        for (int j = 0; j < k; ++j)
            for (std::size_t i = 0; i < n; ++i) y[i] += coef[static_cast<std::size_t>(j)] * v[static_cast<std::size_t>(j)][i];
        return y;
    }

    SparseOperator k_;
    SparseOperator d_inv_sqrt_;
    SparseOperator k_hat_;
    double tol_;
    int max_iters_;
};

/// One-shot convenience wrapper around PositiveRealSolver.
inline std::vector<double> solve_positive_real(const SparseOperator &k, std::span<const double> rhs,
                                               double tol = 1e-10, int max_iters = 400) {
    return PositiveRealSolver(k, tol, max_iters).solve(rhs);
}

/// Prefactored implicit stepper. Implicit Euler solves
///   (M0/dt + M1 + A) U+ = M0 U/dt + F(t+dt),
/// the midpoint rule solves
///   (M0/dt + (M1+A)/2) U+ = (M0/dt - (M1+A)/2) U + F(t+dt/2).
class ImplicitStepper {
public:
    ImplicitStepper(const EvoSystem &sys, double dt, Scheme scheme, double tol = 1e-10, int max_iters = 400)
        : scheme_(scheme), dt_(dt) {
        if (!(dt > 0.0)) throw Error("ImplicitStepper: dt must be positive");
        SparseOperator m0_dt = sys.m0.scaled(1.0 / dt);
        if (scheme == Scheme::ImplicitEuler) {
            system_ = m0_dt + sys.m1 + sys.a;
        } else {
            system_ = m0_dt + (sys.m1 + sys.a).scaled(0.5);
            reflect_ = m0_dt + (sys.m1 + sys.a).scaled(-0.5);
        }
        m0_dt_ = std::move(m0_dt);
        solver_ = std::make_unique<PositiveRealSolver>(system_, tol, max_iters);
    }

    std::vector<double> step(std::span<const double> u, std::span<const double> f) const {
        std::vector<double> rhs(u.size(), 0.0);
        if (scheme_ == Scheme::ImplicitEuler) {
            m0_dt_.apply(u, rhs);
        } else {
            reflect_.apply(u, rhs);
        }
        for (std::size_t i = 0; i < rhs.size(); ++i) rhs[i] += f[i];
        return solver_->solve(rhs);
    }

    double forcing_time(double t_n) const {
        return scheme_ == Scheme::ImplicitEuler ? t_n + dt_ : t_n + 0.5 * dt_;
    }

private:
    Scheme scheme_;
    double dt_;
    SparseOperator system_;
    SparseOperator reflect_;
    SparseOperator m0_dt_;
    std::unique_ptr<PositiveRealSolver> solver_;
};

/// Advance from an explicit initial state. The standard entry point run()
/// starts from zero at t0, matching the causal support convention.
inline Trajectory run_from(const EvoSystem &sys, std::vector<double> u0, const ForcingFn &forcing,
                           const TimeGrid &grid, Scheme scheme, double tol = 1e-10, int max_iters = 400) {
    if (static_cast<std::int64_t>(u0.size()) != sys.state_dim)
        throw DimensionError("run_from: initial state size mismatch");
    ImplicitStepper stepper(sys, grid.dt, scheme, tol, max_iters);
    Trajectory traj;
    traj.t0 = grid.t0;
    traj.dt = grid.dt;
    traj.states.reserve(static_cast<std::size_t>(grid.steps) + 1);
    traj.states.push_back(std::move(u0));
    for (std::int64_t n = 0; n < grid.steps; ++n) {
        std::vector<double> f = forcing(stepper.forcing_time(grid.time(n)));
        if (static_cast<std::int64_t>(f.size()) != sys.state_dim)
            throw DimensionError("run_from: forcing size mismatch");
        traj.states.push_back(stepper.step(traj.states.back(), f));
    }
    return traj;
}

inline Trajectory run(const EvoSystem &sys, const ForcingFn &forcing, const TimeGrid &grid, Scheme scheme,
                      double tol = 1e-10, int max_iters = 400) {
    return run_from(sys, std::vector<double>(static_cast<std::size_t>(sys.state_dim), 0.0), forcing, grid,
                    scheme, tol, max_iters);
}

/// Trapezoidal approximation of the exponentially weighted norm
/// (integral of |U(t)|^2 exp(-2 nu t) dt)^{1/2} over the trajectory window.
inline double weighted_norm(const Trajectory &traj, double nu, double volume_weight = 1.0) {
    if (!(nu > 0.0)) throw Error("weighted_norm: nu must be positive");
    double acc = 0.0;
    for (std::size_t n = 0; n < traj.states.size(); ++n) {
        const double t = traj.time(n);
        const double w = std::exp(-2.0 * nu * t);
        double nrm2 = 0.0;
        for (double v : traj.states[n]) nrm2 += v * v;
        const double weight = (n == 0 || n + 1 == traj.states.size()) ? 0.5 : 1.0;
        acc += weight * w * nrm2 * volume_weight;
    }
    return std::sqrt(acc * traj.dt);
}

struct CausalityResult {
    double max_pre_onset = 0.0;  // largest state norm strictly before onset
    double peak = 0.0;           // largest state norm over the whole run
    Trajectory trajectory;
};

/// Runs from zero and reports the largest state magnitude ahead of the
/// forcing onset. One-step implicit schemes keep it exactly zero.
inline CausalityResult causality_check(const EvoSystem &sys, const ForcingFn &forcing, const TimeGrid &grid,
                                       double t_onset, Scheme scheme, double tol = 1e-10,
                                       int max_iters = 400) {
    if (t_onset < grid.t0 || t_onset > grid.time(grid.steps))
        throw Error("causality_check: onset must lie inside the time window");
    CausalityResult res;
    res.trajectory = run(sys, forcing, grid, scheme, tol, max_iters);
    for (std::size_t n = 0; n < res.trajectory.states.size(); ++n) {
        const double nrm = detail::norm2_seq(res.trajectory.states[n]);
        res.peak = std::max(res.peak, nrm);
        if (res.trajectory.time(n) < t_onset) res.max_pre_onset = std::max(res.max_pre_onset, nrm);
    }
    return res;
}

struct StepEnergy {
    double energy = 0.0;       // (1/2) U . M0 U after the step (volume-weighted)
    double dissipation = 0.0;  // midpoint Ubar . sym(M1) Ubar power
    double work = 0.0;         // midpoint Ubar . F power
    double residual = 0.0;     // | dE + dt*dissipation - dt*work |
};

/// Discrete energy bookkeeping for midpoint trajectories: per step,
///   E(n+1) - E(n) + dt * Ubar.sym(M1) Ubar - dt * Ubar.F = 0
/// up to solver tolerance, the block operator contributing nothing by
/// antisymmetry. For dissipative media the balance makes E nonincreasing.
inline std::vector<StepEnergy> energy_identity_residuals(const Trajectory &traj, const EvoSystem &sys,
                                                         const ForcingFn &forcing) {
    std::vector<StepEnergy> out;
    if (traj.states.empty()) return out;
    const double vol = sys.volume_weight;
    SparseOperator sym_m1 = symmetric_part(sys.m1);

    auto energy_of = [&](std::span<const double> u) {
        std::vector<double> m0u(u.size());
        sys.m0.apply(u, m0u);
        return 0.5 * vol * detail::dot_seq(u, m0u);
    };

    double e_prev = energy_of(traj.states[0]);
    for (std::size_t n = 0; n + 1 < traj.states.size(); ++n) {
        const auto &u0 = traj.states[n];
        const auto &u1 = traj.states[n + 1];
        std::vector<double> mid(u0.size());
        for (std::size_t i = 0; i < mid.size(); ++i) mid[i] = 0.5 * (u0[i] + u1[i]);

        std::vector<double> tmp(mid.size());
        sym_m1.apply(mid, tmp);
        const double dissipation = vol * detail::dot_seq(mid, tmp);

        std::vector<double> f = forcing(traj.time(n) + 0.5 * traj.dt);
        const double work = vol * detail::dot_seq(mid, f);

        StepEnergy se;
        se.energy = energy_of(u1);
        se.dissipation = dissipation;
        se.work = work;
        se.residual = std::abs(se.energy - e_prev + traj.dt * dissipation - traj.dt * work);
        e_prev = se.energy;
        out.push_back(se);
    }
    return out;
}

/// Forcing that makes a prescribed state history an exact solution of the
/// semi-discrete system: F(t) = M0 U'(t) + M1 U(t) + A U(t). Used for
/// temporal convergence studies where the spatial error is zero by
/// construction.
inline ForcingFn manufactured_forcing(const EvoSystem &sys,
                                      std::function<std::vector<double>(double)> state,
                                      std::function<std::vector<double>(double)> state_dt) {
    return [&sys, state, state_dt](double t) {
        std::vector<double> u = state(t);
        std::vector<double> du = state_dt(t);
        std::vector<double> f(u.size(), 0.0);
        sys.m0.apply_add(du, f);
        sys.m1.apply_add(u, f);
        sys.a.apply_add(u, f);
        return f;
    };
}

/// Observed convergence orders from errors at successively halved steps.
inline std::vector<double> observed_orders(const std::vector<double> &errors) {
    std::vector<double> orders;
    for (std::size_t i = 0; i + 1 < errors.size(); ++i)
        orders.push_back(std::log2(errors[i] / errors[i + 1]));
    return orders;
}

} // namespace evosim
