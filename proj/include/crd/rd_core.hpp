#pragma once

// Rate-distortion functions of finite memoryless sources under several
// simultaneous expected-distortion constraints.
//
// The inner solver is the Blahut-Arimoto alternating minimisation at fixed
// Lagrange multipliers s: W(x^|x) is proportional to q(x^) exp(-sum_l s_l d_l(x,x^)),
// with the multipliers acting on distortion in nats. The outer dual search
// adjusts s until every constraint is slack with s_l = 0 or tight.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "crd/error.hpp"
#include "crd/info.hpp"
#include "crd/matrix.hpp"
#include "crd/model.hpp"

namespace crd {

/// Conditional pmf W[x][x^]; rows are pmfs.
using TestChannel = Matrix;

/// Optional structural restriction on a channel: allowed(x, x^) != 0 means
/// W(x^|x) may be positive.
using ChannelSupport = std::vector<std::vector<bool>>;

struct BaOptions {
    double tol = 1e-10;                  ///< L-infinity change of the output marginal
    double certificate_tol = 1e-9;       ///< log max_y c(y): bound on Lagrangian suboptimality, nats
    std::size_t max_iterations = 50'000;
};

struct BaResult {
    double rate = 0.0;                   ///< I(X;X^) of `channel`, bits
    std::vector<double> distortions;     ///< E[d_l(X,X^)] per matrix
    TestChannel channel;
    std::vector<double> output_marginal;
    std::size_t iterations = 0;
};

struct DualOptions {
    double constraint_tol = 1e-6;        ///< tightness of active constraints
    double max_multiplier = 1e6;         ///< beyond this the system is declared infeasible
    std::size_t max_cycles = 400;
    BaOptions ba;
};

struct RDPoint {
    DistortionBudget budget;
    double rate = 0.0;                   ///< dual estimate of the RD value, bits
    double channel_rate = 0.0;           ///< I(X;X^) of `channel`, bits
    TestChannel channel;
    std::vector<double> multipliers;     ///< s_l >= 0 (nats per distortion unit)
    std::vector<double> achieved;        ///< E[d_l] under `channel`
    std::vector<double> output_marginal;
    std::size_t ba_evaluations = 0;
};

namespace detail {

/// Blahut-Arimoto on the support of `px` (all entries positive).
inline BaResult blahut_arimoto(std::span<const double> px, std::span<const Matrix> distortions,
                               std::span<const double> s, const BaOptions& opt, const ChannelSupport* support,
                               std::span<const double> warm_q)
{
    const std::size_t nx = px.size();
    const std::size_t ny = distortions.front().cols();

    auto allowed = [&](std::size_t x, std::size_t y) { return support == nullptr || (*support)[x][y]; };

    // Kernel exp(-(c(x,y) - min_y c(x,y))); the per-row shift cancels in W.
    Matrix kernel(nx, ny, 0.0);
    std::vector<double> combined(ny);
    for (std::size_t x = 0; x < nx; ++x) {
        double lo = std::numeric_limits<double>::infinity();
        for (std::size_t y = 0; y < ny; ++y) {
            double c = 0.0;
            for (std::size_t l = 0; l < distortions.size(); ++l)
                if (s[l] > 0.0) c += s[l] * distortions[l](x, y);
            combined[y] = c;
            if (allowed(x, y)) lo = std::min(lo, c);
        }
        if (!std::isfinite(lo)) throw Error(ErrorCode::InvalidArgument, "channel support leaves a row empty");
        for (std::size_t y = 0; y < ny; ++y)
            if (allowed(x, y)) kernel(x, y) = std::exp(-(combined[y] - lo));
    }

    std::vector<double> q(ny, 0.0);
    std::vector<bool> reachable(ny, false);
    for (std::size_t x = 0; x < nx; ++x)
        for (std::size_t y = 0; y < ny; ++y)
            if (allowed(x, y)) reachable[y] = true;
    double mass = 0.0;
    if (warm_q.size() == ny) {
        for (std::size_t y = 0; y < ny; ++y)
            if (reachable[y]) mass += (q[y] = warm_q[y] + 1e-8);
    } else {
        for (std::size_t y = 0; y < ny; ++y)
            if (reachable[y]) mass += (q[y] = 1.0);
    }
    for (double& v : q) v /= mass;

    // Shared pieces: z_x = sum_y q_y K_xy, c_y = sum_x p_x K_xy / z_x, and the
    // dual objective sum_x p_x log z_x which is concave in q. At the optimum
    // c_y <= 1 everywhere with equality on the support, so log max_y c_y bounds
    // the Lagrangian suboptimality (Blahut's certificate).
    std::vector<double> z(nx), c(ny);
    double cmax = 0.0;
    auto objective_at = [&](const std::vector<double>& at) {
        double f = 0.0;
        for (std::size_t x = 0; x < nx; ++x) {
            auto k = kernel.row(x);
            double acc = 0.0;
            for (std::size_t y = 0; y < ny; ++y) acc += at[y] * k[y];
            z[x] = acc;
            f += acc > 0.0 ? px[x] * std::log(acc) : -std::numeric_limits<double>::infinity();
        }
        return f;
    };
    auto gradient_at = [&](const std::vector<double>& at) {
        const double f = objective_at(at);
        std::fill(c.begin(), c.end(), 0.0);
        for (std::size_t x = 0; x < nx; ++x) {
            if (!(z[x] > 0.0)) continue;
            const double w = px[x] / z[x];
            auto k = kernel.row(x);
            for (std::size_t y = 0; y < ny; ++y) c[y] += w * k[y];
        }
        cmax = 0.0;
        for (std::size_t y = 0; y < ny; ++y)
            if (reachable[y]) cmax = std::max(cmax, c[y]);
        return f;
    };
    auto certified = [&] { return std::log(cmax) < opt.certificate_tol; };
    // Blahut-Arimoto map; gradient_at(from) must be current.
    auto ba_map = [&](const std::vector<double>& from, std::vector<double>& to) {
        to.resize(ny);
        double total = 0.0;
        for (std::size_t y = 0; y < ny; ++y) total += (to[y] = from[y] * c[y]);
        double change = 0.0;
        for (std::size_t y = 0; y < ny; ++y) {
            to[y] /= total;
            change = std::max(change, std::abs(to[y] - from[y]));
        }
        return change;
    };

    std::size_t it = 0;
    double change = std::numeric_limits<double>::infinity();
    auto converged = [&] { return change < opt.tol && certified(); };

    // SQUAREM-accelerated Blahut-Arimoto. Falls back to the plain double
    // step whenever the extrapolated point loses objective.
    std::vector<double> q1, q2, qx, qn;
    auto squarem_until = [&](std::size_t limit) {
        while (it < limit) {
            gradient_at(q);
            if (converged()) return true;
            change = ba_map(q, q1);
            gradient_at(q1);
            ++it;
            if (converged()) {
                q.swap(q1);
                return true;
            }
            change = ba_map(q1, q2);
            ++it;
            const double f2 = objective_at(q2);
            double rr = 0.0, vv = 0.0;
            for (std::size_t y = 0; y < ny; ++y) {
                const double r = q1[y] - q[y];
                const double v = q2[y] - 2.0 * q1[y] + q[y];
                rr += r * r;
                vv += v * v;
            }
            const double alpha = std::min(vv > 0.0 ? -std::sqrt(rr / vv) : -1.0, -1.0);
            qx.resize(ny);
            double mass = 0.0;
            for (std::size_t y = 0; y < ny; ++y) {
                const double r = q1[y] - q[y];
                const double v = q2[y] - 2.0 * q1[y] + q[y];
                double val = q[y] - 2.0 * alpha * r + alpha * alpha * v;
                if (!(val > 0.0)) val = reachable[y] ? 1e-3 * std::min(q[y], q2[y]) : 0.0;
                mass += (qx[y] = val);
            }
            for (double& v : qx) v /= mass;
            gradient_at(qx);
            ba_map(qx, qn);
            ++it;
            const double fn = objective_at(qn);
            if (std::isfinite(fn) && fn >= f2) q.swap(qn);
            else q.swap(q2);
        }
        return false;
    };

    // Primal-dual interior point on min -sum_x p_x log z_x(q) + sum_y q_y
    // over q >= 0; the minimiser has unit mass. Robust where the kernel
    // columns are nearly collinear (small multipliers) and the optimal
    // output support is a small subset, which is where plain BA crawls.
    auto interior_until = [&](std::size_t limit) {
        std::vector<std::size_t> idx;
        for (std::size_t y = 0; y < ny; ++y)
            if (reachable[y]) idx.push_back(y);
        const auto m = static_cast<Eigen::Index>(idx.size());
        Eigen::VectorXd qv(m), v(m), g(m), dq(m), dv(m);
        Eigen::MatrixXd ksub(static_cast<Eigen::Index>(nx), m), scaled(static_cast<Eigen::Index>(nx), m);
        for (std::size_t x = 0; x < nx; ++x)
            for (Eigen::Index i = 0; i < m; ++i) ksub(static_cast<Eigen::Index>(x), i) = kernel(x, idx[i]);
        gradient_at(q);
        for (Eigen::Index i = 0; i < m; ++i) {
            qv[i] = std::max(q[idx[i]], 1e-12);
            v[i] = std::max(1.0 - c[idx[i]], 0.0) + 1e-6;
        }
        std::vector<double> trial(ny, 0.0);
        auto load = [&](const Eigen::VectorXd& from, std::vector<double>& to) {
            for (Eigen::Index i = 0; i < m; ++i) to[idx[i]] = from[i];
        };
        double mu = qv.dot(v) / static_cast<double>(m);
        while (it < limit) {
            load(qv, q);
            const double f = gradient_at(q);
            for (Eigen::Index i = 0; i < m; ++i) g[i] = 1.0 - c[idx[i]];
            const double gap = qv.dot(v);
            {
                // Certificate is evaluated at the unit-mass point.
                const double total = qv.sum();
                if (std::log(cmax * total) < opt.certificate_tol && gap < opt.tol) {
                    for (double& e : q) e /= total;
                    change = 0.0;
                    return true;
                }
            }
            mu = std::min(0.1 * gap / static_cast<double>(m), mu);

            // H = K' diag(p / z^2) K, formed as one product.
            for (std::size_t x = 0; x < nx; ++x) {
                const double w = z[x] > 0.0 ? std::sqrt(px[x]) / z[x] : 0.0;
                for (Eigen::Index i = 0; i < m; ++i) scaled(static_cast<Eigen::Index>(x), i) = w * ksub(static_cast<Eigen::Index>(x), i);
            }
            Eigen::MatrixXd h = scaled.transpose() * scaled;
            h.diagonal().array() += (v.array() / qv.array()).matrix().array();
            const Eigen::VectorXd rd = g - v;
            const Eigen::VectorXd rc = (qv.array() * v.array() - mu).matrix();
            const Eigen::VectorXd rhs = -rd - (rc.array() / qv.array()).matrix();
            Eigen::LDLT<Eigen::MatrixXd> ldlt(h);
            dq = ldlt.solve(rhs);
            if (ldlt.info() != Eigen::Success || !dq.allFinite()) return false;
            dv = ((-rc.array() - v.array() * dq.array()) / qv.array()).matrix();

            double ap = 1.0, ad = 1.0;
            for (Eigen::Index i = 0; i < m; ++i) {
                if (dq[i] < 0.0) ap = std::min(ap, -0.995 * qv[i] / dq[i]);
                if (dv[i] < 0.0) ad = std::min(ad, -0.995 * v[i] / dv[i]);
            }
            // Backtrack the primal step on the barrier merit.
            auto merit = [&](const Eigen::VectorXd& at, double obj) {
                return -obj + at.sum() - mu * at.array().log().sum();
            };
            const double m0 = merit(qv, f);
            Eigen::VectorXd qt(m);
            bool accepted = false;
            for (int back = 0; back < 50; ++back, ap *= 0.5) {
                qt = qv + ap * dq;
                load(qt, trial);
                const double ft = objective_at(trial);
                if (std::isfinite(ft) && merit(qt, ft) <= m0 + 1e-4 * ap * (g.dot(dq) - mu * (dq.array() / qv.array()).sum())) {
                    accepted = true;
                    break;
                }
            }
            ++it;
            if (!accepted) return false;
            change = (ap * dq).lpNorm<Eigen::Infinity>();
            qv = qt;
            v += ad * dv;
        }
        return false;
    };

    constexpr std::size_t kSquaremWarmup = 64;
    bool done = squarem_until(std::min(kSquaremWarmup, opt.max_iterations));
    if (!done) done = interior_until(std::min(it + 200, opt.max_iterations));
    if (!done) done = squarem_until(opt.max_iterations);
    if (!done)
        throw Error(ErrorCode::NonConvergence, "Blahut-Arimoto hit the iteration cap (change " +
                                                   std::to_string(change) + ")");
    {
        double mass = 0.0;
        for (double v : q) mass += v;
        for (double& v : q) v /= mass;
    }

    BaResult r;
    r.iterations = it;
    r.channel = Matrix(nx, ny, 0.0);
    for (std::size_t x = 0; x < nx; ++x) {
        auto k = kernel.row(x);
        auto w = r.channel.row(x);
        double norm = 0.0;
        for (std::size_t y = 0; y < ny; ++y) norm += (w[y] = q[y] * k[y]);
        if (norm > 0.0) {
            for (double& v : w) v /= norm;
        } else {
            // q vanished on every kernel-supported column: fall back to the
            // lowest-index row minimiser.
            std::size_t best = 0;
            while (k[best] != 1.0) ++best;
            w[best] = 1.0;
        }
    }
    r.rate = mutual_information(px, r.channel);
    r.output_marginal = output_marginal(px, r.channel);
    for (const auto& d : distortions) r.distortions.push_back(expected_distortion(px, r.channel, d));
    return r;
}

/// What the dual search needs from one inner solve at fixed multipliers.
// Rates at or below this (bits) count as zero for region tests.
inline constexpr double kZeroRate = 1e-12;
// Largest upper-minus-lower bracket (bits) accepted when the dual search stalls.
inline constexpr double kDualityGapTol = 1e-5;

struct DualEval {
    double rate = 0.0;                   ///< I(X;X^) at the inner optimum, bits
    std::vector<double> distortions;
};

/// Cyclic per-coordinate root finding on the dual. `eval(s)` returns a
/// DualEval; the distortions must be non-increasing in each s_l.
/// `positive_rate` promises that the optimum has positive rate, which lets
/// the ascent phase stay off the piecewise-linear zero-rate region.
template <class Eval>
std::vector<double> dual_search(Eval&& eval, std::span<const double> budget, std::span<const double> lower_bounds,
                                std::vector<double> s, const DualOptions& opt, std::size_t& evaluations,
                                bool positive_rate = false)
{
    const std::size_t m = budget.size();
    std::vector<double> ctol(m), target(m);
    for (std::size_t l = 0; l < m; ++l) {
        ctol[l] = std::max(std::min(opt.constraint_tol, 1e-3 * budget[l]), 1e-12);
        target[l] = std::max(budget[l] - 0.5 * ctol[l], lower_bounds[l]);
    }

    std::vector<double> last_s;
    DualEval last_e;
    auto evaluate = [&](const std::vector<double>& at) -> const DualEval& {
        if (at != last_s) {
            last_e = eval(std::span<const double>(at));
            last_s = at;
            ++evaluations;
        }
        return last_e;
    };
    auto achieved = [&](const std::vector<double>& at) -> const std::vector<double>& {
        return evaluate(at).distortions;
    };
    auto in_band = [&](std::size_t l, double e) { return e <= budget[l] && e >= budget[l] - ctol[l]; };
    auto kkt = [&](const std::vector<double>& e) {
        for (std::size_t l = 0; l < m; ++l) {
            if (e[l] > budget[l]) return false;
            if (s[l] > 0.0 && e[l] < budget[l] - ctol[l]) return false;
        }
        return true;
    };

    // Levenberg-Marquardt ascent on the concave dual G(s) = I + s.(E - target)
    // (nats), whose gradient is E(s) - target. The Jacobian of E is taken by
    // forward differences. Near zero rate E is locally constant, so G is
    // linear there and a plain Newton step is undefined; the damping turns
    // the step into gradient ascent until curvature appears.
    auto ascent = [&](std::size_t max_iter) {
        auto lagrangian = [&](const std::vector<double>& at, const DualEval& ev) {
            double g = ev.rate * kLn2;
            for (std::size_t l = 0; l < m; ++l) g += at[l] * (ev.distortions[l] - target[l]);
            return g;
        };
        double mu = 1.0;
        for (std::size_t iter = 0; iter < max_iter; ++iter) {
            const DualEval cur = evaluate(s);
            if (kkt(cur.distortions)) return true;
            const double g0 = lagrangian(s, cur);
            std::vector<std::size_t> free;
            for (std::size_t l = 0; l < m; ++l)
                if (!(s[l] == 0.0 && cur.distortions[l] < target[l])) free.push_back(l);
            if (free.empty()) return false;
            const auto k = static_cast<Eigen::Index>(free.size());
            Eigen::MatrixXd jac(k, k);
            Eigen::VectorXd grad(k);
            for (Eigen::Index j = 0; j < k; ++j) {
                const std::size_t l = free[j];
                const double h = std::max(1e-7, 1e-5 * s[l]);
                std::vector<double> t = s;
                t[l] += h;
                const auto& ep = achieved(t);
                for (Eigen::Index i = 0; i < k; ++i) jac(i, j) = (ep[free[i]] - cur.distortions[free[i]]) / h;
                grad(j) = cur.distortions[l] - target[l];
            }
            const Eigen::MatrixXd hess = 0.5 * (jac + jac.transpose());
            bool moved = false;
            while (!moved) {
                if (mu > 1e12) return false;
                const Eigen::MatrixXd a = mu * Eigen::MatrixXd::Identity(k, k) - hess;
                const Eigen::VectorXd step = a.ldlt().solve(grad);
                if (!step.allFinite()) return false;
                std::vector<double> t = s;
                for (Eigen::Index j = 0; j < k; ++j) t[free[j]] = std::max(0.0, s[free[j]] + step(j));
                double predicted = 0.0;
                for (Eigen::Index j = 0; j < k; ++j) predicted += grad(j) * (t[free[j]] - s[free[j]]);
                const DualEval& trial = evaluate(t);
                const double g1 = lagrangian(t, trial);
                const bool off_region = positive_rate && !(trial.rate > kZeroRate);
                if (t != s && !off_region && g1 >= g0 + 1e-4 * predicted) {
                    s = std::move(t);
                    mu = std::max(0.25 * mu, 1e-12);
                    moved = true;
                } else {
                    mu *= 4.0;
                }
            }
        }
        return kkt(achieved(s));
    };

    if (m > 1 && positive_rate) {
        // Start the ascent inside the positive-rate region.
        while (!(evaluate(s).rate > kZeroRate) && *std::max_element(s.begin(), s.end()) < opt.max_multiplier)
            for (double& v : s) v = 4.0 * v + 1e-3;
    }
    if (m > 1 && ascent(100)) return s;

    for (std::size_t cycle = 0; cycle < opt.max_cycles; ++cycle) {
        if (kkt(achieved(s))) return s;
        if (m > 1 && cycle % 6 == 1 && ascent(40)) return s;
        for (std::size_t l = 0; l < m; ++l) {
            auto at = [&](double sigma) {
                std::vector<double> t = s;
                t[l] = sigma;
                return achieved(t)[l];
            };
            if (in_band(l, at(s[l])) || (s[l] == 0.0 && at(0.0) <= budget[l])) continue;

            bool others_zero = true;
            for (std::size_t k = 0; k < m; ++k)
                if (k != l && s[k] > 0.0) others_zero = false;
            if (!others_zero && at(0.0) <= budget[l]) {
                s[l] = 0.0;
                continue;
            }

            // Bracket in log space: phi(lo) > 0 >= phi(hi).
            double sigma = s[l] > 0.0 ? s[l] : 1.0;
            double phi = at(sigma) - target[l];
            double lo = 0.0, hi = 0.0, phi_lo = 0.0, phi_hi = 0.0;
            if (phi > 0.0) {
                lo = sigma;
                phi_lo = phi;
                for (;;) {
                    sigma *= 4.0;
                    if (sigma > opt.max_multiplier)
                        throw InfeasibleError({}, "no channel meets all constraints jointly (multiplier diverged)");
                    phi = at(sigma) - target[l];
                    if (phi <= 0.0) break;
                    lo = sigma;
                    phi_lo = phi;
                }
                hi = sigma;
                phi_hi = phi;
            } else {
                hi = sigma;
                phi_hi = phi;
                for (;;) {
                    sigma /= 4.0;
                    if (sigma < 1e-12) break;
                    phi = at(sigma) - target[l];
                    if (phi > 0.0) break;
                    hi = sigma;
                    phi_hi = phi;
                }
                if (sigma < 1e-12) {
                    // Slack all the way down: drop the constraint if s = 0 still meets it.
                    s[l] = at(0.0) <= budget[l] ? 0.0 : hi;
                    continue;
                }
                lo = sigma;
                phi_lo = phi;
            }

            // Illinois false position on log(sigma); b stays on the feasible side.
            double a = std::log(lo), b = std::log(hi);
            double fa = phi_lo, fb = phi_hi;
            double result = hi;
            int side = 0;
            for (int iter = 0; iter < 200; ++iter) {
                result = std::exp(b);
                if (in_band(l, fb + target[l]) || b - a < 1e-13) break;
                double xm = (a * fb - b * fa) / (fb - fa);
                if (!(xm > a && xm < b)) xm = 0.5 * (a + b);
                const double fm = at(std::exp(xm)) - target[l];
                if (in_band(l, fm + target[l])) {
                    result = std::exp(xm);
                    break;
                }
                if (fm > 0.0) {
                    a = xm;
                    fa = fm;
                    if (side == -1) fb *= 0.5;
                    side = -1;
                } else {
                    b = xm;
                    fb = fm;
                    if (side == +1) fa *= 0.5;
                    side = +1;
                }
            }
            s[l] = result;
        }
    }
    const auto& e = achieved(s);
    if (kkt(e)) return s;
    throw Error(ErrorCode::NonConvergence, "dual search did not meet complementary slackness");
}

enum class HullVerdict { Meets, Misses, Unknown };

struct HullResult {
    HullVerdict verdict = HullVerdict::Unknown;
    std::vector<double> point;           ///< best point found in the set
    std::vector<double> weights;         ///< convex weights per vertex id, when ids are tracked
};

// Does a convex set K of distortion vectors meet {e <= D}? K is given by a
// linear minimisation oracle: vertex(c) returns (argmin_{v in K} c.v, id).
// Frank-Wolfe on f(e) = |(e - D)_+|^2 with exact line search. Any c >= 0
// with min_K c.v > c.D proves K misses the budget (weak duality); the
// gradient 2(e - D)_+ is tried as such a c at every step.
template <class Oracle>
HullResult hull_meets_budget(Oracle&& vertex, std::span<const double> budget, std::size_t num_ids,
                             double slack, std::size_t max_iter = 5000)
{
    const std::size_t m = budget.size();
    auto excess = [&](const std::vector<double>& e) {
        double f = 0.0;
        for (std::size_t l = 0; l < m; ++l) f += std::pow(std::max(e[l] - budget[l], 0.0), 2);
        return f;
    };
    auto meets = [&](const std::vector<double>& e) {
        for (std::size_t l = 0; l < m; ++l)
            if (e[l] > budget[l] + slack * std::max(1.0, budget[l])) return false;
        return true;
    };
    HullResult res;
    res.weights.assign(num_ids, 0.0);
    auto [e, id0] = vertex(std::vector<double>(m, 1.0));
    if (id0 < num_ids) res.weights[id0] = 1.0;
    for (std::size_t it = 0; it < max_iter; ++it) {
        if (meets(e)) {
            res.verdict = HullVerdict::Meets;
            break;
        }
        std::vector<double> c(m);
        for (std::size_t l = 0; l < m; ++l) c[l] = std::max(e[l] - budget[l], 0.0);
        auto [v, id] = vertex(c);
        double margin = 0.0, scale = 0.0;
        for (std::size_t l = 0; l < m; ++l) margin += c[l] * (v[l] - budget[l]), scale += c[l] * budget[l];
        if (margin > 1e-12 * std::max(scale, 1e-300)) {
            res.verdict = HullVerdict::Misses;
            break;
        }
        auto at = [&](double t) {
            std::vector<double> p(m);
            for (std::size_t l = 0; l < m; ++l) p[l] = e[l] + t * (v[l] - e[l]);
            return p;
        };
        // f is convex and piecewise quadratic along the segment.
        double lo = 0.0, hi = 1.0;
        for (int k = 0; k < 100 && hi - lo > 1e-15; ++k) {
            const double a = lo + (hi - lo) / 3, b = hi - (hi - lo) / 3;
            if (excess(at(a)) <= excess(at(b)))
                hi = b;
            else
                lo = a;
        }
        const double t = 0.5 * (lo + hi);
        if (t <= 0.0) break;
        e = at(t);
        if (id < num_ids) {
            for (double& w : res.weights) w *= 1.0 - t;
            res.weights[id] += t;
        }
    }
    res.point = std::move(e);
    return res;
}

// Joint feasibility of the budget over all channels: the achievable set is
// the Minkowski sum over x of p(x) conv{d(x, y)}.
inline HullVerdict channel_hull_verdict(std::span<const double> px, std::span<const Matrix> distortions,
                                        std::span<const double> budget, const ChannelSupport* support)
{
    const std::size_t m = distortions.size(), ny = distortions.front().cols();
    auto vertex = [&](const std::vector<double>& c) {
        std::vector<double> v(m, 0.0);
        for (std::size_t x = 0; x < px.size(); ++x) {
            if (px[x] <= 0.0) continue;
            double best = std::numeric_limits<double>::infinity();
            std::size_t arg = 0;
            for (std::size_t y = 0; y < ny; ++y) {
                if (support && !(*support)[x][y]) continue;
                double val = 0.0;
                for (std::size_t l = 0; l < m; ++l) val += c[l] * distortions[l](x, y);
                if (val < best) best = val, arg = y;
            }
            for (std::size_t l = 0; l < m; ++l) v[l] += px[x] * distortions[l](x, arg);
        }
        return std::pair{v, std::size_t{0}};
    };
    return hull_meets_budget(vertex, budget, 0, 0.0).verdict;
}

} // namespace detail

/// One Blahut-Arimoto solve at fixed multipliers. Zero-probability symbols are
/// dropped; their channel rows are set to the output marginal.
inline BaResult ba_fixed_multipliers(std::span<const double> px, std::span<const Matrix> distortions,
                                     std::span<const double> s, const BaOptions& opt = {},
                                     const ChannelSupport* support = nullptr, std::span<const double> warm_q = {})
{
    if (distortions.empty()) throw Error(ErrorCode::InvalidArgument, "at least one distortion matrix is required");
    if (s.size() != distortions.size()) throw Error(ErrorCode::ShapeMismatch, "one multiplier per distortion matrix");
    for (double v : s)
        if (!(v >= 0.0) || !std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, "multipliers must be finite and >= 0");
    const std::size_t ny = distortions.front().cols();
    for (const auto& d : distortions)
        if (d.rows() != px.size() || d.cols() != ny) throw Error(ErrorCode::ShapeMismatch, "distortion matrix shape");

    std::vector<std::size_t> keep;
    for (std::size_t x = 0; x < px.size(); ++x)
        if (px[x] > 0.0) keep.push_back(x);
    if (keep.empty()) throw Error(ErrorCode::NonStochastic, "source pmf has no mass");

    if (keep.size() == px.size()) return detail::blahut_arimoto(px, distortions, s, opt, support, warm_q);

    std::vector<double> sub_px;
    std::vector<Matrix> sub_d(distortions.size(), Matrix(keep.size(), ny));
    ChannelSupport sub_support;
    for (std::size_t i = 0; i < keep.size(); ++i) {
        sub_px.push_back(px[keep[i]]);
        for (std::size_t l = 0; l < distortions.size(); ++l)
            std::copy_n(distortions[l].row(keep[i]).begin(), ny, sub_d[l].row(i).begin());
        if (support) sub_support.push_back((*support)[keep[i]]);
    }
    auto r = detail::blahut_arimoto(sub_px, sub_d, s, opt, support ? &sub_support : nullptr, warm_q);
    Matrix full(px.size(), ny, 0.0);
    for (std::size_t x = 0; x < px.size(); ++x)
        std::copy(r.output_marginal.begin(), r.output_marginal.end(), full.row(x).begin());
    for (std::size_t i = 0; i < keep.size(); ++i)
        std::copy_n(r.channel.row(i).begin(), ny, full.row(keep[i]).begin());
    r.channel = std::move(full);
    return r;
}

/// Smallest E[d] any channel can reach: sum_x p(x) min_x^ d(x, x^).
inline double minimum_distortion(std::span<const double> px, const Matrix& d, const ChannelSupport* support = nullptr)
{
    double total = 0.0;
    for (std::size_t x = 0; x < px.size(); ++x) {
        if (px[x] <= 0.0) continue;
        double lo = std::numeric_limits<double>::infinity();
        for (std::size_t y = 0; y < d.cols(); ++y)
            if (support == nullptr || (*support)[x][y]) lo = std::min(lo, d(x, y));
        total += px[x] * lo;
    }
    return total;
}

/// inf I(X;X^) subject to E[d_l(X,X^)] <= D_l for every l.
inline RDPoint rate_for_budget(std::span<const double> px, std::span<const Matrix> distortions,
                               std::span<const double> budget, const DualOptions& opt = {},
                               const ChannelSupport* support = nullptr, const RDPoint* warm = nullptr)
{
    const std::size_t m = distortions.size();
    if (budget.size() != m) throw Error(ErrorCode::ShapeMismatch, "one budget entry per distortion matrix");
    if (m == 0) throw Error(ErrorCode::InvalidArgument, "at least one constraint is required");
    for (double d : budget)
        if (!(d >= 0.0)) throw Error(ErrorCode::InvalidArgument, "budget entries must be >= 0");
    const std::size_t ny = distortions.front().cols();

    RDPoint point;
    point.budget.assign(budget.begin(), budget.end());

    std::vector<double> lower(m);
    std::vector<std::size_t> violating;
    for (std::size_t l = 0; l < m; ++l) {
        lower[l] = minimum_distortion(px, distortions[l], support);
        if (lower[l] - budget[l] > 1e-12 * std::max(1.0, budget[l])) violating.push_back(l);
    }
    if (!violating.empty()) throw InfeasibleError(violating, "budget below the minimum achievable distortion");

    // Rate 0 exactly when some mixture of constant reproductions (an output
    // independent of the input) meets every constraint.
    std::vector<std::vector<double>> constant(ny);
    std::vector<std::size_t> usable;
    for (std::size_t y = 0; y < ny; ++y) {
        bool ok = true;
        for (std::size_t x = 0; x < px.size() && ok; ++x)
            if (px[x] > 0.0 && support && !(*support)[x][y]) ok = false;
        if (!ok) continue;
        usable.push_back(y);
        constant[y].assign(m, 0.0);
        for (std::size_t l = 0; l < m; ++l)
            for (std::size_t x = 0; x < px.size(); ++x) constant[y][l] += px[x] * distortions[l](x, y);
    }
    bool positive_rate = false;
    if (!usable.empty()) {
        auto vertex = [&](const std::vector<double>& c) {
            std::size_t arg = usable.front();
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t y : usable) {
                double v = 0.0;
                for (std::size_t l = 0; l < m; ++l) v += c[l] * constant[y][l];
                if (v < best) best = v, arg = y;
            }
            return std::pair{constant[arg], arg};
        };
        const auto hull = detail::hull_meets_budget(vertex, budget, ny, 1e-12);
        if (hull.verdict == detail::HullVerdict::Meets) {
            point.output_marginal = hull.weights;
            point.channel = Matrix(px.size(), ny, 0.0);
            point.achieved.assign(m, 0.0);
            for (std::size_t y = 0; y < ny; ++y) {
                for (std::size_t x = 0; x < px.size(); ++x) point.channel(x, y) = hull.weights[y];
                if (hull.weights[y] > 0.0)
                    for (std::size_t l = 0; l < m; ++l) point.achieved[l] += hull.weights[y] * constant[y][l];
            }
            point.multipliers.assign(m, 0.0);
            return point;
        }
        positive_rate = hull.verdict == detail::HullVerdict::Misses;
    }

    std::vector<double> q_warm;
    std::vector<double> start(m, 1.0);
    if (warm != nullptr && warm->multipliers.size() == m) {
        // A zero-rate neighbour has all multipliers at 0, which says nothing
        // about the scale here; keep the default start in that case.
        q_warm = warm->output_marginal;
        if (std::any_of(warm->multipliers.begin(), warm->multipliers.end(), [](double v) { return v > 0.0; }))
            for (std::size_t l = 0; l < m; ++l) start[l] = warm->multipliers[l];
    }
    BaResult last;
    // Every inner solve brackets R*: its dual value is a lower bound and, when
    // it meets all budgets, its channel rate an upper bound.
    double best_lower = -std::numeric_limits<double>::infinity();
    std::vector<double> best_lower_s;
    std::optional<BaResult> best_feasible;
    auto eval = [&](std::span<const double> s) {
        last = ba_fixed_multipliers(px, distortions, s, opt.ba, support, q_warm);
        q_warm = last.output_marginal;
        double dual = last.rate;
        bool feasible = true;
        for (std::size_t l = 0; l < m; ++l) {
            dual += s[l] * (last.distortions[l] - budget[l]) / kLn2;
            feasible = feasible && last.distortions[l] <= budget[l];
        }
        if (dual > best_lower) best_lower = dual, best_lower_s.assign(s.begin(), s.end());
        if (feasible && (!best_feasible || last.rate < best_feasible->rate)) best_feasible = last;
        return detail::DualEval{last.rate, last.distortions};
    };
    std::size_t evaluations = 0;
    std::vector<double> s;
    try {
        s = detail::dual_search(eval, budget, lower, start, opt, evaluations, positive_rate);
    } catch (const Error& e) {
        if (detail::channel_hull_verdict(px, distortions, budget, support) == detail::HullVerdict::Misses)
            throw InfeasibleError({}, "no channel meets all constraints jointly");
        if (e.code() == ErrorCode::Infeasible)
            throw Error(ErrorCode::NonConvergence, "multiplier diverged without an infeasibility certificate");
        // Near the zero-rate boundary E(s) is too flat for the slackness band
        // to be hit, yet the bracket can still pin the value down.
        if (e.code() == ErrorCode::NonConvergence && best_feasible &&
            best_feasible->rate - std::max(best_lower, 0.0) <= detail::kDualityGapTol) {
            point.rate = best_feasible->rate;
            point.channel_rate = best_feasible->rate;
            point.channel = std::move(best_feasible->channel);
            point.multipliers = best_lower_s;
            point.achieved = std::move(best_feasible->distortions);
            point.output_marginal = std::move(best_feasible->output_marginal);
            point.ba_evaluations = evaluations;
            return point;
        }
        throw;
    }
    last = ba_fixed_multipliers(px, distortions, s, opt.ba, support, q_warm);

    double rate = last.rate;
    for (std::size_t l = 0; l < m; ++l) rate += s[l] * (last.distortions[l] - budget[l]) / kLn2;
    point.rate = std::max(rate, 0.0);
    point.channel_rate = last.rate;
    point.channel = std::move(last.channel);
    point.multipliers = s;
    point.achieved = std::move(last.distortions);
    point.output_marginal = std::move(last.output_marginal);
    point.ba_evaluations = evaluations + 1;
    return point;
}

/// Classical RD function R^O(delta) of a single measure.
inline double classical_rd(std::span<const double> px, const Matrix& d, double delta, const DualOptions& opt = {})
{
    if (!(delta >= 0.0)) throw Error(ErrorCode::InvalidArgument, "delta must be >= 0");
    const Matrix ds[1] = {d};
    const double b[1] = {delta};
    return rate_for_budget(px, ds, b, opt).rate;
}

/// R*(D): classical RD of X against the modified measures of the active
/// criteria. Multipliers and achieved distortions are reported per criterion
/// (zero for inactive ones).
inline RDPoint r_star(const SourceModel& model, const DistortionBudget& budget, const DualOptions& opt = {},
                      const RDPoint* warm = nullptr)
{
    model.validate_budget(budget);
    const auto active = active_criteria(model.source, model.criteria);
    const auto px = model.source.symbol_marginal();
    if (active.empty()) {
        RDPoint p;
        p.budget = budget;
        p.channel = Matrix(px.size(), model.source.num_reproductions(), 0.0);
        for (std::size_t x = 0; x < px.size(); ++x) p.channel(x, 0) = 1.0;
        p.multipliers.assign(budget.size(), 0.0);
        p.achieved.assign(budget.size(), 0.0);
        p.output_marginal.assign(model.source.num_reproductions(), 0.0);
        p.output_marginal[0] = 1.0;
        return p;
    }
    std::vector<Matrix> d;
    std::vector<double> b;
    for (std::size_t l : active) {
        d.push_back(modified_distortion(model.source, model.criteria[l]));
        b.push_back(budget[l]);
    }
    std::optional<RDPoint> sub_warm;
    if (warm != nullptr && warm->multipliers.size() == budget.size()) {
        sub_warm = *warm;
        sub_warm->multipliers.clear();
        for (std::size_t l : active) sub_warm->multipliers.push_back(warm->multipliers[l]);
    }
    RDPoint sub;
    try {
        sub = rate_for_budget(px, d, b, opt, nullptr, sub_warm ? &*sub_warm : nullptr);
    } catch (const InfeasibleError& e) {
        std::vector<std::size_t> v;
        for (std::size_t i : e.violating()) v.push_back(active[i]);
        throw InfeasibleError(v, e.what());
    }
    RDPoint p = std::move(sub);
    p.budget = budget;
    std::vector<double> mult(budget.size(), 0.0), ach(budget.size(), 0.0);
    for (std::size_t i = 0; i < active.size(); ++i) {
        mult[active[i]] = p.multipliers[i];
        ach[active[i]] = p.achieved[i];
    }
    p.multipliers = std::move(mult);
    p.achieved = std::move(ach);
    return p;
}

/// Exhaustive search over row-stochastic channels on a grid of the given
/// step, for |X| <= 2 and |X^| <= 2. Constraints are evaluated directly as
/// E[d_l(X,X^) | S in S_l] from the joint law, independent of the modified
/// measures. Returns an upper bound on R*(D).
inline double r_star_bruteforce(const SourceModel& model, const DistortionBudget& budget, double grid_step)
{
    model.validate_budget(budget);
    const auto& src = model.source;
    if (src.num_symbols() > 2 || src.num_reproductions() > 2)
        throw Error(ErrorCode::AlphabetTooLarge, "brute force supports at most 2 symbols and 2 reproductions");
    if (!(grid_step > 0.0) || grid_step > 1.0) throw Error(ErrorCode::InvalidArgument, "grid_step must be in (0, 1]");

    const std::size_t nx = src.num_symbols(), ny = src.num_reproductions();
    const auto px = src.symbol_marginal();
    // weight[l][x] = P(S in S_l, X = x) / P(S in S_l)
    std::vector<std::vector<double>> weight;
    std::vector<std::size_t> which;
    for (std::size_t l = 0; l < model.criteria.size(); ++l) {
        const auto& c = model.criteria[l];
        double p_subset = 0.0;
        std::vector<double> w(nx, 0.0);
        for (std::size_t s = 0; s < src.num_states(); ++s)
            if (c.state_subset[s])
                for (std::size_t x = 0; x < nx; ++x) w[x] += src.joint()(s, x);
        for (double v : w) p_subset += v;
        if (!(p_subset > 0.0)) continue;
        for (double& v : w) v /= p_subset;
        weight.push_back(w);
        which.push_back(l);
    }

    const auto steps = static_cast<std::size_t>(std::llround(1.0 / grid_step));
    const std::size_t per_row = ny == 1 ? 1 : steps + 1;
    double best = std::numeric_limits<double>::infinity();
    Matrix w(nx, ny, 0.0);
    const std::size_t total = nx == 1 ? per_row : per_row * per_row;
    for (std::size_t idx = 0; idx < total; ++idx) {
        std::size_t rest = idx;
        for (std::size_t x = 0; x < nx; ++x) {
            const std::size_t k = rest % per_row;
            rest /= per_row;
            if (ny == 1) {
                w(x, 0) = 1.0;
            } else {
                w(x, 0) = static_cast<double>(k) / static_cast<double>(steps);
                w(x, 1) = 1.0 - w(x, 0);
            }
        }
        bool ok = true;
        for (std::size_t i = 0; i < which.size() && ok; ++i) {
            const auto& d = model.criteria[which[i]].distortion;
            double e = 0.0;
            for (std::size_t x = 0; x < nx; ++x)
                for (std::size_t y = 0; y < ny; ++y) e += weight[i][x] * w(x, y) * d(x, y);
            if (e > budget[which[i]] + 1e-12) ok = false;
        }
        if (!ok) continue;
        best = std::min(best, mutual_information(px, w));
    }
    if (!std::isfinite(best)) throw Error(ErrorCode::InfeasibleOnGrid, "no grid channel meets the constraints");
    return best;
}

} // namespace crd
