#pragma once

// Rates of codes that see class labels: R^G (labels free at both ends),
// R^C (labels also compressed), the perfect-classification closed form, and
// budget sweeps comparing them against R*.
//
// Labels are a function of X, so the allocation program for R^G is the
// conditional problem min I(X;X^|U) under the same modified constraints as
// R*. The default solver runs one dual search over s with an independent
// Blahut-Arimoto solve per class at shared multipliers; the per-class
// distortions it reaches are the allocation.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "crd/rd_core.hpp"

namespace crd {

/// delta[lambda][u]: distortion level granted to class u for criterion lambda.
using DistortionAllocation = Matrix;

enum class AllocationMethod {
    Dual,              ///< shared multipliers, per-class BA (default)
    CoordinateDescent  ///< pairwise budget exchanges with golden-section search
};

struct AllocationOptions {
    double resolution = 1e-3;
    AllocationMethod method = AllocationMethod::Dual;
    std::size_t max_sweeps = 60;
    DualOptions dual;
};

struct AllocationResult {
    double rate = 0.0;                          ///< R^G, bits
    DistortionAllocation allocation;
    std::vector<double> class_rates;            ///< R*_u at the allocation (0 for empty classes)
    std::vector<double> multipliers;            ///< per criterion (dual route only)
    std::vector<TestChannel> class_channels;    ///< per class; empty for empty classes
    std::size_t ba_evaluations = 0;
};

namespace detail {

struct ClassData {
    std::vector<double> pu;                     // P(c(X) = u)
    std::vector<std::size_t> labels;            // labels with positive mass
    Matrix joint_mass;                          // P(S in S_l, c(X) = u)
    std::vector<double> subset_mass;            // P(S in S_l)
};

inline ClassData class_data(const SourceModel& model)
{
    ClassData cd;
    cd.pu = label_probabilities(model.source, model.classifier);
    cd.labels = active_labels(model.source, model.classifier);
    cd.joint_mass = Matrix(model.criteria.size(), model.classifier.num_labels(), 0.0);
    for (std::size_t l = 0; l < model.criteria.size(); ++l) {
        const auto row = subset_label_probabilities(model.source, model.classifier, model.criteria[l]);
        std::copy(row.begin(), row.end(), cd.joint_mass.row(l).begin());
        cd.subset_mass.push_back(subset_probability(model.source, model.criteria[l]));
    }
    return cd;
}

inline SourceModel class_model(const SourceModel& model, std::size_t u)
{
    SourceModel m;
    m.source = class_conditional(model.source, model.classifier, u);
    m.classifier = Classifier::single_class(m.source.num_symbols(), model.classifier.labels[u]);
    m.criteria = model.criteria;
    return m;
}

/// Lowers entries of row l until sum_u P(S_l, u) delta(l, u) <= P(S_l) D(l)
/// holds in floating point. Only ever moves by a few ulps.
inline void enforce_row(DistortionAllocation& a, const ClassData& cd, std::size_t l, double rhs)
{
    auto lhs = [&] {
        double t = 0.0;
        for (std::size_t u : cd.labels) t += cd.joint_mass(l, u) * a(l, u);
        return t;
    };
    for (int guard = 0; guard < 256 && lhs() > rhs; ++guard)
        for (std::size_t u : cd.labels)
            if (cd.joint_mass(l, u) > 0.0) a(l, u) = std::nextafter(a(l, u), 0.0);
}

inline double max_entry(const Matrix& d)
{
    double m = 0.0;
    for (double v : d.data()) m = std::max(m, v);
    return m;
}

} // namespace detail

/// sum_u P(S in S_l, c(X)=u) delta(l, u) <= P(S in S_l) D(l) for every
/// active criterion, evaluated exactly as written.
inline bool allocation_feasible(const SourceModel& model, const DistortionBudget& budget,
                                const DistortionAllocation& a)
{
    const auto cd = detail::class_data(model);
    for (std::size_t l = 0; l < model.criteria.size(); ++l) {
        if (!(cd.subset_mass[l] > 0.0)) continue;
        double lhs = 0.0;
        for (std::size_t u : cd.labels) lhs += cd.joint_mass(l, u) * a(l, u);
        if (lhs > cd.subset_mass[l] * budget[l]) return false;
    }
    return true;
}

/// R*_u(delta(., u)): R* of the class-conditional source under its column of
/// the allocation. Infeasible columns give +infinity.
inline double class_rate(const SourceModel& model, std::size_t u, const DistortionAllocation& a,
                         const DualOptions& opt = {})
{
    const auto m = detail::class_model(model, u);
    DistortionBudget b(model.criteria.size());
    for (std::size_t l = 0; l < b.size(); ++l) b[l] = a(l, u);
    try {
        return r_star(m, b, opt).rate;
    } catch (const InfeasibleError&) {
        return std::numeric_limits<double>::infinity();
    }
}

/// sum_u P(c(X)=u) R*_u(delta(., u)).
inline double allocation_objective(const SourceModel& model, const DistortionAllocation& a,
                                   const DualOptions& opt = {})
{
    const auto cd = detail::class_data(model);
    double total = 0.0;
    for (std::size_t u : cd.labels) total += cd.pu[u] * class_rate(model, u, a, opt);
    return total;
}

namespace detail {

inline AllocationResult r_g_dual(const SourceModel& model, const DistortionBudget& budget, const DualOptions& opt)
{
    const auto cd = class_data(model);
    const auto active = active_criteria(model.source, model.criteria);
    const std::size_t nl = model.criteria.size(), nu = model.classifier.num_labels();
    const std::size_t ny = model.source.num_reproductions();
    const auto px = model.source.symbol_marginal();

    AllocationResult res;
    res.allocation = DistortionAllocation(nl, nu, 0.0);
    res.class_rates.assign(nu, 0.0);
    res.multipliers.assign(nl, 0.0);
    res.class_channels.assign(nu, TestChannel{});
    for (std::size_t l = 0; l < nl; ++l)
        for (std::size_t u : cd.labels)
            if (!(cd.joint_mass(l, u) > 0.0)) res.allocation(l, u) = max_entry(model.criteria[l].distortion);

    std::vector<Matrix> d;
    std::vector<double> b, lower;
    for (std::size_t l : active) {
        d.push_back(modified_distortion(model.source, model.criteria[l]));
        b.push_back(budget[l]);
        lower.push_back(minimum_distortion(px, d.back()));
    }

    // Per class u: the x in u and P(X = x | c(X) = u).
    std::vector<std::vector<double>> class_px(nu);
    for (std::size_t u : cd.labels) {
        class_px[u].assign(px.size(), 0.0);
        for (std::size_t x = 0; x < px.size(); ++x)
            if (model.classifier(x) == u) class_px[u][x] = px[x] / cd.pu[u];
    }

    // Class channel -> delta(l, u) = E[d_l | S in S_l, c(X) = u].
    auto fill_allocation = [&](std::size_t u, const TestChannel& w) {
        for (std::size_t i = 0; i < active.size(); ++i) {
            const std::size_t l = active[i];
            if (!(cd.joint_mass(l, u) > 0.0)) continue;
            const double e = expected_distortion(class_px[u], w, d[i]);
            // E_u[d^_l] * P(S_l) / P(S_l | u)
            res.allocation(l, u) = e * cd.subset_mass[l] * cd.pu[u] / cd.joint_mass(l, u);
        }
    };

    if (active.empty()) {
        for (std::size_t u : cd.labels) {
            TestChannel w(px.size(), ny, 0.0);
            for (std::size_t x = 0; x < px.size(); ++x) w(x, 0) = 1.0;
            res.class_channels[u] = std::move(w);
        }
        return res;
    }

    std::vector<std::size_t> violating;
    for (std::size_t i = 0; i < active.size(); ++i)
        if (lower[i] - b[i] > 1e-12 * std::max(1.0, b[i])) violating.push_back(active[i]);
    if (!violating.empty()) throw InfeasibleError(violating, "budget below the minimum achievable distortion");

    // Rate 0 if one fixed reproduction per class meets every constraint.
    // cost[u][y][i] = sum_{x in u} p(x) d^_i(x, y)
    {
        std::vector<std::vector<std::vector<double>>> cost(nu);
        for (std::size_t u : cd.labels) {
            cost[u].assign(ny, std::vector<double>(active.size(), 0.0));
            for (std::size_t x = 0; x < px.size(); ++x) {
                if (model.classifier(x) != u || !(px[x] > 0.0)) continue;
                for (std::size_t y = 0; y < ny; ++y)
                    for (std::size_t i = 0; i < active.size(); ++i) cost[u][y][i] += px[x] * d[i](x, y);
            }
        }
        const double combos = std::pow(static_cast<double>(ny), static_cast<double>(cd.labels.size()));
        if (combos <= static_cast<double>(1u << 22)) {
            std::vector<std::size_t> pick(cd.labels.size(), 0);
            for (;;) {
                std::vector<double> e(active.size(), 0.0);
                for (std::size_t k = 0; k < pick.size(); ++k)
                    for (std::size_t i = 0; i < active.size(); ++i) e[i] += cost[cd.labels[k]][pick[k]][i];
                bool ok = true;
                for (std::size_t i = 0; i < active.size() && ok; ++i) ok = e[i] <= b[i];
                if (ok) {
                    for (std::size_t k = 0; k < pick.size(); ++k) {
                        const std::size_t u = cd.labels[k];
                        TestChannel w(px.size(), ny, 0.0);
                        for (std::size_t x = 0; x < px.size(); ++x) w(x, pick[k]) = 1.0;
                        fill_allocation(u, w);
                        res.class_channels[u] = std::move(w);
                    }
                    for (std::size_t i = 0; i < active.size(); ++i)
                        detail::enforce_row(res.allocation, cd, active[i], cd.subset_mass[active[i]] * b[i]);
                    return res;
                }
                std::size_t k = 0;
                while (k < pick.size() && ++pick[k] == ny) pick[k++] = 0;
                if (k == pick.size()) break;
            }
        }
    }

    std::vector<std::vector<double>> q_warm(nu);
    std::vector<BaResult> last(nu);
    auto eval = [&](std::span<const double> s) {
        DualEval r{0.0, std::vector<double>(active.size(), 0.0)};
        for (std::size_t u : cd.labels) {
            last[u] = ba_fixed_multipliers(class_px[u], d, s, opt.ba, nullptr, q_warm[u]);
            q_warm[u] = last[u].output_marginal;
            r.rate += cd.pu[u] * last[u].rate;
            for (std::size_t i = 0; i < active.size(); ++i) r.distortions[i] += cd.pu[u] * last[u].distortions[i];
        }
        return r;
    };
    std::size_t evaluations = 0;
    std::vector<double> s;
    try {
        s = dual_search(eval, b, lower, std::vector<double>(active.size(), 1.0), opt, evaluations);
    } catch (const InfeasibleError& e) {
        throw InfeasibleError(active, e.what());
    }
    const auto e = eval(s).distortions;

    double rate = 0.0;
    for (std::size_t u : cd.labels) {
        rate += cd.pu[u] * last[u].rate;
        res.class_rates[u] = last[u].rate;
        fill_allocation(u, last[u].channel);
        res.class_channels[u] = std::move(last[u].channel);
    }
    for (std::size_t i = 0; i < active.size(); ++i) {
        rate += s[i] * (e[i] - b[i]) / kLn2;
        res.multipliers[active[i]] = s[i];
        detail::enforce_row(res.allocation, cd, active[i], cd.subset_mass[active[i]] * b[i]);
    }
    res.rate = std::max(rate, 0.0);
    res.ba_evaluations = (evaluations + 1) * cd.labels.size();
    return res;
}

inline AllocationResult r_g_coordinate(const SourceModel& model, const DistortionBudget& budget,
                                       const AllocationOptions& opt)
{
    const auto cd = class_data(model);
    const std::size_t nl = model.criteria.size(), nu = model.classifier.num_labels();
    const auto active = active_criteria(model.source, model.criteria);

    // Smallest reachable delta(l, u) for each class.
    Matrix floor_(nl, nu, 0.0);
    std::vector<SourceModel> per_class(nu);
    for (std::size_t u : cd.labels) {
        per_class[u] = class_model(model, u);
        const auto pxu = per_class[u].source.symbol_marginal();
        for (std::size_t l : active)
            if (cd.joint_mass(l, u) > 0.0)
                floor_(l, u) = minimum_distortion(pxu, modified_distortion(per_class[u].source, model.criteria[l]));
    }

    DistortionAllocation a(nl, nu, 0.0);
    std::vector<std::size_t> violating;
    for (std::size_t l = 0; l < nl; ++l) {
        for (std::size_t u : cd.labels)
            a(l, u) = cd.joint_mass(l, u) > 0.0 ? budget[l] : max_entry(model.criteria[l].distortion);
        if (!(cd.subset_mass[l] > 0.0)) continue;
        const double rhs = cd.subset_mass[l] * budget[l];
        double need = 0.0;
        bool proportional_ok = true;
        for (std::size_t u : cd.labels) {
            need += cd.joint_mass(l, u) * floor_(l, u);
            if (cd.joint_mass(l, u) > 0.0 && floor_(l, u) > budget[l]) proportional_ok = false;
        }
        if (need - rhs > 1e-12 * std::max(1.0, rhs)) {
            violating.push_back(l);
            continue;
        }
        if (!proportional_ok) {
            // Every class gets its floor plus an equal share of what is left.
            const double extra = std::max(0.0, rhs - need) / cd.subset_mass[l];
            for (std::size_t u : cd.labels)
                if (cd.joint_mass(l, u) > 0.0) a(l, u) = floor_(l, u) + extra;
        }
        enforce_row(a, cd, l, rhs);
    }
    if (!violating.empty()) throw InfeasibleError(violating, "budget below the minimum achievable distortion");

    std::size_t evaluations = 0;
    auto rate_of = [&](std::size_t u, const DistortionAllocation& at) {
        ++evaluations;
        DistortionBudget b(nl);
        for (std::size_t l = 0; l < nl; ++l) b[l] = at(l, u);
        try {
            return r_star(per_class[u], b, opt.dual).rate;
        } catch (const InfeasibleError&) {
            return std::numeric_limits<double>::infinity();
        }
    };
    std::vector<double> rates(nu, 0.0);
    for (std::size_t u : cd.labels) rates[u] = rate_of(u, a);

    const double golden = 0.5 * (std::sqrt(5.0) - 1.0);
    for (std::size_t sweep = 0; sweep < opt.max_sweeps; ++sweep) {
        double improvement = 0.0;
        for (std::size_t l : active)
            for (std::size_t i = 0; i < cd.labels.size(); ++i)
                for (std::size_t j = i + 1; j < cd.labels.size(); ++j) {
                    const std::size_t u = cd.labels[i], v = cd.labels[j];
                    const double pu = cd.joint_mass(l, u), pv = cd.joint_mass(l, v);
                    if (!(pu > 0.0) || !(pv > 0.0)) continue;
                    // Move budget between u and v keeping pu a_u + pv a_v fixed.
                    const double total = pu * a(l, u) + pv * a(l, v);
                    const double lo = floor_(l, u), hi = (total - pv * floor_(l, v)) / pu;
                    if (!(hi > lo)) continue;
                    auto at = [&](double x, DistortionAllocation& out) {
                        out = a;
                        out(l, u) = x;
                        out(l, v) = std::max((total - pu * x) / pv, floor_(l, v));
                        while (pu * out(l, u) + pv * out(l, v) > total) out(l, v) = std::nextafter(out(l, v), 0.0);
                    };
                    DistortionAllocation tmp;
                    auto f = [&](double x) {
                        at(x, tmp);
                        return cd.pu[u] * rate_of(u, tmp) + cd.pu[v] * rate_of(v, tmp);
                    };
                    double x0 = lo, x3 = hi;
                    double x1 = x3 - golden * (x3 - x0), x2 = x0 + golden * (x3 - x0);
                    double f1 = f(x1), f2 = f(x2);
                    while (x3 - x0 > opt.resolution) {
                        if (f1 <= f2) {
                            x3 = x2;
                            x2 = x1;
                            f2 = f1;
                            x1 = x3 - golden * (x3 - x0);
                            f1 = f(x1);
                        } else {
                            x0 = x1;
                            x1 = x2;
                            f1 = f2;
                            x2 = x0 + golden * (x3 - x0);
                            f2 = f(x2);
                        }
                    }
                    const double best_x = f1 <= f2 ? x1 : x2;
                    const double current = cd.pu[u] * rates[u] + cd.pu[v] * rates[v];
                    DistortionAllocation cand;
                    at(best_x, cand);
                    const double ru = rate_of(u, cand), rv = rate_of(v, cand);
                    const double value = cd.pu[u] * ru + cd.pu[v] * rv;
                    if (value < current - 1e-12) {
                        improvement += current - value;
                        a = std::move(cand);
                        rates[u] = ru;
                        rates[v] = rv;
                    }
                }
        if (improvement < 1e-9) break;
    }

    AllocationResult res;
    res.allocation = a;
    res.class_rates.assign(nu, 0.0);
    res.multipliers.assign(nl, 0.0);
    res.class_channels.assign(nu, TestChannel{});
    for (std::size_t u : cd.labels) {
        res.class_rates[u] = rates[u];
        res.rate += cd.pu[u] * rates[u];
        DistortionBudget b(nl);
        for (std::size_t l = 0; l < nl; ++l) b[l] = a(l, u);
        res.class_channels[u] = r_star(per_class[u], b, opt.dual).channel;
    }
    res.ba_evaluations = evaluations;
    return res;
}

} // namespace detail

/// R^G(D) and the distortion allocation attaining it.
inline AllocationResult r_g(const SourceModel& model, const DistortionBudget& budget,
                            const AllocationOptions& opt = {})
{
    model.validate_budget(budget);
    if (!(opt.resolution > 0.0)) throw Error(ErrorCode::InvalidArgument, "allocation resolution must be > 0");
    return opt.method == AllocationMethod::Dual ? detail::r_g_dual(model, budget, opt.dual)
                                                : detail::r_g_coordinate(model, budget, opt);
}

/// R^C(D) = R^G(D) + H(c(X)).
inline double r_c(const SourceModel& model, const DistortionBudget& budget, const AllocationOptions& opt = {})
{
    return r_g(model, budget, opt).rate + label_entropy(model.source, model.classifier);
}

/// R^C(D) computed directly: RD of X with reproductions (x^, u), where the
/// label coordinate must equal c(x). The exact-label requirement is imposed
/// on the channel support.
inline RDPoint r_c_augmented(const SourceModel& model, const DistortionBudget& budget, const DualOptions& opt = {})
{
    model.validate_budget(budget);
    const auto& src = model.source;
    const std::size_t ny = src.num_reproductions(), nu = model.classifier.num_labels();
    const auto active = active_criteria(src, model.criteria);
    const auto px = src.symbol_marginal();

    ChannelSupport support(src.num_symbols(), std::vector<bool>(ny * nu, false));
    for (std::size_t x = 0; x < src.num_symbols(); ++x)
        for (std::size_t y = 0; y < ny; ++y) support[x][y * nu + model.classifier(x)] = true;

    std::vector<Matrix> d;
    std::vector<double> b;
    if (active.empty()) {
        // Only the label constraint remains.
        d.push_back(Matrix(src.num_symbols(), ny * nu, 0.0));
        b.push_back(0.0);
    }
    for (std::size_t l : active) {
        const Matrix base = modified_distortion(src, model.criteria[l]);
        Matrix aug(src.num_symbols(), ny * nu, 0.0);
        for (std::size_t x = 0; x < src.num_symbols(); ++x)
            for (std::size_t y = 0; y < ny; ++y)
                for (std::size_t u = 0; u < nu; ++u) aug(x, y * nu + u) = base(x, y);
        d.push_back(std::move(aug));
        b.push_back(budget[l]);
    }
    RDPoint p;
    try {
        p = rate_for_budget(px, d, b, opt, &support);
    } catch (const InfeasibleError& e) {
        std::vector<std::size_t> v;
        for (std::size_t i : e.violating()) v.push_back(active.empty() ? 0 : active[i]);
        throw InfeasibleError(v, e.what());
    }
    if (active.empty()) {
        // Rate 0 shortcut cannot fire across classes; the value is H(c(X)).
        p.rate = label_entropy(src, model.classifier);
    }
    std::vector<double> mult(budget.size(), 0.0), ach(budget.size(), 0.0);
    for (std::size_t i = 0; i < active.size(); ++i) {
        mult[active[i]] = p.multipliers[i];
        ach[active[i]] = p.achieved[i];
    }
    p.budget = budget;
    p.multipliers = std::move(mult);
    p.achieved = std::move(ach);
    return p;
}

/// Closed form under perfect classification: sum over active criteria of
/// P(S in S_l) R_l(D(l)), where R_l is the classical RD of X given S in S_l
/// under d_l. Labels are matched to criteria by id, else by position.
inline double r_g_perfect(const SourceModel& model, const DistortionBudget& budget, const DualOptions& opt = {})
{
    model.validate_budget(budget);
    const auto& src = model.source;
    const auto& cls = model.classifier;
    const std::size_t nl = model.criteria.size();

    std::vector<std::size_t> label_of(nl);
    bool by_id = cls.num_labels() == nl;
    for (std::size_t l = 0; l < nl && by_id; ++l) {
        auto it = std::find(cls.labels.begin(), cls.labels.end(), model.criteria[l].id);
        if (it == cls.labels.end()) by_id = false;
        else label_of[l] = static_cast<std::size_t>(it - cls.labels.begin());
    }
    if (!by_id) {
        if (cls.num_labels() != nl)
            throw Error(ErrorCode::NotPerfectClassification, "labels do not correspond to criteria");
        for (std::size_t l = 0; l < nl; ++l) label_of[l] = l;
    }

    double total = 0.0;
    for (std::size_t l = 0; l < nl; ++l) {
        const auto& c = model.criteria[l];
        double mismatch = 0.0;
        for (std::size_t s = 0; s < src.num_states(); ++s)
            for (std::size_t x = 0; x < src.num_symbols(); ++x)
                if (c.state_subset[s] != (cls(x) == label_of[l])) mismatch += src.joint()(s, x);
        if (!(mismatch < 1e-12))
            throw Error(ErrorCode::NotPerfectClassification,
                        "criterion '" + c.id + "' subset and its class differ by mass " + std::to_string(mismatch));
    }
    for (std::size_t l = 0; l < nl; ++l) {
        const auto& c = model.criteria[l];
        const double ps = subset_probability(src, c);
        if (!(ps > 0.0)) continue;
        std::vector<double> q(src.num_symbols(), 0.0);
        for (std::size_t s = 0; s < src.num_states(); ++s)
            if (c.state_subset[s])
                for (std::size_t x = 0; x < src.num_symbols(); ++x) q[x] += src.joint()(s, x) / ps;
        try {
            total += ps * classical_rd(q, c.distortion, budget[l], opt);
        } catch (const InfeasibleError&) {
            throw InfeasibleError({l}, "criterion '" + c.id + "' budget below the minimum achievable distortion");
        }
    }
    return total;
}

struct GapRow {
    DistortionBudget budget;
    double r_star = std::numeric_limits<double>::quiet_NaN();
    double r_c = std::numeric_limits<double>::quiet_NaN();
    double r_g = std::numeric_limits<double>::quiet_NaN();
    std::string status = "ok";

    double gap_c() const { return r_c - r_star; }
    double gap_g() const { return r_star - r_g; }
};

struct GapReport {
    std::vector<std::string> criterion_ids;
    double label_entropy = 0.0;
    std::vector<GapRow> rows;
};

/// Tolerance on R^G <= R* <= R^C at each point.
inline constexpr double kOrderingTolerance = 2e-3;

/// Evaluates R*, R^G and R^C at every budget. Failures are recorded in the
/// row status and the sweep continues.
inline GapReport gap_sweep(const SourceModel& model, const std::vector<DistortionBudget>& grid,
                           const AllocationOptions& opt = {})
{
    if (grid.empty()) throw Error(ErrorCode::InvalidArgument, "budget grid is empty");
    GapReport rep;
    for (const auto& c : model.criteria) rep.criterion_ids.push_back(c.id);
    rep.label_entropy = label_entropy(model.source, model.classifier);
    std::optional<RDPoint> warm;
    for (const auto& b : grid) {
        GapRow row;
        row.budget = b;
        try {
            auto p = r_star(model, b, opt.dual, warm ? &*warm : nullptr);
            row.r_star = p.rate;
            warm = std::move(p);
            row.r_g = r_g(model, b, opt).rate;
            row.r_c = row.r_g + rep.label_entropy;
            if (row.gap_g() < -kOrderingTolerance || row.gap_c() < -kOrderingTolerance) row.status = "ordering_violated";
        } catch (const Error& e) {
            row.status = to_string(e.code());
        }
        rep.rows.push_back(std::move(row));
    }
    return rep;
}

inline std::string format_double(double v)
{
    if (std::isnan(v)) return "nan";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string to_csv(const GapReport& rep)
{
    std::string out;
    for (const auto& id : rep.criterion_ids) out += "D_" + id + ",";
    out += "R_star,R_C,R_G,gap_C,gap_G,status\n";
    for (const auto& r : rep.rows) {
        for (double d : r.budget) out += format_double(d) + ",";
        out += format_double(r.r_star) + "," + format_double(r.r_c) + "," + format_double(r.r_g) + "," +
               format_double(r.gap_c()) + "," + format_double(r.gap_g()) + "," + r.status + "\n";
    }
    return out;
}

} // namespace crd
