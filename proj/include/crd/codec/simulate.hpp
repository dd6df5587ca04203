#pragma once

// Monte-Carlo runs of a code on the composite source: rate and, per
// criterion, how often the realised block meets D(lambda) + eps.

#include <algorithm>
#include <cstdio>
#include <exception>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "crd/codec/design.hpp"
#include "crd/fidelity.hpp"

namespace crd {

struct SimulationOptions {
    std::size_t n = 10'000;
    std::size_t trials = 100;
    std::uint64_t seed = 1;
    std::vector<double> eps = {0.05};
    std::size_t workers = 0;  ///< 0: hardware concurrency
};

struct TrialResult {
    std::size_t trial = 0;
    std::size_t n = 0;
    std::size_t bits = 0;
    double rate = 0.0;                        ///< bits per symbol (0 when n = 0)
    std::vector<double> distortion;           ///< per criterion, in-subset average
    std::vector<std::vector<bool>> met;       ///< [criterion][eps]
    std::vector<std::size_t> class_counts;    ///< per label
};

struct SimulationReport {
    std::vector<std::string> criterion_ids;
    std::vector<double> eps;
    std::vector<TrialResult> trials;
    double mean_rate = 0.0;
    double max_rate = 0.0;
    std::vector<std::vector<double>> met_frequency;  ///< [criterion][eps]
    std::vector<std::size_t> class_counts;
};

/// n i.i.d. draws of (S, X).
inline std::pair<Sequence, Sequence> sample_source(const CompositeSource& src, std::size_t n, Sampler& rng)
{
    const auto cdf = cumulative(src.joint().data());
    Sequence s(n), x(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t k = rng.draw(cdf);
        s[i] = static_cast<Symbol>(k / src.num_symbols());
        x[i] = static_cast<Symbol>(k % src.num_symbols());
    }
    return {std::move(s), std::move(x)};
}

inline TrialResult run_trial(const SourceModel& model, const VariableLengthCode& code, const DistortionBudget& budget,
                             const SimulationOptions& opt, std::size_t trial)
{
    Sampler rng(opt.seed, trial);
    TrialResult r;
    r.trial = trial;
    r.n = opt.n;
    Triple t;
    std::tie(t.states, t.symbols) = sample_source(model.source, opt.n, rng);
    const BitString bits = code.encode(t.symbols);
    t.reproductions = code.decode(bits);
    if (t.reproductions.size() != t.symbols.size())
        throw Error(ErrorCode::LengthMismatch, "decoder output length differs from the input");
    r.bits = bits.size();
    r.rate = opt.n == 0 ? 0.0 : static_cast<double>(bits.size()) / static_cast<double>(opt.n);
    r.class_counts.assign(model.classifier.num_labels(), 0);
    for (Symbol x : t.symbols) ++r.class_counts[model.classifier(x)];
    for (std::size_t l = 0; l < model.criteria.size(); ++l) {
        const auto& c = model.criteria[l];
        r.distortion.push_back(subset_average(t, c));
        std::vector<bool> met;
        for (double e : opt.eps) met.push_back(meets(t, c, budget[l] + e));
        r.met.push_back(std::move(met));
    }
    return r;
}

/// Trials are independent and seeded by (seed, trial index); results do not
/// depend on the worker count.
inline SimulationReport simulate(const SourceModel& model, const VariableLengthCode& code,
                                 const DistortionBudget& budget, const SimulationOptions& opt)
{
    model.validate_budget(budget);
    if (opt.trials == 0) throw Error(ErrorCode::InvalidArgument, "trials must be >= 1");
    for (double e : opt.eps)
        if (!(e >= 0.0)) throw Error(ErrorCode::InvalidArgument, "eps values must be >= 0");

    SimulationReport rep;
    for (const auto& c : model.criteria) rep.criterion_ids.push_back(c.id);
    rep.eps = opt.eps;
    rep.trials.resize(opt.trials);

    std::size_t workers = opt.workers == 0 ? std::max(1u, std::thread::hardware_concurrency()) : opt.workers;
    workers = std::min(workers, opt.trials);
    std::vector<std::exception_ptr> failures(workers);
    auto work = [&](std::size_t w) {
        try {
            for (std::size_t i = w; i < opt.trials; i += workers) rep.trials[i] = run_trial(model, code, budget, opt, i);
        } catch (...) {
            failures[w] = std::current_exception();
        }
    };
    if (workers == 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work, w);
        for (auto& th : pool) th.join();
    }
    for (auto& f : failures)
        if (f) std::rethrow_exception(f);

    rep.met_frequency.assign(model.criteria.size(), std::vector<double>(opt.eps.size(), 0.0));
    rep.class_counts.assign(model.classifier.num_labels(), 0);
    double total = 0.0;
    for (const auto& t : rep.trials) {
        total += t.rate;
        rep.max_rate = std::max(rep.max_rate, t.rate);
        for (std::size_t l = 0; l < t.met.size(); ++l)
            for (std::size_t e = 0; e < t.met[l].size(); ++e) rep.met_frequency[l][e] += t.met[l][e] ? 1.0 : 0.0;
        for (std::size_t u = 0; u < t.class_counts.size(); ++u) rep.class_counts[u] += t.class_counts[u];
    }
    rep.mean_rate = total / static_cast<double>(opt.trials);
    for (auto& row : rep.met_frequency)
        for (double& v : row) v /= static_cast<double>(opt.trials);
    return rep;
}

inline std::string to_csv(const SimulationReport& rep)
{
    auto label = [](double v) {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%g", v);
        return std::string(buf);
    };
    std::string out = "trial,n,rate";
    for (const auto& id : rep.criterion_ids) out += ",distortion_" + id;
    for (const auto& id : rep.criterion_ids)
        for (double e : rep.eps) out += ",met_" + id + "_" + label(e);
    out += "\n";
    for (const auto& t : rep.trials) {
        out += std::to_string(t.trial) + "," + std::to_string(t.n) + "," + format_double(t.rate);
        for (double d : t.distortion) out += "," + format_double(d);
        for (const auto& row : t.met)
            for (bool m : row) out += m ? ",1" : ",0";
        out += "\n";
    }
    return out;
}

} // namespace crd
