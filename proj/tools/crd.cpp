// crd: rate-distortion sweeps, codec simulations and example sources from
// the command line. All output is CSV or JSON; nothing is read from the
// environment.

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "crd/codec/simulate.hpp"
#include "crd/example_sources.hpp"
#include "crd/source_io.hpp"

namespace fs = std::filesystem;

namespace {

using crd::DistortionBudget;
using crd::Error;
using crd::ErrorCode;

std::vector<std::string> split(const std::string& s, char sep)
{
    std::vector<std::string> parts;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) parts.push_back(cur);
    if (!s.empty() && s.back() == sep) parts.emplace_back();
    return parts;
}

double parse_number(const std::string& s, const std::string& what)
{
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != s.size()) throw Error(ErrorCode::InvalidArgument, "bad number '" + s + "' in " + what);
    return v;
}

std::size_t parse_count(const std::string& s, const std::string& what)
{
    const double v = parse_number(s, what);
    if (!(v >= 1.0) || v != static_cast<double>(static_cast<std::size_t>(v)))
        throw Error(ErrorCode::InvalidArgument, "steps must be an integer >= 1 in " + what);
    return static_cast<std::size_t>(v);
}

std::vector<double> linspace(double a, double b, std::size_t steps)
{
    if (steps == 1) return {a};
    std::vector<double> v(steps);
    for (std::size_t i = 0; i < steps; ++i)
        v[i] = i + 1 == steps ? b : a + (b - a) * static_cast<double>(i) / static_cast<double>(steps - 1);
    return v;
}

/// Budgets grouped into chunks. Each chunk is swept in order with warm
/// starts; chunks are independent, so the output does not depend on how
/// they are spread over workers.
struct Grid {
    std::string kind;                               // "grid", "line" or "points"
    std::string definition;
    std::vector<std::vector<DistortionBudget>> chunks;
    std::vector<double> line_levels;                 // one per chunk for lines
};

// Syntax:
//   A:B:N[:log][,...]     Cartesian product, one range per criterion (or one for all)
//   line:d1/d2/...:N      N points on each line sum_l P(S in S_l) D_l = d (two criteria)
//   points:a/b,c/d        explicit budgets
Grid parse_grid(const std::string& text, const crd::SourceModel& model)
{
    const std::size_t k = model.criteria.size();
    if (k == 0) throw Error(ErrorCode::InvalidArgument, "the source has no criteria to sweep");
    Grid g;
    g.definition = text;
    auto level_list = [&](const std::string& s) {
        std::vector<double> v;
        for (const auto& p : split(s, '/')) v.push_back(parse_number(p, "--budget-grid"));
        for (double d : v)
            if (!(d >= 0.0)) throw Error(ErrorCode::InvalidArgument, "budget levels must be >= 0");
        return v;
    };

    if (text.rfind("points:", 0) == 0) {
        g.kind = "points";
        std::vector<DistortionBudget> pts;
        for (const auto& p : split(text.substr(7), ',')) {
            auto b = level_list(p);
            if (b.size() != k) throw Error(ErrorCode::ShapeMismatch, "each point needs one level per criterion");
            pts.push_back(std::move(b));
        }
        if (pts.empty()) throw Error(ErrorCode::InvalidArgument, "no points given");
        g.chunks.push_back(std::move(pts));
        return g;
    }

    if (text.rfind("line:", 0) == 0) {
        g.kind = "line";
        const auto parts = split(text.substr(5), ':');
        if (parts.size() != 2) throw Error(ErrorCode::InvalidArgument, "line grids read line:d1/d2/...:N");
        if (k != 2) throw Error(ErrorCode::InvalidArgument, "line grids need exactly two criteria");
        const double p0 = crd::subset_probability(model.source, model.criteria[0]);
        const double p1 = crd::subset_probability(model.source, model.criteria[1]);
        if (!(p0 > 0.0 && p1 > 0.0)) throw Error(ErrorCode::InactiveCriterion, "line grids need both criteria active");
        const std::size_t steps = parse_count(parts[1], "--budget-grid");
        for (double delta : level_list(parts[0])) {
            std::vector<DistortionBudget> line;
            for (double t : linspace(0.0, 1.0, steps)) {
                const double d0 = t * delta / p0;
                line.push_back({d0, std::max(0.0, (delta - p0 * d0) / p1)});
            }
            g.chunks.push_back(std::move(line));
            g.line_levels.push_back(delta);
        }
        return g;
    }

    g.kind = "grid";
    const auto ranges = split(text, ',');
    if (ranges.size() != 1 && ranges.size() != k)
        throw Error(ErrorCode::ShapeMismatch, "give one range for all criteria or one per criterion");
    std::vector<std::vector<double>> axes;
    for (std::size_t l = 0; l < k; ++l) {
        const auto r = split(ranges[ranges.size() == 1 ? 0 : l], ':');
        const bool log_scale = r.size() == 4 && r[3] == "log";
        if (r.size() != 3 && !log_scale) throw Error(ErrorCode::InvalidArgument, "ranges read MIN:MAX:STEPS[:log]");
        const double a = parse_number(r[0], "--budget-grid"), b = parse_number(r[1], "--budget-grid");
        if (!(a >= 0.0) || !(b >= a)) throw Error(ErrorCode::InvalidArgument, "ranges need 0 <= MIN <= MAX");
        if (log_scale && !(a > 0.0)) throw Error(ErrorCode::InvalidArgument, "log ranges need MIN > 0");
        const std::size_t steps = parse_count(r[2], "--budget-grid");
        if (log_scale) {
            auto axis = linspace(std::log(a), std::log(b), steps);
            for (double& v : axis) v = std::exp(v);
            axis.front() = a;
            axis.back() = b;
            axes.push_back(std::move(axis));
        } else {
            axes.push_back(linspace(a, b, steps));
        }
    }
    // The last criterion varies fastest; every setting of the others is a chunk.
    std::vector<std::size_t> idx(k, 0);
    while (true) {
        std::vector<DistortionBudget> chunk;
        for (double last : axes[k - 1]) {
            DistortionBudget b(k);
            for (std::size_t l = 0; l + 1 < k; ++l) b[l] = axes[l][idx[l]];
            b[k - 1] = last;
            chunk.push_back(std::move(b));
        }
        g.chunks.push_back(std::move(chunk));
        std::size_t l = k - 1;
        while (l > 0) {
            --l;
            if (++idx[l] < axes[l].size()) break;
            idx[l] = 0;
            if (l == 0) return g;
        }
        if (k == 1) return g;
    }
}

std::string default_grid(const std::string& example)
{
    if (example == "example1") return "line:0.1/0.25/0.4:101";
    if (example == "example2") return "0:0.5:50";
    if (example == "example3") return "0.0001:0.25:50:log";
    return "0:0.5:21";
}

struct Common {
    std::string spec;
    std::string example;
    std::string grid;
    double tol = 1e-6;
    double alloc_res = 1e-3;
    std::string out = ".";
    std::size_t workers = 0;
};

crd::SourceModel load_model(const Common& c)
{
    if (!c.spec.empty()) return crd::load_source(c.spec);
    return crd::build_example(c.example);
}

crd::AllocationOptions allocation_options(const Common& c)
{
    if (!(c.tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "--tol must be > 0");
    if (!(c.alloc_res > 0.0)) throw Error(ErrorCode::InvalidArgument, "--alloc-res must be > 0");
    crd::AllocationOptions opt;
    opt.resolution = c.alloc_res;
    opt.dual.constraint_tol = c.tol;
    return opt;
}

std::size_t worker_count(std::size_t requested, std::size_t jobs)
{
    const std::size_t w = requested == 0 ? std::max(1u, std::thread::hardware_concurrency()) : requested;
    return std::max<std::size_t>(1, std::min(w, jobs));
}

std::string read_file(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::InvalidArgument, "cannot read '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const fs::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write '" + path.string() + "'");
    out << text;
    if (!out) throw Error(ErrorCode::InvalidArgument, "write failed for '" + path.string() + "'");
}

fs::path prepare_out(const std::string& dir)
{
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(ErrorCode::InvalidArgument, "cannot create '" + dir + "': " + ec.message());
    return fs::path(dir);
}

std::string source_name(const Common& c) { return c.spec.empty() ? c.example : c.spec; }

nlohmann::json config_json(const Common& c, const Grid& g)
{
    nlohmann::json j;
    j["source"] = source_name(c);
    j["budget_grid"] = g.definition;
    j["grid_kind"] = g.kind;
    j["tol"] = c.tol;
    j["alloc_res"] = c.alloc_res;
    return j;
}

/// R^O(delta) when every criterion uses the same measure, NaN otherwise.
double combined_rd(const crd::SourceModel& m, double delta, const crd::DualOptions& opt)
{
    const auto& d = m.criteria.front().distortion;
    for (const auto& c : m.criteria)
        if (c.distortion.rows() != d.rows() || c.distortion.cols() != d.cols() || !std::ranges::equal(c.distortion.data(), d.data()))
            return std::numeric_limits<double>::quiet_NaN();
    return crd::classical_rd(m.source.symbol_marginal(), d, delta, opt);
}

int run_sweep(const Common& c)
{
    const auto model = load_model(c);
    const auto opt = allocation_options(c);
    const Grid grid = parse_grid(c.grid.empty() ? default_grid(c.example) : c.grid, model);
    const fs::path out = prepare_out(c.out);

    std::vector<crd::GapReport> parts(grid.chunks.size());
    std::vector<std::exception_ptr> failures;
    const std::size_t workers = worker_count(c.workers, grid.chunks.size());
    failures.resize(workers);
    auto work = [&](std::size_t w) {
        try {
            for (std::size_t i = w; i < grid.chunks.size(); i += workers)
                parts[i] = crd::gap_sweep(model, grid.chunks[i], opt);
        } catch (...) {
            failures[w] = std::current_exception();
        }
    };
    std::vector<std::thread> pool;
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work, w);
    work(0);
    for (auto& t : pool) t.join();
    for (auto& f : failures)
        if (f) std::rethrow_exception(f);

    std::size_t bad = 0;
    for (const auto& p : parts)
        for (const auto& r : p.rows) bad += r.status == "ok" ? 0 : 1;

    if (grid.kind == "line") {
        std::string minima = "delta,min_R_star";
        for (const auto& id : parts.front().criterion_ids) minima += ",argmin_D_" + id;
        minima += ",R_O\n";
        for (std::size_t i = 0; i < parts.size(); ++i) {
            char name[64];
            std::snprintf(name, sizeof name, "sweep_line_%zu.csv", i);
            write_file(out / name, crd::to_csv(parts[i]));
            const crd::GapRow* best = nullptr;
            for (const auto& r : parts[i].rows)
                if (r.status == "ok" && (!best || r.r_star < best->r_star)) best = &r;
            minima += crd::format_double(grid.line_levels[i]) + "," +
                      crd::format_double(best ? best->r_star : std::numeric_limits<double>::quiet_NaN());
            for (std::size_t l = 0; l < model.criteria.size(); ++l)
                minima += "," + crd::format_double(best ? best->budget[l] : std::numeric_limits<double>::quiet_NaN());
            minima += "," + crd::format_double(combined_rd(model, grid.line_levels[i], opt.dual)) + "\n";
        }
        write_file(out / "line_minima.csv", minima);
    } else {
        crd::GapReport all = parts.front();
        for (std::size_t i = 1; i < parts.size(); ++i)
            all.rows.insert(all.rows.end(), parts[i].rows.begin(), parts[i].rows.end());
        write_file(out / "sweep.csv", crd::to_csv(all));
    }
    write_file(out / "sweep_config.json", config_json(c, grid).dump(2) + "\n");
    std::size_t points = 0;
    for (const auto& ch : grid.chunks) points += ch.size();
    std::cerr << "sweep: " << points << " points, " << bad << " with non-ok status, written to " << out.string() << "\n";
    return 0;
}

struct SimFlags {
    std::size_t n = 10'000;
    std::size_t trials = 100;
    std::uint64_t seed = 1;
    std::vector<double> eps = {0.05};
    std::size_t block = 16;
    double slack = 0.06;
};

int run_simulation(const Common& c, const SimFlags& s)
{
    const auto model = load_model(c);
    crd::CtcDesignOptions design;
    design.allocation = allocation_options(c);
    design.block_length = s.block;
    design.rate_slack = s.slack;
    design.codebook.seed = s.seed;
    std::string points = "points:";
    for (std::size_t l = 0; l < model.criteria.size(); ++l) points += l == 0 ? "0.1" : "/0.1";
    const Grid grid = parse_grid(c.grid.empty() ? points : c.grid, model);
    const fs::path out = prepare_out(c.out);

    crd::SimulationOptions sim;
    sim.n = s.n;
    sim.trials = s.trials;
    sim.seed = s.seed;
    sim.eps = s.eps;
    sim.workers = c.workers;

    std::string summary;
    for (const auto& c2 : model.criteria) summary += "D_" + c2.id + ",";
    summary += "R_star,R_C,nominal_rate,mean_rate,max_rate";
    for (const auto& c2 : model.criteria)
        for (double e : s.eps) {
            char buf[40];
            std::snprintf(buf, sizeof buf, "%g", e);
            summary += ",met_" + c2.id + "_" + buf;
        }
    summary += "\n";

    std::size_t k = 0;
    for (const auto& chunk : grid.chunks)
        for (const auto& b : chunk) {
            const auto d = crd::design_ctc(model, b, design);
            const auto rep = crd::simulate(model, d.ctc.code, b, sim);
            char name[64];
            std::snprintf(name, sizeof name, "simulation_%zu.csv", k);
            write_file(out / name, crd::to_csv(rep));

            // Trial 0's encoded block, as a container file that must decode
            // to the same reproduction as the in-memory stream.
            crd::Sampler rng(sim.seed, 0);
            const auto symbols = crd::sample_source(model.source, sim.n, rng).second;
            const auto bits = d.ctc.code.encode(symbols);
            std::snprintf(name, sizeof name, "stream_%zu.crd", k++);
            write_file(out / name, crd::write_container(bits));
            if (d.ctc.code.decode(crd::read_container(read_file(out / name))) != d.ctc.code.decode(bits))
                throw Error(ErrorCode::MalformedStream, "container round trip changed the stream");
            const double rs = crd::r_star(model, b, design.allocation.dual).rate;
            for (double v : b) summary += crd::format_double(v) + ",";
            summary += crd::format_double(rs) + "," + crd::format_double(d.allocation.rate + d.label_entropy) + "," +
                       crd::format_double(d.nominal_rate) + "," + crd::format_double(rep.mean_rate) + "," +
                       crd::format_double(rep.max_rate);
            for (const auto& row : rep.met_frequency)
                for (double f : row) summary += "," + crd::format_double(f);
            summary += "\n";
        }
    write_file(out / "simulation_summary.csv", summary);
    auto cfg = config_json(c, grid);
    cfg["n"] = s.n;
    cfg["trials"] = s.trials;
    cfg["seed"] = s.seed;
    cfg["eps"] = s.eps;
    cfg["block_length"] = s.block;
    cfg["rate_slack"] = s.slack;
    write_file(out / "simulation_config.json", cfg.dump(2) + "\n");
    std::cerr << "simulate: " << k << " budget point(s), written to " << out.string() << "\n";
    return 0;
}

int run_example(const std::string& name, const std::string& out)
{
    const std::string text = crd::to_json(crd::build_example(name)).dump(2) + "\n";
    if (out.empty() || out == "-") std::cout << text;
    else {
        const fs::path path(out);
        if (path.has_parent_path()) fs::create_directories(path.parent_path());
        write_file(path, text);
    }
    return 0;
}

void report(const char* code, const std::string& message)
{
    nlohmann::json j;
    j["error"] = code;
    j["message"] = message;
    std::cerr << j.dump() << "\n";
}

void add_source_flags(CLI::App* cmd, Common& c)
{
    auto* spec = cmd->add_option("--spec", c.spec, "source specification (JSON)")->check(CLI::ExistingFile);
    auto* ex = cmd->add_option("--example", c.example, "built-in source: example1|example2|example3");
    spec->excludes(ex);
    ex->excludes(spec);
    cmd->add_option("--budget-grid", c.grid, "A:B:N[:log][,...] | line:d1/d2/...:N | points:a/b,c/d");
    cmd->add_option("--tol", c.tol, "constraint tolerance of the dual search")->capture_default_str();
    cmd->add_option("--alloc-res", c.alloc_res, "distortion-allocation resolution")->capture_default_str();
    cmd->add_option("--out", c.out, "output directory")->capture_default_str();
    cmd->add_option("--workers", c.workers, "worker threads (0: all cores)")->capture_default_str();
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Rate-distortion tools for composite sources with subsource-dependent fidelity criteria"};
    app.require_subcommand(1);

    Common sweep_flags;
    auto* sweep = app.add_subcommand("sweep", "evaluate R*, R^C and R^G over a budget grid");
    add_source_flags(sweep, sweep_flags);

    Common sim_common;
    SimFlags sim_flags;
    auto* sim = app.add_subcommand("simulate", "design a classify-then-compress code and simulate it");
    add_source_flags(sim, sim_common);
    sim->add_option("--n", sim_flags.n, "block length of each trial")->capture_default_str();
    sim->add_option("--trials", sim_flags.trials, "number of trials")->capture_default_str()->check(CLI::PositiveNumber);
    sim->add_option("--seed", sim_flags.seed, "seed for sources and codebooks")->capture_default_str();
    sim->add_option("--eps", sim_flags.eps, "fidelity slacks, comma separated")->delimiter(',')->capture_default_str();
    sim->add_option("--block", sim_flags.block, "codebook block length")->capture_default_str()->check(CLI::PositiveNumber);
    sim->add_option("--rate-slack", sim_flags.slack, "bits/symbol added to each class rate")->capture_default_str();

    std::string example_name, example_out;
    auto* ex = app.add_subcommand("example", "print a built-in source as JSON");
    ex->add_option("--example", example_name, "example1|example2|example3")->required();
    ex->add_option("--out", example_out, "output file (default: stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        report("InvalidArgument", e.what());
        return 2;
    }

    try {
        for (auto* cmd : {sweep, sim})
            if (cmd->parsed()) {
                auto& c = cmd == sweep ? sweep_flags : sim_common;
                if (c.spec.empty() && c.example.empty())
                    throw Error(ErrorCode::InvalidArgument, "one of --spec or --example is required");
            }
        if (sweep->parsed()) return run_sweep(sweep_flags);
        if (sim->parsed()) return run_simulation(sim_common, sim_flags);
        return run_example(example_name, example_out);
    } catch (const Error& e) {
        report(crd::to_string(e.code()), e.what());
        return 1;
    } catch (const nlohmann::json::exception& e) {
        report("MalformedInput", e.what());
        return 1;
    } catch (const std::exception& e) {
        report("Internal", e.what());
        return 1;
    }
}
