#pragma once

#include <chrono>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "aggdist/approx.hpp"
#include "aggdist/discretise.hpp"
#include "aggdist/distributions.hpp"
#include "aggdist/dni.hpp"
#include "aggdist/engine.hpp"
#include "aggdist/fft.hpp"
#include "aggdist/moments.hpp"
#include "aggdist/montecarlo.hpp"
#include "aggdist/panjer.hpp"
#include "aggdist/riskmeasures.hpp"

namespace aggdist::cli {

enum class Command { Panjer, Fft, Dni, Mc, Approx, Moments, Compare, Oracle };
enum class OutputFormat { Table, Csv };

inline constexpr std::pair<Command, std::string_view> kCommands[] = {
    {Command::Panjer, "panjer"}, {Command::Fft, "fft"},         {Command::Dni, "dni"},
    {Command::Mc, "mc"},         {Command::Approx, "approx"},   {Command::Moments, "moments"},
    {Command::Compare, "compare"}, {Command::Oracle, "oracle"}};

inline std::string_view to_string(Command c)
{
    for (const auto& [cmd, name] : kCommands)
        if (cmd == c)
            return name;
    return "?";
}

/// Everything a single invocation needs. Options that do not apply to the
/// command keep their defaults.
struct RunSpec {
    Command command = Command::Panjer;
    std::string freq;
    std::string sev;
    std::vector<double> alphas{0.999};
    OutputFormat format = OutputFormat::Table;

    std::optional<double> step;
    DiscretisationMode mode = DiscretisationMode::Central;
    bool bounds = false;
    std::optional<int> log2m;
    std::optional<double> tilt;
    TailPolicy tail = TailPolicy::AbsorbLast;
    std::string dump_cdf;

    int K = 25;
    int n0 = 1;
    bool tail_correction = true;
    bool second_order_tail = false;
    std::optional<double> z;
    bool refine = false;

    std::uint64_t samples = 1000000;
    std::uint64_t seed = 1;
    std::optional<double> ci;

    bool es = false;
    int nmax = 50;

    bool operator==(const RunSpec&) const = default;
};

namespace detail {

using aggdist::detail::format_number;

inline bool uses_lattice(Command c)
{
    return c == Command::Panjer || c == Command::Fft || c == Command::Compare || c == Command::Oracle;
}
inline bool uses_fft(Command c) { return c == Command::Fft || c == Command::Compare; }
inline bool uses_dni(Command c) { return c == Command::Dni || c == Command::Compare; }
inline bool uses_mc(Command c) { return c == Command::Mc || c == Command::Compare; }
inline bool uses_es(Command c)
{
    return c == Command::Panjer || c == Command::Fft || c == Command::Dni || c == Command::Mc ||
           c == Command::Compare;
}
inline bool uses_mode(Command c) { return c == Command::Panjer || c == Command::Fft || c == Command::Oracle; }

inline std::optional<double> parse_auto_double(const std::string& s)
{
    if (s == "auto")
        return std::nullopt;
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size())
        throw std::invalid_argument("expected a number or 'auto', got '" + s + "'");
    return v;
}

/// Command-line parser filling a RunSpec. Kept alive while parsing.
class Parser {
public:
    Parser() : app_("Compound loss distributions: Panjer, FFT, DNI, Monte Carlo", "aggdist")
    {
        app_.require_subcommand(1);
        for (const auto& [cmd, name] : kCommands)
            add_command(cmd, std::string(name));
    }

    RunSpec parse(const std::vector<std::string>& args)
    {
        std::vector<std::string> rev(args.rbegin(), args.rend());
        app_.parse(rev);
        for (auto* sub : app_.get_subcommands())
            for (const auto& [cmd, name] : kCommands)
                if (sub->get_name() == name)
                    spec_.command = cmd;
        finish();
        return spec_;
    }

    [[nodiscard]] std::string help() const { return app_.help(); }
    CLI::App& app() { return app_; }

private:
    void add_command(Command cmd, const std::string& name)
    {
        static const std::map<Command, std::string> descriptions = {
            {Command::Panjer, "Panjer recursion on a discretised severity"},
            {Command::Fft, "FFT with exponential tilting"},
            {Command::Dni, "direct numerical integration of the characteristic function"},
            {Command::Mc, "Monte Carlo simulation"},
            {Command::Approx, "normal, translated gamma and heavy-tail approximations"},
            {Command::Moments, "first four compound moments"},
            {Command::Compare, "all engines side by side"},
            {Command::Oracle, "Panjer recursion against brute-force convolution"}};
        auto* sub = app_.add_subcommand(name, descriptions.at(cmd));
        sub->add_option("--freq", freq_, "frequency, e.g. poisson:100, binomial:10,0.3, negbin:2,0.5")
            ->required();
        sub->add_option("--sev", sev_, "severity, e.g. lognormal:0,2, gamma:2,1, gpd:1,1, normal:0,1")
            ->required();
        if (cmd != Command::Moments && cmd != Command::Oracle)
            sub->add_option("--alpha", spec_.alphas, "quantile level(s)")->expected(1, -1);
        sub->add_option("--format", format_, "table or csv")
            ->check(CLI::IsMember({"table", "csv"}));

        if (uses_lattice(cmd))
            sub->add_option("--step", step_, "lattice step, or auto");
        if (uses_mode(cmd))
            sub->add_option("--mode", mode_, "central, forward or backward")
                ->check(CLI::IsMember({"central", "forward", "backward"}));
        if (cmd == Command::Panjer)
            sub->add_flag("--bounds", spec_.bounds, "also report forward/backward quantile bounds");
        if (uses_fft(cmd)) {
            sub->add_option("--log2m", log2m_, "log2 of the FFT length, or auto");
            sub->add_option("--tilt", tilt_, "tilt rate theta, auto (= 20/M) or 0");
        }
        if (cmd == Command::Fft)
            sub->add_option("--tail", tail_, "absorb or ignore")->check(CLI::IsMember({"absorb", "ignore"}));
        if (cmd == Command::Panjer || cmd == Command::Fft)
            sub->add_option("--dump-cdf", spec_.dump_cdf, "write x,cdf pairs to this file");
        if (uses_dni(cmd)) {
            sub->add_option("--K", spec_.K, "pi-cycle pairs before truncation")->check(CLI::PositiveNumber);
            sub->add_option("--n0", spec_.n0, "initial segments per cycle")->check(CLI::PositiveNumber);
            sub->add_flag("--refine", spec_.refine, "double K and n0 until the quantile is stable");
        }
        if (cmd == Command::Dni) {
            sub->add_flag("--no-tail-correction{false}", spec_.tail_correction, "drop the tail term");
            sub->add_flag("--second-order-tail", spec_.second_order_tail, "add the G'' tail term");
            sub->add_option("--z", spec_.z, "evaluate H(z) instead of quantiles");
        }
        if (uses_mc(cmd)) {
            sub->add_option("--samples", spec_.samples, "number of simulated years")->check(CLI::PositiveNumber);
            sub->add_option("--seed", spec_.seed, "random seed");
        }
        if (cmd == Command::Mc)
            sub->add_option("--ci", spec_.ci, "confidence level of the quantile interval")
                ->check(CLI::Range(0.0, 1.0));
        if (uses_es(cmd))
            sub->add_flag("--es", spec_.es, "also compute expected shortfall");
        if (cmd == Command::Oracle)
            sub->add_option("--nmax", spec_.nmax, "largest lattice index")->check(CLI::PositiveNumber);
    }

    void finish()
    {
        spec_.freq = FrequencyModel::parse(freq_).to_string();
        spec_.sev = SeverityModel::parse(sev_).to_string();
        spec_.format = format_ == "csv" ? OutputFormat::Csv : OutputFormat::Table;
        spec_.step = parse_auto_double(step_);
        spec_.mode = parse_mode(mode_);
        spec_.tail = parse_tail_policy(tail_);
        if (log2m_ != "auto") {
            const auto v = parse_auto_double(log2m_);
            if (!v || *v != std::floor(*v) || *v < 1 || *v > 30)
                throw std::invalid_argument("--log2m must be an integer in 1..30 or auto");
            spec_.log2m = static_cast<int>(*v);
        }
        spec_.tilt = parse_auto_double(tilt_);
        if (spec_.tilt && *spec_.tilt < 0.0)
            throw std::invalid_argument("--tilt must be >= 0");
        for (double a : spec_.alphas)
            if (!(a > 0.0 && a < 1.0))
                throw std::invalid_argument("--alpha values must lie in (0,1)");
        if (spec_.step && !(*spec_.step > 0.0))
            throw std::invalid_argument("--step must be > 0");
    }

    CLI::App app_;
    RunSpec spec_;
    std::string freq_;
    std::string sev_;
    std::string format_ = "table";
    std::string step_ = "auto";
    std::string mode_ = "central";
    std::string log2m_ = "auto";
    std::string tilt_ = "auto";
    std::string tail_ = "absorb";
};

} // namespace detail

/// Parses arguments (without the program name).
inline RunSpec parse_run_spec(const std::vector<std::string>& args)
{
    detail::Parser p;
    return p.parse(args);
}

/// Arguments reproducing `spec`; parse_run_spec(render_run_spec(s)) == s
/// for specs whose inapplicable options are at their defaults.
inline std::vector<std::string> render_run_spec(const RunSpec& s)
{
    using detail::format_number;
    const Command c = s.command;
    std::vector<std::string> out{std::string(to_string(c)), "--freq", s.freq, "--sev", s.sev};
    if (c != Command::Moments && c != Command::Oracle) {
        out.emplace_back("--alpha");
        for (double a : s.alphas)
            out.push_back(format_number(a));
    }
    out.emplace_back("--format");
    out.emplace_back(s.format == OutputFormat::Csv ? "csv" : "table");
    if (detail::uses_lattice(c)) {
        out.emplace_back("--step");
        out.push_back(s.step ? format_number(*s.step) : "auto");
    }
    if (detail::uses_mode(c)) {
        out.emplace_back("--mode");
        out.emplace_back(to_string(s.mode));
    }
    if (c == Command::Panjer && s.bounds)
        out.emplace_back("--bounds");
    if (detail::uses_fft(c)) {
        out.emplace_back("--log2m");
        out.push_back(s.log2m ? std::to_string(*s.log2m) : "auto");
        out.emplace_back("--tilt");
        out.push_back(s.tilt ? format_number(*s.tilt) : "auto");
    }
    if (c == Command::Fft) {
        out.emplace_back("--tail");
        out.emplace_back(to_string(s.tail));
    }
    if ((c == Command::Panjer || c == Command::Fft) && !s.dump_cdf.empty()) {
        out.emplace_back("--dump-cdf");
        out.push_back(s.dump_cdf);
    }
    if (detail::uses_dni(c)) {
        out.insert(out.end(), {"--K", std::to_string(s.K), "--n0", std::to_string(s.n0)});
        if (s.refine)
            out.emplace_back("--refine");
    }
    if (c == Command::Dni) {
        if (!s.tail_correction)
            out.emplace_back("--no-tail-correction");
        if (s.second_order_tail)
            out.emplace_back("--second-order-tail");
        if (s.z) {
            out.emplace_back("--z");
            out.push_back(format_number(*s.z));
        }
    }
    if (detail::uses_mc(c))
        out.insert(out.end(), {"--samples", std::to_string(s.samples), "--seed", std::to_string(s.seed)});
    if (c == Command::Mc && s.ci) {
        out.emplace_back("--ci");
        out.push_back(format_number(*s.ci));
    }
    if (detail::uses_es(c) && s.es)
        out.emplace_back("--es");
    if (c == Command::Oracle) {
        out.emplace_back("--nmax");
        out.push_back(std::to_string(s.nmax));
    }
    return out;
}

/// One output line: an engine's answer at one quantile level.
struct ResultRow {
    std::string engine;
    double alpha = 0.0;
    std::optional<double> var;
    std::optional<double> es;
    std::optional<double> stderr_estimate;
    std::optional<double> delta;
    std::optional<std::size_t> M;
    std::optional<double> theta;
    std::optional<int> K;
    std::optional<int> n0;
    std::optional<std::uint64_t> samples;
    std::optional<std::uint64_t> seed;
    double seconds = 0.0;
};

inline const std::vector<std::string>& csv_columns()
{
    static const std::vector<std::string> cols = {"engine", "alpha", "var", "es", "stderr_or_blank",
                                                  "delta", "M", "theta", "K", "n0", "samples", "seed",
                                                  "seconds"};
    return cols;
}

namespace detail {

template <class T>
std::string cell(const std::optional<T>& v)
{
    if (!v)
        return "";
    if constexpr (std::is_floating_point_v<T>)
        return format_number(*v);
    else
        return std::to_string(*v);
}

inline std::vector<std::string> row_cells(const ResultRow& r)
{
    return {r.engine,         format_number(r.alpha), cell(r.var),     cell(r.es),
            cell(r.stderr_estimate), cell(r.delta),   cell(r.M),       cell(r.theta),
            cell(r.K),        cell(r.n0),             cell(r.samples), cell(r.seed),
            format_number(std::round(r.seconds * 1e4) / 1e4)};
}

} // namespace detail

inline void write_rows(const std::vector<ResultRow>& rows, OutputFormat fmt, std::ostream& out)
{
    std::vector<std::vector<std::string>> table{csv_columns()};
    for (const auto& r : rows)
        table.push_back(detail::row_cells(r));
    if (fmt == OutputFormat::Csv) {
        for (const auto& line : table) {
            for (std::size_t i = 0; i < line.size(); ++i)
                out << (i ? "," : "") << line[i];
            out << '\n';
        }
        return;
    }
    std::vector<std::size_t> width(table[0].size(), 0);
    for (const auto& line : table)
        for (std::size_t i = 0; i < line.size(); ++i)
            width[i] = std::max(width[i], line[i].size());
    for (const auto& line : table) {
        for (std::size_t i = 0; i < line.size(); ++i) {
            const std::string& c = line[i].empty() ? std::string("-") : line[i];
            out << (i ? "  " : "") << std::left << std::setw(static_cast<int>(width[i])) << c;
        }
        out << '\n';
    }
}

namespace detail {

using Clock = std::chrono::steady_clock;

inline double seconds_since(Clock::time_point t0)
{
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

inline double max_alpha(const RunSpec& s) { return *std::max_element(s.alphas.begin(), s.alphas.end()); }

/// Level to which a lattice engine must run so that ES can be taken from
/// the grid (at most 1e-6 of mass beyond its end).
inline double lattice_target(const RunSpec& s, const SeverityModel& sev)
{
    return s.es && sev.mean().is_finite() ? std::max(max_alpha(s), 1.0 - 1e-7) : max_alpha(s);
}

inline void dump_cdf(const CompoundGrid& g, const std::string& path)
{
    if (path.empty())
        return;
    std::ofstream f(path);
    if (!f)
        throw std::runtime_error("cannot write '" + path + "'");
    f << "x,cdf\n";
    for (std::size_t n = 0; n < g.size(); ++n)
        f << format_number(g.point(n)) << ',' << format_number(g.cdf[n]) << '\n';
}

inline void report_warning(const CompoundGrid& g, std::ostream& err)
{
    if (auto it = g.settings.find("warning"); it != g.settings.end())
        err << "warning: " << it->second << '\n';
}

inline std::optional<double> setting_double(const CompoundGrid& g, const std::string& key)
{
    if (auto it = g.settings.find(key); it != g.settings.end())
        return std::stod(it->second);
    return std::nullopt;
}

inline std::optional<double> grid_es(const CompoundGrid& g, double alpha, std::ostream& err)
{
    try {
        return es_from_grid(g, alpha);
    } catch (const std::exception& e) {
        err << "note: ES not available: " << e.what() << '\n';
        return std::nullopt;
    }
}

struct Models {
    FrequencyModel freq;
    SeverityModel sev;
};

inline Models models(const RunSpec& s)
{
    return {FrequencyModel::parse(s.freq), SeverityModel::parse(s.sev)};
}

inline bool mean_finite(const SeverityModel& sev) { return sev.mean().is_finite(); }

inline CompoundGrid panjer_grid(const RunSpec& s, const Models& m, double target, DiscretisationMode mode)
{
    if (s.step)
        return panjer_to_quantile(m.freq, m.sev, *s.step, target, mode);
    return refine_step([&](double d) { return panjer_to_quantile(m.freq, m.sev, d, target, mode); },
                       auto_start_step(m.freq, m.sev, target, 512.0), target, 1e-5, 7);
}

inline CompoundGrid fft_grid(const RunSpec& s, const Models& m, double target)
{
    FftOptions opt;
    if (s.log2m)
        opt.m = std::size_t{1} << *s.log2m;
    opt.theta = s.tilt;
    opt.tail = s.tail;
    opt.mode = s.mode;
    if (s.step)
        return fft_to_quantile(m.freq, m.sev, *s.step, target, opt);
    return refine_step([&](double d) { return fft_to_quantile(m.freq, m.sev, d, target, opt); },
                       auto_start_step(m.freq, m.sev, target, 1024.0), target, 1e-5, 10);
}

inline std::vector<ResultRow> run_panjer(const RunSpec& s, const Models& m, std::ostream& err)
{
    const auto t0 = Clock::now();
    const auto g = panjer_grid(s, m, lattice_target(s, m.sev), s.mode);
    const double secs = seconds_since(t0);
    report_warning(g, err);
    dump_cdf(g, s.dump_cdf);
    std::vector<ResultRow> rows;
    for (double a : s.alphas) {
        ResultRow r;
        r.engine = g.engine;
        r.alpha = a;
        r.var = var_from_grid(g, a);
        if (s.es)
            r.es = mean_finite(m.sev) ? grid_es(g, a, err) : std::nullopt;
        r.delta = g.step;
        r.seconds = secs;
        rows.push_back(r);
    }
    if (s.bounds) {
        const auto t1 = Clock::now();
        const double step = g.step;
        const auto fwd = panjer_to_quantile(m.freq, m.sev, step, max_alpha(s), DiscretisationMode::Forward);
        const auto bwd = panjer_to_quantile(m.freq, m.sev, step, max_alpha(s), DiscretisationMode::Backward);
        const double bsecs = seconds_since(t1);
        for (double a : s.alphas) {
            const auto b = quantile_bounds(fwd, bwd, a);
            ResultRow lo;
            lo.engine = "panjer-lower-bound";
            lo.alpha = a;
            lo.var = b.lower;
            lo.delta = step;
            lo.seconds = bsecs;
            ResultRow hi = lo;
            hi.engine = "panjer-upper-bound";
            hi.var = b.upper;
            rows.push_back(lo);
            rows.push_back(hi);
        }
    }
    return rows;
}

inline std::vector<ResultRow> run_fft(const RunSpec& s, const Models& m, std::ostream& err)
{
    const auto t0 = Clock::now();
    const auto g = fft_grid(s, m, max_alpha(s));
    const double secs = seconds_since(t0);
    dump_cdf(g, s.dump_cdf);
    std::vector<ResultRow> rows;
    for (double a : s.alphas) {
        ResultRow r;
        r.engine = "fft";
        r.alpha = a;
        r.var = var_from_grid(g, a);
        if (s.es)
            r.es = mean_finite(m.sev) ? grid_es(g, a, err) : std::nullopt;
        r.delta = g.step;
        r.M = g.size();
        r.theta = setting_double(g, "theta");
        r.seconds = secs;
        rows.push_back(r);
    }
    return rows;
}

inline DniSettings dni_settings(const RunSpec& s)
{
    DniSettings d;
    d.K = s.K;
    d.n0 = s.n0;
    d.tail_correction = s.tail_correction;
    d.second_order_tail = s.second_order_tail;
    return d;
}

inline std::vector<ResultRow> run_dni(const RunSpec& s, const Models& m, std::ostream& err)
{
    const auto settings = dni_settings(s);
    std::vector<ResultRow> rows;
    for (double a : s.alphas) {
        const auto t0 = Clock::now();
        DniQuantile q;
        DniSettings used = settings;
        if (s.refine) {
            const auto refined = dni_quantile_refined(m.freq, m.sev, a, settings);
            if (!refined.converged)
                err << "warning: dni refinement stopped at K = " << refined.settings.K << " without converging\n";
            q = refined.quantile;
            used = refined.settings;
        } else {
            q = dni_quantile(m.freq, m.sev, a, settings);
        }
        ResultRow r;
        r.engine = "dni";
        r.alpha = a;
        r.var = q.value;
        if (q.atom_at_zero)
            err << "note: alpha " << format_number(a) << " is within the atom at zero\n";
        if (s.es) {
            if (!mean_finite(m.sev)) {
                if (s.command == Command::Dni)
                    throw std::domain_error("ES undefined: severity mean is infinite");
                err << "note: ES undefined, severity mean is infinite\n";
            } else if (q.value > 0.0) {
                r.es = es_via_cf(m.freq, m.sev, q.value, q.cdf, used);
            }
        }
        r.K = used.K;
        r.n0 = used.n0;
        r.seconds = seconds_since(t0);
        rows.push_back(r);
    }
    return rows;
}

struct McOutput {
    std::vector<ResultRow> rows;
    std::vector<std::pair<double, QuantileCi>> intervals;
};

inline McOutput run_mc(const RunSpec& s, const Models& m, std::ostream& err)
{
    const double gamma = s.ci ? *s.ci : 0.95;
    double alpha_min = 1.0;
    for (double a : s.alphas)
        alpha_min = std::min(alpha_min, alpha_min_for_ci(s.samples, a, gamma));
    const auto t0 = Clock::now();
    const auto run = simulate_compound(m.freq, m.sev, s.samples, s.seed, alpha_min);
    const double secs = seconds_since(t0);
    McOutput out;
    for (double a : s.alphas) {
        ResultRow r;
        r.engine = "mc";
        r.alpha = a;
        r.var = mc_quantile(run, a);
        const auto ci = mc_quantile_ci(run, a, gamma);
        if (ci.approximation_warning)
            err << "warning: K alpha (1 - alpha) < 50, the interval indices are unreliable\n";
        r.stderr_estimate = ci.stderr_estimate;
        if (s.es) {
            if (!mean_finite(m.sev))
                err << "note: severity mean is infinite, the ES estimate is not meaningful\n";
            r.es = mc_es(run, a, *r.var).es;
        }
        r.samples = s.samples;
        r.seed = s.seed;
        r.seconds = secs;
        out.rows.push_back(r);
        out.intervals.emplace_back(a, ci);
    }
    return out;
}

inline std::vector<ResultRow> run_approx(const RunSpec& s, const Models& m, std::ostream& err)
{
    std::vector<ResultRow> rows;
    for (double a : s.alphas) {
        for (const auto& q : {normal_approx_quantile(m.freq, m.sev, a),
                              translated_gamma_quantile(m.freq, m.sev, a), heavy_tail_var(m.freq, m.sev, a)}) {
            ResultRow r;
            r.engine = q.method + "(" + std::string(to_string(q.quality)) + ")";
            r.alpha = a;
            r.var = q.value;
            if (!q.available())
                err << "note: " << q.method << " unavailable: " << q.note << '\n';
            rows.push_back(r);
        }
    }
    return rows;
}

inline void write_moments(const Models& m, OutputFormat fmt, std::ostream& out)
{
    const auto cm = compound_central_moments(m.freq, m.sev);
    auto show = [](const Moment& v) { return v.is_finite() ? format_number(v.value()) : std::string("inf"); };
    std::vector<std::pair<std::string, std::string>> kv = {
        {"mean", show(cm.mean)},         {"variance", show(cm.variance)}, {"central3", show(cm.central3)},
        {"central4", show(cm.central4)}, {"skewness", show(cm.skewness)}, {"kurtosis", show(cm.kurtosis)}};
    if (const auto fit = translated_gamma_fit(m.freq, m.sev)) {
        kv.emplace_back("tgamma_shape", format_number(fit->shape));
        kv.emplace_back("tgamma_scale", format_number(fit->scale));
        kv.emplace_back("tgamma_shift", format_number(fit->shift));
    }
    if (fmt == OutputFormat::Csv) {
        out << "quantity,value\n";
        for (const auto& [k, v] : kv)
            out << k << ',' << v << '\n';
    } else {
        for (const auto& [k, v] : kv)
            out << std::left << std::setw(14) << k << v << '\n';
    }
}

inline int run_oracle(const RunSpec& s, const Models& m, std::ostream& out)
{
    const double step = s.step ? *s.step : 1.0;
    const auto n = static_cast<std::size_t>(s.nmax);
    const auto disc = discretise(m.sev, step, n + 1, s.mode, TailPolicy::Ignore);
    const auto brute = brute_force_convolution(disc, m.freq, n);
    const auto rec = panjer_recursion(disc, panjer_params(m.freq, disc[0]), StopAtIndex{n});
    double worst = 0.0;
    const bool csv = s.format == OutputFormat::Csv;
    out << (csv ? "n,brute_force,panjer,abs_diff\n" : "n      brute_force             panjer                  abs_diff\n");
    for (std::size_t i = 0; i <= n; ++i) {
        const double d = std::fabs(brute.density[i] - rec.density[i]);
        worst = std::max(worst, d);
        if (csv)
            out << i << ',' << format_number(brute.density[i]) << ',' << format_number(rec.density[i]) << ','
                << format_number(d) << '\n';
        else
            out << std::left << std::setw(7) << i << std::setw(24) << format_number(brute.density[i])
                << std::setw(24) << format_number(rec.density[i]) << format_number(d) << '\n';
    }
    if (!csv)
        out << "max abs difference: " << format_number(worst) << '\n';
    return 0;
}

inline void write_intervals(const std::vector<std::pair<double, QuantileCi>>& cis, double gamma, std::ostream& out)
{
    for (const auto& [a, ci] : cis)
        out << "ci alpha=" << format_number(a) << " gamma=" << format_number(gamma) << ": ["
            << format_number(ci.lower) << ", " << format_number(ci.upper) << "] r=" << ci.r << " s=" << ci.s
            << " center=" << ci.center << " exact_coverage=" << format_number(ci.exact_coverage) << '\n';
}

inline int execute(const RunSpec& s, std::ostream& out, std::ostream& err)
{
    const auto m = models(s);
    switch (s.command) {
    case Command::Panjer: write_rows(run_panjer(s, m, err), s.format, out); return 0;
    case Command::Fft: write_rows(run_fft(s, m, err), s.format, out); return 0;
    case Command::Dni: {
        if (s.z) {
            const auto r = dni_cdf_detail(m.freq, m.sev, *s.z, dni_settings(s));
            if (s.format == OutputFormat::Csv)
                out << "z,cdf,truncated,tail\n"
                    << format_number(*s.z) << ',' << format_number(r.value) << ',' << format_number(r.truncated)
                    << ',' << format_number(r.tail) << '\n';
            else
                out << "H(" << format_number(*s.z) << ") = " << std::setprecision(10) << r.value
                    << "  (cycles " << format_number(r.truncated) << ", tail " << format_number(r.tail) << ")\n";
            return 0;
        }
        write_rows(run_dni(s, m, err), s.format, out);
        return 0;
    }
    case Command::Mc: {
        const auto res = run_mc(s, m, err);
        write_rows(res.rows, s.format, out);
        if (s.ci && s.format == OutputFormat::Table)
            write_intervals(res.intervals, *s.ci, out);
        return 0;
    }
    case Command::Approx: write_rows(run_approx(s, m, err), s.format, out); return 0;
    case Command::Moments: write_moments(m, s.format, out); return 0;
    case Command::Oracle: return run_oracle(s, m, out);
    case Command::Compare: {
        std::vector<ResultRow> rows;
        int status = 0;
        auto attempt = [&](const std::string& name, auto&& fn) {
            try {
                auto r = fn();
                rows.insert(rows.end(), r.begin(), r.end());
            } catch (const std::exception& e) {
                err << name << " failed: " << e.what() << '\n';
                status = 1;
            }
        };
        attempt("panjer", [&] { return run_panjer(s, m, err); });
        attempt("fft", [&] { return run_fft(s, m, err); });
        attempt("dni", [&] { return run_dni(s, m, err); });
        attempt("mc", [&] { return run_mc(s, m, err).rows; });
        attempt("approx", [&] { return run_approx(s, m, err); });
        write_rows(rows, s.format, out);
        return status;
    }
    }
    return 1;
}

} // namespace detail

/// Runs one command line. Returns 0 on success, 1 when an engine fails and
/// 2 for invalid flags.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    std::vector<std::string> args(argv + 1, argv + argc);
    detail::Parser parser;
    RunSpec spec;
    try {
        spec = parser.parse(args);
    } catch (const CLI::CallForHelp&) {
        out << parser.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << parser.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << parser.help();
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n\n" << parser.help();
        return 2;
    }
    try {
        return detail::execute(spec, out, err);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
}

} // namespace aggdist::cli
