#include "sbr/cli.hpp"

#include "sbr/config.hpp"
#include "sbr/errors.hpp"
#include "sbr/parallel.hpp"
#include "sbr/policy_search.hpp"
#include "sbr/simulator.hpp"
#include "sbr/single_level.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <ostream>
#include <sstream>

namespace sbr::cli {

namespace {

const char *const kDescription =
    "Transient analysis of skills-based-routing call centres.\n"
    "All times and rates are in minutes.";

class UsageError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

std::string one_line(std::string text) {
    for (char &c : text)
        if (c == '\n' || c == '\r')
            c = ' ';
    std::string quoted;
    for (char c : text) {
        if (c == '"' || c == '\\')
            quoted += '\\';
        quoted += c;
    }
    return quoted;
}

int report(std::ostream &err, ExitCode code, const char *kind, const std::string &message) {
    err << "error kind=" << kind << " code=" << static_cast<int>(code) << " message=\""
        << one_line(message) << "\"\n";
    return code;
}

double parse_time(const std::string &text, const char *what) {
    double v = 0.0;
    try {
        v = config::parse_rational(text);
    } catch (const ConfigError &) {
        throw UsageError(std::string(what) + ": cannot parse '" + text + "'");
    }
    if (!(v >= 0.0) || !std::isfinite(v))
        throw UsageError(std::string(what) + " must be finite and >= 0");
    return v;
}

struct Common {
    std::string config_path;
    std::string out_path;
    bool percent = false;
    int threads = 0;
};

struct Options {
    Common common;
    std::string measure = "abandonments";
    std::string t = "60";
    std::string initial_single = "0";
    std::string initial_multi = "0,0,0,0,0,0,0";
    std::string reservation;
    std::string policy;
    std::string y;
    int ahead = 0;
    int reps = 0;
    long long seed = -1;
    bool multi = false;
    bool raw = false;
    bool unbounded = false;
};

config::Config load_config(const Common &c) {
    if (c.config_path.empty())
        throw UsageError("--config is required");
    return config::load(c.config_path);
}

const single::Params &need_single(const config::Config &cfg) {
    if (!cfg.single)
        throw ConfigError("config has no 'single' section");
    return *cfg.single;
}

const multi::Params &need_multi(const config::Config &cfg) {
    if (!cfg.multi)
        throw ConfigError("config has no 'multi' section");
    return *cfg.multi;
}

multi::Reservation reservation_of(const config::Config &cfg, const Options &o) {
    if (o.reservation.empty())
        return cfg.reservation.value_or(multi::Reservation{});
    std::array<int, 3> v{};
    std::istringstream in(o.reservation);
    char sep = ',';
    for (std::size_t i = 0; i < v.size(); ++i) {
        if ((i > 0 && !(in >> sep)) || sep != ',' || !(in >> v[i]))
            throw UsageError("--reservation expects n2,n3,n4");
    }
    if (in >> sep)
        throw UsageError("--reservation expects n2,n3,n4");
    const multi::Reservation n{v[0], v[1], v[2]};
    try {
        n.validate(need_multi(cfg));
    } catch (const DomainError &e) {
        throw UsageError(e.what());
    }
    return n;
}

int parse_int(const std::string &text, const char *what) {
    int v = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (text.empty() || ec != std::errc() || ptr != text.data() + text.size())
        throw DomainError(std::string(what) + ": expected an integer, got '" + text + "'");
    return v;
}

void analyze_single(const Options &o, std::ostream &out) {
    const auto cfg = load_config(o.common);
    single::Params p = need_single(cfg);
    MeasureKind kind = MeasureKind::CostOfAbandonmentsAndLosses;
    if (o.measure == "abandonments") {
        p.gamma = 1.0;
        p.beta = 0.0;
    } else if (o.measure == "losses") {
        p.gamma = 0.0;
        p.beta = 1.0;
    } else if (o.measure == "waiting") {
        kind = MeasureKind::TotalWaitingTime;
    } else if (o.measure == "services") {
        kind = MeasureKind::Services;
    }
    const int a = parse_int(o.initial_single, "--initial");
    if (a < 0 || a > p.ell)
        throw UsageError("--initial must lie in 0.." + std::to_string(p.ell));
    out << format_exact(single::expected_measure(p, kind, a, parse_time(o.t, "--t"), cfg.euler))
        << '\n';
}

void probs(const Options &o, std::ostream &out) {
    const auto cfg = load_config(o.common);
    const double t = parse_time(o.t, "--t");
    if (o.multi) {
        const auto &p = need_multi(cfg);
        const multi::TransformModel model(p, reservation_of(cfg, o));
        const auto dist =
            multi::transition_distribution(model, parse_state(o.initial_multi), t, cfg.euler);
        out << "a,a1,b,b1,c,c1,d,probability\n";
        for (std::size_t i = 0; i < dist.size(); ++i) {
            const auto &s = model.space()[i];
            out << s.a << ',' << s.a1 << ',' << s.b << ',' << s.b1 << ',' << s.c << ',' << s.c1
                << ',' << s.d << ',' << format_exact(dist[i]) << '\n';
        }
        return;
    }
    const auto &p = need_single(cfg);
    const int a = parse_int(o.initial_single, "--initial");
    if (a < 0 || a > p.ell)
        throw UsageError("--initial must lie in 0.." + std::to_string(p.ell));
    const auto row = single::transition_probabilities(p, a, t, cfg.euler);
    out << "j,probability\n";
    for (std::size_t j = 0; j < row.size(); ++j)
        out << j << ',' << format_exact(row[j]) << '\n';
}

void tagged_wait(const Options &o, std::ostream &out) {
    const auto cfg = load_config(o.common);
    out << format_exact(single::tagged_wait(need_single(cfg), o.ahead)) << '\n';
}

void analyze_multi(const Options &o, std::ostream &out) {
    const auto cfg = load_config(o.common);
    const auto &p = need_multi(cfg);
    const double t = parse_time(o.t, "--t");
    const multi::TransformModel model(p, reservation_of(cfg, o));
    const std::array specs{multi::MeasureSpec::cost(p),
                           multi::MeasureSpec::weighted_abandonments(p),
                           multi::MeasureSpec::abandonments(),
                           multi::MeasureSpec::waiting_time(),
                           multi::MeasureSpec::services(),
                           multi::MeasureSpec::blocked()};
    const auto v = multi::expected_measures(model, specs, parse_state(o.initial_multi), t,
                                            cfg.euler);
    const double offered = p.total_arrival_rate() * t;
    const auto proportion = [&](double x) {
        return offered > 0.0 ? format_proportion(x / offered, o.common.percent) : "nan";
    };
    out << "metric,value\n";
    out << "cost," << format_exact(v[0]) << '\n';
    out << "proportion," << proportion(v[1]) << '\n';
    out << "raw_proportion," << proportion(v[2]) << '\n';
    out << "waiting," << format_exact(v[3]) << '\n';
    out << "services," << format_exact(v[4]) << '\n';
    out << "blocked," << format_exact(v[5]) << '\n';
}

void optimize(const Options &o, std::ostream &out) {
    const auto cfg = load_config(o.common);
    const auto &p = need_multi(cfg);
    const double t = parse_time(o.t, "--t");
    if (!(t > 0.0))
        throw UsageError("--t must be > 0 for optimize");
    policy::SearchSpec spec;
    spec.objective =
        o.raw ? policy::Objective::RawProportion : policy::Objective::WeightedProportion;
    const auto table =
        policy::evaluate_all(p, parse_state(o.initial_multi), t, spec, cfg.euler);
    out << "n2,n3,n4," << (o.common.percent ? "percent" : "proportion") << '\n';
    for (const auto &row : table)
        out << row.n.n2 << ',' << row.n.n3 << ',' << row.n.n4 << ','
            << format_proportion(row.value, o.common.percent) << '\n';
}

void simulate(const Options &o, std::ostream &out) {
    const auto cfg = load_config(o.common);
    const config::SimSection defaults = cfg.sim.value_or(config::SimSection{});
    config::SimSection section = defaults;
    if (!o.policy.empty()) {
        if (o.policy != "reservation" && o.policy != "fcfs" && o.policy != "delayed")
            throw UsageError("--policy must be reservation, fcfs or delayed");
        section.policy = o.policy;
    }
    if (!o.y.empty())
        section.y = parse_time(o.y, "--y");
    sim::SimConfig sc;
    sc.params = need_multi(cfg);
    sc.policy = config::make_policy(section, reservation_of(cfg, o));
    sc.horizon = parse_time(o.t, "--t");
    sc.replications = o.reps > 0 ? o.reps : section.replications;
    sc.seed = o.seed >= 0 ? static_cast<std::uint64_t>(o.seed) : section.seed;
    sc.initial = parse_state(o.initial_multi);
    sc.bounded_line = section.bounded_line && !o.unbounded;
    const auto r = sim::simulate_many(sc);
    const auto row = [&](const std::string &name, const sim::Estimate &e, bool prop) {
        out << name << ','
            << (prop ? format_proportion(e.mean, o.common.percent) : format_exact(e.mean)) << ','
            << (prop ? format_proportion(e.half_width, o.common.percent)
                     : format_exact(e.half_width))
            << '\n';
    };
    out << "metric,value,ci_halfwidth\n";
    row("proportion", r.proportion, true);
    row("raw_proportion", r.raw_proportion, true);
    row("abandonments", r.total.abandonments, false);
    row("cost", r.total.cost, false);
    row("blocked", r.total.blocked, false);
    for (int i = 0; i < multi::kLevels; ++i) {
        const std::string level = std::to_string(i + 1);
        row("abandonments_" + level, r.levels[i].abandonments, false);
        row("cost_" + level, r.levels[i].cost, false);
        row("blocked_" + level, r.levels[i].blocked, false);
    }
    out << "replications," << r.replications << ",0\n";
}

void schedule(const Options &o, std::ostream &out) {
    const auto cfg = load_config(o.common);
    if (!cfg.schedule)
        throw ConfigError("config has no 'schedule' section");
    MeasureKind kind = MeasureKind::CostOfAbandonmentsAndLosses;
    if (o.measure == "waiting")
        kind = MeasureKind::TotalWaitingTime;
    else if (o.measure == "services")
        kind = MeasureKind::Services;
    else if (o.measure != "cost")
        throw UsageError("schedule --measure must be cost, waiting or services");
    const int ell = cfg.schedule->front().params.ell;
    const int a = parse_int(o.initial_single, "--initial");
    if (a < 0 || a > ell)
        throw UsageError("--initial must lie in 0.." + std::to_string(ell));
    std::vector<double> dist(static_cast<std::size_t>(ell) + 1, 0.0);
    dist[a] = 1.0;
    double total = 0.0;
    out << "segment,duration,value\n";
    for (std::size_t i = 0; i < cfg.schedule->size(); ++i) {
        const auto &seg = (*cfg.schedule)[i];
        const auto step = single::project_schedule({seg}, dist, kind, cfg.euler);
        out << i + 1 << ',' << format_exact(seg.duration) << ',' << format_exact(step.total)
            << '\n';
        total += step.total;
        dist = step.final_distribution;
    }
    out << "total,," << format_exact(total) << '\n';
}

} // namespace

std::string format_exact(double value) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
    if (ec != std::errc())
        return "nan";
    return std::string(buf, ptr);
}

std::string format_proportion(double value, bool percent) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", percent ? value * 100.0 : value);
    return buf;
}

multi::State parse_state(const std::string &text) {
    std::array<int, 7> v{};
    std::size_t pos = 0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const std::size_t end = i + 1 < v.size() ? text.find(',', pos) : text.size();
        if (end == std::string::npos)
            throw DomainError("state must be 7 comma-separated integers a,a1,b,b1,c,c1,d");
        v[i] = parse_int(text.substr(pos, end - pos), "state");
        pos = end + 1;
    }
    return {v[0], v[1], v[2], v[3], v[4], v[5], v[6]};
}

int run(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
    CLI::App app(kDescription, "sbr");
    app.require_subcommand(1);
    Options o;

    const auto add_common = [&](CLI::App *cmd, bool proportions) {
        cmd->add_option("--config", o.common.config_path, "JSON config file")->required();
        cmd->add_option("--out", o.common.out_path, "write CSV to this path instead of stdout");
        cmd->add_option("--threads", o.common.threads, "cap on worker threads")
            ->check(CLI::PositiveNumber);
        if (proportions)
            cmd->add_flag("--percent", o.common.percent, "print proportions as percentages");
    };
    const auto add_t = [&](CLI::App *cmd) {
        cmd->add_option("--t", o.t, "horizon in minutes (number or p/q)");
    };

    std::function<void(std::ostream &)> action;

    auto *single_cmd = app.add_subcommand("analyze-single", "expected single-level measure");
    add_common(single_cmd, false);
    add_t(single_cmd);
    single_cmd
        ->add_option("--measure", o.measure,
                     "abandonments | losses | cost | waiting | services")
        ->check(CLI::IsMember({"abandonments", "losses", "cost", "waiting", "services"}));
    single_cmd->add_option("--initial", o.initial_single, "initial number of callers");
    single_cmd->callback([&] { action = [&](std::ostream &os) { analyze_single(o, os); }; });

    auto *probs_cmd = app.add_subcommand("probs", "transition probabilities at time t");
    add_common(probs_cmd, false);
    add_t(probs_cmd);
    probs_cmd->add_flag("--multi", o.multi, "use the four-level model");
    auto *probs_initial = probs_cmd->add_option(
        "--initial", "initial callers (single) or a,a1,b,b1,c,c1,d (multi)");
    probs_cmd->add_option("--reservation", o.reservation, "n2,n3,n4 (multi only)");
    probs_cmd->callback([&, probs_initial] {
        if (probs_initial->count() > 0)
            (o.multi ? o.initial_multi : o.initial_single) = probs_initial->as<std::string>();
        action = [&](std::ostream &os) { probs(o, os); };
    });

    auto *wait_cmd = app.add_subcommand("tagged-wait", "expected wait of a tagged caller");
    add_common(wait_cmd, false);
    wait_cmd->add_option("--ahead", o.ahead, "callers already in the system")->required();
    wait_cmd->callback([&] { action = [&](std::ostream &os) { tagged_wait(o, os); }; });

    auto *multi_cmd = app.add_subcommand("analyze-multi", "four-level measures over (0,t)");
    add_common(multi_cmd, true);
    add_t(multi_cmd);
    multi_cmd->add_option("--initial", o.initial_multi, "a,a1,b,b1,c,c1,d");
    multi_cmd->add_option("--reservation", o.reservation, "n2,n3,n4 (default from config)");
    multi_cmd->callback([&] { action = [&](std::ostream &os) { analyze_multi(o, os); }; });

    auto *opt_cmd = app.add_subcommand("optimize", "abandonment proportion for every n");
    add_common(opt_cmd, true);
    add_t(opt_cmd);
    opt_cmd->add_option("--initial", o.initial_multi, "a,a1,b,b1,c,c1,d");
    opt_cmd->add_flag("--raw-proportion", o.raw, "count abandonments without gamma weights");
    opt_cmd->callback([&] { action = [&](std::ostream &os) { optimize(o, os); }; });

    auto *sim_cmd = app.add_subcommand("simulate", "discrete-event simulation");
    add_common(sim_cmd, true);
    add_t(sim_cmd);
    sim_cmd->add_option("--reps", o.reps, "replications")->check(CLI::PositiveNumber);
    sim_cmd->add_option("--seed", o.seed, "64-bit seed")->check(CLI::NonNegativeNumber);
    sim_cmd->add_option("--policy", o.policy, "reservation | fcfs | delayed");
    sim_cmd->add_option("--y", o.y, "transfer delay in minutes for the delayed policy");
    sim_cmd->add_option("--initial", o.initial_multi, "a,a1,b,b1,c,c1,d");
    sim_cmd->add_flag("--unbounded-line", o.unbounded, "never block arrivals");
    sim_cmd->add_option("--reservation", o.reservation, "n2,n3,n4 (default from config)");
    sim_cmd->callback([&] { action = [&](std::ostream &os) { simulate(o, os); }; });

    auto *sched_cmd = app.add_subcommand("schedule", "piecewise-constant single-level schedule");
    add_common(sched_cmd, false);
    sched_cmd->add_option("--initial", o.initial_single, "initial number of callers");
    sched_cmd->add_option("--measure", o.measure, "cost | waiting | services");
    sched_cmd->callback([&] {
        if (sched_cmd->count("--measure") == 0)
            o.measure = "cost";
        action = [&](std::ostream &os) { schedule(o, os); };
    });

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp &) {
        out << app.help();
        return kSuccess;
    } catch (const CLI::CallForAllHelp &) {
        out << app.help("", CLI::AppFormatMode::All);
        return kSuccess;
    } catch (const CLI::ParseError &e) {
        return report(err, kUsageFailure, "usage", e.what());
    }

    try {
        if (o.common.threads > 0)
            set_thread_limit(static_cast<std::size_t>(o.common.threads));
        if (o.common.out_path.empty()) {
            action(out);
        } else {
            std::ostringstream buffer;
            action(buffer);
            std::ofstream file(o.common.out_path, std::ios::binary);
            if (!(file << buffer.str()) || !file.flush())
                throw UsageError("cannot write '" + o.common.out_path + "'");
        }
    } catch (const ConfigError &e) {
        return report(err, kConfigFailure, "config", e.what());
    } catch (const UsageError &e) {
        return report(err, kUsageFailure, "usage", e.what());
    } catch (const DomainError &e) {
        return report(err, kUsageFailure, "domain", e.what());
    } catch (const NumericalError &e) {
        return report(err, kNumericalFailure, "numerical", e.what());
    } catch (const std::exception &e) {
        return report(err, kNumericalFailure, "internal", e.what());
    }
    return kSuccess;
}

} // namespace sbr::cli
