#include "sbr/config.hpp"

#include "sbr/errors.hpp"

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <sstream>

namespace sbr::config {

namespace {

using nlohmann::json;

void check_keys(const json &obj, const std::string &where,
                std::initializer_list<const char *> allowed) {
    if (!obj.is_object())
        throw ConfigError(where + ": expected an object");
    for (const auto &[key, value] : obj.items()) {
        bool known = false;
        for (const char *a : allowed)
            known = known || key == a;
        if (!known)
            throw ConfigError(where + ": unknown key '" + key + "'");
    }
}

const json &require(const json &obj, const std::string &where, const char *key) {
    const auto it = obj.find(key);
    if (it == obj.end())
        throw ConfigError(where + ": missing key '" + key + "'");
    return *it;
}

double number(const json &v, const std::string &where) {
    if (v.is_number())
        return v.get<double>();
    if (v.is_string()) {
        try {
            return parse_rational(v.get<std::string>());
        } catch (const ConfigError &e) {
            throw ConfigError(where + ": " + e.what());
        }
    }
    throw ConfigError(where + ": expected a number or \"p/q\" string");
}

int integer(const json &v, const std::string &where) {
    if (!v.is_number_integer())
        throw ConfigError(where + ": expected an integer");
    return v.get<int>();
}

template <std::size_t N>
std::array<double, N> numbers(const json &v, const std::string &where) {
    if (!v.is_array() || v.size() != N)
        throw ConfigError(where + ": expected an array of " + std::to_string(N) + " numbers");
    std::array<double, N> out{};
    for (std::size_t i = 0; i < N; ++i)
        out[i] = number(v[i], where + "[" + std::to_string(i) + "]");
    return out;
}

template <std::size_t N>
std::array<int, N> integers(const json &v, const std::string &where) {
    if (!v.is_array() || v.size() != N)
        throw ConfigError(where + ": expected an array of " + std::to_string(N) + " integers");
    std::array<int, N> out{};
    for (std::size_t i = 0; i < N; ++i)
        out[i] = integer(v[i], where + "[" + std::to_string(i) + "]");
    return out;
}

template <class Fn> void validated(const std::string &where, Fn &&fn) {
    try {
        fn();
    } catch (const DomainError &e) {
        throw ConfigError(where + ": " + e.what());
    }
}

single::Params single_params(const json &j, const std::string &where) {
    check_keys(j, where, {"lambda", "mu", "theta", "k", "ell", "beta", "gamma"});
    single::Params p;
    p.lambda = number(require(j, where, "lambda"), where + ".lambda");
    p.mu = number(require(j, where, "mu"), where + ".mu");
    p.theta = number(require(j, where, "theta"), where + ".theta");
    p.k = integer(require(j, where, "k"), where + ".k");
    p.ell = integer(require(j, where, "ell"), where + ".ell");
    p.beta = j.contains("beta") ? number(j["beta"], where + ".beta") : 0.0;
    p.gamma = j.contains("gamma") ? number(j["gamma"], where + ".gamma") : 1.0;
    validated(where, [&] { p.validate(); });
    return p;
}

multi::Params multi_params(const json &j) {
    const std::string where = "multi";
    check_keys(j, where, {"lambda", "mu", "mu_up", "theta", "k", "gamma", "ell", "beta"});
    multi::Params p;
    p.lambda = numbers<4>(require(j, where, "lambda"), "multi.lambda");
    p.mu = numbers<4>(require(j, where, "mu"), "multi.mu");
    p.mu_up = numbers<3>(require(j, where, "mu_up"), "multi.mu_up");
    p.theta = numbers<4>(require(j, where, "theta"), "multi.theta");
    p.k = integers<4>(require(j, where, "k"), "multi.k");
    p.gamma = j.contains("gamma") ? numbers<4>(j["gamma"], "multi.gamma")
                                  : std::array<double, 4>{1.0, 1.0, 1.0, 1.0};
    p.ell = integer(require(j, where, "ell"), "multi.ell");
    p.beta = j.contains("beta") ? number(j["beta"], "multi.beta") : 0.0;
    validated(where, [&] { p.validate(); });
    return p;
}

multi::Reservation reservation(const json &j) {
    check_keys(j, "reservation", {"n2", "n3", "n4"});
    return {integer(require(j, "reservation", "n2"), "reservation.n2"),
            integer(require(j, "reservation", "n3"), "reservation.n3"),
            integer(require(j, "reservation", "n4"), "reservation.n4")};
}

EulerParams euler(const json &j) {
    check_keys(j, "euler", {"a_disc", "n_terms", "m_euler"});
    EulerParams e;
    if (j.contains("a_disc"))
        e.a_disc = number(j["a_disc"], "euler.a_disc");
    if (j.contains("n_terms"))
        e.n_terms = integer(j["n_terms"], "euler.n_terms");
    if (j.contains("m_euler"))
        e.m_euler = integer(j["m_euler"], "euler.m_euler");
    validated("euler", [&] { e.validate(); });
    return e;
}

SimSection sim_section(const json &j) {
    check_keys(j, "sim", {"policy", "y", "replications", "seed", "bounded_line"});
    SimSection s;
    if (j.contains("policy")) {
        if (!j["policy"].is_string())
            throw ConfigError("sim.policy: expected a string");
        s.policy = j["policy"].get<std::string>();
        if (s.policy != "reservation" && s.policy != "fcfs" && s.policy != "delayed")
            throw ConfigError("sim.policy: expected reservation, fcfs or delayed");
    }
    if (j.contains("y"))
        s.y = number(j["y"], "sim.y");
    if (!(s.y >= 0.0) || !std::isfinite(s.y))
        throw ConfigError("sim.y: must be >= 0");
    if (j.contains("replications"))
        s.replications = integer(j["replications"], "sim.replications");
    if (s.replications < 1)
        throw ConfigError("sim.replications: must be >= 1");
    if (j.contains("seed")) {
        if (!j["seed"].is_number_unsigned())
            throw ConfigError("sim.seed: expected a non-negative integer");
        s.seed = j["seed"].get<std::uint64_t>();
    }
    if (j.contains("bounded_line")) {
        if (!j["bounded_line"].is_boolean())
            throw ConfigError("sim.bounded_line: expected true or false");
        s.bounded_line = j["bounded_line"].get<bool>();
    }
    return s;
}

single::Schedule schedule(const json &j) {
    if (!j.is_array() || j.empty())
        throw ConfigError("schedule: expected a non-empty array");
    single::Schedule out;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const std::string where = "schedule[" + std::to_string(i) + "]";
        check_keys(j[i], where, {"params", "duration"});
        single::Segment seg;
        seg.params = single_params(require(j[i], where, "params"), where + ".params");
        seg.duration = number(require(j[i], where, "duration"), where + ".duration");
        if (!(seg.duration > 0.0) || !std::isfinite(seg.duration))
            throw ConfigError(where + ".duration: must be > 0");
        if (!out.empty() && seg.params.ell != out.front().params.ell)
            throw ConfigError(where + ".params.ell: segments must share the line capacity");
        out.push_back(seg);
    }
    return out;
}

} // namespace

double parse_rational(const std::string &text) {
    auto parse_part = [&](std::string_view part) {
        double v = 0.0;
        const auto *end = part.data() + part.size();
        const auto [ptr, ec] = std::from_chars(part.data(), end, v);
        if (part.empty() || ec != std::errc() || ptr != end)
            throw ConfigError("cannot parse number '" + text + "'");
        return v;
    };
    const std::string_view view(text);
    const auto slash = view.find('/');
    if (slash == std::string_view::npos)
        return parse_part(view);
    const double num = parse_part(view.substr(0, slash));
    const double den = parse_part(view.substr(slash + 1));
    if (den == 0.0)
        throw ConfigError("zero denominator in '" + text + "'");
    return num / den;
}

Config parse(const std::string &text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error &e) {
        throw ConfigError(std::string("invalid JSON: ") + e.what());
    }
    check_keys(root, "config", {"single", "multi", "reservation", "euler", "sim", "schedule"});
    Config cfg;
    if (root.contains("single"))
        cfg.single = single_params(root["single"], "single");
    if (root.contains("multi"))
        cfg.multi = multi_params(root["multi"]);
    if (root.contains("reservation")) {
        cfg.reservation = reservation(root["reservation"]);
        if (!cfg.multi)
            throw ConfigError("reservation: requires a multi section");
        validated("reservation", [&] { cfg.reservation->validate(*cfg.multi); });
    }
    if (root.contains("euler"))
        cfg.euler = euler(root["euler"]);
    if (root.contains("sim"))
        cfg.sim = sim_section(root["sim"]);
    if (root.contains("schedule"))
        cfg.schedule = schedule(root["schedule"]);
    return cfg;
}

Config load(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config file '" + path.string() + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse(buffer.str());
}

sim::Policy make_policy(const SimSection &section, const multi::Reservation &reservation) {
    if (section.policy == "fcfs")
        return sim::GlobalFcfsPolicy{};
    if (section.policy == "delayed")
        return sim::DelayedTransferPolicy{section.y};
    return sim::ReservationPolicy{reservation};
}

} // namespace sbr::config
