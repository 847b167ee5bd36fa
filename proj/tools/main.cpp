// ssdlasso command-line tool: eval, sym, construct, hils, simulate.
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "ssdlasso/construct.hpp"
#include "ssdlasso/errors.hpp"
#include "ssdlasso/lasso.hpp"
#include "ssdlasso/parallel.hpp"
#include "ssdlasso/sign_recovery.hpp"
#include "ssdlasso/sym.hpp"

#ifndef SSDLASSO_VERSION
#define SSDLASSO_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace ssdlasso;

namespace {

constexpr int kExitOk = 0, kExitInput = 2, kExitInfeasible = 3, kExitInternal = 4;

struct Shared {
    std::uint64_t seed = 20240917;
    int budget = 4096;
    int randomizations = 8;
    unsigned threads = 0;
    std::string out_dir = ".";
};

// ---- small helpers --------------------------------------------------------

std::vector<std::string> split(const std::string& text, char sep) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(text);
    while (std::getline(in, item, sep))
        if (!item.empty()) out.push_back(item);
    return out;
}

std::vector<int> parse_ints(const std::string& text) {
    std::vector<int> out;
    for (const auto& tok : split(text, ',')) {
        try {
            std::size_t used = 0;
            int v = std::stoi(tok, &used);
            require(used == tok.size(), ErrorKind::Parse, "bad integer '" + tok + "'");
            out.push_back(v);
        } catch (const std::logic_error&) {
            fail(ErrorKind::Parse, "bad integer '" + tok + "'");
        }
    }
    return out;
}

std::vector<std::vector<int>> parse_int_lists(const std::string& text) {
    std::vector<std::vector<int>> out;
    for (const auto& part : split(text, ';')) out.push_back(parse_ints(part));
    return out;
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    require(static_cast<bool>(in), ErrorKind::Io, "cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    require(static_cast<bool>(out), ErrorKind::Io, "cannot write " + path.string());
    out << text;
}

json read_json(const fs::path& path) {
    try {
        return json::parse(read_file(path));
    } catch (const json::exception& e) {
        fail(ErrorKind::Parse, path.string() + ": " + e.what());
    }
}

// 64-bit FNV-1a, enough to tell inputs apart in a manifest
std::string digest(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char ch : bytes) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    std::ostringstream ss;
    ss << "fnv1a64:" << std::hex << std::setw(16) << std::setfill('0') << h;
    return ss.str();
}

QmcConfig qmc_from(const Shared& shared) {
    QmcConfig q;
    q.sample_budget = shared.budget;
    q.randomizations = shared.randomizations;
    q.seed = shared.seed;
    q.validate();
    return q;
}

json to_json(const CriterionValue& v) {
    return json{{"value", v.value},
                {"p_s", v.p_s},
                {"p_i", v.p_i},
                {"std_error", v.std_error},
                {"lambda_at", std::isfinite(v.lambda_at) ? json(v.lambda_at) : json(nullptr)},
                {"diagnostics", {{"singular_supports", v.singular_supports}}}};
}

json to_json(const HeuristicSummary& h) {
    json j{{"ue_s2", h.ue_s2}, {"ue_s", h.ue_s}, {"var_s", h.var_s}};
    j["e_s2"] = h.e_s2 ? json(*h.e_s2) : json(nullptr);
    j["ue2_efficiency"] = h.ue2_efficiency ? json(*h.ue2_efficiency) : json(nullptr);
    return j;
}

class Run {
public:
    Run(std::string command, const Shared& shared) : command_(std::move(command)), shared_(shared) {
        start_ = std::chrono::steady_clock::now();
        fs::create_directories(shared.out_dir);
    }
    fs::path out(const std::string& name) const { return fs::path(shared_.out_dir) / name; }
    void input(const fs::path& path) { inputs_[path.string()] = digest(read_file(path)); }
    void finish(json config) const {
        config["seed"] = shared_.seed;
        config["budget"] = shared_.budget;
        config["randomizations"] = shared_.randomizations;
        config["threads"] = worker_count();
        json m{{"command", command_},
               {"config", config},
               {"seed", shared_.seed},
               {"version", SSDLASSO_VERSION},
               {"inputs", inputs_},
               {"duration_seconds",
                std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count()}};
        write_file(out("manifest.json"), m.dump(2) + "\n");
    }

private:
    std::string command_;
    Shared shared_;
    std::chrono::steady_clock::time_point start_;
    std::map<std::string, std::string> inputs_;
};

SupportSet supports_from(const json& spec, int p, int k, std::uint64_t seed) {
    if (spec.is_string()) {
        const std::string s = spec.get<std::string>();
        if (s == "exhaustive") return SupportSet::exhaustive(p, k);
        if (s.rfind("nbibd:", 0) == 0) return nbibd_supports(p, k, parse_ints(s.substr(6)).at(0), seed);
        return SupportSet::from_list(parse_int_lists(s));
    }
    if (spec.is_object() && spec.contains("nbibd")) return nbibd_supports(p, k, spec["nbibd"].get<int>(), seed);
    if (spec.is_array()) return SupportSet::from_list(spec.get<std::vector<Support>>());
    fail(ErrorKind::Parse, "supports must be \"exhaustive\", \"nbibd:<blocks>\", {\"nbibd\": n} or a list");
}

SignVectorSet signs_from(const std::string& mode, const json& custom) {
    if (mode == "known") return SignVectorSet::known();
    if (mode == "all") return SignVectorSet::all_half();
    if (mode == "custom") {
        if (custom.is_string()) return SignVectorSet::from_list(parse_int_lists(custom.get<std::string>()));
        return SignVectorSet::from_list(custom.get<std::vector<std::vector<int>>>());
    }
    fail(ErrorKind::Parse, "sign_mode must be known, all or custom");
}

// ---- eval -----------------------------------------------------------------

struct EvalArgs {
    std::string config_path, design_path;
    int k = 0;
    double beta = 0.0;
    std::string sign_mode = "known", signs, supports = "exhaustive", summary = "fixed", prior_signs;
    std::vector<double> lambdas;
    std::vector<double> log_lambda_range;
    int curve_points = 200;
    bool curve = false;
    double step = 0.02, epsilon = 1e-5;
};

int cmd_eval(const EvalArgs& a, Shared shared, CLI::App& sub, bool seed_given, bool budget_given) {
    json req = a.config_path.empty() ? json::object() : read_json(a.config_path);
    auto given = [&](const char* flag) { return sub.count(flag) > 0; };
    // explicit flags win over the request file
    if (given("--design") || !req.contains("design_path")) req["design_path"] = a.design_path;
    if (given("--k") || !req.contains("k")) req["k"] = a.k;
    if (given("--beta") || !req.contains("beta")) req["beta"] = a.beta;
    if (given("--sign-mode") || !req.contains("sign_mode")) req["sign_mode"] = a.sign_mode;
    if (given("--signs")) req["signs"] = a.signs;
    if (given("--supports") || !req.contains("supports")) req["supports"] = a.supports;
    if (given("--summary") || !req.contains("summary")) req["summary"] = a.summary;
    if (given("--lambda")) req["lambda"] = a.lambdas;
    if (given("--log-lambda-range")) req["lambda_range"] = a.log_lambda_range;
    if (given("--prior-signs")) req["prior_signs"] = parse_ints(a.prior_signs);
    if (!seed_given && req.contains("seed")) shared.seed = req["seed"].get<std::uint64_t>();
    if (!budget_given && req.contains("budget")) shared.budget = req["budget"].get<int>();
    req["step"] = a.step;
    req["epsilon"] = a.epsilon;

    const std::string design_path = req["design_path"].get<std::string>();
    require(!design_path.empty(), ErrorKind::InvalidArgument, "a design is required (--design or design_path)");
    Run run("eval", shared);
    run.input(design_path);
    Design design = Design::load_csv(design_path);
    if (req.contains("prior_signs")) {
        auto z = req["prior_signs"].get<std::vector<int>>();
        require(static_cast<int>(z.size()) == design.factors(), ErrorKind::DimensionMismatch,
                "prior signs need one entry per factor");
        design = design.with_column_signs(z);
    }
    const int k = req["k"].get<int>();
    const double beta = req["beta"].get<double>();
    require(k >= 1 && k <= design.factors(), ErrorKind::InvalidArgument, "k must lie in 1..p");
    require(beta > 0.0, ErrorKind::InvalidArgument, "beta must be positive");
    const SupportSet supports = supports_from(req["supports"], design.factors(), k, shared.seed);
    supports.validate(design.factors(), k);
    const SignVectorSet signs = signs_from(req["sign_mode"].get<std::string>(), req.value("signs", json("")));
    const StandardizedDesign sd = standardize(design);
    CriterionCurve curve(sd, k, beta, supports, signs, qmc_from(shared));
    require(curve.singular_supports() < static_cast<int>(supports.supports.size()), ErrorKind::InfeasibleConstraints,
            "every requested support has a singular active block");

    const std::string summary = req["summary"].get<std::string>();
    MaxSearch search;
    IntegralRule rule;
    rule.step = a.step;
    rule.epsilon = a.epsilon;
    if (req.contains("lambda_range")) {
        auto r = req["lambda_range"].get<std::vector<double>>();
        require(r.size() == 2 && r[0] < r[1], ErrorKind::InvalidArgument, "lambda_range needs lo < hi (log scale)");
        search.lower = rule.lower = r[0];
        search.upper = r[1];
    }
    json result;
    std::vector<CurveRow> rows;
    if (summary == "fixed") {
        std::vector<double> lambdas;
        if (req.contains("lambda"))
            lambdas = req["lambda"].is_array() ? req["lambda"].get<std::vector<double>>()
                                               : std::vector<double>{req["lambda"].get<double>()};
        require(!lambdas.empty(), ErrorKind::InvalidArgument, "fixed summary needs --lambda");
        std::vector<double> logs;
        for (double l : lambdas) {
            require(l > 0.0, ErrorKind::InvalidArgument, "lambda must be positive");
            logs.push_back(std::log(l));
        }
        rows = tabulate(curve.evaluator(), logs);
        result = to_json(rows.front().value);
        result["lambda_at"] = lambdas.front();
        if (rows.size() > 1) {
            json per = json::array();
            for (std::size_t i = 0; i < rows.size(); ++i) {
                json e = to_json(rows[i].value);
                e["lambda_at"] = lambdas[i];
                per.push_back(e);
            }
            result["per_lambda"] = per;
        }
    } else if (summary == "max") {
        result = to_json(maximize_over_log_lambda(curve.evaluator(), search));
    } else if (summary == "integral") {
        result = to_json(integrate_over_log_lambda(curve.evaluator(), rule));
    } else {
        fail(ErrorKind::InvalidArgument, "summary must be fixed, max or integral");
    }
    if (summary != "fixed" && a.curve) {
        require(a.curve_points >= 1, ErrorKind::InvalidArgument, "curve points must be positive");
        std::vector<double> logs;
        for (int i = 0; i < a.curve_points; ++i)
            logs.push_back(a.curve_points == 1 ? search.lower
                                               : search.lower + (search.upper - search.lower) * i / (a.curve_points - 1));
        rows = tabulate(curve.evaluator(), logs);
    }
    write_file(run.out("eval.json"), result.dump(2) + "\n");
    if (!rows.empty()) write_file(run.out("curve.csv"), curve_csv(rows));
    run.finish(req);
    return kExitOk;
}

// ---- sym ------------------------------------------------------------------

struct SymArgs {
    int n = 10, k = 4, q = 6;
    double beta = 2.0;
    std::string mode = "known", summary = "integral";
    bool optimize = false, regions = false;
    double tolerance = 5e-3;
    std::optional<double> c, lambda;
    int contour = 0;
    std::vector<double> c_range, log_lambda_range{-5.0, 2.0};  // empty c_range: admissible lower end to 0.9
};

int cmd_sym(const SymArgs& a, const Shared& shared) {
    Run run("sym", shared);
    const QmcConfig qmc = qmc_from(shared);
    const SymSignMode mode = a.mode == "known"     ? SymSignMode::Known
                             : a.mode == "unknown" ? SymSignMode::Unknown
                                                   : (fail(ErrorKind::InvalidArgument, "mode must be known or unknown"),
                                                      SymSignMode::Known);
    const SummaryKind kind = a.summary == "max"        ? SummaryKind::Max
                             : a.summary == "integral" ? SummaryKind::Integral
                                                       : (fail(ErrorKind::InvalidArgument, "summary must be max or integral"),
                                                          SummaryKind::Max);
    SymScenario base{a.n, a.k, a.q, a.beta, 0.0};
    base.validate();
    const std::vector<double> c_range = a.c_range.empty() ? std::vector<double>{base.lower_c() + 1e-3, 0.9} : a.c_range;
    require(c_range.size() == 2 && a.log_lambda_range.size() == 2, ErrorKind::InvalidArgument, "ranges need two values");
    json out = json::object();
    if (a.optimize) {
        CorrelationOptimum opt = optimize_correlation(a.n, a.k, a.q, a.beta, mode, kind, a.tolerance, qmc);
        out["c_star"] = opt.c_star;
        out["value"] = opt.value;
        out["search_bounds"] = {opt.lower, opt.upper};
    }
    if (a.c) {
        SymScenario s = base.with_c(*a.c);
        s.validate();
        out["at_c"] = *a.c;
        out["criterion"] = a.lambda ? to_json(sym_criterion(s, *a.lambda, mode, qmc)) : to_json(sym_summary(s, mode, kind, qmc));
    }
    if (a.regions) {
        const double lo = a.log_lambda_range[0], hi = a.log_lambda_range[1];
        json regions = json::object();
        auto as_json = [](const std::vector<Interval>& v) {
            json arr = json::array();
            for (auto [l, h] : v) arr.push_back({l, h});
            return arr;
        };
        regions["known_sign_gain"] = as_json(condition_regions(
            [&](double w) { return known_sign_gain_condition(a.n, a.beta, std::exp(w)).holds; }, lo, hi));
        regions["orthogonal_local_max"] = as_json(condition_regions(
            [&](double w) { return orthogonal_local_max_condition(a.n, a.k, a.q, a.beta, std::exp(w)).holds; }, lo, hi));
        out["condition_regions"] = regions;
    }
    if (a.contour > 0) {
        auto cells = contour_grid(a.n, a.k, a.q, a.beta, mode, {c_range[0], c_range[1]},
                                  {a.log_lambda_range[0], a.log_lambda_range[1]}, a.contour, qmc);
        write_file(run.out("contour.csv"), contour_csv(cells));
        out["contour_rows"] = cells.size();
    }
    write_file(run.out("sym.json"), out.dump(2) + "\n");
    json cfg{{"n", a.n}, {"k", a.k}, {"q", a.q}, {"beta", a.beta}, {"mode", a.mode}, {"summary", a.summary},
             {"optimize", a.optimize}, {"tolerance", a.tolerance}, {"regions", a.regions}, {"contour", a.contour},
             {"c_range", c_range}, {"log_lambda_range", a.log_lambda_range}};
    if (a.c) cfg["c"] = *a.c;
    if (a.lambda) cfg["lambda"] = *a.lambda;
    run.finish(cfg);
    return kExitOk;
}

// ---- construct ------------------------------------------------------------

struct ConstructArgs {
    std::string objective = "ue2";
    int n = 0, p = 0, k = 0, k1 = 0, starts = 50, max_passes = 200, pad = 0;
    std::optional<double> eff_floor, ues_floor, ue2_reference;
    std::string out = "design.csv";
};

int cmd_construct(const ConstructArgs& a, const Shared& shared) {
    Run run("construct", shared);
    ExchangeConfig ec;
    ec.starts = a.starts;
    ec.max_passes = a.max_passes;
    ec.seed = shared.seed;
    ec.ue2_efficiency_floor = a.eff_floor;
    ec.ue_s_floor = a.ues_floor;
    ec.ue2_reference = a.ue2_reference;
    json info = json::object();
    std::optional<Design> design;
    if (a.objective == "ue2") {
        design = exchange_ue2(a.n, a.p, ec).design;
    } else if (a.objective == "varsplus") {
        design = exchange_var_s_plus(a.n, a.p, ec).design;
    } else if (a.objective == "block") {
        design = block_construction(a.n, a.k, a.k1);
        auto [x1, x2] = xi_values(a.n, a.k1, a.k - a.k1);
        const double v = 1.0 - 4.0 / (static_cast<double>(a.n) * a.n);
        info["xi"] = {x1, x2};
        info["scaling"] = v;
        info["bound_ratio"] = {{"first_block", sign_bound_ratio(x1, v).ratio_scale},
                               {"second_block", sign_bound_ratio(x2, v).ratio_scale}};
        if (a.pad > 0) design = pad_with_constant_columns(*design, a.pad);
    } else {
        fail(ErrorKind::InvalidArgument, "objective must be ue2, varsplus or block");
    }
    info["runs"] = design->runs();
    info["factors"] = design->factors();
    info["heuristics"] = to_json(heuristics(*design));
    design->save_csv(run.out(a.out));
    write_file(run.out("construct.json"), info.dump(2) + "\n");
    json cfg{{"objective", a.objective}, {"n", a.n}, {"p", a.p}, {"k", a.k}, {"k1", a.k1}, {"starts", a.starts},
             {"max_passes", a.max_passes}, {"pad", a.pad}, {"out", a.out}};
    cfg["eff_floor"] = a.eff_floor ? json(*a.eff_floor) : json(nullptr);
    cfg["ues_floor"] = a.ues_floor ? json(*a.ues_floor) : json(nullptr);
    cfg["ue2_reference"] = a.ue2_reference ? json(*a.ue2_reference) : json(nullptr);
    run.finish(cfg);
    return kExitOk;
}

// ---- hils -----------------------------------------------------------------

int cmd_hils(const std::string& config_path, Shared shared, bool seed_given, bool budget_given) {
    json j = read_json(config_path);
    if (!seed_given && j.contains("seed")) shared.seed = j["seed"].get<std::uint64_t>();
    if (!budget_given && j.contains("budget")) shared.budget = j["budget"].get<int>();
    Run run("hils", shared);
    run.input(config_path);
    HilsConfig c;
    try {
        c.n = j.value("n", c.n);
        c.p = j.value("p", c.p);
        c.k = j.value("k", c.k);
        c.beta = j.value("beta", c.beta);
        const std::string summary = j.value("summary", std::string("max"));
        c.summary = summary == "fixed" ? HilsSummary::Fixed
                    : summary == "integral" ? HilsSummary::Integral
                    : summary == "max" ? HilsSummary::Max
                    : (fail(ErrorKind::InvalidArgument, "summary must be fixed, max or integral"), HilsSummary::Max);
        const std::string signs = j.value("sign_mode", std::string("all"));
        require(signs == "all" || signs == "known", ErrorKind::InvalidArgument, "sign_mode must be known or all");
        c.sign_mode = signs == "known" ? SignMode::Known : SignMode::AllHalf;
        c.lambda = j.value("lambda", c.lambda);
        c.m_v = j.value("m_v", c.m_v);
        c.m_u = j.value("m_u", c.m_u);
        c.m_v_star = j.value("m_v_star", c.m_v);
        c.m_u_star = j.value("m_u_star", c.m_u);
        c.exchange_starts = j.value("exchange_starts", c.exchange_starts);
        c.reference_starts = j.value("reference_starts", c.reference_starts);
        c.max_passes = j.value("max_passes", c.max_passes);
        c.efficiency_floors = j.value("efficiency_floors", c.efficiency_floors);
        c.ue_s_floors = j.value("ue_s_floors", c.ue_s_floors);
        if (j.contains("ue2_reference")) c.ue2_reference = j["ue2_reference"].get<double>();
        if (j.contains("supports")) {
            const json& s = j["supports"];
            if (s.is_object() && s.contains("nbibd")) c.nbibd_blocks = s["nbibd"].get<int>();
            else if (s.is_string() && s.get<std::string>().rfind("nbibd:", 0) == 0)
                c.nbibd_blocks = parse_ints(s.get<std::string>().substr(6)).at(0);
            else if (s.is_array()) c.explicit_supports = s.get<std::vector<Support>>();
            else require(s == "exhaustive", ErrorKind::Parse, "unrecognised supports entry");
        }
        const std::string prescreen = j.value("prescreen", std::string("heuristic"));
        require(prescreen == "heuristic" || prescreen == "criterion", ErrorKind::InvalidArgument,
                "prescreen must be heuristic or criterion");
        c.prescreen = prescreen == "criterion" ? PrescreenRule::Criterion : PrescreenRule::Heuristic;
        for (const auto& path : j.value("extra_design_paths", std::vector<std::string>{})) {
            run.input(path);
            c.extra_designs.emplace_back(path, Design::load_csv(path));
        }
    } catch (const json::exception& e) {
        fail(ErrorKind::Parse, config_path + ": " + e.what());
    }
    c.seed = shared.seed;
    c.qmc = qmc_from(shared);

    HilsReport rep = hils(c);
    rep.winner.save_csv(run.out("winner.csv"));
    json table = json::array();
    for (const auto& cand : rep.candidates) {
        json row{{"source", cand.source}, {"heuristics", to_json(cand.heuristics)}};
        row["efficiency_floor"] = cand.efficiency_floor ? json(cand.efficiency_floor) : json(nullptr);
        row["max"] = to_json(cand.max_value);
        row["integral"] = to_json(cand.integral_value);
        row["fixed"] = to_json(cand.fixed_value);
        row["score"] = cand.score;
        table.push_back(row);
    }
    json out{{"winner_index", rep.winner_index},
             {"winner_value", to_json(rep.winner_value)},
             {"ue2_reference", rep.ue2_reference},
             {"candidates", table}};
    write_file(run.out("hils.json"), out.dump(2) + "\n");
    j["seed"] = shared.seed;
    run.finish(j);
    return kExitOk;
}

// ---- simulate -------------------------------------------------------------

struct SimulateArgs {
    std::string design_path, support, signs;
    std::vector<double> beta;
    double lambda = 1.0;
    int reps = 10000;
};

int cmd_simulate(const SimulateArgs& a, const Shared& shared) {
    Run run("simulate", shared);
    run.input(a.design_path);
    const Design design = Design::load_csv(a.design_path);
    Scenario sc;
    sc.support = parse_ints(a.support);
    sc.signs = a.signs.empty() ? std::vector<int>(sc.support.size(), 1) : parse_ints(a.signs);
    require(!a.beta.empty(), ErrorKind::InvalidArgument, "--beta is required");
    sc.magnitudes = a.beta.size() == 1 ? std::vector<double>(sc.support.size(), a.beta[0]) : a.beta;
    sc.lambda = a.lambda;
    sc.validate(design.factors());

    SimConfig sim{a.reps, shared.seed, a.lambda};
    SimResult r = simulate_sign_recovery(design, sc, sim);
    CriterionValue an = sign_recovery_probability(standardize(design), sc, qmc_from(shared));
    const double combined = std::sqrt(r.std_error * r.std_error + an.std_error * an.std_error);
    json out{{"empirical", r.empirical},
             {"ci_low", r.ci_low},
             {"ci_high", r.ci_high},
             {"hits", r.hits},
             {"replications", r.replications},
             {"analytic", an.value},
             {"analytic_std_error", an.std_error},
             {"agree", std::fabs(an.value - r.empirical) <= 3.0 * combined + 1e-12}};
    write_file(run.out("simulate.json"), out.dump(2) + "\n");
    run.finish(json{{"design", a.design_path}, {"support", sc.support}, {"signs", sc.signs}, {"beta", sc.magnitudes},
                    {"lambda", a.lambda}, {"reps", a.reps}});
    return kExitOk;
}

int exit_code(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::InfeasibleConstraints:
        case ErrorKind::EmptyPool:
        case ErrorKind::SingularCA:
        case ErrorKind::DegenerateSupport: return kExitInfeasible;
        case ErrorKind::NotPsd:
        case ErrorKind::NonFinite: return kExitInternal;
        default: return kExitInput;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sign-recovery criteria and constructions for supersaturated designs"};
    app.require_subcommand(1);
    app.set_version_flag("--version", SSDLASSO_VERSION);
    Shared shared;
    auto* seed_opt = app.add_option("--seed", shared.seed, "base random seed");
    auto* budget_opt = app.add_option("--budget", shared.budget, "QMC points per randomization")->check(CLI::PositiveNumber);
    app.add_option("--randomizations", shared.randomizations, "independent QMC shifts")->check(CLI::PositiveNumber);
    app.add_option("--threads", shared.threads, "worker threads (0 = all cores)");
    app.add_option("--out-dir", shared.out_dir, "directory for result files");
    app.fallthrough();

    EvalArgs ea;
    auto* eval = app.add_subcommand("eval", "evaluate a sign-recovery criterion for a design");
    eval->add_option("--config", ea.config_path, "request JSON");
    eval->add_option("--design", ea.design_path, "design CSV");
    eval->add_option("--k", ea.k, "support size");
    eval->add_option("--beta", ea.beta, "effect magnitude");
    eval->add_option("--sign-mode", ea.sign_mode, "known | all | custom");
    eval->add_option("--signs", ea.signs, "custom sign vectors, e.g. 1,-1,1;1,1,-1");
    eval->add_option("--supports", ea.supports, "exhaustive | nbibd:<blocks> | 0,1,2;3,4,5");
    eval->add_option("--summary", ea.summary, "fixed | max | integral");
    eval->add_option("--lambda", ea.lambdas, "penalty value(s) for the fixed summary");
    eval->add_option("--log-lambda-range", ea.log_lambda_range, "lo hi in log lambda")->expected(2);
    eval->add_option("--prior-signs", ea.prior_signs, "per-factor prior signs applied to the columns");
    eval->add_flag("--curve", ea.curve, "also write curve.csv over the log lambda range");
    eval->add_option("--curve-points", ea.curve_points, "rows in curve.csv");
    eval->add_option("--step", ea.step, "integral step in log lambda");
    eval->add_option("--epsilon", ea.epsilon, "integral cutoff");

    SymArgs sa;
    auto* sym = app.add_subcommand("sym", "criteria under a completely symmetric correlation");
    sym->add_option("--n", sa.n);
    sym->add_option("--k", sa.k);
    sym->add_option("--q", sa.q, "inactive factor count");
    sym->add_option("--beta", sa.beta);
    sym->add_option("--mode", sa.mode, "known | unknown");
    sym->add_option("--summary", sa.summary, "max | integral");
    sym->add_flag("--optimize", sa.optimize, "search for the best correlation");
    sym->add_option("--tolerance", sa.tolerance, "bracket width for --optimize");
    sym->add_option("--c", sa.c, "evaluate at this correlation");
    sym->add_option("--lambda", sa.lambda, "fixed lambda for --c (otherwise the summary)");
    sym->add_flag("--regions", sa.regions, "report where the analytic conditions hold");
    sym->add_option("--contour", sa.contour, "grid resolution for contour.csv");
    sym->add_option("--c-range", sa.c_range, "contour range in c")->expected(2);
    sym->add_option("--log-lambda-range", sa.log_lambda_range, "range in log lambda")->expected(2);

    ConstructArgs ca;
    auto* con = app.add_subcommand("construct", "build a design");
    con->add_option("--objective", ca.objective, "ue2 | varsplus | block");
    con->add_option("--n", ca.n)->required();
    con->add_option("--p", ca.p);
    con->add_option("--k", ca.k, "active columns (block)");
    con->add_option("--k1", ca.k1, "columns from the first block (block)");
    con->add_option("--pad", ca.pad, "pad the block design to this many factors");
    con->add_option("--starts", ca.starts);
    con->add_option("--max-passes", ca.max_passes);
    con->add_option("--eff-floor", ca.eff_floor, "UE(s^2)-efficiency floor");
    con->add_option("--ues-floor", ca.ues_floor, "UE(s) floor");
    con->add_option("--ue2-reference", ca.ue2_reference, "reference UE(s^2)");
    con->add_option("--out", ca.out, "design file name inside --out-dir");

    std::string hils_config;
    auto* hl = app.add_subcommand("hils", "heuristic-initiated lasso sieve");
    hl->add_option("--config", hils_config, "HILS JSON config")->required();

    SimulateArgs ma;
    auto* simc = app.add_subcommand("simulate", "simulate lasso sign recovery");
    simc->add_option("--design", ma.design_path)->required();
    simc->add_option("--support", ma.support, "e.g. 0,1,2")->required();
    simc->add_option("--signs", ma.signs, "e.g. 1,-1,1 (default all +1)");
    simc->add_option("--beta", ma.beta, "one magnitude or one per support entry")->required()->delimiter(',');
    simc->add_option("--lambda", ma.lambda);
    simc->add_option("--reps", ma.reps);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitInput;
    }

    try {
        set_worker_count(shared.threads);
        if (*eval) return cmd_eval(ea, shared, *eval, seed_opt->count() > 0, budget_opt->count() > 0);
        if (*sym) return cmd_sym(sa, shared);
        if (*con) return cmd_construct(ca, shared);
        if (*hl) return cmd_hils(hils_config, shared, seed_opt->count() > 0, budget_opt->count() > 0);
        if (*simc) return cmd_simulate(ma, shared);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code(e.kind());
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const json::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kExitInternal;
    }
    return kExitInternal;
}
