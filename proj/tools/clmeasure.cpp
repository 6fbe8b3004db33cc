#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "clmeasure.hpp"

namespace {

using clm::Integer;
using clm::Rational;
using ojson = nlohmann::ordered_json;

// exit codes
constexpr int kOk = 0;
constexpr int kVerifyFailed = 1;
constexpr int kBadInput = 2;
constexpr int kSchema = 3;
constexpr int kBadShape = 4;

struct ExitError : std::runtime_error {
    ExitError(int c, const std::string& what) : std::runtime_error(what), code(c) {}
    int code;
};

[[noreturn]] void fail(int code, const std::string& what) { throw ExitError(code, what); }

// "1e-12", "0.001" or "1/1000"
Rational parse_rational(const std::string& text) {
    std::string s = text;
    long exp10 = 0;
    if (auto e = s.find_first_of("eE"); e != std::string::npos) {
        exp10 = std::stol(s.substr(e + 1));
        s = s.substr(0, e);
    }
    Rational v;
    if (s.find('/') != std::string::npos) {
        v = Rational(s, 10);
        v.canonicalize();
    } else {
        bool neg = !s.empty() && s[0] == '-';
        if (neg) s = s.substr(1);
        if (s.empty() || s.find_first_not_of("0123456789.") != std::string::npos ||
            std::count(s.begin(), s.end(), '.') > 1)
            throw std::invalid_argument("not a number: " + text);
        v = clm::parse_decimal(s[0] == '.' ? "0" + s : s);
        if (neg) v = -v;
    }
    return v * clm::qpow(10, exp10);
}

Rational tolerance(const std::string& flag) {
    std::string text = flag;
    if (text.empty())
        if (const char* env = std::getenv("CLMEASURE_TOL")) text = env;
    if (text.empty()) return clm::default_tol();
    Rational t;
    try {
        t = parse_rational(text);
    } catch (const std::exception&) {
        fail(kBadInput, "invalid tolerance '" + text + "'");
    }
    if (t <= 0) fail(kBadInput, "tolerance must be positive");
    return t;
}

void emit(ojson j) {
    ojson out{{"schema_version", clm::kSchemaVersion}};
    for (auto& [k, v] : j.items()) out[k] = std::move(v);
    std::cout << out.dump(2) << "\n";
}

struct DecompArgs {
    std::string group;
    long p = 0;
    int r = 1;
    int u = 1;
    std::string file;

    void add_to(CLI::App* app, bool with_ru = true) {
        app->add_option("--group", group, "cyclic:N or abelian:a,b,...");
        app->add_option("--p", p, "prime");
        if (with_ru) {
            app->add_option("--r", r, "roots-of-unity level");
            app->add_option("--u", u, "unit rank offset");
        }
        app->add_option("--decomp-file", file, "decomposition JSON");
    }

    clm::DecompData build() const {
        if (!file.empty()) {
            std::ifstream in(file);
            if (!in) fail(kBadInput, "cannot read " + file);
            std::stringstream ss;
            ss << in.rdbuf();
            return clm::load_json(ss.str());  // SchemaError -> 3
        }
        if (group.empty() || p == 0) fail(kBadInput, "need --group and --p, or --decomp-file");
        try {
            auto d = clm::make_decomp(clm::GroupSpec::parse(group), p, r, u);
            clm::require_valid(d);
            return d;
        } catch (const clm::SchemaError&) {
            throw;
        } catch (const std::exception& e) {
            fail(kBadInput, e.what());
        }
    }
};

clm::ModuleShape shape_arg(const clm::DecompData& d, const std::string& text) {
    clm::ModuleShape s;
    try {
        s = clm::parse_shape(d, text);  // SchemaError -> 3
        clm::require_shape(d, s);
    } catch (const std::invalid_argument& e) {
        fail(kBadShape, e.what());
    }
    return s;
}

std::map<int, long> ranks_arg(const clm::DecompData& d, const std::string& text) {
    std::map<int, long> out;
    std::stringstream ss(text);
    std::string tok;
    size_t i = 0;
    while (std::getline(ss, tok, ',')) {
        if (i >= d.components.size()) fail(kBadShape, "more ranks than components");
        size_t used = 0;
        long v = -1;
        try {
            v = std::stol(tok, &used);
        } catch (const std::exception&) {
        }
        if (used != tok.size() || v < 0) fail(kSchema, "bad rank '" + tok + "'");
        out[d.components[i++].id] = v;
    }
    return out;
}

// anything the library rejects while evaluating a shape
template <class F>
auto shape_guard(F&& f) {
    try {
        return f();
    } catch (const clm::SchemaError&) {
        throw;
    } catch (const std::invalid_argument& e) {
        fail(kBadShape, e.what());
    } catch (const std::domain_error& e) {
        fail(kBadShape, e.what());
    }
}

// config file keys become flags placed right after the subcommand name
std::vector<std::string> expand_config(std::vector<std::string> args) {
    auto it = std::find(args.begin(), args.end(), "--config");
    if (it == args.end()) return args;
    if (it + 1 == args.end()) fail(kBadInput, "--config needs a path");
    const std::string path = *(it + 1);
    args.erase(it, it + 2);
    std::ifstream in(path);
    if (!in) fail(kBadInput, "cannot read config " + path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        fail(kSchema, std::string("config: ") + e.what());
    }
    if (!j.is_object()) fail(kSchema, "config must be a JSON object");
    std::vector<std::string> extra;
    for (const auto& [k, v] : j.items()) {
        const std::string flag = "--" + k;
        if (v.is_boolean()) {
            if (v.get<bool>()) extra.push_back(flag);
        } else if (v.is_string()) {
            extra.insert(extra.end(), {flag, v.get<std::string>()});
        } else if (v.is_number() || v.is_array()) {
            extra.insert(extra.end(), {flag, v.dump()});
        } else {
            fail(kSchema, "config: unsupported value for '" + k + "'");
        }
    }
    // args[0] is the program, args[1] the subcommand; command line wins because it comes last
    const size_t at = std::min<size_t>(2, args.size());
    args.insert(args.begin() + static_cast<long>(at), extra.begin(), extra.end());
    return args;
}

// ---------------------------------------------------------------------------

int run(int argc, char** argv) {
    CLI::App app{"Cohen-Lenstra type measures for class groups with roots of unity"};
    app.require_subcommand(1);
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    std::string config_unused;
    app.add_option("--config", config_unused, "JSON file whose keys mirror the flags");

    // decompose
    DecompArgs dec_args;
    auto* dec = app.add_subcommand("decompose", "print the decomposition data");
    dec_args.add_to(dec);

    // prob / moment
    DecompArgs prob_args;
    std::string prob_module, prob_tol;
    auto* prob = app.add_subcommand("prob", "probability of a module shape");
    prob_args.add_to(prob);
    prob->add_option("--module", prob_module, "shape as JSON array of partitions")->required();
    prob->add_option("--tol", prob_tol);

    DecompArgs mom_args;
    std::string mom_module, mom_tol;
    auto* mom = app.add_subcommand("moment", "the moment attached to a module shape");
    mom_args.add_to(mom);
    mom->add_option("--module", mom_module)->required();
    mom->add_option("--tol", mom_tol);

    // ptors
    DecompArgs pt_args;
    std::string pt_ranks, pt_tol;
    auto* pt = app.add_subcommand("ptors", "distribution of the p-torsion ranks");
    pt_args.add_to(pt);
    pt->add_option("--ranks", pt_ranks, "ranks per component, comma separated")->required();
    pt->add_option("--tol", pt_tol);

    // table
    DecompArgs tab_args;
    std::string tab_bound, tab_format = "json", tab_tol;
    int tab_sig = 6;
    auto* tab = app.add_subcommand("table", "all shapes up to a module order");
    tab_args.add_to(tab);
    tab->add_option("--max-order", tab_bound)->required();
    tab->add_option("--format", tab_format)->check(CLI::IsMember({"csv", "json"}));
    tab->add_option("--digits", tab_sig)->check(CLI::Range(2, 30));
    tab->add_option("--tol", tab_tol);

    // verify
    std::string ver_suite, ver_bound, ver_tol;
    clm::VerifyOptions vopt;
    auto* ver = app.add_subcommand("verify", "run a verification suite");
    ver->add_option("--suite", ver_suite, "suite name or 'all'")->required();
    ver->add_option("--bound", ver_bound);
    ver->add_option("--tol", ver_tol);
    ver->add_option("--emax", vopt.emax)->check(CLI::NonNegativeNumber);
    ver->add_option("--samples", vopt.samples)->check(CLI::PositiveNumber);
    ver->add_option("--seed", vopt.seed);
    ver->add_option("--workers", vopt.workers);

    // simulate
    long sp = 0, sr = 1, sk = 2, ssamples = 10000;
    int sg = 2;
    std::uint64_t sseed = 0;
    unsigned sworkers = 0;
    bool scompare = false;
    auto* sim = app.add_subcommand("simulate", "cokernel statistics of random symplectic-type matrices");
    sim->add_option("--p", sp)->required();
    sim->add_option("--r", sr);
    sim->add_option("--k", sk);
    sim->add_option("--g", sg)->check(CLI::PositiveNumber);
    sim->add_option("--samples", ssamples)->check(CLI::PositiveNumber);
    sim->add_option("--seed", sseed);
    sim->add_option("--workers", sworkers);
    sim->add_flag("--compare", scompare);

    // compare-malle
    std::string cm_case;
    int cm_u = 1, cm_eps = 1, cm_n = 1;
    long cm_p = 2, cm_d = 1;
    auto* cm = app.add_subcommand("compare-malle", "ratio tables against the rank-only prediction");
    cm->add_option("--case", cm_case, "ip or aip")->required();
    cm->add_option("--u", cm_u)->check(CLI::PositiveNumber);
    cm->add_option("--p", cm_p);
    cm->add_option("--d", cm_d);
    cm->add_option("--epsilon", cm_eps);
    cm->add_option("--n", cm_n)->check(CLI::PositiveNumber);

    std::vector<std::string> args;
    for (int i = 0; i < argc; ++i) args.emplace_back(argv[i]);
    args = expand_config(std::move(args));
    std::vector<std::string> rev(args.rbegin(), args.rend() - 1);
    try {
        app.parse(rev);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kBadInput;
    }

    if (*dec) {
        auto d = dec_args.build();
        ojson j = ojson::parse(clm::to_json(d).dump());
        emit({{"decomposition", j}});
        return kOk;
    }

    if (*prob) {
        auto d = prob_args.build();
        auto s = shape_arg(d, prob_module);
        const Rational tol = tolerance(prob_tol);
        auto v = shape_guard([&] { return clm::evaluate_for_print(clm::nu_module_factored(d, s), tol); });
        ojson j = ojson::parse(clm::value_json(v).dump());
        if (v.is_point()) j["exact"] = v.lo().get_str();
        emit({{"module", ojson::parse(clm::shape_json(d, s).dump())}, {"group", clm::group_description(d, s)},
              {"value", j}});
        return kOk;
    }

    if (*mom) {
        auto d = mom_args.build();
        auto s = shape_arg(d, mom_module);
        (void)tolerance(mom_tol);
        auto m = shape_guard([&] { return clm::moment(d, s); });
        ojson j = ojson::parse(clm::value_json(m.enclose(128)).dump());
        j["exact"] = clm::qnum_string(m);
        emit({{"module", ojson::parse(clm::shape_json(d, s).dump())}, {"value", j}});
        return kOk;
    }

    if (*pt) {
        auto d = pt_args.build();
        auto ranks = ranks_arg(d, pt_ranks);
        const Rational tol = tolerance(pt_tol);
        auto v = shape_guard([&] { return clm::evaluate_for_print(clm::nu_ptors_factored(d, ranks), tol); });
        ojson rj = ojson::array();
        for (const auto& c : d.components) rj.push_back(ranks.count(c.id) ? ranks.at(c.id) : 0L);
        ojson j = ojson::parse(clm::value_json(v).dump());
        if (v.is_point()) j["exact"] = v.lo().get_str();
        emit({{"ranks", rj}, {"value", j}});
        return kOk;
    }

    if (*tab) {
        auto d = tab_args.build();
        const Rational tol = tolerance(tab_tol);
        Integer bound;
        try {
            bound = Integer(tab_bound, 10);
        } catch (const std::exception&) {
            fail(kBadInput, "bad --max-order '" + tab_bound + "'");
        }
        if (bound < 1) fail(kBadInput, "--max-order must be >= 1");
        auto shapes = shape_guard([&] { return clm::enumerate_shapes(d, bound); });
        ojson rows = ojson::array();
        clm::CertValue mass(Rational(0));
        std::ostringstream csv;
        csv << "shape,group,order,lo,hi,decimal,moment\n";
        for (const auto& s : shapes) {
            auto v = shape_guard([&] { return clm::evaluate_for_print(clm::nu_module_factored(d, s), tol, tab_sig); });
            mass += v;
            const std::string sh = clm::shape_json(d, s).dump();
            const std::string grp = clm::group_description(d, s);
            const std::string order = clm::module_size(d, s).get_str();
            const auto cj = clm::cert_json(v);
            const std::string dec_s = clm::format_decimal(v.mid(), tab_sig);
            const std::string mo = clm::qnum_string(clm::moment(d, s));
            rows.push_back({{"shape", ojson::parse(sh)},
                            {"group", grp},
                            {"order", order},
                            {"lo", cj["lo"]},
                            {"hi", cj["hi"]},
                            {"decimal", dec_s},
                            {"moment", mo}});
            csv << '"' << sh << "\"," << grp << "," << order << "," << cj["lo"].get<std::string>() << ","
                << cj["hi"].get<std::string>() << "," << dec_s << "," << mo << "\n";
        }
        if (mass.hi() > 1) std::cerr << "warning: table mass upper bound exceeds 1\n";
        if (tab_format == "csv") {
            std::cout << "# schema_version " << clm::kSchemaVersion << "\n" << csv.str();
        } else {
            emit({{"decomposition", ojson::parse(clm::to_json(d).dump())},
                  {"max_order", bound.get_str()},
                  {"rows", rows},
                  {"mass", ojson::parse(clm::cert_json(mass).dump())}});
        }
        return kOk;
    }

    if (*ver) {
        vopt.tol = tolerance(ver_tol);
        if (!ver_bound.empty()) {
            try {
                vopt.bound = Integer(ver_bound, 10);
            } catch (const std::exception&) {
                fail(kBadInput, "bad --bound '" + ver_bound + "'");
            }
        }
        std::vector<std::string> names;
        if (ver_suite == "all")
            for (const auto& [n, f] : clm::suites()) names.push_back(n);
        else
            names.push_back(ver_suite);
        ojson results = ojson::array();
        bool ok = true;
        for (const auto& n : names) {
            auto r = clm::run_suite(n, vopt);
            if (!r) fail(kBadInput, "unknown suite '" + n + "'");
            std::cerr << n << ": " << (r->pass ? "pass" : "FAIL") << "\n";
            ok = ok && r->pass;
            results.push_back(r->json());
        }
        emit({{"pass", ok}, {"suites", results}});
        return ok ? kOk : kVerifyFailed;
    }

    if (*sim) {
        if (!clm::is_prime(sp)) fail(kBadInput, "p must be prime");
        if (sr < 1) fail(kBadInput, "r must be >= 1");
        if (sk < sr) fail(kBadInput, "k must be >= r");
        clm::Histogram h;
        try {
            h = clm::run_experiment(sp, sr, sk, sg, ssamples, sseed, sworkers);
        } catch (const std::invalid_argument& e) {
            fail(kBadInput, e.what());
        }
        ojson j{{"histogram", clm::histogram_json(h)}};
        if (scompare) j["comparison"] = clm::comparison_json(clm::compare_to_limit(h));
        emit(std::move(j));
        return kOk;
    }

    if (*cm) {
        if (cm_case == "ip") {
            auto rep = clm::ip_ratio_report(cm_u);
            emit(ojson::parse(clm::ratio_json(rep).dump()));
            return kOk;
        }
        if (cm_case == "aip") {
            if (!clm::is_prime(cm_p)) fail(kBadInput, "p must be prime");
            if (cm_d < 1) fail(kBadInput, "d must be >= 1");
            if (cm_eps < -1 || cm_eps > 1) fail(kBadInput, "epsilon must be -1, 0 or 1");
            const long q = clm::ipow(cm_p, static_cast<unsigned long>(cm_d)).get_si();
            // ratios relative to the trivial module, ranks 0..4
            ojson rows = ojson::array();
            const clm::QNum o0 = clm::ours_weight(q, cm_eps, cm_n, cm_u, clm::Partition());
            const clm::QNum m0 = clm::malle_weight(q, cm_d, cm_n, cm_u, clm::Partition());
            bool proportional = true;
            clm::QNum first;
            for (long k = 0; k <= 4; ++k) {
                const clm::Partition lam = k ? clm::Partition{k} : clm::Partition();
                const clm::QNum o = clm::ours_weight(q, cm_eps, cm_n, cm_u, lam) / o0;
                const clm::QNum m = clm::malle_weight(q, cm_d, cm_n, cm_u, lam) / m0;
                const clm::QNum ratio = o / m;
                if (k == 0) first = ratio;
                else if (!(ratio == first)) proportional = false;
                rows.push_back({{"partition", ojson(lam.parts())},
                                {"ours_exact", o.str()},
                                {"malle_exact", m.str()},
                                {"ours_over_malle", ratio.str()}});
            }
            const bool agree = clm::malle_agrees(cm_p, cm_d, cm_eps);
            if (agree != proportional) std::cerr << "warning: criterion and ratio table disagree\n";
            emit({{"case", "aip"},
                  {"p", cm_p},
                  {"d", cm_d},
                  {"epsilon", cm_eps},
                  {"u", cm_u},
                  {"rows", rows},
                  {"verdict", agree ? "agree" : "disagree"}});
            return kOk;
        }
        fail(kBadInput, "unknown case '" + cm_case + "'");
    }
    return kBadInput;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const ExitError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.code;
    } catch (const clm::SchemaError& e) {
        std::cerr << "schema error: " << e.what() << "\n";
        return kSchema;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kBadInput;
    }
}
