#include "symred/error.hpp"
#include "symred/suite.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <set>

#ifndef SYMRED_CASES_DIR
#define SYMRED_CASES_DIR "cases"
#endif

namespace fs = std::filesystem;
using namespace symred;

namespace {

constexpr int exit_usage = 3;

struct Config {
    std::string bundle;
    std::vector<std::string> operators;
    std::string ansatz;
    std::string candidate;
    std::string solution;
    std::string backlund;
    std::string overdetermined;
    std::string mode;
    std::string seed;
    std::optional<double> tol;
    bool fd = false;
    std::string format = "text";
    std::string cases = SYMRED_CASES_DIR;
};

/// "K" or "A..B"; SYMRED_SEED replaces the default of 0.
std::vector<std::uint64_t> seeds_of(const std::string& text)
{
    std::string s = text;
    if (s.empty()) {
        const char* env = std::getenv("SYMRED_SEED");
        s = env != nullptr && *env != '\0' ? env : "0";
    }
    try {
        const auto dots = s.find("..");
        if (dots == std::string::npos) return {std::stoull(s)};
        const auto lo = std::stoull(s.substr(0, dots));
        const auto hi = std::stoull(s.substr(dots + 2));
        if (hi < lo) throw UsageError("empty seed range '" + s + "'");
        std::vector<std::uint64_t> out;
        for (auto k = lo; k <= hi; ++k) out.push_back(k);
        return out;
    } catch (const std::logic_error&) {
        throw UsageError("seed must be a number or a range A..B, got '" + s + "'");
    }
}

std::string number(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

std::string status_of(const CheckResult& r, bool by_expectation)
{
    if (r.verdict == Verdict::inconclusive) return "INCONCLUSIVE";
    if (by_expectation) return r.as_expected() ? "PASS" : "FAIL";
    return r.verdict == Verdict::pass ? "PASS" : "FAIL";
}

nlohmann::json to_json(const CheckResult& r)
{
    nlohmann::json tol = nlohmann::json::object();
    for (const auto& [k, v] : r.tolerances) tol[k] = v;
    nlohmann::json witness = nlohmann::json::object();
    for (const auto& [k, v] : r.witness) witness[k] = v;
    nlohmann::json j{{"case", r.case_name},
                     {"kind", r.kind},
                     {"name", r.name},
                     {"verdict", verdict_name(r.verdict)},
                     {"expected", expectation_name(r.expected)},
                     {"as_expected", r.as_expected()},
                     {"residual_max", r.residual_max},
                     {"seed", r.seed},
                     {"tolerances", tol},
                     {"provenance", r.provenance},
                     {"witness", witness},
                     {"note", r.note}};
    if (!r.derived.empty()) j["derived"] = r.derived;
    if (!r.assumptions.empty()) j["assumptions"] = r.assumptions;
    return j;
}

class Printer {
public:
    Printer(const Config& c, std::string command, bool by_expectation)
        : json_(c.format == "json-lines"), by_expectation_(by_expectation)
    {
        if (json_) return;
        const auto seeds = seeds_of(c.seed);
        std::cout << "# symred " << command << " seed " << seeds.front();
        if (seeds.size() > 1) std::cout << ".." << seeds.back();
        if (c.seed.empty() && std::getenv("SYMRED_SEED") != nullptr) std::cout << " (from SYMRED_SEED)";
        std::cout << "\n# tolerances: zero test abs " << number(c.tol.value_or(1e-9)) << " rel "
                  << number(c.tol.value_or(1e-9)) << " over 64 points; explicit residual "
                  << number(c.tol.value_or(1e-9)) << "; finite-difference residual " << number(c.tol.value_or(1e-4))
                  << " with h 1e-4\n";
    }

    void print(const CheckResult& r)
    {
        results_.push_back(r);
        if (json_) {
            std::cout << to_json(r).dump() << "\n";
            return;
        }
        std::cout << status_of(r, by_expectation_) << "  " << (r.case_name.empty() ? "" : r.case_name + " ") << r.kind
                  << " " << r.name << "  verdict " << verdict_name(r.verdict);
        if (r.expected == Expectation::fail) std::cout << " (expected fail)";
        std::cout << "  residual_max " << number(r.residual_max) << "  seed " << r.seed << "  tol";
        for (const auto& [k, v] : r.tolerances) std::cout << " " << k << "=" << number(v);
        if (!r.provenance.empty()) std::cout << "  [" << r.provenance << "]";
        std::cout << "\n";
        if (!r.witness.empty()) {
            std::cout << "    witness";
            if (!r.failing.empty()) std::cout << " (" << r.failing << ")";
            std::cout << ":";
            for (const auto& [k, v] : r.witness) {
                if (k.find('#') == std::string::npos) std::cout << " " << k << "=" << number(v);
            }
            std::cout << "\n";
        }
        if (!r.note.empty()) std::cout << "    " << r.note << "\n";
        for (const auto& a : r.assumptions) std::cout << "    assuming " << a << "\n";
        if (!r.derived.empty()) {
            std::cout << "    derived system:\n";
            std::size_t pos = 0;
            while (pos < r.derived.size()) {
                const auto end = r.derived.find('\n', pos);
                std::cout << "      " << r.derived.substr(pos, end - pos) << "\n";
                pos = end + 1;
            }
        }
    }

    int exit_code() const
    {
        bool fail = false;
        bool inconclusive = false;
        for (const auto& r : results_) {
            if (r.verdict == Verdict::inconclusive) {
                inconclusive = true;
            } else if (by_expectation_ ? !r.as_expected() : r.verdict == Verdict::fail) {
                fail = true;
            }
        }
        return fail ? 1 : inconclusive ? 2 : 0;
    }

    const std::vector<CheckResult>& results() const { return results_; }

private:
    bool json_;
    bool by_expectation_;
    std::vector<CheckResult> results_;
};

RunOverrides overrides_of(const Config& c)
{
    RunOverrides o;
    if (!c.mode.empty()) {
        o.mode = mode_from_name(c.mode);
        if (!o.mode) throw UsageError("mode must be classical, conditional or lb");
    }
    o.tolerance = c.tol;
    o.finite_differences = c.fd;
    return o;
}

std::string case_of(const std::string& path)
{
    return fs::path(path).stem().string();
}

int cmd_check(const Config& c)
{
    const ProblemBundle b = load_problem(c.bundle);
    const RunOverrides o = overrides_of(c);
    std::vector<std::string> names = c.operators;
    for (const auto& n : names) {
        if (b.operators.count(n) == 0) throw UsageError("unknown operator '" + n + "'");
    }
    if (names.empty()) {
        for (const auto& ref : b.sections) {
            if (ref.kind == "operator") names.push_back(ref.name);
        }
    }
    Printer p(c, "check", false);
    for (auto seed : seeds_of(c.seed)) {
        for (const auto& n : names) {
            auto r = run_operator(b, n, seed, o);
            r.case_name = case_of(c.bundle);
            p.print(r);
        }
    }
    return p.exit_code();
}

int cmd_reduce(const Config& c)
{
    const ProblemBundle b = load_problem(c.bundle);
    const RunOverrides o = overrides_of(c);
    if (c.ansatz.empty()) throw UsageError("reduce needs --ansatz");
    if (b.ansatze.count(c.ansatz) == 0) throw UsageError("unknown ansatz '" + c.ansatz + "'");
    std::optional<std::string> candidate;
    if (!c.candidate.empty()) {
        if (b.reduced.count(c.candidate) == 0) throw UsageError("unknown candidate '" + c.candidate + "'");
        candidate = c.candidate;
    }
    Printer p(c, "reduce", false);
    for (auto seed : seeds_of(c.seed)) {
        auto r = run_reduction(b, c.ansatz, candidate, seed, o);
        r.case_name = case_of(c.bundle);
        p.print(r);
    }
    return p.exit_code();
}

int cmd_verify(const Config& c)
{
    const ProblemBundle b = load_problem(c.bundle);
    const RunOverrides o = overrides_of(c);
    const int named = !c.solution.empty() + !c.backlund.empty() + !c.overdetermined.empty();
    if (named != 1) throw UsageError("verify needs exactly one of --solution, --backlund, --overdetermined");
    if (!c.solution.empty() && b.solutions.count(c.solution) == 0) throw UsageError("unknown solution '" + c.solution + "'");
    if (!c.backlund.empty() && b.backlund.count(c.backlund) == 0) throw UsageError("unknown backlund relation '" + c.backlund + "'");
    if (!c.overdetermined.empty() && b.overdetermined.count(c.overdetermined) == 0) {
        throw UsageError("unknown overdetermined system '" + c.overdetermined + "'");
    }
    Printer p(c, "verify", false);
    for (auto seed : seeds_of(c.seed)) {
        CheckResult r = !c.solution.empty()   ? run_solution(b, c.solution, seed, o)
                        : !c.backlund.empty() ? run_backlund(b, c.backlund, seed, o)
                                              : run_overdetermined(b, c.overdetermined, seed, o);
        r.case_name = case_of(c.bundle);
        p.print(r);
    }
    return p.exit_code();
}

int cmd_paper_suite(const Config& c)
{
    std::vector<fs::path> files;
    if (!fs::is_directory(c.cases)) throw UsageError("no case directory " + c.cases);
    for (const auto& entry : fs::directory_iterator(c.cases)) {
        if (entry.path().extension() == ".prob") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw UsageError("no .prob files in " + c.cases);
    std::vector<std::pair<std::string, ProblemBundle>> bundles;
    for (const auto& f : files) {
        try {
            bundles.emplace_back(f.stem().string(), load_problem(f));
        } catch (const Error& e) {
            throw UsageError(f.string() + ": " + e.what());
        }
    }
    const RunOverrides o = overrides_of(c);
    const auto seeds = seeds_of(c.seed);
    Printer p(c, "paper-suite", true);
    for (auto seed : seeds) {
        for (const auto& [name, b] : bundles) {
            for (const auto& r : run_bundle(b, name, seed, o)) p.print(r);
        }
    }
    if (c.format != "json-lines") {
        // Verdict stability across seeds, then the summary matrix.
        std::map<std::string, std::set<std::string>> verdicts;
        std::map<std::string, int> passed;
        for (const auto& r : p.results()) {
            const std::string key = r.case_name + " " + r.kind + " " + r.name;
            verdicts[key].insert(std::string(verdict_name(r.verdict)));
            passed[r.case_name] += r.as_expected() ? 1 : 0;
        }
        std::map<std::string, int> total;
        for (const auto& r : p.results()) ++total[r.case_name];
        std::cout << "\ncase            passed / checks\n";
        for (const auto& [name, n] : total) {
            std::printf("%-15s %4d / %d  %s\n", name.c_str(), passed[name], n, passed[name] == n ? "PASS" : "FAIL");
        }
        for (const auto& [key, vs] : verdicts) {
            if (vs.size() > 1) std::cout << "unstable across seeds: " << key << "\n";
        }
    }
    return p.exit_code();
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Symmetry reduction checks for differential equations"};
    app.require_subcommand(1);
    Config c;

    auto common = [&](CLI::App* s, bool with_bundle) {
        if (with_bundle) s->add_option("bundle", c.bundle, "problem bundle (.prob)")->required();
        s->add_option("--seed", c.seed, "master seed, or a range A..B (default 0, SYMRED_SEED)");
        s->add_option("--tol", c.tol, "tolerance override");
        s->add_option("--mode", c.mode, "classical, conditional or lb");
        s->add_flag("--fd", c.fd, "finite-difference residuals for solutions");
        s->add_option("--format", c.format, "text or json-lines")->check(CLI::IsMember({"text", "json-lines"}));
    };
    auto* check = app.add_subcommand("check", "check operators against their systems");
    common(check, true);
    check->add_option("--operator", c.operators, "operator name (repeatable; default all)");
    auto* reduce = app.add_subcommand("reduce", "verify or derive a reduction");
    common(reduce, true);
    reduce->add_option("--ansatz", c.ansatz, "ansatz name");
    reduce->add_option("--candidate", c.candidate, "candidate reduced system");
    auto* verify = app.add_subcommand("verify", "verify a solution, Backlund relation or overdetermined system");
    common(verify, true);
    verify->add_option("--solution", c.solution);
    verify->add_option("--backlund", c.backlund);
    verify->add_option("--overdetermined", c.overdetermined);
    auto* suite = app.add_subcommand("paper-suite", "run every bundle in the case directory");
    common(suite, false);
    suite->add_option("--cases", c.cases, "case directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return exit_usage;
    }

    try {
        if (*check) return cmd_check(c);
        if (*reduce) return cmd_reduce(c);
        if (*verify) return cmd_verify(c);
        return cmd_paper_suite(c);
    } catch (const UsageError& e) {
        std::cerr << "symred: " << e.what() << "\n";
        return exit_usage;
    } catch (const Error& e) {
        // Malformed bundles: syntax, undeclared symbols, duplicate names, bad sections, unreadable files.
        std::cerr << "symred: " << e.what() << "\n";
        return exit_usage;
    }
}
