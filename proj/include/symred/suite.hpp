#pragma once

// Runs the checks named in a problem bundle and collects uniform results.

#include "symred/problem.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace symred {

struct RunOverrides {
    std::optional<CheckMode> mode;
    std::optional<double> tolerance;
    bool finite_differences = false;
};

struct CheckResult {
    std::string case_name;
    std::string kind; // classical, conditional, lb, reduction, derivation, solution, backlund, overdetermined
    std::string name;
    Verdict verdict = Verdict::inconclusive;
    Expectation expected = Expectation::pass;
    double residual_max = 0.0;
    std::uint64_t seed = 0;
    std::vector<std::pair<std::string, double>> tolerances;
    std::string provenance;
    Point witness;
    std::string failing;
    std::string note;
    std::vector<std::string> assumptions;
    std::string derived; // derived reduced system, one equation per line

    /// The verdict is the expected one; inconclusive never matches.
    bool as_expected() const;
};

CheckResult run_operator(const ProblemBundle& b, const std::string& name, std::uint64_t seed,
                         const RunOverrides& o = {});
/// With `candidate` the candidate is verified, otherwise the reduction is derived.
CheckResult run_reduction(const ProblemBundle& b, const std::string& ansatz, const std::optional<std::string>& candidate,
                          std::uint64_t seed, const RunOverrides& o = {});
CheckResult run_solution(const ProblemBundle& b, const std::string& name, std::uint64_t seed,
                         const RunOverrides& o = {});
CheckResult run_backlund(const ProblemBundle& b, const std::string& name, std::uint64_t seed,
                         const RunOverrides& o = {});
CheckResult run_overdetermined(const ProblemBundle& b, const std::string& name, std::uint64_t seed,
                               const RunOverrides& o = {});

/// Every checkable section in file order; ansatze run derive_reduction when they carry `derive`.
std::vector<CheckResult> run_bundle(const ProblemBundle& b, const std::string& case_name, std::uint64_t seed,
                                    const RunOverrides& o = {});

/// The reduced system in parser syntax, one `lead = rhs` per line.
std::string format_system(const EquationSystem& sys);

} // namespace symred
