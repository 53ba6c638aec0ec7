#pragma once

// Problem bundles: line-oriented files with bracketed sections describing a
// case study (spaces, parameters, equations, operators, ansatze, candidate
// reduced systems, solutions, Backlund relations).  See docs/format.md.

#include "symred/numeric.hpp"
#include "symred/reduction.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace symred {

enum class Expectation { pass, fail };

std::string_view expectation_name(Expectation e);

/// Sampling settings and expected verdict attached to a checkable section.
struct CheckSettings {
    std::map<std::string, Range> ranges;
    std::vector<DomainConstraint> constraints;
    Expectation expect = Expectation::pass;
};

enum class CheckMode { classical, conditional, lie_backlund };

std::string_view mode_name(CheckMode m);
std::optional<CheckMode> mode_from_name(std::string_view s);

struct OperatorEntry {
    std::string space;
    std::string system;
    std::optional<VectorField> point;
    std::optional<CanonicalOperator> canonical;
    CheckMode mode = CheckMode::classical;
    CheckSettings settings;
};

struct AnsatzEntry {
    Ansatz ansatz;
    std::string system;
    std::optional<Expectation> derive; // run derive_reduction in the suite and expect this outcome
    CheckSettings settings;
};

struct ReducedEntry {
    ReducedSystem system;
    std::string ansatz;
    CheckSettings settings;
};

struct SolutionEntry {
    SolutionForm form;
    std::string system;
    SamplePlan plan;
    ParameterBinding binding;
    bool finite_differences = false;
    CheckSettings settings;
};

struct BacklundEntry {
    BacklundRelation relation;
    std::string source;
    std::string target;
    CheckSettings settings;
};

struct OverdeterminedEntry {
    OverdeterminedSystem system;
    CheckSettings settings;
};

struct SectionRef {
    std::string kind;
    std::string name;
};

struct ProblemBundle {
    ParseContext ctx;
    std::map<std::string, JetSpace> spaces;
    std::vector<DomainConstraint> constraints; // apply to every check in the bundle
    std::map<std::string, Range> ranges;
    std::map<std::string, EquationSystem> equations;
    std::map<std::string, OperatorEntry> operators;
    std::map<std::string, AnsatzEntry> ansatze;
    std::map<std::string, ReducedEntry> reduced;
    std::map<std::string, SolutionEntry> solutions;
    std::map<std::string, BacklundEntry> backlund;
    std::map<std::string, OverdeterminedEntry> overdetermined;
    std::vector<SectionRef> sections; // named sections in file order
};

/// Parses a bundle.  Throws SyntaxError, UndeclaredSymbol, DuplicateName or MalformedSection.
ProblemBundle parse_problem(std::string_view text);
ProblemBundle load_problem(const std::filesystem::path& path);

/// Sampling for a check: bundle ranges and constraints, then the section's own.
SamplingSpec sampling_for(const ProblemBundle& b, const CheckSettings& s);

/// Canonical listing of a parsed bundle, one item per line.
std::string describe(const ProblemBundle& b);

} // namespace symred
