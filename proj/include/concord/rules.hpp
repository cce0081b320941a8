// rules.hpp - the consistency rule language: parsing, printing, evaluation.
//
// Grammar (conjunction of clauses):
//   rule    := clause ("and" clause)*
//   clause  := path cmp operand
//            | ("forall" | "exists") ident "in" path ":" clause
//            | "unique" path "by" relpath
//            | "count" path "<=" integer
//   cmp     := "=" | "!=" | "<=" | ">="
//   operand := path | "null" | "true" | "false" | integer | string
//   path    := ("self" | variable) ("." ident)*
//   relpath := ident ("." ident)*
#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "concord/store.hpp"

namespace concord::rules {

class ParseError : public std::runtime_error {
public:
    ParseError(int line, int col, const std::string& msg)
        : std::runtime_error(std::to_string(line) + ":" + std::to_string(col) + ": " + msg),
          line(line),
          col(col) {}
    int line;
    int col;
};

class EvalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class CmpOp : std::uint8_t { Eq, Ne, Le, Ge };

enum class PathRoot : std::uint8_t {
    Self,      // the artifact under evaluation
    Var,       // a quantifier-bound element
    Relative,  // applied to each collection element ("by" keys)
};

struct PathExpr {
    PathRoot root = PathRoot::Self;
    std::string var;  // set when root == Var
    std::vector<std::string> segments;

    bool operator==(const PathExpr&) const = default;
};

struct Literal {
    enum class Kind : std::uint8_t { Null, Boolean, Integer, String };
    Kind kind = Kind::Null;
    bool boolean = false;
    std::int64_t integer = 0;
    std::string text;

    bool operator==(const Literal&) const = default;
};

struct Clause;

struct Comparison {
    PathExpr path;
    CmpOp op = CmpOp::Eq;
    std::variant<PathExpr, Literal> operand;
};

struct Quantified {
    bool universal = true;  // forall; false = exists
    std::string var;
    PathExpr collection;
    std::unique_ptr<Clause> body;
};

struct Unique {
    PathExpr collection;
    PathExpr key;  // Relative root, navigated from each element
};

struct CountAtMost {
    PathExpr collection;
    std::int64_t bound = 0;
};

struct Clause {
    std::variant<Comparison, Quantified, Unique, CountAtMost> node;
};

/// A parsed rule: the conjunction of its clauses. Move-only.
struct RuleAst {
    std::vector<Clause> clauses;
};

RuleAst parse_rule(const std::string& text);

/// Canonical text form; parse_rule(to_text(r)) is structurally equal to r.
std::string to_text(const RuleAst& rule);

bool ast_equal(const RuleAst& a, const RuleAst& b);

struct Verdict {
    bool holds = true;
    int failedClause = -1;  // index of the first clause that does not hold
    bool dangling = false;  // a comparison met an empty side it did not expect

    bool operator==(const Verdict&) const = default;
};

/// Every coordinate the evaluation read, including reads that came back
/// absent. Any change to one of these may alter the verdict.
using Scope = std::set<Coord>;

struct EvalResult {
    Verdict verdict;
    Scope scope;
};

/// How the evaluator sees properties; the caller decides where values come
/// from (which work area, which search order) and what to count.
using PropertyReader =
    std::function<std::optional<Value>(const ArtifactId&, const std::string&)>;

/// Evaluates the rule for one subject. Reads go through `read`; every clause
/// is evaluated even after a failure so the scope stays complete. Throws
/// EvalError for type errors (e.g. ordering non-integers).
EvalResult evaluate(const RuleAst& rule, const ArtifactId& self, const PropertyReader& read);

}  // namespace concord::rules
