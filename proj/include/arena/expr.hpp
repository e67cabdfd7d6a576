#pragma once

#include <gmpxx.h>

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "arena/errors.hpp"

namespace arena::expr {

enum class NodeKind { number, const_pi, const_e, neg, add, sub, mul, div, pow, func };

enum class Func { sqrt, exp, log, sin, cos, tan, abs, factorial, binomial };

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Node {
    NodeKind kind;
    mpq_class value;  // number nodes only, always canonicalized
    Func func = Func::sqrt;
    std::vector<NodePtr> args;
};

NodePtr make_number(const mpq_class& q);

// Parses a closed scalar expression: plain infix plus a LaTeX subset
// (\frac, \sqrt, \sqrt[n], \binom, \pi, \cdot, braces, \left/\right).
// Surrounding $, whitespace, and a trailing period are stripped. An
// exponent without braces binds to the next single token. Free variables
// are a parse error.
NodePtr parse_expr(const std::string& text);

// Infix rendering; parse(print(ast)) is equivalent to ast.
std::string print_expr(const NodePtr& ast);

struct CanonicalForm {
    std::optional<mpq_class> exact_value;  // present when rational-closed
    std::string numeric_value;             // >= 50 significant digits (midpoint)
    // interval bounds from directed-rounding evaluation, as decimal strings
    std::string numeric_lower;
    std::string numeric_upper;
    NodePtr normalized_tree;               // constant-folded, commutative-sorted
};

// Folds rational-closed subtrees exactly, sorts commutative operands, and
// evaluates with 256-bit interval arithmetic. Domain problems (1/0, log of
// a nonpositive exact value, factorial of a non-integer, sqrt of a
// negative) raise EvalError.
CanonicalForm canonicalize(const NodePtr& ast);

// True iff both sides are exactly equal rationals, or (when either side is
// not rational-closed) the high-precision evaluations agree within relative
// tolerance 1e-30 (absolute 1e-40 near zero). Evaluation failure on either
// side propagates as EvalError, distinct from false.
bool equivalent(const NodePtr& a, const NodePtr& b);
bool equivalent(const std::string& a, const std::string& b);

struct JudgeResult {
    int outcome = 0;
    bool parse_failure = false;  // answer did not parse/evaluate
};

// y = 1 iff the answer parses and is equivalent to the gold. An answer that
// fails to parse or evaluate scores 0 with the parse-failure flag set. An
// unparseable gold is a problem-level EvalError, never silently scored.
JudgeResult judge(const std::string& answer, const std::string& gold);

}  // namespace arena::expr
