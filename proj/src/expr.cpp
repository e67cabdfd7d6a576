#include "arena/expr.hpp"

#include <mpfr.h>

#include <algorithm>
#include <cctype>
#include <cstring>
#include <map>
#include <sstream>

namespace arena::expr {

namespace {

constexpr mpfr_prec_t kPrec = 256;
constexpr unsigned long kMaxFactorialArg = 100000;
constexpr long kMaxExactExponent = 1 << 20;

// ---------------------------------------------------------------------------
// High-precision interval arithmetic with directed rounding.

struct BF {
    mpfr_t v;
    BF() { mpfr_init2(v, kPrec); mpfr_set_nan(v); }
    BF(const BF& o) { mpfr_init2(v, kPrec); mpfr_set(v, o.v, MPFR_RNDN); }
    BF(BF&& o) noexcept { mpfr_init2(v, kPrec); mpfr_swap(v, o.v); }
    BF& operator=(const BF& o) {
        if (this != &o) mpfr_set(v, o.v, MPFR_RNDN);
        return *this;
    }
    BF& operator=(BF&& o) noexcept {
        mpfr_swap(v, o.v);
        return *this;
    }
    ~BF() { mpfr_clear(v); }
};

struct IV {
    BF lo, hi;
};

IV iv_from_q(const mpq_class& q) {
    IV r;
    mpfr_set_q(r.lo.v, q.get_mpq_t(), MPFR_RNDD);
    mpfr_set_q(r.hi.v, q.get_mpq_t(), MPFR_RNDU);
    return r;
}

IV iv_pi() {
    IV r;
    mpfr_const_pi(r.lo.v, MPFR_RNDD);
    mpfr_const_pi(r.hi.v, MPFR_RNDU);
    return r;
}

IV iv_e() {
    IV r;
    BF one;
    mpfr_set_ui(one.v, 1, MPFR_RNDN);
    mpfr_exp(r.lo.v, one.v, MPFR_RNDD);
    mpfr_exp(r.hi.v, one.v, MPFR_RNDU);
    return r;
}

IV iv_neg(const IV& a) {
    IV r;
    mpfr_neg(r.lo.v, a.hi.v, MPFR_RNDD);
    mpfr_neg(r.hi.v, a.lo.v, MPFR_RNDU);
    return r;
}

IV iv_add(const IV& a, const IV& b) {
    IV r;
    mpfr_add(r.lo.v, a.lo.v, b.lo.v, MPFR_RNDD);
    mpfr_add(r.hi.v, a.hi.v, b.hi.v, MPFR_RNDU);
    return r;
}

IV iv_sub(const IV& a, const IV& b) {
    IV r;
    mpfr_sub(r.lo.v, a.lo.v, b.hi.v, MPFR_RNDD);
    mpfr_sub(r.hi.v, a.hi.v, b.lo.v, MPFR_RNDU);
    return r;
}

template <typename Op>
IV iv_from_candidates(Op op, const IV& a, const IV& b) {
    // min over RNDD candidates, max over RNDU candidates
    IV r;
    BF t;
    bool first = true;
    const mpfr_srcptr as[2] = {a.lo.v, a.hi.v};
    const mpfr_srcptr bs[2] = {b.lo.v, b.hi.v};
    for (auto x : as)
        for (auto y : bs) {
            op(t.v, x, y, MPFR_RNDD);
            if (first || mpfr_cmp(t.v, r.lo.v) < 0) mpfr_set(r.lo.v, t.v, MPFR_RNDD);
            op(t.v, x, y, MPFR_RNDU);
            if (first || mpfr_cmp(t.v, r.hi.v) > 0) mpfr_set(r.hi.v, t.v, MPFR_RNDU);
            first = false;
        }
    return r;
}

IV iv_mul(const IV& a, const IV& b) {
    return iv_from_candidates([](mpfr_ptr o, mpfr_srcptr x, mpfr_srcptr y, mpfr_rnd_t r) {
        mpfr_mul(o, x, y, r);
    }, a, b);
}

bool iv_contains_zero(const IV& a) {
    return mpfr_sgn(a.lo.v) <= 0 && mpfr_sgn(a.hi.v) >= 0;
}

IV iv_div(const IV& a, const IV& b) {
    if (iv_contains_zero(b)) throw EvalError("division by zero");
    return iv_from_candidates([](mpfr_ptr o, mpfr_srcptr x, mpfr_srcptr y, mpfr_rnd_t r) {
        mpfr_div(o, x, y, r);
    }, a, b);
}

IV iv_sqrt(const IV& a) {
    if (mpfr_sgn(a.hi.v) < 0) throw EvalError("sqrt of negative value");
    IV r;
    if (mpfr_sgn(a.lo.v) < 0)
        mpfr_set_zero(r.lo.v, 1);
    else
        mpfr_sqrt(r.lo.v, a.lo.v, MPFR_RNDD);
    mpfr_sqrt(r.hi.v, a.hi.v, MPFR_RNDU);
    return r;
}

IV iv_exp(const IV& a) {
    IV r;
    mpfr_exp(r.lo.v, a.lo.v, MPFR_RNDD);
    mpfr_exp(r.hi.v, a.hi.v, MPFR_RNDU);
    return r;
}

IV iv_log(const IV& a) {
    if (mpfr_sgn(a.lo.v) <= 0) throw EvalError("log of nonpositive value");
    IV r;
    mpfr_log(r.lo.v, a.lo.v, MPFR_RNDD);
    mpfr_log(r.hi.v, a.hi.v, MPFR_RNDU);
    return r;
}

IV iv_abs(const IV& a) {
    IV r;
    if (mpfr_sgn(a.lo.v) >= 0) return a;
    if (mpfr_sgn(a.hi.v) <= 0) return iv_neg(a);
    mpfr_set_zero(r.lo.v, 1);
    BF n;
    mpfr_neg(n.v, a.lo.v, MPFR_RNDU);
    if (mpfr_cmp(n.v, a.hi.v) > 0)
        mpfr_set(r.hi.v, n.v, MPFR_RNDU);
    else
        mpfr_set(r.hi.v, a.hi.v, MPFR_RNDU);
    return r;
}

// sin/cos/tan over near-point intervals: endpoint evaluation widened by the
// input width. Intervals here come from point expressions, so widths are a
// few ulps.
template <typename F>
IV iv_trig(const IV& a, F f, bool clamp_unit) {
    IV r;
    BF t;
    bool first = true;
    const mpfr_srcptr xs[2] = {a.lo.v, a.hi.v};
    for (auto x : xs) {
        f(t.v, x, MPFR_RNDD);
        if (first || mpfr_cmp(t.v, r.lo.v) < 0) mpfr_set(r.lo.v, t.v, MPFR_RNDD);
        f(t.v, x, MPFR_RNDU);
        if (first || mpfr_cmp(t.v, r.hi.v) > 0) mpfr_set(r.hi.v, t.v, MPFR_RNDU);
        first = false;
    }
    BF w;
    mpfr_sub(w.v, a.hi.v, a.lo.v, MPFR_RNDU);
    mpfr_sub(r.lo.v, r.lo.v, w.v, MPFR_RNDD);
    mpfr_add(r.hi.v, r.hi.v, w.v, MPFR_RNDU);
    if (clamp_unit) {
        BF one;
        mpfr_set_si(one.v, -1, MPFR_RNDN);
        if (mpfr_cmp(r.lo.v, one.v) < 0) mpfr_set(r.lo.v, one.v, MPFR_RNDD);
        mpfr_set_si(one.v, 1, MPFR_RNDN);
        if (mpfr_cmp(r.hi.v, one.v) > 0) mpfr_set(r.hi.v, one.v, MPFR_RNDU);
    }
    return r;
}

IV iv_ipow(const IV& a, long n) {
    if (n == 0) return iv_from_q(mpq_class(1));
    if (n < 0 && iv_contains_zero(a)) throw EvalError("division by zero");
    IV r;
    BF t;
    bool first = true;
    const mpfr_srcptr xs[2] = {a.lo.v, a.hi.v};
    for (auto x : xs) {
        mpfr_pow_si(t.v, x, n, MPFR_RNDD);
        if (first || mpfr_cmp(t.v, r.lo.v) < 0) mpfr_set(r.lo.v, t.v, MPFR_RNDD);
        mpfr_pow_si(t.v, x, n, MPFR_RNDU);
        if (first || mpfr_cmp(t.v, r.hi.v) > 0) mpfr_set(r.hi.v, t.v, MPFR_RNDU);
        first = false;
    }
    if (n > 0 && n % 2 == 0 && iv_contains_zero(a)) mpfr_set_zero(r.lo.v, 1);
    return r;
}

BF iv_mid(const IV& a) {
    BF m;
    mpfr_add(m.v, a.lo.v, a.hi.v, MPFR_RNDN);
    mpfr_div_ui(m.v, m.v, 2, MPFR_RNDN);
    return m;
}

std::string bf_to_string(const BF& x) {
    char* s = nullptr;
    mpfr_asprintf(&s, "%.60Rg", x.v);
    std::string out(s);
    mpfr_free_str(s);
    return out;
}

// ---------------------------------------------------------------------------
// Exact rational helpers.

bool q_is_integer(const mpq_class& q) { return q.get_den() == 1; }

std::optional<mpq_class> pow_exact(const mpq_class& base, const mpq_class& expo) {
    if (q_is_integer(expo)) {
        if (!expo.get_num().fits_slong_p()) throw EvalError("exponent too large");
        long n = expo.get_num().get_si();
        if (std::labs(n) > kMaxExactExponent) {
            if (base > 0) return std::nullopt;  // numeric path handles it
            throw EvalError("exponent too large");
        }
        if (n == 0) return mpq_class(1);
        if (base == 0) {
            if (n < 0) throw EvalError("division by zero");
            return mpq_class(0);
        }
        mpz_class num, den;
        mpz_pow_ui(num.get_mpz_t(), base.get_num().get_mpz_t(), std::labs(n));
        mpz_pow_ui(den.get_mpz_t(), base.get_den().get_mpz_t(), std::labs(n));
        mpq_class r = n > 0 ? mpq_class(num, den) : mpq_class(den, num);
        r.canonicalize();
        return r;
    }
    // rational exponent p/q with q > 1: exact iff the q-th root is exact
    const mpz_class& q = expo.get_den();
    if (!q.fits_ulong_p()) throw EvalError("exponent too large");
    unsigned long root = q.get_ui();
    bool neg_base = base < 0;
    if (neg_base && root % 2 == 0) throw EvalError("even root of negative value");
    if (base == 0) {
        if (expo < 0) throw EvalError("division by zero");
        return mpq_class(0);
    }
    mpz_class an = abs(base.get_num()), ad = base.get_den();
    mpz_class rn, rd;
    bool exact_n = mpz_root(rn.get_mpz_t(), an.get_mpz_t(), root) != 0;
    bool exact_d = mpz_root(rd.get_mpz_t(), ad.get_mpz_t(), root) != 0;
    if (!exact_n || !exact_d) return std::nullopt;
    mpq_class rooted(rn, rd);
    rooted.canonicalize();
    if (neg_base) rooted = -rooted;  // odd root
    return pow_exact(rooted, mpq_class(expo.get_num()));
}

mpq_class binomial_exact(const mpq_class& nq, const mpq_class& kq) {
    if (!q_is_integer(nq) || !q_is_integer(kq))
        throw EvalError("binomial of non-integer");
    if (kq < 0) throw EvalError("binomial with negative lower index");
    if (!kq.get_num().fits_ulong_p() || kq.get_num().get_ui() > kMaxFactorialArg)
        throw EvalError("binomial index too large");
    unsigned long k = kq.get_num().get_ui();
    // generalized binomial over integer n: n(n-1)...(n-k+1)/k!
    mpz_class num = 1;
    mpz_class n = nq.get_num();
    for (unsigned long i = 0; i < k; ++i) num *= (n - static_cast<long>(i));
    mpz_class den;
    mpz_fac_ui(den.get_mpz_t(), k);
    mpq_class r(num, den);
    r.canonicalize();
    return r;
}

// ---------------------------------------------------------------------------
// Evaluation: exact value where rational-closed, interval always.

struct Eval {
    std::optional<mpq_class> exact;
    IV iv;
    NodePtr norm;
};

const char* func_name(Func f) {
    switch (f) {
        case Func::sqrt: return "sqrt";
        case Func::exp: return "exp";
        case Func::log: return "log";
        case Func::sin: return "sin";
        case Func::cos: return "cos";
        case Func::tan: return "tan";
        case Func::abs: return "abs";
        case Func::factorial: return "factorial";
        case Func::binomial: return "binomial";
    }
    return "?";
}

NodePtr make_node(NodeKind k, std::vector<NodePtr> args) {
    auto n = std::make_shared<Node>();
    n->kind = k;
    n->args = std::move(args);
    return n;
}

NodePtr make_func(Func f, std::vector<NodePtr> args) {
    auto n = std::make_shared<Node>();
    n->kind = NodeKind::func;
    n->func = f;
    n->args = std::move(args);
    return n;
}

void flatten(NodeKind k, const NodePtr& n, std::vector<NodePtr>& out) {
    if (n->kind == k) {
        flatten(k, n->args[0], out);
        flatten(k, n->args[1], out);
    } else {
        out.push_back(n);
    }
}

NodePtr normalize_commutative(NodeKind k, const NodePtr& a, const NodePtr& b) {
    std::vector<NodePtr> ops;
    flatten(k, a, ops);
    flatten(k, b, ops);
    std::stable_sort(ops.begin(), ops.end(), [](const NodePtr& x, const NodePtr& y) {
        return print_expr(x) < print_expr(y);
    });
    NodePtr acc = ops[0];
    for (std::size_t i = 1; i < ops.size(); ++i) acc = make_node(k, {acc, ops[i]});
    return acc;
}

Eval evaluate(const NodePtr& n);

Eval eval_pow(const NodePtr& n) {
    Eval base = evaluate(n->args[0]);
    Eval expo = evaluate(n->args[1]);
    Eval r;
    if (base.exact && expo.exact) {
        r.exact = pow_exact(*base.exact, *expo.exact);
        if (r.exact) {
            r.iv = iv_from_q(*r.exact);
            r.norm = make_number(*r.exact);
            return r;
        }
    }
    // numeric path
    if (expo.exact && q_is_integer(*expo.exact) && expo.exact->get_num().fits_slong_p()) {
        r.iv = iv_ipow(base.iv, expo.exact->get_num().get_si());
    } else if (mpfr_sgn(base.iv.lo.v) > 0) {
        r.iv = iv_exp(iv_mul(expo.iv, iv_log(base.iv)));
    } else if (expo.exact && !q_is_integer(*expo.exact) && mpfr_sgn(base.iv.hi.v) < 0) {
        // negative base, odd-denominator rational exponent: real root
        if (expo.exact->get_den() % 2 == 0) throw EvalError("even root of negative value");
        IV mag = iv_exp(iv_mul(expo.iv, iv_log(iv_neg(base.iv))));
        bool odd_num = mpz_odd_p(expo.exact->get_num().get_mpz_t());
        r.iv = odd_num ? iv_neg(mag) : mag;
    } else {
        throw EvalError("power with non-positive base and non-integer exponent");
    }
    r.norm = make_node(NodeKind::pow, {base.norm, expo.norm});
    return r;
}

Eval eval_func(const NodePtr& n) {
    Func f = n->func;
    Eval a = evaluate(n->args[0]);
    Eval r;

    if (f == Func::factorial) {
        if (!a.exact || !q_is_integer(*a.exact)) throw EvalError("factorial of non-integer");
        if (*a.exact < 0) throw EvalError("factorial of negative value");
        if (!a.exact->get_num().fits_ulong_p() || a.exact->get_num().get_ui() > kMaxFactorialArg)
            throw EvalError("factorial argument too large");
        mpz_class v;
        mpz_fac_ui(v.get_mpz_t(), a.exact->get_num().get_ui());
        r.exact = mpq_class(v);
        r.iv = iv_from_q(*r.exact);
        r.norm = make_number(*r.exact);
        return r;
    }
    if (f == Func::binomial) {
        Eval b = evaluate(n->args[1]);
        if (!a.exact || !b.exact) throw EvalError("binomial of non-integer");
        r.exact = binomial_exact(*a.exact, *b.exact);
        r.iv = iv_from_q(*r.exact);
        r.norm = make_number(*r.exact);
        return r;
    }

    // exact shortcuts
    if (a.exact) {
        switch (f) {
            case Func::sqrt: r.exact = pow_exact(*a.exact, mpq_class(1, 2)); break;
            case Func::abs: r.exact = abs(*a.exact); break;
            case Func::exp:
                if (*a.exact == 0) r.exact = mpq_class(1);
                break;
            case Func::log:
                if (*a.exact <= 0) throw EvalError("log of nonpositive value");
                if (*a.exact == 1) r.exact = mpq_class(0);
                break;
            case Func::sin:
            case Func::tan:
                if (*a.exact == 0) r.exact = mpq_class(0);
                break;
            case Func::cos:
                if (*a.exact == 0) r.exact = mpq_class(1);
                break;
            default: break;
        }
        if (r.exact) {
            r.iv = iv_from_q(*r.exact);
            r.norm = make_number(*r.exact);
            return r;
        }
    }

    switch (f) {
        case Func::sqrt: r.iv = iv_sqrt(a.iv); break;
        case Func::exp: r.iv = iv_exp(a.iv); break;
        case Func::log: r.iv = iv_log(a.iv); break;
        case Func::abs: r.iv = iv_abs(a.iv); break;
        case Func::sin:
            r.iv = iv_trig(a.iv, [](mpfr_ptr o, mpfr_srcptr x, mpfr_rnd_t m) { mpfr_sin(o, x, m); },
                           true);
            break;
        case Func::cos:
            r.iv = iv_trig(a.iv, [](mpfr_ptr o, mpfr_srcptr x, mpfr_rnd_t m) { mpfr_cos(o, x, m); },
                           true);
            break;
        case Func::tan:
            r.iv = iv_trig(a.iv, [](mpfr_ptr o, mpfr_srcptr x, mpfr_rnd_t m) { mpfr_tan(o, x, m); },
                           false);
            break;
        default: throw EvalError("unreachable");
    }
    r.norm = make_func(f, {a.norm});
    return r;
}

Eval evaluate(const NodePtr& n) {
    Eval r;
    switch (n->kind) {
        case NodeKind::number:
            r.exact = n->value;
            r.iv = iv_from_q(n->value);
            r.norm = n;
            return r;
        case NodeKind::const_pi:
            r.iv = iv_pi();
            r.norm = n;
            return r;
        case NodeKind::const_e:
            r.iv = iv_e();
            r.norm = n;
            return r;
        case NodeKind::neg: {
            Eval a = evaluate(n->args[0]);
            if (a.exact) {
                r.exact = -*a.exact;
                r.iv = iv_from_q(*r.exact);
                r.norm = make_number(*r.exact);
            } else {
                r.iv = iv_neg(a.iv);
                r.norm = make_node(NodeKind::neg, {a.norm});
            }
            return r;
        }
        case NodeKind::add:
        case NodeKind::sub:
        case NodeKind::mul:
        case NodeKind::div: {
            Eval a = evaluate(n->args[0]);
            Eval b = evaluate(n->args[1]);
            if (n->kind == NodeKind::div) {
                if (b.exact && *b.exact == 0) throw EvalError("division by zero");
            }
            if (a.exact && b.exact) {
                switch (n->kind) {
                    case NodeKind::add: r.exact = *a.exact + *b.exact; break;
                    case NodeKind::sub: r.exact = *a.exact - *b.exact; break;
                    case NodeKind::mul: r.exact = *a.exact * *b.exact; break;
                    default: r.exact = *a.exact / *b.exact; break;
                }
                r.iv = iv_from_q(*r.exact);
                r.norm = make_number(*r.exact);
                return r;
            }
            switch (n->kind) {
                case NodeKind::add: r.iv = iv_add(a.iv, b.iv); break;
                case NodeKind::sub: r.iv = iv_sub(a.iv, b.iv); break;
                case NodeKind::mul: r.iv = iv_mul(a.iv, b.iv); break;
                default: r.iv = iv_div(a.iv, b.iv); break;
            }
            if (n->kind == NodeKind::add || n->kind == NodeKind::mul)
                r.norm = normalize_commutative(n->kind, a.norm, b.norm);
            else
                r.norm = make_node(n->kind, {a.norm, b.norm});
            return r;
        }
        case NodeKind::pow: return eval_pow(n);
        case NodeKind::func: return eval_func(n);
    }
    throw EvalError("unreachable node kind");
}

// ---------------------------------------------------------------------------
// Lexer and recursive-descent parser.

struct Token {
    enum Type { num, name, cmd, sym, end } type;
    std::string text;
    std::size_t pos;
};

void replace_all(std::string& s, const std::string& from, const std::string& to) {
    std::size_t p = 0;
    while ((p = s.find(from, p)) != std::string::npos) {
        s.replace(p, from.size(), to);
        p += to.size();
    }
}

std::string preprocess(const std::string& input) {
    std::string s = input;
    replace_all(s, "\xCF\x80", " pi ");       // π
    replace_all(s, "\xC2\xB7", "*");          // ·
    replace_all(s, "\xC3\x97", "*");          // ×
    replace_all(s, "\xE2\x88\x92", "-");      // unicode minus
    replace_all(s, "\xE2\x88\x9A", "\\sqrt"); // √
    auto issp = [](char c) { return std::isspace(static_cast<unsigned char>(c)); };
    std::size_t b = 0, e = s.size();
    while (b < e && (issp(s[b]) || s[b] == '$')) ++b;
    while (e > b && (issp(s[e - 1]) || s[e - 1] == '$')) --e;
    if (e > b && s[e - 1] == '.') --e;  // trailing period
    while (e > b && issp(s[e - 1])) --e;
    return s.substr(b, e - b);
}

std::vector<Token> lex(const std::string& s) {
    std::vector<Token> toks;
    std::size_t i = 0;
    auto isletter = [](char c) { return std::isalpha(static_cast<unsigned char>(c)); };
    auto isdig = [](char c) { return std::isdigit(static_cast<unsigned char>(c)); };
    while (i < s.size()) {
        char c = s[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
            continue;
        }
        std::size_t start = i;
        if (isdig(c) || (c == '.' && i + 1 < s.size() && isdig(s[i + 1]))) {
            bool dot = false;
            while (i < s.size() && (isdig(s[i]) || (s[i] == '.' && !dot))) {
                // a '.' must be followed by a digit to belong to the number
                if (s[i] == '.') {
                    if (i + 1 >= s.size() || !isdig(s[i + 1])) break;
                    dot = true;
                }
                ++i;
            }
            toks.push_back({Token::num, s.substr(start, i - start), start});
            continue;
        }
        if (isletter(c)) {
            while (i < s.size() && isletter(s[i])) ++i;
            toks.push_back({Token::name, s.substr(start, i - start), start});
            continue;
        }
        if (c == '\\') {
            ++i;
            if (i < s.size() && isletter(s[i])) {
                while (i < s.size() && isletter(s[i])) ++i;
                std::string word = s.substr(start + 1, i - start - 1);
                if (word == "pi") {
                    toks.push_back({Token::name, "pi", start});
                } else if (word == "cdot" || word == "times") {
                    toks.push_back({Token::sym, "*", start});
                } else if (word == "left" || word == "right" || word == "quad" ||
                           word == "qquad" || word == "text" || word == "mathrm") {
                    // delimiters/spacing stripped; \text{..} content would be a
                    // free variable downstream, which is the right failure
                } else if (word == "frac" || word == "dfrac" || word == "tfrac") {
                    toks.push_back({Token::cmd, "frac", start});
                } else if (word == "sqrt" || word == "binom") {
                    toks.push_back({Token::cmd, word, start});
                } else {
                    throw ParseError("unknown command \\" + word, start);
                }
                continue;
            }
            if (i < s.size() && std::strchr(" ,;:!", s[i])) {
                ++i;  // LaTeX spacing command
                continue;
            }
            throw ParseError("stray backslash", start);
        }
        if (std::strchr("+-*/^(){}[],!", c)) {
            toks.push_back({Token::sym, std::string(1, c), start});
            ++i;
            continue;
        }
        throw ParseError(std::string("unexpected character '") + c + "'", start);
    }
    toks.push_back({Token::end, "", s.size()});
    return toks;
}

mpq_class number_from_text(const std::string& t, std::size_t pos) {
    auto dot = t.find('.');
    if (dot == std::string::npos) return mpq_class(mpz_class(t));
    std::string intpart = t.substr(0, dot);
    std::string frac = t.substr(dot + 1);
    if (intpart.empty()) intpart = "0";
    if (frac.empty()) return mpq_class(mpz_class(intpart));
    mpz_class scale;
    mpz_ui_pow_ui(scale.get_mpz_t(), 10, frac.size());
    mpz_class num = mpz_class(intpart) * scale + mpz_class(frac);
    mpq_class q(num, scale);
    q.canonicalize();
    if (q.get_num() < 0) throw ParseError("bad number", pos);
    return q;
}

class Parser {
public:
    explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

    NodePtr parse() {
        NodePtr e = expression();
        if (cur().type != Token::end) throw ParseError("trailing input", cur().pos);
        return e;
    }

private:
    std::vector<Token> toks_;
    std::size_t i_ = 0;

    const Token& cur() const { return toks_[i_]; }
    const Token& advance() { return toks_[i_++]; }
    bool is_sym(const char* s) const { return cur().type == Token::sym && cur().text == s; }
    void expect_sym(const char* s) {
        if (!is_sym(s)) throw ParseError(std::string("expected '") + s + "'", cur().pos);
        ++i_;
    }

    bool starts_factor() const {
        const Token& t = cur();
        if (t.type == Token::num || t.type == Token::name || t.type == Token::cmd) return true;
        return t.type == Token::sym && (t.text == "(" || t.text == "{" || t.text == "[");
    }

    NodePtr expression() {
        NodePtr e = term();
        while (is_sym("+") || is_sym("-")) {
            NodeKind k = cur().text == "+" ? NodeKind::add : NodeKind::sub;
            ++i_;
            e = make_node(k, {e, term()});
        }
        return e;
    }

    NodePtr term() {
        NodePtr e = factor();
        for (;;) {
            if (is_sym("*") || is_sym("/")) {
                NodeKind k = cur().text == "*" ? NodeKind::mul : NodeKind::div;
                ++i_;
                e = make_node(k, {e, factor()});
            } else if (starts_factor()) {
                e = make_node(NodeKind::mul, {e, factor()});  // implicit multiplication
            } else {
                break;
            }
        }
        return e;
    }

    NodePtr factor() {
        if (is_sym("-")) {
            ++i_;
            return make_node(NodeKind::neg, {factor()});
        }
        if (is_sym("+")) {
            ++i_;
            return factor();
        }
        return postfix();
    }

    NodePtr postfix() {
        NodePtr e = primary();
        for (;;) {
            if (is_sym("!")) {
                ++i_;
                e = make_func(Func::factorial, {e});
            } else if (is_sym("^")) {
                ++i_;
                e = make_node(NodeKind::pow, {e, exponent()});
            } else {
                break;
            }
        }
        return e;
    }

    // With braces: a full expression. Without: one signed atom.
    NodePtr exponent() {
        if (is_sym("{")) {
            ++i_;
            NodePtr e = expression();
            expect_sym("}");
            return e;
        }
        bool neg = false;
        while (is_sym("-") || is_sym("+")) {
            if (cur().text == "-") neg = !neg;
            ++i_;
        }
        NodePtr atom;
        if (cur().type == Token::num) {
            atom = make_number(number_from_text(cur().text, cur().pos));
            ++i_;
        } else if (cur().type == Token::name && cur().text == "pi") {
            atom = make_node(NodeKind::const_pi, {});
            ++i_;
        } else if (cur().type == Token::name && cur().text == "e") {
            atom = make_node(NodeKind::const_e, {});
            ++i_;
        } else if (is_sym("(")) {
            ++i_;
            atom = expression();
            expect_sym(")");
        } else {
            throw ParseError("expected exponent", cur().pos);
        }
        return neg ? make_node(NodeKind::neg, {atom}) : atom;
    }

    NodePtr group() {
        if (is_sym("{")) {
            ++i_;
            NodePtr e = expression();
            expect_sym("}");
            return e;
        }
        if (is_sym("(")) {
            ++i_;
            NodePtr e = expression();
            expect_sym(")");
            return e;
        }
        throw ParseError("expected braced argument", cur().pos);
    }

    NodePtr func_args(Func f) {
        // name(expr) or name{expr}; binomial takes two arguments
        if (f == Func::binomial) {
            if (is_sym("{")) {
                NodePtr a = group();
                NodePtr b = group();
                return make_func(f, {a, b});
            }
            expect_sym("(");
            NodePtr a = expression();
            expect_sym(",");
            NodePtr b = expression();
            expect_sym(")");
            return make_func(f, {a, b});
        }
        return make_func(f, {group()});
    }

    NodePtr primary() {
        const Token& t = cur();
        if (t.type == Token::num) {
            ++i_;
            return make_number(number_from_text(t.text, t.pos));
        }
        if (t.type == Token::name) {
            static const std::map<std::string, Func> funcs = {
                {"sqrt", Func::sqrt},     {"exp", Func::exp}, {"log", Func::log},
                {"ln", Func::log},        {"sin", Func::sin}, {"cos", Func::cos},
                {"tan", Func::tan},       {"abs", Func::abs}, {"factorial", Func::factorial},
                {"binomial", Func::binomial}, {"binom", Func::binomial}};
            ++i_;
            if (t.text == "pi") return make_node(NodeKind::const_pi, {});
            if (t.text == "e") return make_node(NodeKind::const_e, {});
            auto it = funcs.find(t.text);
            if (it != funcs.end()) return func_args(it->second);
            throw ParseError("free variable '" + t.text + "'", t.pos);
        }
        if (t.type == Token::cmd) {
            ++i_;
            if (t.text == "frac") {
                NodePtr a = group();
                NodePtr b = group();
                return make_node(NodeKind::div, {a, b});
            }
            if (t.text == "sqrt") {
                if (is_sym("[")) {
                    ++i_;
                    NodePtr idx = expression();
                    expect_sym("]");
                    NodePtr arg = group();
                    // n-th root: arg^(1/n)
                    return make_node(NodeKind::pow,
                                     {arg, make_node(NodeKind::div, {make_number(1), idx})});
                }
                return make_func(Func::sqrt, {group()});
            }
            if (t.text == "binom") {
                NodePtr a = group();
                NodePtr b = group();
                return make_func(Func::binomial, {a, b});
            }
        }
        if (t.type == Token::sym && (t.text == "(" || t.text == "{" || t.text == "[")) {
            const char* close = t.text == "(" ? ")" : (t.text == "{" ? "}" : "]");
            ++i_;
            NodePtr e = expression();
            expect_sym(close);
            return e;
        }
        throw ParseError("unexpected token '" + t.text + "'", t.pos);
    }
};

}  // namespace

NodePtr make_number(const mpq_class& q) {
    auto n = std::make_shared<Node>();
    n->kind = NodeKind::number;
    n->value = q;
    n->value.canonicalize();
    return n;
}

NodePtr parse_expr(const std::string& text) {
    std::string s = preprocess(text);
    if (s.empty()) throw ParseError("empty expression", 0);
    return Parser(lex(s)).parse();
}

std::string print_expr(const NodePtr& n) {
    switch (n->kind) {
        case NodeKind::number: return n->value.get_str();
        case NodeKind::const_pi: return "pi";
        case NodeKind::const_e: return "e";
        case NodeKind::neg: return "(-" + print_expr(n->args[0]) + ")";
        case NodeKind::add: return "(" + print_expr(n->args[0]) + " + " + print_expr(n->args[1]) + ")";
        case NodeKind::sub: return "(" + print_expr(n->args[0]) + " - " + print_expr(n->args[1]) + ")";
        case NodeKind::mul: return "(" + print_expr(n->args[0]) + " * " + print_expr(n->args[1]) + ")";
        case NodeKind::div: return "(" + print_expr(n->args[0]) + " / " + print_expr(n->args[1]) + ")";
        case NodeKind::pow: return "(" + print_expr(n->args[0]) + " ^ " + print_expr(n->args[1]) + ")";
        case NodeKind::func: {
            std::string s = std::string(func_name(n->func)) + "(";
            for (std::size_t i = 0; i < n->args.size(); ++i) {
                if (i) s += ", ";
                s += print_expr(n->args[i]);
            }
            return s + ")";
        }
    }
    return "?";
}

CanonicalForm canonicalize(const NodePtr& ast) {
    Eval e = evaluate(ast);
    CanonicalForm cf;
    cf.exact_value = e.exact;
    cf.numeric_value = bf_to_string(iv_mid(e.iv));
    BF lo = e.iv.lo, hi = e.iv.hi;
    cf.numeric_lower = bf_to_string(lo);
    cf.numeric_upper = bf_to_string(hi);
    cf.normalized_tree = e.norm;
    return cf;
}

namespace {

bool numerically_equal(const IV& a, const IV& b) {
    BF am = iv_mid(a), bm = iv_mid(b);
    BF diff, aa, ab, scale;
    mpfr_sub(diff.v, am.v, bm.v, MPFR_RNDN);
    mpfr_abs(diff.v, diff.v, MPFR_RNDN);
    mpfr_abs(aa.v, am.v, MPFR_RNDN);
    mpfr_abs(ab.v, bm.v, MPFR_RNDN);
    mpfr_max(scale.v, aa.v, ab.v, MPFR_RNDN);

    BF tol;
    mpfr_set_str(tol.v, "1e-40", 10, MPFR_RNDN);
    if (mpfr_cmp(diff.v, tol.v) <= 0) return true;
    mpfr_set_str(tol.v, "1e-30", 10, MPFR_RNDN);
    mpfr_mul(tol.v, tol.v, scale.v, MPFR_RNDN);
    return mpfr_cmp(diff.v, tol.v) <= 0;
}

}  // namespace

bool equivalent(const NodePtr& a, const NodePtr& b) {
    Eval ea = evaluate(a);
    Eval eb = evaluate(b);
    if (ea.exact && eb.exact) return *ea.exact == *eb.exact;
    return numerically_equal(ea.iv, eb.iv);
}

bool equivalent(const std::string& a, const std::string& b) {
    return equivalent(parse_expr(a), parse_expr(b));
}

JudgeResult judge(const std::string& answer, const std::string& gold) {
    NodePtr g;
    Eval ge;
    try {
        g = parse_expr(gold);
        ge = evaluate(g);
    } catch (const Error&) {
        throw EvalError("gold answer does not parse or evaluate: " + gold);
    }
    NodePtr a;
    Eval ae;
    try {
        a = parse_expr(answer);
        ae = evaluate(a);
    } catch (const Error&) {
        return {0, true};
    }
    bool eq;
    if (ae.exact && ge.exact)
        eq = *ae.exact == *ge.exact;
    else
        eq = numerically_equal(ae.iv, ge.iv);
    return {eq ? 1 : 0, false};
}

}  // namespace arena::expr
