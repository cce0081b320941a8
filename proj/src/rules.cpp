// rules.cpp - recursive-descent parser and evaluator for consistency rules.
#include "concord/rules.hpp"

#include <map>
#include <utility>

namespace concord::rules {

namespace {

// --- tokenizer ---------------------------------------------------------------

enum class Tok : std::uint8_t { Ident, Number, String, Symbol, End };

struct Token {
    Tok kind = Tok::End;
    std::string text;
    int line = 1;
    int col = 1;
};

bool ident_start(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_'; }
bool ident_char(char c) { return ident_start(c) || (c >= '0' && c <= '9'); }
bool digit(char c) { return c >= '0' && c <= '9'; }

std::vector<Token> tokenize(const std::string& text) {
    std::vector<Token> out;
    int line = 1, col = 1;
    std::size_t i = 0;
    auto bump = [&](std::size_t n) {
        for (std::size_t k = 0; k < n; ++k) {
            if (text[i + k] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        i += n;
    };
    while (i < text.size()) {
        char c = text[i];
        if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
            bump(1);
            continue;
        }
        Token t;
        t.line = line;
        t.col = col;
        if (ident_start(c)) {
            std::size_t n = 1;
            while (i + n < text.size() && ident_char(text[i + n])) ++n;
            t.kind = Tok::Ident;
            t.text = text.substr(i, n);
            bump(n);
        } else if (digit(c) || (c == '-' && i + 1 < text.size() && digit(text[i + 1]))) {
            std::size_t n = 1;
            while (i + n < text.size() && digit(text[i + n])) ++n;
            t.kind = Tok::Number;
            t.text = text.substr(i, n);
            bump(n);
        } else if (c == '"') {
            std::string s;
            std::size_t n = 1;
            bool closed = false;
            while (i + n < text.size()) {
                char d = text[i + n];
                if (d == '\\' && i + n + 1 < text.size()) {
                    char e = text[i + n + 1];
                    if (e == 'n') s += '\n';
                    else if (e == 't') s += '\t';
                    else s += e;  // \" and \\ and anything else literally
                    n += 2;
                    continue;
                }
                if (d == '"') {
                    closed = true;
                    ++n;
                    break;
                }
                if (d == '\n') break;  // strings stay on one line
                s += d;
                ++n;
            }
            if (!closed) throw ParseError(line, col, "unterminated string literal");
            t.kind = Tok::String;
            t.text = std::move(s);
            bump(n);
        } else if (c == '!' && i + 1 < text.size() && text[i + 1] == '=') {
            t.kind = Tok::Symbol;
            t.text = "!=";
            bump(2);
        } else if ((c == '<' || c == '>') && i + 1 < text.size() && text[i + 1] == '=') {
            t.kind = Tok::Symbol;
            t.text = std::string(1, c) + "=";
            bump(2);
        } else if (c == '=' || c == '.' || c == ':') {
            t.kind = Tok::Symbol;
            t.text = std::string(1, c);
            bump(1);
        } else {
            throw ParseError(line, col, std::string("unexpected character '") + c + "'");
        }
        out.push_back(std::move(t));
    }
    Token end;
    end.kind = Tok::End;
    end.line = line;
    end.col = col;
    out.push_back(std::move(end));
    return out;
}

const std::set<std::string>& keywords() {
    static const std::set<std::string> kw = {"and",  "forall", "exists", "in",   "unique",
                                             "by",   "count",  "self",   "null", "true",
                                             "false"};
    return kw;
}

// --- parser ------------------------------------------------------------------

class Parser {
public:
    explicit Parser(const std::string& text) : tokens_(tokenize(text)) {}

    RuleAst parse() {
        RuleAst rule;
        rule.clauses.push_back(parse_clause());
        while (peek().kind == Tok::Ident && peek().text == "and") {
            advance();
            rule.clauses.push_back(parse_clause());
        }
        if (peek().kind != Tok::End) fail(peek(), "expected 'and' or the end of the rule");
        return rule;
    }

private:
    const Token& peek() const { return tokens_[pos_]; }
    const Token& advance() { return tokens_[pos_++]; }

    [[noreturn]] void fail(const Token& at, const std::string& msg) const {
        std::string got = at.kind == Tok::End ? "end of rule" : "'" + at.text + "'";
        throw ParseError(at.line, at.col, msg + ", got " + got);
    }

    const Token& expect_symbol(const std::string& sym, const std::string& what) {
        if (peek().kind != Tok::Symbol || peek().text != sym)
            fail(peek(), "expected '" + sym + "' " + what);
        return advance();
    }

    const Token& expect_ident(const std::string& what) {
        if (peek().kind != Tok::Ident) fail(peek(), "expected " + what);
        return advance();
    }

    bool bound(const std::string& name) const {
        for (const std::string& v : vars_)
            if (v == name) return true;
        return false;
    }

    Clause parse_clause() {
        if (peek().kind == Tok::Ident) {
            const std::string& word = peek().text;
            if (word == "forall" || word == "exists") return parse_quantified();
            if (word == "unique") return parse_unique();
            if (word == "count") return parse_count();
        }
        return parse_comparison();
    }

    Clause parse_quantified() {
        Quantified q;
        q.universal = advance().text == "forall";
        const Token& var = expect_ident("a variable name after the quantifier");
        if (keywords().count(var.text))
            throw ParseError(var.line, var.col, "'" + var.text + "' cannot name a variable");
        q.var = var.text;
        if (peek().kind != Tok::Ident || peek().text != "in")
            fail(peek(), "expected 'in' after the variable");
        advance();
        q.collection = parse_path();
        expect_symbol(":", "before the quantifier body");
        vars_.push_back(q.var);
        q.body = std::make_unique<Clause>(parse_clause());
        vars_.pop_back();
        Clause c;
        c.node = std::move(q);
        return c;
    }

    Clause parse_unique() {
        advance();  // "unique"
        Unique u;
        u.collection = parse_path();
        if (peek().kind != Tok::Ident || peek().text != "by")
            fail(peek(), "expected 'by' after the collection");
        advance();
        u.key.root = PathRoot::Relative;
        u.key.segments.push_back(expect_ident("a key property after 'by'").text);
        while (peek().kind == Tok::Symbol && peek().text == ".") {
            advance();
            u.key.segments.push_back(expect_ident("a property name after '.'").text);
        }
        Clause c;
        c.node = std::move(u);
        return c;
    }

    Clause parse_count() {
        advance();  // "count"
        CountAtMost n;
        n.collection = parse_path();
        expect_symbol("<=", "after the counted collection");
        if (peek().kind != Tok::Number) fail(peek(), "expected an integer bound");
        const Token& bound = advance();
        n.bound = std::stoll(bound.text);
        if (n.bound < 0)
            throw ParseError(bound.line, bound.col, "the count bound must not be negative");
        Clause c;
        c.node = std::move(n);
        return c;
    }

    Clause parse_comparison() {
        Comparison cmp;
        cmp.path = parse_path();
        if (peek().kind != Tok::Symbol ||
            (peek().text != "=" && peek().text != "!=" && peek().text != "<=" && peek().text != ">="))
            fail(peek(), "expected a comparison operator (=, !=, <=, >=)");
        const Token& op = advance();
        if (op.text == "=") cmp.op = CmpOp::Eq;
        else if (op.text == "!=") cmp.op = CmpOp::Ne;
        else if (op.text == "<=") cmp.op = CmpOp::Le;
        else cmp.op = CmpOp::Ge;

        const Token& t = peek();
        if (t.kind == Tok::Number) {
            advance();
            Literal lit;
            lit.kind = Literal::Kind::Integer;
            lit.integer = std::stoll(t.text);
            cmp.operand = lit;
        } else if (t.kind == Tok::String) {
            advance();
            Literal lit;
            lit.kind = Literal::Kind::String;
            lit.text = t.text;
            cmp.operand = lit;
        } else if (t.kind == Tok::Ident && (t.text == "null" || t.text == "true" || t.text == "false")) {
            advance();
            Literal lit;
            if (t.text == "null") {
                if (cmp.op != CmpOp::Eq && cmp.op != CmpOp::Ne)
                    throw ParseError(t.line, t.col, "null supports only = and !=");
                lit.kind = Literal::Kind::Null;
            } else {
                lit.kind = Literal::Kind::Boolean;
                lit.boolean = t.text == "true";
            }
            cmp.operand = lit;
        } else {
            cmp.operand = parse_path();
        }
        Clause c;
        c.node = std::move(cmp);
        return c;
    }

    PathExpr parse_path() {
        const Token& root = expect_ident("a path ('self' or a quantifier variable)");
        PathExpr p;
        if (root.text == "self") {
            p.root = PathRoot::Self;
        } else if (bound(root.text)) {
            p.root = PathRoot::Var;
            p.var = root.text;
        } else {
            throw ParseError(root.line, root.col,
                             "unknown name '" + root.text +
                                 "' (paths start at 'self' or a quantifier variable)");
        }
        while (peek().kind == Tok::Symbol && peek().text == ".") {
            advance();
            p.segments.push_back(expect_ident("a property name after '.'").text);
        }
        return p;
    }

    std::vector<Token> tokens_;
    std::size_t pos_ = 0;
    std::vector<std::string> vars_;
};

// --- printing ----------------------------------------------------------------

std::string path_text(const PathExpr& p) {
    std::string out;
    if (p.root == PathRoot::Self) out = "self";
    else if (p.root == PathRoot::Var) out = p.var;
    for (std::size_t i = 0; i < p.segments.size(); ++i) {
        if (!out.empty()) out += '.';
        out += p.segments[i];
    }
    return out;
}

std::string literal_text(const Literal& l) {
    switch (l.kind) {
        case Literal::Kind::Null: return "null";
        case Literal::Kind::Boolean: return l.boolean ? "true" : "false";
        case Literal::Kind::Integer: return std::to_string(l.integer);
        case Literal::Kind::String: {
            std::string out = "\"";
            for (char c : l.text) {
                if (c == '"' || c == '\\') out += '\\';
                if (c == '\n') { out += "\\n"; continue; }
                if (c == '\t') { out += "\\t"; continue; }
                out += c;
            }
            out += '"';
            return out;
        }
    }
    return "?";
}

const char* op_text(CmpOp op) {
    switch (op) {
        case CmpOp::Eq: return "=";
        case CmpOp::Ne: return "!=";
        case CmpOp::Le: return "<=";
        case CmpOp::Ge: return ">=";
    }
    return "?";
}

std::string clause_text(const Clause& c) {
    if (const auto* cmp = std::get_if<Comparison>(&c.node)) {
        std::string rhs = std::holds_alternative<Literal>(cmp->operand)
                              ? literal_text(std::get<Literal>(cmp->operand))
                              : path_text(std::get<PathExpr>(cmp->operand));
        return path_text(cmp->path) + " " + op_text(cmp->op) + " " + rhs;
    }
    if (const auto* q = std::get_if<Quantified>(&c.node)) {
        return std::string(q->universal ? "forall" : "exists") + " " + q->var + " in " +
               path_text(q->collection) + " : " + clause_text(*q->body);
    }
    if (const auto* u = std::get_if<Unique>(&c.node)) {
        return "unique " + path_text(u->collection) + " by " + path_text(u->key);
    }
    const auto& n = std::get<CountAtMost>(c.node);
    return "count " + path_text(n.collection) + " <= " + std::to_string(n.bound);
}

bool clause_equal(const Clause& a, const Clause& b) {
    if (a.node.index() != b.node.index()) return false;
    if (const auto* ca = std::get_if<Comparison>(&a.node)) {
        const auto& cb = std::get<Comparison>(b.node);
        return ca->path == cb.path && ca->op == cb.op && ca->operand == cb.operand;
    }
    if (const auto* qa = std::get_if<Quantified>(&a.node)) {
        const auto& qb = std::get<Quantified>(b.node);
        return qa->universal == qb.universal && qa->var == qb.var &&
               qa->collection == qb.collection && clause_equal(*qa->body, *qb.body);
    }
    if (const auto* ua = std::get_if<Unique>(&a.node)) {
        const auto& ub = std::get<Unique>(b.node);
        return ua->collection == ub.collection && ua->key == ub.key;
    }
    const auto& na = std::get<CountAtMost>(a.node);
    const auto& nb = std::get<CountAtMost>(b.node);
    return na.collection == nb.collection && na.bound == nb.bound;
}

// --- evaluation ----------------------------------------------------------------

struct EvalValue {
    ValueKind kind = ValueKind::String;
    Scalar scalar;

    bool operator==(const EvalValue&) const = default;
    bool operator<(const EvalValue& o) const {
        if (kind != o.kind) return kind < o.kind;
        return scalar < o.scalar;
    }
};

using Binding = std::map<std::string, EvalValue>;

struct Evaluator {
    const ArtifactId& self;
    const PropertyReader& read;
    Scope& scope;

    /// Walks the path, fanning out over multi-valued properties. Every read
    /// lands in the scope; only link values can be navigated further;
    /// duplicates are folded at each step.
    std::vector<EvalValue> navigate(const PathExpr& p, const Binding& binding,
                                    const EvalValue* origin) const {
        std::vector<EvalValue> frontier;
        switch (p.root) {
            case PathRoot::Self:
                frontier.push_back({ValueKind::Link, Scalar{self}});
                break;
            case PathRoot::Var:
                frontier.push_back(binding.at(p.var));
                break;
            case PathRoot::Relative:
                if (!origin) throw EvalError("relative path without an element");
                frontier.push_back(*origin);
                break;
        }
        for (const std::string& segment : p.segments) {
            std::vector<EvalValue> next;
            std::set<EvalValue> seen;
            for (const EvalValue& elem : frontier) {
                if (elem.kind != ValueKind::Link) continue;  // only links navigate
                const ArtifactId& id = std::get<std::string>(elem.scalar);
                scope.insert({id, segment});
                std::optional<Value> v = read(id, segment);
                if (!v) continue;
                for (const Scalar& item : v->items) {
                    EvalValue ev{v->kind, item};
                    if (seen.insert(ev).second) next.push_back(std::move(ev));
                }
            }
            frontier = std::move(next);
        }
        return frontier;
    }

    static bool scalars_equal(const EvalValue& a, const EvalValue& b) {
        // Values of different kinds never compare equal.
        return a.kind == b.kind && a.scalar == b.scalar;
    }

    static bool compare(const EvalValue& l, CmpOp op, const EvalValue& r) {
        switch (op) {
            case CmpOp::Eq: return scalars_equal(l, r);
            case CmpOp::Ne: return !scalars_equal(l, r);
            case CmpOp::Le:
            case CmpOp::Ge: {
                if (l.kind != ValueKind::Integer || r.kind != ValueKind::Integer)
                    throw EvalError("ordering comparisons need integer values");
                std::int64_t a = std::get<std::int64_t>(l.scalar);
                std::int64_t b = std::get<std::int64_t>(r.scalar);
                return op == CmpOp::Le ? a <= b : a >= b;
            }
        }
        return false;
    }

    bool eval_comparison(const Comparison& c, const Binding& binding, bool& dangling) const {
        std::vector<EvalValue> lhs = navigate(c.path, binding, nullptr);
        if (const auto* lit = std::get_if<Literal>(&c.operand); lit && lit->kind == Literal::Kind::Null) {
            // x = null: nothing reachable; x != null: something reachable.
            return c.op == CmpOp::Eq ? lhs.empty() : !lhs.empty();
        }
        std::vector<EvalValue> rhs;
        if (const auto* lit = std::get_if<Literal>(&c.operand)) {
            switch (lit->kind) {
                case Literal::Kind::Boolean:
                    rhs.push_back({ValueKind::Boolean, Scalar{lit->boolean}});
                    break;
                case Literal::Kind::Integer:
                    rhs.push_back({ValueKind::Integer, Scalar{lit->integer}});
                    break;
                case Literal::Kind::String:
                    rhs.push_back({ValueKind::String, Scalar{lit->text}});
                    break;
                case Literal::Kind::Null:
                    break;  // handled above
            }
        } else {
            rhs = navigate(std::get<PathExpr>(c.operand), binding, nullptr);
        }
        if (lhs.empty() || rhs.empty()) {
            dangling = true;  // an unexpected dead end; the clause cannot hold
            return false;
        }
        // Every left value must match at least one right value.
        for (const EvalValue& l : lhs) {
            bool matched = false;
            for (const EvalValue& r : rhs)
                if (compare(l, c.op, r)) {
                    matched = true;
                    break;
                }
            if (!matched) return false;
        }
        return true;
    }

    bool eval_clause(const Clause& c, Binding& binding, bool& dangling) const {
        if (const auto* cmp = std::get_if<Comparison>(&c.node))
            return eval_comparison(*cmp, binding, dangling);

        if (const auto* q = std::get_if<Quantified>(&c.node)) {
            std::vector<EvalValue> items = navigate(q->collection, binding, nullptr);
            bool result = q->universal;  // vacuous truth / empty existential
            auto saved = binding.find(q->var) != binding.end()
                             ? std::optional<EvalValue>(binding[q->var])
                             : std::nullopt;
            for (const EvalValue& item : items) {
                binding[q->var] = item;
                // every element is visited so the scope covers them all
                bool ok = eval_clause(*q->body, binding, dangling);
                if (q->universal) result = result && ok;
                else result = result || ok;
            }
            if (saved) binding[q->var] = *saved;
            else binding.erase(q->var);
            return result;
        }

        if (const auto* u = std::get_if<Unique>(&c.node)) {
            std::vector<EvalValue> items = navigate(u->collection, binding, nullptr);
            std::set<std::vector<EvalValue>> seen;
            bool ok = true;
            for (const EvalValue& item : items) {
                std::vector<EvalValue> key = navigate(u->key, binding, &item);
                if (key.empty()) continue;  // elements without a key collide with nothing
                if (!seen.insert(std::move(key)).second) ok = false;  // keep reading the rest
            }
            return ok;
        }

        const auto& n = std::get<CountAtMost>(c.node);
        std::vector<EvalValue> items = navigate(n.collection, binding, nullptr);
        return static_cast<std::int64_t>(items.size()) <= n.bound;
    }
};

}  // namespace

RuleAst parse_rule(const std::string& text) { return Parser(text).parse(); }

std::string to_text(const RuleAst& rule) {
    std::string out;
    for (std::size_t i = 0; i < rule.clauses.size(); ++i) {
        if (i) out += " and ";
        out += clause_text(rule.clauses[i]);
    }
    return out;
}

bool ast_equal(const RuleAst& a, const RuleAst& b) {
    if (a.clauses.size() != b.clauses.size()) return false;
    for (std::size_t i = 0; i < a.clauses.size(); ++i)
        if (!clause_equal(a.clauses[i], b.clauses[i])) return false;
    return true;
}

EvalResult evaluate(const RuleAst& rule, const ArtifactId& self, const PropertyReader& read) {
    EvalResult res;
    Evaluator ev{self, read, res.scope};
    Binding binding;
    for (std::size_t i = 0; i < rule.clauses.size(); ++i) {
        bool dangling = false;
        bool ok = ev.eval_clause(rule.clauses[i], binding, dangling);
        if (dangling) res.verdict.dangling = true;
        if (!ok && res.verdict.holds) {
            res.verdict.holds = false;
            res.verdict.failedClause = static_cast<int>(i);
        }
    }
    return res;
}

}  // namespace concord::rules
