// ============================================================================
// amasv/formula.hpp: sATL*K formulas
// ============================================================================
//
//   formula  := implies
//   implies  := or ('->' implies)?
//   or       := and ('|' and)*          and := unary ('&' unary)*
//   unary    := '!' unary | '(' formula ')' | true | false
//             | K_<agent> unary | '<<' agents '>>' path | var (cmp literal)?
//   path     := F unary | G unary | unary U unary | '(' path ')'
//
// No X, no coalition below a coalition or a knowledge operator.
// ============================================================================
#pragma once

#include "amasv/common.hpp"
#include "amasv/expr.hpp"
#include "amasv/lexer.hpp"

#include <set>
#include <string>
#include <vector>

namespace amasv {

struct Formula {
    enum class Kind { Const, Atom, Not, And, Or, Implies, Know, Coalition };
    enum class Path { F, G, U };

    Kind kind = Kind::Const;
    bool const_value = true;

    // Atom: `var op literal`, or a bare variable when truthy is set.
    std::string var;
    bool truthy = false;
    CmpOp op = CmpOp::Eq;
    Value literal = 0;
    bool literal_is_bool = false;

    std::string agent;                  // Know
    std::vector<std::string> coalition; // Coalition
    Path path = Path::F;

    std::vector<Formula> kids;

    bool operator==(const Formula&) const = default;

    bool is_strategic() const { return kind == Kind::Coalition; }
    bool contains_coalition() const {
        if (kind == Kind::Coalition) return true;
        for (const auto& k : kids)
            if (k.contains_coalition()) return true;
        return false;
    }
};

// ── Constructors ────────────────────────────────────────────────────────────

inline Formula f_const(bool v) {
    Formula f;
    f.kind = Formula::Kind::Const;
    f.const_value = v;
    return f;
}
inline Formula f_atom(std::string var, Value v, bool is_bool = false, CmpOp op = CmpOp::Eq) {
    Formula f;
    f.kind = Formula::Kind::Atom;
    f.var = std::move(var);
    f.literal = v;
    f.literal_is_bool = is_bool;
    f.op = op;
    return f;
}
inline Formula f_var(std::string var) {
    Formula f;
    f.kind = Formula::Kind::Atom;
    f.var = std::move(var);
    f.truthy = true;
    return f;
}
inline Formula f_unary(Formula::Kind k, Formula a) {
    Formula f;
    f.kind = k;
    f.kids.push_back(std::move(a));
    return f;
}
inline Formula f_binary(Formula::Kind k, Formula a, Formula b) {
    Formula f;
    f.kind = k;
    f.kids.push_back(std::move(a));
    f.kids.push_back(std::move(b));
    return f;
}
inline Formula f_not(Formula a) { return f_unary(Formula::Kind::Not, std::move(a)); }
inline Formula f_and(Formula a, Formula b) { return f_binary(Formula::Kind::And, std::move(a), std::move(b)); }
inline Formula f_or(Formula a, Formula b) { return f_binary(Formula::Kind::Or, std::move(a), std::move(b)); }
inline Formula f_implies(Formula a, Formula b) {
    return f_binary(Formula::Kind::Implies, std::move(a), std::move(b));
}
inline Formula f_know(std::string agent, Formula a) {
    Formula f = f_unary(Formula::Kind::Know, std::move(a));
    f.agent = std::move(agent);
    return f;
}
inline Formula f_coalition(std::vector<std::string> agents, Formula::Path p, Formula a) {
    Formula f = f_unary(Formula::Kind::Coalition, std::move(a));
    f.coalition = std::move(agents);
    f.path = p;
    return f;
}
inline Formula f_until(std::vector<std::string> agents, Formula a, Formula b) {
    Formula f = f_binary(Formula::Kind::Coalition, std::move(a), std::move(b));
    f.coalition = std::move(agents);
    f.path = Formula::Path::U;
    return f;
}

// ── Queries ─────────────────────────────────────────────────────────────────

inline void collect_atom_vars(const Formula& f, std::set<std::string>& out) {
    if (f.kind == Formula::Kind::Atom) out.insert(f.var);
    for (const auto& k : f.kids) collect_atom_vars(k, out);
}

/// Coalition members and agents named in knowledge operators.
inline void collect_agents(const Formula& f, std::set<std::string>& out) {
    if (f.kind == Formula::Kind::Know) out.insert(f.agent);
    if (f.kind == Formula::Kind::Coalition) out.insert(f.coalition.begin(), f.coalition.end());
    for (const auto& k : f.kids) collect_agents(k, out);
}

// ── Printing ────────────────────────────────────────────────────────────────

inline std::string formula_to_string(const Formula& f) {
    using K = Formula::Kind;
    switch (f.kind) {
        case K::Const: return f.const_value ? "true" : "false";
        case K::Atom: {
            if (f.truthy) return f.var;
            std::string lit = f.literal_is_bool ? (f.literal ? "true" : "false") : std::to_string(f.literal);
            return f.var + (f.op == CmpOp::Eq ? "=" : cmp_text(f.op)) + lit;
        }
        case K::Not: return "!" + (f.kids[0].kind == K::Atom || f.kids[0].kind == K::Const
                                       ? formula_to_string(f.kids[0])
                                       : "(" + formula_to_string(f.kids[0]) + ")");
        case K::And: return "(" + formula_to_string(f.kids[0]) + " & " + formula_to_string(f.kids[1]) + ")";
        case K::Or: return "(" + formula_to_string(f.kids[0]) + " | " + formula_to_string(f.kids[1]) + ")";
        case K::Implies:
            return "(" + formula_to_string(f.kids[0]) + " -> " + formula_to_string(f.kids[1]) + ")";
        case K::Know: return "K_" + f.agent + "(" + formula_to_string(f.kids[0]) + ")";
        case K::Coalition: {
            std::string out = "<<";
            for (std::size_t i = 0; i < f.coalition.size(); ++i) out += (i ? "," : "") + f.coalition[i];
            out += ">>";
            if (f.path == Formula::Path::U)
                return out + "((" + formula_to_string(f.kids[0]) + ") U (" + formula_to_string(f.kids[1]) + "))";
            return out + (f.path == Formula::Path::F ? "F(" : "G(") + formula_to_string(f.kids[0]) + ")";
        }
    }
    return "";
}

// ── Parsing ─────────────────────────────────────────────────────────────────

namespace detail {

class FormulaParser {
public:
    explicit FormulaParser(std::string_view text) : toks_(tokenize(text, 0)) {}

    Formula parse() {
        Formula f = parse_implies();
        if (peek().kind != Tok::End) fail("unexpected token '" + peek().text + "'");
        return f;
    }

private:
    std::vector<Token> toks_;
    std::size_t pos_ = 0;
    int modal_depth_ = 0;  // > 0 inside a coalition or knowledge body

    const Token& peek(std::size_t k = 0) const { return toks_[std::min(pos_ + k, toks_.size() - 1)]; }
    Token take() { return toks_[pos_ < toks_.size() - 1 ? pos_++ : pos_]; }
    [[noreturn]] void fail(const std::string& m) const {
        throw ParseError(0, "formula: " + m + " (at offset " + std::to_string(peek().pos) + ")");
    }
    void expect(Tok k, const char* what) {
        if (peek().kind != k) fail(std::string("expected ") + what);
        take();
    }
    static bool is_cmp(Tok k) {
        return k == Tok::Eq || k == Tok::Ne || k == Tok::Lt || k == Tok::Le || k == Tok::Gt || k == Tok::Ge;
    }
    /// Could a formula start at the token after the current identifier?
    bool operand_follows() const {
        Tok k = peek(1).kind;
        return k == Tok::Ident || k == Tok::LParen || k == Tok::Not || k == Tok::LCoal;
    }

    Formula parse_implies() {
        Formula a = parse_or();
        if (peek().kind == Tok::Implies) {
            take();
            return f_implies(std::move(a), parse_implies());
        }
        return a;
    }
    Formula parse_or() {
        Formula a = parse_and();
        while (peek().kind == Tok::Or) {
            take();
            a = f_or(std::move(a), parse_and());
        }
        return a;
    }
    Formula parse_and() {
        Formula a = parse_unary();
        while (peek().kind == Tok::And) {
            take();
            a = f_and(std::move(a), parse_unary());
        }
        return a;
    }

    Formula parse_unary() {
        const Token& t = peek();
        switch (t.kind) {
            case Tok::Not: take(); return f_not(parse_unary());
            case Tok::LParen: {
                take();
                Formula f = parse_implies();
                expect(Tok::RParen, "')'");
                return f;
            }
            case Tok::LCoal: return parse_coalition();
            case Tok::Ident: break;
            default: fail("unexpected token '" + t.text + "'");
        }
        if (t.text == "true" || t.text == "false") {
            bool v = t.text == "true";
            take();
            return f_const(v);
        }
        if (t.text == "X" && operand_follows()) fail("the next-step operator X is not supported");
        if ((t.text == "F" || t.text == "G") && operand_follows())
            fail("temporal operator " + t.text + " outside a coalition");
        if (t.text.size() > 2 && t.text.rfind("K_", 0) == 0 && !is_cmp(peek(1).kind) && operand_follows()) {
            std::string agent = take().text.substr(2);
            ++modal_depth_;
            Formula body = parse_unary();
            --modal_depth_;
            return f_know(std::move(agent), std::move(body));
        }
        std::string var = take().text;
        if (!is_cmp(peek().kind)) return f_var(std::move(var));
        Tok ct = take().kind;
        CmpOp op = ct == Tok::Eq ? CmpOp::Eq
                 : ct == Tok::Ne ? CmpOp::Ne
                 : ct == Tok::Lt ? CmpOp::Lt
                 : ct == Tok::Le ? CmpOp::Le
                 : ct == Tok::Gt ? CmpOp::Gt
                                 : CmpOp::Ge;
        const Token& lit = peek();
        if (lit.kind == Tok::Int) {
            Value v = parse_int_literal(take().text, 0);
            return f_atom(std::move(var), v, false, op);
        }
        if (lit.kind == Tok::Ident && (lit.text == "true" || lit.text == "false")) {
            bool v = take().text == "true";
            return f_atom(std::move(var), v ? 1 : 0, true, op);
        }
        fail("expected a literal after comparison");
    }

    Formula parse_coalition() {
        if (modal_depth_ > 0) fail("nested strategic modalities are not supported");
        take();
        std::vector<std::string> agents;
        while (peek().kind != Tok::RCoal) {
            if (peek().kind != Tok::Ident) fail("expected an agent name in coalition");
            agents.push_back(take().text);
            if (peek().kind == Tok::Comma) take();
            else if (peek().kind != Tok::RCoal) fail("expected ',' or '>>'");
        }
        take();
        ++modal_depth_;
        Formula f = parse_path(agents);
        --modal_depth_;
        return f;
    }

    Formula parse_path(const std::vector<std::string>& agents) {
        const Token& t = peek();
        if (t.kind == Tok::Ident && (t.text == "F" || t.text == "G") && operand_follows()) {
            auto p = take().text == "F" ? Formula::Path::F : Formula::Path::G;
            return f_coalition(agents, p, parse_unary());
        }
        if (t.kind == Tok::Ident && t.text == "X" && operand_follows())
            fail("the next-step operator X is not supported");
        if (t.kind == Tok::LParen) {
            std::size_t save = pos_;
            try {
                take();
                Formula f = parse_path(agents);
                expect(Tok::RParen, "')'");
                return f;
            } catch (const ParseError&) {
                pos_ = save;
            }
        }
        // U takes whole boolean operands: <<A>> p & q U r means <<A>>((p & q) U r).
        Formula lhs = parse_implies();
        if (!(peek().kind == Tok::Ident && peek().text == "U"))
            fail("coalition must be followed by F, G or U");
        take();
        Formula rhs = parse_implies();
        return f_until(agents, std::move(lhs), std::move(rhs));
    }
};

}  // namespace detail

inline Formula parse_formula(std::string_view text) { return detail::FormulaParser(text).parse(); }

}  // namespace amasv
