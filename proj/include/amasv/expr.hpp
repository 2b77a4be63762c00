// ============================================================================
// amasv/expr.hpp: transition preconditions
// ============================================================================
//
// Guards are small boolean formulas over variables:
//   expr := or ; or := and (('||'|'or') and)* ; and := unary (('&&'|'and') unary)*
//   unary := ('!'|'not') unary | '(' expr ')' | operand (cmp operand)?
//   operand := identifier | integer | true | false
// A comparison that reads an unset variable is false. A bare identifier is
// true iff the variable is set and nonzero.
// ============================================================================
#pragma once

#include "amasv/common.hpp"
#include "amasv/lexer.hpp"

#include <charconv>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace amasv {

enum class CmpOp { Eq, Ne, Lt, Le, Gt, Ge };

inline const char* cmp_text(CmpOp op) {
    switch (op) {
        case CmpOp::Eq: return "==";
        case CmpOp::Ne: return "!=";
        case CmpOp::Lt: return "<";
        case CmpOp::Le: return "<=";
        case CmpOp::Gt: return ">";
        case CmpOp::Ge: return ">=";
    }
    return "?";
}

/// Operand of a comparison: a literal or a variable (name + resolved id).
struct Operand {
    bool is_var = false;
    std::string name;
    VarId var = 0;
    Value literal = 0;
    bool literal_is_bool = false;

    bool operator==(const Operand& o) const {
        return is_var == o.is_var && (is_var ? name == o.name
                                             : literal == o.literal && literal_is_bool == o.literal_is_bool);
    }
};

struct Expr {
    enum class Kind { Const, Truthy, Cmp, Not, And, Or };
    Kind kind = Kind::Const;
    bool const_value = true;
    CmpOp op = CmpOp::Eq;
    Operand lhs, rhs;  // Truthy uses lhs only
    std::vector<Expr> kids;

    bool operator==(const Expr& o) const {
        return kind == o.kind && const_value == o.const_value && op == o.op && lhs == o.lhs &&
               rhs == o.rhs && kids == o.kids;
    }

    /// Visit every variable operand (mutable, for renaming and resolution).
    void for_each_var(const std::function<void(Operand&)>& f) {
        if (lhs.is_var) f(lhs);
        if (rhs.is_var) f(rhs);
        for (auto& k : kids) k.for_each_var(f);
    }
    void for_each_var(const std::function<void(const Operand&)>& f) const {
        if (lhs.is_var) f(lhs);
        if (rhs.is_var) f(rhs);
        for (const auto& k : kids) k.for_each_var(f);
    }

    template <typename Store>
    bool eval(const Store& store) const {
        switch (kind) {
            case Kind::Const: return const_value;
            case Kind::Truthy: {
                Value v = store[lhs.var];
                return v != kUnset && v != 0;
            }
            case Kind::Cmp: {
                Value a = lhs.is_var ? store[lhs.var] : lhs.literal;
                Value b = rhs.is_var ? store[rhs.var] : rhs.literal;
                if (a == kUnset || b == kUnset) return false;
                switch (op) {
                    case CmpOp::Eq: return a == b;
                    case CmpOp::Ne: return a != b;
                    case CmpOp::Lt: return a < b;
                    case CmpOp::Le: return a <= b;
                    case CmpOp::Gt: return a > b;
                    case CmpOp::Ge: return a >= b;
                }
                return false;
            }
            case Kind::Not: return !kids[0].eval(store);
            case Kind::And:
                for (const auto& k : kids)
                    if (!k.eval(store)) return false;
                return true;
            case Kind::Or:
                for (const auto& k : kids)
                    if (k.eval(store)) return true;
                return false;
        }
        return false;
    }
};

inline std::string operand_to_string(const Operand& o) {
    if (o.is_var) return o.name;
    if (o.literal_is_bool) return o.literal ? "true" : "false";
    return std::to_string(o.literal);
}

inline std::string expr_to_string(const Expr& e) {
    switch (e.kind) {
        case Expr::Kind::Const: return e.const_value ? "true" : "false";
        case Expr::Kind::Truthy: return e.lhs.name;
        case Expr::Kind::Cmp:
            return operand_to_string(e.lhs) + cmp_text(e.op) + operand_to_string(e.rhs);
        case Expr::Kind::Not: return "!(" + expr_to_string(e.kids[0]) + ")";
        case Expr::Kind::And:
        case Expr::Kind::Or: {
            std::string sep = e.kind == Expr::Kind::And ? " && " : " || ";
            std::string out = "(";
            for (std::size_t i = 0; i < e.kids.size(); ++i) {
                if (i) out += sep;
                out += expr_to_string(e.kids[i]);
            }
            return out + ")";
        }
    }
    return "";
}

namespace detail {

inline Value parse_int_literal(const std::string& text, std::size_t line) {
    long long v = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size() || v < -2147483647LL || v > 2147483647LL)
        throw ParseError(line, "integer literal out of 32-bit range: " + text);
    return static_cast<Value>(v);
}

class ExprParser {
public:
    ExprParser(std::string_view text, std::size_t line) : toks_(tokenize(text, line)), line_(line) {}

    Expr parse() {
        Expr e = parse_or();
        if (peek().kind != Tok::End) fail("unexpected token '" + peek().text + "'");
        return e;
    }

private:
    std::vector<Token> toks_;
    std::size_t pos_ = 0;
    std::size_t line_;

    const Token& peek() const { return toks_[pos_]; }
    Token take() { return toks_[pos_++]; }
    [[noreturn]] void fail(const std::string& m) const { throw ParseError(line_, "in precondition: " + m); }

    Expr parse_or() {
        Expr first = parse_and();
        if (peek().kind != Tok::Or) return first;
        Expr e;
        e.kind = Expr::Kind::Or;
        e.kids.push_back(std::move(first));
        while (peek().kind == Tok::Or) {
            take();
            e.kids.push_back(parse_and());
        }
        return e;
    }
    Expr parse_and() {
        Expr first = parse_unary();
        if (peek().kind != Tok::And) return first;
        Expr e;
        e.kind = Expr::Kind::And;
        e.kids.push_back(std::move(first));
        while (peek().kind == Tok::And) {
            take();
            e.kids.push_back(parse_unary());
        }
        return e;
    }
    Expr parse_unary() {
        if (peek().kind == Tok::Not) {
            take();
            Expr e;
            e.kind = Expr::Kind::Not;
            e.kids.push_back(parse_unary());
            return e;
        }
        if (peek().kind == Tok::LParen) {
            take();
            Expr e = parse_or();
            if (take().kind != Tok::RParen) fail("expected ')'");
            return e;
        }
        Operand a = parse_operand();
        CmpOp op;
        switch (peek().kind) {
            case Tok::Eq: op = CmpOp::Eq; break;
            case Tok::Ne: op = CmpOp::Ne; break;
            case Tok::Lt: op = CmpOp::Lt; break;
            case Tok::Le: op = CmpOp::Le; break;
            case Tok::Gt: op = CmpOp::Gt; break;
            case Tok::Ge: op = CmpOp::Ge; break;
            default: {
                Expr e;
                if (a.is_var) {
                    e.kind = Expr::Kind::Truthy;
                    e.lhs = a;
                } else {
                    e.kind = Expr::Kind::Const;
                    e.const_value = a.literal != 0;
                }
                return e;
            }
        }
        take();
        Expr e;
        e.kind = Expr::Kind::Cmp;
        e.op = op;
        e.lhs = a;
        e.rhs = parse_operand();
        return e;
    }
    Operand parse_operand() {
        Token t = take();
        Operand o;
        if (t.kind == Tok::Int) {
            o.literal = parse_int_literal(t.text, line_);
        } else if (t.kind == Tok::Ident && (t.text == "true" || t.text == "True")) {
            o.literal = 1;
            o.literal_is_bool = true;
        } else if (t.kind == Tok::Ident && (t.text == "false" || t.text == "False")) {
            o.literal = 0;
            o.literal_is_bool = true;
        } else if (t.kind == Tok::Ident) {
            o.is_var = true;
            o.name = t.text;
        } else {
            fail("expected operand, got '" + t.text + "'");
        }
        return o;
    }
};

}  // namespace detail

inline Expr parse_expr(std::string_view text, std::size_t line = 0) {
    return detail::ExprParser(text, line).parse();
}

}  // namespace amasv
