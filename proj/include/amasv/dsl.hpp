// ============================================================================
// amasv/dsl.hpp: agent-template DSL
// ============================================================================
//
// File layout (line oriented, UTF-8):
//
//   % comment
//   Agent VoterC[2]:
//   init start
//   shared coerce1_aID: start -> coerced [aID_required=1]
//   revote: send -[aID_revote==1]> voting [aID_vote=?aID_required, aID_revote=2]
//   PROTOCOL: [[coerce1_aID, coerce2_aID]]
//
//   PERSISTENT: [VoterC1_vote, ...]
//   REDUCTION: [...]
//   FORMULA: <<Coercer1>> F VoterC1_punish=true
//   SHOW_EPISTEMIC: false
//
// A transition whose bracket list is not closed continues on the next line.
// Both "->" and the Unicode arrow U+2192 separate source and target.
// ============================================================================
#pragma once

#include "amasv/common.hpp"
#include "amasv/expr.hpp"

#include <algorithm>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace amasv {

// ── Spec AST ────────────────────────────────────────────────────────────────

/// Right-hand side of an update: a literal or `?var` (copy the pre-state value).
struct UpdateValue {
    bool is_read = false;
    std::string var;
    Value literal = 0;
    bool literal_is_bool = false;

    bool operator==(const UpdateValue& o) const {
        return is_read == o.is_read &&
               (is_read ? var == o.var : literal == o.literal && literal_is_bool == o.literal_is_bool);
    }
};

struct UpdateSpec {
    std::string var;
    UpdateValue value;
    bool operator==(const UpdateSpec&) const = default;
};

struct TransitionSpec {
    std::string event_name;
    bool shared = false;
    std::string source;
    std::string target;
    std::optional<Expr> precondition;
    std::vector<UpdateSpec> updates;
    std::size_t line = 0;

    bool operator==(const TransitionSpec& o) const {
        return event_name == o.event_name && shared == o.shared && source == o.source &&
               target == o.target && precondition == o.precondition && updates == o.updates;
    }
};

struct AgentTemplate {
    std::string name;
    int count = 1;
    std::string init_state;
    std::vector<TransitionSpec> transitions;
    std::vector<std::vector<std::string>> protocol_groups;
    std::size_t line = 0;

    bool operator==(const AgentTemplate& o) const {
        return name == o.name && count == o.count && init_state == o.init_state &&
               transitions == o.transitions && protocol_groups == o.protocol_groups;
    }
};

struct Directives {
    std::vector<std::string> persistent;
    std::vector<std::string> reduction;
    std::vector<std::string> formulas;
    bool show_epistemic = false;
    bool operator==(const Directives&) const = default;
};

struct ModelSpec {
    std::vector<AgentTemplate> templates;
    Directives directives;
    std::string source_name;

    bool operator==(const ModelSpec& o) const {
        return templates == o.templates && directives == o.directives;
    }
};

// ── Parser ──────────────────────────────────────────────────────────────────

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

inline bool is_identifier(std::string_view s) {
    if (s.empty() || !is_ident_start(s[0])) return false;
    return std::all_of(s.begin(), s.end(), [](char c) { return is_ident_char(c); });
}

inline std::string expect_identifier(std::string_view s, std::size_t line, const char* what) {
    s = trim(s);
    if (!is_identifier(s)) throw ParseError(line, std::string("expected ") + what + ", got '" + std::string(s) + "'");
    return std::string(s);
}

inline int bracket_balance(std::string_view s) {
    int b = 0;
    for (char c : s) {
        if (c == '[') ++b;
        else if (c == ']') --b;
    }
    return b;
}

/// Split on commas that are not nested inside brackets.
inline std::vector<std::string_view> split_top(std::string_view s) {
    std::vector<std::string_view> out;
    int depth = 0;
    std::size_t start = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '[') ++depth;
        else if (s[i] == ']') --depth;
        else if (s[i] == ',' && depth == 0) {
            out.push_back(trim(s.substr(start, i - start)));
            start = i + 1;
        }
    }
    auto last = trim(s.substr(start));
    if (!last.empty() || !out.empty()) out.push_back(last);
    return out;
}

inline std::string_view strip_brackets(std::string_view s, std::size_t line) {
    s = trim(s);
    if (s.size() < 2 || s.front() != '[' || s.back() != ']')
        throw ParseError(line, "expected bracketed list, got '" + std::string(s) + "'");
    return trim(s.substr(1, s.size() - 2));
}

inline std::vector<std::string> parse_name_list(std::string_view s, std::size_t line) {
    s = trim(s);
    if (!s.empty() && s.front() == '[') s = strip_brackets(s, line);
    std::vector<std::string> out;
    if (s.empty()) return out;
    for (auto item : split_top(s)) {
        auto name = expect_identifier(item, line, "name");
        if (std::find(out.begin(), out.end(), name) != out.end())
            throw ParseError(line, "duplicate name in list: " + name);
        out.push_back(name);
    }
    return out;
}

inline std::vector<std::vector<std::string>> parse_protocol(std::string_view s, std::size_t line) {
    std::vector<std::vector<std::string>> groups;
    auto inner = strip_brackets(s, line);
    if (inner.empty()) return groups;
    for (auto g : split_top(inner)) groups.push_back(parse_name_list(strip_brackets(g, line), line));
    return groups;
}

inline std::vector<UpdateSpec> parse_updates(std::string_view s, std::size_t line) {
    std::vector<UpdateSpec> out;
    auto inner = strip_brackets(s, line);
    if (inner.empty()) return out;
    for (auto item : split_top(inner)) {
        auto eq = item.find('=');
        if (eq == std::string_view::npos) throw ParseError(line, "update without '=': '" + std::string(item) + "'");
        UpdateSpec u;
        u.var = expect_identifier(item.substr(0, eq), line, "variable name");
        auto rhs = trim(item.substr(eq + 1));
        if (!rhs.empty() && rhs.front() == '?') {
            u.value.is_read = true;
            u.value.var = expect_identifier(rhs.substr(1), line, "variable name after '?'");
        } else if (rhs == "true" || rhs == "True") {
            u.value.literal = 1;
            u.value.literal_is_bool = true;
        } else if (rhs == "false" || rhs == "False") {
            u.value.literal = 0;
            u.value.literal_is_bool = true;
        } else {
            u.value.literal = parse_int_literal(std::string(rhs), line);
        }
        for (const auto& prev : out)
            if (prev.var == u.var) throw ParseError(line, "variable updated twice: " + u.var);
        out.push_back(std::move(u));
    }
    return out;
}

inline TransitionSpec parse_transition(std::string_view text, std::size_t line) {
    TransitionSpec t;
    t.line = line;
    text = trim(text);
    if (text.rfind("shared", 0) == 0 && text.size() > 6 && std::isspace(static_cast<unsigned char>(text[6]))) {
        t.shared = true;
        text = trim(text.substr(6));
    }
    auto colon = text.find(':');
    if (colon == std::string_view::npos) throw ParseError(line, "expected 'event: source -> target', got '" + std::string(text) + "'");
    t.event_name = expect_identifier(text.substr(0, colon), line, "event name");
    auto rest = trim(text.substr(colon + 1));

    std::size_t i = 0;
    while (i < rest.size() && is_ident_char(rest[i])) ++i;
    t.source = expect_identifier(rest.substr(0, i), line, "source state");
    rest = trim(rest.substr(i));

    static constexpr std::string_view kUnicodeArrow = "\xE2\x86\x92";
    if (rest.rfind("-[", 0) == 0) {
        auto close = rest.find("]>");
        if (close == std::string_view::npos) throw ParseError(line, "unterminated precondition '-[...]>'");
        t.precondition = parse_expr(rest.substr(2, close - 2), line);
        rest = trim(rest.substr(close + 2));
    } else if (rest.rfind("->", 0) == 0) {
        rest = trim(rest.substr(2));
    } else if (rest.rfind(kUnicodeArrow, 0) == 0) {
        rest = trim(rest.substr(kUnicodeArrow.size()));
    } else {
        throw ParseError(line, "expected '->' or '-[precondition]>' after source state");
    }

    i = 0;
    while (i < rest.size() && is_ident_char(rest[i])) ++i;
    t.target = expect_identifier(rest.substr(0, i), line, "target state");
    rest = trim(rest.substr(i));
    if (!rest.empty()) t.updates = parse_updates(rest, line);
    return t;
}

inline bool is_directive_keyword(std::string_view kw) {
    return kw == "PERSISTENT" || kw == "REDUCTION" || kw == "FORMULA" || kw == "SHOW_EPISTEMIC";
}

}  // namespace detail

/// Parse a full model file. Throws ParseError carrying the offending line.
inline ModelSpec parse_model_file(std::string_view text, std::string source_name = "<input>") {
    using namespace detail;
    ModelSpec spec;
    spec.source_name = std::move(source_name);

    std::vector<std::string> raw;
    {
        std::string cur;
        for (char c : text) {
            if (c == '\n') {
                raw.push_back(cur);
                cur.clear();
            } else if (c != '\r') {
                cur += c;
            }
        }
        raw.push_back(cur);
    }

    AgentTemplate* current = nullptr;
    bool protocol_seen = false;
    auto close_block = [&](std::size_t line) {
        if (current && current->init_state.empty())
            throw ParseError(current->line, "agent template '" + current->name + "' has no 'init' line");
        current = nullptr;
        protocol_seen = false;
        (void)line;
    };

    for (std::size_t idx = 0; idx < raw.size(); ++idx) {
        std::size_t line = idx + 1;
        std::string joined(trim(raw[idx]));
        if (joined.empty() || joined[0] == '%') continue;
        while (bracket_balance(joined) > 0 && idx + 1 < raw.size()) {
            ++idx;
            joined += " ";
            joined += trim(raw[idx]);
        }
        if (bracket_balance(joined) != 0) throw ParseError(line, "unbalanced brackets");
        std::string_view l = joined;

        if (l.rfind("Agent", 0) == 0 && (l.size() == 5 || !is_ident_char(l[5]))) {
            close_block(line);
            auto rest = trim(l.substr(5));
            auto lb = rest.find('[');
            auto rb = rest.find(']');
            if (lb == std::string_view::npos || rb == std::string_view::npos || rb < lb ||
                trim(rest.substr(rb + 1)) != ":")
                throw ParseError(line, "malformed agent header, expected 'Agent Name[count]:'");
            AgentTemplate t;
            t.line = line;
            t.name = expect_identifier(rest.substr(0, lb), line, "agent template name");
            auto count_text = std::string(trim(rest.substr(lb + 1, rb - lb - 1)));
            Value count = 0;
            try {
                count = parse_int_literal(count_text, line);
            } catch (const ParseError&) {
                throw ParseError(line, "malformed agent count '" + count_text + "'");
            }
            if (count < 1) throw ParseError(line, "agent count must be at least 1");
            t.count = count;
            for (const auto& other : spec.templates)
                if (other.name == t.name) throw ParseError(line, "duplicate agent template name: " + t.name);
            spec.templates.push_back(std::move(t));
            current = &spec.templates.back();
            continue;
        }

        auto colon = l.find(':');
        if (colon != std::string_view::npos) {
            auto kw = trim(l.substr(0, colon));
            auto value = trim(l.substr(colon + 1));
            if (is_directive_keyword(kw)) {
                close_block(line);
                auto& d = spec.directives;
                if (kw == "PERSISTENT" || kw == "REDUCTION") {
                    auto& list = kw == "PERSISTENT" ? d.persistent : d.reduction;
                    for (auto& n : parse_name_list(value, line)) {
                        if (std::find(list.begin(), list.end(), n) != list.end())
                            throw ParseError(line, "duplicate name in " + std::string(kw) + ": " + n);
                        list.push_back(n);
                    }
                } else if (kw == "FORMULA") {
                    if (value.empty()) throw ParseError(line, "empty FORMULA");
                    d.formulas.emplace_back(value);
                } else {
                    if (value == "true" || value == "True") d.show_epistemic = true;
                    else if (value == "false" || value == "False") d.show_epistemic = false;
                    else throw ParseError(line, "SHOW_EPISTEMIC expects true or false");
                }
                continue;
            }
            if (kw == "PROTOCOL") {
                if (!current) throw ParseError(line, "PROTOCOL outside of an agent template");
                if (protocol_seen) throw ParseError(line, "second PROTOCOL line in template " + current->name);
                protocol_seen = true;
                current->protocol_groups = parse_protocol(value, line);
                continue;
            }
        }

        if (!current) throw ParseError(line, "unexpected line outside of an agent template: '" + joined + "'");
        if (l.rfind("init", 0) == 0 && l.size() > 4 && std::isspace(static_cast<unsigned char>(l[4])) &&
            l.find(':') == std::string_view::npos) {
            if (!current->init_state.empty()) throw ParseError(line, "second 'init' line in template " + current->name);
            current->init_state = expect_identifier(l.substr(4), line, "initial state");
            continue;
        }
        if (current->init_state.empty())
            throw ParseError(line, "missing 'init' line before transitions of template " + current->name);
        current->transitions.push_back(parse_transition(l, line));
    }
    close_block(raw.size());
    return spec;
}

// ── Printer ─────────────────────────────────────────────────────────────────

inline std::string update_value_to_string(const UpdateValue& v) {
    if (v.is_read) return "?" + v.var;
    if (v.literal_is_bool) return v.literal ? "true" : "false";
    return std::to_string(v.literal);
}

inline std::string transition_to_string(const TransitionSpec& t) {
    std::string out = t.shared ? "shared " : "";
    out += t.event_name + ": " + t.source;
    out += t.precondition ? " -[" + expr_to_string(*t.precondition) + "]> " : " -> ";
    out += t.target;
    if (!t.updates.empty()) {
        out += " [";
        for (std::size_t i = 0; i < t.updates.size(); ++i) {
            if (i) out += ", ";
            out += t.updates[i].var + "=" + update_value_to_string(t.updates[i].value);
        }
        out += "]";
    }
    return out;
}

inline std::string join_names(const std::vector<std::string>& names) {
    std::string out;
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (i) out += ", ";
        out += names[i];
    }
    return out;
}

/// Canonical text form; parse_model_file(print_model_spec(s)) == s.
inline std::string print_model_spec(const ModelSpec& spec) {
    std::ostringstream os;
    for (const auto& t : spec.templates) {
        os << "Agent " << t.name << "[" << t.count << "]:\n";
        os << "init " << t.init_state << "\n";
        for (const auto& tr : t.transitions) os << transition_to_string(tr) << "\n";
        if (!t.protocol_groups.empty()) {
            os << "PROTOCOL: [";
            for (std::size_t i = 0; i < t.protocol_groups.size(); ++i) {
                if (i) os << ", ";
                os << "[" << join_names(t.protocol_groups[i]) << "]";
            }
            os << "]\n";
        }
        os << "\n";
    }
    const auto& d = spec.directives;
    if (!d.persistent.empty()) os << "PERSISTENT: [" << join_names(d.persistent) << "]\n";
    if (!d.reduction.empty()) os << "REDUCTION: [" << join_names(d.reduction) << "]\n";
    for (const auto& f : d.formulas) os << "FORMULA: " << f << "\n";
    if (d.show_epistemic) os << "SHOW_EPISTEMIC: true\n";
    return os.str();
}

}  // namespace amasv
