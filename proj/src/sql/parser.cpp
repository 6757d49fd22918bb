#include <algorithm>
#include <cctype>
#include <charconv>

#include "common.hpp"
#include "sql/ast.hpp"

namespace snel {

namespace {

enum class Tok : uint8_t {
    End, Ident, Integer, Decimal, String,
    Comma, Dot, Star, LParen, RParen, Semi, Minus,
    Lt, Le, Gt, Ge, Eq, Ne,
};

struct Token {
    Tok kind = Tok::End;
    std::string text;
    int line = 1;
    int column = 1;
};

const char* tok_name(Tok k) {
    switch (k) {
        case Tok::End: return "end of input";
        case Tok::Ident: return "identifier";
        case Tok::Integer: return "integer";
        case Tok::Decimal: return "number";
        case Tok::String: return "string";
        case Tok::Comma: return "','";
        case Tok::Dot: return "'.'";
        case Tok::Star: return "'*'";
        case Tok::LParen: return "'('";
        case Tok::RParen: return "')'";
        case Tok::Semi: return "';'";
        case Tok::Minus: return "'-'";
        case Tok::Lt: return "'<'";
        case Tok::Le: return "'<='";
        case Tok::Gt: return "'>'";
        case Tok::Ge: return "'>='";
        case Tok::Eq: return "'='";
        case Tok::Ne: return "'!='";
    }
    return "?";
}

std::string upper(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return std::toupper(c); });
    return s;
}

// Words that cannot be used as bare column names or aliases.
bool reserved_word(const std::string& up) {
    static const char* words[] = {"SELECT", "DISTINCT", "FROM",    "WHERE", "GROUP",
                                  "BY",     "HAVING",   "ORDER",   "LIMIT", "OFFSET",
                                  "AND",    "OR",       "NOT",     "IN",    "BETWEEN",
                                  "AS",     "ASC",      "DESC",    "UNION", "ALL",
                                  "NULL"};
    for (const char* w : words)
        if (up == w) return true;
    return false;
}

std::vector<Token> lex(const std::string& sql) {
    std::vector<Token> out;
    int line = 1, col = 1;
    std::size_t i = 0;
    auto advance = [&](std::size_t n) {
        for (std::size_t k = 0; k < n; ++k) {
            if (sql[i + k] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        i += n;
    };
    while (i < sql.size()) {
        char c = sql[i];
        if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
            advance(1);
            continue;
        }
        if (c == '-' && i + 1 < sql.size() && sql[i + 1] == '-') {  // comment to end of line
            while (i < sql.size() && sql[i] != '\n') advance(1);
            continue;
        }
        Token t;
        t.line = line;
        t.column = col;
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t n = 1;
            while (i + n < sql.size() &&
                   (std::isalnum(static_cast<unsigned char>(sql[i + n])) || sql[i + n] == '_'))
                ++n;
            t.kind = Tok::Ident;
            t.text = sql.substr(i, n);
            advance(n);
        } else if (std::isdigit(static_cast<unsigned char>(c)) ||
                   (c == '.' && i + 1 < sql.size() &&
                    std::isdigit(static_cast<unsigned char>(sql[i + 1])))) {
            std::size_t n = 0;
            bool decimal = false;
            while (i + n < sql.size() && std::isdigit(static_cast<unsigned char>(sql[i + n]))) ++n;
            if (i + n < sql.size() && sql[i + n] == '.') {
                decimal = true;
                ++n;
                while (i + n < sql.size() && std::isdigit(static_cast<unsigned char>(sql[i + n])))
                    ++n;
            }
            if (i + n < sql.size() && (sql[i + n] == 'e' || sql[i + n] == 'E')) {
                std::size_t e = n + 1;
                if (i + e < sql.size() && (sql[i + e] == '+' || sql[i + e] == '-')) ++e;
                if (i + e < sql.size() && std::isdigit(static_cast<unsigned char>(sql[i + e]))) {
                    decimal = true;
                    n = e;
                    while (i + n < sql.size() &&
                           std::isdigit(static_cast<unsigned char>(sql[i + n])))
                        ++n;
                }
            }
            t.kind = decimal ? Tok::Decimal : Tok::Integer;
            t.text = sql.substr(i, n);
            advance(n);
        } else if (c == '\'') {
            std::string value;
            std::size_t n = 1;
            for (;;) {
                if (i + n >= sql.size())
                    throw SyntaxError("unterminated string literal", t.line, t.column);
                if (sql[i + n] == '\'') {
                    if (i + n + 1 < sql.size() && sql[i + n + 1] == '\'') {
                        value += '\'';
                        n += 2;
                        continue;
                    }
                    ++n;
                    break;
                }
                value += sql[i + n];
                ++n;
            }
            t.kind = Tok::String;
            t.text = std::move(value);
            advance(n);
        } else {
            switch (c) {
                case ',': t.kind = Tok::Comma; advance(1); break;
                case '.': t.kind = Tok::Dot; advance(1); break;
                case '*': t.kind = Tok::Star; advance(1); break;
                case '(': t.kind = Tok::LParen; advance(1); break;
                case ')': t.kind = Tok::RParen; advance(1); break;
                case ';': t.kind = Tok::Semi; advance(1); break;
                case '-': t.kind = Tok::Minus; advance(1); break;
                case '=': t.kind = Tok::Eq; advance(1); break;
                case '!':
                    if (i + 1 < sql.size() && sql[i + 1] == '=') {
                        t.kind = Tok::Ne;
                        advance(2);
                    } else {
                        throw SyntaxError("unexpected character '!'", line, col);
                    }
                    break;
                case '<':
                    if (i + 1 < sql.size() && sql[i + 1] == '=') {
                        t.kind = Tok::Le;
                        advance(2);
                    } else if (i + 1 < sql.size() && sql[i + 1] == '>') {
                        t.kind = Tok::Ne;
                        advance(2);
                    } else {
                        t.kind = Tok::Lt;
                        advance(1);
                    }
                    break;
                case '>':
                    if (i + 1 < sql.size() && sql[i + 1] == '=') {
                        t.kind = Tok::Ge;
                        advance(2);
                    } else {
                        t.kind = Tok::Gt;
                        advance(1);
                    }
                    break;
                default:
                    throw SyntaxError(std::string("unexpected character '") + c + "'", line, col);
            }
        }
        out.push_back(std::move(t));
    }
    Token end;
    end.kind = Tok::End;
    end.line = line;
    end.column = col;
    out.push_back(std::move(end));
    return out;
}

class Parser {
public:
    explicit Parser(const std::string& sql) : tokens_(lex(sql)) {}

    AstSelect parse_statement() {
        AstSelect select = parse_select();
        accept(Tok::Semi);
        expect(Tok::End, "end of statement");
        return select;
    }

private:
    const Token& peek(std::size_t n = 0) const {
        std::size_t idx = std::min(pos_ + n, tokens_.size() - 1);
        return tokens_[idx];
    }
    Token take() { return tokens_[std::min(pos_++, tokens_.size() - 1)]; }

    [[noreturn]] void fail(const std::string& expected) const {
        const Token& t = peek();
        std::string got = t.kind == Tok::Ident ? "'" + t.text + "'" : tok_name(t.kind);
        throw SyntaxError("expected " + expected + ", got " + got, t.line, t.column);
    }
    bool accept(Tok kind) {
        if (peek().kind != kind) return false;
        ++pos_;
        return true;
    }
    Token expect(Tok kind, const std::string& what) {
        if (peek().kind != kind) fail(what);
        return take();
    }
    bool at_kw(const char* kw) const {
        return peek().kind == Tok::Ident && upper(peek().text) == kw;
    }
    bool accept_kw(const char* kw) {
        if (!at_kw(kw)) return false;
        ++pos_;
        return true;
    }
    void expect_kw(const char* kw) {
        if (!accept_kw(kw)) fail(std::string("'") + kw + "'");
    }
    Span span() const { return {peek().line, peek().column}; }

    std::string expect_name(const std::string& what) {
        if (peek().kind != Tok::Ident || reserved_word(upper(peek().text))) fail(what);
        return take().text;
    }

    uint64_t expect_uint(const std::string& what) {
        Token t = expect(Tok::Integer, what);
        uint64_t v = 0;
        auto [p, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
        if (ec != std::errc() || p != t.text.data() + t.text.size())
            throw SyntaxError("integer literal out of range", t.line, t.column);
        return v;
    }

    AstSelect parse_select() {
        AstSelect s;
        s.span = span();
        expect_kw("SELECT");
        s.distinct = accept_kw("DISTINCT");
        s.items.push_back(parse_select_item());
        while (accept(Tok::Comma)) s.items.push_back(parse_select_item());
        expect_kw("FROM");
        s.from_spans.push_back(span());
        s.from.push_back(expect_name("table name"));
        while (accept(Tok::Comma)) {
            s.from_spans.push_back(span());
            s.from.push_back(expect_name("table name"));
        }
        if (accept_kw("WHERE")) s.where = parse_condition();
        if (accept_kw("GROUP")) {
            expect_kw("BY");
            s.group_by.push_back(parse_expr());
            while (accept(Tok::Comma)) s.group_by.push_back(parse_expr());
        }
        if (accept_kw("HAVING")) s.having = parse_condition();
        if (accept_kw("ORDER")) {
            expect_kw("BY");
            do {
                AstOrderItem item;
                item.expr = parse_expr();
                if (accept_kw("DESC"))
                    item.desc = true;
                else
                    accept_kw("ASC");
                s.order_by.push_back(std::move(item));
            } while (accept(Tok::Comma));
        }
        if (accept_kw("LIMIT")) {
            s.limit = expect_uint("row count after LIMIT");
            if (accept_kw("OFFSET")) s.offset = expect_uint("row count after OFFSET");
        }
        if (at_kw("UNION")) {
            ++pos_;
            accept_kw("ALL");
            s.union_next = std::make_shared<AstSelect>(parse_select());
        }
        return s;
    }

    AstExpr parse_select_item() {
        if (peek().kind == Tok::Star) {
            AstExpr e;
            e.kind = AstExpr::Kind::Star;
            e.span = span();
            ++pos_;
            return e;
        }
        AstExpr e = parse_expr();
        if (accept_kw("AS")) {
            e.alias = expect_name("alias after AS");
        } else if (peek().kind == Tok::Ident && !reserved_word(upper(peek().text))) {
            e.alias = take().text;
        }
        return e;
    }

    AstExpr parse_expr() {
        AstExpr e;
        e.span = span();
        const Token& t = peek();
        switch (t.kind) {
            case Tok::Integer: {
                Token lit = take();
                uint64_t v = 0;
                auto [p, ec] = std::from_chars(lit.text.data(), lit.text.data() + lit.text.size(), v);
                if (ec != std::errc() || p != lit.text.data() + lit.text.size() ||
                    v > static_cast<uint64_t>(INT64_MAX))
                    throw SyntaxError("integer literal out of range", lit.line, lit.column);
                e.kind = AstExpr::Kind::Literal;
                e.literal = Value::int64(static_cast<int64_t>(v));
                return e;
            }
            case Tok::Decimal: {
                Token lit = take();
                float f = 0.0f;
                auto [p, ec] = std::from_chars(lit.text.data(), lit.text.data() + lit.text.size(), f);
                if (ec != std::errc() || p != lit.text.data() + lit.text.size())
                    throw SyntaxError("malformed numeric literal", lit.line, lit.column);
                e.kind = AstExpr::Kind::Literal;
                e.literal = Value::float32(f);
                return e;
            }
            case Tok::String: {
                Token lit = take();
                e.kind = AstExpr::Kind::Literal;
                e.literal = Value::string(lit.text);
                return e;
            }
            case Tok::Minus: {
                ++pos_;
                if (peek().kind == Tok::Integer) {
                    Token lit = take();
                    uint64_t v = 0;
                    auto [p, ec] =
                        std::from_chars(lit.text.data(), lit.text.data() + lit.text.size(), v);
                    if (ec != std::errc() || p != lit.text.data() + lit.text.size() ||
                        v > static_cast<uint64_t>(INT64_MAX) + 1)
                        throw SyntaxError("integer literal out of range", lit.line, lit.column);
                    e.kind = AstExpr::Kind::Literal;
                    e.literal = Value::int64(static_cast<int64_t>(0 - v));
                    return e;
                }
                if (peek().kind == Tok::Decimal) {
                    Token lit = take();
                    float f = 0.0f;
                    auto [p, ec] =
                        std::from_chars(lit.text.data(), lit.text.data() + lit.text.size(), f);
                    if (ec != std::errc() || p != lit.text.data() + lit.text.size())
                        throw SyntaxError("malformed numeric literal", lit.line, lit.column);
                    e.kind = AstExpr::Kind::Literal;
                    e.literal = Value::float32(-f);
                    return e;
                }
                fail("numeric literal after '-'");
            }
            case Tok::LParen: {
                if (peek(1).kind == Tok::Ident && upper(peek(1).text) == "SELECT") {
                    ++pos_;
                    e.kind = AstExpr::Kind::Subquery;
                    e.subquery = std::make_shared<AstSelect>(parse_select());
                    expect(Tok::RParen, "')' after subquery");
                    return e;
                }
                fail("expression");
            }
            case Tok::Ident: {
                if (upper(t.text) == "NULL") {
                    ++pos_;
                    e.kind = AstExpr::Kind::Literal;
                    e.literal = Value::null();
                    return e;
                }
                if (reserved_word(upper(t.text))) fail("expression");
                Token name = take();
                if (peek().kind == Tok::LParen) {
                    ++pos_;
                    e.kind = AstExpr::Kind::Call;
                    e.fn = upper(name.text);
                    if (peek().kind == Tok::Star) {
                        AstExpr star;
                        star.kind = AstExpr::Kind::Star;
                        star.span = span();
                        ++pos_;
                        e.args.push_back(std::move(star));
                    } else if (peek().kind != Tok::RParen) {
                        e.distinct_arg = accept_kw("DISTINCT");
                        e.args.push_back(parse_expr());
                        while (accept(Tok::Comma)) e.args.push_back(parse_expr());
                    }
                    expect(Tok::RParen, "')' after function arguments");
                    return e;
                }
                e.kind = AstExpr::Kind::Column;
                if (accept(Tok::Dot)) {
                    e.table = name.text;
                    e.column = expect_name("column name after '.'");
                } else {
                    e.column = name.text;
                }
                return e;
            }
            default: fail("expression");
        }
    }

    AstCondition parse_condition() { return parse_or(); }

    AstCondition parse_or() {
        AstCondition first = parse_and();
        if (!at_kw("OR")) return first;
        AstCondition node;
        node.kind = AstCondition::Kind::Or;
        node.span = first.span;
        node.children.push_back(std::move(first));
        while (accept_kw("OR")) node.children.push_back(parse_and());
        return node;
    }

    AstCondition parse_and() {
        AstCondition first = parse_not();
        if (!at_kw("AND")) return first;
        AstCondition node;
        node.kind = AstCondition::Kind::And;
        node.span = first.span;
        node.children.push_back(std::move(first));
        while (accept_kw("AND")) node.children.push_back(parse_not());
        return node;
    }

    AstCondition parse_not() {
        if (at_kw("NOT")) {
            AstCondition node;
            node.kind = AstCondition::Kind::Not;
            node.span = span();
            ++pos_;
            node.children.push_back(parse_not());
            return node;
        }
        return parse_condition_primary();
    }

    AstCondition parse_condition_primary() {
        if (peek().kind == Tok::LParen &&
            !(peek(1).kind == Tok::Ident && upper(peek(1).text) == "SELECT")) {
            ++pos_;
            AstCondition inner = parse_condition();
            expect(Tok::RParen, "')'");
            return inner;
        }
        return parse_predicate();
    }

    AstCondition parse_predicate() {
        AstCondition c;
        c.span = span();
        AstExpr lhs = parse_expr();
        bool negated = accept_kw("NOT");
        if (accept_kw("BETWEEN")) {
            AstExpr lo = parse_expr();
            expect_kw("AND");
            AstExpr hi = parse_expr();
            // x BETWEEN a AND b is sugar for x >= a AND x <= b.
            AstCondition ge, le;
            ge.kind = le.kind = AstCondition::Kind::Compare;
            ge.span = le.span = c.span;
            ge.op = CmpOp::Ge;
            ge.exprs = {lhs, std::move(lo)};
            le.op = CmpOp::Le;
            le.exprs = {std::move(lhs), std::move(hi)};
            c.kind = AstCondition::Kind::And;
            c.children.push_back(std::move(ge));
            c.children.push_back(std::move(le));
            return negated ? negate(std::move(c)) : std::move(c);
        }
        if (accept_kw("IN")) {
            expect(Tok::LParen, "'(' after IN");
            c.kind = AstCondition::Kind::In;
            c.exprs.push_back(std::move(lhs));
            if (!at_kw("SELECT")) fail("subquery after IN");
            c.subquery = std::make_shared<AstSelect>(parse_select());
            expect(Tok::RParen, "')' after subquery");
            return negated ? negate(std::move(c)) : std::move(c);
        }
        if (negated) fail("BETWEEN or IN after NOT");
        c.kind = AstCondition::Kind::Compare;
        switch (peek().kind) {
            case Tok::Lt: c.op = CmpOp::Lt; break;
            case Tok::Le: c.op = CmpOp::Le; break;
            case Tok::Gt: c.op = CmpOp::Gt; break;
            case Tok::Ge: c.op = CmpOp::Ge; break;
            case Tok::Eq: c.op = CmpOp::Eq; break;
            case Tok::Ne: c.op = CmpOp::Ne; break;
            default: fail("comparison operator");
        }
        ++pos_;
        c.exprs.push_back(std::move(lhs));
        c.exprs.push_back(parse_expr());
        return c;
    }

    static AstCondition negate(AstCondition inner) {
        AstCondition node;
        node.kind = AstCondition::Kind::Not;
        node.span = inner.span;
        node.children.push_back(std::move(inner));
        return node;
    }

    std::vector<Token> tokens_;
    std::size_t pos_ = 0;
};

}  // namespace

AstSelect parse_select(const std::string& sql) { return Parser(sql).parse_statement(); }

}  // namespace snel
