#pragma once

// Arithmetic expressions in the variables t and x, used to define scalar
// coefficients in config files.
//
//   expr   := term (('+'|'-') term)*
//   term   := factor (('*'|'/') factor)*
//   factor := '-' factor | power
//   power  := atom ('^' factor)?          right-associative; binds above '-'
//   atom   := number | 't' | 'x' | func '(' expr ')' | '(' expr ')'
//   func   := exp | sin | cos | sqrt | abs | erf
//
// "-x^2" parses as -(x^2). Both ASCII '-' and U+2212 are accepted as minus.
// Errors carry the byte offset into the source string.

#include "gcalc/common.hpp"

#include <charconv>
#include <cstring>
#include <memory>
#include <string>
#include <string_view>

namespace gcalc::expr {

class ParseError : public Error {
public:
    ParseError(const std::string& msg, std::size_t offset)
        : Error(msg + " at offset " + std::to_string(offset)), offset_(offset) {}
    std::size_t offset() const { return offset_; }

private:
    std::size_t offset_;
};

class EvalError : public Error {
public:
    EvalError(const std::string& msg, std::size_t offset)
        : Error(msg + " at offset " + std::to_string(offset)), offset_(offset) {}
    std::size_t offset() const { return offset_; }

private:
    std::size_t offset_;
};

enum class NodeKind { Number, VarT, VarX, Neg, Add, Sub, Mul, Div, Pow, Call };
enum class Func { Exp, Sin, Cos, Sqrt, Abs, Erf };

struct Node {
    NodeKind kind;
    double number = 0.0;          // Number
    Func func = Func::Exp;        // Call
    std::size_t offset = 0;       // byte offset of the token that made this node
    std::unique_ptr<Node> lhs, rhs;
};

/// Parsed expression; immutable, cheap to copy.
class Ast {
public:
    Ast() = default;
    explicit Ast(std::shared_ptr<const Node> root) : root_(std::move(root)) {}
    const Node* root() const { return root_.get(); }
    explicit operator bool() const { return root_ != nullptr; }

private:
    std::shared_ptr<const Node> root_;
};

namespace detail {

enum class Tok { Num, Ident, Plus, Minus, Star, Slash, Caret, LParen, RParen, End };

struct Token {
    Tok kind;
    std::size_t offset;
    double number = 0.0;
    std::string_view ident;
};

class Lexer {
public:
    explicit Lexer(std::string_view src) : src_(src) {}

    Token next() {
        while (pos_ < src_.size() && is_space(src_[pos_])) ++pos_;
        std::size_t at = pos_;
        if (pos_ >= src_.size()) return {Tok::End, at};

        char c = src_[pos_];
        if (c == '+') { ++pos_; return {Tok::Plus, at}; }
        if (c == '-') { ++pos_; return {Tok::Minus, at}; }
        if (minus_u2212()) { pos_ += 3; return {Tok::Minus, at}; }
        if (c == '*') { ++pos_; return {Tok::Star, at}; }
        if (c == '/') { ++pos_; return {Tok::Slash, at}; }
        if (c == '^') { ++pos_; return {Tok::Caret, at}; }
        if (c == '(') { ++pos_; return {Tok::LParen, at}; }
        if (c == ')') { ++pos_; return {Tok::RParen, at}; }

        if (is_digit(c) || (c == '.' && pos_ + 1 < src_.size() && is_digit(src_[pos_ + 1]))) {
            double value = 0.0;
            const char* first = src_.data() + pos_;
            const char* last = src_.data() + src_.size();
            auto [end, ec] = std::from_chars(first, last, value);
            if (ec != std::errc())
                throw ParseError("invalid number", at);
            pos_ += static_cast<std::size_t>(end - first);
            Token tok{Tok::Num, at};
            tok.number = value;
            return tok;
        }
        if (is_alpha(c)) {
            std::size_t end = pos_;
            while (end < src_.size() && (is_alpha(src_[end]) || is_digit(src_[end]))) ++end;
            Token tok{Tok::Ident, at};
            tok.ident = src_.substr(pos_, end - pos_);
            pos_ = end;
            return tok;
        }
        throw ParseError(std::string("unexpected character '") + c + "'", at);
    }

private:
    bool minus_u2212() const {
        return pos_ + 2 < src_.size() && static_cast<unsigned char>(src_[pos_]) == 0xE2 &&
               static_cast<unsigned char>(src_[pos_ + 1]) == 0x88 &&
               static_cast<unsigned char>(src_[pos_ + 2]) == 0x92;
    }
    static bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }
    static bool is_digit(char c) { return c >= '0' && c <= '9'; }
    static bool is_alpha(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_'; }

    std::string_view src_;
    std::size_t pos_ = 0;
};

class Parser {
public:
    explicit Parser(std::string_view src) : lex_(src) { advance(); }

    std::unique_ptr<Node> parse() {
        auto node = expr();
        if (cur_.kind != Tok::End) throw ParseError("trailing tokens", cur_.offset);
        return node;
    }

private:
    void advance() { cur_ = lex_.next(); }

    std::unique_ptr<Node> make(NodeKind k, std::size_t at) {
        auto n = std::make_unique<Node>();
        n->kind = k;
        n->offset = at;
        return n;
    }

    std::unique_ptr<Node> expr() {
        auto lhs = term();
        while (cur_.kind == Tok::Plus || cur_.kind == Tok::Minus) {
            auto node = make(cur_.kind == Tok::Plus ? NodeKind::Add : NodeKind::Sub, cur_.offset);
            advance();
            node->lhs = std::move(lhs);
            node->rhs = term();
            lhs = std::move(node);
        }
        return lhs;
    }

    std::unique_ptr<Node> term() {
        auto lhs = factor();
        while (cur_.kind == Tok::Star || cur_.kind == Tok::Slash) {
            auto node = make(cur_.kind == Tok::Star ? NodeKind::Mul : NodeKind::Div, cur_.offset);
            advance();
            node->lhs = std::move(lhs);
            node->rhs = factor();
            lhs = std::move(node);
        }
        return lhs;
    }

    std::unique_ptr<Node> factor() {
        if (cur_.kind == Tok::Minus) {
            auto node = make(NodeKind::Neg, cur_.offset);
            advance();
            node->lhs = factor();
            return node;
        }
        return power();
    }

    std::unique_ptr<Node> power() {
        auto base = atom();
        if (cur_.kind == Tok::Caret) {
            auto node = make(NodeKind::Pow, cur_.offset);
            advance();
            node->lhs = std::move(base);
            node->rhs = factor();  // right-associative, allows 2^-3
            return node;
        }
        return base;
    }

    std::unique_ptr<Node> atom() {
        switch (cur_.kind) {
        case Tok::Num: {
            auto node = make(NodeKind::Number, cur_.offset);
            node->number = cur_.number;
            advance();
            return node;
        }
        case Tok::Ident: {
            std::string_view name = cur_.ident;
            std::size_t at = cur_.offset;
            advance();
            if (name == "t") return make(NodeKind::VarT, at);
            if (name == "x") return make(NodeKind::VarX, at);
            Func f;
            if (name == "exp") f = Func::Exp;
            else if (name == "sin") f = Func::Sin;
            else if (name == "cos") f = Func::Cos;
            else if (name == "sqrt") f = Func::Sqrt;
            else if (name == "abs") f = Func::Abs;
            else if (name == "erf") f = Func::Erf;
            else throw ParseError("unknown identifier '" + std::string(name) + "'", at);
            if (cur_.kind != Tok::LParen) throw ParseError("expected '(' after function name", cur_.offset);
            advance();
            auto node = make(NodeKind::Call, at);
            node->func = f;
            node->lhs = expr();
            if (cur_.kind != Tok::RParen) throw ParseError("unbalanced parenthesis", cur_.offset);
            advance();
            return node;
        }
        case Tok::LParen: {
            advance();
            auto inner = expr();
            if (cur_.kind != Tok::RParen) throw ParseError("unbalanced parenthesis", cur_.offset);
            advance();
            return inner;
        }
        case Tok::RParen:
            throw ParseError("unbalanced parenthesis", cur_.offset);
        default:
            throw ParseError("expected expression", cur_.offset);
        }
    }

    Lexer lex_;
    Token cur_{Tok::End, 0};
};

inline double eval_node(const Node* n, double t, double x) {
    switch (n->kind) {
    case NodeKind::Number: return n->number;
    case NodeKind::VarT: return t;
    case NodeKind::VarX: return x;
    case NodeKind::Neg: return -eval_node(n->lhs.get(), t, x);
    case NodeKind::Add: return eval_node(n->lhs.get(), t, x) + eval_node(n->rhs.get(), t, x);
    case NodeKind::Sub: return eval_node(n->lhs.get(), t, x) - eval_node(n->rhs.get(), t, x);
    case NodeKind::Mul: return eval_node(n->lhs.get(), t, x) * eval_node(n->rhs.get(), t, x);
    case NodeKind::Div: {
        double num = eval_node(n->lhs.get(), t, x);
        double den = eval_node(n->rhs.get(), t, x);
        if (den == 0.0) throw EvalError("division by zero", n->offset);
        return num / den;
    }
    case NodeKind::Pow: {
        double base = eval_node(n->lhs.get(), t, x);
        double expo = eval_node(n->rhs.get(), t, x);
        double v = std::pow(base, expo);
        if (std::isnan(v)) throw EvalError("invalid power", n->offset);
        return v;
    }
    case NodeKind::Call: {
        double a = eval_node(n->lhs.get(), t, x);
        switch (n->func) {
        case Func::Exp: return std::exp(a);
        case Func::Sin: return std::sin(a);
        case Func::Cos: return std::cos(a);
        case Func::Sqrt:
            if (a < 0.0) throw EvalError("sqrt of negative value", n->offset);
            return std::sqrt(a);
        case Func::Abs: return std::abs(a);
        case Func::Erf: return std::erf(a);
        }
        throw EvalError("bad function", n->offset);
    }
    }
    throw EvalError("bad node", n->offset);
}

inline void print_node(const Node* n, std::string& out) {
    switch (n->kind) {
    case NodeKind::Number: out += fmt_g17(n->number); return;
    case NodeKind::VarT: out += 't'; return;
    case NodeKind::VarX: out += 'x'; return;
    case NodeKind::Neg:
        out += "(-";
        print_node(n->lhs.get(), out);
        out += ')';
        return;
    case NodeKind::Call: {
        static const char* names[] = {"exp", "sin", "cos", "sqrt", "abs", "erf"};
        out += names[static_cast<int>(n->func)];
        out += '(';
        print_node(n->lhs.get(), out);
        out += ')';
        return;
    }
    default: {
        const char* op = nullptr;
        switch (n->kind) {
        case NodeKind::Add: op = "+"; break;
        case NodeKind::Sub: op = "-"; break;
        case NodeKind::Mul: op = "*"; break;
        case NodeKind::Div: op = "/"; break;
        case NodeKind::Pow: op = "^"; break;
        default: break;
        }
        out += '(';
        print_node(n->lhs.get(), out);
        out += op;
        print_node(n->rhs.get(), out);
        out += ')';
        return;
    }
    }
}

} // namespace detail

/// Parse source into an AST; throws ParseError with a byte offset.
inline Ast parse(std::string_view src) {
    detail::Parser p(src);
    return Ast(std::shared_ptr<const Node>(p.parse().release()));
}

/// Evaluate at (t, x); division by zero and domain errors throw EvalError.
inline double eval(const Ast& ast, double t, double x) {
    if (!ast) throw Error("eval of empty expression");
    return detail::eval_node(ast.root(), t, x);
}

/// Fully parenthesized form; parse(to_string(a)) has the same structure as a.
inline std::string to_string(const Ast& ast) {
    if (!ast) return "";
    std::string out;
    detail::print_node(ast.root(), out);
    return out;
}

/// Structural equality (numbers compared bitwise).
inline bool equal(const Node* a, const Node* b) {
    if (a == b) return true;
    if (!a || !b || a->kind != b->kind) return false;
    if (a->kind == NodeKind::Number) {
        std::uint64_t ua, ub;
        std::memcpy(&ua, &a->number, 8);
        std::memcpy(&ub, &b->number, 8);
        return ua == ub;
    }
    if (a->kind == NodeKind::Call && a->func != b->func) return false;
    return equal(a->lhs.get(), b->lhs.get()) && equal(a->rhs.get(), b->rhs.get());
}

inline bool equal(const Ast& a, const Ast& b) { return equal(a.root(), b.root()); }

} // namespace gcalc::expr
