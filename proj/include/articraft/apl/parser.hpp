#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "articraft/apl/ast.hpp"
#include "articraft/apl/lexer.hpp"

namespace articraft::apl {

struct Diagnostic {
    std::string kind;  // "syntax_error"
    std::string message;
    SourceLoc loc;
};

struct ParseResult {
    std::optional<Program> program;
    std::vector<Diagnostic> diagnostics;
    bool ok() const { return program.has_value(); }
};

// Recursive-descent parser over the grammar documented in docs/grammar.md.
// Stops at the first fault; the diagnostic carries the exact line/column.
class Parser {
  public:
    explicit Parser(std::vector<Token> tokens) : tokens_(std::move(tokens)) {}

    Program parse_program() {
        Program prog;
        if (at_ident("tests")) fail("tests block must come after the build block", cur().loc);
        expect_ident("build", "expected 'build' block");
        expect_punct("{");
        while (!is_punct("}")) prog.build.push_back(parse_stmt());
        expect_punct("}");
        if (at_ident("build")) fail("duplicate build block", cur().loc);
        if (at_ident("tests")) {
            prog.has_tests = true;
            next();
            expect_punct("{");
            while (!is_punct("}")) prog.tests.push_back(parse_tstmt());
            expect_punct("}");
        }
        if (cur().kind != Token::Kind::End) fail("unexpected trailing input", cur().loc);
        return prog;
    }

    // Probe queries are a single bare expression.
    ExprPtr parse_expression_only() {
        ExprPtr e = parse_expr();
        if (cur().kind != Token::Kind::End) fail("unexpected trailing input", cur().loc);
        return e;
    }

  private:
    std::vector<Token> tokens_;
    std::size_t pos_ = 0;

    const Token& cur() const { return tokens_[pos_]; }
    const Token& next() { return tokens_[pos_ == tokens_.size() - 1 ? pos_ : pos_++]; }

    [[noreturn]] void fail(const std::string& message, SourceLoc at) { throw SyntaxError{message, at}; }

    bool is_punct(const char* p) const { return cur().kind == Token::Kind::Punct && cur().text == p; }
    bool at_ident(const char* name) const {
        return cur().kind == Token::Kind::Ident && cur().text == name;
    }

    void expect_punct(const char* p) {
        if (!is_punct(p)) fail(std::string("expected '") + p + "'", cur().loc);
        next();
    }

    void expect_ident(const char* name, const char* message) {
        if (!at_ident(name)) fail(message, cur().loc);
        next();
    }

    std::string expect_name(const char* what) {
        if (cur().kind != Token::Kind::Ident) fail(std::string("expected ") + what, cur().loc);
        return next().text;
    }

    Stmt parse_stmt() {
        Stmt s;
        s.loc = cur().loc;
        if (at_ident("let")) {
            next();
            s.kind = Stmt::Kind::Let;
            s.name = expect_name("identifier after 'let'");
            expect_punct("=");
            s.expr = parse_expr();
            expect_punct(";");
            return s;
        }
        if (at_ident("repeat")) {
            next();
            s.kind = Stmt::Kind::Repeat;
            s.name = expect_name("loop variable");
            expect_ident("in", "expected 'in'");
            s.lo = parse_int_literal();
            expect_punct("..");
            s.hi = parse_int_literal();
            expect_punct("{");
            while (!is_punct("}")) s.body.push_back(parse_stmt());
            expect_punct("}");
            return s;
        }
        s.kind = Stmt::Kind::Call;
        s.expr = parse_call_expr();
        expect_punct(";");
        return s;
    }

    long parse_int_literal() {
        if (cur().kind != Token::Kind::Number || !cur().is_integer)
            fail("repeat bounds must be integer literals", cur().loc);
        return static_cast<long>(next().number);
    }

    TStmt parse_tstmt() {
        TStmt t;
        t.loc = cur().loc;
        if (at_ident("pose")) {
            next();
            t.kind = TStmt::Kind::Pose;
            expect_punct("{");
            while (!is_punct("}")) {
                std::string joint = expect_name("joint name");
                expect_punct(":");
                t.bindings.emplace_back(joint, parse_expr());
                if (is_punct(",")) next();
                else break;
            }
            expect_punct("}");
            expect_punct("{");
            while (!is_punct("}")) t.body.push_back(parse_tstmt());
            expect_punct("}");
            return t;
        }
        t.kind = TStmt::Kind::Call;
        t.call = parse_call_expr();
        expect_punct(";");
        return t;
    }

    ExprPtr parse_call_expr() {
        if (cur().kind != Token::Kind::Ident) fail("expected a call", cur().loc);
        ExprPtr e = parse_postfix();
        if (e->kind != Expr::Kind::Call) fail("expected a call statement", e->loc);
        return e;
    }

    ExprPtr make(Expr::Kind kind, SourceLoc loc) {
        auto e = std::make_unique<Expr>();
        e->kind = kind;
        e->loc = loc;
        return e;
    }

    ExprPtr parse_expr() { return parse_or(); }

    ExprPtr parse_or() {
        ExprPtr left = parse_and();
        while (is_punct("||")) {
            SourceLoc loc = next().loc;
            ExprPtr node = make(Expr::Kind::Binary, loc);
            node->text = "||";
            node->items.push_back(std::move(left));
            node->items.push_back(parse_and());
            left = std::move(node);
        }
        return left;
    }

    ExprPtr parse_and() {
        ExprPtr left = parse_cmp();
        while (is_punct("&&")) {
            SourceLoc loc = next().loc;
            ExprPtr node = make(Expr::Kind::Binary, loc);
            node->text = "&&";
            node->items.push_back(std::move(left));
            node->items.push_back(parse_cmp());
            left = std::move(node);
        }
        return left;
    }

    ExprPtr parse_cmp() {
        ExprPtr left = parse_add();
        while (is_punct("==") || is_punct("!=") || is_punct("<") || is_punct(">") || is_punct("<=") ||
               is_punct(">=")) {
            Token op = next();
            ExprPtr node = make(Expr::Kind::Binary, op.loc);
            node->text = op.text;
            node->items.push_back(std::move(left));
            node->items.push_back(parse_add());
            left = std::move(node);
        }
        return left;
    }

    ExprPtr parse_add() {
        ExprPtr left = parse_mul();
        while (is_punct("+") || is_punct("-")) {
            Token op = next();
            ExprPtr node = make(Expr::Kind::Binary, op.loc);
            node->text = op.text;
            node->items.push_back(std::move(left));
            node->items.push_back(parse_mul());
            left = std::move(node);
        }
        return left;
    }

    ExprPtr parse_mul() {
        ExprPtr left = parse_unary();
        while (is_punct("*") || is_punct("/")) {
            Token op = next();
            ExprPtr node = make(Expr::Kind::Binary, op.loc);
            node->text = op.text;
            node->items.push_back(std::move(left));
            node->items.push_back(parse_unary());
            left = std::move(node);
        }
        return left;
    }

    ExprPtr parse_unary() {
        if (is_punct("-") || is_punct("!")) {
            Token op = next();
            ExprPtr node = make(Expr::Kind::Unary, op.loc);
            node->text = op.text;
            node->items.push_back(parse_unary());
            return node;
        }
        return parse_postfix();
    }

    ExprPtr parse_postfix() {
        ExprPtr e = parse_primary();
        while (is_punct("[")) {
            SourceLoc loc = next().loc;
            ExprPtr node = make(Expr::Kind::Index, loc);
            node->items.push_back(std::move(e));
            node->items.push_back(parse_expr());
            expect_punct("]");
            e = std::move(node);
        }
        return e;
    }

    ExprPtr parse_primary() {
        const Token& t = cur();
        switch (t.kind) {
            case Token::Kind::Number: {
                ExprPtr e = make(Expr::Kind::Number, t.loc);
                e->number = next().number;
                return e;
            }
            case Token::Kind::String: {
                ExprPtr e = make(Expr::Kind::String, t.loc);
                e->text = next().text;
                return e;
            }
            case Token::Kind::Ident: {
                SourceLoc loc = t.loc;
                std::string name = next().text;
                if (is_punct("(")) {
                    next();
                    ExprPtr call = make(Expr::Kind::Call, loc);
                    call->text = name;
                    bool named_seen = false;
                    while (!is_punct(")")) {
                        Arg arg;
                        arg.loc = cur().loc;
                        // IDENT "=" expr is a named argument; plain IDENT is a value.
                        if (cur().kind == Token::Kind::Ident && pos_ + 1 < tokens_.size() &&
                            tokens_[pos_ + 1].kind == Token::Kind::Punct && tokens_[pos_ + 1].text == "=") {
                            arg.name = next().text;
                            next();  // '='
                            named_seen = true;
                        } else if (named_seen) {
                            fail("positional argument after named argument", cur().loc);
                        }
                        arg.value = parse_expr();
                        call->args.push_back(std::move(arg));
                        if (is_punct(",")) next();
                        else break;
                    }
                    expect_punct(")");
                    return call;
                }
                ExprPtr e = make(Expr::Kind::Ident, loc);
                e->text = name;
                return e;
            }
            case Token::Kind::Punct:
                if (t.text == "(") {
                    next();
                    ExprPtr e = parse_expr();
                    expect_punct(")");
                    return e;
                }
                if (t.text == "[") {
                    SourceLoc loc = next().loc;
                    ExprPtr e = make(Expr::Kind::List, loc);
                    while (!is_punct("]")) {
                        e->items.push_back(parse_expr());
                        if (is_punct(",")) next();
                        else break;
                    }
                    expect_punct("]");
                    return e;
                }
                break;
            case Token::Kind::End:
                break;
        }
        fail("expected an expression", t.loc);
    }
};

inline ParseResult parse_program(const std::string& source) {
    ParseResult result;
    try {
        Parser parser(Lexer(source).run());
        result.program = parser.parse_program();
    } catch (const SyntaxError& e) {
        result.diagnostics.push_back({"syntax_error", e.message, e.loc});
    }
    return result;
}

inline ExprPtr parse_expression(const std::string& source) {
    Parser parser(Lexer(source).run());
    return parser.parse_expression_only();
}

}  // namespace articraft::apl
