#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "articraft/apl/lexer.hpp"

namespace articraft::apl {

struct Expr;
using ExprPtr = std::unique_ptr<Expr>;

struct Arg {
    std::string name;  // empty for positional
    ExprPtr value;
    SourceLoc loc;
};

struct Expr {
    enum class Kind { Number, String, Ident, List, Unary, Binary, Call, Index };
    Kind kind;
    SourceLoc loc;

    double number = 0.0;
    std::string text;            // string value, identifier, callee, or operator
    std::vector<ExprPtr> items;  // list elements; unary/binary operands; [base, index]
    std::vector<Arg> args;       // call arguments
};

struct Stmt {
    enum class Kind { Let, Call, Repeat };
    Kind kind;
    SourceLoc loc;

    std::string name;  // let target or repeat variable
    ExprPtr expr;      // let value or the call expression
    long lo = 0, hi = 0;
    std::vector<Stmt> body;
};

struct TStmt {
    enum class Kind { Call, Pose };
    Kind kind;
    SourceLoc loc;

    ExprPtr call;
    std::vector<std::pair<std::string, ExprPtr>> bindings;  // pose joint: expr
    std::vector<TStmt> body;
};

struct Program {
    std::vector<Stmt> build;
    bool has_tests = false;
    std::vector<TStmt> tests;
};

}  // namespace articraft::apl
