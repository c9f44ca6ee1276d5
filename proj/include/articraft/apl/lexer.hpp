#pragma once

#include <cctype>
#include <string>
#include <vector>

#include "articraft/error.hpp"

namespace articraft::apl {

struct SourceLoc {
    int line = 1;
    int column = 1;
};

// Parser/lexer faults carry a location and render as syntax_error diagnostics.
struct SyntaxError {
    std::string message;
    SourceLoc loc;
};

struct Token {
    enum class Kind { End, Ident, Number, String, Punct };
    Kind kind = Kind::End;
    std::string text;    // identifier name, punctuation, or string value
    double number = 0.0;
    bool is_integer = false;
    SourceLoc loc;
};

class Lexer {
  public:
    explicit Lexer(const std::string& source) : src_(source) {}

    std::vector<Token> run() {
        std::vector<Token> out;
        for (;;) {
            skip_trivia();
            Token t = next_token();
            bool done = t.kind == Token::Kind::End;
            out.push_back(std::move(t));
            if (done) return out;
        }
    }

  private:
    std::string src_;
    std::size_t pos_ = 0;
    SourceLoc loc_;

    [[noreturn]] void fail(const std::string& message, SourceLoc at) { throw SyntaxError{message, at}; }

    char peek(std::size_t ahead = 0) const {
        return pos_ + ahead < src_.size() ? src_[pos_ + ahead] : '\0';
    }

    char advance() {
        char c = src_[pos_++];
        if (c == '\n') {
            ++loc_.line;
            loc_.column = 1;
        } else {
            ++loc_.column;
        }
        return c;
    }

    void skip_trivia() {
        for (;;) {
            char c = peek();
            if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
                advance();
            } else if (c == '/' && peek(1) == '/') {
                while (peek() != '\n' && peek() != '\0') advance();
            } else {
                return;
            }
        }
    }

    Token next_token() {
        Token t;
        t.loc = loc_;
        char c = peek();
        if (c == '\0') return t;

        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            t.kind = Token::Kind::Ident;
            while (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_') t.text += advance();
            return t;
        }
        if (std::isdigit(static_cast<unsigned char>(c))) {
            t.kind = Token::Kind::Number;
            t.is_integer = true;
            while (std::isdigit(static_cast<unsigned char>(peek()))) t.text += advance();
            // A '.' starts a fraction only when not the '..' range operator.
            if (peek() == '.' && peek(1) != '.') {
                t.is_integer = false;
                t.text += advance();
                if (!std::isdigit(static_cast<unsigned char>(peek())))
                    fail("expected digits after decimal point", loc_);
                while (std::isdigit(static_cast<unsigned char>(peek()))) t.text += advance();
            }
            if (peek() == 'e' || peek() == 'E') {
                t.is_integer = false;
                t.text += advance();
                if (peek() == '+' || peek() == '-') t.text += advance();
                if (!std::isdigit(static_cast<unsigned char>(peek())))
                    fail("expected digits in exponent", loc_);
                while (std::isdigit(static_cast<unsigned char>(peek()))) t.text += advance();
            }
            t.number = std::strtod(t.text.c_str(), nullptr);
            return t;
        }
        if (c == '"') {
            t.kind = Token::Kind::String;
            advance();
            for (;;) {
                char d = peek();
                if (d == '\0' || d == '\n') fail("unterminated string literal", t.loc);
                advance();
                if (d == '"') return t;
                if (d == '\\') {
                    char e = peek();
                    if (e == '\0') fail("unterminated escape", t.loc);
                    advance();
                    switch (e) {
                        case 'n': t.text += '\n'; break;
                        case 't': t.text += '\t'; break;
                        case '"': t.text += '"'; break;
                        case '\\': t.text += '\\'; break;
                        default: fail(std::string("unknown escape \\") + e, t.loc);
                    }
                } else {
                    t.text += d;
                }
            }
        }

        t.kind = Token::Kind::Punct;
        auto two = [&](const char* op) {
            t.text = op;
            advance();
            advance();
        };
        char n = peek(1);
        if (c == '=' && n == '=') two("==");
        else if (c == '!' && n == '=') two("!=");
        else if (c == '<' && n == '=') two("<=");
        else if (c == '>' && n == '=') two(">=");
        else if (c == '&' && n == '&') two("&&");
        else if (c == '|' && n == '|') two("||");
        else if (c == '.' && n == '.') two("..");
        else if (std::string("(){}[],;:=+-*/<>!").find(c) != std::string::npos) {
            t.text = std::string(1, c);
            advance();
        } else {
            fail(std::string("unexpected character '") + c + "'", t.loc);
        }
        return t;
    }
};

}  // namespace articraft::apl
