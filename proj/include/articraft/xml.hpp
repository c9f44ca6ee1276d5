#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <articraft/error.hpp>

// Minimal XML tree, sized for URDF documents. The writer emits a stable
// two-space-indented serialization with attributes in insertion order; the
// reader is non-validating and understands elements, attributes, text,
// comments, the XML declaration, and the five predefined entities.

namespace articraft::xml {

struct Node {
    std::string name;
    std::vector<std::pair<std::string, std::string>> attrs;
    std::vector<Node> children;
    std::string text;

    Node& child(std::string tag) {
        children.push_back(Node{std::move(tag), {}, {}, {}});
        return children.back();
    }

    Node& attr(std::string key, std::string value) {
        attrs.emplace_back(std::move(key), std::move(value));
        return *this;
    }

    const Node* find(std::string_view tag) const {
        for (const Node& c : children)
            if (c.name == tag) return &c;
        return nullptr;
    }

    std::vector<const Node*> all(std::string_view tag) const {
        std::vector<const Node*> out;
        for (const Node& c : children)
            if (c.name == tag) out.push_back(&c);
        return out;
    }

    const std::string* find_attr(std::string_view key) const {
        for (const auto& [k, v] : attrs)
            if (k == key) return &v;
        return nullptr;
    }

    std::string attr_or(std::string_view key, std::string fallback) const {
        const std::string* v = find_attr(key);
        return v ? *v : std::move(fallback);
    }
};

namespace detail {

inline void escape_into(std::string& out, std::string_view raw, bool in_attribute) {
    for (char c : raw) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"':
                if (in_attribute)
                    out += "&quot;";
                else
                    out += c;
                break;
            default: out += c;
        }
    }
}

inline void serialize_node(std::string& out, const Node& n, int depth) {
    out.append(static_cast<std::size_t>(depth) * 2, ' ');
    out += '<';
    out += n.name;
    for (const auto& [k, v] : n.attrs) {
        out += ' ';
        out += k;
        out += "=\"";
        escape_into(out, v, true);
        out += '"';
    }
    if (n.children.empty() && n.text.empty()) {
        out += "/>\n";
        return;
    }
    out += '>';
    if (n.children.empty()) {
        escape_into(out, n.text, false);
    } else {
        out += '\n';
        for (const Node& c : n.children) serialize_node(out, c, depth + 1);
        out.append(static_cast<std::size_t>(depth) * 2, ' ');
    }
    out += "</";
    out += n.name;
    out += ">\n";
}

}  // namespace detail

inline std::string serialize(const Node& root) {
    std::string out = "<?xml version=\"1.0\"?>\n";
    detail::serialize_node(out, root, 0);
    return out;
}

namespace detail {

class Reader {
  public:
    explicit Reader(std::string_view text) : text_(text) {}

    Node parse_document() {
        skip_misc();
        if (eof()) fail("document has no root element");
        Node root = parse_element();
        skip_misc();
        if (!eof()) fail("trailing content after the root element");
        return root;
    }

  private:
    std::string_view text_;
    std::size_t pos_ = 0;
    int line_ = 1;

    [[noreturn]] void fail(const std::string& message) const {
        throw Error("parse_error", "line " + std::to_string(line_) + ": " + message);
    }

    bool eof() const { return pos_ >= text_.size(); }
    char peek(std::size_t ahead = 0) const {
        return pos_ + ahead < text_.size() ? text_[pos_ + ahead] : '\0';
    }

    char advance() {
        char c = text_[pos_++];
        if (c == '\n') ++line_;
        return c;
    }

    bool consume(std::string_view lit) {
        if (text_.substr(pos_, lit.size()) != lit) return false;
        for (std::size_t i = 0; i < lit.size(); ++i) advance();
        return true;
    }

    void skip_ws() {
        while (!eof() && (peek() == ' ' || peek() == '\t' || peek() == '\r' || peek() == '\n'))
            advance();
    }

    // Whitespace, comments, and processing instructions between elements.
    void skip_misc() {
        for (;;) {
            skip_ws();
            if (consume("<!--")) {
                while (!eof() && !consume("-->")) advance();
                continue;
            }
            if (peek() == '<' && peek(1) == '?') {
                while (!eof() && !consume("?>")) advance();
                continue;
            }
            return;
        }
    }

    static bool name_char(char c) {
        return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
               c == '_' || c == '-' || c == ':' || c == '.';
    }

    std::string parse_name() {
        std::string out;
        while (!eof() && name_char(peek())) out += advance();
        if (out.empty()) fail("expected a name");
        return out;
    }

    void decode_entity(std::string& out) {
        std::string ent;
        while (!eof() && peek() != ';' && ent.size() < 8) ent += advance();
        if (!consume(";")) fail("unterminated entity reference");
        if (ent == "amp")
            out += '&';
        else if (ent == "lt")
            out += '<';
        else if (ent == "gt")
            out += '>';
        else if (ent == "quot")
            out += '"';
        else if (ent == "apos")
            out += '\'';
        else
            fail("unknown entity '&" + ent + ";'");
    }

    std::string parse_attr_value() {
        if (peek() != '"' && peek() != '\'') fail("expected a quoted attribute value");
        char quote = advance();
        std::string out;
        while (!eof() && peek() != quote) {
            if (peek() == '&') {
                advance();
                decode_entity(out);
            } else {
                out += advance();
            }
        }
        if (!consume(std::string_view(&quote, 1))) fail("unterminated attribute value");
        return out;
    }

    Node parse_element() {
        if (!consume("<")) fail("expected '<'");
        Node node;
        node.name = parse_name();
        for (;;) {
            skip_ws();
            if (consume("/>")) return node;
            if (consume(">")) break;
            std::string key = parse_name();
            skip_ws();
            if (!consume("=")) fail("expected '=' after attribute name");
            skip_ws();
            node.attrs.emplace_back(std::move(key), parse_attr_value());
        }
        // Content: child elements and text until the matching close tag.
        std::string text;
        for (;;) {
            if (eof()) fail("unterminated element <" + node.name + ">");
            if (consume("<!--")) {
                while (!eof() && !consume("-->")) advance();
                continue;
            }
            if (peek() == '<' && peek(1) == '/') {
                advance();
                advance();
                std::string closing = parse_name();
                if (closing != node.name)
                    fail("mismatched close tag </" + closing + "> for <" + node.name + ">");
                skip_ws();
                if (!consume(">")) fail("expected '>' in close tag");
                break;
            }
            if (peek() == '<') {
                node.children.push_back(parse_element());
                continue;
            }
            if (peek() == '&') {
                advance();
                decode_entity(text);
                continue;
            }
            text += advance();
        }
        // Trim surrounding whitespace; URDF has no meaningful mixed content.
        std::size_t a = text.find_first_not_of(" \t\r\n");
        if (a == std::string::npos) return node;
        std::size_t b = text.find_last_not_of(" \t\r\n");
        node.text = text.substr(a, b - a + 1);
        return node;
    }
};

}  // namespace detail

inline Node parse(std::string_view text) { return detail::Reader(text).parse_document(); }

}  // namespace articraft::xml
