#pragma once

#include <cctype>
#include <charconv>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "sones/error.hpp"

namespace sones::toml {

/// Parses the TOML subset used by scenario files into a JSON object:
/// comments, [table], [a.b], [[array.of.tables]], dotted and quoted keys, basic strings,
/// integers, floats, booleans, (multi-line, nested) arrays and inline tables.
class Parser {
 public:
  explicit Parser(std::string_view text) : s_(text) {}

  nlohmann::json parse() {
    nlohmann::json root = nlohmann::json::object();
    nlohmann::json* current = &root;
    while (true) {
      skip_blank_lines();
      if (eof()) break;
      if (peek() == '[') {
        const bool array_table = pos_ + 1 < s_.size() && s_[pos_ + 1] == '[';
        pos_ += array_table ? 2 : 1;
        skip_space();
        std::vector<std::string> path = parse_key_path();
        skip_space();
        expect(']');
        if (array_table) expect(']');
        end_of_line();
        current = array_table ? &open_array_table(root, path) : &open_table(root, path);
      } else {
        parse_key_value(*current);
        end_of_line();
      }
    }
    return root;
  }

 private:
  bool eof() const { return pos_ >= s_.size(); }
  char peek() const { return eof() ? '\0' : s_[pos_]; }

  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, line_); }

  void expect(char c) {
    if (peek() != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  void skip_space() {
    while (!eof() && (peek() == ' ' || peek() == '\t')) ++pos_;
  }

  void skip_comment() {
    if (peek() == '#')
      while (!eof() && peek() != '\n') ++pos_;
  }

  void newline() {
    if (peek() == '\r') ++pos_;
    if (peek() == '\n') {
      ++pos_;
      ++line_;
    }
  }

  void skip_blank_lines() {
    while (!eof()) {
      skip_space();
      skip_comment();
      if (peek() == '\n' || peek() == '\r')
        newline();
      else
        break;
    }
  }

  // Whitespace, comments and newlines, as allowed inside arrays.
  void skip_ws_multiline() { skip_blank_lines(); }

  void end_of_line() {
    skip_space();
    skip_comment();
    if (eof()) return;
    if (peek() != '\n' && peek() != '\r') fail("unexpected text after value");
    newline();
  }

  static bool bare_key_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
  }

  std::string parse_key() {
    if (peek() == '"') return parse_string();
    const std::size_t start = pos_;
    while (!eof() && bare_key_char(peek())) ++pos_;
    if (pos_ == start) fail("expected a key");
    return std::string(s_.substr(start, pos_ - start));
  }

  std::vector<std::string> parse_key_path() {
    std::vector<std::string> path{parse_key()};
    skip_space();
    while (peek() == '.') {
      ++pos_;
      skip_space();
      path.push_back(parse_key());
      skip_space();
    }
    return path;
  }

  void parse_key_value(nlohmann::json& table) {
    std::vector<std::string> path = parse_key_path();
    skip_space();
    expect('=');
    skip_space();
    nlohmann::json* target = &table;
    for (std::size_t i = 0; i + 1 < path.size(); ++i) {
      nlohmann::json& next = (*target)[path[i]];
      if (next.is_null()) next = nlohmann::json::object();
      if (!next.is_object()) fail("key '" + path[i] + "' is not a table");
      target = &next;
    }
    if (target->contains(path.back())) fail("duplicate key '" + path.back() + "'");
    (*target)[path.back()] = parse_value();
  }

  nlohmann::json parse_value() {
    const char c = peek();
    if (c == '"') return parse_string();
    if (c == '[') return parse_array();
    if (c == '{') return parse_inline_table();
    if (s_.substr(pos_, 4) == "true") {
      pos_ += 4;
      return true;
    }
    if (s_.substr(pos_, 5) == "false") {
      pos_ += 5;
      return false;
    }
    return parse_number();
  }

  std::string parse_string() {
    expect('"');
    std::string out;
    while (true) {
      if (eof() || peek() == '\n') fail("unterminated string");
      char c = s_[pos_++];
      if (c == '"') break;
      if (c == '\\') {
        if (eof()) fail("unterminated escape");
        const char e = s_[pos_++];
        switch (e) {
          case 'n': out += '\n'; break;
          case 't': out += '\t'; break;
          case 'r': out += '\r'; break;
          case '"': out += '"'; break;
          case '\\': out += '\\'; break;
          default: fail(std::string("unsupported escape \\") + e);
        }
      } else {
        out += c;
      }
    }
    return out;
  }

  nlohmann::json parse_number() {
    const std::size_t start = pos_;
    while (!eof() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '+' || peek() == '-' ||
                      peek() == '.' || peek() == '_'))
      ++pos_;
    std::string tok;
    for (char c : s_.substr(start, pos_ - start))
      if (c != '_') tok += c;
    if (tok.empty()) fail("expected a value");
    const char* first = tok.data() + (tok[0] == '+' ? 1 : 0);
    const char* last = tok.data() + tok.size();
    const bool is_float = tok.find_first_of(".eE") != std::string::npos || tok == "inf" || tok == "nan";
    if (!is_float) {
      std::int64_t v = 0;
      auto [p, ec] = std::from_chars(first, last, v);
      if (ec == std::errc() && p == last) return v;
    } else {
      double v = 0.0;
      auto [p, ec] = std::from_chars(first, last, v);
      if (ec == std::errc() && p == last) return v;
    }
    fail("invalid value '" + tok + "'");
  }

  nlohmann::json parse_array() {
    expect('[');
    nlohmann::json arr = nlohmann::json::array();
    skip_ws_multiline();
    while (peek() != ']') {
      if (eof()) fail("unterminated array");
      arr.push_back(parse_value());
      skip_ws_multiline();
      if (peek() == ',') {
        ++pos_;
        skip_ws_multiline();
      } else if (peek() != ']') {
        fail("expected ',' or ']' in array");
      }
    }
    ++pos_;
    return arr;
  }

  nlohmann::json parse_inline_table() {
    expect('{');
    nlohmann::json table = nlohmann::json::object();
    skip_space();
    while (peek() != '}') {
      parse_key_value(table);
      skip_space();
      if (peek() == ',') {
        ++pos_;
        skip_space();
      } else if (peek() != '}') {
        fail("expected ',' or '}' in inline table");
      }
    }
    ++pos_;
    return table;
  }

  nlohmann::json& descend(nlohmann::json& root, const std::vector<std::string>& path, std::size_t count) {
    nlohmann::json* node = &root;
    for (std::size_t i = 0; i < count; ++i) {
      nlohmann::json& next = (*node)[path[i]];
      if (next.is_null()) next = nlohmann::json::object();
      if (next.is_array() && !next.empty() && next.back().is_object())
        node = &next.back();
      else if (next.is_object())
        node = &next;
      else
        fail("key '" + path[i] + "' is not a table");
    }
    return *node;
  }

  nlohmann::json& open_table(nlohmann::json& root, const std::vector<std::string>& path) {
    nlohmann::json& parent = descend(root, path, path.size() - 1);
    nlohmann::json& t = parent[path.back()];
    if (t.is_null()) t = nlohmann::json::object();
    if (!t.is_object()) fail("table '" + path.back() + "' redefines a value");
    return t;
  }

  nlohmann::json& open_array_table(nlohmann::json& root, const std::vector<std::string>& path) {
    nlohmann::json& parent = descend(root, path, path.size() - 1);
    nlohmann::json& arr = parent[path.back()];
    if (arr.is_null()) arr = nlohmann::json::array();
    if (!arr.is_array()) fail("'" + path.back() + "' is not an array of tables");
    arr.push_back(nlohmann::json::object());
    return arr.back();
  }

  std::string_view s_;
  std::size_t pos_ = 0;
  int line_ = 1;
};

inline nlohmann::json parse(std::string_view text) { return Parser(text).parse(); }

}  // namespace sones::toml
