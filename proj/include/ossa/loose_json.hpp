#pragma once

// A forgiving reader for the JSON-like text language models produce:
// single-quoted strings, unquoted keys and values, trailing commas, comments
// and Python-style literals. Objects keep duplicate keys so callers can
// account for every member.

#include <cctype>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ossa/error.hpp"

namespace ossa {

struct LooseMember;

struct LooseValue {
  enum class Kind { null, boolean, number, string, array, object };

  Kind kind = Kind::null;
  bool boolean = false;
  bool bare = false;  // unquoted scalar
  std::string text;   // string contents or number spelling
  std::vector<LooseValue> items;
  std::vector<LooseMember> members;
  std::size_t begin = 0;  // offsets into the parsed text
  std::size_t end = 0;

  bool is_object() const { return kind == Kind::object; }
  bool is_array() const { return kind == Kind::array; }
  bool is_string() const { return kind == Kind::string; }
};

struct LooseMember {
  std::string key;
  LooseValue value;
};

namespace detail {

class LooseParser {
 public:
  explicit LooseParser(std::string_view text) : s_(text) {}

  LooseValue parse_document() {
    skip_ws();
    if (pos_ >= s_.size()) fail("empty block");
    LooseValue v = parse_value(0);
    skip_ws();
    while (pos_ < s_.size() && (s_[pos_] == ',' || s_[pos_] == ';')) {
      ++pos_;
      skip_ws();
    }
    if (pos_ < s_.size()) fail("unexpected trailing content");
    return v;
  }

 private:
  static constexpr int kMaxDepth = 64;

  [[noreturn]] void fail(const std::string& what) const {
    throw Error(ErrorCode::malformed_block, what + " at offset " + std::to_string(pos_));
  }

  void skip_ws() {
    while (pos_ < s_.size()) {
      char c = s_[pos_];
      if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else if (c == '/' && pos_ + 1 < s_.size() && s_[pos_ + 1] == '/') {
        while (pos_ < s_.size() && s_[pos_] != '\n') ++pos_;
      } else if (c == '/' && pos_ + 1 < s_.size() && s_[pos_ + 1] == '*') {
        auto close = s_.find("*/", pos_ + 2);
        if (close == std::string_view::npos) fail("unterminated comment");
        pos_ = close + 2;
      } else {
        break;
      }
    }
  }

  LooseValue parse_value(int depth) {
    if (depth > kMaxDepth) fail("nesting too deep");
    skip_ws();
    if (pos_ >= s_.size()) fail("unexpected end of block");
    char c = s_[pos_];
    if (c == '{') return parse_object(depth);
    if (c == '[') return parse_array(depth);
    if (c == '"' || c == '\'') {
      LooseValue v;
      v.kind = LooseValue::Kind::string;
      v.begin = pos_;
      v.text = parse_string();
      v.end = pos_;
      return v;
    }
    if (c == '}' || c == ']' || c == ',' || c == ':') fail(std::string("unexpected '") + c + "'");
    return parse_bare();
  }

  LooseValue parse_object(int depth) {
    LooseValue v;
    v.kind = LooseValue::Kind::object;
    v.begin = pos_++;
    for (;;) {
      skip_ws();
      if (pos_ >= s_.size()) fail("unterminated object");
      if (s_[pos_] == '}') {
        ++pos_;
        break;
      }
      std::string key = parse_key();
      skip_ws();
      if (pos_ >= s_.size() || s_[pos_] != ':') fail("expected ':' after key '" + key + "'");
      ++pos_;
      LooseValue member = parse_value(depth + 1);
      v.members.push_back({std::move(key), std::move(member)});
      skip_ws();
      if (pos_ >= s_.size()) fail("unterminated object");
      if (s_[pos_] == ',') {
        ++pos_;
      } else if (s_[pos_] != '}') {
        fail("expected ',' or '}'");
      }
    }
    v.end = pos_;
    return v;
  }

  LooseValue parse_array(int depth) {
    LooseValue v;
    v.kind = LooseValue::Kind::array;
    v.begin = pos_++;
    for (;;) {
      skip_ws();
      if (pos_ >= s_.size()) fail("unterminated array");
      if (s_[pos_] == ']') {
        ++pos_;
        break;
      }
      v.items.push_back(parse_value(depth + 1));
      skip_ws();
      if (pos_ >= s_.size()) fail("unterminated array");
      if (s_[pos_] == ',') {
        ++pos_;
      } else if (s_[pos_] != ']') {
        fail("expected ',' or ']'");
      }
    }
    v.end = pos_;
    return v;
  }

  std::string parse_key() {
    char c = s_[pos_];
    if (c == '"' || c == '\'') return parse_string();
    std::size_t start = pos_;
    while (pos_ < s_.size() && s_[pos_] != ':' && s_[pos_] != '\n' && s_[pos_] != '{' && s_[pos_] != '}' &&
           s_[pos_] != ',' && s_[pos_] != '[' && s_[pos_] != ']')
      ++pos_;
    std::string key(trim(s_.substr(start, pos_ - start)));
    if (key.empty()) fail("expected a key");
    return key;
  }

  std::string parse_string() {
    char quote = s_[pos_++];
    std::string out;
    while (pos_ < s_.size()) {
      char c = s_[pos_++];
      if (c == quote) return out;
      if (c != '\\') {
        out.push_back(c);
        continue;
      }
      if (pos_ >= s_.size()) break;
      char e = s_[pos_++];
      switch (e) {
        case 'n': out.push_back('\n'); break;
        case 't': out.push_back('\t'); break;
        case 'r': out.push_back('\r'); break;
        case 'b': out.push_back('\b'); break;
        case 'f': out.push_back('\f'); break;
        case 'u': append_utf8(out, parse_hex4()); break;
        default: out.push_back(e); break;
      }
    }
    fail("unterminated string");
  }

  std::uint32_t parse_hex4() {
    if (pos_ + 4 > s_.size()) fail("truncated \\u escape");
    std::uint32_t cp = 0;
    for (int i = 0; i < 4; ++i) {
      char h = s_[pos_++];
      cp <<= 4;
      if (h >= '0' && h <= '9') cp |= static_cast<std::uint32_t>(h - '0');
      else if (h >= 'a' && h <= 'f') cp |= static_cast<std::uint32_t>(h - 'a' + 10);
      else if (h >= 'A' && h <= 'F') cp |= static_cast<std::uint32_t>(h - 'A' + 10);
      else fail("bad \\u escape");
    }
    return cp;
  }

  static void append_utf8(std::string& out, std::uint32_t cp) {
    if (cp < 0x80) {
      out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
      out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
      out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
  }

  LooseValue parse_bare() {
    LooseValue v;
    v.begin = pos_;
    while (pos_ < s_.size() && s_[pos_] != ',' && s_[pos_] != '}' && s_[pos_] != ']' && s_[pos_] != '\n') ++pos_;
    v.end = pos_;
    std::string word(trim(s_.substr(v.begin, pos_ - v.begin)));
    if (word == "true" || word == "True") {
      v.kind = LooseValue::Kind::boolean;
      v.boolean = true;
    } else if (word == "false" || word == "False") {
      v.kind = LooseValue::Kind::boolean;
    } else if (word == "null" || word == "None") {
      v.kind = LooseValue::Kind::null;
    } else if (looks_numeric(word)) {
      v.kind = LooseValue::Kind::number;
      v.text = word;
    } else {
      v.kind = LooseValue::Kind::string;
      v.bare = true;
      v.text = word;
    }
    return v;
  }

  static bool looks_numeric(std::string_view w) {
    if (w.empty()) return false;
    std::size_t i = (w[0] == '-' || w[0] == '+') ? 1 : 0;
    bool digit = false;
    for (; i < w.size(); ++i) {
      char c = w[i];
      if (std::isdigit(static_cast<unsigned char>(c))) digit = true;
      else if (c != '.' && c != 'e' && c != 'E' && c != '-' && c != '+') return false;
    }
    return digit;
  }

  static std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline LooseValue parse_loose(std::string_view text) { return detail::LooseParser(text).parse_document(); }

}  // namespace ossa
