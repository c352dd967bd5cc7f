#include <algorithm>
#include <array>
#include <cctype>
#include <utility>

#include "flowlatin/error.hpp"
#include "flowlatin/script.hpp"

namespace flowlatin::script {

namespace {

constexpr std::array<std::pair<std::string_view, TokenKind>, 14> kKeywords{{
    {"LOAD", TokenKind::Load},
    {"AS", TokenKind::As},
    {"FILTER", TokenKind::Filter},
    {"BY", TokenKind::By},
    {"FOREACH", TokenKind::Foreach},
    {"GENERATE", TokenKind::Generate},
    {"GROUP", TokenKind::Group},
    {"JOIN", TokenKind::Join},
    {"ORDER", TokenKind::Order},
    {"STORE", TokenKind::Store},
    {"INTO", TokenKind::Into},
    {"AND", TokenKind::And},
    {"OR", TokenKind::Or},
    {"DESC", TokenKind::Desc},
}};

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }
bool digit(char c) { return c >= '0' && c <= '9'; }

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    while (true) {
      skip_blank();
      if (at_end()) return out;
      out.push_back(next());
    }
  }

 private:
  bool at_end() const { return pos_ >= src_.size(); }
  char peek(std::size_t ahead = 0) const {
    return pos_ + ahead < src_.size() ? src_[pos_ + ahead] : '\0';
  }
  char advance() {
    char c = src_[pos_++];
    if (c == '\n') {
      ++line_;
      column_ = 1;
    } else {
      ++column_;
    }
    return c;
  }

  void skip_blank() {
    while (!at_end()) {
      char c = peek();
      if (c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\f' || c == '\v') {
        advance();
      } else if (c == '-' && peek(1) == '-') {
        while (!at_end() && peek() != '\n') advance();
      } else {
        return;
      }
    }
  }

  Token make(TokenKind kind, std::string text, std::size_t line, std::size_t col) {
    return Token{kind, std::move(text), line, col};
  }

  Token next() {
    const std::size_t line = line_;
    const std::size_t col = column_;
    char c = peek();

    if (ident_start(c)) {
      std::string word;
      while (!at_end() && ident_char(peek())) word += advance();
      std::string upper = word;
      std::transform(upper.begin(), upper.end(), upper.begin(),
                     [](unsigned char ch) { return static_cast<char>(std::toupper(ch)); });
      for (const auto& [kw, kind] : kKeywords) {
        if (upper == kw) return make(kind, word, line, col);
      }
      return make(TokenKind::Ident, word, line, col);
    }

    if (digit(c) || (c == '.' && digit(peek(1)))) return number(line, col);

    if (c == '\'') return string_literal(line, col);

    advance();
    switch (c) {
      case '=':
        if (peek() == '=') {
          advance();
          return make(TokenKind::EqEq, "==", line, col);
        }
        return make(TokenKind::Assign, "=", line, col);
      case '!':
        if (peek() == '=') {
          advance();
          return make(TokenKind::NotEq, "!=", line, col);
        }
        throw LexError(line, col, "unexpected '!'");
      case '<':
        if (peek() == '=') {
          advance();
          return make(TokenKind::Le, "<=", line, col);
        }
        return make(TokenKind::Lt, "<", line, col);
      case '>':
        if (peek() == '=') {
          advance();
          return make(TokenKind::Ge, ">=", line, col);
        }
        return make(TokenKind::Gt, ">", line, col);
      case ':':
        if (peek() == ':') {
          advance();
          return make(TokenKind::DoubleColon, "::", line, col);
        }
        return make(TokenKind::Colon, ":", line, col);
      case '(': return make(TokenKind::LParen, "(", line, col);
      case ')': return make(TokenKind::RParen, ")", line, col);
      case ',': return make(TokenKind::Comma, ",", line, col);
      case ';': return make(TokenKind::Semicolon, ";", line, col);
      case '.': return make(TokenKind::Dot, ".", line, col);
      case '+': return make(TokenKind::Plus, "+", line, col);
      case '-': return make(TokenKind::Minus, "-", line, col);
      case '*': return make(TokenKind::Star, "*", line, col);
      case '/': return make(TokenKind::Slash, "/", line, col);
      default: break;
    }
    throw LexError(line, col, std::string("unexpected character '") + c + "'");
  }

  Token number(std::size_t line, std::size_t col) {
    std::string text;
    bool is_float = false;
    while (!at_end() && digit(peek())) text += advance();
    if (peek() == '.' && digit(peek(1))) {
      is_float = true;
      text += advance();
      while (!at_end() && digit(peek())) text += advance();
    }
    if (text.front() == '.') text.insert(text.begin(), '0');
    if (peek() == 'e' || peek() == 'E') {
      std::size_t save_pos = pos_, save_col = column_;
      std::string exp(1, advance());
      if (peek() == '+' || peek() == '-') exp += advance();
      if (digit(peek())) {
        while (!at_end() && digit(peek())) exp += advance();
        text += exp;
        is_float = true;
      } else {
        pos_ = save_pos;
        column_ = save_col;
      }
    }
    if (!at_end() && ident_start(peek())) {
      throw LexError(line_, column_, "malformed number '" + text + peek() + "'");
    }
    return make(is_float ? TokenKind::Float : TokenKind::Integer, text, line, col);
  }

  Token string_literal(std::size_t line, std::size_t col) {
    advance();  // opening quote
    std::string value;
    while (true) {
      if (at_end()) throw LexError(line, col, "unterminated string literal");
      char c = advance();
      if (c == '\'') break;
      if (c == '\\') {
        if (at_end()) throw LexError(line, col, "unterminated string literal");
        char e = advance();
        switch (e) {
          case 'n': value += '\n'; break;
          case 't': value += '\t'; break;
          case 'r': value += '\r'; break;
          default: value += e; break;
        }
        continue;
      }
      value += c;
    }
    return make(TokenKind::String, std::move(value), line, col);
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::size_t column_ = 1;
};

}  // namespace

std::string_view token_kind_name(TokenKind kind) {
  switch (kind) {
    case TokenKind::Ident: return "identifier";
    case TokenKind::String: return "string";
    case TokenKind::Integer: return "integer";
    case TokenKind::Float: return "float";
    case TokenKind::Load: return "LOAD";
    case TokenKind::As: return "AS";
    case TokenKind::Filter: return "FILTER";
    case TokenKind::By: return "BY";
    case TokenKind::Foreach: return "FOREACH";
    case TokenKind::Generate: return "GENERATE";
    case TokenKind::Group: return "GROUP";
    case TokenKind::Join: return "JOIN";
    case TokenKind::Order: return "ORDER";
    case TokenKind::Store: return "STORE";
    case TokenKind::Into: return "INTO";
    case TokenKind::And: return "AND";
    case TokenKind::Or: return "OR";
    case TokenKind::Desc: return "DESC";
    case TokenKind::Assign: return "'='";
    case TokenKind::LParen: return "'('";
    case TokenKind::RParen: return "')'";
    case TokenKind::Comma: return "','";
    case TokenKind::Semicolon: return "';'";
    case TokenKind::Colon: return "':'";
    case TokenKind::DoubleColon: return "'::'";
    case TokenKind::Dot: return "'.'";
    case TokenKind::Plus: return "'+'";
    case TokenKind::Minus: return "'-'";
    case TokenKind::Star: return "'*'";
    case TokenKind::Slash: return "'/'";
    case TokenKind::EqEq: return "'=='";
    case TokenKind::NotEq: return "'!='";
    case TokenKind::Lt: return "'<'";
    case TokenKind::Le: return "'<='";
    case TokenKind::Gt: return "'>'";
    case TokenKind::Ge: return "'>='";
  }
  return "?";
}

std::vector<Token> tokenize_script(std::string_view source) { return Lexer(source).run(); }

}  // namespace flowlatin::script
