#include "cohbench/dsl.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>
#include <tuple>

namespace cohbench::dsl {

namespace {

const std::set<std::string> kKeywords = {"bench",  "param", "node",
                                         "link",   "detector", "on"};

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }
bool digit(char c) { return std::isdigit(static_cast<unsigned char>(c)); }

}  // namespace

TokenizeResult tokenize(const BenchSource& src) {
  TokenizeResult out;
  const std::string& s = src.text;
  std::size_t i = 0;
  int line = 1, column = 1;

  auto advance = [&](std::size_t n) {
    for (std::size_t k = 0; k < n; ++k) {
      if (i < s.size() && s[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
      ++i;
    }
  };
  auto push = [&](TokenKind kind, std::string text, int l, int c,
                  double num = 0.0) {
    out.tokens.push_back({kind, std::move(text), num, l, c});
  };
  auto lex_number = [&](int l, int c) {
    const std::size_t start = i;
    if (s[i] == '-') advance(1);
    while (i < s.size() && digit(s[i])) advance(1);
    if (i < s.size() && s[i] == '.') {
      advance(1);
      while (i < s.size() && digit(s[i])) advance(1);
    }
    if (i < s.size() && (s[i] == 'e' || s[i] == 'E')) {
      std::size_t save = i;
      int save_line = line, save_col = column;
      advance(1);
      if (i < s.size() && (s[i] == '+' || s[i] == '-')) advance(1);
      if (i < s.size() && digit(s[i])) {
        while (i < s.size() && digit(s[i])) advance(1);
      } else {
        // Not an exponent after all; back off to before the 'e'.
        i = save;
        line = save_line;
        column = save_col;
      }
    }
    const std::string text = s.substr(start, i - start);
    push(TokenKind::Number, text, l, c, std::strtod(text.c_str(), nullptr));
  };

  while (i < s.size()) {
    const char c = s[i];
    const int l = line, col = column;
    if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
      advance(1);
      continue;
    }
    if (c == '#') {
      while (i < s.size() && s[i] != '\n') advance(1);
      continue;
    }
    if (ident_start(c)) {
      std::size_t start = i;
      while (i < s.size() && ident_char(s[i])) advance(1);
      std::string text = s.substr(start, i - start);
      push(kKeywords.count(text) ? TokenKind::Keyword : TokenKind::Ident,
           std::move(text), l, col);
      continue;
    }
    if (digit(c)) {
      lex_number(l, col);
      continue;
    }
    if (c == '-') {
      if (i + 1 < s.size() && s[i + 1] == '>') {
        advance(2);
        push(TokenKind::Arrow, "->", l, col);
      } else if (i + 1 < s.size() && digit(s[i + 1])) {
        lex_number(l, col);
      } else {
        advance(1);
        push(TokenKind::Minus, "-", l, col);
      }
      continue;
    }
    switch (c) {
      case ':': advance(1); push(TokenKind::Colon, ":", l, col); continue;
      case '(': advance(1); push(TokenKind::LParen, "(", l, col); continue;
      case ')': advance(1); push(TokenKind::RParen, ")", l, col); continue;
      case '=': advance(1); push(TokenKind::Equals, "=", l, col); continue;
      case ',': advance(1); push(TokenKind::Comma, ",", l, col); continue;
      case '.': advance(1); push(TokenKind::Dot, ".", l, col); continue;
      default: break;
    }
    out.diagnostics.push_back(
        {l, col, Severity::Error,
         std::string("illegal character '") + c + "'"});
    advance(1);
  }
  out.tokens.push_back({TokenKind::EndOfInput, "", 0.0, line, column});
  return out;
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

namespace {

class Parser {
 public:
  explicit Parser(const std::vector<Token>& tokens) : tokens_(tokens) {}

  ParseResult run() {
    header();
    while (!at_end()) {
      const Token& t = peek();
      if (t.kind == TokenKind::Keyword) {
        if (t.text == "param") { param_stmt(); continue; }
        if (t.text == "node") { node_stmt(); continue; }
        if (t.text == "link") { link_stmt(); continue; }
        if (t.text == "detector") { detector_stmt(); continue; }
      }
      error(t, "expected a statement (param, node, link or detector)");
      resync();
    }
    sync_reserved_params(result_.graph);
    return std::move(result_);
  }

 private:
  const Token& peek() const { return tokens_[pos_]; }
  const Token& take() { return tokens_[pos_ < tokens_.size() - 1 ? pos_++ : pos_]; }
  bool at_end() const { return peek().kind == TokenKind::EndOfInput; }

  void error(const Token& t, std::string msg) {
    result_.diagnostics.push_back(
        {t.line, t.column, Severity::Error, std::move(msg)});
  }

  // Skip to the next statement keyword so one mistake yields one message.
  void resync() {
    while (!at_end()) {
      const Token& t = peek();
      if (t.kind == TokenKind::Keyword && t.text != "on") return;
      take();
    }
  }

  bool expect(TokenKind kind, const char* what) {
    if (peek().kind == kind) {
      take();
      return true;
    }
    error(peek(), std::string("expected ") + what);
    return false;
  }

  std::string expect_ident(const char* what, bool* ok) {
    if (peek().kind == TokenKind::Ident) {
      *ok = true;
      return take().text;
    }
    error(peek(), std::string("expected ") + what);
    *ok = false;
    return {};
  }

  bool expect_number(double* value) {
    bool negate = false;
    if (peek().kind == TokenKind::Minus) {
      take();
      negate = true;
    }
    if (peek().kind != TokenKind::Number) {
      error(peek(), "expected a number");
      return false;
    }
    *value = take().number;
    if (negate) *value = -*value;
    return true;
  }

  void header() {
    if (peek().kind == TokenKind::Keyword && peek().text == "bench") {
      take();
      bool ok = false;
      const std::string name = expect_ident("bench name", &ok);
      if (ok) result_.graph.name = name;
    } else {
      error(peek(), "file must start with 'bench <name>'");
    }
  }

  void param_stmt() {
    take();  // param
    bool ok = false;
    const Token name_tok = peek();
    const std::string name = expect_ident("param name", &ok);
    if (!ok) { resync(); return; }
    if (!expect(TokenKind::Equals, "'='")) { resync(); return; }
    double value = 0.0;
    if (!expect_number(&value)) { resync(); return; }
    if (result_.graph.params_table.count(name)) {
      error(name_tok, "duplicate param '" + name + "'");
      return;
    }
    result_.graph.params_table[name] = value;
  }

  void node_stmt() {
    const int line = peek().line;
    take();  // node
    bool ok = false;
    const Token name_tok = peek();
    const std::string name = expect_ident("node name", &ok);
    if (!ok) { resync(); return; }
    if (!expect(TokenKind::Colon, "':'")) { resync(); return; }
    const Token kind_tok = peek();
    const std::string kind_name = expect_ident("element kind", &ok);
    if (!ok) { resync(); return; }
    const auto kind = element_kind_from_string(kind_name);
    if (!kind) {
      error(kind_tok, "unknown element kind '" + kind_name + "'");
      resync();
      return;
    }
    Element element;
    element.kind = *kind;
    element.line = line;
    if (!expect(TokenKind::LParen, "'('")) { resync(); return; }
    if (peek().kind != TokenKind::RParen) {
      while (true) {
        const Token key_tok = peek();
        const std::string key = expect_ident("kwarg name", &ok);
        if (!ok) { resync(); return; }
        if (!expect(TokenKind::Equals, "'='")) { resync(); return; }
        KwargValue value;
        if (peek().kind == TokenKind::Ident) {
          value = take().text;
        } else {
          double num = 0.0;
          if (!expect_number(&num)) { resync(); return; }
          value = num;
        }
        if (!element.kwargs.emplace(key, value).second) {
          error(key_tok, "duplicate kwarg '" + key + "'");
        }
        if (peek().kind == TokenKind::Comma) {
          take();
          continue;
        }
        break;
      }
    }
    if (!expect(TokenKind::RParen, "')'")) { resync(); return; }
    if (result_.graph.nodes.count(name)) {
      error(name_tok, "duplicate node name '" + name + "'");
      return;
    }
    result_.graph.nodes[name] = std::move(element);
  }

  bool port_ref(std::string* node, std::string* port) {
    bool ok = false;
    *node = expect_ident("node name", &ok);
    if (!ok) return false;
    if (!expect(TokenKind::Dot, "'.'")) return false;
    *port = expect_ident("port name", &ok);
    return ok;
  }

  void link_stmt() {
    const int line = peek().line;
    take();  // link
    Link l;
    l.line = line;
    if (!port_ref(&l.from_node, &l.from_port)) { resync(); return; }
    if (!expect(TokenKind::Arrow, "'->'")) { resync(); return; }
    if (!port_ref(&l.to_node, &l.to_port)) { resync(); return; }
    result_.graph.links.push_back(std::move(l));
  }

  void detector_stmt() {
    const int line = peek().line;
    take();  // detector
    bool ok = false;
    const Token name_tok = peek();
    const std::string name = expect_ident("detector name", &ok);
    if (!ok) { resync(); return; }
    if (!(peek().kind == TokenKind::Keyword && peek().text == "on")) {
      error(peek(), "expected 'on'");
      resync();
      return;
    }
    take();
    DetectorBinding det;
    det.line = line;
    if (!port_ref(&det.node, &det.port)) { resync(); return; }
    if (result_.graph.detectors.count(name)) {
      error(name_tok, "duplicate detector name '" + name + "'");
      return;
    }
    result_.graph.detectors[name] = std::move(det);
  }

  const std::vector<Token>& tokens_;
  std::size_t pos_ = 0;
  ParseResult result_;
};

}  // namespace

ParseResult parse(const std::vector<Token>& tokens) {
  return Parser(tokens).run();
}

ParseResult parse(const BenchSource& src) {
  TokenizeResult tok = tokenize(src);
  ParseResult result = parse(tok.tokens);
  result.diagnostics.insert(result.diagnostics.begin(),
                            tok.diagnostics.begin(), tok.diagnostics.end());
  return result;
}

std::vector<Diagnostic> validate(const BenchGraph& graph) {
  return validate_graph(graph);
}

// ---------------------------------------------------------------------------
// Serializer
// ---------------------------------------------------------------------------

namespace {

std::string number_text(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::string kwarg_text(const KwargValue& v) {
  if (std::holds_alternative<double>(v)) return number_text(std::get<double>(v));
  return std::get<std::string>(v);
}

}  // namespace

std::string serialize(const BenchGraph& graph) {
  std::ostringstream os;
  os << "bench " << graph.name << '\n';
  for (const auto& [name, value] : graph.params_table) {
    os << "param " << name << " = " << number_text(value) << '\n';
  }
  for (const auto& [name, node] : graph.nodes) {
    os << "node " << name << " : " << to_string(node.kind) << '(';
    bool first = true;
    for (const auto& [key, value] : node.kwargs) {
      if (!first) os << ", ";
      first = false;
      os << key << '=' << kwarg_text(value);
    }
    os << ")\n";
  }
  std::vector<Link> links = graph.links;
  std::sort(links.begin(), links.end(), [](const Link& a, const Link& b) {
    return std::tie(a.from_node, a.from_port, a.to_node, a.to_port) <
           std::tie(b.from_node, b.from_port, b.to_node, b.to_port);
  });
  for (const Link& l : links) {
    os << "link " << l.from_node << '.' << l.from_port << " -> " << l.to_node
       << '.' << l.to_port << '\n';
  }
  for (const auto& [name, det] : graph.detectors) {
    os << "detector " << name << " on " << det.node << '.' << det.port
       << '\n';
  }
  return os.str();
}

ParseResult load_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    ParseResult result;
    result.diagnostics.push_back(
        {1, 1, Severity::Error, "cannot open bench file '" + path + "'"});
    return result;
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse(BenchSource{buffer.str(), path});
}

}  // namespace cohbench::dsl
