#pragma once

#include <string>
#include <vector>

#include "cohbench/diagnostics.hpp"
#include "cohbench/optics.hpp"

namespace cohbench::dsl {

/// A bench description in source form. Line-oriented; '#' starts a comment.
struct BenchSource {
  std::string text;
  std::string name = "<string>";
};

enum class TokenKind {
  Keyword,
  Ident,
  Number,
  Colon,
  LParen,
  RParen,
  Equals,
  Comma,
  Dot,
  Arrow,
  Minus,
  EndOfInput,
};

struct Token {
  TokenKind kind = TokenKind::EndOfInput;
  std::string text;
  double number = 0.0;
  int line = 1;
  int column = 1;
};

struct TokenizeResult {
  std::vector<Token> tokens;  // always ends with EndOfInput
  std::vector<Diagnostic> diagnostics;
};

TokenizeResult tokenize(const BenchSource& src);

struct ParseResult {
  BenchGraph graph;
  std::vector<Diagnostic> diagnostics;
};

/// Parse a token stream into an unvalidated graph. Never throws; all
/// failures become diagnostics and the graph holds whatever parsed.
ParseResult parse(const std::vector<Token>& tokens);
ParseResult parse(const BenchSource& src);

/// Semantic checks on a parsed (or built) graph; empty result means valid.
std::vector<Diagnostic> validate(const BenchGraph& graph);

/// Canonical text form: sorted params, nodes, links, detectors; '\n'
/// newlines, no trailing whitespace. parse(serialize(g)) == g.
std::string serialize(const BenchGraph& graph);

/// Read and parse an .obd file; a missing/unreadable file becomes a
/// diagnostic.
ParseResult load_file(const std::string& path);

}  // namespace cohbench::dsl
