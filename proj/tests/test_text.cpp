#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "medlang/text.hpp"

using namespace medlang;
using Tokens = std::vector<std::string>;

TEST_CASE("tokenize strips punctuation and lowercases") {
  CHECK(text::tokenize("I don't think so.") == Tokens{"i", "don't", "think", "so"});
  CHECK(text::tokenize("And - - and, the") == Tokens{"and", "-", "-", "and", "the"});
  CHECK(text::tokenize("  ") == Tokens{});
  CHECK(text::tokenize("\"Quoted,\" (parens)") == Tokens{"quoted", "parens"});
}

TEST_CASE("dash tokens survive") {
  CHECK(text::tokenize("for -- for") == Tokens{"for", "--", "for"});
  CHECK(text::tokenize("- -") == Tokens{"-", "-"});
}

TEST_CASE("typographic apostrophes fold to ASCII") {
  CHECK(text::tokenize("don’t") == Tokens{"don't"});
}

TEST_CASE("unicode whitespace splits tokens") {
  CHECK(text::tokenize("a b c") == Tokens{"a", "b", "c"});
  CHECK(text::trim("　 x  ") == "x");
}

TEST_CASE("interruption marker") {
  CHECK(text::ends_with_interruption_marker("And if I - -"));
  CHECK(text::ends_with_interruption_marker("And if I - -   \n"));
  CHECK(text::ends_with_interruption_marker("- -"));
  CHECK(text::ends_with_interruption_marker("wait--"));
  CHECK_FALSE(text::ends_with_interruption_marker("wait--", true));
  CHECK_FALSE(text::ends_with_interruption_marker("would be an alienation."));
  CHECK_FALSE(text::ends_with_interruption_marker("one -"));
  CHECK_FALSE(text::ends_with_interruption_marker(""));
}

TEST_CASE("normalize_phrase") {
  CHECK(text::normalize_phrase("  I   Think ") == "i think");
}
