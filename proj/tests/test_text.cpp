#include <atomic>
#include <fstream>
#include <set>

#include "doctest.h"
#include "helpers.hpp"
#include "mhke/hashing.hpp"
#include "mhke/parallel.hpp"
#include "mhke/rng.hpp"
#include "mhke/text.hpp"

using namespace mhke;

TEST_CASE("trim and whitespace collapse") {
  CHECK(text::trim("  a b \t\n") == "a b");
  CHECK(text::trim(" x ") == "x");
  CHECK(text::collapse_whitespace(" a \n\t b  c ") == "a b c");
  CHECK(text::trim("") == "");
}

TEST_CASE("nfc composes decomposed accents") {
  const std::string decomposed = "Cafe\xCC\x81";
  CHECK(decomposed != "Caf\xC3\xA9");
  CHECK(text::nfc(decomposed) == "Caf\xC3\xA9");
  CHECK(text::entity_key("  " + decomposed + " ") == "Caf\xC3\xA9");
}

TEST_CASE("lower handles non-ASCII") {
  CHECK(text::lower("ÉCOLE Paris") == "école paris");
  CHECK(text::lower("ABC") == "abc");
}

TEST_CASE("strip surrounding punctuation") {
  CHECK(text::strip_surrounding_punctuation("\"Sydney.\"") == "Sydney");
  CHECK(text::strip_surrounding_punctuation("(U.S.)") == "U.S");
  CHECK(text::strip_surrounding_punctuation("...") == "");
  CHECK(text::strip_surrounding_punctuation("« Paris »") == "Paris");
}

TEST_CASE("words and code points") {
  CHECK(text::words("Roblin Park, NSW!") == std::vector<std::string>{"roblin", "park", "nsw"});
  CHECK(text::code_points("añb").size() == 3);
}

TEST_CASE("split_lines strips carriage returns") {
  CHECK(text::split_lines("a\r\nb\n\nc") == std::vector<std::string>{"a", "b", "", "c"});
}

TEST_CASE("sha256 known vectors") {
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("sha256_file matches in-memory hash") {
  testing::TempDir dir;
  auto p = dir / "f.txt";
  std::string content(100000, 'x');
  {
    std::ofstream out(p, std::ios::binary);
    out << content;
  }
  CHECK(sha256_file(p) == sha256_hex(content));
  CHECK_THROWS(sha256_file(dir / "missing"));
}

TEST_CASE("derive_seed is stable and label-separated") {
  CHECK(derive_seed(1, "a") == derive_seed(1, "a"));
  CHECK(derive_seed(1, "a") != derive_seed(1, "b"));
  CHECK(derive_seed(1, "a") != derive_seed(2, "a"));
  // First eight digest bytes of "0:build-sets", little-endian.
  const std::string hex = sha256_hex("0:build-sets");
  std::uint64_t expect = 0;
  for (int i = 7; i >= 0; --i) expect = (expect << 8) | std::stoul(hex.substr(static_cast<size_t>(i) * 2, 2), nullptr, 16);
  CHECK(derive_seed(0, "build-sets") == expect);
}

TEST_CASE("seeded_shuffle is a deterministic permutation") {
  std::vector<int> a(50), b;
  for (int i = 0; i < 50; ++i) a[static_cast<size_t>(i)] = i;
  b = a;
  seeded_shuffle(std::span(a), 42);
  seeded_shuffle(std::span(b), 42);
  CHECK(a == b);
  std::set<int> s(a.begin(), a.end());
  CHECK(s.size() == 50);
  std::vector<int> c(50);
  for (int i = 0; i < 50; ++i) c[static_cast<size_t>(i)] = i;
  seeded_shuffle(std::span(c), 43);
  CHECK(c != a);
}

TEST_CASE("uniform_below stays in range and covers it") {
  std::mt19937_64 rng(5);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 2000; ++i) {
    auto v = uniform_below(rng, 7);
    CHECK(v < 7);
    seen.insert(v);
  }
  CHECK(seen.size() == 7);
}

TEST_CASE("parallel_for visits every index once and rethrows") {
  std::vector<std::atomic<int>> hits(1000);
  parallel_for(hits.size(), 8, [&](size_t i) { ++hits[i]; });
  for (auto& h : hits) CHECK(h.load() == 1);
  CHECK_THROWS_AS(parallel_for(10, 4,
                               [](size_t i) {
                                 if (i == 3) throw std::runtime_error("boom");
                               }),
                  std::runtime_error);
}
