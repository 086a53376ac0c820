#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "equicompose/knowledge.hpp"

using namespace eqc;

namespace {

struct Fx {
  World w;
  Theory th{w};
  int fS, gS;
  Term a, b, c, s, k, rA, rB;
  Fx() {
    fS = w.addSymbol("f", 2, Origin::User, 1);
    gS = w.addSymbol("g", 1, Origin::User, 1);
    Term x = w.var("x");
    Term y = w.var("y");
    th.addPermutative(w.app(fS, {w.app(gS, {x}), y}),
                      w.app(fS, {w.app(gS, {y}), x}), 1);
    a = w.name("a");
    b = w.name("b");
    c = w.name("c", SortK::Channel);
    s = w.name("s");
    k = w.name("k");
    rA = w.name("rA");
    rB = w.name("rB");
  }
  Term T(int sy, std::vector<Term> args) { return w.app(sy, std::move(args)); }
};

// Independent oracle: every syntactically distinct recipe up to the depth,
// no value-based pruning.
std::vector<Term> oEnum(World& w, const std::vector<Term>& atoms, int depth) {
  std::vector<Term> all = atoms;
  size_t lo = 0;
  for (int d = 2; d <= depth; ++d) {
    size_t hi = all.size();
    for (int sy = 0; sy < w.numSymbols(); ++sy) {
      if (sy == w.S_diff) continue;
      const Symbol& sym = w.sym(sy);
      if (sym.arity == 1) {
        for (size_t i = 0; i < hi; ++i) {
          try {
            all.push_back(w.app(sy, {all[i]}));
          } catch (const Error&) {
          }
        }
      } else if (sym.arity == 2) {
        for (size_t i = 0; i < hi; ++i)
          for (size_t j = 0; j < hi; ++j) {
            try {
              all.push_back(w.app(sy, {all[i], all[j]}));
            } catch (const Error&) {
            }
          }
      }
    }
    lo = hi;
    (void)lo;
  }
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end()), all.end());
  return all;
}

// Oracle verdict plus witness for frames of equal domain.
bool oStatEquiv(const Theory& th, const std::vector<Term>& f1,
                const std::vector<Term>& f2, const std::vector<Term>& pub,
                int depth, Term* M = nullptr, Term* N = nullptr) {
  World& w = th.world();
  std::vector<Term> atoms = pub;
  for (size_t i = 0; i < f1.size(); ++i)
    atoms.push_back(handleVar(w, (int)i + 1));
  std::vector<Term> rs = oEnum(w, atoms, depth);
  std::vector<Term> v1, v2, kept;
  for (Term r : rs) {
    // admissible only when well-sorted on both frames
    Term a1, a2;
    try {
      a1 = evalRecipe(th, r, f1);
      a2 = evalRecipe(th, r, f2);
    } catch (const Error&) {
      continue;
    }
    kept.push_back(r);
    v1.push_back(a1);
    v2.push_back(a2);
  }
  rs = kept;
  for (size_t i = 0; i < rs.size(); ++i)
    for (size_t j = i + 1; j < rs.size(); ++j)
      if ((v1[i] == v1[j]) != (v2[i] == v2[j])) {
        if (M) *M = rs[i];
        if (N) *N = rs[j];
        return false;
      }
  return true;
}

}  // namespace

TEST_CASE("saturation applies destructors transitively") {
  Fx x;
  World& w = x.w;
  std::vector<Term> frame = {
      x.T(w.S_senc, {x.T(w.S_senc, {x.s, x.k}), x.k}), x.k};
  KB kb = saturate(x.th, frame, {x.a, x.c}, 2);
  CHECK(kb.has(x.s));
  Term r = kb.recipe(x.s);
  REQUIRE(r);
  Term w1 = handleVar(w, 1);
  Term w2 = handleVar(w, 2);
  CHECK(r == x.T(w.S_sdec, {x.T(w.S_sdec, {w1, w2}), w2}));
  CHECK(evalRecipe(x.th, r, frame) == x.s);
  CHECK(!kb.has(x.b));
}

TEST_CASE("deduce composes constructors from derivable parts") {
  Fx x;
  World& w = x.w;
  std::vector<Term> frame = {x.T(w.S_senc, {x.s, x.k}), x.k};
  KB kb = saturate(x.th, frame, {x.a}, 2);
  auto r1 = deduce(x.th, kb, x.s);
  REQUIRE(r1);
  CHECK(evalRecipe(x.th, *r1, frame) == x.s);
  // reassemble a fresh encryption
  auto r2 = deduce(x.th, kb, x.T(w.S_senc, {w.pairT(x.a, x.s), x.k}));
  REQUIRE(r2);
  CHECK(evalRecipe(x.th, *r2, frame) ==
        x.T(w.S_senc, {w.pairT(x.a, x.s), x.k}));
  // underivable targets
  CHECK(!deduce(x.th, kb, x.b));
  CHECK(!deduce(x.th, kb, x.T(w.S_senc, {x.a, x.b})));
}

TEST_CASE("DH exponents stay secret") {
  Fx x;
  std::vector<Term> frame = {x.T(x.gS, {x.rA}), x.T(x.gS, {x.rB}),
                             x.T(x.fS, {x.T(x.gS, {x.rA}), x.rB})};
  KB kb = saturate(x.th, frame, {x.c}, 3);
  CHECK(!deduce(x.th, kb, x.rA));
  CHECK(!deduce(x.th, kb, x.rB));
  CHECK(deduce(x.th, kb, frame[2]));
}

TEST_CASE("DH key is indistinguishable from a random key") {
  Fx x;
  Term gA = x.T(x.gS, {x.rA});
  Term gB = x.T(x.gS, {x.rB});
  std::vector<Term> f1 = {gA, gB, x.T(x.fS, {gA, x.rB})};
  std::vector<Term> f2 = {gA, gB, x.k};
  StaticEquivResult r = staticEquiv(x.th, f1, f2, {x.c}, 3);
  CHECK(r.verdict == Verdict::Holds);
  CHECK(r.recipesExplored > 0);
  // agrees with the exhaustive oracle at depth 2
  CHECK(oStatEquiv(x.th, f1, f2, {x.c}, 2));
}

TEST_CASE("exposing an exponent breaks the equivalence") {
  Fx x;
  Term gA = x.T(x.gS, {x.rA});
  Term gB = x.T(x.gS, {x.rB});
  std::vector<Term> f1 = {gA, gB, x.T(x.fS, {gA, x.rB}), x.rB};
  std::vector<Term> f2 = {gA, gB, x.k, x.rB};
  StaticEquivResult r = staticEquiv(x.th, f1, f2, {x.c}, 3);
  REQUIRE(r.verdict == Verdict::Refuted);
  REQUIRE(r.recipeM);
  REQUIRE(r.recipeN);
  // the witness discriminates exactly one frame
  bool e1 = evalRecipe(x.th, r.recipeM, f1) == evalRecipe(x.th, r.recipeN, f1);
  bool e2 = evalRecipe(x.th, r.recipeM, f2) == evalRecipe(x.th, r.recipeN, f2);
  CHECK(e1 != e2);
  CHECK(e1 == r.failsOnSecond);
  // deterministic witness
  StaticEquivResult r2 = staticEquiv(x.th, f1, f2, {x.c}, 3);
  CHECK(r2.recipeM == r.recipeM);
  CHECK(r2.recipeN == r.recipeN);
}

TEST_CASE("different plaintexts with a revealed key are distinguishable") {
  Fx x;
  World& w = x.w;
  std::vector<Term> f1 = {x.T(w.S_senc, {x.a, x.k}), x.k};
  std::vector<Term> f2 = {x.T(w.S_senc, {x.b, x.k}), x.k};
  StaticEquivResult r = staticEquiv(x.th, f1, f2, {x.a, x.b}, 3);
  REQUIRE(r.verdict == Verdict::Refuted);
  bool e1 = evalRecipe(x.th, r.recipeM, f1) == evalRecipe(x.th, r.recipeN, f1);
  bool e2 = evalRecipe(x.th, r.recipeM, f2) == evalRecipe(x.th, r.recipeN, f2);
  CHECK(e1 != e2);
  // without the key they are equivalent at this bound
  std::vector<Term> g1 = {x.T(w.S_senc, {x.a, x.k})};
  std::vector<Term> g2 = {x.T(w.S_senc, {x.b, x.k})};
  CHECK(staticEquiv(x.th, g1, g2, {x.a, x.b}, 3).verdict == Verdict::Holds);
}

TEST_CASE("frames of different arity are refuted") {
  Fx x;
  CHECK(staticEquiv(x.th, {x.a}, {x.a, x.b}, {}, 2).verdict ==
        Verdict::Refuted);
}

TEST_CASE("tiny caps yield unknown") {
  Fx x;
  std::vector<Term> f1 = {x.T(x.gS, {x.rA})};
  std::vector<Term> f2 = {x.T(x.gS, {x.rB})};
  StaticEquivResult r = staticEquiv(x.th, f1, f2, {x.a, x.b}, 4, 8);
  CHECK(r.verdict == Verdict::Unknown);
  CHECK(!r.note.empty());
}

TEST_CASE("random frames agree with the exhaustive oracle") {
  Fx x;
  World& w = x.w;
  std::mt19937 rng(777);
  std::vector<Term> secret = {x.s, x.k};
  std::vector<Term> pub = {x.a, x.b};
  auto randTerm = [&](auto&& self, int depth) -> Term {
    std::vector<Term> leaves = {x.s, x.k, x.a, x.b};
    if (depth == 0 || rng() % 3 == 0) return leaves[rng() % leaves.size()];
    switch (rng() % 4) {
      case 0:
        return x.T(w.S_senc, {self(self, depth - 1), self(self, depth - 1)});
      case 1:
        return w.pairT(self(self, depth - 1), self(self, depth - 1));
      case 2:
        return x.T(w.S_h, {self(self, depth - 1)});
      default:
        return x.T(x.gS, {self(self, depth - 1)});
    }
  };
  int refuted = 0, held = 0;
  for (int iter = 0; iter < 40; ++iter) {
    std::vector<Term> f1, f2;
    size_t n = 1 + rng() % 2;
    for (size_t i = 0; i < n; ++i) {
      Term t = randTerm(randTerm, 2);
      f1.push_back(t);
      // half the time mutate the second frame
      f2.push_back(rng() % 2 ? t : randTerm(randTerm, 2));
    }
    StaticEquivResult r = staticEquiv(x.th, f1, f2, pub, 2);
    REQUIRE(r.verdict != Verdict::Unknown);
    bool oracle = oStatEquiv(x.th, f1, f2, pub, 2);
    CHECK((r.verdict == Verdict::Holds) == oracle);
    if (r.verdict == Verdict::Refuted) {
      ++refuted;
      bool e1 =
          evalRecipe(x.th, r.recipeM, f1) == evalRecipe(x.th, r.recipeN, f1);
      bool e2 =
          evalRecipe(x.th, r.recipeM, f2) == evalRecipe(x.th, r.recipeN, f2);
      CHECK(e1 != e2);
    } else {
      ++held;
    }
  }
  // both outcomes exercised
  CHECK(refuted > 0);
  CHECK(held > 0);
}

TEST_CASE("saturation respects the entry cap") {
  Fx x;
  KB kb = saturate(x.th, {x.a}, {x.b}, 6, 50);
  CHECK(kb.entries.size() <= 50);
}

TEST_CASE("public channel names are known but not base-usable") {
  Fx x;
  KB kb = saturate(x.th, {}, {x.c, x.a}, 2);
  CHECK(kb.has(x.c));
  // channel names cannot be placed under symbols, so no senc(c, ...)
  for (const KBEntry& e : kb.entries)
    if (isApp(e.value))
      for (Term arg : e.value->args) CHECK(arg != x.c);
}
