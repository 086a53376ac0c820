#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "equicompose/tagging.hpp"

using namespace eqc;

namespace {
struct Fx {
  World w;
  Theory th{w};
  ProcFactory f{w};
  int fS, gS, tg, ut;
  Term c, r, k, y, a, b;
  Fx() {
    fS = w.addSymbol("f", 2, Origin::User, 1);
    gS = w.addSymbol("g", 1, Origin::User, 1);
    th.ensureTagTheory(1);
    tg = w.tagSym(1);
    ut = w.untagSym(1);
    c = w.name("c", SortK::Channel);
    r = w.name("r");
    k = w.name("k");
    a = w.name("a");
    b = w.name("b");
    y = w.var("y");
  }
  Term T(int s, std::vector<Term> args) { return w.app(s, std::move(args)); }
};
}  // namespace

TEST_CASE("constructors tag their payload") {
  Fx x;
  Term g_r = x.T(x.gS, {x.r});
  Term t = tagTerm(x.w, 1, x.T(x.w.S_senc, {g_r, x.k}));
  CHECK(t == x.T(x.w.S_senc, {x.T(x.tg, {g_r}), x.k}));
  Term s = tagTerm(x.w, 1, x.T(x.w.S_sign, {x.a, x.k}));
  CHECK(s == x.T(x.w.S_sign, {x.T(x.tg, {x.a}), x.k}));
  Term hh = tagTerm(x.w, 1, x.T(x.w.S_h, {x.a}));
  CHECK(hh == x.T(x.w.S_h, {x.T(x.tg, {x.a})}));
}

TEST_CASE("destructors are wrapped in untag") {
  Fx x;
  Term t = tagTerm(x.w, 1, x.T(x.fS, {x.T(x.w.S_sdec, {x.y, x.k}), x.r}));
  CHECK(t == x.T(x.fS, {x.T(x.ut, {x.T(x.w.S_sdec, {x.y, x.k})}), x.r}));
}

TEST_CASE("pairs projections and key constructors are untouched") {
  Fx x;
  CHECK(tagTerm(x.w, 1, x.T(x.w.S_pk, {x.k})) == x.T(x.w.S_pk, {x.k}));
  Term p = x.w.pairT(x.a, x.b);
  CHECK(tagTerm(x.w, 1, p) == p);
  Term pr = x.T(x.w.S_proj1, {x.y});
  CHECK(tagTerm(x.w, 1, pr) == pr);
}

TEST_CASE("tagged encryption decrypts to the tagged plaintext") {
  Fx x;
  Term enc = tagTerm(x.w, 1, x.T(x.w.S_senc, {x.a, x.k}));
  Term dec = tagTerm(x.w, 1, x.T(x.w.S_sdec, {x.y, x.k}));
  Subst s;
  s.m[x.y->ident] = enc;
  Term applied = applySubst(x.w, s, dec);
  CHECK(x.th.normalize(applied) == x.a);
}

TEST_CASE("testTag collects destructor and projection conditions") {
  Fx x;
  Term dec = tagTerm(x.w, 1, x.T(x.w.S_sdec, {x.y, x.k}));
  Formula phi = testTag(x.w, 1, dec);
  REQUIRE(phi.eqs.size() == 1);
  CHECK(phi.eqs[0].first == x.T(x.tg, {dec}));
  CHECK(phi.eqs[0].second == dec->args[0]);

  Term pr = x.T(x.w.S_proj1, {x.y});
  Formula psi = testTag(x.w, 1, pr);
  REQUIRE(psi.eqs.size() == 1);
  CHECK(psi.eqs[0].first == x.y);
  CHECK(psi.eqs[0].second ==
        x.w.pairT(x.T(x.w.S_proj1, {x.y}), x.T(x.w.S_proj2, {x.y})));

  // duplicates collapse
  Term both = x.w.pairT(pr, pr);
  CHECK(testTag(x.w, 1, both).eqs.size() == 1);
  // constructor-only terms need no conditions
  CHECK(testTag(x.w, 1, tagTerm(x.w, 1, x.T(x.w.S_senc, {x.a, x.k})))
            .eqs.empty());
}

TEST_CASE("tagProcess guards destructor outputs and folds true guards") {
  Fx x;
  // constructor payload: no guard
  ProcP p1 = x.f.out(x.c, x.T(x.w.S_senc, {x.a, x.k}), x.f.nil());
  ProcP t1 = tagProcess(x.f, 1, p1);
  REQUIRE(t1->k == Proc::Out);
  CHECK(t1->color == 1);
  CHECK(t1->term == tagTerm(x.w, 1, p1->term));
  // destructor payload: guarded
  ProcP p2 = x.f.in(x.c, x.y->ident,
                    x.f.out(x.c, x.T(x.w.S_sdec, {x.y, x.k}), x.f.nil()));
  ProcP t2 = tagProcess(x.f, 1, p2);
  REQUIRE(t2->k == Proc::In);
  ProcP g = t2->a;
  REQUIRE(g->k == Proc::If);
  CHECK(g->b->k == Proc::Nil);
  REQUIRE(g->a->k == Proc::Out);
  CHECK(g->a->term == x.T(x.ut, {x.T(x.w.S_sdec, {x.y, x.k})}));
}

TEST_CASE("tagProcess wraps conditionals") {
  Fx x;
  Formula phi;
  phi.eqs.push_back({x.T(x.w.S_sdec, {x.y, x.k}), x.a});
  ProcP p = x.f.ifte(phi, x.f.out(x.c, x.a, x.f.nil()), x.f.nil());
  ProcP t = tagProcess(x.f, 1, p);
  REQUIRE(t->k == Proc::If); // outer TestTag guard
  CHECK(t->b->k == Proc::Nil);
  ProcP inner = t->a;
  REQUIRE(inner->k == Proc::If);
  CHECK(inner->phi.eqs[0].first ==
        x.T(x.ut, {x.T(x.w.S_sdec, {x.y, x.k})}));
  CHECK(inner->a->k == Proc::Out);
}

TEST_CASE("tagProcess keeps existing colors") {
  Fx x;
  ProcP p = x.f.out(x.c, x.a, x.f.nil(), 2);
  CHECK(tagProcess(x.f, 1, p)->color == 2);
}

TEST_CASE("untagTerm inverts tagTerm") {
  Fx x;
  std::mt19937 rng(4242);
  std::vector<Term> pool = {x.a, x.b, x.k, x.r, x.y};
  auto rand = [&](auto&& self, int depth) -> Term {
    if (depth == 0 || rng() % 4 == 0) return pool[rng() % pool.size()];
    switch (rng() % 8) {
      case 0: return x.T(x.w.S_senc, {self(self, depth - 1), self(self, depth - 1)});
      case 1: return x.T(x.w.S_sdec, {self(self, depth - 1), self(self, depth - 1)});
      case 2: return x.w.pairT(self(self, depth - 1), self(self, depth - 1));
      case 3: return x.T(x.w.S_h, {self(self, depth - 1)});
      case 4: return x.T(x.w.S_proj1, {self(self, depth - 1)});
      case 5: return x.T(x.fS, {self(self, depth - 1), self(self, depth - 1)});
      case 6: return x.T(x.gS, {self(self, depth - 1)});
      default: return x.T(x.w.S_sign, {self(self, depth - 1), pool[rng() % pool.size()]});
    }
  };
  for (int i = 0; i < 300; ++i) {
    Term t = rand(rand, 4);
    Term tagged = tagTerm(x.w, 1, t);
    CHECK(untagTerm(x.w, 1, tagged) == t);
    CHECK(isTaggedTerm(x.w, 1, tagged));
  }
}

TEST_CASE("isTaggedTerm rejects untagged and malformed terms") {
  Fx x;
  std::string why;
  CHECK(!isTaggedTerm(x.w, 1, x.T(x.w.S_senc, {x.a, x.k}), &why));
  CHECK(why.find("untagged") != std::string::npos);
  CHECK(!isTaggedTerm(x.w, 1, x.T(x.w.S_sdec, {x.y, x.k})));
  CHECK(!isTaggedTerm(x.w, 1, x.T(x.tg, {x.a})));
  CHECK(!isTaggedTerm(x.w, 1, x.T(x.w.S_h, {x.a})));
  // names, variables and plain pairs are tagged
  CHECK(isTaggedTerm(x.w, 1, x.a));
  CHECK(isTaggedTerm(x.w, 1, x.w.pairT(x.a, x.y)));
  // TestTag shape is accepted
  Term dec = x.T(x.ut, {x.T(x.w.S_sdec, {x.y, x.k})});
  CHECK(isTaggedTerm(x.w, 1, x.T(x.tg, {dec})));
}

TEST_CASE("isTaggedTerm rejects symbols of a foreign theory") {
  Fx x;
  int hS = x.w.addSymbol("mac", 1, Origin::User, 2);
  x.th.ensureTagTheory(2);
  CHECK(!isTaggedTerm(x.w, 1, x.T(hS, {x.a})));
  CHECK(!isTaggedTerm(x.w, 1, x.T(x.w.tagSym(2), {x.a})));
  CHECK(isTaggedTerm(x.w, 2, x.T(hS, {x.a})));
}

TEST_CASE("isTaggedProcess accepts tagProcess output") {
  Fx x;
  ProcP p = x.f.in(
      x.c, x.y->ident,
      x.f.ifte(
          [&] {
            Formula phi;
            phi.eqs.push_back({x.T(x.w.S_sdec, {x.y, x.k}), x.a});
            return phi;
          }(),
          x.f.out(x.c, x.T(x.w.S_senc, {x.T(x.fS, {x.a, x.r}), x.k}),
                  x.f.nil()),
          x.f.nil()));
  ProcP t = tagProcess(x.f, 1, p);
  std::string why;
  CHECK(isTaggedProcess(x.w, 1, t, &why));
  CHECK(!isTaggedProcess(x.w, 1, p, &why));
}
