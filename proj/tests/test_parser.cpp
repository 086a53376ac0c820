#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>

#include "equicompose/parser.hpp"

using namespace eqc;

static const char* kDH = R"(
theory DH {
  fun f/2.
  fun g/1.
  permutative f(g(x), y) = f(g(y), x).
}

free skA, skB.
channel c.

alpha = { DH }.
beta = { }.

process A =
  new rA.
  out(c, aenc(<g(rA), sign(g(rA), skA)>, pk(skB))).
  in(c, x).
  [xA := f(check(proj2(adec(x, skA)), vk(skB)), rA)]@DH.

process B =
  new rB.
  in(c, y).
  out(c, aenc(<g(rB), sign(g(rB), skB)>, pk(skA))).
  [xB := f(check(proj2(adec(y, skB)), vk(skA)), rB)]@DH.

context CKE = new k. _1.

frame Phi1 = new {rA, rB} { w1 -> g(rA), w2 -> g(rB), w3 -> f(g(rA), rB) }.
frame Phi2 = new {rA, rB, s} { w1 -> g(rA), w2 -> g(rB), w3 -> s }.

system Sys = new {s} (A | B).

query static-equiv Phi1 Phi2.
)";

TEST_CASE("parses the DH spec") {
  ProtocolSpec sp = parseSpec(kDH);
  World& w = *sp.w;
  CHECK(sp.theoryOrder == std::vector<std::string>{"DH"});
  CHECK(sp.theoryIndex.at("DH") == 1);
  CHECK(sp.part.alpha == std::vector<int>{1});
  CHECK(sp.part.beta.empty());
  REQUIRE(sp.freeNames.size() == 2);
  CHECK(w.str(sp.freeNames[0]->ident) == "skA");
  REQUIRE(sp.channels.size() == 1);
  CHECK(sp.channels[0]->sort == SortK::Channel);

  const ProcDef* A = sp.process("A");
  REQUIRE(A);
  ProcP p = A->body;
  REQUIRE(p->k == Proc::New);
  CHECK(w.str(p->name->ident) == "rA");
  p = p->a;
  REQUIRE(p->k == Proc::Out);
  CHECK(p->chan == sp.channels[0]);
  p = p->a;
  REQUIRE(p->k == Proc::In);
  p = p->a;
  REQUIRE(p->k == Proc::Assign);
  CHECK(p->color == 1);
  CHECK(isApp(p->term));
  CHECK(w.sym(p->term->sym).name == "f");

  const ProcDef* C = sp.context("CKE");
  REQUIRE(C);
  CHECK(countHoles(C->body) == 1);

  const FrameDef* f1 = sp.frame("Phi1");
  REQUIRE(f1);
  REQUIRE(f1->entries.size() == 3);
  Term rA = f1->restricted[0];
  Term rB = f1->restricted[1];
  int g = w.symbolByName("g");
  int f = w.symbolByName("f");
  CHECK(f1->entries[0] == w.app(g, {rA}));
  CHECK(f1->entries[2] == w.app(f, {w.app(g, {rA}), rB}));

  const SystemDef* sys = sp.system("Sys");
  REQUIRE(sys);
  CHECK(sys->restricted.size() == 1);
  CHECK(sys->proc->k == Proc::Par);

  REQUIRE(sp.queries.size() == 1);
  CHECK(sp.queries[0].kind == "static-equiv");
  CHECK(sp.queries[0].args == std::vector<std::string>{"Phi1", "Phi2"});
}

TEST_CASE("print then reparse preserves processes modulo alpha") {
  ProtocolSpec sp1 = parseSpec(kDH);
  std::string text = printSpec(sp1);
  ProtocolSpec sp2 = parseSpec(text);
  CHECK(sp1.theoryOrder == sp2.theoryOrder);
  CHECK(sp1.part.alpha == sp2.part.alpha);
  REQUIRE(sp2.processes.size() == sp1.processes.size());
  for (auto& d1 : sp1.processes) {
    const ProcDef* d2 = sp2.process(d1.name);
    REQUIRE(d2);
    // same world interning is not shared, so compare via printed text
    CHECK(showProc(*sp1.w, d1.body) == showProc(*sp2.w, d2->body));
  }
  REQUIRE(sp2.frames.size() == 2);
  for (auto& fr1 : sp1.frames) {
    const FrameDef* fr2 = sp2.frame(fr1.name);
    REQUIRE(fr2);
    REQUIRE(fr2->entries.size() == fr1.entries.size());
    for (size_t i = 0; i < fr1.entries.size(); ++i)
      CHECK(sp1.w->show(fr1.entries[i]) == sp2.w->show(fr2->entries[i]));
  }
}

TEST_CASE("inequality desugars to swapped branches") {
  ProtocolSpec sp = parseSpec(
      "free a, b. channel c.\n"
      "process P = in(c, x). if x != a then out(c, a) else out(c, b).");
  ProcP p = sp.process("P")->body->a;
  REQUIRE(p->k == Proc::If);
  CHECK(!p->phi.isDiff);
  REQUIRE(p->phi.eqs.size() == 1);
  // then-branch of the desugared conditional is the else of the source
  REQUIRE(p->a->k == Proc::Out);
  CHECK(sp.w->str(p->a->term->ident) == "b");
  REQUIRE(p->b->k == Proc::Out);
  CHECK(sp.w->str(p->b->term->ident) == "a");
}

TEST_CASE("membership desugars to a chain of conditionals") {
  ProtocolSpec sp = parseSpec(
      "free a, b, bad. channel c.\n"
      "process P = in(c, x). if x in {a, b} then out(c, bad).");
  ProcP p = sp.process("P")->body->a;
  REQUIRE(p->k == Proc::If);
  REQUIRE(p->phi.eqs.size() == 1);
  CHECK(sp.w->str(p->phi.eqs[0].second->ident) == "a");
  CHECK(p->a->k == Proc::Out);
  ProcP q = p->b;
  REQUIRE(q->k == Proc::If);
  CHECK(sp.w->str(q->phi.eqs[0].second->ident) == "b");
  CHECK(q->a->k == Proc::Out);
  CHECK(q->b->k == Proc::Nil);
}

TEST_CASE("conjunction of equalities stays one formula") {
  ProtocolSpec sp = parseSpec(
      "free a, b. channel c.\n"
      "process P = in(c, x). in(c, y). if x = a && y = b then out(c, a).");
  ProcP p = sp.process("P")->body->a->a;
  REQUIRE(p->k == Proc::If);
  CHECK(p->phi.eqs.size() == 2);
}

TEST_CASE("mixed conjunction splits after the positive prefix") {
  ProtocolSpec sp = parseSpec(
      "free a, b. channel c.\n"
      "process P = in(c, x). if x = a && x != b then out(c, a).");
  ProcP p = sp.process("P")->body->a;
  REQUIRE(p->k == Proc::If);
  REQUIRE(p->phi.eqs.size() == 1);
  CHECK(sp.w->str(p->phi.eqs[0].second->ident) == "a");
  // inner conditional carries the negation with swapped branches
  ProcP q = p->a;
  REQUIRE(q->k == Proc::If);
  CHECK(sp.w->str(q->phi.eqs[0].second->ident) == "b");
  CHECK(q->a->k == Proc::Nil);
  CHECK(q->b->k == Proc::Out);
}

TEST_CASE("let substitutes the bound term") {
  ProtocolSpec sp = parseSpec(
      "free k. channel c.\n"
      "process P = in(c, x). let m = sdec(x, k) in out(c, <m, m>).");
  ProcP p = sp.process("P")->body->a;
  REQUIRE(p->k == Proc::Out);
  World& w = *sp.w;
  Term m = w.app(w.S_sdec, {w.var(w.str(sp.process("P")->body->var)), w.name("k")});
  CHECK(p->term == w.pairT(m, m));
}

TEST_CASE("triples and proj3 desugar to nested pairs") {
  ProtocolSpec sp = parseSpec(
      "free a, b, d. channel c.\n"
      "process P = out(c, <a, b, d>). in(c, x). out(c, proj3(x)).");
  World& w = *sp.w;
  ProcP p = sp.process("P")->body;
  CHECK(p->term == w.pairT(w.name("a"), w.pairT(w.name("b"), w.name("d"))));
  ProcP q = p->a->a;
  Term xv = w.var(w.str(p->a->var));
  CHECK(q->term == w.app(w.S_proj2, {w.app(w.S_proj2, {xv})}));
}

TEST_CASE("diff formulas parse into biprocess conditionals") {
  ProtocolSpec sp = parseSpec(
      "free a, b. channel c.\n"
      "process P = in(c, x). if diff[x = a; x = b] then out(c, a).");
  ProcP p = sp.process("P")->body->a;
  REQUIRE(p->k == Proc::If);
  CHECK(p->phi.isDiff);
  REQUIRE(p->phi.eqs.size() == 1);
  REQUIRE(p->phi.eqsR.size() == 1);
  CHECK(sp.w->str(p->phi.eqsR[0].second->ident) == "b");
}

TEST_CASE("diff terms parse") {
  ProtocolSpec sp = parseSpec(
      "free a, b. channel c.\n"
      "process P = out(c, diff[a, b]).");
  ProcP p = sp.process("P")->body;
  CHECK(p->term == sp.w->diffT(sp.w->name("a"), sp.w->name("b")));
}

TEST_CASE("process instantiation freshens binders") {
  ProtocolSpec sp = parseSpec(
      "free k. channel c.\n"
      "process Q(z) = new n. out(c, senc(z, n)).\n"
      "process Sys = Q(k) | Q(k).");
  ProcP p = sp.process("Sys")->body;
  REQUIRE(p->k == Proc::Par);
  REQUIRE(p->a->k == Proc::New);
  REQUIRE(p->b->k == Proc::New);
  CHECK(p->a->name != p->b->name);
  World& w = *sp.w;
  CHECK(p->a->a->term == w.app(w.S_senc, {w.name("k"), p->a->name}));
}

TEST_CASE("context application fills holes at parse time") {
  ProtocolSpec sp = parseSpec(
      "free a. channel c.\n"
      "context C = new s. (_1 | _2).\n"
      "process P = C[out(c, a), in(c, x)].");
  ProcP p = sp.process("P")->body;
  REQUIRE(p->k == Proc::New);
  REQUIRE(p->a->k == Proc::Par);
  CHECK(p->a->a->k == Proc::Out);
  CHECK(p->a->b->k == Proc::In);
}

TEST_CASE("parseTermIn resolves names of the spec") {
  ProtocolSpec sp = parseSpec("free a, k. channel c.");
  World& w = *sp.w;
  Term t = parseTermIn(sp, "senc(<a, a>, k)");
  CHECK(t == w.app(w.S_senc, {w.pairT(w.name("a"), w.name("a")), w.name("k")}));
  Term r = w.name("r");
  CHECK(parseTermIn(sp, "h(r)", {r}) == w.app(w.S_h, {r}));
  CHECK_THROWS_AS(parseTermIn(sp, "h(zzz)"), Error);
}

TEST_CASE("errors carry line and column") {
  try {
    parseSpec("free a.\nprocess P = out(c, a).");
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    CHECK(e.kind == "SyntaxError");
  }
}

TEST_CASE("hash character is rejected") {
  CHECK_THROWS_WITH_AS(parseSpec("free #gen.\n"),
                       doctest::Contains("reserved"), Error);
}

TEST_CASE("binders may not shadow declared free names") {
  CHECK_THROWS_AS(
      parseSpec("free a. channel c.\nprocess P = new a. out(c, a)."), Error);
}

TEST_CASE("contexts are restricted to evaluation context grammar") {
  CHECK_THROWS_AS(parseSpec("channel c.\ncontext C = in(c, x). _1."), Error);
  // legal shapes
  ProtocolSpec sp =
      parseSpec("channel c.\ncontext C = new k. ! (_1 | 0).");
  CHECK(countHoles(sp.context("C")->body) == 1);
}

TEST_CASE("colored actions may not use foreign user symbols") {
  const char* text =
      "theory T1 { fun f1/1. }\n"
      "theory T2 { fun f2/1. }\n"
      "free a. channel c.\n"
      "process P = out(c, f2(a))@T1.";
  CHECK_THROWS_WITH_AS(parseSpec(text), doctest::Contains("f2"), Error);
  // common symbols are fine under any color
  ProtocolSpec sp = parseSpec(
      "theory T1 { fun f1/1. }\nfree a, k. channel c.\n"
      "process P = out(c, senc(f1(a), k))@T1.");
  CHECK(sp.process("P")->body->color == 1);
}

TEST_CASE("duplicate declarations are rejected") {
  CHECK_THROWS_AS(parseSpec("free a. free b. theory T {} theory T {}"), Error);
  CHECK_THROWS_AS(
      parseSpec("channel c.\nprocess P = 0.\nprocess P = 0."), Error);
}

TEST_CASE("theories get their tag rules installed") {
  ProtocolSpec sp = parseSpec("theory T { fun f/1. }\nfree a.");
  World& w = *sp.w;
  Term tagged = w.app(w.tagSym(1), {w.name("a")});
  CHECK(sp.th->normalize(w.app(w.untagSym(1), {tagged})) == w.name("a"));
}

TEST_CASE("compose blocks parse") {
  ProtocolSpec sp = parseSpec(
      "theory DH { fun f/2. fun g/1. permutative f(g(x), y) = f(g(y), x). }\n"
      "free skA. channel c.\n"
      "process P1 = 0.\nprocess Q1 = 0.\n"
      "context C = new k. _1.\n"
      "compose sequential Study {\n"
      "  context: C;\n"
      "  p: P1;\n"
      "  q: Q1;\n"
      "  e0: {skA};\n"
      "  secret: s;\n"
      "  kind: secrecy;\n"
      "}");
  REQUIRE(sp.composes.size() == 1);
  const ComposeDef& d = sp.composes[0];
  CHECK(d.sequential);
  CHECK(d.name == "Study");
  CHECK(d.context == "C");
  CHECK(d.p == std::vector<std::string>{"P1"});
  CHECK(d.e0.size() == 1);
  CHECK(sp.w->str(d.secret->ident) == "s");
  CHECK(d.kind == "secrecy");
}

TEST_CASE("replication and bang bodies parse") {
  ProtocolSpec sp = parseSpec(
      "free k. channel c.\nprocess P = ! new n. out(c, senc(n, k)).");
  ProcP p = sp.process("P")->body;
  REQUIRE(p->k == Proc::Repl);
  CHECK(p->a->k == Proc::New);
  CHECK(procHasRepl(p));
}

TEST_CASE("private names are visible but not public") {
  ProtocolSpec sp = parseSpec(
      "private kP. free a. channel c.\n"
      "process P = out(c, senc(a, kP)).");
  World& w = *sp.w;
  CHECK(sp.privateNames == std::vector<Term>{w.name("kP")});
  std::vector<Term> pubs = sp.publics();
  CHECK(std::find(pubs.begin(), pubs.end(), w.name("kP")) == pubs.end());
  CHECK_THROWS_AS(parseSpec("private kP. channel c.\n"
                            "process P = new kP. out(c, kP)."),
                  Error);
}

TEST_CASE("processes may carry holes for composition roles") {
  ProtocolSpec sp = parseSpec(
      "free a. channel c.\n"
      "process P1 = out(c, a). [x1 := a]. _1.");
  CHECK(countHoles(sp.process("P1")->body) == 1);
}

TEST_CASE("context binders are visible to later processes") {
  ProtocolSpec sp = parseSpec(
      "channel c.\n"
      "context C = new ska. _1.\n"
      "process P = out(c, pk(ska)).");
  World& w = *sp.w;
  Term ska = sp.context("C")->body->name;
  CHECK(w.str(ska->ident) == "ska");
  CHECK(sp.process("P")->body->term == w.app(w.S_pk, {ska}));
  // own binders never collide with a context's name
  ProtocolSpec sp2 = parseSpec(
      "channel c.\ncontext C = new k. _1.\nprocess Q = new k. out(c, k).");
  CHECK(sp2.process("Q")->body->name != sp2.context("C")->body->name);
}
