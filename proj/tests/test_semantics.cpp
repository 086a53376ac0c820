#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>

#include "equicompose/parser.hpp"
#include "equicompose/semantics.hpp"

using namespace eqc;

namespace {

ProtocolSpec dhSpec() {
  return parseSpec(R"(
theory DH {
  fun f/2.
  fun g/1.
  permutative f(g(x), y) = f(g(y), x).
}
channel c.
process PA(skA, skB) =
  new rA. new nA.
  out(c, aenc(<nA, g(rA)>, pk(skB))).
  in(c, yA).
  if proj1(adec(yA, skA)) = nA then
    [xA := f(proj2(adec(yA, skA)), rA)].
process PB(skA, skB) =
  new rB.
  in(c, yB).
  out(c, aenc(<proj1(adec(yB, skB)), g(rB)>, pk(skA))).
  [xB := f(proj2(adec(yB, skB)), rB)].
)");
}

Label outL(Term c, int i) {
  Label l;
  l.k = Label::Out;
  l.chan = c;
  l.windex = i;
  return l;
}
Label inL(Term c, Term r) {
  Label l;
  l.k = Label::In;
  l.chan = c;
  l.recipe = r;
  return l;
}

uint32_t sigmaVar(const World& w, const Config& c, const std::string& prefix) {
  for (auto& [v, e] : c.sigma)
    if (w.str(v).rfind(prefix, 0) == 0) return v;
  return 0;
}

}  // namespace

TEST_CASE("assignments reduce internally and are recorded") {
  ProtocolSpec sp = parseSpec(
      "free k. channel c.\nprocess P = [x := senc(k, k)]. out(c, x).");
  Executor ex(*sp.th, *sp.f, sp.publics(), {});
  Config c = ex.init(sp.process("P")->body);
  REQUIRE(c.procs.size() == 1);
  CHECK(c.procs[0]->k == Proc::Out);
  REQUIRE(c.sigma.size() == 1);
  const SigmaEntry& e = c.sigma.begin()->second;
  CHECK(e.isAssign);
  World& w = *sp.w;
  CHECK(e.value == w.app(w.S_senc, {w.name("k"), w.name("k")}));
  // value substituted into the continuation
  CHECK(c.procs[0]->term == e.value);
}

TEST_CASE("output extends the frame with sequential handles") {
  ProtocolSpec sp = parseSpec(
      "free a, b. channel c.\nprocess P = out(c, a). out(c, b).");
  Executor ex(*sp.th, *sp.f, sp.publics(), {.actions = 4, .recipes = 1});
  Config c0 = ex.init(sp.process("P")->body);
  auto s1 = ex.steps(c0);
  REQUIRE(s1.size() == 1);
  CHECK(s1[0].label == outL(sp.channels[0], 1));
  auto s2 = ex.steps(s1[0].config);
  REQUIRE(s2.size() == 1);
  CHECK(s2[0].label == outL(sp.channels[0], 2));
  REQUIRE(s2[0].config.frame.size() == 2);
  CHECK(s2[0].config.frame[0].value == sp.w->name("a"));
  CHECK(s2[0].config.frame[1].value == sp.w->name("b"));
}

TEST_CASE("parallel outputs interleave both ways") {
  ProtocolSpec sp = parseSpec(
      "free a, b. channel c.\nprocess P = out(c, a) | out(c, b).");
  Executor ex(*sp.th, *sp.f, sp.publics(), {.actions = 2, .recipes = 1});
  auto nodes = explore(ex, ex.init(sp.process("P")->body));
  int full = 0;
  for (auto& n : nodes)
    if (n.labels.size() == 2) ++full;
  CHECK(full == 2); // frames [a,b] and [b,a]
}

TEST_CASE("input branches over saturated recipes only") {
  ProtocolSpec sp = parseSpec(
      "free a. channel c, d.\nprocess P = in(c, x). out(c, x).");
  Executor ex(*sp.th, *sp.f, sp.publics(), {.actions = 2, .recipes = 1});
  Config c0 = ex.init(sp.process("P")->body);
  auto ss = ex.steps(c0);
  // depth-1 recipes: only the public base name a (channels excluded)
  REQUIRE(ss.size() == 1);
  CHECK(ss[0].label == inL(sp.channels[0], sp.w->name("a")));
  REQUIRE(ss[0].config.procs.size() == 1);
  CHECK(ss[0].config.procs[0]->term == sp.w->name("a"));
}

TEST_CASE("communication on a private channel is silent") {
  ProtocolSpec sp = parseSpec(
      "free s. channel c.\n"
      "process P = new d : channel. (out(d, s) | in(d, x). out(c, x)).");
  Executor ex(*sp.th, *sp.f, sp.publics(), {.actions = 3, .recipes = 1});
  Config c0 = ex.init(sp.process("P")->body);
  auto ss = ex.steps(c0);
  REQUIRE(ss.size() == 1);
  CHECK(ss[0].label.k == Label::Tau);
  auto s2 = ex.steps(ss[0].config);
  REQUIRE(s2.size() == 1);
  CHECK(s2[0].label.k == Label::Out);
  CHECK(s2[0].config.frame[0].value == sp.w->name("s"));
  // private outputs never show up as visible steps
  for (auto& s : ss) CHECK(s.label.k != Label::Out);
}

TEST_CASE("key exchange runs to completion") {
  ProtocolSpec sp = dhSpec();
  World& w = *sp.w;
  Term skA = w.name("skA");
  Term skB = w.name("skB");
  Term c = sp.channels[0];
  ProcP sys = sp.f->par(sp.instantiate("PA", {skA, skB}),
                        sp.instantiate("PB", {skA, skB}));
  Executor ex(*sp.th, *sp.f, sp.publics(), {.actions = 4, .recipes = 1});
  Config c0 = ex.init(sys, {skA, skB},
                      {w.app(w.S_pk, {skA}), w.app(w.S_pk, {skB})});
  auto nodes = explore(ex, c0);
  std::vector<Label> want = {outL(c, 3), inL(c, handleVar(w, 3)), outL(c, 4),
                             inL(c, handleVar(w, 4))};
  const TraceNode* hit = nullptr;
  for (auto& n : nodes)
    if (n.labels == want) hit = &n;
  REQUIRE(hit);
  const Config& fin = hit->config;
  CHECK(fin.procs.empty());
  // both parties computed the same key
  uint32_t xA = sigmaVar(w, fin, "xA");
  uint32_t xB = sigmaVar(w, fin, "xB");
  REQUIRE(xA);
  REQUIRE(xB);
  Term key = fin.sigma.at(xA).value;
  CHECK(key == fin.sigma.at(xB).value);
  REQUIRE(isApp(key));
  CHECK(w.sym(key->sym).name == "f");
  // restricted names now include the generated randomness
  auto has = [&](const std::string& s) {
    for (Term n : fin.restricted)
      if (w.str(n->ident).rfind(s, 0) == 0) return true;
    return false;
  };
  CHECK(has("rA"));
  CHECK(has("rB"));
  CHECK(has("nA"));
  REQUIRE(fin.frame.size() == 4);
  REQUIRE(isApp(fin.frame[2].value));
  CHECK(fin.frame[2].value->sym == w.S_aenc);
}

TEST_CASE("undeclared identifiers in processes are rejected") {
  CHECK_THROWS_AS(parseSpec("free a. channel c.\n"
                            "process P = out(c, nonce)."),
                  Error);
}

TEST_CASE("conditional takes the else branch on mismatch") {
  ProtocolSpec sp = parseSpec(
      "free a, b, bad. channel c.\n"
      "process P = in(c, y). if y = a then 0 else out(c, bad).");
  Executor ex(*sp.th, *sp.f, sp.publics(), {.actions = 2, .recipes = 1});
  auto nodes = explore(ex, ex.init(sp.process("P")->body));
  bool sawBad = false, sawSilent = false;
  for (auto& n : nodes) {
    if (n.labels.size() == 1) {
      if (n.config.procs.empty())
        sawSilent = true; // input matched a, then-branch is 0
      else
        sawBad = true;
    }
  }
  CHECK(sawBad);
  CHECK(sawSilent);
}

TEST_CASE("replication unfolds with indexed copies") {
  ProtocolSpec sp = parseSpec(
      "channel c.\nprocess P = ! new k. ! new n. out(c, senc(n, k)).");
  World& w = *sp.w;
  Executor ex(*sp.th, *sp.f, sp.publics(), {.actions = 4, .recipes = 1, .unfold = 2});
  Config c0 = ex.init(sp.process("P")->body);
  REQUIRE(c0.procs.size() == 4);
  // four outputs senc(n[i,j], k[i])
  std::vector<std::string> shown;
  for (ProcP p : c0.procs) {
    REQUIRE(p->k == Proc::Out);
    shown.push_back(w.show(p->term));
  }
  std::sort(shown.begin(), shown.end());
  // binder names carry the instantiation suffix; check index structure
  for (auto& s : shown) {
    CHECK((s.find("[1,1]") != std::string::npos ||
           s.find("[1,2]") != std::string::npos ||
           s.find("[2,1]") != std::string::npos ||
           s.find("[2,2]") != std::string::npos));
  }
  // restricted names: k[1], k[2] and the four n[i,j]
  CHECK(c0.restricted.size() == 6);
  // static unfolding agrees with the on-the-fly expansion
  ProcP unf = unfoldReplication(*sp.f, sp.process("P")->body, 2);
  Config c1 = ex.init(unf);
  CHECK(c0.key(w) == c1.key(w));
}

TEST_CASE("biprocess divergence is detected") {
  ProtocolSpec sp = parseSpec(
      "free a, b. channel c.\n"
      "process P = out(c, a). in(c, y). if diff[y = a; y = b] then out(c, a).");
  Executor ex(*sp.th, *sp.f, sp.publics(), {.actions = 3, .recipes = 1});
  auto nodes = explore(ex, ex.init(sp.process("P")->body));
  bool diverged = false;
  for (auto& n : nodes)
    if (n.config.diverged) {
      diverged = true;
      CHECK(ex.steps(n.config).empty());
    }
  CHECK(diverged);
}

TEST_CASE("diff outputs build biframes and inputs evaluate both sides") {
  ProtocolSpec sp = parseSpec(
      "free a, b. channel c.\n"
      "process P = new k. out(c, diff[senc(a, k), senc(b, k)]). in(c, y). "
      "out(c, y).");
  World& w = *sp.w;
  Term k = w.name("k");
  Term biv = w.diffT(w.app(w.S_senc, {w.name("a"), k}),
                     w.app(w.S_senc, {w.name("b"), k}));
  Executor ex(*sp.th, *sp.f, sp.publics(), {.actions = 3, .recipes = 1});
  Config c0 = ex.init(sp.process("P")->body);
  auto s1 = ex.steps(c0);
  REQUIRE(s1.size() == 1);
  CHECK(s1[0].config.frame[0].value == biv);
  // input of w1 binds the biterm; forwarding keeps it
  const Config& c1 = s1[0].config;
  auto s2 = ex.steps(c1);
  const Config* fwd = nullptr;
  for (auto& s : s2)
    if (s.label == inL(sp.channels[0], handleVar(w, 1))) fwd = &s.config;
  REQUIRE(fwd);
  auto s3 = ex.steps(*fwd);
  REQUIRE(s3.size() >= 1);
  CHECK(s3[0].config.frame[1].value == biv);
}

TEST_CASE("stepsMatching follows a given label") {
  ProtocolSpec sp = parseSpec(
      "free a, b. channel c.\n"
      "process P = out(c, a). 0.\nprocess Q = out(c, b). 0.");
  Executor ex(*sp.th, *sp.f, sp.publics(), {.actions = 2, .recipes = 1});
  Config cp = ex.init(sp.process("P")->body);
  Config cq = ex.init(sp.process("Q")->body);
  auto sp1 = ex.steps(cp);
  REQUIRE(sp1.size() == 1);
  auto m = ex.stepsMatching(cq, sp1[0].label);
  REQUIRE(m.size() == 1);
  CHECK(m[0].frame[0].value == sp.w->name("b"));
  // mismatched windex yields nothing
  Label bad = outL(sp.channels[0], 5);
  CHECK(ex.stepsMatching(cq, bad).empty());
}

TEST_CASE("shareViaAssignments rewrites only beta actions") {
  ProtocolSpec sp = parseSpec(
      "theory T1 { fun enca/2. }\ntheory T2 { fun encb/2. }\n"
      "free k. channel c.\n"
      "process Q = out(c, enca(k, k))@T1. out(c, encb(k, k))@T2.");
  World& w = *sp.w;
  Term k = w.name("k");
  Term z = w.var("z1");
  ProcP q = shareViaAssignments(
      *sp.f, sp.process("Q")->body, {{k, z}},
      [&](int color) { return color == 2; });
  REQUIRE(q->k == Proc::Assign);
  CHECK(q->term == k);
  ProcP o1 = q->a;
  REQUIRE(o1->k == Proc::Out);
  // alpha action untouched, beta action rewritten
  int enca = w.symbolByName("enca");
  int encb = w.symbolByName("encb");
  CHECK(o1->term == w.app(enca, {k, k}));
  CHECK(o1->a->term == w.app(encb, {z, z}));
}

TEST_CASE("exploration respects the action bound") {
  ProtocolSpec sp = parseSpec(
      "free a. channel c.\n"
      "process P = out(c, a). out(c, a). out(c, a). out(c, a).");
  Executor ex(*sp.th, *sp.f, sp.publics(), {.actions = 2, .recipes = 1});
  auto nodes = explore(ex, ex.init(sp.process("P")->body));
  for (auto& n : nodes) CHECK(n.labels.size() <= 2);
  CHECK(nodes.size() == 3);
}
