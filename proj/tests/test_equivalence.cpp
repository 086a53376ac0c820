#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "equicompose/equivalence.hpp"
#include "equicompose/parser.hpp"

using namespace eqc;

namespace {

Config initOf(ProtocolSpec& sp, Executor& ex, const std::string& name) {
  return ex.init(sp.process(name)->body);
}

}  // namespace

TEST_CASE("identical processes are trace equivalent") {
  ProtocolSpec sp = parseSpec(
      "free a. channel c.\n"
      "process P = out(c, a). in(c, y). out(c, y).");
  Executor ex(*sp.th, *sp.f, sp.publics(), {.actions = 4, .recipes = 1});
  EquivResult r = traceEquiv(ex, initOf(sp, ex, "P"), ex, initOf(sp, ex, "P"));
  CHECK(r.verdict == Verdict::Holds);
  CHECK(!r.witness);
}

TEST_CASE("inclusion holds into a larger process") {
  ProtocolSpec sp = parseSpec(
      "free a, b. channel c.\n"
      "process P = out(c, a).\nprocess Q = (out(c, a) | out(c, b)).");
  Executor ex(*sp.th, *sp.f, sp.publics(), {.actions = 2, .recipes = 1});
  EquivResult inc =
      traceIncluded(ex, initOf(sp, ex, "P"), ex, initOf(sp, ex, "Q"));
  CHECK(inc.verdict == Verdict::Holds);
  // the reverse inclusion fails: Q can emit b, which P cannot imitate
  EquivResult rev =
      traceIncluded(ex, initOf(sp, ex, "Q"), ex, initOf(sp, ex, "P"));
  REQUIRE(rev.verdict == Verdict::Refuted);
  REQUIRE(rev.witness);
  CHECK(rev.witness->reason == "frames-distinguished");
  CHECK(rev.witness->labels.size() == 1);
  EquivResult eq = traceEquiv(ex, initOf(sp, ex, "P"), ex, initOf(sp, ex, "Q"));
  CHECK(eq.verdict == Verdict::Refuted);
  CHECK(eq.note == "inclusion of second in first fails");
}

TEST_CASE("missing action refutes with a shortest witness") {
  ProtocolSpec sp = parseSpec(
      "free a, b. channel c.\n"
      "process P = out(c, a). out(c, b).\nprocess Q = out(c, a).");
  Executor ex(*sp.th, *sp.f, sp.publics(), {.actions = 4, .recipes = 1});
  EquivResult r =
      traceIncluded(ex, initOf(sp, ex, "P"), ex, initOf(sp, ex, "Q"));
  REQUIRE(r.verdict == Verdict::Refuted);
  REQUIRE(r.witness);
  CHECK(r.witness->reason == "no-matching-trace");
  CHECK(r.witness->labels.size() == 2);
}

TEST_CASE("frame distinction refutes at the first revealing point") {
  ProtocolSpec sp = parseSpec(
      "free a, b. channel c.\n"
      "process P = new k. out(c, senc(a, k)). out(c, k).\n"
      "process Q = new k. out(c, senc(b, k)). out(c, k).");
  Executor ex(*sp.th, *sp.f, sp.publics(), {.actions = 4, .recipes = 2});
  EquivResult r =
      traceIncluded(ex, initOf(sp, ex, "P"), ex, initOf(sp, ex, "Q"));
  REQUIRE(r.verdict == Verdict::Refuted);
  REQUIRE(r.witness);
  CHECK(r.witness->reason == "frames-distinguished");
  // without the key the ciphertexts are indistinguishable, so the witness
  // needs exactly the two outputs
  CHECK(r.witness->labels.size() == 2);
  CHECK(r.witness->recipeM);
}

TEST_CASE("tau steps need no matching label") {
  ProtocolSpec sp = parseSpec(
      "free a. channel c.\n"
      "process P = new d : channel. (out(d, a) | in(d, x). out(c, x)).\n"
      "process Q = out(c, a).");
  Executor ex(*sp.th, *sp.f, sp.publics(), {.actions = 4, .recipes = 1});
  EquivResult r = traceEquiv(ex, initOf(sp, ex, "P"), ex, initOf(sp, ex, "Q"));
  CHECK(r.verdict == Verdict::Holds);
}

TEST_CASE("diff process under trace inclusion reports unknown") {
  ProtocolSpec sp = parseSpec(
      "free a, b. channel c.\n"
      "process P = out(c, diff[a, b]).");
  Executor ex(*sp.th, *sp.f, sp.publics(), {.actions = 2, .recipes = 1});
  EquivResult r =
      traceIncluded(ex, initOf(sp, ex, "P"), ex, initOf(sp, ex, "P"));
  CHECK(r.verdict == Verdict::Unknown);
  CHECK(r.note == "diff processes are not supported by trace inclusion");
}

TEST_CASE("diff-equivalence holds for keyed encryption of diff payloads") {
  ProtocolSpec sp = parseSpec(
      "free a, b. channel c.\n"
      "process P = new k. out(c, diff[senc(a, k), senc(b, k)]). in(c, y). "
      "out(c, h(y)).");
  Executor ex(*sp.th, *sp.f, sp.publics(), {.actions = 4, .recipes = 2});
  EquivResult r = diffEquiv(ex, initOf(sp, ex, "P"));
  CHECK(r.verdict == Verdict::Holds);
  CHECK(r.statesExplored > 1);
}

TEST_CASE("diff-equivalence refutes on a distinguishable biframe") {
  ProtocolSpec sp = parseSpec(
      "free a, b. channel c.\n"
      "process P = new k. out(c, senc(a, k)). out(c, diff[a, b]).");
  Executor ex(*sp.th, *sp.f, sp.publics(), {.actions = 3, .recipes = 1});
  EquivResult r = diffEquiv(ex, initOf(sp, ex, "P"));
  REQUIRE(r.verdict == Verdict::Refuted);
  REQUIRE(r.witness);
  CHECK(r.witness->reason == "frames-distinguished");
  CHECK(r.witness->labels.size() == 2);
}

TEST_CASE("diff-equivalence refutes on conditional divergence") {
  ProtocolSpec sp = parseSpec(
      "free a, b. channel c.\n"
      "process P = in(c, y). if y = diff[a, b] then out(c, a) else 0.");
  Executor ex(*sp.th, *sp.f, sp.publics(), {.actions = 3, .recipes = 1});
  EquivResult r = diffEquiv(ex, initOf(sp, ex, "P"));
  REQUIRE(r.verdict == Verdict::Refuted);
  REQUIRE(r.witness);
  CHECK(r.witness->reason == "divergence");
  CHECK(r.witness->divergence);
}

TEST_CASE("diff-equivalence implies trace equivalence of the projections") {
  ProtocolSpec sp = parseSpec(
      "free a, b. channel c.\n"
      "process P = new k. out(c, diff[senc(a, k), senc(b, k)]).");
  Executor ex(*sp.th, *sp.f, sp.publics(), {.actions = 2, .recipes = 2});
  Config c0 = initOf(sp, ex, "P");
  REQUIRE(diffEquiv(ex, c0).verdict == Verdict::Holds);
  ProcP fst = procFst(*sp.f, sp.process("P")->body);
  ProcP snd = procSnd(*sp.f, sp.process("P")->body);
  EquivResult r = traceEquiv(ex, ex.init(fst), ex, ex.init(snd));
  CHECK(r.verdict == Verdict::Holds);
}

TEST_CASE("replication separation: trace equivalence without diff-equivalence") {
  // Two sessions exchange fresh payloads; swapping which session carries
  // which constant preserves trace equivalence but breaks lockstep.
  ProtocolSpec sp = parseSpec(
      "free yes, no. channel c.\n"
      "process Ctx =\n"
      "  new k. ! new k1. ! new k2.\n"
      "  out(c, senc(<k1, k2>, k)). in(c, x).\n"
      "  if x = senc(<k1, k2>, k) then 0 else\n"
      "  if proj1(sdec(x, k)) = k1 then out(c, diff[yes, no])\n"
      "  else out(c, diff[no, yes]).");
  Executor ex(*sp.th, *sp.f, sp.publics(),
              {.actions = 4, .recipes = 1, .unfold = 2});
  ProcP body = sp.process("Ctx")->body;
  EquivResult d = diffEquiv(ex, ex.init(body));
  CHECK(d.verdict == Verdict::Refuted);
  EquivResult t =
      traceEquiv(ex, ex.init(procFst(*sp.f, body)), ex,
                 ex.init(procSnd(*sp.f, body)));
  CHECK(t.verdict == Verdict::Holds);
}
