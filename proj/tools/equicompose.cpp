#include "CLI11.hpp"
#include "equicompose/report.hpp"
#include "equicompose/tagging.hpp"
#include "json.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>

using namespace eqc;
using ordered = nlohmann::ordered_json;

namespace {

constexpr int kExitUsage = 10;
constexpr int kExitSpec = 11;

struct Opts {
  std::string spec;
  std::string boundsStr;
  std::string out;
  std::string name;     // compose block / declaration selector
  std::string process;  // tag: process name
  std::string theory;   // tag: theory name
  bool json = false;
  bool audit = false;
  bool traceOnly = false;
};

Bounds parseBounds(const std::string& s) {
  Bounds b;
  if (s.empty()) return b;
  size_t pos = 0;
  while (pos < s.size()) {
    size_t comma = s.find(',', pos);
    std::string item = s.substr(pos, comma == std::string::npos
                                         ? std::string::npos
                                         : comma - pos);
    size_t eq = item.find('=');
    if (eq == std::string::npos)
      fail("BadBounds", "expected key=value in --bounds, got '" + item + "'");
    std::string key = item.substr(0, eq);
    int val = 0;
    try {
      val = std::stoi(item.substr(eq + 1));
    } catch (const std::exception&) {
      fail("BadBounds", "non-numeric bound '" + item + "'");
    }
    if (val <= 0) fail("BadBounds", "bounds must be positive: '" + item + "'");
    if (key == "actions")
      b.actions = val;
    else if (key == "recipes")
      b.recipes = val;
    else if (key == "unfold")
      b.unfold = val;
    else
      fail("BadBounds", "unknown bound '" + key + "'");
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return b;
}

void readThreadsEnv() {
  const char* env = std::getenv("EQUICOMPOSE_THREADS");
  if (!env) return;
  try {
    if (std::stoi(env) <= 0) fail("BadThreads", "thread count must be positive");
  } catch (const std::exception&) {
    fail("BadThreads", std::string("EQUICOMPOSE_THREADS='") + env +
                           "' is not a positive integer");
  }
}

void emit(const Opts& o, const std::string& text) {
  if (o.out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(o.out);
  if (!f) fail("BadOutput", "cannot open " + o.out);
  f << text;
}

int worse(int a, int b) {
  // refuted (1) dominates unknown (2) dominates holds (0)
  if (a == 1 || b == 1) return 1;
  return std::max(a, b);
}

std::vector<Term> frameEntries(const ProtocolSpec& spec,
                               const std::string& name,
                               std::vector<Term>* restricted = nullptr) {
  if (name.empty()) return {};
  const FrameDef* fd = spec.frame(name);
  if (!fd) fail("UnknownFrame", "frame " + name + " is not declared");
  if (restricted)
    restricted->insert(restricted->end(), fd->restricted.begin(),
                       fd->restricted.end());
  return fd->entries;
}

const SystemDef& systemOf(const ProtocolSpec& spec, const std::string& name) {
  const SystemDef* sd = spec.system(name);
  if (!sd) fail("UnknownSystem", "system " + name + " is not declared");
  return *sd;
}

Config initSystem(const ProtocolSpec& spec, Executor& ex,
                  const SystemDef& sd) {
  std::vector<Term> restricted = sd.restricted;
  std::vector<Term> frame = frameEntries(spec, sd.frame, &restricted);
  return ex.init(sd.proc, restricted, frame);
}

std::vector<const Query*> queriesOf(const ProtocolSpec& spec,
                                    const std::string& kind) {
  std::vector<const Query*> out;
  for (const Query& q : spec.queries)
    if (q.kind == kind) out.push_back(&q);
  if (out.empty())
    fail("NoQuery", "spec declares no '" + kind + "' query");
  return out;
}

int emitVerdicts(
    const Opts& o, const Bounds& b,
    const std::vector<std::pair<Verdict, std::string>>& results) {
  std::string text;
  int code = 0;
  for (auto& [v, witness] : results) {
    text += o.json ? verdictJson(v, b, witness) : verdictText(v, b, witness);
    code = worse(code, verdictExit(v));
  }
  emit(o, text);
  return code;
}

int cmdParse(ProtocolSpec& spec, const Opts& o) {
  emit(o, printSpec(spec));
  return 0;
}

int cmdNormalize(ProtocolSpec& spec, const Opts& o, const Bounds&) {
  World& w = *spec.w;
  std::string text;
  ordered arr = ordered::array();
  for (const Query* q : queriesOf(spec, "normalize")) {
    Term n = spec.th->normalize(q->term);
    if (o.json) {
      ordered j;
      j["term"] = w.show(q->term);
      j["normal"] = w.show(n);
      arr.push_back(j);
    } else {
      text += w.show(q->term) + " -> " + w.show(n) + "\n";
    }
  }
  if (o.json) {
    ordered j;
    j["schema"] = 1;
    j["results"] = arr;
    text = j.dump(2) + "\n";
  }
  emit(o, text);
  return 0;
}

int cmdDeduce(ProtocolSpec& spec, const Opts& o, const Bounds& b) {
  World& w = *spec.w;
  const Theory& th = *spec.th;
  std::vector<std::pair<Verdict, std::string>> results;
  for (const Query* q : queriesOf(spec, "deduce")) {
    std::vector<Term> frame = frameEntries(spec, q->args[0]);
    KB kb = saturate(th, frame, spec.publics(), b.recipes);
    if (auto r = deduce(th, kb, th.normalize(q->term)))
      results.push_back({Verdict::Holds, "recipe " + w.show(*r)});
    else
      results.push_back({Verdict::Unknown,
                         w.show(q->term) + " not derivable within depth " +
                             std::to_string(b.recipes)});
  }
  return emitVerdicts(o, b, results);
}

int cmdStaticEquiv(ProtocolSpec& spec, const Opts& o, const Bounds& b) {
  World& w = *spec.w;
  std::vector<std::pair<Verdict, std::string>> results;
  for (const Query* q : queriesOf(spec, "static-equiv")) {
    std::vector<Term> f1 = frameEntries(spec, q->args[0]);
    std::vector<Term> f2 = frameEntries(spec, q->args[1]);
    StaticEquivResult r =
        staticEquiv(*spec.th, f1, f2, spec.publics(), b.recipes);
    std::string witness;
    if (r.verdict == Verdict::Refuted)
      witness = "recipes " + w.show(r.recipeM) + " and " + w.show(r.recipeN) +
                " agree on " + (r.failsOnSecond ? "the first" : "the second") +
                " frame only";
    else if (!r.note.empty())
      witness = r.note;
    results.push_back({r.verdict, witness});
  }
  return emitVerdicts(o, b, results);
}

int cmdTraceEquiv(ProtocolSpec& spec, const Opts& o, const Bounds& b) {
  World& w = *spec.w;
  std::vector<std::pair<Verdict, std::string>> results;
  for (const Query* q : queriesOf(spec, "trace-equiv")) {
    Executor exA(*spec.th, *spec.f, spec.publics(), b);
    Executor exB(*spec.th, *spec.f, spec.publics(), b);
    Config a = initSystem(spec, exA, systemOf(spec, q->args[0]));
    Config c = initSystem(spec, exB, systemOf(spec, q->args[1]));
    EquivResult r = traceEquiv(exA, a, exB, c);
    results.push_back({r.verdict, equivWitness(w, r)});
  }
  return emitVerdicts(o, b, results);
}

int cmdDiffEquiv(ProtocolSpec& spec, const Opts& o, const Bounds& b) {
  World& w = *spec.w;
  std::vector<std::pair<Verdict, std::string>> results;
  for (const Query* q : queriesOf(spec, "diff-equiv")) {
    Executor ex(*spec.th, *spec.f, spec.publics(), b);
    Config c = initSystem(spec, ex, systemOf(spec, q->args[0]));
    EquivResult r = diffEquiv(ex, c);
    results.push_back({r.verdict, equivWitness(w, r)});
  }
  return emitVerdicts(o, b, results);
}

int cmdCheckSecrecy(ProtocolSpec& spec, const Opts& o, const Bounds& b) {
  World& w = *spec.w;
  const Theory& th = *spec.th;
  std::vector<std::pair<Verdict, std::string>> results;
  for (const Query* q : queriesOf(spec, "secrecy")) {
    Executor ex(th, *spec.f, spec.publics(), b);
    Config start = initSystem(spec, ex, systemOf(spec, q->args[0]));
    Verdict v = Verdict::Holds;
    std::string witness;
    std::vector<Term> targets = {th.normalize(fstT(w, q->term))};
    Term snd = th.normalize(sndT(w, q->term));
    if (snd != targets[0]) targets.push_back(snd);
    for (const TraceNode& node : explore(ex, start)) {
      const KB& kb = ex.knowledge(node.config);
      for (Term t : targets)
        if (deduce(th, kb, t)) {
          v = Verdict::Refuted;
          witness = w.show(q->term) + " derivable after " +
                    showTrace(w, node.labels);
          break;
        }
      if (v == Verdict::Refuted) break;
    }
    results.push_back({v, witness});
  }
  return emitVerdicts(o, b, results);
}

int cmdTag(ProtocolSpec& spec, const Opts& o) {
  World& w = *spec.w;
  std::string pname = o.process;
  if (pname.empty() && !spec.processes.empty())
    pname = spec.processes.front().name;
  const ProcDef* pd = spec.process(pname);
  if (!pd) fail("UnknownProcess", "process " + pname + " is not declared");
  std::string tname = o.theory;
  if (tname.empty() && !spec.theoryOrder.empty())
    tname = spec.theoryOrder.front();
  auto it = spec.theoryIndex.find(tname);
  if (it == spec.theoryIndex.end())
    fail("UnknownTheory", "theory " + tname + " is not declared");
  ProcP tagged = tagProcess(*spec.f, it->second, pd->body);
  if (o.json) {
    ordered j;
    j["schema"] = 1;
    j["process"] = pname;
    j["theory"] = tname;
    j["tagged"] = showProc(w, tagged);
    emit(o, j.dump(2) + "\n");
  } else {
    emit(o, showProc(w, tagged) + "\n");
  }
  return 0;
}

std::vector<const ComposeDef*> composesOf(const ProtocolSpec& spec,
                                          const Opts& o,
                                          std::optional<bool> sequential) {
  std::vector<const ComposeDef*> out;
  for (const ComposeDef& d : spec.composes) {
    if (!o.name.empty() && d.name != o.name) continue;
    if (sequential && d.sequential != *sequential) continue;
    out.push_back(&d);
  }
  if (out.empty())
    fail("NoCompose", o.name.empty()
                          ? std::string("spec declares no matching compose block")
                          : "no matching compose block named " + o.name);
  return out;
}

int emitReports(const Opts& o, const std::vector<CompositionReport>& reps) {
  std::string text;
  int code = 0;
  for (const CompositionReport& rep : reps) {
    text += o.json ? reportJson(rep) : reportText(rep);
    code = worse(code, verdictExit(rep.conclusion));
  }
  emit(o, text);
  return code;
}

int cmdComposability(ProtocolSpec& spec, const Opts& o, const Bounds& b) {
  std::vector<CompositionReport> reps;
  for (const ComposeDef* d : composesOf(spec, o, std::nullopt))
    reps.push_back(composabilityFor(spec, *d, b));
  return emitReports(o, reps);
}

int cmdGoodKE(ProtocolSpec& spec, const Opts& o, const Bounds& b) {
  std::vector<CompositionReport> reps;
  for (const ComposeDef* d : composesOf(spec, o, true))
    reps.push_back(goodKEFor(spec, *d, b));
  return emitReports(o, reps);
}

int cmdAbstractability(ProtocolSpec& spec, const Opts& o, const Bounds& b) {
  std::vector<CompositionReport> reps;
  for (const ComposeDef* d : composesOf(spec, o, std::nullopt))
    reps.push_back(abstractabilityFor(spec, *d, b));
  return emitReports(o, reps);
}

int cmdComposeParallel(ProtocolSpec& spec, const Opts& o, const Bounds& b) {
  std::vector<CompositionReport> reps;
  for (const ComposeDef* d : composesOf(spec, o, false))
    reps.push_back(composeParallel(spec, *d, b, o.audit));
  return emitReports(o, reps);
}

int cmdComposeSequential(ProtocolSpec& spec, const Opts& o, const Bounds& b) {
  std::vector<CompositionReport> reps;
  for (const ComposeDef* d : composesOf(spec, o, true))
    reps.push_back(composeSequential(spec, *d, b, o.audit, o.traceOnly));
  return emitReports(o, reps);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bounded checker for composing tagged protocols"};
  app.require_subcommand(1);

  Opts o;
  const char* names[] = {"parse",          "normalize",
                         "deduce",         "static-equiv",
                         "trace-equiv",    "diff-equiv",
                         "check-secrecy",  "tag",
                         "check-composability", "check-good-ke",
                         "check-abstractability", "compose-parallel",
                         "compose-sequential"};
  for (const char* n : names) {
    CLI::App* sub = app.add_subcommand(n);
    sub->add_option("spec", o.spec, "protocol spec (.pi)")->required();
    sub->add_option("--bounds", o.boundsStr,
                    "actions=K,recipes=D,unfold=N (any subset)");
    sub->add_option("--out", o.out, "write the report to a file");
    sub->add_flag("--json", o.json, "machine-readable output");
    std::string sn = n;
    if (sn == "compose-parallel" || sn == "compose-sequential")
      sub->add_flag("--audit", o.audit,
                    "directly check the composed system as well");
    if (sn == "compose-sequential")
      sub->add_flag("--trace-only", o.traceOnly,
                    "skip the P+ check (experimental, trace equivalence only)");
    if (sn.rfind("check-", 0) == 0 || sn.rfind("compose-", 0) == 0)
      sub->add_option("--name", o.name, "compose block to check (default all)");
    if (sn == "tag") {
      sub->add_option("--process", o.process, "process to tag (default first)");
      sub->add_option("--theory", o.theory, "tagging theory (default first)");
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int r = app.exit(e);
    return r == 0 ? 0 : kExitUsage;
  }

  try {
    readThreadsEnv();
    Bounds b = parseBounds(o.boundsStr);
    ProtocolSpec spec = parseSpecFile(o.spec);
    const std::string cmd = app.get_subcommands().front()->get_name();
    if (cmd == "parse") return cmdParse(spec, o);
    if (cmd == "normalize") return cmdNormalize(spec, o, b);
    if (cmd == "deduce") return cmdDeduce(spec, o, b);
    if (cmd == "static-equiv") return cmdStaticEquiv(spec, o, b);
    if (cmd == "trace-equiv") return cmdTraceEquiv(spec, o, b);
    if (cmd == "diff-equiv") return cmdDiffEquiv(spec, o, b);
    if (cmd == "check-secrecy") return cmdCheckSecrecy(spec, o, b);
    if (cmd == "tag") return cmdTag(spec, o);
    if (cmd == "check-composability") return cmdComposability(spec, o, b);
    if (cmd == "check-good-ke") return cmdGoodKE(spec, o, b);
    if (cmd == "check-abstractability") return cmdAbstractability(spec, o, b);
    if (cmd == "compose-parallel") return cmdComposeParallel(spec, o, b);
    if (cmd == "compose-sequential") return cmdComposeSequential(spec, o, b);
    return kExitUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.kind == "BadBounds" || e.kind == "BadThreads" ? kExitUsage
                                                           : kExitSpec;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitSpec;
  }
}
