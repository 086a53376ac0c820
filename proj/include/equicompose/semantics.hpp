#pragma once

#include "equicompose/knowledge.hpp"
#include "equicompose/process.hpp"

#include <array>
#include <deque>
#include <functional>
#include <memory>
#include <optional>

namespace eqc {

struct Bounds {
  int actions = 6; // transition steps explored per trace
  int recipes = 2; // recipe depth for inputs and static equivalence
  int unfold = 1;  // copies spawned per replication
};

struct SigmaEntry {
  Term value;
  int color = 0;
  bool isAssign = false; // assignment vs input binding
};

struct FrameEntry {
  Term value;
  int color = 0;
};

struct Label {
  enum K : uint8_t { Out, In, Tau } k = Tau;
  Term chan = nullptr;
  int windex = 0;        // Out: handle index
  Term recipe = nullptr; // In
  bool operator==(const Label& o) const {
    return k == o.k && chan == o.chan && windex == o.windex &&
           recipe == o.recipe;
  }
  std::string show(const World& w) const;
};

struct Divergence {
  Formula phi;   // conditional whose sides disagree
  bool fstThen = false; // which side took the then branch
};

struct Config {
  std::vector<Term> restricted;  // includes restricted channels
  std::vector<ProcP> procs;      // live parallel components
  std::vector<FrameEntry> frame; // w1.. in order
  std::map<uint32_t, SigmaEntry> sigma;
  std::optional<Divergence> diverged;

  std::vector<Term> frameValues() const;
  // Deterministic structural key for deduplication.
  const std::string& key(const World& w) const;

 private:
  mutable std::string key_;
};

class Executor {
 public:
  Executor(const Theory& th, ProcFactory& f, std::vector<Term> publics,
           Bounds bounds);

  // Initial configuration: internal reductions applied.
  Config init(ProcP p);
  Config init(ProcP p, const std::vector<Term>& restricted,
              const std::vector<Term>& frame);

  struct Step {
    Label label;
    Config config;
  };
  // All transitions: public outputs, public inputs over saturated recipes,
  // and internal communication on restricted channels. Memoized by
  // configuration key.
  std::vector<Step> steps(const Config& c);
  // Transitions carrying exactly this label (inputs evaluate the label's
  // recipe against this configuration's frame). Memoized.
  std::vector<Config> stepsMatching(const Config& c, const Label& l);

  // Interned configurations: each distinct configuration is stored once and
  // addressed by a dense id, so exploration sets and memo tables work over
  // integers instead of keys and copies.
  using CfgId = uint32_t;
  CfgId intern(Config c);
  const Config& cfg(CfgId id) const { return pool_[id]; }
  struct StepI {
    Label label;
    CfgId config;
  };
  const std::vector<StepI>& stepsId(CfgId id);
  // Successor ids under this label, deduplicated.
  const std::vector<CfgId>& stepsMatchingId(CfgId id, const Label& l);
  static std::array<uint64_t, 4> labelKey(const Label& l) {
    return {(uint64_t)l.k, l.chan ? l.chan->id : 0, (uint64_t)l.windex,
            l.recipe ? l.recipe->id : 0};
  }

  // Attacker knowledge of a configuration's frame (first projection in
  // biprocess mode), memoized by frame key.
  const KB& knowledge(const Config& c);

  const Theory& theory() const { return th_; }
  ProcFactory& factory() const { return f_; }
  const Bounds& bounds() const { return bounds_; }
  const std::vector<Term>& publics() const { return publics_; }
  bool isPublicChannel(const Config& c, Term chan) const;

 private:
  void normalizeTau(Config& c);
  std::vector<Step> stepsRaw(const Config& c);
  std::vector<Config> stepsMatchingRaw(const Config& c, const Label& l);
  std::vector<Config> commSteps(const Config& c); // internal communications
  std::optional<Config> applyOut(const Config& c, size_t i);
  std::optional<Config> applyIn(const Config& c, size_t i, Term recipe);
  Term bindValue(Term recipe, const Config& c); // evaluate on the bi-frame

  const Theory& th_;
  ProcFactory& f_;
  std::vector<Term> publics_;
  Bounds bounds_;
  std::map<std::string, KB> kbMemo_;
  std::deque<Config> pool_; // deque keeps cfg() references stable
  std::unordered_map<std::string, CfgId> idByKey_;
  std::vector<std::unique_ptr<std::vector<StepI>>> stepsIdMemo_;
  struct MatchEntry {
    std::array<uint64_t, 4> label;
    std::vector<CfgId> succ;
  };
  std::vector<std::unique_ptr<std::vector<MatchEntry>>> matchIdMemo_;
};

// Static replication unfolding: every !Q becomes n copies renamed with
// spawn indices; agrees with the executor's on-the-fly expansion.
ProcP unfoldReplication(ProcFactory& f, ProcP p, int n);

// Prefixes [z_j := k_j] assignments and replaces each key name k_j by z_j
// inside actions whose color satisfies `inBeta`.
ProcP shareViaAssignments(ProcFactory& f, ProcP p,
                          const std::vector<std::pair<Term, Term>>& keyToVar,
                          const std::function<bool(int)>& inBeta);

// Trace exploration: breadth-first up to the action bound, deduplicated.
struct TraceNode {
  std::vector<Label> labels;
  Config config;
};
std::vector<TraceNode> explore(Executor& ex, const Config& start);

}  // namespace eqc
