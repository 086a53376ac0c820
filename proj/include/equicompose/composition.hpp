#pragma once

#include "equicompose/equivalence.hpp"
#include "equicompose/parser.hpp"
#include "equicompose/tagging.hpp"

namespace eqc {

// Extended triple <E0, C[fillings], frame> handed to the checkers.
struct Triple {
  std::vector<Term> e0;
  ProcP ctx;                    // composition context, holes numbered 1..n
  std::vector<ProcP> fillings;  // one per hole
  std::vector<Term> frame;      // initial frame values
};

// Abstraction of assignment values by fresh names: rho[0] is rho_alpha
// (beta-assigned variables to fresh names), rho[1] is rho_beta. The
// extension additionally maps the assigned ground values themselves.
struct AbstractionPair {
  std::map<uint32_t, Term> rho[2];      // variable -> fresh name
  std::map<Term, Term> valueMap[2];     // x sigma (normalized) -> fresh name
  const std::map<uint32_t, Term>& forClass(int g) const { return rho[g]; }
};

struct HypothesisResult {
  std::string name;
  Verdict verdict = Verdict::Unknown;
  std::string witness;  // human-readable evidence
  Bounds bounds;
};

struct CompositionReport {
  std::vector<HypothesisResult> hypotheses;
  Verdict conclusion = Verdict::Unknown;
  std::string claim;  // theorem conclusion text when confirmed
  std::optional<HypothesisResult> audit;
  const HypothesisResult* find(const std::string& name) const;
  // Conjunction: Holds iff every hypothesis holds; any Unknown downgrades.
  void conclude(const std::string& claimText);
};

struct RevealResult {
  Verdict verdict = Verdict::Unknown;  // Refuted = revealed
  std::vector<Label> trace;
  size_t statesExplored = 0;
};

// Reserved namespace for generated names; the parser rejects '#' so user
// input can never collide.
Term genName(World& w, const std::string& base, SortK sort = SortK::Base);

// Key revelation: the listener in(c, x). if x = key then out(c, s) on a
// fresh public channel emits s exactly when the key is deducible, so the
// check explores C[fillings] to the bounds and tests deducibility of the
// key (and of its replication renamings) at every reached configuration.
RevealResult reveals(const Theory& th, ProcFactory& f, const Triple& a,
                     Term key, const std::vector<Term>& publics,
                     const Bounds& bounds);

// Composability (four clauses): signature separation and tagging, closed
// processes and disjoint frame domains, E0 sharing restriction, and
// non-revelation of the keys shared through the context.
CompositionReport checkComposability(const Theory& th, ProcFactory& f,
                                     const Partition& part,
                                     const std::vector<ProcP>& ps,
                                     const std::vector<Term>& phi,
                                     const std::vector<ProcP>& qs,
                                     const std::vector<Term>& psi,
                                     const std::vector<Term>& e0, ProcP ctx,
                                     const std::vector<Term>& publics,
                                     const Bounds& bounds);

// The good-key-exchange harness: the context filled with P1/P2 joined by
// the private channel d, alongside the comparator processes that emit
// `bad` on disagreement, non-freshness, or key revelation. The bang
// variant (for contexts ending in !_) moves id above the replication and
// appends the r1/r2 freshness component.
ProcP buildPGood(ProcFactory& f, ProcP ctx, ProcP p1, ProcP p2, bool bang,
                 Term pubChan);

struct GoodKEResult {
  Verdict verdict = Verdict::Unknown;  // Holds = good
  std::vector<Label> trace;            // revealing trace when not good
};
GoodKEResult checkGoodKE(const Theory& th, ProcFactory& f,
                         const std::vector<Term>& e0, ProcP ctx, ProcP p1,
                         ProcP p2, const std::vector<Term>& frame,
                         const std::vector<Term>& publics,
                         const Bounds& bounds);

// Abstractability: along every bounded trace, no assignment variable is
// bound to a pair, pk, or vk modulo the theory.
struct AbstractabilityResult {
  Verdict verdict = Verdict::Unknown;
  std::string offending;  // variable and value on failure
};
AbstractabilityResult checkAbstractability(Executor& ex, const Config& start);

// delta of App-style name replacement: abstracts a normalized value to its
// fresh name when it is in the extension's domain and its tagroot lies
// outside the active class, otherwise recurses switching the class at
// tagged roots.
Term deltaTerm(const Theory& th, const Partition& part, Term u, int g,
               const AbstractionPair& rho);

// Applies delta to every process term (keyed by action color class), to
// the frame, and to the substitution of a configuration.
Config deltaConfig(const Theory& th, const Partition& part, ProcFactory& f,
                   const Config& c, const AbstractionPair& rho);

// Compatibility of the abstraction with a configuration: assignment values
// are equal exactly when their abstractions coincide, and no assigned
// value is rooted in the abstracting class or the common signature.
struct CompatibleResult {
  Verdict verdict = Verdict::Unknown;
  std::string why;
};
CompatibleResult checkCompatible(const Theory& th, const Partition& part,
                                 const Config& c, const AbstractionPair& rho);

// Non-revelation of assignment values: over all reached compatible
// configurations, no element of K_alpha and K_beta (assignment values and
// their abstractions, with pk and vk) is deducible.
RevealResult checkNoAssignmentRevelation(Executor& ex, const Config& start,
                                         const AbstractionPair& rho,
                                         const Partition& part);

// Theorem drivers over a parsed compose declaration.
CompositionReport composeParallel(ProtocolSpec& spec, const ComposeDef& def,
                                  const Bounds& bounds, bool audit);
CompositionReport composeSequential(ProtocolSpec& spec, const ComposeDef& def,
                                    const Bounds& bounds, bool audit,
                                    bool traceOnly = false);

// Focused single-hypothesis drivers over a compose declaration, for the
// corresponding CLI subcommands.
CompositionReport composabilityFor(ProtocolSpec& spec, const ComposeDef& def,
                                   const Bounds& bounds);
CompositionReport goodKEFor(ProtocolSpec& spec, const ComposeDef& def,
                            const Bounds& bounds);
CompositionReport abstractabilityFor(ProtocolSpec& spec,
                                     const ComposeDef& def,
                                     const Bounds& bounds);

}  // namespace eqc
