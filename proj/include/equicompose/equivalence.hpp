#pragma once

#include "equicompose/semantics.hpp"

namespace eqc {

struct TraceWitness {
  std::vector<Label> labels;
  std::string reason; // "no-matching-trace", "frames-distinguished",
                      // "divergence"
  Term recipeM = nullptr, recipeN = nullptr; // frame discrimination
  std::optional<Divergence> divergence;
};

struct EquivResult {
  Verdict verdict = Verdict::Holds;
  std::optional<TraceWitness> witness;
  size_t statesExplored = 0;
  std::string note;
};

// Bounded trace inclusion of A in B: breadth-first product of A's
// configurations with label-matched tau-closed sets of B's configurations;
// every reached A frame must be statically equivalent to some matched
// B frame. Witnesses are shortest.
EquivResult traceIncluded(Executor& exA, const Config& a, Executor& exB,
                          const Config& b);

EquivResult traceEquiv(Executor& exA, const Config& a, Executor& exB,
                       const Config& b);

// Bounded diff-equivalence of a biprocess: both projections must move in
// lockstep (no conditional divergence) and every reached biframe must be
// statically equivalent.
EquivResult diffEquiv(Executor& ex, const Config& start);

}  // namespace eqc
