#pragma once

#include "equicompose/composition.hpp"

namespace eqc {

const char* verdictName(Verdict v);
// 0 = holds, 1 = refuted, 2 = unknown beyond the bound
int verdictExit(Verdict v);

std::string showTrace(const World& w, const std::vector<Label>& labels);
// witness text for an equivalence result (trace, reason, recipes)
std::string equivWitness(const World& w, const EquivResult& r);

// machine-readable verdict record {schema, verdict, bounds, witness?}
std::string verdictJson(Verdict v, const Bounds& b, const std::string& witness);
std::string verdictText(Verdict v, const Bounds& b, const std::string& witness);

// composition report {schema, hypotheses: [...], conclusion, claim?, audit?}
std::string reportJson(const CompositionReport& rep);
std::string reportText(const CompositionReport& rep);

}  // namespace eqc
