#include "equicompose/report.hpp"

#include "json.hpp"

namespace eqc {

using nlohmann::json;
using ordered = nlohmann::ordered_json;

const char* verdictName(Verdict v) {
  switch (v) {
    case Verdict::Holds:
      return "holds";
    case Verdict::Refuted:
      return "refuted";
    default:
      return "unknown";
  }
}

int verdictExit(Verdict v) {
  switch (v) {
    case Verdict::Holds:
      return 0;
    case Verdict::Refuted:
      return 1;
    default:
      return 2;
  }
}

std::string showTrace(const World& w, const std::vector<Label>& labels) {
  std::string s;
  for (const Label& l : labels) {
    if (!s.empty()) s += " . ";
    s += l.show(w);
  }
  return s.empty() ? "(empty trace)" : s;
}

std::string equivWitness(const World& w, const EquivResult& r) {
  if (!r.witness) return r.note;
  std::string s = r.witness->reason + ": " + showTrace(w, r.witness->labels);
  if (r.witness->recipeM && r.witness->recipeN)
    s += " distinguished by " + w.show(r.witness->recipeM) + " vs " +
         w.show(r.witness->recipeN);
  return s;
}

static ordered boundsJson(const Bounds& b) {
  ordered j;
  j["actions"] = b.actions;
  j["recipes"] = b.recipes;
  j["unfold"] = b.unfold;
  return j;
}

static std::string boundsText(const Bounds& b) {
  return "actions=" + std::to_string(b.actions) +
         ",recipes=" + std::to_string(b.recipes) +
         ",unfold=" + std::to_string(b.unfold);
}

std::string verdictJson(Verdict v, const Bounds& b,
                        const std::string& witness) {
  ordered j;
  j["schema"] = 1;
  j["verdict"] = verdictName(v);
  j["bounds"] = boundsJson(b);
  if (!witness.empty()) j["witness"] = witness;
  return j.dump(2) + "\n";
}

std::string verdictText(Verdict v, const Bounds& b,
                        const std::string& witness) {
  std::string s = std::string("verdict: ") + verdictName(v) + " (bounds " +
                  boundsText(b) + ")\n";
  if (!witness.empty()) s += "witness: " + witness + "\n";
  return s;
}

static ordered hypJson(const HypothesisResult& h) {
  ordered j;
  j["name"] = h.name;
  j["verdict"] = verdictName(h.verdict);
  j["bounds"] = boundsJson(h.bounds);
  if (!h.witness.empty()) j["witness"] = h.witness;
  return j;
}

std::string reportJson(const CompositionReport& rep) {
  ordered j;
  j["schema"] = 1;
  j["hypotheses"] = ordered::array();
  for (const HypothesisResult& h : rep.hypotheses)
    j["hypotheses"].push_back(hypJson(h));
  j["conclusion"] = verdictName(rep.conclusion);
  if (!rep.claim.empty()) j["claim"] = rep.claim;
  if (rep.audit) j["audit"] = hypJson(*rep.audit);
  return j.dump(2) + "\n";
}

static std::string hypText(const HypothesisResult& h) {
  std::string s = "  " + h.name + ": " + verdictName(h.verdict) + " (bounds " +
                  boundsText(h.bounds) + ")";
  if (!h.witness.empty()) s += "\n    " + h.witness;
  return s + "\n";
}

std::string reportText(const CompositionReport& rep) {
  std::string s = "hypotheses:\n";
  for (const HypothesisResult& h : rep.hypotheses) s += hypText(h);
  s += std::string("conclusion: ") + verdictName(rep.conclusion) + "\n";
  if (!rep.claim.empty()) s += "claim: " + rep.claim + "\n";
  if (rep.audit) s += "audit:\n" + hypText(*rep.audit);
  return s;
}

}  // namespace eqc
