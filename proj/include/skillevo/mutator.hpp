#pragma once

// Mutator stage: proposes a child skill body from the survivor and the
// generation's handoff. Proposals are raw text; repair and gating happen in
// the sanitizer.

#include <stdexcept>
#include <string>
#include <vector>

#include "skillevo/core.hpp"
#include "skillevo/text.hpp"

namespace skillevo {

class MutatorFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct MutationRequest {
  int generation = 0;  // generation the child will belong to
  int slot = 1;
  const Skill* survivor = nullptr;
  // Absent when mutating the seed before any evidence exists.
  const MutationHandoff* handoff = nullptr;
  const LessonBank* bank = nullptr;
  const VisibilityContract* contract = nullptr;
  double temperature = 0.35;
};

class Mutator {
 public:
  virtual ~Mutator() = default;
  // Returns the proposed body. Throws MutatorFailure.
  virtual std::string propose(const MutationRequest& request) = 0;
};

// Appends every handoff KEEP/ADD/critical lesson the body does not already
// express as a bullet under a "## Lessons" heading.
std::string integrate_lessons(const std::string& body, const MutationHandoff& handoff,
                              const Matcher& matcher = default_matcher());

// Drops body lines that restate a REMOVE lesson with the same polarity.
std::string prune_remove_lessons(const std::string& body, const std::vector<std::string>& remove,
                                 const Matcher& matcher = default_matcher());

// Rule-based stand-in. Slots cycle through three strategies:
//   slot 1, 4, ...  integrate lessons
//   slot 2, 5, ...  integrate, prune REMOVE repeats, add one general tactic
//   slot 3, 6, ...  integrate, then keep only the first half of the directive
//                   lines (may drop critical lessons)
class RuleBasedMutator final : public Mutator {
 public:
  explicit RuleBasedMutator(const Matcher& matcher = default_matcher()) : matcher_(&matcher) {}
  std::string propose(const MutationRequest& request) override;

 private:
  const Matcher* matcher_;
};

std::string render_mutation_handoff(const MutationHandoff& handoff);

}  // namespace skillevo
