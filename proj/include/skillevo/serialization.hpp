#pragma once

// JSON mapping for every persisted type. Doubles are written with full
// round-trip precision, so a value read back compares equal to the original.

#include "skillevo/core.hpp"
#include "skillevo/metrics.hpp"
#include "skillevo/sanitizer.hpp"
#include "skillevo/selection.hpp"

namespace skillevo {

void to_json(Json& j, const RunConfig& c);
void from_json(const Json& j, RunConfig& c);

void to_json(Json& j, const Directive& d);
void from_json(const Json& j, Directive& d);

void to_json(Json& j, const Skill& s);
void from_json(const Json& j, Skill& s);

void to_json(Json& j, const ToolEvent& e);
void from_json(const Json& j, ToolEvent& e);

void to_json(Json& j, const VerifierOutcome& o);
void from_json(const Json& j, VerifierOutcome& o);

void to_json(Json& j, const ProgressComponents& p);
void from_json(const Json& j, ProgressComponents& p);

void to_json(Json& j, const RolloutRecord& r);
void from_json(const Json& j, RolloutRecord& r);

void to_json(Json& j, const Lesson& l);
void from_json(const Json& j, Lesson& l);

void to_json(Json& j, const LessonBank& b);
void from_json(const Json& j, LessonBank& b);

void to_json(Json& j, const OracleSummary& o);
void from_json(const Json& j, OracleSummary& o);

void to_json(Json& j, const MutationHandoff& h);
void from_json(const Json& j, MutationHandoff& h);

void to_json(Json& j, const VisibilityContract& c);
void from_json(const Json& j, VisibilityContract& c);

void to_json(Json& j, const SkillComponents& c);
void from_json(const Json& j, SkillComponents& c);

void to_json(Json& j, const SanitizerReport& r);
void from_json(const Json& j, SanitizerReport& r);

void to_json(Json& j, const MutationHealth& h);
void from_json(const Json& j, MutationHealth& h);

}  // namespace skillevo
