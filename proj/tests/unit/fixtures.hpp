#pragma once

// Small scenarios and helpers shared by the unit suites.

#include <filesystem>
#include <memory>
#include <string>

#include "skillevo/simulator.hpp"
#include "skillevo/telemetry.hpp"

namespace fixtures {

inline std::filesystem::path asset(const std::string& relative) {
  return std::filesystem::path(SKILLEVO_ASSET_DIR) / relative;
}

// Five hidden predicates on rtl/alu.sv; "ports" is syntactic. The base edit
// satisfies only "ports" and "add", so a verifier run on it fails 3 of 5.
inline skillevo::Json five_test_scenario() {
  using skillevo::Json;
  auto pred = [](const char* id, const char* text, bool syntactic = false) {
    return Json{{"id", id}, {"path", "rtl/alu.sv"}, {"contains", {text}}, {"syntactic", syntactic}};
  };
  return Json{
      {"task_id", "rtl_alu"},
      {"category_id", "cid002"},
      {"prompt", "Implement a small ALU."},
      {"files", {{{"path", "docs/spec.md"}, {"content", "ALU with add, sub, and, or.\n"}},
                 {{"path", "verif/tb_alu.sv"}, {"content", "module tb_alu;\nendmodule\n"}}}},
      {"target_paths", {"rtl/alu.sv"}},
      {"shadow_paths", {"verif/alu.sv"}},
      {"hidden_identifiers", {"hidden_alu_harness", "alu_golden_ref"}},
      {"unavailable_tools", {"docker_exec"}},
      {"base_edit", {{"path", "rtl/alu.sv"}, {"content", "module alu;\n  assign y = a + b;\nendmodule\n"}}},
      {"predicates",
       {pred("ports", "module alu", true), pred("add", "a + b"), pred("sub", "a - b"), pred("and", "a & b"),
        pred("or", "a | b")}},
      {"fixes",
       {{{"id", "sub"}, {"lesson", "Compute the difference output d by subtracting b from a"}, {"fragment", "  assign d = a - b;"},
         {"discover", "simulate"}, {"probability", 1.0}},
        {{"id", "and"}, {"lesson", "Drive the mask output e with a bitwise conjunction"}, {"fragment", "  assign e = a & b;"},
         {"discover", "feedback"}, {"probability", 1.0}},
        {{"id", "or"}, {"lesson", "Drive the union output f with a bitwise disjunction"}, {"fragment", "  assign f = a | b;"},
         {"discover", "lesson"}, {"probability", 0.0}}}},
      {"traps", Json::array()},
  };
}

inline std::shared_ptr<const skillevo::SimulatedEnvironment> five_test_env() {
  return std::make_shared<const skillevo::SimulatedEnvironment>(skillevo::parse_scenario(five_test_scenario()));
}

inline std::string full_alu() {
  return "module alu;\n  assign y = a + b;\n  assign d = a - b;\n  assign e = a & b;\n  assign f = a | b;\n"
         "endmodule\n";
}

// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("skillevo_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace fixtures
