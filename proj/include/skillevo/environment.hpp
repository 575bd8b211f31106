#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "skillevo/core.hpp"

namespace skillevo {

class WorkspaceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Visible files of one rollout. A value type: copies are private.
class Workspace {
 public:
  Workspace() = default;
  explicit Workspace(const std::vector<WorkspaceFile>& files);

  bool contains(const std::string& path) const { return files_.contains(path); }
  const std::string& read(const std::string& path) const;
  void write(const std::string& path, std::string content);
  std::vector<std::string> paths() const;
  const std::map<std::string, std::string>& files() const { return files_; }

  // Content digest over all files (path and content, length-prefixed).
  std::string digest() const;

  bool operator==(const Workspace&) const = default;

 private:
  std::map<std::string, std::string> files_;
};

struct ToolOutput {
  bool ok = false;
  std::string text;
  Json details = Json::object();
};

// What a verifier run hands back before sanitization.
struct RawVerifierBundle {
  int exit_code = 0;
  std::string log;
  bool timed_out = false;
};

// A verifier-capable environment. Implementations are immutable after
// construction: every operation takes the workspace explicitly, so the hidden
// verifier always sees a private copy and never touches the live files.
class Environment {
 public:
  virtual ~Environment() = default;

  virtual const VisibilityContract& contract() const = 0;
  virtual Workspace initial_workspace() const = 0;
  virtual ToolOutput compile(const Workspace& workspace, const std::vector<std::string>& files) const = 0;
  virtual ToolOutput simulate(const Workspace& workspace) const = 0;
  virtual RawVerifierBundle run_hidden_verifier(Workspace private_copy) const = 0;
};

}  // namespace skillevo
