#include "skillevo/environment.hpp"

#include "skillevo/text.hpp"

namespace skillevo {

Workspace::Workspace(const std::vector<WorkspaceFile>& files) {
  for (const auto& f : files) {
    if (!files_.emplace(f.path, f.content).second) throw WorkspaceError("duplicate workspace path: " + f.path);
  }
}

const std::string& Workspace::read(const std::string& path) const {
  auto it = files_.find(path);
  if (it == files_.end()) throw WorkspaceError("no such file: " + path);
  return it->second;
}

void Workspace::write(const std::string& path, std::string content) {
  if (path.empty() || path.front() == '/' || path.find("..") != std::string::npos) {
    throw WorkspaceError("path escapes the workspace: " + path);
  }
  files_[path] = std::move(content);
}

std::vector<std::string> Workspace::paths() const {
  std::vector<std::string> out;
  out.reserve(files_.size());
  for (const auto& [path, _] : files_) out.push_back(path);
  return out;
}

std::string Workspace::digest() const {
  std::string buffer;
  for (const auto& [path, content] : files_) {
    buffer += std::to_string(path.size()) + ':' + path + std::to_string(content.size()) + ':' + content;
  }
  return sha256_hex(buffer);
}

}  // namespace skillevo
