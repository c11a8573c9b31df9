#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "edgeprov/model.hpp"
#include "edgeprov/prov/document.hpp"

namespace edgeprov::translator {

/// Directory name for a workflow id: bytes outside [A-Za-z0-9_-] and a
/// leading '.' are percent-encoded, so no id can escape the store root.
std::string escape_workflow_id(std::string_view id);
/// Inverse of escape_workflow_id; nullopt for names it cannot produce.
std::optional<std::string> unescape_workflow_id(std::string_view name);

/// Writes `content` to `path` through a temp file, fsync and rename, so
/// readers see either the old file, the new one, or nothing.
void write_atomically(const std::filesystem::path& path, std::string_view content);

/// <root>/<workflow>/events.jsonl : applied records, one JSON object per line
/// <root>/<workflow>/prov.json    : the exported document
class FileStore {
 public:
  /// Creates the root if needed and removes temp files left by a crash.
  explicit FileStore(std::filesystem::path root);

  const std::filesystem::path& root() const noexcept { return root_; }
  std::filesystem::path dir_for(std::string_view workflow_id) const;

  /// One write(2) per line with O_APPEND.
  void append_events(std::string_view workflow_id, const std::vector<CaptureRecord>& records);
  void write_document(std::string_view workflow_id, const prov::ProvDocument& doc);

  std::optional<prov::ProvDocument> load_document(std::string_view workflow_id) const;
  std::vector<CaptureRecord> load_events(std::string_view workflow_id) const;
  /// Workflows with a persisted document, sorted.
  std::vector<std::string> workflows() const;

 private:
  std::filesystem::path root_;
};

}  // namespace edgeprov::translator
