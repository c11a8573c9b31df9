#pragma once

#include <filesystem>
#include <memory>
#include <string>

namespace edgeprov::translator {

/// Backend that receives finished PROV documents. deliver() throws
/// SinkUnavailable when the backend cannot take the document right now.
class Sink {
 public:
  virtual ~Sink() = default;
  virtual void deliver(const std::string& workflow_id, const std::string& prov_json) = 0;
  virtual std::string describe() const = 0;
};

class NullSink final : public Sink {
 public:
  void deliver(const std::string&, const std::string&) override {}
  std::string describe() const override { return "null"; }
};

/// Writes <dir>/<workflow>/prov.json atomically.
class FileSink final : public Sink {
 public:
  explicit FileSink(std::filesystem::path dir) : dir_(std::move(dir)) {}
  void deliver(const std::string& workflow_id, const std::string& prov_json) override;
  std::string describe() const override { return "file:" + dir_.string(); }

 private:
  std::filesystem::path dir_;
};

/// POSTs the document to http://host:port/path; any 2xx answer is success.
class HttpSink final : public Sink {
 public:
  /// `endpoint` is "host:port" or "host:port/path" (default path "/prov").
  explicit HttpSink(std::string endpoint);
  void deliver(const std::string& workflow_id, const std::string& prov_json) override;
  std::string describe() const override { return "http://" + host_ + ":" + std::to_string(port_) + path_; }

 private:
  std::string host_;
  int port_ = 80;
  std::string path_ = "/prov";
};

/// "null", "file:<dir>" or "http://host:port/path". InvalidArgument otherwise.
std::shared_ptr<Sink> make_sink(const std::string& spec);

}  // namespace edgeprov::translator
