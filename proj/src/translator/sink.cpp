#include "edgeprov/translator/sink.hpp"

#include <httplib.h>

#include "edgeprov/error.hpp"
#include "edgeprov/transport/udp.hpp"
#include "edgeprov/translator/store.hpp"

namespace edgeprov::translator {

void FileSink::deliver(const std::string& workflow_id, const std::string& prov_json) {
  try {
    const auto dir = dir_ / escape_workflow_id(workflow_id);
    std::filesystem::create_directories(dir);
    write_atomically(dir / "prov.json", prov_json);
  } catch (const std::exception& e) {
    throw Error(Errc::SinkUnavailable, std::string("file sink: ") + e.what());
  }
}

HttpSink::HttpSink(std::string endpoint) {
  if (endpoint.starts_with("http://")) endpoint.erase(0, 7);
  if (auto slash = endpoint.find('/'); slash != std::string::npos) {
    path_ = endpoint.substr(slash);
    endpoint.resize(slash);
  }
  auto [host, port] = transport::split_host_port(endpoint);
  host_ = host;
  port_ = port;
}

void HttpSink::deliver(const std::string& workflow_id, const std::string& prov_json) {
  httplib::Client client(host_, port_);
  client.set_connection_timeout(2);
  client.set_read_timeout(5);
  httplib::Headers headers{{"X-Workflow-Id", workflow_id}};
  auto res = client.Post(path_, headers, prov_json, "application/json");
  if (!res) throw Error(Errc::SinkUnavailable, "http sink: " + httplib::to_string(res.error()));
  if (res->status < 200 || res->status >= 300) {
    throw Error(Errc::SinkUnavailable, "http sink: status " + std::to_string(res->status));
  }
}

std::shared_ptr<Sink> make_sink(const std::string& spec) {
  if (spec.empty() || spec == "null") return std::make_shared<NullSink>();
  if (spec.starts_with("file:")) return std::make_shared<FileSink>(spec.substr(5));
  if (spec.starts_with("http://")) return std::make_shared<HttpSink>(spec);
  throw Error(Errc::InvalidArgument, "unknown sink '" + spec + "' (null, file:<dir>, http://host:port/path)");
}

}  // namespace edgeprov::translator
