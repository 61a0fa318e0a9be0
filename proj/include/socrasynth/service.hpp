#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "socrasynth/engine.hpp"
#include "socrasynth/judges.hpp"

namespace socrasynth {

struct ServiceOptions {
  // Profiles that request bodies may refer to by id.
  std::map<std::string, BackendProfile> backends;
  BackendFactory factory;          // make_backend when empty
  std::string auth_token;          // when set, requests need "Authorization: Bearer <token>"
  int heartbeat_ms = 15000;
  std::filesystem::path console_dir;  // served under /console when set
  std::filesystem::path data_dir;     // concluded sessions are written here when set
};

// Reads SOCRASYNTH_TOKEN into auth_token when the option is empty.
ServiceOptions with_env_defaults(ServiceOptions options);

// Machine-readable description of every payload the service emits or accepts.
nlohmann::json service_schema();

// HTTP session API. One coordinator per session; steps run on worker threads.
class Service {
 public:
  explicit Service(ServiceOptions options);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  // Binds and serves on a background thread. Port 0 picks a free port; the bound port is returned.
  int start(const std::string& host = "127.0.0.1", int port = 0);
  // Blocks serving on the calling thread until stop() is called.
  void listen(const std::string& host, int port);
  void stop();

  std::vector<std::string> session_ids() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace socrasynth
