#pragma once

#include <memory>
#include <string>

#include "qac/service.hpp"

namespace qac {

struct ListenAddress {
  std::string host;
  int port = 0;
};

/// Parses "host:port"; throws std::invalid_argument otherwise.
ListenAddress parse_listen_address(const std::string& text);

/// HTTP front end:
///   GET /suggest?prefix=...&k=10&mode=dedup  -> SuggestResponse JSON
///   GET /healthz                            -> {"status", "queries", "embeddings"}
class SuggestServer {
 public:
  explicit SuggestServer(SuggestService service);
  ~SuggestServer();
  SuggestServer(const SuggestServer&) = delete;
  SuggestServer& operator=(const SuggestServer&) = delete;

  /// Binds the address; port 0 picks a free port. Returns the bound port.
  /// Throws std::runtime_error when binding fails.
  int bind(const ListenAddress& address);
  /// Serves until stop() is called. Requires a successful bind().
  void run();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace qac
