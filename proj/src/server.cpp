#include "qac/server.hpp"

#include <httplib.h>
#include <json.hpp>

#include <charconv>

namespace qac {

namespace {

void send_error(httplib::Response& res, int status, const std::string& message) {
  res.status = status;
  res.set_content(nlohmann::json{{"error", message}}.dump(), "application/json");
}

}  // namespace

ListenAddress parse_listen_address(const std::string& text) {
  const std::size_t colon = text.rfind(':');
  if (colon == std::string::npos || colon == 0) {
    throw std::invalid_argument("listen address must be host:port, got '" + text + "'");
  }
  ListenAddress address{text.substr(0, colon), 0};
  const char* begin = text.data() + colon + 1;
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(begin, end, address.port);
  if (ec != std::errc{} || ptr != end || address.port < 0 || address.port > 65535) {
    throw std::invalid_argument("bad port in listen address '" + text + "'");
  }
  return address;
}

struct SuggestServer::Impl {
  SuggestService service;
  httplib::Server http;
  bool bound = false;
};

SuggestServer::SuggestServer(SuggestService service) : impl_(std::make_unique<Impl>()) {
  if (!service.initialized()) throw NotInitialized();
  impl_->service = std::move(service);
  const SuggestService& svc = impl_->service;

  impl_->http.Get("/healthz", [&svc](const httplib::Request&, httplib::Response& res) {
    const nlohmann::ordered_json body{{"status", "ok"},
                                      {"queries", svc.index().size()},
                                      {"embeddings", svc.embeddings().size()}};
    res.set_content(body.dump(), "application/json");
  });

  impl_->http.Get("/suggest", [&svc](const httplib::Request& req, httplib::Response& res) {
    if (!req.has_param("prefix")) {
      send_error(res, 400, "missing required parameter 'prefix'");
      return;
    }
    const auto& cfg = svc.config();
    std::size_t k = cfg.visible_k;
    SuggestMode mode = cfg.mode;
    if (req.has_param("k")) {
      const std::string raw = req.get_param_value("k");
      const auto [ptr, ec] = std::from_chars(raw.data(), raw.data() + raw.size(), k);
      if (ec != std::errc{} || ptr != raw.data() + raw.size() || k == 0) {
        send_error(res, 400, "parameter 'k' must be a positive integer");
        return;
      }
    }
    if (req.has_param("mode")) {
      try {
        mode = parse_mode(req.get_param_value("mode"));
      } catch (const std::invalid_argument& e) {
        send_error(res, 400, e.what());
        return;
      }
    }
    res.set_content(to_json(svc.suggest(req.get_param_value("prefix"), k, mode)),
                    "application/json");
  });

  impl_->http.set_exception_handler(
      [](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
        try {
          std::rethrow_exception(ep);
        } catch (const std::exception& e) {
          send_error(res, 500, e.what());
        } catch (...) {
          send_error(res, 500, "unknown error");
        }
      });
}

SuggestServer::~SuggestServer() { stop(); }

int SuggestServer::bind(const ListenAddress& address) {
  int port = address.port;
  if (port == 0) {
    port = impl_->http.bind_to_any_port(address.host);
  } else if (!impl_->http.bind_to_port(address.host, port)) {
    port = -1;
  }
  if (port < 0) {
    throw std::runtime_error("cannot bind " + address.host + ":" + std::to_string(address.port));
  }
  impl_->bound = true;
  return port;
}

void SuggestServer::run() {
  if (!impl_->bound) throw std::logic_error("SuggestServer::run before bind");
  impl_->http.listen_after_bind();
}

void SuggestServer::stop() {
  if (impl_) impl_->http.stop();
}

}  // namespace qac
