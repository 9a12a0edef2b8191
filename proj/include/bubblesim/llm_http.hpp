#pragma once

#include <string>
#include <utility>
#include <vector>

#include <httplib.h>

#include "bubblesim/errors.hpp"
#include "bubblesim/llm.hpp"

namespace bubblesim {

// Real network transport. Kept in its own header so the rest of the library
// (and any simulation run without --llm) never touches HTTP machinery.
class HttplibTransport final : public Transport {
 public:
  HttpResponse post(const std::string& url, const std::vector<std::pair<std::string, std::string>>& headers,
                    const std::string& body, int timeout_ms) override {
    std::string base, path;
    split_url(url, base, path);
    httplib::Client client(base);
    client.set_connection_timeout(0, timeout_ms * 1000LL);
    client.set_read_timeout(0, timeout_ms * 1000LL);
    client.set_write_timeout(0, timeout_ms * 1000LL);

    httplib::Headers hl;
    std::string content_type = "application/json";
    for (const auto& [name, value] : headers) {
      if (name == "Content-Type") {
        content_type = value;
      } else {
        hl.emplace(name, value);
      }
    }
    httplib::Result res = client.Post(path, hl, body, content_type);
    HttpResponse out;
    if (!res) {
      auto err = res.error();
      if (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read ||
          err == httplib::Error::Write) {
        out.timeout = true;
      }
      out.error = httplib::to_string(err);
      return out;
    }
    out.status = res->status;
    out.body = res->body;
    return out;
  }

 private:
  // "scheme://host[:port]/path" -> ("scheme://host[:port]", "/path")
  static void split_url(const std::string& url, std::string& base, std::string& path) {
    std::size_t scheme = url.find("://");
    if (scheme == std::string::npos) throw ValidationError("endpoint_url must include a scheme: " + url);
    std::size_t slash = url.find('/', scheme + 3);
    if (slash == std::string::npos) {
      base = url;
      path = "/";
    } else {
      base = url.substr(0, slash);
      path = url.substr(slash);
    }
  }
};

}  // namespace bubblesim
