#pragma once

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <thread>

#include <httplib.h>

#include "schemadoc/analyzer.hpp"
#include "schemadoc/text_util.hpp"

namespace schemadoc {

struct HttpAnalyzerOptions {
  std::string endpoint_url;  // e.g. http://localhost:8089/v1/chat/completions
  std::string model;
  std::filesystem::path template_dir;
  std::string credential_env = "SCHEMADOC_API_KEY";
  int max_attempts = 4;
  int backoff_base_ms = 250;
  int backoff_cap_ms = 4000;
  uint64_t jitter_seed = 0;
  int timeout_seconds = 60;
};

namespace httpdetail {

struct SplitUrl {
  std::string base;  // scheme://host:port
  std::string path;  // /v1/chat/completions
};

inline SplitUrl split_url(const std::string &url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos)
    throw AnalyzerError("endpoint url must include a scheme: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace httpdetail

// Generic chat-completion client with schema-constrained responses.  Wire
// field names are part of the external interface; see the config reference.
class HttpAnalyzer : public Analyzer {
 public:
  explicit HttpAnalyzer(HttpAnalyzerOptions options)
      : options_(std::move(options)), rng_(options_.jitter_seed) {
    verify_template_directory(options_.template_dir);
  }

  std::string name() const override { return "http"; }

  AnalysisResponse analyze(const AnalysisRequest &request) override {
    const std::string role = template_role_for(request.kind);
    const std::string prompt =
        render_template(load_template_file(options_.template_dir, role),
                        {{"subject", request.subject},
                         {"kind", to_string(request.kind)},
                         {"context", request.context.dump(2)}});

    ordered_json body;
    body["model"] = options_.model;
    body["messages"] = ordered_json::array();
    body["messages"].push_back({{"role", "system"}, {"content", prompt}});
    body["messages"].push_back({{"role", "user"}, {"content", request.context.dump()}});
    body["temperature"] = request.temperature;
    body["response_format"] = {
        {"type", "json_schema"},
        {"json_schema", {{"name", role}, {"schema", response_schema_for(request.kind)}}}};
    if (!request.effort.empty()) body["effort"] = request.effort;

    AnalysisResponse response;
    response.kind = request.kind;

    ordered_json reply = post_with_retries(body, response.usage);
    auto payload = extract_payload(reply);
    auto errors = validate_json(response_schema_for(request.kind), payload);
    if (!errors.empty()) {
      // One repair round: feed the validation errors back and ask again.
      std::string joined;
      for (const auto &e : errors) joined += (joined.empty() ? "" : "; ") + e;
      body["messages"].push_back(
          {{"role", "assistant"}, {"content", content_text(reply)}});
      body["messages"].push_back(
          {{"role", "user"},
           {"content", "The previous reply failed schema validation (" + joined +
                           "). Respond again with JSON matching the schema exactly."}});
      reply = post_with_retries(body, response.usage);
      payload = extract_payload(reply);
      errors = validate_json(response_schema_for(request.kind), payload);
      if (!errors.empty()) {
        joined.clear();
        for (const auto &e : errors) joined += (joined.empty() ? "" : "; ") + e;
        throw AnalyzerError("analyzer response failed schema validation after repair: " +
                            joined);
      }
    }
    response.payload = std::move(payload);
    return response;
  }

 private:
  static std::string content_text(const ordered_json &reply) {
    return reply.at("choices").at(0).at("message").at("content").get<std::string>();
  }

  static ordered_json extract_payload(const ordered_json &reply) {
    ordered_json payload;
    try {
      payload = ordered_json::parse(content_text(reply));
    } catch (const nlohmann::json::exception &e) {
      throw AnalyzerError(std::string("analyzer reply was not parseable JSON: ") +
                          e.what());
    }
    return payload;
  }

  ordered_json post_with_retries(const ordered_json &body, TokenUsage &usage) {
    const auto url = httpdetail::split_url(options_.endpoint_url);
    httplib::Client client(url.base);
    client.set_connection_timeout(options_.timeout_seconds, 0);
    client.set_read_timeout(options_.timeout_seconds, 0);
    httplib::Headers headers;
    if (const char *cred = std::getenv(options_.credential_env.c_str());
        cred != nullptr && *cred != '\0')
      headers.emplace("Authorization", std::string("Bearer ") + cred);

    std::string last_error;
    for (int attempt = 0; attempt < options_.max_attempts; ++attempt) {
      if (attempt > 0) backoff(attempt);
      auto res = client.Post(url.path, headers, body.dump(), "application/json");
      if (!res) {
        last_error = "transport error " + httplib::to_string(res.error());
        continue;
      }
      if (res->status != 200) {
        last_error = "http status " + std::to_string(res->status);
        continue;
      }
      ordered_json reply;
      try {
        reply = ordered_json::parse(res->body);
      } catch (const nlohmann::json::exception &e) {
        last_error = std::string("unparseable reply body: ") + e.what();
        continue;
      }
      if (!reply.contains("choices") || reply.at("choices").empty()) {
        last_error = "reply carried no choices";
        continue;
      }
      if (reply.contains("usage")) {
        usage.input += reply.at("usage").value("prompt_tokens", int64_t{0});
        usage.output += reply.at("usage").value("completion_tokens", int64_t{0});
      }
      return reply;
    }
    throw AnalyzerError("analyzer endpoint failed after " +
                        std::to_string(options_.max_attempts) + " attempts: " + last_error);
  }

  void backoff(int attempt) {
    if (options_.backoff_base_ms <= 0) return;
    int64_t delay = options_.backoff_base_ms;
    for (int i = 1; i < attempt; ++i) delay = std::min<int64_t>(delay * 2, options_.backoff_cap_ms);
    delay += static_cast<int64_t>(rng_.next_below(
        static_cast<uint64_t>(options_.backoff_base_ms)));
    std::this_thread::sleep_for(std::chrono::milliseconds(delay));
  }

  HttpAnalyzerOptions options_;
  SplitMix64 rng_;
};

}  // namespace schemadoc
