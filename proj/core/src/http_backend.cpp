#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <cstdlib>
#include <thread>

#include "json_util.hpp"
#include "qqeval/error.hpp"
#include "qqeval/judge.hpp"

namespace qqeval {

using detail::json;

namespace {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

SplitUrl split_url(const std::string& url) {
  const std::size_t scheme = url.find("://");
  if (scheme == std::string::npos) throw ConfigError("judge: endpoint '" + url + "' has no scheme");
  const std::size_t slash = url.find('/', scheme + 3);
  if (slash == std::string::npos) return {url, "/"};
  return {url.substr(0, slash), url.substr(slash)};
}

}  // namespace

HttpBackend::HttpBackend(JudgeConfig config) : config_(std::move(config)) {
  config_.validate();
  if (config_.api_key) {
    api_key_ = *config_.api_key;
  } else if (const char* env = std::getenv(std::string(kApiKeyEnv).c_str())) {
    api_key_ = env;
  }
  if (api_key_.empty()) {
    throw ConfigError("judge: no API key; set " + std::string(kApiKeyEnv));
  }
  if (!config_.endpoint_url) {
    if (config_.api_format != ApiFormat::Anthropic) {
      throw ConfigError("judge: chat-completions format needs an endpoint URL");
    }
    config_.endpoint_url = std::string(kDefaultAnthropicEndpoint);
  }
  split_url(*config_.endpoint_url);
}

HttpBackend::~HttpBackend() = default;

std::string HttpBackend::request_body(const JudgePrompt& prompt) const {
  json body = {
      {"model", config_.model_name},
      {"temperature", config_.temperature},
      {"max_tokens", config_.max_tokens},
  };
  if (config_.api_format == ApiFormat::Anthropic) {
    body["system"] = prompt.system_text;
    body["messages"] = json::array({{{"role", "user"}, {"content", prompt.user_text}}});
  } else {
    body["messages"] = json::array({{{"role", "system"}, {"content", prompt.system_text}},
                                    {{"role", "user"}, {"content", prompt.user_text}}});
  }
  return body.dump();
}

BackendReply HttpBackend::extract_reply(std::string_view body) const {
  const json doc = json::parse(body.begin(), body.end(), nullptr, false);
  BackendReply reply;
  if (doc.is_object()) {
    if (config_.api_format == ApiFormat::Anthropic) {
      if (auto content = doc.find("content"); content != doc.end() && content->is_array()) {
        for (const json& block : *content) {
          if (block.value("type", "") == "text" && block.contains("text")) {
            reply.text += block["text"].get<std::string>();
          }
        }
      }
      if (auto usage = doc.find("usage"); usage != doc.end() && usage->is_object()) {
        reply.tokens = usage->value("input_tokens", std::int64_t{0}) +
                       usage->value("output_tokens", std::int64_t{0});
      }
    } else {
      if (auto choices = doc.find("choices");
          choices != doc.end() && choices->is_array() && !choices->empty()) {
        const json& msg = (*choices)[0].value("message", json::object());
        if (msg.contains("content") && msg["content"].is_string()) {
          reply.text = msg["content"].get<std::string>();
        }
      }
      if (auto usage = doc.find("usage"); usage != doc.end() && usage->is_object()) {
        reply.tokens = usage->value("total_tokens", std::int64_t{0});
      }
    }
  }
  if (reply.text.empty()) throw TransportError("judge: response carries no assistant text", 1);
  return reply;
}

void HttpBackend::wait_for_slot() {
  if (config_.min_request_interval.count() <= 0) return;
  std::chrono::steady_clock::time_point slot;
  {
    std::lock_guard lock(rate_mutex_);
    const auto now = std::chrono::steady_clock::now();
    slot = std::max(now, next_slot_);
    next_slot_ = slot + config_.min_request_interval;
  }
  std::this_thread::sleep_until(slot);
}

BackendReply HttpBackend::complete(const JudgePrompt& prompt) {
  const SplitUrl url = split_url(*config_.endpoint_url);
  const std::string body = request_body(prompt);

  httplib::Headers headers;
  if (config_.api_format == ApiFormat::Anthropic) {
    headers.emplace("x-api-key", api_key_);
    headers.emplace("anthropic-version", "2023-06-01");
  } else {
    headers.emplace("Authorization", "Bearer " + api_key_);
  }

  const int max_attempts = config_.max_retries + 1;
  std::string last_error;
  auto backoff = config_.retry_backoff;
  for (int attempt = 1; attempt <= max_attempts; ++attempt) {
    if (attempt > 1 && backoff.count() > 0) {
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
    wait_for_slot();

    httplib::Client client(url.origin);
    client.set_connection_timeout(config_.timeout);
    client.set_read_timeout(config_.timeout);
    client.set_write_timeout(config_.timeout);
    auto res = client.Post(url.path, headers, body, "application/json");
    if (!res) {
      last_error = httplib::to_string(res.error());
      continue;
    }
    if (res->status < 200 || res->status >= 300) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    try {
      return extract_reply(res->body);
    } catch (const TransportError& e) {
      throw TransportError(e.what(), attempt);
    }
  }
  throw TransportError("judge: request to " + *config_.endpoint_url + " failed after " +
                           std::to_string(max_attempts) + " attempts: " + last_error,
                       max_attempts);
}

}  // namespace qqeval
