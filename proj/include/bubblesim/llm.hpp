#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "bubblesim/agents.hpp"
#include "bubblesim/errors.hpp"
#include "bubblesim/prompts.hpp"
#include "bubblesim/rng.hpp"
#include "bubblesim/simulation.hpp"

namespace bubblesim {

struct LlmConfig {
  std::string endpoint_url;
  std::string model_name;
  double temperature = 0.0;
  int max_tokens = 512;
  int timeout_ms = 30000;
  int max_retries = 3;     // retries after the first attempt
  int in_flight_limit = 4; // reserved; the bundled client is serial
  std::string api_key_env_var = "BUBBLESIM_API_KEY";
  std::string prompt_dir;       // optional template overrides
  std::string item_noun = "items";

  void validate() const {
    if (max_tokens < 1) throw ValidationError("max_tokens must be >= 1");
    if (timeout_ms < 1) throw ValidationError("timeout_ms must be >= 1");
    if (max_retries < 0) throw ValidationError("max_retries must be >= 0");
    if (in_flight_limit < 1) throw ValidationError("in_flight_limit must be >= 1");
    if (temperature < 0.0) throw ValidationError("temperature must be >= 0");
  }
};

struct HttpResponse {
  int status = 0;
  std::string body;
  bool timeout = false;
  std::string error;  // transport-level failure description, empty otherwise
};

// Seam between the chat client and the network. Tests substitute scripted
// implementations; nothing else in the library touches a socket.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual HttpResponse post(const std::string& url,
                            const std::vector<std::pair<std::string, std::string>>& headers,
                            const std::string& body, int timeout_ms) = 0;
};

// One request/response attempt, reported to the trace sink before the reply
// is acted upon.
struct ChatExchange {
  int attempt = 0;  // 1-based
  nlohmann::json request;
  int status = 0;
  bool timeout = false;
  std::string error;
  std::string content;  // assistant text when the attempt succeeded
  double latency_ms = 0.0;
};

// Minimal chat-completions client: POST, parse choices[0].message.content,
// retry timeouts / 429 / 5xx / transport failures with exponential backoff
// (1s base, doubling, up to 500ms seeded jitter).
class LlmClient {
 public:
  using ExchangeSink = std::function<void(const ChatExchange&)>;
  using Sleeper = std::function<void(int /*ms*/)>;

  LlmClient(LlmConfig config, Transport& transport, ExchangeSink sink, std::uint64_t jitter_seed,
            Sleeper sleeper = nullptr)
      : config_(std::move(config)),
        transport_(transport),
        sink_(std::move(sink)),
        jitter_(mix_seed({jitter_seed, kSeedJitter})),
        sleeper_(sleeper ? std::move(sleeper)
                         : [](int ms) { std::this_thread::sleep_for(std::chrono::milliseconds(ms)); }) {
    config_.validate();
    if (config_.endpoint_url.empty()) throw ValidationError("llm endpoint_url is empty");
    const char* key = config_.api_key_env_var.empty() ? nullptr : std::getenv(config_.api_key_env_var.c_str());
    if (key != nullptr) api_key_ = key;
  }

  const LlmConfig& config() const { return config_; }

  std::string complete(const std::string& system_prompt, const std::string& user_prompt) {
    nlohmann::json request = {
        {"model", config_.model_name},
        {"messages",
         nlohmann::json::array({nlohmann::json{{"role", "system"}, {"content", system_prompt}},
                                nlohmann::json{{"role", "user"}, {"content", user_prompt}}})},
        {"temperature", config_.temperature},
        {"max_tokens", config_.max_tokens},
    };
    std::vector<std::pair<std::string, std::string>> headers{{"Content-Type", "application/json"}};
    if (!api_key_.empty()) headers.emplace_back("Authorization", "Bearer " + api_key_);
    std::string body = request.dump();

    int attempts = config_.max_retries + 1;
    std::string last_failure;
    for (int attempt = 1; attempt <= attempts; ++attempt) {
      auto t0 = std::chrono::steady_clock::now();
      HttpResponse resp = transport_.post(config_.endpoint_url, headers, body, config_.timeout_ms);
      auto t1 = std::chrono::steady_clock::now();

      ChatExchange ex;
      ex.attempt = attempt;
      ex.request = request;
      ex.status = resp.status;
      ex.timeout = resp.timeout;
      ex.error = resp.error;
      ex.latency_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();

      bool retryable = resp.timeout || !resp.error.empty() || resp.status == 429 ||
                       (resp.status >= 500 && resp.status <= 599);
      if (resp.status == 200 && !resp.timeout && resp.error.empty()) {
        try {
          std::string content = extract_content(resp.body);
          ex.content = content;
          emit(ex);
          return content;
        } catch (const LlmError& e) {
          // a malformed body still gets traced, then fails without retry
          ex.error = e.what();
          emit(ex);
          throw;
        }
      }
      emit(ex);
      last_failure = describe(resp);
      if (!retryable) throw LlmError("llm request failed: " + last_failure);
      if (attempt < attempts) sleeper_(backoff_ms(attempt));
    }
    throw LlmError("llm request failed after " + std::to_string(attempts) + " attempts: " + last_failure);
  }

  // Delay before the retry that follows attempt n (1-based).
  int backoff_ms(int attempt) {
    double base = 1000.0 * std::pow(2.0, attempt - 1);
    double jitter = jitter_.uniform_real() * 500.0;
    return static_cast<int>(base + jitter);
  }

 private:
  static std::string describe(const HttpResponse& resp) {
    if (!resp.error.empty()) return "transport error: " + resp.error;
    if (resp.timeout) return "timeout";
    return "http status " + std::to_string(resp.status);
  }

  static std::string extract_content(const std::string& body) {
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(body);
    } catch (const nlohmann::json::exception& e) {
      throw LlmError(std::string("malformed response body: ") + e.what());
    }
    if (!doc.contains("choices") || !doc["choices"].is_array() || doc["choices"].empty()) {
      throw LlmError("response has no choices");
    }
    const auto& first = doc["choices"][0];
    if (!first.contains("message") || !first["message"].contains("content") ||
        !first["message"]["content"].is_string()) {
      throw LlmError("response choice has no message content");
    }
    return first["message"]["content"].get<std::string>();
  }

  void emit(const ChatExchange& ex) {
    if (sink_) sink_(ex);
  }

  LlmConfig config_;
  Transport& transport_;
  ExchangeSink sink_;
  Rng jitter_;
  Sleeper sleeper_;
  std::string api_key_;
};

// DecisionMaker backed by the chat endpoint. Every attempt is appended to a
// JSONL trace (flushed before the decision is used); any bridge failure
// falls back to the rule-based persona for that user-round so a simulation
// always completes.
class LlmDecisionMaker final : public DecisionMaker {
 public:
  LlmDecisionMaker(LlmConfig config, Transport& transport, const std::string& trace_path, std::uint64_t seed)
      : templates_(config.prompt_dir.empty() ? PromptTemplates::builtin()
                                             : PromptTemplates::load_dir(config.prompt_dir)),
        client_(std::move(config), transport, [this](const ChatExchange& ex) { write_trace(ex); }, seed) {
    if (!trace_path.empty()) {
      trace_.open(trace_path, std::ios::binary | std::ios::trunc);
      if (!trace_) throw Error("cannot open llm trace for writing: " + trace_path);
    }
  }

  void begin_arm(const std::string& arm) override { arm_ = arm; }

  AgentDecision decide(const UserProfile& profile, const BehaviorPolicy& policy, const RankedPage& page,
                       const Catalog& catalog, const ItemMeanTable& means, std::uint64_t seed) override {
    context_user_ = page.user;
    context_round_ = page.round;
    try {
      std::string prompt = render_prompt(templates_, profile, policy.kind, page, catalog,
                                         client_.config().item_noun);
      std::string reply = client_.complete(kSystemPrompt, prompt);
      ParsedLlmDecision parsed = parse_llm_decision(reply, page, catalog);
      parse_drops_ += parsed.dropped;
      return parsed.decision;
    } catch (const Error&) {
      ++fallbacks_;
      AgentDecision d = decide_rule_based(profile, policy, page, catalog, means, seed);
      d.provenance = AgentDecision::Provenance::kLlmFallback;
      return d;
    }
  }

  long long fallbacks() const { return fallbacks_; }
  long long parse_drops() const { return parse_drops_; }

  static constexpr const char* kSystemPrompt =
      "You are role-playing one user of a recommendation service. Stay in character and answer only in the "
      "requested format.";

 private:
  void write_trace(const ChatExchange& ex) {
    if (!trace_.is_open()) return;
    nlohmann::json line = {
        {"arm", arm_},          {"user", context_user_}, {"round", context_round_},
        {"attempt", ex.attempt}, {"request", ex.request}, {"status", ex.status},
        {"timeout", ex.timeout}, {"error", ex.error},     {"content", ex.content},
        {"latency_ms", ex.latency_ms},
    };
    trace_ << line.dump() << "\n";
    trace_.flush();
  }

  PromptTemplates templates_;
  LlmClient client_;
  std::ofstream trace_;
  std::string arm_;
  UserId context_user_ = 0;
  int context_round_ = 0;
  long long fallbacks_ = 0;
  long long parse_drops_ = 0;
};

}  // namespace bubblesim
