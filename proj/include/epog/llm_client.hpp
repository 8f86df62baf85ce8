#pragma once

#include <cstdlib>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "epog/oracle.hpp"

namespace epog {

struct LlmConfig {
  std::string endpoint;  // full URL, e.g. http://host:port/v1/chat/completions
  std::string api_key;
  std::string model = "gpt-4o";
  int timeout_seconds = 30;
  int max_retries = 3;
  PromptLibrary prompts;

  static LlmConfig from_env() {
    LlmConfig cfg;
    if (const char* ep = std::getenv("EPOG_LLM_ENDPOINT")) cfg.endpoint = ep;
    if (const char* key = std::getenv("EPOG_LLM_KEY")) cfg.api_key = key;
    return cfg;
  }
};

// Blocking chat-completion client over the configured endpoint.
class LlmClient {
 public:
  explicit LlmClient(LlmConfig config) : config_(std::move(config)) {
    if (config_.endpoint.empty())
      throw TransportError("EPOG_LLM_ENDPOINT is not set");
    split_endpoint();
  }

  // One system + user exchange; returns the reply text.
  std::string chat(const std::string& system_msg, const std::string& user_msg) {
    nlohmann::json request{
        {"model", config_.model},
        {"messages",
         {{{"role", "system"}, {"content", system_msg}},
          {{"role", "user"}, {"content", user_msg}}}}};

    httplib::Client cli(base_);
    cli.set_connection_timeout(config_.timeout_seconds);
    cli.set_read_timeout(config_.timeout_seconds);
    httplib::Headers headers;
    if (!config_.api_key.empty())
      headers.emplace("Authorization", "Bearer " + config_.api_key);

    std::string last_error;
    for (int attempt = 0; attempt < config_.max_retries; ++attempt) {
      httplib::Result res =
          cli.Post(path_, headers, request.dump(), "application/json");
      if (!res) {
        last_error = httplib::to_string(res.error());
        continue;
      }
      if (res->status != 200) {
        last_error = "http status " + std::to_string(res->status);
        continue;
      }
      try {
        nlohmann::json reply = nlohmann::json::parse(res->body);
        return reply.at("choices").at(0).at("message").at("content")
            .get<std::string>();
      } catch (const nlohmann::json::exception& e) {
        last_error = std::string("malformed reply: ") + e.what();
      }
    }
    throw TransportError("llm endpoint failed after retries: " + last_error);
  }

  const LlmConfig& config() const { return config_; }

 private:
  void split_endpoint() {
    const std::string& url = config_.endpoint;
    std::size_t scheme = url.find("://");
    std::size_t path_start =
        url.find('/', scheme == std::string::npos ? 0 : scheme + 3);
    if (path_start == std::string::npos) {
      base_ = url;
      path_ = "/";
    } else {
      base_ = url.substr(0, path_start);
      path_ = url.substr(path_start);
    }
  }

  LlmConfig config_;
  std::string base_;
  std::string path_;
};

namespace llm_detail {

inline std::string lower(std::string s) {
  for (char& c : s)
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

// Extracts the value after "<tag>:" on any line of the reply.
inline std::optional<std::string> tagged_value(const std::string& reply,
                                               const std::string& tag) {
  std::string low = lower(reply);
  std::string needle = lower(tag) + ":";
  std::size_t pos = low.find(needle);
  if (pos == std::string::npos) return std::nullopt;
  std::size_t start = pos + needle.size();
  std::size_t end = reply.find('\n', start);
  std::string value = reply.substr(
      start, end == std::string::npos ? std::string::npos : end - start);
  value = detail::trim(value);
  while (!value.empty() && (value.back() == '.' || value.back() == '`'))
    value.pop_back();
  while (!value.empty() && value.front() == '`') value.erase(value.begin());
  if (value.empty()) return std::nullopt;
  return value;
}

inline std::optional<NodeId> match_candidate(
    const std::string& value, const std::vector<LabeledNode>& candidates) {
  std::string v = lower(detail::trim(value));
  for (const LabeledNode& c : candidates)
    if (lower(c.id.value) == v) return c.id;
  for (const LabeledNode& c : candidates)
    if (lower(c.label) == v) return c.id;
  return std::nullopt;
}

inline std::string candidate_list(const std::vector<LabeledNode>& candidates) {
  std::string out;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (i) out += ", ";
    out += candidates[i].label + " (" + candidates[i].id.value + ")";
  }
  return out;
}

}  // namespace llm_detail

// Two prompts per object: the likely Room, then the Receptacle within it.
// Falls back to the mock's ranking after 3 unparseable replies.
class LlmLocationOracle : public LocationOracle {
 public:
  LlmLocationOracle(std::shared_ptr<LlmClient> client, MockOracleConfig fallback)
      : client_(std::move(client)), fallback_(std::move(fallback)) {}

  LocationAnswer predict_location(const LocationQuery& query,
                                  const std::set<NodeId>& excluded) override {
    const PromptLibrary& prompts = client_->config().prompts;

    // Candidates with every receptacle excluded cannot be answered.
    std::vector<LabeledNode> rooms;
    std::map<NodeId, std::vector<LabeledNode>> rcpts;
    for (const LabeledNode& room : query.candidate_rooms) {
      auto it = query.candidate_receptacles_by_room.find(room.id);
      if (it == query.candidate_receptacles_by_room.end()) continue;
      std::vector<LabeledNode> left;
      for (const LabeledNode& r : it->second)
        if (!excluded.count(r.id)) left.push_back(r);
      if (left.empty()) continue;
      rooms.push_back(room);
      rcpts[room.id] = std::move(left);
    }
    if (rooms.empty())
      throw ExhaustionError("all candidate receptacles excluded for '" +
                            query.object_label + "'");

    for (int attempt = 0; attempt < 3; ++attempt) {
      std::string room_prompt = substitute_placeholder(
          prompts.location_room, "object", query.object_label);
      room_prompt = substitute_placeholder(
          room_prompt, "candidates", llm_detail::candidate_list(rooms));
      std::string room_reply = client_->chat("", room_prompt);
      auto room_value = llm_detail::tagged_value(room_reply, "Room");
      if (!room_value) continue;
      auto room_id = llm_detail::match_candidate(*room_value, rooms);
      if (!room_id) continue;

      const std::vector<LabeledNode>& in_room = rcpts.at(*room_id);
      std::string room_label;
      for (const LabeledNode& r : rooms)
        if (r.id == *room_id) room_label = r.label;
      std::string rcpt_prompt = substitute_placeholder(
          prompts.location_receptacle, "object", query.object_label);
      rcpt_prompt = substitute_placeholder(rcpt_prompt, "room", room_label);
      rcpt_prompt = substitute_placeholder(
          rcpt_prompt, "candidates", llm_detail::candidate_list(in_room));
      std::string rcpt_reply = client_->chat("", rcpt_prompt);
      auto rcpt_value = llm_detail::tagged_value(rcpt_reply, "Receptacle");
      if (!rcpt_value) continue;
      auto rcpt_id = llm_detail::match_candidate(*rcpt_value, in_room);
      if (!rcpt_id) continue;
      return {*room_id, *rcpt_id};
    }

    MockLocationOracle fallback(fallback_);
    return fallback.predict_location(query, excluded);
  }

 private:
  std::shared_ptr<LlmClient> client_;
  MockOracleConfig fallback_;
};

// Builds the corrective-action prompt and parses the final bracketed list.
// Falls back to the rule resolver after 3 unparseable replies.
class LlmExceptionResolver : public ExceptionResolver {
 public:
  explicit LlmExceptionResolver(std::shared_ptr<LlmClient> client)
      : client_(std::move(client)) {}

  std::vector<Action> resolve_exception(const ExceptionQuery& query) override {
    const PromptLibrary& prompts = client_->config().prompts;
    std::string user = substitute_placeholder(
        prompts.exception_user, "failure_action",
        describe_action(query.failed_action));
    user = substitute_placeholder(user, "exception", describe_exception(query));
    user = substitute_placeholder(user, "parking_place",
                                  query.parking_place.value);

    for (int attempt = 0; attempt < 3; ++attempt) {
      std::string reply = client_->chat(prompts.exception_system, user);
      if (auto actions = parse_action_list(reply)) return *actions;
    }
    MockExceptionResolver fallback;
    return fallback.resolve_exception(query);
  }

 private:
  std::shared_ptr<LlmClient> client_;
};

}  // namespace epog
