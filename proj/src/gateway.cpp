#include "sode/gateway.hpp"

#include <cstdlib>
#include <ctime>
#include <thread>

#include <fmt/format.h>
#include <httplib.h>

namespace sode {

namespace {

struct ParsedUrl {
  std::string scheme_host_port;
  std::string path_prefix;
};

ParsedUrl parse_base_url(const std::string& url) {
  std::string rest;
  std::string scheme;
  if (url.rfind("http://", 0) == 0) {
    scheme = "http://";
  } else if (url.rfind("https://", 0) == 0) {
    scheme = "https://";
  } else {
    throw std::invalid_argument(fmt::format("base_url \"{}\" is not an absolute http(s) URL", url));
  }
  rest = url.substr(scheme.size());
  const auto slash = rest.find('/');
  ParsedUrl out;
  out.scheme_host_port = scheme + rest.substr(0, slash);
  if (slash != std::string::npos) out.path_prefix = rest.substr(slash);
  while (!out.path_prefix.empty() && out.path_prefix.back() == '/') out.path_prefix.pop_back();
  if (rest.substr(0, slash).empty()) {
    throw std::invalid_argument(fmt::format("base_url \"{}\" has no host", url));
  }
  return out;
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const auto t = std::chrono::system_clock::to_time_t(now);
  const auto ms =
      std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&t, &tm);
  return fmt::format("{:04}-{:02}-{:02}T{:02}:{:02}:{:02}.{:03}Z", tm.tm_year + 1900, tm.tm_mon + 1,
                     tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec, ms);
}

}  // namespace

void validate(const ModelEndpoint& e) {
  parse_base_url(e.base_url);
  if (e.model_id.empty()) throw std::invalid_argument("endpoint model_id is empty");
}

void to_json(nlohmann::json& j, const SamplingConfig& s) {
  j = {{"temperature", s.temperature},
       {"top_p", s.top_p},
       {"top_k", s.top_k},
       {"max_tokens", s.max_tokens},
       {"context_limit", s.context_limit}};
}

void from_json(const nlohmann::json& j, SamplingConfig& s) {
  SamplingConfig d;
  s.temperature = j.value("temperature", d.temperature);
  s.top_p = j.value("top_p", d.top_p);
  s.top_k = j.value("top_k", d.top_k);
  s.max_tokens = j.value("max_tokens", d.max_tokens);
  s.context_limit = j.value("context_limit", d.context_limit);
}

void to_json(nlohmann::json& j, const GatewayOptions& o) {
  j = {{"max_attempts", o.max_attempts},
       {"initial_backoff_ms", o.initial_backoff.count()},
       {"max_backoff_ms", o.max_backoff.count()},
       {"connect_timeout_ms", o.connect_timeout.count()},
       {"read_timeout_ms", o.read_timeout.count()},
       {"seed", o.seed}};
}

void from_json(const nlohmann::json& j, GatewayOptions& o) {
  GatewayOptions d;
  using ms = std::chrono::milliseconds;
  o.max_attempts = j.value("max_attempts", d.max_attempts);
  o.initial_backoff = ms(j.value("initial_backoff_ms", d.initial_backoff.count()));
  o.max_backoff = ms(j.value("max_backoff_ms", d.max_backoff.count()));
  o.connect_timeout = ms(j.value("connect_timeout_ms", d.connect_timeout.count()));
  o.read_timeout = ms(j.value("read_timeout_ms", d.read_timeout.count()));
  o.seed = j.value("seed", d.seed);
}

nlohmann::json chat_request_body(const ModelEndpoint& endpoint, const PromptBundle& bundle,
                                 const SamplingConfig& sampling) {
  // context_limit is a server-side setting and is not sent.
  return {{"model", endpoint.model_id},
          {"messages",
           nlohmann::json::array({{{"role", "system"}, {"content", bundle.system_text}},
                                  {{"role", "user"}, {"content", bundle.user_text}}})},
          {"temperature", sampling.temperature},
          {"top_p", sampling.top_p},
          {"top_k", sampling.top_k},
          {"max_tokens", sampling.max_tokens}};
}

void to_json(nlohmann::json& j, const CallTranscript& t) {
  j = {{"request_id", t.request_id},
       {"attempt", t.attempt},
       {"timestamp", t.timestamp},
       {"base_url", t.base_url},
       {"model_id", t.model_id},
       {"messages",
        {{{"role", "system"}, {"content", t.system_text}},
         {{"role", "user"}, {"content", t.user_text}}}},
       {"sampling", t.sampling},
       {"outcome", t.outcome},
       {"http_status", t.http_status},
       {"raw_response", t.raw_response},
       {"latency_ms", t.latency_ms}};
}

TranscriptLog::TranscriptLog(const std::filesystem::path& jsonl_path)
    : sink_(jsonl_path, std::ios::app) {
  if (!sink_) throw std::runtime_error(fmt::format("cannot open {}", jsonl_path.string()));
}

void TranscriptLog::append(CallTranscript t) {
  std::lock_guard lock(mu_);
  if (sink_.is_open()) {
    sink_ << nlohmann::json(t).dump() << '\n';
    sink_.flush();
  }
  entries_.push_back(std::move(t));
}

std::vector<CallTranscript> TranscriptLog::entries() const {
  std::lock_guard lock(mu_);
  return entries_;
}

std::size_t TranscriptLog::size() const {
  std::lock_guard lock(mu_);
  return entries_.size();
}

// RAII hold on one unit of the concurrency budget.
class Gateway::Slot {
 public:
  explicit Slot(Gateway& g) : g_(g) {
    std::unique_lock lock(g_.mu_);
    g_.cv_.wait(lock, [&] { return g_.in_flight_ < g_.limit_; });
    ++g_.in_flight_;
  }
  ~Slot() {
    {
      std::lock_guard lock(g_.mu_);
      --g_.in_flight_;
    }
    g_.cv_.notify_one();
  }
  Slot(const Slot&) = delete;
  Slot& operator=(const Slot&) = delete;

 private:
  Gateway& g_;
};

Gateway::Gateway(int limit, GatewayOptions options, std::shared_ptr<TranscriptLog> log)
    : limit_(limit),
      options_(options),
      log_(log ? std::move(log) : std::make_shared<TranscriptLog>()),
      jitter_(derive_seed(options.seed, {0x6a6974ULL})) {
  if (limit < 1) throw std::invalid_argument("concurrency budget must be >= 1");
  if (options.max_attempts < 1) throw std::invalid_argument("max_attempts must be >= 1");
}

std::shared_ptr<Gateway> Gateway::with_concurrency_budget(int limit, GatewayOptions options,
                                                          std::shared_ptr<TranscriptLog> log) {
  return std::make_shared<Gateway>(limit, options, std::move(log));
}

std::string Gateway::next_request_id() {
  std::lock_guard lock(mu_);
  const auto n = next_id_++;
  return fmt::format("req-{:016x}-{}", derive_seed(options_.seed, {0x726571ULL}), n);
}

std::chrono::milliseconds Gateway::backoff_for(int failed_attempts) {
  const double base = static_cast<double>(options_.initial_backoff.count()) *
                      static_cast<double>(1LL << std::min(failed_attempts - 1, 30));
  const double capped = std::min(base, static_cast<double>(options_.max_backoff.count()));
  double u;
  {
    std::lock_guard lock(mu_);
    u = jitter_.uniform01();
  }
  // Equal jitter: uniform in [capped/2, capped].
  return std::chrono::milliseconds(static_cast<long long>(capped * (0.5 + 0.5 * u)));
}

ChatResult Gateway::complete(const ModelEndpoint& endpoint, const PromptBundle& bundle,
                             const SamplingConfig& sampling) {
  if (bundle.system_text.empty() && bundle.user_text.empty()) {
    throw std::invalid_argument("empty prompt bundle");
  }
  const auto url = parse_base_url(endpoint.base_url);
  httplib::Headers headers;
  if (!endpoint.credential_env.empty()) {
    const char* key = std::getenv(endpoint.credential_env.c_str());
    if (key == nullptr || *key == '\0') {
      throw CredentialMissing(
          fmt::format("environment variable {} is not set", endpoint.credential_env));
    }
    headers.emplace("Authorization", std::string("Bearer ") + key);
  }
  const std::string body = chat_request_body(endpoint, bundle, sampling).dump();
  const std::string path = url.path_prefix + "/chat/completions";
  const std::string request_id = next_request_id();

  for (int attempt = 1;; ++attempt) {
    CallTranscript t;
    t.request_id = request_id;
    t.attempt = attempt;
    t.timestamp = utc_now();
    t.base_url = endpoint.base_url;
    t.model_id = endpoint.model_id;
    t.system_text = bundle.system_text;
    t.user_text = bundle.user_text;
    t.sampling = sampling;

    httplib::Result res{nullptr, httplib::Error::Unknown};
    const auto start = std::chrono::steady_clock::now();
    {
      Slot slot(*this);
      httplib::Client client(url.scheme_host_port);
      const auto to_parts = [](std::chrono::milliseconds d) {
        return std::pair<time_t, time_t>(d.count() / 1000, (d.count() % 1000) * 1000);
      };
      auto [cs, cus] = to_parts(options_.connect_timeout);
      auto [rs, rus] = to_parts(options_.read_timeout);
      client.set_connection_timeout(cs, cus);
      client.set_read_timeout(rs, rus);
      client.set_write_timeout(rs, rus);
      res = client.Post(path, headers, body, "application/json");
    }
    t.latency_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                             start)
                       .count();

    if (!res) {
      t.outcome = "transport_error";
      t.raw_response = httplib::to_string(res.error());
      log_->append(t);
      throw TransportError(fmt::format("{}: {}", endpoint.base_url, t.raw_response));
    }
    t.http_status = res->status;
    t.raw_response = res->body;
    if (res->status == 429) {
      t.outcome = "rate_limited";
      log_->append(t);
      if (attempt >= options_.max_attempts) {
        throw RateLimited(fmt::format("rate limited after {} attempts", attempt));
      }
      std::this_thread::sleep_for(backoff_for(attempt));
      continue;
    }
    if (res->status < 200 || res->status >= 300) {
      t.outcome = "server_error";
      log_->append(t);
      throw ServerError(res->status, fmt::format("HTTP {} from {}", res->status, endpoint.base_url));
    }

    const auto j = nlohmann::json::parse(res->body, nullptr, /*allow_exceptions=*/false);
    const nlohmann::json* content = nullptr;
    if (!j.is_discarded() && j.contains("choices") && j["choices"].is_array() &&
        !j["choices"].empty()) {
      const auto& choice = j["choices"][0];
      if (choice.contains("message") && choice["message"].contains("content") &&
          choice["message"]["content"].is_string()) {
        content = &choice["message"]["content"];
      }
    }
    if (content == nullptr) {
      t.outcome = "server_error";
      log_->append(t);
      throw ServerError(res->status, "response has no choices[0].message.content");
    }
    t.outcome = "ok";
    log_->append(t);
    return {content->get<std::string>(), request_id, attempt};
  }
}

}  // namespace sode
