#pragma once

// Vision-LLM client speaking the chat-completions JSON shape, with retries,
// a cap on in-flight requests, and an offline replay mode.

#include <atomic>
#include <chrono>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "somlist/textgen.hpp"

namespace som {

struct ClientConfig {
    std::string endpoint;  // full URL of the chat-completions route
    std::string model;
    std::string api_key;   // filled from the environment, never from files
    std::string api_key_env = "SOM_API_KEY";
    int max_tokens = 1024;
    double temperature = 0.2;
    int max_in_flight = 4;
    int max_attempts = 5;
    std::chrono::milliseconds base_delay{500};
    std::chrono::milliseconds max_delay{16000};
    std::chrono::seconds timeout{120};

    void validate() const;
};

/// Reads the "client" section of a pipeline config. Unknown keys are ignored.
ClientConfig client_config_from_json(const nlohmann::json& j);

/// Reads `config.api_key_env` from the environment into `config.api_key`.
void load_api_key(ClientConfig& config);

nlohmann::ordered_json to_chat_request(const PromptBundle& bundle, const ClientConfig& config);

/// choices[0].message.content; throws ProtocolError otherwise.
std::string parse_chat_response(std::string_view body);

struct HttpResponse {
    int status = 0;
    std::string body;
};

/// Connection-level failure (timeout, refused, reset). Always retried.
class TransportFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

using HttpHeaders = std::vector<std::pair<std::string, std::string>>;

class Transport {
public:
    virtual ~Transport() = default;
    virtual HttpResponse post(const std::string& url, const HttpHeaders& headers, const std::string& body,
                              std::chrono::seconds timeout) = 0;
};

/// cpp-httplib backed transport (http and https).
std::shared_ptr<Transport> make_http_transport();

struct SubmitResult {
    std::string text;
    int attempts = 0;
    std::vector<std::string> log;  // one line per attempt
};

class Generator {
public:
    virtual ~Generator() = default;
    virtual SubmitResult submit(const PromptBundle& bundle) = 0;
};

using Sleeper = std::function<void(std::chrono::milliseconds)>;

class VlmClient : public Generator {
public:
    VlmClient(ClientConfig config, std::shared_ptr<Transport> transport, Sleeper sleeper = {});

    /// Retries timeouts, 429 and 5xx with exponential backoff up to max_attempts.
    SubmitResult submit(const PromptBundle& bundle) override;

    int peak_in_flight() const { return peak_in_flight_.load(); }
    std::chrono::milliseconds backoff_delay(int failed_attempts) const;

private:
    static constexpr std::ptrdiff_t kMaxInFlight = 1024;

    ClientConfig config_;
    std::shared_ptr<Transport> transport_;
    Sleeper sleeper_;
    std::counting_semaphore<kMaxInFlight> slots_;
    std::atomic<int> in_flight_{0};
    std::atomic<int> peak_in_flight_{0};
};

/// Serves `<dir>/<bundle_hash>.txt`; never touches the network.
class ReplayGenerator : public Generator {
public:
    explicit ReplayGenerator(std::filesystem::path dir);
    SubmitResult submit(const PromptBundle& bundle) override;
    std::filesystem::path fixture_path(const PromptBundle& bundle) const;

private:
    std::filesystem::path dir_;
};

struct BatchOutcome {
    std::optional<SubmitResult> result;
    std::string error;
};

/// Runs every bundle through `gen` on `jobs` workers; results follow input order.
std::vector<BatchOutcome> submit_batch(Generator& gen, std::span<const PromptBundle> bundles, int jobs);

}  // namespace som
