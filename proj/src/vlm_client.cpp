#include "somlist/vlm_client.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include <httplib.h>

#include "somlist/digest.hpp"
#include "somlist/errors.hpp"

namespace som {

using nlohmann::json;
using ojson = nlohmann::ordered_json;

void ClientConfig::validate() const {
    if (endpoint.empty()) {
        throw ConfigError("client endpoint is not configured");
    }
    if (model.empty()) {
        throw ConfigError("client model is not configured");
    }
    if (max_tokens <= 0) {
        throw ConfigError("max_tokens must be positive");
    }
    if (max_in_flight < 1 || max_in_flight > 1024) {
        throw ConfigError("max_in_flight must lie in [1, 1024]");
    }
    if (max_attempts < 1) {
        throw ConfigError("max_attempts must be >= 1");
    }
}

ClientConfig client_config_from_json(const json& j) {
    ClientConfig c;
    try {
        c.endpoint = j.value("endpoint", c.endpoint);
        c.model = j.value("model", c.model);
        c.api_key_env = j.value("api_key_env", c.api_key_env);
        c.max_tokens = j.value("max_tokens", c.max_tokens);
        c.temperature = j.value("temperature", c.temperature);
        c.max_in_flight = j.value("max_in_flight", c.max_in_flight);
        c.max_attempts = j.value("max_attempts", c.max_attempts);
        c.base_delay = std::chrono::milliseconds(j.value("base_delay_ms", c.base_delay.count()));
        c.max_delay = std::chrono::milliseconds(j.value("max_delay_ms", c.max_delay.count()));
        c.timeout = std::chrono::seconds(j.value("timeout_s", c.timeout.count()));
    } catch (const json::exception& e) {
        throw ConfigError(std::string("invalid client config: ") + e.what());
    }
    return c;
}

void load_api_key(ClientConfig& config) {
    const char* key = std::getenv(config.api_key_env.c_str());
    if (key == nullptr || *key == '\0') {
        throw ConfigError("environment variable " + config.api_key_env + " is not set");
    }
    config.api_key = key;
}

namespace {

ojson user_message(const std::string& text, const std::string& png) {
    ojson content = ojson::array();
    content.push_back({{"type", "text"}, {"text", text}});
    content.push_back(
        {{"type", "image_url"}, {"image_url", {{"url", "data:image/png;base64," + base64_encode(png)}}}});
    return {{"role", "user"}, {"content", std::move(content)}};
}

}  // namespace

ojson to_chat_request(const PromptBundle& bundle, const ClientConfig& config) {
    ojson req;
    req["model"] = config.model;
    req["max_tokens"] = config.max_tokens;
    req["temperature"] = config.temperature;
    ojson messages = ojson::array();
    if (!bundle.system_message.empty()) {
        messages.push_back({{"role", "system"}, {"content", bundle.system_message}});
    }
    for (const auto& ex : bundle.exemplars) {
        messages.push_back(user_message(bundle.user_text, ex.image_png));
        messages.push_back({{"role", "assistant"}, {"content", ex.listing_text}});
    }
    messages.push_back(user_message(bundle.user_text, bundle.image_png));
    req["messages"] = std::move(messages);
    return req;
}

std::string parse_chat_response(std::string_view body) {
    json j;
    try {
        j = json::parse(body.begin(), body.end());
    } catch (const json::parse_error& e) {
        throw ProtocolError(std::string("response is not JSON: ") + e.what());
    }
    try {
        const json& content = j.at("choices").at(0).at("message").at("content");
        if (content.is_string()) {
            return content.get<std::string>();
        }
        if (content.is_array()) {
            std::string text;
            for (const auto& part : content) {
                if (part.value("type", "") == "text") {
                    text += part.at("text").get<std::string>();
                }
            }
            return text;
        }
    } catch (const json::exception& e) {
        throw ProtocolError(std::string("unexpected response envelope: ") + e.what());
    }
    throw ProtocolError("unexpected response envelope: content is neither text nor parts");
}

namespace {

class HttpLibTransport : public Transport {
public:
    HttpResponse post(const std::string& url, const HttpHeaders& headers, const std::string& body,
                      std::chrono::seconds timeout) override {
        const auto scheme_end = url.find("://");
        if (scheme_end == std::string::npos) {
            throw ConfigError("endpoint must be an absolute http(s) URL: " + url);
        }
        const auto path_start = url.find('/', scheme_end + 3);
        const std::string origin = url.substr(0, path_start);
        const std::string path = path_start == std::string::npos ? "/" : url.substr(path_start);

        httplib::Client client(origin);
        client.set_connection_timeout(timeout);
        client.set_read_timeout(timeout);
        client.set_write_timeout(timeout);
        httplib::Headers h;
        for (const auto& [k, v] : headers) {
            if (k == "Content-Type") {
                continue;  // set by Post()
            }
            h.emplace(k, v);
        }
        auto res = client.Post(path, h, body, "application/json");
        if (!res) {
            throw TransportFailure("request to " + origin + " failed: " + httplib::to_string(res.error()));
        }
        return {res->status, res->body};
    }
};

bool retryable_status(int status) { return status == 429 || (status >= 500 && status <= 599); }

// Holds one in-flight slot for the lifetime of a request.
class SlotGuard {
public:
    SlotGuard(std::counting_semaphore<1024>& sem, std::atomic<int>& in_flight, std::atomic<int>& peak)
        : sem_(sem), in_flight_(in_flight) {
        sem_.acquire();
        const int now = ++in_flight_;
        int prev = peak.load();
        while (now > prev && !peak.compare_exchange_weak(prev, now)) {
        }
    }
    ~SlotGuard() {
        --in_flight_;
        sem_.release();
    }
    SlotGuard(const SlotGuard&) = delete;
    SlotGuard& operator=(const SlotGuard&) = delete;

private:
    std::counting_semaphore<1024>& sem_;
    std::atomic<int>& in_flight_;
};

}  // namespace

std::shared_ptr<Transport> make_http_transport() { return std::make_shared<HttpLibTransport>(); }

VlmClient::VlmClient(ClientConfig config, std::shared_ptr<Transport> transport, Sleeper sleeper)
    : config_(std::move(config)),
      transport_(std::move(transport)),
      sleeper_(sleeper ? std::move(sleeper) : Sleeper([](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); })),
      slots_(std::clamp<std::ptrdiff_t>(config_.max_in_flight, 1, kMaxInFlight)) {
    config_.validate();
}

std::chrono::milliseconds VlmClient::backoff_delay(int failed_attempts) const {
    auto delay = config_.base_delay;
    for (int i = 1; i < failed_attempts && delay < config_.max_delay; ++i) {
        delay *= 2;
    }
    return std::min(delay, config_.max_delay);
}

SubmitResult VlmClient::submit(const PromptBundle& bundle) {
    validate_bundle(bundle);
    const std::string body = to_chat_request(bundle, config_).dump();
    HttpHeaders headers = {{"Content-Type", "application/json"}};
    if (!config_.api_key.empty()) {
        headers.emplace_back("Authorization", "Bearer " + config_.api_key);
    }

    SubmitResult result;
    std::string last_error;
    for (int attempt = 1; attempt <= config_.max_attempts; ++attempt) {
        result.attempts = attempt;
        HttpResponse response;
        try {
            SlotGuard slot(slots_, in_flight_, peak_in_flight_);
            response = transport_->post(config_.endpoint, headers, body, config_.timeout);
        } catch (const TransportFailure& e) {
            last_error = e.what();
            result.log.push_back("attempt " + std::to_string(attempt) + ": " + last_error);
            if (attempt < config_.max_attempts) {
                sleeper_(backoff_delay(attempt));
            }
            continue;
        }
        result.log.push_back("attempt " + std::to_string(attempt) + ": HTTP " + std::to_string(response.status));
        if (response.status >= 200 && response.status < 300) {
            result.text = parse_chat_response(response.body);
            return result;
        }
        last_error = "HTTP " + std::to_string(response.status);
        if (!retryable_status(response.status)) {
            throw TransportError("request rejected with " + last_error, attempt);
        }
        if (attempt < config_.max_attempts) {
            sleeper_(backoff_delay(attempt));
        }
    }
    throw TransportError("giving up after " + std::to_string(config_.max_attempts) + " attempts: " + last_error,
                         config_.max_attempts);
}

ReplayGenerator::ReplayGenerator(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    if (!std::filesystem::is_directory(dir_, ec)) {
        throw ConfigError("replay directory does not exist: " + dir_.string());
    }
}

std::filesystem::path ReplayGenerator::fixture_path(const PromptBundle& bundle) const {
    return dir_ / (bundle_hash(bundle) + ".txt");
}

SubmitResult ReplayGenerator::submit(const PromptBundle& bundle) {
    validate_bundle(bundle);
    const auto path = fixture_path(bundle);
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("no replay fixture " + path.filename().string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return {ss.str(), 1, {"replay " + path.filename().string()}};
}

std::vector<BatchOutcome> submit_batch(Generator& gen, std::span<const PromptBundle> bundles, int jobs) {
    std::vector<BatchOutcome> out(bundles.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < bundles.size(); i = next++) {
            try {
                out[i].result = gen.submit(bundles[i]);
            } catch (const std::exception& e) {
                out[i].error = e.what();
            }
        }
    };
    const int n = std::max(1, std::min<int>(jobs, static_cast<int>(bundles.size())));
    std::vector<std::jthread> pool;
    for (int t = 1; t < n; ++t) {
        pool.emplace_back(worker);
    }
    worker();
    pool.clear();  // joins
    return out;
}

}  // namespace som
