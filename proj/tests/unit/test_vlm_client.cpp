#include <gtest/gtest.h>

#include <deque>
#include <mutex>
#include <thread>

#include <httplib.h>

#include "somlist/errors.hpp"
#include "somlist/image.hpp"
#include "somlist/vlm_client.hpp"
#include "support.hpp"

using namespace som;
using namespace std::chrono_literals;

namespace {

std::string ok_body(const std::string& text) {
    return nlohmann::json{{"choices", {{{"message", {{"role", "assistant"}, {"content", text}}}}}}}.dump();
}

// Plays back a script of responses; -1 means a connection failure.
class ScriptedTransport : public Transport {
public:
    explicit ScriptedTransport(std::deque<HttpResponse> script) : script_(std::move(script)) {}

    HttpResponse post(const std::string&, const HttpHeaders& headers, const std::string& body,
                      std::chrono::seconds) override {
        std::lock_guard lock(mu_);
        ++calls;
        last_headers = headers;
        last_body = body;
        if (script_.empty()) return {500, "exhausted"};
        HttpResponse r = script_.front();
        if (script_.size() > 1) script_.pop_front();
        if (r.status == -1) throw TransportFailure("connection reset");
        return r;
    }

    int calls = 0;
    HttpHeaders last_headers;
    std::string last_body;

private:
    std::mutex mu_;
    std::deque<HttpResponse> script_;
};

// Sleeps briefly so overlapping requests are observable.
class SlowTransport : public Transport {
public:
    HttpResponse post(const std::string&, const HttpHeaders&, const std::string&, std::chrono::seconds) override {
        std::this_thread::sleep_for(5ms);
        return {200, ok_body("1. a, 2. b.")};
    }
};

ClientConfig config(int attempts = 5, int in_flight = 4) {
    ClientConfig c;
    c.endpoint = "http://localhost/v1/chat/completions";
    c.model = "test-model";
    c.max_attempts = attempts;
    c.max_in_flight = in_flight;
    c.base_delay = 100ms;
    c.max_delay = 1000ms;
    return c;
}

PromptBundle bundle(PromptMode mode = PromptMode::zero_shot) {
    return build_listing_prompt(encode_png(RgbImage(8, 8, {10, 20, 30})), 2, mode);
}

struct SleepLog {
    std::vector<std::chrono::milliseconds> delays;
    Sleeper sleeper() {
        return [this](std::chrono::milliseconds d) { delays.push_back(d); };
    }
};

}  // namespace

TEST(Client, RetriesRateLimitThenSucceeds) {
    auto t = std::make_shared<ScriptedTransport>(std::deque<HttpResponse>{{429, ""}, {429, ""}, {200, ok_body("1. cat")}});
    SleepLog sl;
    VlmClient client(config(), t, sl.sleeper());
    const SubmitResult r = client.submit(bundle());
    EXPECT_EQ(r.text, "1. cat");
    EXPECT_EQ(r.attempts, 3);
    EXPECT_EQ(t->calls, 3);
    EXPECT_EQ(r.log.size(), 3u);
    EXPECT_EQ(sl.delays, (std::vector<std::chrono::milliseconds>{100ms, 200ms}));
}

TEST(Client, PermanentServerErrorHitsCap) {
    auto t = std::make_shared<ScriptedTransport>(std::deque<HttpResponse>{{503, ""}});
    SleepLog sl;
    VlmClient client(config(4), t, sl.sleeper());
    try {
        client.submit(bundle());
        FAIL() << "no throw";
    } catch (const TransportError& e) {
        EXPECT_EQ(e.attempts(), 4);
    }
    EXPECT_EQ(t->calls, 4);
    EXPECT_EQ(sl.delays.size(), 3u);
}

TEST(Client, ClientErrorIsNotRetried) {
    auto t = std::make_shared<ScriptedTransport>(std::deque<HttpResponse>{{400, "bad"}});
    VlmClient client(config(), t, SleepLog{}.sleeper());
    EXPECT_THROW(client.submit(bundle()), TransportError);
    EXPECT_EQ(t->calls, 1);
}

TEST(Client, ConnectionFailuresAreRetried) {
    auto t = std::make_shared<ScriptedTransport>(std::deque<HttpResponse>{{-1, ""}, {200, ok_body("ok")}});
    SleepLog sl;
    VlmClient client(config(), t, sl.sleeper());
    EXPECT_EQ(client.submit(bundle()).attempts, 2);
}

TEST(Client, BadEnvelopeIsProtocolError) {
    auto t = std::make_shared<ScriptedTransport>(std::deque<HttpResponse>{{200, R"({"result": "x"})"}});
    VlmClient client(config(), t, SleepLog{}.sleeper());
    EXPECT_THROW(client.submit(bundle()), ProtocolError);
    EXPECT_THROW(parse_chat_response("not json"), ProtocolError);
    EXPECT_EQ(parse_chat_response(
                  R"({"choices":[{"message":{"content":[{"type":"text","text":"1. a"},{"type":"text","text":", 2. b"}]}}]})"),
              "1. a, 2. b");
}

TEST(Client, BackoffDoublesUpToCap) {
    VlmClient client(config(), std::make_shared<SlowTransport>(), SleepLog{}.sleeper());
    EXPECT_EQ(client.backoff_delay(1), 100ms);
    EXPECT_EQ(client.backoff_delay(2), 200ms);
    EXPECT_EQ(client.backoff_delay(4), 800ms);
    EXPECT_EQ(client.backoff_delay(5), 1000ms);
    EXPECT_EQ(client.backoff_delay(30), 1000ms);
}

TEST(Client, InFlightNeverExceedsCap) {
    VlmClient client(config(5, 3), std::make_shared<SlowTransport>());
    std::vector<PromptBundle> bundles(40, bundle());
    const auto out = submit_batch(client, bundles, 12);
    ASSERT_EQ(out.size(), 40u);
    for (const auto& o : out) ASSERT_TRUE(o.result.has_value()) << o.error;
    EXPECT_LE(client.peak_in_flight(), 3);
    EXPECT_GE(client.peak_in_flight(), 1);
}

TEST(Client, RequestShape) {
    auto t = std::make_shared<ScriptedTransport>(std::deque<HttpResponse>{{200, ok_body("x")}});
    ClientConfig c = config();
    c.api_key = "secret";
    VlmClient client(c, t, SleepLog{}.sleeper());
    client.submit(bundle(PromptMode::two_shot_icl));
    const auto req = nlohmann::json::parse(t->last_body);
    EXPECT_EQ(req["model"], "test-model");
    const auto& msgs = req["messages"];
    ASSERT_EQ(msgs.size(), 6u);  // system, 2 exemplar pairs, query
    EXPECT_EQ(msgs[0]["role"], "system");
    EXPECT_EQ(msgs[2]["role"], "assistant");
    EXPECT_EQ(msgs[5]["content"][1]["image_url"]["url"].get<std::string>().rfind("data:image/png;base64,", 0), 0u);
    bool auth = false;
    for (const auto& [k, v] : t->last_headers) auth |= k == "Authorization" && v == "Bearer secret";
    EXPECT_TRUE(auth);
}

TEST(Client, ConfigValidation) {
    ClientConfig c = config();
    c.endpoint.clear();
    EXPECT_THROW(c.validate(), ConfigError);
    const ClientConfig parsed = client_config_from_json(
        nlohmann::json{{"endpoint", "http://x/y"}, {"model", "m"}, {"max_in_flight", 2}, {"base_delay_ms", 7}});
    EXPECT_EQ(parsed.max_in_flight, 2);
    EXPECT_EQ(parsed.base_delay, 7ms);
    EXPECT_THROW(client_config_from_json(nlohmann::json{{"max_tokens", "many"}}), ConfigError);
    ClientConfig k = config();
    k.api_key_env = "SOMLIST_TEST_UNSET_VARIABLE";
    EXPECT_THROW(load_api_key(k), ConfigError);
}

TEST(Replay, ServesFixtureByHash) {
    testsupport::TempDir dir("replay");
    ReplayGenerator gen(dir.path());
    const PromptBundle b = bundle(PromptMode::improved_sysmsg);
    EXPECT_THROW(gen.submit(b), IoError);
    testsupport::spit(gen.fixture_path(b), "1. sky, 2. sea.");
    EXPECT_EQ(gen.submit(b).text, "1. sky, 2. sea.");
    EXPECT_THROW(ReplayGenerator(dir / "nope"), ConfigError);
}

TEST(Http, LocalServerRoundTrip) {
    httplib::Server server;
    std::atomic<int> hits{0};
    server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
        if (hits++ == 0) {
            res.status = 429;
            return;
        }
        const auto j = nlohmann::json::parse(req.body);
        res.set_content(ok_body("model=" + j["model"].get<std::string>()), "application/json");
    });
    const int port = server.bind_to_any_port("127.0.0.1");
    std::thread th([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    ClientConfig c = config();
    c.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions";
    c.timeout = 5s;
    VlmClient client(c, make_http_transport(), SleepLog{}.sleeper());
    const SubmitResult r = client.submit(bundle());
    EXPECT_EQ(r.text, "model=test-model");
    EXPECT_EQ(r.attempts, 2);

    server.stop();
    th.join();

    c.max_attempts = 2;
    VlmClient dead(c, make_http_transport(), SleepLog{}.sleeper());
    EXPECT_THROW(dead.submit(bundle()), TransportError);
}
