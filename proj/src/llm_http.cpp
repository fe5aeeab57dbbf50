#include "tem/datagen.hpp"

#include <cstdlib>
#include <memory>
#include <string>

// httplib's transitive system includes leak macros that collide with Eigen
// identifiers, so it must come after every header that touches Eigen.
#include <httplib.h>
#include <json.hpp>

namespace tem {

namespace {

// POSTs {"prompt": ...} to the configured endpoint and returns the
// "completion" field of the JSON response. Any failure to obtain that field
// is a transport-level fault: retrying the same prompt is the only recovery.
class HttpLlmClient : public LlmClient {
public:
    HttpLlmClient(std::string endpoint, std::string api_key)
        : endpoint_(std::move(endpoint)), api_key_(std::move(api_key)) {
        if (endpoint_.rfind("https://", 0) == 0) {
            throw Error("https endpoints are not supported by this build; "
                        "point TEM_LLM_ENDPOINT at an http proxy");
        }
        if (endpoint_.rfind("http://", 0) != 0) {
            throw Error("TEM_LLM_ENDPOINT must start with http://, got \"" + endpoint_ + "\"");
        }
        std::string rest = endpoint_.substr(7);
        std::size_t slash = rest.find('/');
        base_ = "http://" + rest.substr(0, slash);
        path_ = slash == std::string::npos ? "/" : rest.substr(slash);
        if (base_ == "http://") {
            throw Error("TEM_LLM_ENDPOINT has no host: \"" + endpoint_ + "\"");
        }
    }

    std::string complete(const std::string& prompt) override {
        httplib::Client client(base_);
        client.set_connection_timeout(10, 0);
        client.set_read_timeout(120, 0);
        client.set_write_timeout(30, 0);
        httplib::Headers headers;
        if (!api_key_.empty()) {
            headers.emplace("Authorization", "Bearer " + api_key_);
        }
        nlohmann::json body;
        body["prompt"] = prompt;
        auto res = client.Post(path_, headers, body.dump(), "application/json");
        if (!res) {
            throw TransportError("no response from " + endpoint_ + ": " +
                                 httplib::to_string(res.error()));
        }
        if (res->status != 200) {
            throw TransportError("http status " + std::to_string(res->status) + " from " +
                                 endpoint_);
        }
        nlohmann::json reply = nlohmann::json::parse(res->body, nullptr, false);
        if (reply.is_discarded() || !reply.is_object() || !reply.contains("completion") ||
            !reply["completion"].is_string()) {
            throw TransportError("backend response is missing a \"completion\" string");
        }
        return reply["completion"].get<std::string>();
    }

private:
    std::string endpoint_;
    std::string api_key_;
    std::string base_;
    std::string path_;
};

}  // namespace

std::unique_ptr<LlmClient> make_http_client_from_env() {
    const char* endpoint = std::getenv("TEM_LLM_ENDPOINT");
    if (endpoint == nullptr || *endpoint == '\0') {
        throw Error("TEM_LLM_ENDPOINT is not set (llm generation needs a backend)");
    }
    const char* key = std::getenv("TEM_LLM_API_KEY");
    return std::make_unique<HttpLlmClient>(endpoint, key == nullptr ? "" : key);
}

}  // namespace tem
