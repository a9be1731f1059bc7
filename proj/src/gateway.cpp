#include "sign/gateway.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include <httplib.h>

#include "sign/errors.hpp"

namespace sign {

namespace {

using nlohmann::json;

std::string replace_all(std::string text, std::string_view key, std::string_view value) {
    std::size_t pos = 0;
    while ((pos = text.find(key, pos)) != std::string::npos) {
        text.replace(pos, key.size(), value);
        pos += value.size();
    }
    return text;
}

std::string render_memory(const AgentState& state, const Lexicon& lexicon) {
    if (state.memory.empty()) return "";
    std::ostringstream out;
    out << "Your last " << state.memory.size() << " interactions, oldest first:";
    for (const auto& rec : state.memory) {
        out << "\n- round " << rec.round << ": partner " << rec.partner_id;
        if (rec.partner_name) {
            out << " proposed " << lexicon.label(*rec.partner_name);
        } else {
            out << " proposed nothing decodable";
        }
    }
    return out.str();
}

std::string render_section(const std::string& body, const std::string& lexicon_line,
                           const std::string& memory_block, const std::string& reminder_text) {
    std::string text = replace_all(body, "{{lexicon}}", lexicon_line);
    text = replace_all(text, "{{memory}}", memory_block);
    text = replace_all(text, "{{schema_line}}", "@say {name: Ck}");
    text = replace_all(text, "{{reminder}}", reminder_text);
    return text;
}

// host[:port] part of the URL (handed to the HTTP client) and the path
// prefix in front of /chat/completions.
std::pair<std::string, std::string> split_base_url(const std::string& base_url) {
    std::size_t scheme_end = base_url.find("://");
    std::size_t host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
    std::size_t path_start = base_url.find('/', host_start);
    if (path_start == std::string::npos) {
        return {base_url, ""};
    }
    std::string origin = base_url.substr(0, path_start);
    std::string prefix = base_url.substr(path_start);
    while (!prefix.empty() && prefix.back() == '/') {
        prefix.pop_back();
    }
    return {origin, prefix};
}

} // namespace

PromptTemplate PromptTemplate::load(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) {
        throw ConfigError("template-missing", "cannot open prompt template " + file.string());
    }
    PromptTemplate tpl;
    std::string* section = nullptr;
    bool saw_system = false;
    bool saw_user = false;
    std::string line;
    while (std::getline(in, line)) {
        if (line == "[system]") {
            section = &tpl.system;
            saw_system = true;
            continue;
        }
        if (line == "[user]") {
            section = &tpl.user;
            saw_user = true;
            continue;
        }
        if (line == "[reminder]") {
            section = &tpl.reminder;
            continue;
        }
        if (!section) {
            if (line.empty()) continue;
            throw ConfigError("template-invalid",
                              "text before the first section header in " + file.string());
        }
        if (!section->empty()) *section += '\n';
        *section += line;
    }
    if (!saw_system || !saw_user) {
        throw ConfigError("template-invalid",
                          "template " + file.string() + " needs [system] and [user] sections");
    }
    return tpl;
}

std::filesystem::path template_path(const std::filesystem::path& dir, Condition condition) {
    switch (condition) {
    case Condition::NL: return dir / "nl.txt";
    case Condition::NL_SW: return dir / "nl_sw.txt";
    case Condition::SCHEMA: return dir / "schema.txt";
    }
    throw std::logic_error("unhandled condition");
}

std::vector<ChatMessage> build_prompt(const PromptTemplate& tpl, const AgentState& state,
                                      const Lexicon& lexicon, bool reminder) {
    std::string lexicon_line;
    for (const auto& label : lexicon.labels()) {
        if (!lexicon_line.empty()) lexicon_line += ", ";
        lexicon_line += label;
    }
    std::string memory_block = render_memory(state, lexicon);
    std::string reminder_text = reminder ? tpl.reminder : "";
    return {
        {"system", render_section(tpl.system, lexicon_line, memory_block, reminder_text)},
        {"user", render_section(tpl.user, lexicon_line, memory_block, reminder_text)},
    };
}

json build_request_body(const EndpointProfile& profile, const DecodingParams& params,
                        const std::vector<ChatMessage>& messages) {
    json msgs = json::array();
    for (const auto& m : messages) {
        msgs.push_back(json{{"role", m.role}, {"content", m.content}});
    }
    json body{{"model", profile.model_name},
              {"messages", msgs},
              {"max_tokens", params.max_new_tokens},
              {"temperature", params.temperature},
              {"top_p", params.top_p}};
    body[profile.repeat_penalty_field] = params.repeat_penalty;
    return body;
}

CompletionResult complete(const EndpointProfile& profile, const DecodingParams& params,
                          const std::vector<ChatMessage>& messages) {
    if (profile.base_url.empty()) {
        throw ConfigError("endpoint-base-url-empty", "endpoint base_url is empty");
    }
    auto [origin, prefix] = split_base_url(profile.base_url);
    const std::string path = prefix + "/chat/completions";
    const std::string body = build_request_body(profile, params, messages).dump();

    httplib::Client client(origin);
    const auto timeout =
        std::chrono::milliseconds(static_cast<long long>(profile.timeout_s * 1000.0));
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);

    httplib::Headers headers;
    if (!profile.api_key_env.empty()) {
        if (const char* key = std::getenv(profile.api_key_env.c_str()); key && *key) {
            headers.emplace("Authorization", std::string("Bearer ") + key);
        }
    }

    std::string last_error;
    for (int attempt = 0; attempt <= profile.max_transport_retries; ++attempt) {
        if (attempt > 0) {
            int delay_ms = profile.backoff_initial_ms << (attempt - 1);
            delay_ms = std::min(delay_ms, 5000);
            std::this_thread::sleep_for(std::chrono::milliseconds(delay_ms));
        }

        auto started = std::chrono::steady_clock::now();
        httplib::Result res = client.Post(path, headers, body, "application/json");
        if (!res) {
            last_error = httplib::to_string(res.error());
            continue;
        }
        if (res->status >= 500) {
            last_error = "HTTP " + std::to_string(res->status);
            continue;
        }
        if (res->status != 200) {
            throw EndpointError("endpoint " + profile.base_url + " returned HTTP " +
                                std::to_string(res->status));
        }

        json reply;
        try {
            reply = json::parse(res->body);
        } catch (const json::exception& e) {
            throw EndpointError("malformed response body from " + profile.base_url + ": " +
                                e.what());
        }
        if (!reply.contains("choices") || !reply["choices"].is_array() ||
            reply["choices"].empty() || !reply["choices"][0].contains("message") ||
            !reply["choices"][0]["message"].contains("content") ||
            !reply["choices"][0]["message"]["content"].is_string()) {
            throw EndpointError("response from " + profile.base_url +
                                " lacks choices[0].message.content");
        }

        CompletionResult out;
        out.text = reply["choices"][0]["message"]["content"].get<std::string>();
        out.latency_s =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        const auto usage = reply.find("usage");
        if (usage != reply.end() && usage->is_object() && usage->contains("completion_tokens") &&
            (*usage)["completion_tokens"].is_number()) {
            out.completion_tokens = (*usage)["completion_tokens"].get<int>();
            if (usage->contains("prompt_tokens") && (*usage)["prompt_tokens"].is_number()) {
                out.prompt_tokens = (*usage)["prompt_tokens"].get<int>();
            }
            out.usage_reported = true;
        } else {
            out.completion_tokens = count_tokens(out.text);
            out.prompt_tokens = 0;
            out.usage_reported = false;
        }
        return out;
    }
    throw EndpointError("transport failure reaching " + profile.base_url + " after " +
                        std::to_string(profile.max_transport_retries + 1) + " attempts (" +
                        last_error + ")");
}

RawMessage llm_propose(const EndpointProfile& profile, const DecodingParams& params,
                       const PromptTemplate& tpl, const AgentState& state, const Lexicon& lexicon,
                       bool reminder) {
    CompletionResult res = complete(profile, params, build_prompt(tpl, state, lexicon, reminder));
    RawMessage msg;
    msg.text = res.text;
    msg.token_count = res.completion_tokens;
    msg.prompt_tokens = res.prompt_tokens;
    msg.token_source = res.usage_reported ? TokenSource::endpoint : TokenSource::endpoint_estimated;
    return msg;
}

const PromptTemplate& LlmPolicy::template_for(Condition condition) {
    int key = static_cast<int>(condition);
    auto it = cache_.find(key);
    if (it == cache_.end()) {
        it = cache_.emplace(key, PromptTemplate::load(template_path(templates_dir_, condition)))
                 .first;
    }
    return it->second;
}

RawMessage LlmPolicy::propose(const AgentState& state, int /*round*/, Condition condition,
                              const Lexicon& lexicon, RngStream& /*rng*/) {
    return llm_propose(profile_, params_, template_for(condition), state, lexicon, false);
}

RawMessage LlmPolicy::retry_propose(const AgentState& state, int /*round*/, Condition condition,
                                    const Lexicon& lexicon, RngStream& /*rng*/) {
    return llm_propose(profile_, params_, template_for(condition), state, lexicon, true);
}

} // namespace sign
