#include "sign/runlog_io.hpp"

#include <sstream>

#include <json.hpp>

#include "sign/errors.hpp"

namespace sign {

namespace {

using nlohmann::json;

json name_to_json(const DecodedName& name) {
    if (!name) return nullptr;
    return name->index;
}

DecodedName name_from_json(const json& j) {
    if (j.is_null()) return std::nullopt;
    return NameId{j.get<int>()};
}

json message_to_json(const RawMessage& msg) {
    return json{{"text", msg.text},
                {"tokens", msg.token_count},
                {"prompt_tokens", msg.prompt_tokens},
                {"source", to_string(msg.token_source)}};
}

RawMessage message_from_json(const json& j) {
    RawMessage msg;
    msg.text = j.at("text").get<std::string>();
    msg.token_count = j.at("tokens").get<int>();
    msg.prompt_tokens = j.at("prompt_tokens").get<int>();
    const std::string source = j.at("source").get<std::string>();
    if (source == "endpoint") {
        msg.token_source = TokenSource::endpoint;
    } else if (source == "endpoint_estimated") {
        msg.token_source = TokenSource::endpoint_estimated;
    } else {
        msg.token_source = TokenSource::whitespace;
    }
    return msg;
}

json stage_to_json(DecodeStage stage) { return to_string(stage); }

DecodeStage stage_from_json(const json& j) {
    const std::string s = j.get<std::string>();
    if (s == "schema_first_try") return DecodeStage::schema_first_try;
    if (s == "schema_retry") return DecodeStage::schema_retry;
    if (s == "free_text") return DecodeStage::free_text;
    if (s == "random_fallback") return DecodeStage::random_fallback;
    if (s == "none") return DecodeStage::none;
    throw ConfigError("runlog-parse", "unknown decode stage \"" + s + "\"");
}

json turn_to_json(const AgentTurn& turn) {
    json j{{"agent", turn.agent_id},
           {"message", message_to_json(turn.message)},
           {"retry", nullptr},
           {"outcome",
            json{{"name", name_to_json(turn.outcome.name)},
                 {"compliant", turn.outcome.compliant},
                 {"stage", stage_to_json(turn.outcome.stage)},
                 {"extra_tokens", turn.outcome.extra_tokens}}},
           {"adopted", turn.adopted}};
    if (turn.retry_message) {
        j["retry"] = message_to_json(*turn.retry_message);
    }
    return j;
}

AgentTurn turn_from_json(const json& j) {
    AgentTurn turn;
    turn.agent_id = j.at("agent").get<int>();
    turn.message = message_from_json(j.at("message"));
    if (!j.at("retry").is_null()) {
        turn.retry_message = message_from_json(j.at("retry"));
    }
    const json& outcome = j.at("outcome");
    turn.outcome.name = name_from_json(outcome.at("name"));
    turn.outcome.compliant = outcome.at("compliant").get<bool>();
    turn.outcome.stage = stage_from_json(outcome.at("stage"));
    turn.outcome.extra_tokens = outcome.at("extra_tokens").get<int>();
    turn.adopted = j.at("adopted").get<bool>();
    return turn;
}

} // namespace

std::string runlog_header_line(const GameConfig& cfg) {
    return json{{"type", "config"}, {"config", config_to_json(cfg)}}.dump();
}

std::string runlog_event_line(const RoundEvent& ev) {
    json pairs = json::array();
    for (const auto& pi : ev.pairs) {
        pairs.push_back(json{{"agents", json::array({pi.first.agent_id, pi.second.agent_id})},
                             {"mismatch", pi.mismatch},
                             {"turns", json::array({turn_to_json(pi.first),
                                                    turn_to_json(pi.second)})}});
    }
    return json{{"type", "round"},
                {"round", ev.round},
                {"pairs", pairs},
                {"tokens", ev.tokens_this_round},
                {"cumulative_tokens", ev.cumulative_tokens},
                {"agreement", json{{"pairwise", ev.agreement_pairwise},
                                   {"modal", ev.agreement_modal}}}}
        .dump();
}

std::string runlog_trailer_line(const RunLog& log) {
    json finals = json::array();
    for (const auto& s : log.final_states) {
        finals.push_back(json{{"agent", s.agent_id},
                              {"current_name", s.current_name},
                              {"last_emitted",
                               s.last_emitted ? json(*s.last_emitted) : json(nullptr)}});
    }
    return json{{"type", "final"},
                {"status", to_string(log.status)},
                {"abort_reason", log.abort_reason},
                {"rounds_completed", log.events.size()},
                {"total_tokens", log.total_tokens},
                {"final_states", finals}}
        .dump();
}

std::string runlog_to_string(const RunLog& log) {
    std::ostringstream out;
    out << runlog_header_line(log.config) << '\n';
    for (const auto& ev : log.events) {
        out << runlog_event_line(ev) << '\n';
    }
    out << runlog_trailer_line(log) << '\n';
    return out.str();
}

void write_runlog(const std::filesystem::path& path, const RunLog& log) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw ConfigError("runlog-unwritable", "cannot open " + path.string() + " for writing");
    }
    out << runlog_to_string(log);
}

RunLog read_runlog(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("runlog-unreadable", "cannot open runlog " + path.string());
    }

    RunLog log;
    log.status = RunStatus::aborted; // until a completed trailer says otherwise
    bool have_config = false;
    bool have_trailer = false;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw ConfigError("runlog-parse", path.string() + ":" + std::to_string(line_no) +
                                                  ": " + e.what());
        }
        try {
            const std::string type = j.at("type").get<std::string>();
            if (type == "config") {
                log.config = config_from_json(j.at("config"));
                have_config = true;
            } else if (type == "round") {
                RoundEvent ev;
                ev.round = j.at("round").get<int>();
                for (const auto& pj : j.at("pairs")) {
                    PairInteraction pi;
                    pi.first = turn_from_json(pj.at("turns").at(0));
                    pi.second = turn_from_json(pj.at("turns").at(1));
                    pi.mismatch = pj.at("mismatch").get<bool>();
                    ev.pairs.push_back(std::move(pi));
                }
                ev.tokens_this_round = j.at("tokens").get<int>();
                ev.cumulative_tokens = j.at("cumulative_tokens").get<long long>();
                ev.agreement_pairwise = j.at("agreement").at("pairwise").get<double>();
                ev.agreement_modal = j.at("agreement").at("modal").get<double>();
                log.events.push_back(std::move(ev));
            } else if (type == "final") {
                log.status = j.at("status").get<std::string>() == "completed"
                                 ? RunStatus::completed
                                 : RunStatus::aborted;
                log.abort_reason = j.at("abort_reason").get<std::string>();
                log.total_tokens = j.at("total_tokens").get<long long>();
                for (const auto& fj : j.at("final_states")) {
                    AgentSummary s;
                    s.agent_id = fj.at("agent").get<int>();
                    s.current_name = fj.at("current_name").get<int>();
                    if (!fj.at("last_emitted").is_null()) {
                        s.last_emitted = fj.at("last_emitted").get<int>();
                    }
                    log.final_states.push_back(s);
                }
                have_trailer = true;
            } else {
                throw ConfigError("runlog-parse", "unknown line type \"" + type + "\"");
            }
        } catch (const json::exception& e) {
            throw ConfigError("runlog-parse", path.string() + ":" + std::to_string(line_no) +
                                                  ": " + e.what());
        }
    }
    if (!have_config) {
        throw ConfigError("runlog-parse", path.string() + ": missing config header line");
    }
    if (!have_trailer) {
        log.abort_reason = "log file ends without a trailer line";
    }
    return log;
}

bool runlog_is_completed(const std::filesystem::path& path) {
    std::error_code ec;
    if (!std::filesystem::exists(path, ec) || ec) return false;
    try {
        RunLog log = read_runlog(path);
        return log.status == RunStatus::completed &&
               static_cast<int>(log.events.size()) == log.config.rounds;
    } catch (const ConfigError&) {
        return false;
    }
}

RunLogWriter::RunLogWriter(const std::filesystem::path& path, const GameConfig& cfg)
    : out_(path, std::ios::trunc) {
    if (!out_) {
        throw ConfigError("runlog-unwritable", "cannot open " + path.string() + " for writing");
    }
    out_ << runlog_header_line(cfg) << '\n';
    out_.flush();
}

void RunLogWriter::append(const RoundEvent& ev) {
    out_ << runlog_event_line(ev) << '\n';
    out_.flush();
}

void RunLogWriter::finish(const RunLog& log) {
    out_ << runlog_trailer_line(log) << '\n';
    out_.flush();
}

} // namespace sign
