#include "sign/codec.hpp"

namespace sign {

namespace {

constexpr std::string_view kTagHead = "@say {name:";

bool ascii_digit(char c) { return c >= '0' && c <= '9'; }

bool ascii_alnum(char c) {
    return ascii_digit(c) || (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z');
}

bool is_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

// Reads a canonical decimal index (no leading zeros beyond a lone "0")
// starting at `pos`. Returns digit count, or 0 if none/non-canonical.
// Values too large for the lexicon saturate instead of overflowing.
std::size_t read_index(std::string_view text, std::size_t pos, long long& value) {
    std::size_t n = 0;
    value = 0;
    while (pos + n < text.size() && ascii_digit(text[pos + n])) {
        if (value < 1'000'000'000) {
            value = value * 10 + (text[pos + n] - '0');
        }
        ++n;
    }
    if (n == 0) return 0;
    if (n > 1 && text[pos] == '0') return 0;
    return n;
}

} // namespace

std::string to_string(TokenSource s) {
    switch (s) {
    case TokenSource::whitespace: return "whitespace";
    case TokenSource::endpoint: return "endpoint";
    case TokenSource::endpoint_estimated: return "endpoint_estimated";
    }
    return "?";
}

std::string to_string(SchemaViolation v) {
    switch (v) {
    case SchemaViolation::no_tag: return "no_tag";
    case SchemaViolation::bad_payload: return "bad_payload";
    case SchemaViolation::index_out_of_range: return "index_out_of_range";
    }
    return "?";
}

std::string to_string(DecodeStage s) {
    switch (s) {
    case DecodeStage::schema_first_try: return "schema_first_try";
    case DecodeStage::schema_retry: return "schema_retry";
    case DecodeStage::free_text: return "free_text";
    case DecodeStage::random_fallback: return "random_fallback";
    case DecodeStage::none: return "none";
    }
    return "?";
}

int count_tokens(std::string_view text) {
    int count = 0;
    bool in_token = false;
    for (char c : text) {
        if (is_space(c)) {
            in_token = false;
        } else if (!in_token) {
            in_token = true;
            ++count;
        }
    }
    return count;
}

RawMessage format_schema(NameId name) {
    RawMessage msg;
    msg.text = "@say {name: C" + std::to_string(name.index) + "}";
    msg.token_count = count_tokens(msg.text);
    return msg;
}

SchemaParse parse_schema(const RawMessage& msg, const Lexicon& lexicon) {
    const std::string_view text = msg.text;
    bool saw_out_of_range = false;

    for (std::size_t pos = text.find(kTagHead); pos != std::string_view::npos;
         pos = text.find(kTagHead, pos + 1)) {
        std::size_t p = pos + kTagHead.size();
        if (p < text.size() && text[p] == ' ') ++p; // optional single space
        if (p >= text.size() || text[p] != 'C') continue;
        ++p;
        long long index = 0;
        std::size_t digits = read_index(text, p, index);
        if (digits == 0) continue;
        p += digits;
        if (p >= text.size() || text[p] != '}') continue;
        if (index >= 1 && index <= lexicon.size()) {
            return {NameId{static_cast<int>(index)}, SchemaViolation::no_tag};
        }
        saw_out_of_range = true;
    }

    SchemaParse out;
    if (saw_out_of_range) {
        out.violation = SchemaViolation::index_out_of_range;
    } else if (text.find("@say") != std::string_view::npos) {
        out.violation = SchemaViolation::bad_payload;
    } else {
        out.violation = SchemaViolation::no_tag;
    }
    return out;
}

DecodedName decode_free_text(const RawMessage& msg, const Lexicon& lexicon) {
    const std::string_view text = msg.text;
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (text[i] != 'C') continue;
        if (i > 0 && ascii_alnum(text[i - 1])) continue;
        long long index = 0;
        std::size_t digits = read_index(text, i + 1, index);
        if (digits == 0) continue;
        std::size_t end = i + 1 + digits;
        if (end < text.size() && ascii_alnum(text[end])) continue;
        if (index >= 1 && index <= lexicon.size()) {
            return NameId{static_cast<int>(index)};
        }
    }
    return std::nullopt;
}

DecodeOutcome enforce_schema(const RawMessage& first,
                             const std::function<RawMessage()>& retry_provider,
                             const Lexicon& lexicon,
                             FallbackMode fallback_mode,
                             RngStream& fallback_rng) {
    if (SchemaParse p = parse_schema(first, lexicon); p.ok()) {
        return {p.name, true, DecodeStage::schema_first_try, 0};
    }

    RawMessage retry = retry_provider();
    const int extra = retry.token_count;
    if (SchemaParse p = parse_schema(retry, lexicon); p.ok()) {
        return {p.name, true, DecodeStage::schema_retry, extra};
    }
    if (DecodedName name = decode_free_text(retry, lexicon)) {
        return {name, false, DecodeStage::free_text, extra};
    }
    if (fallback_mode == FallbackMode::random_name) {
        NameId pick{1 + static_cast<int>(
                            fallback_rng.uniform_index(static_cast<std::uint32_t>(lexicon.size())))};
        return {pick, false, DecodeStage::random_fallback, extra};
    }
    return {std::nullopt, false, DecodeStage::none, extra};
}

} // namespace sign
