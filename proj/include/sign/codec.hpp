#pragma once

#include <functional>
#include <string>
#include <string_view>

#include "sign/config.hpp"
#include "sign/lexicon.hpp"
#include "sign/rng.hpp"

namespace sign {

class RngStream;

// Where a message's token count came from. Mock messages are counted by
// whitespace splitting; LLM messages carry the endpoint-reported count, or
// a whitespace estimate when the endpoint omitted its usage block.
enum class TokenSource { whitespace, endpoint, endpoint_estimated };

std::string to_string(TokenSource s);

struct RawMessage {
    std::string text;
    int token_count = 0;
    int prompt_tokens = 0; // endpoint-reported; 0 for mock messages
    TokenSource token_source = TokenSource::whitespace;
};

enum class SchemaViolation { no_tag, bad_payload, index_out_of_range };

std::string to_string(SchemaViolation v);

struct SchemaParse {
    DecodedName name;               // set on success
    SchemaViolation violation = SchemaViolation::no_tag; // meaningful when !name

    bool ok() const { return name.has_value(); }
};

// Which rung of the enforcement ladder produced the decoded name.
enum class DecodeStage { schema_first_try, schema_retry, free_text, random_fallback, none };

std::string to_string(DecodeStage s);

struct DecodeOutcome {
    DecodedName name;
    bool compliant = false; // true iff stage is schema_first_try or schema_retry
    DecodeStage stage = DecodeStage::none;
    int extra_tokens = 0;   // tokens consumed by the retry generation, if any
};

// Whitespace-delimited token count. "" -> 0.
int count_tokens(std::string_view text);

// Renders exactly `@say {name: Ck}`.
RawMessage format_schema(NameId name);

// Accepts iff the text contains `@say {name: Ck}` (one space after @say,
// optional single space after name:) with k in 1..M; surrounding text is
// tolerated and the leftmost in-range tag wins. A syntactically valid tag
// whose index falls outside the lexicon reports index_out_of_range; a
// malformed tag attempt reports bad_payload; otherwise no_tag.
SchemaParse parse_schema(const RawMessage& msg, const Lexicon& lexicon);

// First standalone lexicon label in reading order (exact case, delimited
// by non-alphanumeric boundaries, so C1 never matches inside C12).
DecodedName decode_free_text(const RawMessage& msg, const Lexicon& lexicon);

// The compliance-enforcement ladder for the SCHEMA condition: parse the
// first message, retry once via `retry_provider`, fall back to free-text
// decoding of the retry, then to a uniform random name (or none). Every
// path yields a DecodeOutcome; retry_provider is invoked at most once.
DecodeOutcome enforce_schema(const RawMessage& first,
                             const std::function<RawMessage()>& retry_provider,
                             const Lexicon& lexicon,
                             FallbackMode fallback_mode,
                             RngStream& fallback_rng);

} // namespace sign
