#pragma once

#include <compare>
#include <optional>
#include <string>
#include <vector>

namespace sign {

// 1-based index of a name in the run's lexicon.
struct NameId {
    int index = 0;

    auto operator<=>(const NameId&) const = default;
};

// Result of decoding one message: a lexicon entry, or nothing decodable.
using DecodedName = std::optional<NameId>;

// The fixed ordered name set C1..CM.
class Lexicon {
public:
    // Throws ConfigError("lexicon-too-small") if m < 2.
    explicit Lexicon(int m);

    int size() const { return static_cast<int>(labels_.size()); }
    bool contains(NameId id) const { return id.index >= 1 && id.index <= size(); }
    const std::string& label(NameId id) const;
    const std::vector<std::string>& labels() const { return labels_; }

private:
    std::vector<std::string> labels_;
};

inline Lexicon make_lexicon(int m) { return Lexicon(m); }

} // namespace sign
