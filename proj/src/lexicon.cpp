#include "sign/lexicon.hpp"

#include <stdexcept>

#include "sign/errors.hpp"

namespace sign {

Lexicon::Lexicon(int m) {
    if (m < 2) {
        throw ConfigError("lexicon-too-small",
                          "lexicon size must be at least 2, got " + std::to_string(m));
    }
    labels_.reserve(static_cast<std::size_t>(m));
    for (int k = 1; k <= m; ++k) {
        labels_.push_back("C" + std::to_string(k));
    }
}

const std::string& Lexicon::label(NameId id) const {
    if (!contains(id)) {
        throw std::out_of_range("name index " + std::to_string(id.index) +
                                " outside lexicon of size " + std::to_string(size()));
    }
    return labels_[static_cast<std::size_t>(id.index - 1)];
}

} // namespace sign
