#include "persum/perspective.hpp"

#include "persum/error.hpp"
#include "persum/utf8.hpp"

namespace persum {

std::string_view to_string(Perspective p) {
    switch (p) {
        case Perspective::Cause: return "CAUSE";
        case Perspective::Suggestion: return "SUGGESTION";
        case Perspective::Experience: return "EXPERIENCE";
        case Perspective::Information: return "INFORMATION";
        case Perspective::Question: return "QUESTION";
    }
    return "UNKNOWN";
}

std::optional<Perspective> try_parse_perspective(std::string_view label) {
    const std::string upper = [&] {
        std::string s = utf8::trim(label);
        for (char& c : s) {
            if (c >= 'a' && c <= 'z') c = static_cast<char>(c - 'a' + 'A');
        }
        return s;
    }();
    for (Perspective p : kAllPerspectives) {
        if (upper == to_string(p)) return p;
    }
    return std::nullopt;
}

Perspective parse_perspective(std::string_view label) {
    if (auto p = try_parse_perspective(label)) return *p;
    throw ValidationError("unknown perspective label '" + std::string(label) + "'");
}

}  // namespace persum
