#include "persum/parsing.hpp"

#include <algorithm>

#include "json.hpp"
#include "persum/utf8.hpp"

namespace persum {

using nlohmann::json;

namespace {

struct RawItem {
    std::string text;
    std::string label;
};

bool is_quote(char32_t c, bool lenient) {
    if (c == U'"') return true;
    if (!lenient) return false;
    return c == 0x201C || c == 0x201D || c == 0x201E || c == 0x201F || c == 0x2033 || c == 0xFF02;
}

char32_t lower(char32_t c) { return (c >= U'A' && c <= U'Z') ? c - U'A' + U'a' : c; }

bool is_word(char32_t c) {
    return (c >= U'a' && c <= U'z') || (c >= U'A' && c <= U'Z') || (c >= U'0' && c <= U'9') ||
           c == U'_';
}

void skip_ws(std::u32string_view s, std::size_t& i) {
    while (i < s.size() && utf8::is_space(s[i])) ++i;
}

// Case-insensitive keyword match at i; advances past it.
bool match_word(std::u32string_view s, std::size_t& i, std::u32string_view word) {
    if (i + word.size() > s.size()) return false;
    for (std::size_t k = 0; k < word.size(); ++k) {
        if (lower(s[i + k]) != word[k]) return false;
    }
    i += word.size();
    return true;
}

// Matches `<ws>["]key["]<ws>:<ws>` at i (lenient key syntax), advancing past the colon.
bool match_key(std::u32string_view s, std::size_t& i, std::u32string_view key) {
    std::size_t j = i;
    skip_ws(s, j);
    const bool quoted = j < s.size() && is_quote(s[j], true);
    if (quoted) ++j;
    if (!match_word(s, j, key)) return false;
    if (j < s.size() && is_word(s[j])) return false;
    if (quoted) {
        if (j >= s.size() || !is_quote(s[j], true)) return false;
        ++j;
    }
    skip_ws(s, j);
    if (j >= s.size() || (s[j] != U':' && s[j] != U'=')) return false;
    ++j;
    skip_ws(s, j);
    i = j;
    return true;
}

// Label value after `label:`; quoted or a bare word run.
bool read_label(std::u32string_view s, std::size_t& i, std::u32string& label) {
    if (i < s.size() && is_quote(s[i], true)) {
        std::size_t j = i + 1;
        while (j < s.size() && !is_quote(s[j], true)) ++j;
        if (j >= s.size()) return false;
        label.assign(s.substr(i + 1, j - i - 1));
        i = j + 1;
        return true;
    }
    std::size_t j = i;
    while (j < s.size() && (is_word(s[j]) || s[j] == U'-')) ++j;
    if (j == i) return false;
    label.assign(s.substr(i, j - i));
    i = j;
    return true;
}

void scan_line_lenient(std::u32string_view line, std::vector<RawItem>& out) {
    std::size_t i = 0;
    while (i < line.size()) {
        // Find the `span` keyword at a word boundary.
        std::size_t k = i;
        bool found = false;
        while (k < line.size()) {
            if ((k == 0 || !is_word(line[k - 1])) && lower(line[k]) == U's') {
                std::size_t j = k;
                std::size_t key_start = k;
                if (key_start > 0 && is_quote(line[key_start - 1], true)) --key_start;
                j = key_start;
                if (match_key(line, j, U"span") && j < line.size() && is_quote(line[j], true)) {
                    k = j + 1;
                    found = true;
                    break;
                }
            }
            ++k;
        }
        if (!found) return;

        // Shortest span text whose closing quote is followed by `, label:`.
        const std::size_t text_start = k;
        bool closed = false;
        for (std::size_t q = text_start; q < line.size(); ++q) {
            if (!is_quote(line[q], true)) continue;
            std::size_t j = q + 1;
            skip_ws(line, j);
            if (j >= line.size() || line[j] != U',') continue;
            ++j;
            if (!match_key(line, j, U"label")) continue;
            std::u32string label;
            if (!read_label(line, j, label)) continue;
            out.push_back({utf8::encode(line.substr(text_start, q - text_start)), utf8::encode(label)});
            i = j;
            closed = true;
            break;
        }
        if (!closed) return;
    }
}

bool scan_line_strict(std::u32string_view line, RawItem& item) {
    static constexpr std::u32string_view kPrefix = U"span: \"";
    static constexpr std::u32string_view kMiddle = U"\", label: \"";
    if (line.size() < kPrefix.size() + kMiddle.size() + 1) return false;
    if (line.substr(0, kPrefix.size()) != kPrefix || line.back() != U'"') return false;
    const std::size_t mid = line.rfind(kMiddle);
    if (mid == std::u32string_view::npos || mid < kPrefix.size()) return false;
    const std::size_t label_start = mid + kMiddle.size();
    const std::u32string_view label = line.substr(label_start, line.size() - 1 - label_start);
    if (label.find(U'"') != std::u32string_view::npos) return false;
    item.text = utf8::encode(line.substr(kPrefix.size(), mid - kPrefix.size()));
    item.label = utf8::encode(label);
    return true;
}

std::size_t max_bracket_depth(std::string_view s) {
    std::size_t depth = 0;
    std::size_t max_depth = 0;
    for (char c : s) {
        if (c == '[' || c == '{') max_depth = std::max(max_depth, ++depth);
        if ((c == ']' || c == '}') && depth > 0) --depth;
    }
    return max_depth;
}

const json* find_key_ci(const json& obj, std::string_view key) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (utf8::to_lower_ascii(it.key()) == key) return &it.value();
    }
    return nullptr;
}

// Lenient handling of completions rendered as a JSON array of {span, label} objects.
bool scan_json_array(std::string_view raw, std::vector<RawItem>& out) {
    const auto open = raw.find('[');
    const auto close = raw.rfind(']');
    if (open == std::string_view::npos || close == std::string_view::npos || close <= open) return false;
    const std::string_view body = raw.substr(open, close - open + 1);
    if (max_bracket_depth(body) > 64) return false;
    const json doc = json::parse(body, nullptr, /*allow_exceptions=*/false);
    if (doc.is_discarded() || !doc.is_array()) return false;
    std::vector<RawItem> items;
    for (const json& el : doc) {
        if (!el.is_object()) continue;
        const json* text = find_key_ci(el, "span");
        if (!text) text = find_key_ci(el, "text");
        const json* label = find_key_ci(el, "label");
        if (!label) label = find_key_ci(el, "perspective");
        if (!text || !label || !text->is_string()) continue;
        if (label->is_string()) {
            items.push_back({text->get<std::string>(), label->get<std::string>()});
        } else if (label->is_array()) {
            for (const json& l : *label) {
                if (l.is_string()) items.push_back({text->get<std::string>(), l.get<std::string>()});
            }
        }
    }
    if (items.empty()) return false;
    out.insert(out.end(), items.begin(), items.end());
    return true;
}

std::vector<std::u32string> split_lines(std::u32string_view text) {
    std::vector<std::u32string> lines;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= text.size(); ++i) {
        if (i == text.size() || text[i] == U'\n') {
            std::u32string_view line = text.substr(start, i - start);
            if (!line.empty() && line.back() == U'\r') line.remove_suffix(1);
            lines.emplace_back(line);
            start = i + 1;
        }
    }
    return lines;
}

std::u32string_view trim32(std::u32string_view s) {
    while (!s.empty() && utf8::is_space(s.front())) s.remove_prefix(1);
    while (!s.empty() && utf8::is_space(s.back())) s.remove_suffix(1);
    return s;
}

// Splits a possibly multi-valued label ("CAUSE, SUGGESTION") in lenient mode.
std::vector<std::string> split_labels(const std::string& label, bool lenient) {
    if (!lenient) return {label};
    std::vector<std::string> parts;
    std::string cur;
    for (char c : label) {
        if (c == ',' || c == '/' || c == '|' || c == ';' || c == '&') {
            parts.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    parts.push_back(cur);
    return parts;
}

SpanParse convert(const std::vector<RawItem>& items, bool lenient) {
    SpanParse result;
    for (const RawItem& item : items) {
        std::string text = lenient ? utf8::trim(item.text) : item.text;
        if (utf8::trim(text).empty()) {
            result.warnings.push_back("skipped span with empty text");
            continue;
        }
        for (const std::string& label : split_labels(item.label, lenient)) {
            auto p = try_parse_perspective(label);
            if (!p) {
                result.warnings.push_back("skipped span with unknown label \"" + label + "\"");
                continue;
            }
            result.spans.push_back(LabeledSpan{text, *p, std::nullopt, std::nullopt, std::nullopt});
        }
    }
    return result;
}

std::u32string fold_quotes(std::u32string s) {
    for (char32_t& c : s) {
        if (c == 0x201C || c == 0x201D || c == 0x201E || c == 0x201F || c == 0x2033 || c == 0xFF02)
            c = U'"';
        else if (c == 0x2018 || c == 0x2019 || c == 0x201A || c == 0x201B || c == 0x2032)
            c = U'\'';
    }
    return s;
}

bool is_markup(char32_t c) {
    return c == U'*' || c == U'#' || c == U'-' || c == U'>' || c == U'_' || c == U'`' ||
           c == 0x2022 || c == 0x00B7 || c == 0x2013 || c == 0x2014 || c == U'+' || utf8::is_space(c);
}

// Removes bullets, numbering and markdown emphasis around a heading or label prefix.
std::u32string clean_prefix(std::u32string_view s) {
    std::u32string out;
    for (char32_t c : s) {
        if (c == U'*' || c == U'`' || c == U'#') continue;
        out.push_back(c);
    }
    std::u32string_view v = out;
    bool changed = true;
    while (changed) {
        changed = false;
        while (!v.empty() && is_markup(v.front())) {
            v.remove_prefix(1);
            changed = true;
        }
        std::size_t d = 0;
        while (d < v.size() && v[d] >= U'0' && v[d] <= U'9') ++d;
        if (d > 0 && d < v.size() && (v[d] == U'.' || v[d] == U')')) {
            v.remove_prefix(d + 1);
            changed = true;
        }
    }
    while (!v.empty() && (is_markup(v.back()) || v.back() == U':')) v.remove_suffix(1);
    return std::u32string(v);
}

bool is_open_quote(char32_t c) { return c == U'"' || c == 0x201C || c == 0x201E || c == U'\''; }
bool is_close_quote(char32_t c) { return c == U'"' || c == 0x201D || c == 0x201C || c == U'\''; }

std::string strip_outer_quotes(std::u32string_view s) {
    s = trim32(s);
    if (s.size() >= 2 && is_open_quote(s.front()) && is_close_quote(s.back()) &&
        (s.front() == U'\'') == (s.back() == U'\'')) {
        s = trim32(s.substr(1, s.size() - 2));
    }
    return utf8::encode(s);
}

}  // namespace

LabeledSpan to_labeled(const GoldSpan& g) {
    return LabeledSpan{g.text, g.label, g.answer_index, g.start, g.end};
}

SpanParse parse_spans(std::string_view raw, ParsePolicy policy) {
    const bool lenient = policy == ParsePolicy::Lenient;
    std::vector<RawItem> items;
    if (!(lenient && scan_json_array(raw, items))) {
        for (const std::u32string& line : split_lines(utf8::decode(raw))) {
            const std::u32string_view trimmed = trim32(line);
            if (trimmed.empty()) continue;
            if (lenient) {
                scan_line_lenient(trimmed, items);
            } else {
                RawItem item;
                if (scan_line_strict(trimmed, item)) items.push_back(std::move(item));
            }
        }
    }
    SpanParse result = convert(items, lenient);
    if (items.empty()) result.warnings.push_back("no parseable span lines in completion");
    return result;
}

std::vector<std::string> ground_spans(std::vector<LabeledSpan>& spans, const Thread& thread,
                                      bool normalize_quotes) {
    std::vector<std::u32string> answers;
    std::vector<std::u32string> folded;
    for (const auto& a : thread.answers) {
        answers.push_back(utf8::decode(a));
        if (normalize_quotes) folded.push_back(fold_quotes(answers.back()));
    }
    std::vector<std::string> warnings;
    for (LabeledSpan& s : spans) {
        if (s.grounded()) continue;
        const std::u32string needle = utf8::decode(s.text);
        bool done = false;
        for (std::size_t a = 0; a < answers.size() && !done; ++a) {
            if (auto pos = utf8::find(answers[a], needle)) {
                s.answer_index = a;
                s.start = *pos;
                s.end = *pos + needle.size();
                done = true;
            }
        }
        if (!done && normalize_quotes) {
            const std::u32string fneedle = fold_quotes(needle);
            for (std::size_t a = 0; a < folded.size() && !done; ++a) {
                if (auto pos = utf8::find(folded[a], fneedle)) {
                    s.answer_index = a;
                    s.start = *pos;
                    s.end = *pos + fneedle.size();
                    s.text = utf8::encode(std::u32string_view(answers[a]).substr(*pos, fneedle.size()));
                    done = true;
                }
            }
        }
        if (!done) {
            warnings.push_back("span not found in any answer of thread " + thread.id + ": \"" +
                               s.text + "\"");
        }
    }
    return warnings;
}

SpanParse parse_spans(std::string_view raw, const Thread& thread, ParsePolicy policy) {
    SpanParse result = parse_spans(raw, policy);
    const bool lenient = policy == ParsePolicy::Lenient;
    std::vector<std::string> w = ground_spans(result.spans, thread, lenient);
    if (!lenient) {
        std::erase_if(result.spans, [](const LabeledSpan& s) { return !s.grounded(); });
        for (auto& msg : w) msg = "dropped " + msg;
    }
    result.warnings.insert(result.warnings.end(), w.begin(), w.end());
    return result;
}

SummaryParse parse_summaries(std::string_view raw) {
    static constexpr std::u32string_view kSummary = U"summary";
    SummaryParse result;
    std::optional<Perspective> heading;
    for (const std::u32string& line : split_lines(utf8::decode(raw))) {
        const std::u32string_view s = trim32(line);
        if (s.empty()) continue;

        // Locate `summary` followed by a colon.
        std::optional<std::size_t> colon_after;
        std::size_t key_pos = 0;
        for (std::size_t k = 0; k + kSummary.size() <= s.size(); ++k) {
            std::size_t j = k;
            if ((k > 0 && is_word(s[k - 1])) || !match_word(s, j, kSummary)) continue;
            while (j < s.size() && (s[j] == U'*' || s[j] == U'_' || utf8::is_space(s[j]))) ++j;
            if (j < s.size() && s[j] == U':') {
                colon_after = j + 1;
                key_pos = k;
                break;
            }
        }

        if (colon_after) {
            const std::u32string prefix = clean_prefix(s.substr(0, key_pos));
            std::optional<Perspective> label;
            if (prefix.empty()) {
                label = heading;
                if (!label) {
                    result.warnings.push_back("summary line without a perspective heading");
                    continue;
                }
            } else {
                label = try_parse_perspective(utf8::encode(prefix));
                if (!label) continue;
            }
            heading.reset();
            std::u32string_view body = s.substr(*colon_after);
            while (!body.empty() && (body.front() == U'*' || body.front() == U'_')) body.remove_prefix(1);
            const std::string text = strip_outer_quotes(body);
            if (text.empty()) {
                result.warnings.push_back("empty " + std::string(to_string(*label)) + " summary skipped");
                continue;
            }
            if (result.summaries.count(*label)) {
                result.warnings.push_back("duplicate " + std::string(to_string(*label)) +
                                          " summary ignored; first occurrence kept");
                continue;
            }
            result.summaries.emplace(*label, text);
            continue;
        }

        if (auto p = try_parse_perspective(utf8::encode(clean_prefix(s)))) heading = *p;
    }
    if (result.summaries.empty()) result.warnings.push_back("no recognisable summaries in completion");
    return result;
}

namespace {

std::size_t output_rank(Perspective p) {
    for (std::size_t i = 0; i < kOutputOrder.size(); ++i) {
        if (kOutputOrder[i] == p) return i;
    }
    return kOutputOrder.size();
}

std::string one_line(std::string_view s) {
    std::string out(s);
    std::replace(out.begin(), out.end(), '\n', ' ');
    std::replace(out.begin(), out.end(), '\r', ' ');
    return out;
}

}  // namespace

std::string serialize_spans(std::span<const LabeledSpan> spans) {
    std::vector<const LabeledSpan*> order;
    for (const auto& s : spans) order.push_back(&s);
    std::stable_sort(order.begin(), order.end(), [](const LabeledSpan* a, const LabeledSpan* b) {
        return output_rank(a->label) < output_rank(b->label);
    });
    std::string out;
    for (const LabeledSpan* s : order) {
        out += "span: \"" + one_line(s->text) + "\", label: \"" + std::string(to_string(s->label)) + "\"\n";
    }
    return out;
}

std::string serialize_spans(std::span<const GoldSpan> spans) {
    std::vector<LabeledSpan> converted;
    for (const auto& g : spans) converted.push_back(to_labeled(g));
    return serialize_spans(std::span<const LabeledSpan>(converted));
}

std::string serialize_summaries(const PerspectiveSummaries& summaries) {
    std::string out;
    for (Perspective p : kOutputOrder) {
        auto it = summaries.find(p);
        if (it == summaries.end()) continue;
        out += std::string(to_string(p)) + " Summary: \"" + one_line(it->second) + "\"\n";
    }
    return out;
}

}  // namespace persum
