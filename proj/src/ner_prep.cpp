#include "persum/ner_prep.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "persum/error.hpp"
#include "persum/utf8.hpp"

namespace persum {

namespace {

bool is_alnum(char32_t c) {
    if (c < 0x80) return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9');
    return !utf8::is_space(c);
}

}  // namespace

std::vector<TokenSpan> tokenize_with_offsets(std::string_view text) {
    const std::u32string cps = utf8::decode(text);
    std::vector<TokenSpan> out;
    std::size_t i = 0;
    while (i < cps.size()) {
        if (utf8::is_space(cps[i])) {
            ++i;
            continue;
        }
        std::size_t j = i + 1;
        if (is_alnum(cps[i])) {
            while (j < cps.size() && is_alnum(cps[j])) ++j;
        }
        out.push_back({utf8::encode(std::u32string_view(cps).substr(i, j - i)), i, j});
        i = j;
    }
    return out;
}

std::string to_string(const BioTag& tag) {
    switch (tag.kind) {
        case BioTag::Kind::O: return "O";
        case BioTag::Kind::B: return "B-" + std::string(to_string(tag.label));
        case BioTag::Kind::I: return "I-" + std::string(to_string(tag.label));
    }
    return "O";
}

BioTag parse_bio_tag(std::string_view s) {
    if (s == "O") return BioTag::outside();
    if (s.size() > 2 && s[1] == '-' && (s[0] == 'B' || s[0] == 'I')) {
        if (auto p = try_parse_perspective(s.substr(2))) {
            return s[0] == 'B' ? BioTag::begin(*p) : BioTag::inside(*p);
        }
    }
    throw ValidationError("invalid BIO tag: '" + std::string(s) + "'");
}

std::size_t tag_index(const BioTag& tag) {
    switch (tag.kind) {
        case BioTag::Kind::O: return 0;
        case BioTag::Kind::B: return 1 + index_of(tag.label);
        case BioTag::Kind::I: return 1 + kPerspectiveCount + index_of(tag.label);
    }
    return 0;
}

std::vector<BioTag> bio_align(std::span<const TokenSpan> tokens, std::span<const GoldSpan> spans,
                              std::size_t text_length) {
    std::vector<const GoldSpan*> order;
    for (const auto& s : spans) {
        if (s.start >= s.end || s.end > text_length) {
            std::ostringstream msg;
            msg << "span [" << s.start << ", " << s.end << ") outside text of length " << text_length;
            throw ValidationError(msg.str());
        }
        order.push_back(&s);
    }
    std::stable_sort(order.begin(), order.end(), [](const GoldSpan* a, const GoldSpan* b) {
        if (a->start != b->start) return a->start < b->start;
        return (a->end - a->start) > (b->end - b->start);
    });

    std::vector<BioTag> tags(tokens.size());
    std::vector<bool> claimed(tokens.size(), false);
    for (const GoldSpan* s : order) {
        bool first = true;
        for (std::size_t t = 0; t < tokens.size(); ++t) {
            if (claimed[t] || tokens[t].start < s->start || tokens[t].end > s->end) continue;
            tags[t] = first ? BioTag::begin(s->label) : BioTag::inside(s->label);
            claimed[t] = true;
            first = false;
        }
    }
    // An earlier span may interrupt a later one; restart the orphaned remainder.
    for (std::size_t t = 0; t < tags.size(); ++t) {
        if (tags[t].kind != BioTag::Kind::I) continue;
        const bool continues = t > 0 && tags[t - 1].kind != BioTag::Kind::O &&
                               tags[t - 1].label == tags[t].label;
        if (!continues) tags[t].kind = BioTag::Kind::B;
    }
    return tags;
}

bool is_bio_valid(std::span<const BioTag> tags) {
    for (std::size_t t = 0; t < tags.size(); ++t) {
        if (tags[t].kind != BioTag::Kind::I) continue;
        if (t == 0 || tags[t - 1].kind == BioTag::Kind::O || tags[t - 1].label != tags[t].label) return false;
    }
    return true;
}

std::vector<TaggedSegment> bio_decode(std::span<const BioTag> tags) {
    std::vector<TaggedSegment> out;
    bool open = false;
    for (std::size_t t = 0; t < tags.size(); ++t) {
        const BioTag& tag = tags[t];
        if (tag.kind == BioTag::Kind::O) {
            open = false;
            continue;
        }
        if (tag.kind == BioTag::Kind::I && open && out.back().label == tag.label) {
            out.back().last_token = t;
            continue;
        }
        out.push_back({tag.label, t, t});
        open = true;
    }
    return out;
}

double ClassWeights::at(const std::string& tag_class) const {
    auto it = weights.find(tag_class);
    if (it == weights.end()) throw ValidationError("no class weight for '" + tag_class + "'");
    return it->second;
}

ClassWeights class_weights(const std::map<std::string, std::size_t>& counts) {
    if (counts.empty()) throw ValidationError("class_weights: no classes");
    ClassWeights cw;
    for (const auto& [c, n] : counts) {
        if (n == 0) throw ValidationError("class_weights: class '" + c + "' has zero count");
        cw.total += n;
    }
    for (const auto& [c, n] : counts) {
        cw.weights[c] = static_cast<double>(cw.total) / static_cast<double>(n);
    }
    return cw;
}

double weighted_cross_entropy(const std::vector<std::vector<double>>& logits,
                              std::span<const std::size_t> labels, std::span<const double> weights) {
    if (logits.size() != labels.size()) {
        throw ValidationError("weighted_cross_entropy: " + std::to_string(logits.size()) +
                              " rows but " + std::to_string(labels.size()) + " labels");
    }
    if (logits.empty()) throw ValidationError("weighted_cross_entropy: no rows");
    const std::size_t classes = weights.size();
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        const auto& row = logits[i];
        if (row.size() != classes) {
            throw ValidationError("weighted_cross_entropy: row " + std::to_string(i) + " has " +
                                  std::to_string(row.size()) + " logits, expected " +
                                  std::to_string(classes));
        }
        if (labels[i] >= classes) {
            throw ValidationError("weighted_cross_entropy: label " + std::to_string(labels[i]) +
                                  " out of range in row " + std::to_string(i));
        }
        const double mx = *std::max_element(row.begin(), row.end());
        double z = 0.0;
        for (double v : row) z += std::exp(v - mx);
        const double log_prob = row[labels[i]] - mx - std::log(z);
        sum += weights[labels[i]] * -log_prob;
    }
    return sum / static_cast<double>(logits.size());
}

std::vector<BioSequence> bio_sequences(const std::vector<Thread>& threads) {
    std::vector<BioSequence> out;
    for (const auto& th : threads) {
        for (std::size_t a = 0; a < th.answers.size(); ++a) {
            BioSequence seq{th.id, a, tokenize_with_offsets(th.answers[a]), {}};
            std::vector<GoldSpan> spans;
            for (const auto& g : th.gold_spans) {
                if (g.answer_index == a) spans.push_back(g);
            }
            seq.tags = bio_align(seq.tokens, spans, utf8::length(th.answers[a]));
            out.push_back(std::move(seq));
        }
    }
    return out;
}

std::map<std::string, std::size_t> tag_counts(std::span<const BioSequence> sequences) {
    std::map<std::string, std::size_t> counts;
    for (const auto& s : sequences) {
        for (const auto& t : s.tags) ++counts[to_string(t)];
    }
    return counts;
}

std::string to_conll(std::span<const BioSequence> sequences) {
    std::ostringstream out;
    for (const auto& s : sequences) {
        for (std::size_t t = 0; t < s.tokens.size(); ++t) {
            out << s.tokens[t].text << '\t' << to_string(s.tags[t]) << '\n';
        }
        out << '\n';
    }
    return out.str();
}

}  // namespace persum
