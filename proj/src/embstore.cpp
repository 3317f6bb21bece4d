#include "lnprobe/embstore.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>

#include <fmt/format.h>

#include "lnprobe/errors.hpp"

namespace lnprobe {

namespace {

constexpr std::uint8_t kFlagLeading = 1u << 0;
constexpr std::uint8_t kFlagTrailing = 1u << 1;
constexpr std::uint8_t kFlagMeanPooled = 1u << 2;

class ByteWriter {
public:
    void u8(std::uint8_t v) { out_.push_back(v); }
    void u16(std::uint16_t v) { le(v, 2); }
    void u32(std::uint32_t v) { le(v, 4); }
    void u64(std::uint64_t v) { le(v, 8); }
    void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
    void bytes(std::string_view s) { out_.insert(out_.end(), s.begin(), s.end()); }

    std::vector<std::uint8_t> take() { return std::move(out_); }

private:
    void le(std::uint64_t v, int n) {
        for (int i = 0; i < n; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }

    std::vector<std::uint8_t> out_;
};

class ByteReader {
public:
    explicit ByteReader(std::span<const std::uint8_t> in) : in_(in) {}

    std::uint8_t u8() { return static_cast<std::uint8_t>(le(1)); }
    std::uint16_t u16() { return static_cast<std::uint16_t>(le(2)); }
    std::uint32_t u32() { return static_cast<std::uint32_t>(le(4)); }
    std::uint64_t u64() { return le(8); }
    float f32() { return std::bit_cast<float>(u32()); }

    std::string str(std::size_t n) {
        need(n);
        std::string s(reinterpret_cast<const char*>(in_.data() + pos_), n);
        pos_ += n;
        return s;
    }

    std::size_t remaining() const { return in_.size() - pos_; }
    std::size_t position() const { return pos_; }

private:
    void need(std::size_t n) const {
        if (remaining() < n) {
            throw CorruptionError(
                fmt::format("container truncated at byte {} (needed {} more)", pos_, n));
        }
    }

    std::uint64_t le(int n) {
        need(static_cast<std::size_t>(n));
        std::uint64_t v = 0;
        for (int i = 0; i < n; ++i) v |= std::uint64_t{in_[pos_ + i]} << (8 * i);
        pos_ += static_cast<std::size_t>(n);
        return v;
    }

    std::span<const std::uint8_t> in_;
    std::size_t pos_ = 0;
};

std::vector<std::uint8_t> slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(fmt::format("cannot open {}", path.string()));
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    if (in.bad()) throw IoError(fmt::format("read failed: {}", path.string()));
    return bytes;
}

void spill(const std::filesystem::path& path, std::string_view data) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(fmt::format("cannot create {}", path.string()));
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!out) throw IoError(fmt::format("write failed: {}", path.string()));
}

std::uint8_t flags_of(const TokenEmbeddingMatrix& m) {
    return static_cast<std::uint8_t>((m.leading_special ? kFlagLeading : 0) |
                                     (m.trailing_special ? kFlagTrailing : 0));
}

std::uint8_t flags_of(const SentenceVector& v) {
    return v.pooling == Pooling::mean ? kFlagMeanPooled : 0;
}

void check_header_strings(const std::string& id, const std::string& lang) {
    if (id.size() > std::numeric_limits<std::uint16_t>::max()) {
        throw ValidationError(fmt::format("record id too long ({} bytes)", id.size()));
    }
    if (lang.size() > std::numeric_limits<std::uint8_t>::max()) {
        throw ValidationError(fmt::format("record {}: language code too long", id));
    }
}

Vector mean_of_rows(const TokenEmbeddingMatrix& m, std::size_t first, std::size_t last) {
    Vector acc(m.dim, 0.0);
    for (std::size_t r = first; r < last; ++r) {
        const auto row = m.row(r);
        for (std::size_t k = 0; k < m.dim; ++k) acc[k] += row[k];
    }
    const double n = static_cast<double>(last - first);
    for (auto& x : acc) x /= n;
    return acc;
}

}  // namespace

std::string_view to_string(Pooling p) { return p == Pooling::cls ? "cls" : "mean"; }

Pooling parse_pooling(std::string_view s) {
    if (s == "cls") return Pooling::cls;
    if (s == "mean") return Pooling::mean;
    throw ConfigError(fmt::format("unknown pooling '{}'", s));
}

std::size_t EmbeddingSet::size() const {
    return std::visit([](const auto& r) { return r.size(); }, records);
}

const std::vector<TokenEmbeddingMatrix>& EmbeddingSet::tokens() const {
    if (const auto* r = std::get_if<0>(&records)) return *r;
    throw ValidationError("expected token matrices, dump holds sentence vectors");
}

std::vector<TokenEmbeddingMatrix>& EmbeddingSet::tokens() {
    if (auto* r = std::get_if<0>(&records)) return *r;
    throw ValidationError("expected token matrices, dump holds sentence vectors");
}

const std::vector<SentenceVector>& EmbeddingSet::sentences() const {
    if (const auto* r = std::get_if<1>(&records)) return *r;
    throw ValidationError("expected sentence vectors, dump holds token matrices");
}

std::vector<SentenceVector>& EmbeddingSet::sentences() {
    if (auto* r = std::get_if<1>(&records)) return *r;
    throw ValidationError("expected sentence vectors, dump holds token matrices");
}

EmbeddingSet make_token_set(std::vector<TokenEmbeddingMatrix> records, std::size_t dim,
                            std::string model_id, int layer) {
    EmbeddingSet set;
    set.model_id = std::move(model_id);
    set.layer = layer;
    set.dim = dim;
    set.records = std::move(records);
    return set;
}

EmbeddingSet make_sentence_set(std::vector<SentenceVector> records, std::size_t dim,
                               std::string model_id, int layer) {
    EmbeddingSet set;
    set.model_id = std::move(model_id);
    set.layer = layer;
    set.dim = dim;
    set.records = std::move(records);
    return set;
}

void validate(const TokenEmbeddingMatrix& m) {
    const auto& id = m.sentence_id;
    if (m.dim == 0) throw ValidationError(fmt::format("record {}: dim is 0", id));
    if (m.values.size() % m.dim != 0) {
        throw ValidationError(
            fmt::format("record {}: {} values is not a multiple of dim {}", id, m.values.size(), m.dim));
    }
    const std::size_t n = m.n_tokens();
    if (n == 0) throw ValidationError(fmt::format("record {}: no tokens", id));
    const std::size_t specials = (m.leading_special ? 1 : 0) + (m.trailing_special ? 1 : 0);
    if (specials > n) {
        throw ValidationError(fmt::format("record {}: more special flags than tokens", id));
    }
    for (std::size_t i = 0; i < m.values.size(); ++i) {
        if (!std::isfinite(m.values[i])) {
            throw ValidationError(fmt::format("record {}: non-finite value at token {} component {}",
                                              id, i / m.dim, i % m.dim));
        }
    }
    if (m.word_spans.empty()) return;
    // Spans tile the word rows exactly: sorted, contiguous, non-empty.
    std::size_t expect = m.first_word_row();
    for (std::size_t w = 0; w < m.word_spans.size(); ++w) {
        const auto [s, e] = m.word_spans[w];
        if (s != expect || e <= s) {
            throw ValidationError(fmt::format(
                "record {}: word span {} = [{}, {}) does not continue the tiling at {}", id, w, s, e,
                expect));
        }
        expect = e;
    }
    if (expect != m.end_word_row()) {
        throw ValidationError(fmt::format("record {}: word spans end at {}, expected {}", id, expect,
                                          m.end_word_row()));
    }
}

void validate(const SentenceVector& v, std::size_t dim) {
    if (v.vector.size() != dim) {
        throw ValidationError(fmt::format("record {}: vector has {} components, set dim is {}",
                                          v.sentence_id, v.vector.size(), dim));
    }
    for (std::size_t k = 0; k < dim; ++k) {
        if (!std::isfinite(v.vector[k])) {
            throw ValidationError(
                fmt::format("record {}: non-finite value at component {}", v.sentence_id, k));
        }
    }
}

void validate(const EmbeddingSet& set) {
    if (set.dim == 0 && set.size() > 0) throw ValidationError("set dim is 0");
    if (set.dim > std::numeric_limits<std::uint32_t>::max()) throw ValidationError("dim too large");
    if (set.kind() == RecordKind::token_matrices) {
        for (const auto& m : set.tokens()) {
            if (m.dim != set.dim) {
                throw ValidationError(fmt::format("record {}: dim {} differs from set dim {}",
                                                  m.sentence_id, m.dim, set.dim));
            }
            check_header_strings(m.sentence_id, m.language);
            validate(m);
        }
    } else {
        for (const auto& v : set.sentences()) {
            check_header_strings(v.sentence_id, v.language);
            validate(v, set.dim);
        }
    }
}

std::vector<std::uint8_t> encode_dump(const EmbeddingSet& set) {
    validate(set);
    ByteWriter w;
    w.bytes(std::string_view(kMagic, 4));
    w.u32(kFormatVersion);
    w.u8(static_cast<std::uint8_t>(set.kind()));
    w.u32(static_cast<std::uint32_t>(set.dim));
    w.u64(set.size());
    if (set.kind() == RecordKind::token_matrices) {
        for (const auto& m : set.tokens()) {
            w.u16(static_cast<std::uint16_t>(m.sentence_id.size()));
            w.bytes(m.sentence_id);
            w.u8(static_cast<std::uint8_t>(m.language.size()));
            w.bytes(m.language);
            w.u8(flags_of(m));
            w.u32(static_cast<std::uint32_t>(m.n_tokens()));
            w.u32(static_cast<std::uint32_t>(m.word_spans.size()));
            for (const auto& span : m.word_spans) {
                w.u32(span.start);
                w.u32(span.end);
            }
            for (float x : m.values) w.f32(x);
        }
    } else {
        for (const auto& v : set.sentences()) {
            w.u16(static_cast<std::uint16_t>(v.sentence_id.size()));
            w.bytes(v.sentence_id);
            w.u8(static_cast<std::uint8_t>(v.language.size()));
            w.bytes(v.language);
            w.u8(flags_of(v));
            for (double x : v.vector) w.f32(static_cast<float>(x));
        }
    }
    return w.take();
}

EmbeddingSet decode_dump(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 4 || !std::equal(kMagic, kMagic + 4, bytes.begin())) {
        throw FormatError("not an embedding container (bad magic)");
    }
    ByteReader r(bytes.subspan(4));
    const auto version = r.u32();
    if (version != kFormatVersion) {
        throw FormatError(fmt::format("unsupported container version {}", version));
    }
    const auto kind = r.u8();
    if (kind > 1) throw FormatError(fmt::format("unknown record kind {}", kind));
    const std::size_t dim = r.u32();
    const std::uint64_t count = r.u64();

    EmbeddingSet set;
    set.dim = dim;
    if (kind == 0) {
        std::vector<TokenEmbeddingMatrix> records;
        for (std::uint64_t i = 0; i < count; ++i) {
            TokenEmbeddingMatrix m;
            m.sentence_id = r.str(r.u16());
            m.language = r.str(r.u8());
            const auto flags = r.u8();
            m.leading_special = flags & kFlagLeading;
            m.trailing_special = flags & kFlagTrailing;
            const std::size_t n_tokens = r.u32();
            const std::size_t n_words = r.u32();
            if (n_words * 8 > r.remaining()) {
                throw CorruptionError(fmt::format("record {}: span table overruns file", i));
            }
            m.word_spans.resize(n_words);
            for (auto& span : m.word_spans) {
                span.start = r.u32();
                span.end = r.u32();
            }
            if (dim != 0 && n_tokens > r.remaining() / (4 * dim)) {
                throw CorruptionError(fmt::format(
                    "record {} ({}): {} tokens x dim {} overruns file", i, m.sentence_id, n_tokens, dim));
            }
            m.dim = dim;
            m.values.resize(n_tokens * dim);
            for (auto& x : m.values) x = r.f32();
            records.push_back(std::move(m));
        }
        set.records = std::move(records);
    } else {
        std::vector<SentenceVector> records;
        for (std::uint64_t i = 0; i < count; ++i) {
            SentenceVector v;
            v.sentence_id = r.str(r.u16());
            v.language = r.str(r.u8());
            const auto flags = r.u8();
            v.pooling = (flags & kFlagMeanPooled) ? Pooling::mean : Pooling::cls;
            if (dim > r.remaining() / 4) {
                throw CorruptionError(fmt::format("record {} ({}): vector overruns file", i, v.sentence_id));
            }
            v.vector.resize(dim);
            for (auto& x : v.vector) x = r.f32();
            records.push_back(std::move(v));
        }
        set.records = std::move(records);
    }
    if (r.remaining() != 0) {
        throw CorruptionError(fmt::format("{} trailing bytes after {} records", r.remaining(), count));
    }
    validate(set);
    return set;
}

EmbeddingSet read_dump(const std::filesystem::path& path) {
    const auto bytes = slurp(path);
    EmbeddingSet set;
    try {
        set = decode_dump(bytes);
    } catch (const Error& e) {
        throw_error(e.kind(), fmt::format("{}: {}", path.string(), e.what()));
    }
    const auto meta = read_sidecar(path);
    set.model_id = meta.value("model_id", std::string{});
    set.layer = meta.value("layer", 0);
    return set;
}

void write_dump(const EmbeddingSet& set, const std::filesystem::path& path) {
    const auto bytes = encode_dump(set);
    spill(path, std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
    write_sidecar(path, {{"model_id", set.model_id}, {"layer", set.layer}});
}

std::filesystem::path sidecar_path(const std::filesystem::path& dump) {
    auto p = dump;
    p += ".json";
    return p;
}

nlohmann::json read_sidecar(const std::filesystem::path& dump) {
    const auto path = sidecar_path(dump);
    if (!std::filesystem::exists(path)) return nlohmann::json::object();
    std::ifstream in(path);
    if (!in) throw IoError(fmt::format("cannot open {}", path.string()));
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(fmt::format("{}: {}", path.string(), e.what()));
    }
}

void write_sidecar(const std::filesystem::path& dump, const nlohmann::json& meta) {
    spill(sidecar_path(dump), meta.dump(2) + "\n");
}

namespace {

nlohmann::json to_json(const TokenEmbeddingMatrix& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t t = 0; t < m.n_tokens(); ++t) {
        const auto row = m.row(t);
        rows.push_back(std::vector<float>(row.begin(), row.end()));
    }
    nlohmann::json spans = nlohmann::json::array();
    for (const auto& s : m.word_spans) spans.push_back({s.start, s.end});
    return {{"id", m.sentence_id}, {"lang", m.language},    {"flags", flags_of(m)},
            {"n_tokens", m.n_tokens()}, {"word_spans", spans}, {"values", rows}};
}

nlohmann::json to_json(const SentenceVector& v) {
    std::vector<float> values(v.vector.begin(), v.vector.end());
    return {{"id", v.sentence_id}, {"lang", v.language}, {"flags", flags_of(v)}, {"vector", values}};
}

template <typename T>
T field(const nlohmann::json& obj, const char* key, std::size_t line) {
    if (!obj.contains(key)) throw FormatError(fmt::format("line {}: missing field '{}'", line, key));
    try {
        return obj.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(fmt::format("line {}: field '{}': {}", line, key, e.what()));
    }
}

}  // namespace

void write_jsonl(const EmbeddingSet& set, const std::filesystem::path& path) {
    validate(set);
    std::string out = nlohmann::json{{"format", "MEMB-jsonl"},
                                     {"version", kFormatVersion},
                                     {"kind", static_cast<int>(set.kind())},
                                     {"dim", set.dim},
                                     {"model_id", set.model_id},
                                     {"layer", set.layer}}
                          .dump();
    out += '\n';
    std::visit(
        [&](const auto& records) {
            for (const auto& rec : records) {
                out += to_json(rec).dump();
                out += '\n';
            }
        },
        set.records);
    spill(path, out);
}

EmbeddingSet read_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError(fmt::format("cannot open {}", path.string()));
    std::string text;
    std::size_t line_no = 0;
    EmbeddingSet set;
    std::vector<TokenEmbeddingMatrix> matrices;
    std::vector<SentenceVector> vectors;
    int kind = -1;
    while (std::getline(in, text)) {
        ++line_no;
        if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json obj;
        try {
            obj = nlohmann::json::parse(text);
        } catch (const nlohmann::json::exception& e) {
            throw FormatError(fmt::format("{}:{}: {}", path.string(), line_no, e.what()));
        }
        if (kind < 0) {
            if (obj.value("format", std::string{}) != "MEMB-jsonl") {
                throw FormatError(fmt::format("{}: missing MEMB-jsonl header line", path.string()));
            }
            if (field<std::uint32_t>(obj, "version", line_no) != kFormatVersion) {
                throw FormatError(fmt::format("{}: unsupported version", path.string()));
            }
            kind = field<int>(obj, "kind", line_no);
            if (kind != 0 && kind != 1) throw FormatError(fmt::format("{}: unknown kind", path.string()));
            set.dim = field<std::size_t>(obj, "dim", line_no);
            set.model_id = obj.value("model_id", std::string{});
            set.layer = obj.value("layer", 0);
            continue;
        }
        const auto flags = field<std::uint8_t>(obj, "flags", line_no);
        if (kind == 0) {
            TokenEmbeddingMatrix m;
            m.sentence_id = field<std::string>(obj, "id", line_no);
            m.language = field<std::string>(obj, "lang", line_no);
            m.leading_special = flags & kFlagLeading;
            m.trailing_special = flags & kFlagTrailing;
            m.dim = set.dim;
            const auto rows = field<std::vector<std::vector<double>>>(obj, "values", line_no);
            const auto n_tokens = obj.value("n_tokens", rows.size());
            if (n_tokens != rows.size()) {
                throw CorruptionError(fmt::format("{}:{}: n_tokens {} but {} rows", path.string(),
                                                  line_no, n_tokens, rows.size()));
            }
            for (const auto& row : rows) {
                if (row.size() != set.dim) {
                    throw CorruptionError(fmt::format("{}:{}: row of length {} in a dim-{} set",
                                                      path.string(), line_no, row.size(), set.dim));
                }
                for (double x : row) m.values.push_back(static_cast<float>(x));
            }
            for (const auto& span :
                 obj.value("word_spans", std::vector<std::array<std::uint32_t, 2>>{})) {
                m.word_spans.push_back({span[0], span[1]});
            }
            matrices.push_back(std::move(m));
        } else {
            SentenceVector v;
            v.sentence_id = field<std::string>(obj, "id", line_no);
            v.language = field<std::string>(obj, "lang", line_no);
            v.pooling = (flags & kFlagMeanPooled) ? Pooling::mean : Pooling::cls;
            for (double x : field<std::vector<double>>(obj, "vector", line_no)) {
                v.vector.push_back(static_cast<float>(x));
            }
            if (v.vector.size() != set.dim) {
                throw CorruptionError(fmt::format("{}:{}: vector of length {} in a dim-{} set",
                                                  path.string(), line_no, v.vector.size(), set.dim));
            }
            vectors.push_back(std::move(v));
        }
    }
    if (kind < 0) throw FormatError(fmt::format("{}: empty file", path.string()));
    if (kind == 0) {
        set.records = std::move(matrices);
    } else {
        set.records = std::move(vectors);
    }
    validate(set);
    return set;
}

EmbeddingSet load_set(const std::filesystem::path& path) {
    if (path.extension() == ".jsonl") return read_jsonl(path);
    return read_dump(path);
}

SentenceVector pool_mean(const TokenEmbeddingMatrix& m, bool skip_special) {
    const std::size_t first = skip_special ? m.first_word_row() : 0;
    const std::size_t last = skip_special ? m.end_word_row() : m.n_tokens();
    if (m.dim == 0 || last <= first) {
        throw ValidationError(
            fmt::format("record {}: no token rows left to mean-pool", m.sentence_id));
    }
    return {m.sentence_id, m.language, Pooling::mean, mean_of_rows(m, first, last)};
}

SentenceVector pool_cls(const TokenEmbeddingMatrix& m) {
    if (!m.leading_special || m.n_tokens() == 0) {
        throw ValidationError(
            fmt::format("record {}: cls pooling needs a flagged leading special token", m.sentence_id));
    }
    const auto row = m.row(0);
    return {m.sentence_id, m.language, Pooling::cls, Vector(row.begin(), row.end())};
}

std::vector<Vector> pool_words(const TokenEmbeddingMatrix& m) {
    if (m.word_spans.empty()) {
        throw ValidationError(fmt::format("record {}: no word spans", m.sentence_id));
    }
    validate(m);
    std::vector<Vector> words;
    words.reserve(m.word_spans.size());
    for (const auto& span : m.word_spans) words.push_back(mean_of_rows(m, span.start, span.end));
    return words;
}

}  // namespace lnprobe
