#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

namespace lnprobe {

using Vector = std::vector<double>;

enum class Pooling : std::uint8_t { cls, mean };

std::string_view to_string(Pooling p);
Pooling parse_pooling(std::string_view s);

// Half-open range of subword rows making up one surface word.
struct WordSpan {
    std::uint32_t start = 0;
    std::uint32_t end = 0;

    bool operator==(const WordSpan&) const = default;
};

// Per-token hidden states of one sentence, row-major, one row per subword.
struct TokenEmbeddingMatrix {
    std::string sentence_id;
    std::string language;
    std::size_t dim = 0;
    std::vector<float> values;
    std::vector<WordSpan> word_spans;
    bool leading_special = false;   // row 0 is a [cls]-like token
    bool trailing_special = false;  // last row is a separator token

    std::size_t n_tokens() const { return dim == 0 ? 0 : values.size() / dim; }

    std::span<const float> row(std::size_t i) const {
        return {values.data() + i * dim, dim};
    }

    // Rows that belong to surface words, i.e. everything except flagged special rows.
    std::size_t first_word_row() const { return leading_special ? 1 : 0; }
    std::size_t end_word_row() const { return n_tokens() - (trailing_special ? 1 : 0); }

    bool operator==(const TokenEmbeddingMatrix&) const = default;
};

struct SentenceVector {
    std::string sentence_id;
    std::string language;
    Pooling pooling = Pooling::mean;
    Vector vector;

    bool operator==(const SentenceVector&) const = default;
};

enum class RecordKind : std::uint8_t { token_matrices = 0, sentence_vectors = 1 };

// A dump: records in corpus line order, all of one kind and one dimension.
struct EmbeddingSet {
    std::string model_id;
    int layer = 0;
    std::size_t dim = 0;
    std::variant<std::vector<TokenEmbeddingMatrix>, std::vector<SentenceVector>> records;

    RecordKind kind() const {
        return records.index() == 0 ? RecordKind::token_matrices : RecordKind::sentence_vectors;
    }
    std::size_t size() const;

    // Typed access; throws ValidationError when the set holds the other kind.
    const std::vector<TokenEmbeddingMatrix>& tokens() const;
    std::vector<TokenEmbeddingMatrix>& tokens();
    const std::vector<SentenceVector>& sentences() const;
    std::vector<SentenceVector>& sentences();

    bool operator==(const EmbeddingSet&) const = default;
};

EmbeddingSet make_token_set(std::vector<TokenEmbeddingMatrix> records, std::size_t dim,
                            std::string model_id = {}, int layer = 0);
EmbeddingSet make_sentence_set(std::vector<SentenceVector> records, std::size_t dim,
                               std::string model_id = {}, int layer = 0);

// Invariant checks; throw ValidationError naming the offending record.
void validate(const TokenEmbeddingMatrix& m);
void validate(const SentenceVector& v, std::size_t dim);
void validate(const EmbeddingSet& set);

// Binary container ("MEMB", version 1, little-endian).
//
//   magic[4] | version u32 | kind u8 | dim u32 | record_count u64
//   per record:
//     id_len u16, id | lang_len u8, lang | flags u8
//     kind 0: n_tokens u32 | n_words u32 | n_words x (start u32, end u32) | n_tokens*dim f32
//     kind 1: dim f32
//
// flags: bit0 leading special token, bit1 trailing special token,
//        bit2 (kind 1 only) pooling is mean rather than cls.
//
// model_id and layer live in a JSON sidecar next to the dump (see sidecar_path).
inline constexpr char kMagic[4] = {'M', 'E', 'M', 'B'};
inline constexpr std::uint32_t kFormatVersion = 1;

EmbeddingSet read_dump(const std::filesystem::path& path);
void write_dump(const EmbeddingSet& set, const std::filesystem::path& path);

// Serialize to / parse from memory; write_dump and read_dump wrap these.
std::vector<std::uint8_t> encode_dump(const EmbeddingSet& set);
EmbeddingSet decode_dump(std::span<const std::uint8_t> bytes);

// JSON-lines variant for hand-written fixtures. The first line is a header
// object {"format":"MEMB-jsonl","version":1,"kind":..,"dim":..,"model_id":..,"layer":..};
// every further line is one record with the same fields as the binary layout.
EmbeddingSet read_jsonl(const std::filesystem::path& path);
void write_jsonl(const EmbeddingSet& set, const std::filesystem::path& path);

// Dispatches on extension: ".jsonl" reads the text variant, anything else the binary one.
EmbeddingSet load_set(const std::filesystem::path& path);

// Sidecar metadata: "<dump>.json". Readers treat a missing sidecar as empty.
std::filesystem::path sidecar_path(const std::filesystem::path& dump);
nlohmann::json read_sidecar(const std::filesystem::path& dump);
void write_sidecar(const std::filesystem::path& dump, const nlohmann::json& meta);

// Pooling. All arithmetic is done in double.
SentenceVector pool_mean(const TokenEmbeddingMatrix& m, bool skip_special = true);
SentenceVector pool_cls(const TokenEmbeddingMatrix& m);
std::vector<Vector> pool_words(const TokenEmbeddingMatrix& m);

}  // namespace lnprobe
