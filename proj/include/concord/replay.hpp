#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "concord/engine.hpp"

namespace concord::replay {

/// Raised for malformed corpus text, impossible generator targets and
/// inconsistent replay options.
class CorpusError : public std::runtime_error {
public:
    explicit CorpusError(const std::string& what) : std::runtime_error(what) {}
};

/// One field of a corpus type: `name:kind` or `name:kind:many`.
struct FieldSpec {
    std::string name;
    ValueKind kind = ValueKind::String;
    bool many = false;

    bool operator==(const FieldSpec&) const = default;
};

struct TypeSpec {
    std::string name;
    std::vector<FieldSpec> fields;

    bool operator==(const TypeSpec&) const = default;
};

/// One property entry as written in an ELEM line. Scalar entries carry one
/// item; link entries carry the targets listed after `->`. Entries for a
/// multi-valued field accumulate across the element's entry list.
struct Entry {
    std::string field;
    Value value;

    bool operator==(const Entry&) const = default;
};

struct Element {
    std::string id;
    std::string type;
    std::string partition;
    std::vector<Entry> entries;

    bool operator==(const Element&) const = default;
};

/// A model-editing session: type declarations plus elements with their
/// property entries, each element assigned to a partition work area.
struct Corpus {
    std::vector<TypeSpec> types;
    std::vector<Element> elements;
    /// Loader notes (dropped dangling links); not part of the model.
    std::vector<std::string> diagnostics;

    bool operator==(const Corpus& other) const {
        return types == other.types && elements == other.elements;
    }
};

/// What to do with a link entry whose target id is not in the corpus.
enum class DanglingLinks : std::uint8_t {
    Reject,  // fail with an error naming the id
    Drop,    // remove the target and record a diagnostic
};

/// Reads the line-oriented corpus format:
///   TYPE <name> { <field>:<kind>[:many] ... }
///   ELEM <id> <type> partition=<label> { <field>=<value> <field>-><id>[,<id>...] ... }
/// Scalar values follow the declared kind; strings are double-quoted with
/// \" \\ \n \t \r escapes. Full-line comments start with '#'. Links may
/// point forward; targets are resolved after the whole file is read.
Corpus parse_corpus(std::istream& in, DanglingLinks policy = DanglingLinks::Reject);
Corpus parse_corpus_file(const std::string& path, DanglingLinks policy = DanglingLinks::Reject);

/// Writes the canonical form; parsing it back yields an equal corpus and
/// re-saving yields byte-identical text.
void save_corpus(const Corpus& corpus, std::ostream& out);

/// One replayable store command: a property write in a partition work area.
struct Command {
    std::string partition;
    ArtifactId artifact;
    std::string property;
    Value value;
    bool creation = false;  // the element-creating "type" write

    bool operator==(const Command&) const = default;
};

/// Derives the command stream: every element's creation first (corpus
/// order), then one update per entry (corpus order), where entries of a
/// multi-valued field carry the values accumulated so far.
std::vector<Command> to_commands(const Corpus& corpus);

/// Deterministic corpus generator over the bundled UML-flavoured types.
struct GenSpec {
    std::uint64_t seed = 1;
    std::size_t elements = 88;
    std::size_t partitions = 4;
    /// Probability that a link picks its target from another partition;
    /// 0 keeps every reference inside its own partition.
    double linkDensity = 0.25;
    /// If set, pad with `tags` entries until updates hit this number exactly;
    /// an error if the lean corpus already exceeds it.
    std::optional<std::size_t> targetUpdates;
};
Corpus generate_corpus(const GenSpec& spec);

struct ReplayMetrics {
    std::size_t modelElements = 0;
    std::size_t totalCommands = 0;
    std::size_t creationCommands = 0;
    std::size_t updateCommands = 0;
    std::uint64_t ruleEvaluations = 0;
    std::uint64_t contextAccesses = 0;
    std::uint64_t groupAccesses = 0;
    std::uint64_t publicAccesses = 0;
    double contextPct = 0.0;  // context share of context+group accesses
    double groupPct = 0.0;    // group share of context+group accesses
    double evalTimeMs = 0.0;

    bool operator==(const ReplayMetrics&) const = default;
};

struct ReplayOptions {
    CheckMode mode = CheckMode::Group;
    /// Rule catalog text; unset means the bundled uml catalog. An explicit
    /// empty string runs the replay with no rules at all.
    std::optional<std::string> catalog;
    std::vector<std::string> groupLabels;  // empty: every partition
};

/// Replays the corpus against a fresh store with an attached engine and
/// reports the access tally alongside the command counts.
ReplayMetrics run_replay(const Corpus& corpus, const ReplayOptions& opts = {});

/// One CSV header line plus one row. Percentages use two decimals; the wall
/// time column is optional so reports can be compared byte for byte.
std::string metrics_csv(const ReplayMetrics& m, bool includeWallTime);

enum class ReportFormat : std::uint8_t { Table, Csv };

/// Renders one header plus one line per metrics row: a fixed-width table
/// for terminals or unpadded CSV. Column order follows the evaluation
/// summary: elements, commands, creations, updates, evaluations, context,
/// group, the two percentage columns, public accesses, optional wall time.
std::string report(const std::vector<ReplayMetrics>& rows, ReportFormat format,
                   bool includeWallTime = false);

}  // namespace concord::replay
