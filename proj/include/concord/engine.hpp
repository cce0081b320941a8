// engine.hpp - incremental consistency checking on top of the store.
//
// Rule definitions (CRD) and rule evaluations (CRE) are themselves artifacts
// in the store: a CRD lives in the public area, a CRE lives in the work area
// whose view it judges ("home") and carries the verdict as an ordinary
// versioned property ("result" in hierarchy mode, "result@<group>" in group
// mode). The engine listens to change events, re-evaluates exactly the
// evaluations whose read scope the change actually alters, and collects
// feedback whenever a verdict appears or flips.
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <tuple>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "concord/rules.hpp"
#include "concord/store.hpp"

namespace concord {

class EngineError : public std::runtime_error {
public:
    explicit EngineError(const std::string& what) : std::runtime_error(what) {}
};

/// Where property reads are routed during evaluation: straight up the
/// hierarchy, or group-first (context, then group members, then ancestors).
enum class CheckMode : std::uint8_t { Hierarchy, Group };

/// Where resolved reads were satisfied, plus how many evaluations ran.
/// Absent reads are tracked in evaluation scopes, not counted here.
struct AccessTally {
    std::uint64_t contextAccesses = 0;
    std::uint64_t groupAccesses = 0;
    std::uint64_t publicAccesses = 0;  // hierarchy ancestors and the public root
    std::uint64_t ruleEvaluations = 0;

    AccessTally& operator+=(const AccessTally& o) {
        contextAccesses += o.contextAccesses;
        groupAccesses += o.groupAccesses;
        publicAccesses += o.publicAccesses;
        ruleEvaluations += o.ruleEvaluations;
        return *this;
    }
    bool operator==(const AccessTally&) const = default;
};

/// One verdict announcement: emitted when an evaluation first runs and on
/// every later change of its outcome, never in between.
struct Feedback {
    std::string crdId;
    ArtifactId subject;
    WorkAreaId home = 0;
    bool holds = true;

    bool operator==(const Feedback&) const = default;
};

/// A registered rule definition.
struct CrdInfo {
    std::string id;
    std::string typeName;
    ArtifactId typeArtifact;
    std::string ruleText;
    ArtifactId artifact;  // "crd:<id>" in the public area
    rules::RuleAst ast;
};

class Engine {
public:
    /// Mode fixes how every evaluation of this engine reads properties.
    /// Group mode needs an existing group; the engine re-reads the group's
    /// member set on every use, so later redefinition is picked up.
    Engine(Store& store, CheckMode mode, std::string groupName = {});
    ~Engine();

    Engine(const Engine&) = delete;
    Engine& operator=(const Engine&) = delete;

    CheckMode mode() const { return mode_; }
    const std::string& group_name() const { return groupName_; }

    /// Registers a rule for every artifact of the named type, materializes it
    /// as a public CRD artifact and instantiates evaluations for all matching
    /// artifacts that already exist. Re-registering identically is a no-op.
    const CrdInfo& register_crd(const std::string& id, const std::string& typeName,
                                const std::string& ruleText);

    /// Registers rules from catalog text: one `RULE <id> ON <typeName>: <rule>`
    /// per line; blank lines and lines starting with '#' are skipped.
    void register_catalog(const std::string& catalogText);

    const CrdInfo* find_crd(const std::string& id) const;
    std::vector<const CrdInfo*> crds() const;

    /// Rebuilds rule definitions and evaluation records from a store that
    /// already contains them (after Store::load). Verdicts are taken from the
    /// stored result properties; read scopes are re-derived quietly (no
    /// tallies, no writes, no feedback).
    void attach();

    /// Re-evaluates every evaluation homed in the work area.
    void check_all(WorkAreaId home);

    struct EvaluationRow {
        std::string crdId;
        ArtifactId subject;
        WorkAreaId home = 0;
        std::optional<bool> holds;  // empty until first evaluated
    };
    /// All known evaluations ordered by (subject, rule, home), optionally
    /// restricted to one home work area.
    std::vector<EvaluationRow> evaluations(std::optional<WorkAreaId> home = {}) const;

    std::optional<bool> verdict(const ArtifactId& subject, const std::string& crdId,
                                WorkAreaId home) const;

    /// Re-resolves every coordinate in one evaluation's recorded scope and
    /// reports where the reads were satisfied (ruleEvaluations stays 0).
    AccessTally gather(const ArtifactId& subject, const std::string& crdId,
                       WorkAreaId home) const;

    const AccessTally& tally() const { return tally_; }
    void reset_tally() { tally_ = {}; }

    /// Returns the feedback collected since the last call and clears it.
    std::vector<Feedback> take_feedback();

    /// Messages from evaluations that could not run (rule type errors).
    const std::vector<std::string>& diagnostics() const { return diagnostics_; }

private:
    // (subject, crdId, home)
    using RegKey = std::tuple<ArtifactId, std::string, WorkAreaId>;

    struct CreState {
        ArtifactId artifact;  // "cre:<crdId>:<subject>"
        rules::Scope scope;
        std::optional<bool> verdict;
    };

    void ensure_builtin_types();
    Located locate(WorkAreaId home, const ArtifactId& artifact, const std::string& property) const;
    const Group& current_group() const;
    void on_change(const ChangeEvent& ev);
    void sync_cres_for(const ArtifactId& subject, WorkAreaId eventArea);
    void instantiate_cre(const std::string& crdId, const ArtifactId& subject, WorkAreaId home);
    void retire_cre(const RegKey& key);
    void reevaluate(const RegKey& key);
    void apply_scope(const RegKey& key, CreState& st, rules::Scope next);
    std::optional<ArtifactId> linked_type_artifact(WorkAreaId home, const ArtifactId& artifact) const;

    Store& store_;
    CheckMode mode_;
    std::string groupName_;
    std::string resultProperty_;  // "result" or "result@<group>"
    SubscriptionId subscription_ = 0;

    std::map<std::string, CrdInfo> crdsById_;
    std::map<ArtifactId, std::vector<std::string>> crdsByType_;  // type artifact -> crd ids
    std::unordered_map<ArtifactId, std::string> crdIdByArtifact_;
    std::unordered_set<ArtifactId> crdArtifacts_;
    std::unordered_set<ArtifactId> creArtifacts_;

    std::map<RegKey, CreState> registry_;
    std::unordered_map<Coord, std::set<RegKey>, CoordHash> scopeIndex_;

    AccessTally tally_;
    std::vector<Feedback> feedback_;
    std::vector<std::string> diagnostics_;
};

}  // namespace concord
