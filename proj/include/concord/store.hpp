// store.hpp - event-sourced artifact storage organized as a hierarchy of
// work areas, with hierarchical and group-first property resolution.
#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "concord/value.hpp"

namespace concord {

using Tick = std::uint64_t;
using WorkAreaId = std::uint32_t;

/// The public root work area always has id 0.
inline constexpr WorkAreaId kPublicWorkArea = 0;

enum class ChangeType : std::uint8_t { Create, Update, Delete };
enum class Visibility : std::uint8_t { Private, Public };

/// Where a resolved value was found relative to the querying work area.
enum class Origin : std::uint8_t { Context, Group, HierarchyAncestor, Public, Absent };

const char* origin_name(Origin o);
const char* change_type_name(ChangeType t);

class StoreError : public std::runtime_error {
public:
    explicit StoreError(const std::string& what) : std::runtime_error(what) {}
};

struct FieldDecl {
    std::string name;
    ValueKind kind = ValueKind::String;
    bool many = false;

    bool operator==(const FieldDecl&) const = default;
};

struct TypeDecl {
    ArtifactId typeId;  // id of the type artifact materialized in public
    std::string name;
    std::vector<FieldDecl> fields;

    const FieldDecl* find_field(const std::string& fieldName) const;
};

/// One timestamped mutation of one named property in one work area.
/// A missing value is a tombstone (the Delete change type).
struct Change {
    ArtifactId artifact;
    std::string property;
    std::optional<Value> value;
    ChangeType type = ChangeType::Update;
    Tick timestamp = 0;
    WorkAreaId workArea = 0;

    bool tombstone() const { return !value.has_value(); }
};

struct ChangeEvent {
    Change change;
    std::uint64_t sequence = 0;
};

struct ResolvedValue {
    std::optional<Value> value;
    Origin origin = Origin::Absent;
    std::optional<WorkAreaId> sourceWorkArea;
    std::optional<Tick> sourceTimestamp;

    bool absent() const { return origin == Origin::Absent; }
};

/// Result of a raw search: the deciding change (which may be a tombstone)
/// and where in the search order it was found. Used by the engine to decide
/// whether a fresh change actually alters a work area's view.
/// The pointer is valid only until the next store mutation.
struct Located {
    const Change* change = nullptr;  // null when nothing was found anywhere
    Origin origin = Origin::Absent;
};

struct Group {
    std::string name;
    std::set<WorkAreaId> members;
};

using Coord = std::pair<ArtifactId, std::string>;

struct CoordHash {
    std::size_t operator()(const Coord& c) const {
        std::size_t h = std::hash<std::string>{}(c.first);
        return h ^ (std::hash<std::string>{}(c.second) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2));
    }
};

/// A node in the storage hierarchy. Private work areas keep a single latest
/// change per property; the public root keeps the full ordered history.
class WorkArea {
public:
    using ChangeLog = std::vector<Change>;  // size 1 in private areas
    using ChangeMap = std::unordered_map<Coord, ChangeLog, CoordHash>;

    WorkAreaId id() const { return id_; }
    std::optional<WorkAreaId> parent() const { return parent_; }
    Visibility visibility() const { return visibility_; }
    Tick created_at() const { return createdAt_; }
    const std::string& label() const { return label_; }
    const ChangeMap& changes() const { return changes_; }

    /// Latest change for a coordinate stored directly in this area, or null.
    const Change* latest(const Coord& c) const;

    /// Full history for a coordinate (public area keeps more than one entry).
    const ChangeLog* history(const Coord& c) const;

private:
    friend class Store;
    WorkAreaId id_ = 0;
    std::optional<WorkAreaId> parent_;
    Visibility visibility_ = Visibility::Private;
    Tick createdAt_ = 0;
    std::string label_;
    ChangeMap changes_;
};

using SubscriptionId = std::uint64_t;
using Subscriber = std::function<void(const ChangeEvent&)>;

/// Single-writer store. All mutations are serialized; change events are
/// delivered synchronously in total order. Subscribers may apply follow-up
/// changes from inside a callback: the mutation happens immediately, its
/// event is queued behind the one being dispatched.
class Store {
public:
    Store();

    // --- type declarations -------------------------------------------------
    /// Declares a type and materializes it as an artifact in the public work
    /// area (property "name"), so rules can navigate `self.type.name`.
    const TypeDecl& declare_type(const std::string& name, std::vector<FieldDecl> fields);
    const TypeDecl* find_type(const std::string& name) const;
    const TypeDecl* find_type_by_artifact(const ArtifactId& typeArtifact) const;
    std::vector<const TypeDecl*> types() const;

    // --- work areas and groups ----------------------------------------------
    WorkAreaId create_work_area(WorkAreaId parent, std::string label = {});
    const WorkArea& work_area(WorkAreaId id) const;
    std::size_t work_area_count() const { return areas_.size(); }
    std::optional<WorkAreaId> find_work_area(const std::string& label) const;

    const Group& define_group(const std::string& name, const std::set<WorkAreaId>& members);
    const Group* find_group(const std::string& name) const;

    // --- changes -----------------------------------------------------------
    /// Records one change. Overwrites the previous entry in a private area,
    /// appends to the history in the public area. Emits one ChangeEvent.
    ChangeEvent apply_change(WorkAreaId wa, const ArtifactId& artifact,
                             const std::string& property, std::optional<Value> value,
                             ChangeType type);

    /// Create-or-update convenience: picks Create when the property has no
    /// live change in the work area, Update otherwise.
    ChangeEvent set_property(WorkAreaId wa, const ArtifactId& artifact,
                             const std::string& property, Value value);

    // --- resolution ----------------------------------------------------------
    /// Walks self -> parent -> ... -> public and returns the first live
    /// change; a tombstone found first yields an absent result.
    ResolvedValue resolve_property(WorkAreaId wa, const ArtifactId& artifact,
                                   const std::string& property) const;

    /// Search order: (1) context area, (2) group members (context excluded;
    /// latest timestamp wins on overlap), (3) ancestors of the context up to
    /// the public root.
    ResolvedValue resolve_property_grouped(WorkAreaId context, const Group& group,
                                           const ArtifactId& artifact,
                                           const std::string& property) const;

    /// Raw variants exposing the deciding change, tombstones included.
    Located locate_property(WorkAreaId wa, const ArtifactId& artifact,
                            const std::string& property) const;
    Located locate_property_grouped(WorkAreaId context, const Group& group,
                                    const ArtifactId& artifact,
                                    const std::string& property) const;

    /// Every property name ever written for the artifact across the
    /// applicable search order, resolved; deleted properties omitted.
    /// Errors when the artifact is unknown everywhere reachable.
    std::map<std::string, ResolvedValue> materialize_artifact(WorkAreaId context,
                                                              const Group* group,
                                                              const ArtifactId& artifact) const;

    /// The artifact's declared type as seen from a work area, or null.
    const TypeDecl* artifact_type(WorkAreaId wa, const ArtifactId& artifact) const;

    /// Artifacts whose live "type" property in the public area links to the
    /// given type artifact.
    std::vector<ArtifactId> public_artifacts_of_type(const ArtifactId& typeArtifact) const;

    // --- commits -----------------------------------------------------------
    /// Re-stamps every change of a private area with fresh ticks and applies
    /// it to the parent (ordered by artifact then property); empties the
    /// source area.
    std::vector<ChangeEvent> commit(WorkAreaId wa);

    /// Stages all member changes (overlaps resolved by latest timestamp) and
    /// applies them to the public area as one atomic bulk: state is fully
    /// updated before the first event is delivered. Members are emptied.
    std::vector<ChangeEvent> commit_group(const Group& group);

    // --- events -------------------------------------------------------------
    SubscriptionId subscribe(Subscriber fn);
    void unsubscribe(SubscriptionId id);

    // --- persistence ---------------------------------------------------------
    /// Line-delimited log: work areas, groups, type declarations, change
    /// records (sequence, tick, workAreaId, artifactId, property, changeType,
    /// kind, value) and commit markers. Loading reconstructs the exact state.
    void save(std::ostream& out) const;
    static Store load(std::istream& in);

    std::size_t journal_size() const { return journal_.size(); }
    const std::string& journal_entry(std::size_t i) const { return journal_[i]; }

    Tick current_tick() const { return nextTick_ - 1; }

private:
    WorkArea& area(WorkAreaId id);
    const WorkArea& area_checked(WorkAreaId id, const char* op) const;
    void validate_value(WorkAreaId wa, const ArtifactId& artifact, const std::string& property,
                        const std::optional<Value>& value, ChangeType type) const;
    Change& place_change(Change c);
    ChangeEvent record_and_dispatch(Change c);
    void dispatch_pending();
    void journal_change(const Change& c, std::uint64_t sequence);
    void load_line(const std::string& line, std::size_t lineNo);

    std::vector<WorkArea> areas_;
    std::map<std::string, Group> groups_;
    std::map<std::string, TypeDecl> typesByName_;
    std::unordered_map<ArtifactId, std::string> typeNameByArtifact_;

    Tick nextTick_ = 1;
    std::uint64_t nextSequence_ = 1;

    std::vector<std::pair<SubscriptionId, Subscriber>> subscribers_;
    SubscriptionId nextSubscription_ = 1;

    std::vector<ChangeEvent> pendingEvents_;
    bool dispatching_ = false;

    std::vector<std::string> journal_;
};

}  // namespace concord
