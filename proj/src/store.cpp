// store.cpp - storage hierarchy, property resolution and the journal format.
#include "concord/store.hpp"

#include <algorithm>
#include <charconv>
#include <istream>
#include <ostream>
#include <utility>

namespace concord {

namespace {

// Journal lines are TAB-delimited; fields escape backslash, TAB, LF and CR.
std::string esc_field(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char ch : s) {
        switch (ch) {
            case '\\': out += "\\\\"; break;
            case '\t': out += "\\t"; break;
            case '\n': out += "\\n"; break;
            case '\r': out += "\\r"; break;
            default: out += ch; break;
        }
    }
    return out;
}

std::string unesc_field(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] != '\\' || i + 1 == s.size()) {
            out += s[i];
            continue;
        }
        switch (s[++i]) {
            case '\\': out += '\\'; break;
            case 't': out += '\t'; break;
            case 'n': out += '\n'; break;
            case 'r': out += '\r'; break;
            default: out += s[i]; break;
        }
    }
    return out;
}

std::vector<std::string> split_raw(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == sep) {
            out.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += ch;
        }
    }
    out.push_back(std::move(cur));
    return out;
}

// Value payloads join items with ','; items escape backslash and comma.
std::string esc_item(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char ch : s) {
        if (ch == '\\' || ch == ',') out += '\\';
        out += ch;
    }
    return out;
}

std::vector<std::string> split_items(const std::string& payload) {
    std::vector<std::string> out;
    std::string cur;
    for (std::size_t i = 0; i < payload.size(); ++i) {
        char ch = payload[i];
        if (ch == '\\' && i + 1 < payload.size()) {
            cur += payload[++i];
        } else if (ch == ',') {
            out.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += ch;
        }
    }
    out.push_back(std::move(cur));
    return out;
}

std::string serialize_scalar(ValueKind kind, const Scalar& s) {
    switch (kind) {
        case ValueKind::String:
        case ValueKind::Link:
            return std::get<std::string>(s);
        case ValueKind::Integer:
            return std::to_string(std::get<std::int64_t>(s));
        case ValueKind::Real: {
            char buf[64];
            auto [p, ec] = std::to_chars(buf, buf + sizeof buf, std::get<double>(s));
            return std::string(buf, p);
        }
        case ValueKind::Boolean:
            return std::get<bool>(s) ? "1" : "0";
    }
    return {};
}

std::string serialize_value(const Value& v) {
    std::string out = std::to_string(v.items.size()) + ":";
    bool first = true;
    for (const Scalar& s : v.items) {
        if (!first) out += ',';
        first = false;
        out += esc_item(serialize_scalar(v.kind, s));
    }
    return out;
}

Scalar parse_scalar(ValueKind kind, const std::string& text, const char* where) {
    switch (kind) {
        case ValueKind::String:
        case ValueKind::Link:
            return Scalar{text};
        case ValueKind::Integer: {
            std::int64_t i = 0;
            auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), i);
            if (ec != std::errc{} || p != text.data() + text.size())
                throw StoreError(std::string(where) + ": bad integer item '" + text + "'");
            return Scalar{i};
        }
        case ValueKind::Real: {
            double d = 0;
            auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), d);
            if (ec != std::errc{} || p != text.data() + text.size())
                throw StoreError(std::string(where) + ": bad real item '" + text + "'");
            return Scalar{d};
        }
        case ValueKind::Boolean:
            if (text == "1") return Scalar{true};
            if (text == "0") return Scalar{false};
            throw StoreError(std::string(where) + ": bad boolean item '" + text + "'");
    }
    throw StoreError(std::string(where) + ": bad value kind");
}

Value parse_value(ValueKind kind, const std::string& payload, const char* where) {
    auto colon = payload.find(':');
    if (colon == std::string::npos)
        throw StoreError(std::string(where) + ": malformed value payload");
    std::size_t count = 0;
    {
        const char* b = payload.data();
        auto [p, ec] = std::from_chars(b, b + colon, count);
        if (ec != std::errc{} || p != b + colon)
            throw StoreError(std::string(where) + ": malformed value count");
    }
    Value v;
    v.kind = kind;
    if (count == 0) return v;
    std::vector<std::string> items = split_items(payload.substr(colon + 1));
    if (items.size() != count)
        throw StoreError(std::string(where) + ": value item count mismatch");
    v.items.reserve(count);
    for (const std::string& it : items) v.items.push_back(parse_scalar(kind, it, where));
    return v;
}

std::uint64_t parse_u64(const std::string& text, const char* where) {
    std::uint64_t n = 0;
    auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), n);
    if (ec != std::errc{} || p != text.data() + text.size())
        throw StoreError(std::string(where) + ": bad number '" + text + "'");
    return n;
}

bool scalar_matches(ValueKind kind, const Scalar& s) {
    switch (kind) {
        case ValueKind::String:
        case ValueKind::Link: return std::holds_alternative<std::string>(s);
        case ValueKind::Integer: return std::holds_alternative<std::int64_t>(s);
        case ValueKind::Real: return std::holds_alternative<double>(s);
        case ValueKind::Boolean: return std::holds_alternative<bool>(s);
    }
    return false;
}

ResolvedValue to_resolved(const Located& loc) {
    ResolvedValue r;
    if (!loc.change || loc.change->tombstone()) return r;  // deleted or never written
    r.value = loc.change->value;
    r.origin = loc.origin;
    r.sourceWorkArea = loc.change->workArea;
    r.sourceTimestamp = loc.change->timestamp;
    return r;
}

}  // namespace

const char* origin_name(Origin o) {
    switch (o) {
        case Origin::Context: return "context";
        case Origin::Group: return "group";
        case Origin::HierarchyAncestor: return "hierarchy-ancestor";
        case Origin::Public: return "public";
        case Origin::Absent: return "absent";
    }
    return "?";
}

const char* change_type_name(ChangeType t) {
    switch (t) {
        case ChangeType::Create: return "create";
        case ChangeType::Update: return "update";
        case ChangeType::Delete: return "delete";
    }
    return "?";
}

const FieldDecl* TypeDecl::find_field(const std::string& fieldName) const {
    for (const FieldDecl& f : fields)
        if (f.name == fieldName) return &f;
    return nullptr;
}

const Change* WorkArea::latest(const Coord& c) const {
    auto it = changes_.find(c);
    if (it == changes_.end() || it->second.empty()) return nullptr;
    return &it->second.back();
}

const WorkArea::ChangeLog* WorkArea::history(const Coord& c) const {
    auto it = changes_.find(c);
    return it == changes_.end() ? nullptr : &it->second;
}

Store::Store() {
    WorkArea pub;
    pub.id_ = kPublicWorkArea;
    pub.visibility_ = Visibility::Public;
    pub.label_ = "public";
    areas_.push_back(std::move(pub));  // implicit; never journaled
}

WorkArea& Store::area(WorkAreaId id) { return areas_[id]; }

const WorkArea& Store::area_checked(WorkAreaId id, const char* op) const {
    if (id >= areas_.size())
        throw StoreError(std::string(op) + ": unknown work area " + std::to_string(id));
    return areas_[id];
}

const TypeDecl& Store::declare_type(const std::string& name, std::vector<FieldDecl> fields) {
    if (name.empty()) throw StoreError("type name must not be empty");
    if (name.find_first_of("\t\n\r") != std::string::npos)
        throw StoreError("type name must not contain control characters");
    for (const FieldDecl& f : fields)
        if (f.name.empty() || f.name.find_first_of(":;\t\n\r ") != std::string::npos)
            throw StoreError("invalid field name '" + f.name + "' in type " + name);
    if (auto it = typesByName_.find(name); it != typesByName_.end()) {
        if (it->second.fields == fields) return it->second;  // identical re-declare is a no-op
        throw StoreError("type " + name + " already declared with different fields");
    }
    TypeDecl decl;
    decl.typeId = "type:" + name;
    decl.name = name;
    decl.fields = std::move(fields);
    TypeDecl& stored = typesByName_.emplace(name, std::move(decl)).first->second;
    typeNameByArtifact_[stored.typeId] = name;

    std::string spec;
    for (const FieldDecl& f : stored.fields) {
        if (!spec.empty()) spec += ';';
        spec += f.name + ":" + kind_name(f.kind) + ":" + (f.many ? "1" : "0");
    }
    journal_.push_back("T\t" + esc_field(name) + "\t" + spec);

    // Materialize the type as a public artifact so rules can reach its name.
    apply_change(kPublicWorkArea, stored.typeId, "name", Value::str(name), ChangeType::Create);
    return stored;
}

const TypeDecl* Store::find_type(const std::string& name) const {
    auto it = typesByName_.find(name);
    return it == typesByName_.end() ? nullptr : &it->second;
}

const TypeDecl* Store::find_type_by_artifact(const ArtifactId& typeArtifact) const {
    auto it = typeNameByArtifact_.find(typeArtifact);
    return it == typeNameByArtifact_.end() ? nullptr : find_type(it->second);
}

std::vector<const TypeDecl*> Store::types() const {
    std::vector<const TypeDecl*> out;
    out.reserve(typesByName_.size());
    for (const auto& [name, decl] : typesByName_) out.push_back(&decl);
    return out;
}

WorkAreaId Store::create_work_area(WorkAreaId parent, std::string label) {
    area_checked(parent, "create_work_area");
    if (!label.empty()) {
        if (label.find_first_of("\t\n\r") != std::string::npos)
            throw StoreError("work area label must not contain control characters");
        if (find_work_area(label))
            throw StoreError("work area label '" + label + "' already in use");
    }
    WorkArea wa;
    wa.id_ = static_cast<WorkAreaId>(areas_.size());
    wa.parent_ = parent;
    wa.visibility_ = Visibility::Private;
    wa.createdAt_ = current_tick();
    wa.label_ = label;
    areas_.push_back(std::move(wa));
    journal_.push_back("W\t" + std::to_string(areas_.back().id_) + "\t" + std::to_string(parent) +
                       "\t" + esc_field(label));
    return areas_.back().id_;
}

const WorkArea& Store::work_area(WorkAreaId id) const { return area_checked(id, "work_area"); }

std::optional<WorkAreaId> Store::find_work_area(const std::string& label) const {
    if (label.empty()) return std::nullopt;
    for (const WorkArea& a : areas_)
        if (a.label_ == label) return a.id_;
    return std::nullopt;
}

const Group& Store::define_group(const std::string& name, const std::set<WorkAreaId>& members) {
    if (name.empty()) throw StoreError("group name must not be empty");
    if (name.find_first_of(",\t\n\r") != std::string::npos)
        throw StoreError("group name must not contain commas or control characters");
    for (WorkAreaId m : members) {
        area_checked(m, "define_group");
        if (m == kPublicWorkArea)
            throw StoreError("the public work area cannot be a group member");
    }
    Group& g = groups_[name];
    g.name = name;
    g.members = members;
    std::string memberSpec;
    for (WorkAreaId m : members) {
        if (!memberSpec.empty()) memberSpec += ',';
        memberSpec += std::to_string(m);
    }
    journal_.push_back("G\t" + esc_field(name) + "\t" + memberSpec);
    return g;
}

const Group* Store::find_group(const std::string& name) const {
    auto it = groups_.find(name);
    return it == groups_.end() ? nullptr : &it->second;
}

void Store::validate_value(WorkAreaId wa, const ArtifactId& artifact, const std::string& property,
                           const std::optional<Value>& value, ChangeType type) const {
    if (artifact.empty()) throw StoreError("artifact id must not be empty");
    if (property.empty()) throw StoreError("property name must not be empty");
    if (type == ChangeType::Delete) {
        if (value) throw StoreError("a delete change must not carry a value");
        return;
    }
    if (!value)
        throw StoreError(std::string(change_type_name(type)) + " change on " + artifact + "." +
                         property + " needs a value");
    for (const Scalar& s : value->items)
        if (!scalar_matches(value->kind, s))
            throw StoreError("malformed value for " + artifact + "." + property +
                             ": item does not match kind " + kind_name(value->kind));
    if (type == ChangeType::Create) {
        const Change* own = areas_[wa].latest({artifact, property});
        if (own && !own->tombstone())
            throw StoreError("create change: " + artifact + "." + property +
                             " already exists in work area " + std::to_string(wa));
    }
    if (property == "type") {
        if (value->kind != ValueKind::Link || value->items.size() != 1)
            throw StoreError("the 'type' property of " + artifact + " must hold exactly one link");
        return;
    }
    const TypeDecl* decl = artifact_type(wa, artifact);
    if (!decl) return;  // untyped artifacts are not checked
    const FieldDecl* field = decl->find_field(property);
    if (!field) return;  // undeclared properties are not checked
    if (value->kind != field->kind)
        throw StoreError("field " + decl->name + "." + property + " expects " +
                         kind_name(field->kind) + " values, got " + kind_name(value->kind));
    if (!field->many && value->items.size() != 1)
        throw StoreError("field " + decl->name + "." + property + " holds a single value");
}

Change& Store::place_change(Change c) {
    WorkArea& a = areas_[c.workArea];
    WorkArea::ChangeLog& log = a.changes_[{c.artifact, c.property}];
    if (a.visibility_ != Visibility::Public) log.clear();  // private areas keep only the latest
    log.push_back(std::move(c));
    return log.back();
}

ChangeEvent Store::record_and_dispatch(Change c) {
    const Change& placed = place_change(std::move(c));
    ChangeEvent ev{placed, nextSequence_++};
    journal_change(placed, ev.sequence);
    pendingEvents_.push_back(ev);
    if (!dispatching_) dispatch_pending();
    return ev;
}

void Store::dispatch_pending() {
    dispatching_ = true;
    // The queue may grow while we walk it: a subscriber that writes during
    // delivery has its change applied immediately and its event appended.
    for (std::size_t i = 0; i < pendingEvents_.size(); ++i) {
        ChangeEvent ev = pendingEvents_[i];
        auto subs = subscribers_;
        for (auto& [id, fn] : subs) fn(ev);
    }
    pendingEvents_.clear();
    dispatching_ = false;
}

ChangeEvent Store::apply_change(WorkAreaId wa, const ArtifactId& artifact,
                                const std::string& property, std::optional<Value> value,
                                ChangeType type) {
    area_checked(wa, "apply_change");
    validate_value(wa, artifact, property, value, type);
    Change c;
    c.artifact = artifact;
    c.property = property;
    c.value = std::move(value);
    c.type = type;
    c.timestamp = nextTick_++;
    c.workArea = wa;
    return record_and_dispatch(std::move(c));
}

ChangeEvent Store::set_property(WorkAreaId wa, const ArtifactId& artifact,
                                const std::string& property, Value value) {
    area_checked(wa, "set_property");
    const Change* own = areas_[wa].latest({artifact, property});
    ChangeType t = (own && !own->tombstone()) ? ChangeType::Update : ChangeType::Create;
    return apply_change(wa, artifact, property, std::move(value), t);
}

Located Store::locate_property(WorkAreaId wa, const ArtifactId& artifact,
                               const std::string& property) const {
    area_checked(wa, "locate_property");
    Coord coord{artifact, property};
    const WorkArea* a = &areas_[wa];
    bool atContext = true;
    while (true) {
        if (const Change* c = a->latest(coord)) {
            Origin o = atContext ? Origin::Context
                                 : (a->visibility_ == Visibility::Public ? Origin::Public
                                                                         : Origin::HierarchyAncestor);
            return {c, o};
        }
        if (!a->parent_) break;
        a = &areas_[*a->parent_];
        atContext = false;
    }
    return {nullptr, Origin::Absent};
}

Located Store::locate_property_grouped(WorkAreaId context, const Group& group,
                                       const ArtifactId& artifact,
                                       const std::string& property) const {
    area_checked(context, "locate_property_grouped");
    Coord coord{artifact, property};
    if (const Change* c = areas_[context].latest(coord)) return {c, Origin::Context};
    const Change* best = nullptr;  // newest change across the other members wins
    for (WorkAreaId m : group.members) {
        if (m == context) continue;
        area_checked(m, "locate_property_grouped");
        if (const Change* c = areas_[m].latest(coord))
            if (!best || c->timestamp > best->timestamp) best = c;
    }
    if (best) return {best, Origin::Group};
    const WorkArea* a = &areas_[context];
    while (a->parent_) {
        a = &areas_[*a->parent_];
        if (const Change* c = a->latest(coord))
            return {c, a->visibility_ == Visibility::Public ? Origin::Public
                                                            : Origin::HierarchyAncestor};
    }
    return {nullptr, Origin::Absent};
}

ResolvedValue Store::resolve_property(WorkAreaId wa, const ArtifactId& artifact,
                                      const std::string& property) const {
    return to_resolved(locate_property(wa, artifact, property));
}

ResolvedValue Store::resolve_property_grouped(WorkAreaId context, const Group& group,
                                              const ArtifactId& artifact,
                                              const std::string& property) const {
    return to_resolved(locate_property_grouped(context, group, artifact, property));
}

std::map<std::string, ResolvedValue> Store::materialize_artifact(WorkAreaId context,
                                                                 const Group* group,
                                                                 const ArtifactId& artifact) const {
    area_checked(context, "materialize_artifact");
    std::set<std::string> names;
    auto scan = [&](const WorkArea& a) {
        for (const auto& [coord, log] : a.changes_)
            if (coord.first == artifact && !log.empty()) names.insert(coord.second);
    };
    const WorkArea* a = &areas_[context];
    while (true) {
        scan(*a);
        if (!a->parent_) break;
        a = &areas_[*a->parent_];
    }
    if (group)
        for (WorkAreaId m : group->members) scan(area_checked(m, "materialize_artifact"));
    if (names.empty()) throw StoreError("materialize_artifact: unknown artifact " + artifact);
    std::map<std::string, ResolvedValue> out;
    for (const std::string& n : names) {
        ResolvedValue rv = group ? resolve_property_grouped(context, *group, artifact, n)
                                 : resolve_property(context, artifact, n);
        if (!rv.absent()) out.emplace(n, std::move(rv));
    }
    return out;
}

const TypeDecl* Store::artifact_type(WorkAreaId wa, const ArtifactId& artifact) const {
    ResolvedValue rv = resolve_property(wa, artifact, "type");
    if (rv.absent() || !rv.value || rv.value->kind != ValueKind::Link || rv.value->items.size() != 1)
        return nullptr;
    const std::string* target = std::get_if<std::string>(&rv.value->items[0]);
    return target ? find_type_by_artifact(*target) : nullptr;
}

std::vector<ArtifactId> Store::public_artifacts_of_type(const ArtifactId& typeArtifact) const {
    std::vector<ArtifactId> out;
    for (const auto& [coord, log] : areas_[kPublicWorkArea].changes_) {
        if (coord.second != "type" || log.empty()) continue;
        const Change& c = log.back();
        if (c.tombstone() || c.value->kind != ValueKind::Link || c.value->items.size() != 1) continue;
        if (const auto* s = std::get_if<std::string>(&c.value->items[0]); s && *s == typeArtifact)
            out.push_back(coord.first);
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<ChangeEvent> Store::commit(WorkAreaId wa) {
    area_checked(wa, "commit");
    if (wa == kPublicWorkArea)
        throw StoreError("the public work area has no parent to commit to");
    WorkArea& src = areas_[wa];
    WorkAreaId parent = *src.parent_;
    std::map<Coord, Change> staged;  // map order = (artifact, property) order
    for (const auto& [coord, log] : src.changes_)
        if (!log.empty()) staged.emplace(coord, log.back());

    std::vector<ChangeEvent> events;
    events.reserve(staged.size());
    bool wasDispatching = std::exchange(dispatching_, true);
    for (auto& [coord, c] : staged) {
        ChangeType eff;
        if (c.tombstone()) {
            eff = ChangeType::Delete;
        } else {
            // Create or update from the parent's point of view.
            eff = resolve_property(parent, coord.first, coord.second).absent() ? ChangeType::Create
                                                                               : ChangeType::Update;
        }
        events.push_back(apply_change(parent, coord.first, coord.second, std::move(c.value), eff));
    }
    src.changes_.clear();
    journal_.push_back("X\t" + std::to_string(wa));
    dispatching_ = wasDispatching;
    if (!wasDispatching) dispatch_pending();
    return events;
}

std::vector<ChangeEvent> Store::commit_group(const Group& group) {
    if (group.members.empty())
        throw StoreError("group '" + group.name + "' has no members to commit");
    for (WorkAreaId m : group.members) area_checked(m, "commit_group");

    std::map<Coord, Change> staged;  // overlapping coordinates: newest change wins
    for (WorkAreaId m : group.members) {
        for (const auto& [coord, log] : areas_[m].changes_) {
            if (log.empty()) continue;
            const Change& c = log.back();
            auto [it, inserted] = staged.emplace(coord, c);
            if (!inserted && c.timestamp > it->second.timestamp) it->second = c;
        }
    }

    std::vector<ChangeEvent> events;
    events.reserve(staged.size());
    bool wasDispatching = std::exchange(dispatching_, true);
    for (auto& [coord, c] : staged) {
        ChangeType eff;
        if (c.tombstone()) {
            eff = ChangeType::Delete;
        } else {
            eff = resolve_property(kPublicWorkArea, coord.first, coord.second).absent()
                      ? ChangeType::Create
                      : ChangeType::Update;
        }
        events.push_back(
            apply_change(kPublicWorkArea, coord.first, coord.second, std::move(c.value), eff));
    }
    for (WorkAreaId m : group.members) {
        areas_[m].changes_.clear();
        journal_.push_back("X\t" + std::to_string(m));
    }
    dispatching_ = wasDispatching;
    if (!wasDispatching) dispatch_pending();
    return events;
}

SubscriptionId Store::subscribe(Subscriber fn) {
    subscribers_.emplace_back(nextSubscription_, std::move(fn));
    return nextSubscription_++;
}

void Store::unsubscribe(SubscriptionId id) {
    std::erase_if(subscribers_, [id](const auto& p) { return p.first == id; });
}

void Store::journal_change(const Change& c, std::uint64_t sequence) {
    std::string line = "C\t" + std::to_string(sequence) + "\t" + std::to_string(c.timestamp) +
                       "\t" + std::to_string(c.workArea) + "\t" + esc_field(c.artifact) + "\t" +
                       esc_field(c.property) + "\t" + change_type_name(c.type) + "\t";
    if (c.value) {
        line += kind_name(c.value->kind);
        line += '\t';
        line += esc_field(serialize_value(*c.value));
    } else {
        line += "-\t";
    }
    journal_.push_back(std::move(line));
}

void Store::save(std::ostream& out) const {
    for (const std::string& line : journal_) out << line << '\n';
}

void Store::load_line(const std::string& line, std::size_t lineNo) {
    const std::string where = "journal line " + std::to_string(lineNo);
    std::vector<std::string> f = split_raw(line, '\t');
    for (std::string& field : f) field = unesc_field(field);
    if (f[0] == "C") {
        if (f.size() != 9) throw StoreError(where + ": change record needs 9 fields");
        Change c;
        std::uint64_t seq = parse_u64(f[1], where.c_str());
        c.timestamp = parse_u64(f[2], where.c_str());
        c.workArea = static_cast<WorkAreaId>(parse_u64(f[3], where.c_str()));
        if (c.workArea >= areas_.size()) throw StoreError(where + ": unknown work area");
        c.artifact = f[4];
        c.property = f[5];
        if (f[6] == "create") c.type = ChangeType::Create;
        else if (f[6] == "update") c.type = ChangeType::Update;
        else if (f[6] == "delete") c.type = ChangeType::Delete;
        else throw StoreError(where + ": unknown change type '" + f[6] + "'");
        if (f[7] != "-") {
            std::optional<ValueKind> kind = kind_from_name(f[7]);
            if (!kind) throw StoreError(where + ": unknown value kind '" + f[7] + "'");
            c.value = parse_value(*kind, f[8], where.c_str());
        } else if (c.type != ChangeType::Delete) {
            throw StoreError(where + ": only delete changes may omit the value");
        }
        Tick tick = c.timestamp;
        place_change(std::move(c));
        nextTick_ = std::max(nextTick_, tick + 1);
        nextSequence_ = std::max(nextSequence_, seq + 1);
    } else if (f[0] == "W") {
        if (f.size() != 4) throw StoreError(where + ": work area record needs 4 fields");
        WorkAreaId id = static_cast<WorkAreaId>(parse_u64(f[1], where.c_str()));
        WorkAreaId parent = static_cast<WorkAreaId>(parse_u64(f[2], where.c_str()));
        if (id != areas_.size() || parent >= areas_.size())
            throw StoreError(where + ": work area records out of order");
        WorkArea wa;
        wa.id_ = id;
        wa.parent_ = parent;
        wa.visibility_ = Visibility::Private;
        wa.label_ = f[3];
        areas_.push_back(std::move(wa));
    } else if (f[0] == "G") {
        if (f.size() != 3) throw StoreError(where + ": group record needs 3 fields");
        Group g;
        g.name = f[1];
        if (!f[2].empty())
            for (const std::string& m : split_raw(f[2], ','))
                g.members.insert(static_cast<WorkAreaId>(parse_u64(m, where.c_str())));
        for (WorkAreaId m : g.members)
            if (m == kPublicWorkArea || m >= areas_.size())
                throw StoreError(where + ": bad group member");
        groups_[g.name] = std::move(g);
    } else if (f[0] == "T") {
        if (f.size() != 3) throw StoreError(where + ": type record needs 3 fields");
        TypeDecl decl;
        decl.name = f[1];
        decl.typeId = "type:" + decl.name;
        if (!f[2].empty()) {
            for (const std::string& fieldSpec : split_raw(f[2], ';')) {
                std::vector<std::string> parts = split_raw(fieldSpec, ':');
                if (parts.size() != 3) throw StoreError(where + ": bad field spec '" + fieldSpec + "'");
                FieldDecl fd;
                fd.name = parts[0];
                std::optional<ValueKind> kind = kind_from_name(parts[1]);
                if (!kind) throw StoreError(where + ": bad field kind '" + parts[1] + "'");
                fd.kind = *kind;
                fd.many = parts[2] == "1";
                decl.fields.push_back(std::move(fd));
            }
        }
        typeNameByArtifact_[decl.typeId] = decl.name;
        typesByName_[decl.name] = std::move(decl);
    } else if (f[0] == "X") {
        if (f.size() != 2) throw StoreError(where + ": clear record needs 2 fields");
        WorkAreaId wa = static_cast<WorkAreaId>(parse_u64(f[1], where.c_str()));
        if (wa >= areas_.size()) throw StoreError(where + ": unknown work area");
        areas_[wa].changes_.clear();
    } else {
        throw StoreError(where + ": unknown record '" + f[0] + "'");
    }
}

Store Store::load(std::istream& in) {
    Store s;
    std::string line;
    std::size_t lineNo = 0;
    while (std::getline(in, line)) {
        ++lineNo;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        s.load_line(line, lineNo);
        s.journal_.push_back(line);
    }
    return s;
}

}  // namespace concord
