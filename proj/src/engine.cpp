// engine.cpp - change-driven rule evaluation and its bookkeeping.
#include "concord/engine.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>
#include <utility>

namespace concord {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::optional<std::string> single_string(const ResolvedValue& rv) {
    if (rv.absent() || !rv.value || rv.value->items.size() != 1) return std::nullopt;
    if (const auto* s = std::get_if<std::string>(&rv.value->items[0])) return *s;
    return std::nullopt;
}

}  // namespace

Engine::Engine(Store& store, CheckMode mode, std::string groupName)
    : store_(store), mode_(mode), groupName_(std::move(groupName)) {
    if (mode_ == CheckMode::Group) {
        if (groupName_.empty()) throw EngineError("group mode needs a group name");
        if (!store_.find_group(groupName_))
            throw EngineError("unknown group '" + groupName_ + "'");
        resultProperty_ = "result@" + groupName_;
    } else {
        if (!groupName_.empty()) throw EngineError("hierarchy mode takes no group name");
        resultProperty_ = "result";
    }
    ensure_builtin_types();
    subscription_ = store_.subscribe([this](const ChangeEvent& ev) { on_change(ev); });
}

Engine::~Engine() { store_.unsubscribe(subscription_); }

void Engine::ensure_builtin_types() {
    store_.declare_type("cc:RuleDefinition", {{"name", ValueKind::String, false},
                                              {"target", ValueKind::Link, false},
                                              {"rule", ValueKind::String, false}});
    store_.declare_type("cc:Evaluation", {{"crd", ValueKind::Link, false},
                                          {"subject", ValueKind::Link, false},
                                          {"result", ValueKind::Boolean, false}});
}

Located Engine::locate(WorkAreaId home, const ArtifactId& artifact,
                       const std::string& property) const {
    if (mode_ == CheckMode::Group)
        return store_.locate_property_grouped(home, current_group(), artifact, property);
    return store_.locate_property(home, artifact, property);
}

const Group& Engine::current_group() const {
    const Group* g = store_.find_group(groupName_);
    if (!g) throw EngineError("group '" + groupName_ + "' no longer exists");
    return *g;
}

std::optional<ArtifactId> Engine::linked_type_artifact(WorkAreaId home,
                                                       const ArtifactId& artifact) const {
    Located t = locate(home, artifact, "type");
    if (!t.change || t.change->tombstone()) return std::nullopt;
    const Value& v = *t.change->value;
    if (v.kind != ValueKind::Link || v.items.size() != 1) return std::nullopt;
    if (const auto* s = std::get_if<std::string>(&v.items[0])) return *s;
    return std::nullopt;
}

const CrdInfo& Engine::register_crd(const std::string& id, const std::string& typeName,
                                    const std::string& ruleText) {
    if (id.empty() || id.find_first_of(" \t\r\n") != std::string::npos)
        throw EngineError("rule id '" + id + "' must be a single word");
    if (auto it = crdsById_.find(id); it != crdsById_.end()) {
        if (it->second.typeName == typeName && it->second.ruleText == ruleText)
            return it->second;  // identical re-registration is a no-op
        throw EngineError("rule " + id + " is already registered with a different definition");
    }
    const TypeDecl* type = store_.find_type(typeName);
    if (!type) throw EngineError("rule " + id + " targets unknown type " + typeName);

    CrdInfo info;
    info.id = id;
    info.typeName = typeName;
    info.typeArtifact = type->typeId;
    info.ruleText = ruleText;
    info.artifact = "crd:" + id;
    info.ast = rules::parse_rule(ruleText);

    CrdInfo& stored = crdsById_.emplace(id, std::move(info)).first->second;
    crdsByType_[stored.typeArtifact].push_back(id);
    crdIdByArtifact_[stored.artifact] = id;
    crdArtifacts_.insert(stored.artifact);

    // The definition is itself an artifact in the public area.
    const TypeDecl* crdType = store_.find_type("cc:RuleDefinition");
    store_.set_property(kPublicWorkArea, stored.artifact, "type", Value::link(crdType->typeId));
    store_.set_property(kPublicWorkArea, stored.artifact, "name", Value::str(id));
    store_.set_property(kPublicWorkArea, stored.artifact, "target", Value::link(stored.typeArtifact));
    store_.set_property(kPublicWorkArea, stored.artifact, "rule", Value::str(ruleText));

    // Evaluations for artifacts that already carry the type anywhere.
    std::vector<std::pair<WorkAreaId, ArtifactId>> found;
    for (WorkAreaId w = 0; w < store_.work_area_count(); ++w) {
        for (const auto& [coord, log] : store_.work_area(w).changes()) {
            if (coord.second != "type" || log.empty()) continue;
            const Change& c = log.back();
            if (c.tombstone() || c.value->kind != ValueKind::Link || c.value->items.size() != 1)
                continue;
            if (std::get<std::string>(c.value->items[0]) == stored.typeArtifact)
                found.emplace_back(w, coord.first);
        }
    }
    std::sort(found.begin(), found.end());
    for (const auto& [w, subject] : found) {
        RegKey key{subject, id, w};
        if (registry_.count(key)) continue;
        instantiate_cre(id, subject, w);
        reevaluate(key);
    }
    return stored;
}

void Engine::register_catalog(const std::string& catalogText) {
    std::istringstream in(catalogText);
    std::string line;
    std::size_t lineNo = 0;
    while (std::getline(in, line)) {
        ++lineNo;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const std::string where = "catalog line " + std::to_string(lineNo);
        std::size_t pos = 0;
        auto word = [&]() {
            while (pos < t.size() && std::isspace(static_cast<unsigned char>(t[pos]))) ++pos;
            std::size_t b = pos;
            while (pos < t.size() && !std::isspace(static_cast<unsigned char>(t[pos]))) ++pos;
            return t.substr(b, pos - b);
        };
        if (word() != "RULE") throw EngineError(where + ": expected 'RULE'");
        std::string id = word();
        if (id.empty()) throw EngineError(where + ": missing rule id");
        if (word() != "ON") throw EngineError(where + ": expected 'ON'");
        std::string typeName = word();
        if (typeName.empty()) throw EngineError(where + ": missing type name");
        if (typeName.back() == ':') {
            typeName.pop_back();
        } else {
            while (pos < t.size() && std::isspace(static_cast<unsigned char>(t[pos]))) ++pos;
            if (pos >= t.size() || t[pos] != ':')
                throw EngineError(where + ": expected ':' after the type name");
            ++pos;
        }
        std::string ruleText = trim(t.substr(pos));
        if (ruleText.empty()) throw EngineError(where + ": missing rule text");
        try {
            register_crd(id, typeName, ruleText);
        } catch (const rules::ParseError& e) {
            throw EngineError(where + ": " + e.what());
        }
    }
}

const CrdInfo* Engine::find_crd(const std::string& id) const {
    auto it = crdsById_.find(id);
    return it == crdsById_.end() ? nullptr : &it->second;
}

std::vector<const CrdInfo*> Engine::crds() const {
    std::vector<const CrdInfo*> out;
    out.reserve(crdsById_.size());
    for (const auto& [id, info] : crdsById_) out.push_back(&info);
    return out;
}

void Engine::attach() {
    const TypeDecl* crdType = store_.find_type("cc:RuleDefinition");
    const TypeDecl* creType = store_.find_type("cc:Evaluation");

    for (const ArtifactId& art : store_.public_artifacts_of_type(crdType->typeId)) {
        auto read = [&](const char* p) {
            return single_string(store_.resolve_property(kPublicWorkArea, art, p));
        };
        std::optional<std::string> id = read("name");
        std::optional<std::string> target = read("target");
        std::optional<std::string> rule = read("rule");
        if (!id || !target || !rule) {
            diagnostics_.push_back("skipping malformed rule definition " + art);
            continue;
        }
        if (crdsById_.count(*id)) continue;
        const TypeDecl* type = store_.find_type_by_artifact(*target);
        if (!type) {
            diagnostics_.push_back("rule " + *id + " targets an undeclared type; skipped");
            continue;
        }
        CrdInfo info;
        info.id = *id;
        info.typeName = type->name;
        info.typeArtifact = type->typeId;
        info.ruleText = *rule;
        info.artifact = art;
        try {
            info.ast = rules::parse_rule(*rule);
        } catch (const rules::ParseError& e) {
            diagnostics_.push_back("rule " + *id + " does not parse: " + e.what());
            continue;
        }
        CrdInfo& stored = crdsById_.emplace(*id, std::move(info)).first->second;
        crdsByType_[stored.typeArtifact].push_back(stored.id);
        crdIdByArtifact_[stored.artifact] = stored.id;
        crdArtifacts_.insert(stored.artifact);
    }

    std::vector<std::pair<WorkAreaId, ArtifactId>> found;
    for (WorkAreaId w = 0; w < store_.work_area_count(); ++w) {
        for (const auto& [coord, log] : store_.work_area(w).changes()) {
            if (coord.second != "type" || log.empty()) continue;
            const Change& c = log.back();
            if (c.tombstone() || c.value->kind != ValueKind::Link || c.value->items.size() != 1)
                continue;
            if (std::get<std::string>(c.value->items[0]) == creType->typeId)
                found.emplace_back(w, coord.first);
        }
    }
    std::sort(found.begin(), found.end());
    for (const auto& [home, creArt] : found) {
        std::optional<std::string> crdArt =
            single_string(store_.resolve_property(home, creArt, "crd"));
        std::optional<std::string> subject =
            single_string(store_.resolve_property(home, creArt, "subject"));
        if (!crdArt || !subject) {
            diagnostics_.push_back("skipping malformed evaluation record " + creArt);
            continue;
        }
        auto idIt = crdIdByArtifact_.find(*crdArt);
        if (idIt == crdIdByArtifact_.end()) {
            diagnostics_.push_back("evaluation " + creArt + " references an unknown rule; skipped");
            continue;
        }
        creArtifacts_.insert(creArt);
        RegKey key{*subject, idIt->second, home};
        if (registry_.count(key)) continue;
        CreState st;
        st.artifact = creArt;
        ResolvedValue storedResult = store_.resolve_property(home, creArt, resultProperty_);
        if (!storedResult.absent() && storedResult.value->kind == ValueKind::Boolean &&
            storedResult.value->items.size() == 1)
            st.verdict = std::get<bool>(storedResult.value->items[0]);
        auto [rit, inserted] = registry_.emplace(key, std::move(st));
        // Quiet scope rebuild: resolve reads without tallies, writes or feedback.
        const CrdInfo& crd = crdsById_.at(idIt->second);
        auto quiet = [&](const ArtifactId& a, const std::string& p) -> std::optional<Value> {
            Located loc = locate(home, a, p);
            if (loc.change && !loc.change->tombstone()) return loc.change->value;
            return std::nullopt;
        };
        try {
            rules::EvalResult res = rules::evaluate(crd.ast, *subject, quiet);
            apply_scope(key, rit->second, std::move(res.scope));
        } catch (const rules::EvalError&) {
            // the scope stays empty until a later full check repairs it
        }
    }
}

void Engine::check_all(WorkAreaId home) {
    std::vector<RegKey> keys;
    for (const auto& [key, st] : registry_)
        if (std::get<2>(key) == home) keys.push_back(key);
    for (const RegKey& key : keys) reevaluate(key);
}

std::vector<Engine::EvaluationRow> Engine::evaluations(std::optional<WorkAreaId> home) const {
    std::vector<EvaluationRow> out;
    for (const auto& [key, st] : registry_) {
        if (home && std::get<2>(key) != *home) continue;
        out.push_back({std::get<1>(key), std::get<0>(key), std::get<2>(key), st.verdict});
    }
    return out;
}

std::optional<bool> Engine::verdict(const ArtifactId& subject, const std::string& crdId,
                                    WorkAreaId home) const {
    auto it = registry_.find(RegKey{subject, crdId, home});
    if (it == registry_.end()) return std::nullopt;
    return it->second.verdict;
}

AccessTally Engine::gather(const ArtifactId& subject, const std::string& crdId,
                           WorkAreaId home) const {
    auto it = registry_.find(RegKey{subject, crdId, home});
    if (it == registry_.end())
        throw EngineError("no evaluation of " + crdId + " for " + subject + " in work area " +
                          std::to_string(home));
    AccessTally t;
    for (const Coord& c : it->second.scope) {
        Located loc = locate(home, c.first, c.second);
        if (!loc.change || loc.change->tombstone()) continue;
        switch (loc.origin) {
            case Origin::Context: ++t.contextAccesses; break;
            case Origin::Group: ++t.groupAccesses; break;
            default: ++t.publicAccesses; break;
        }
    }
    return t;
}

std::vector<Feedback> Engine::take_feedback() {
    std::vector<Feedback> out;
    out.swap(feedback_);
    return out;
}

void Engine::on_change(const ChangeEvent& ev) {
    const Change& ch = ev.change;
    // the engine's own records never trigger evaluations
    if (creArtifacts_.count(ch.artifact) || crdArtifacts_.count(ch.artifact)) return;
    if (ch.property == "result" || ch.property.rfind("result@", 0) == 0) return;

    Coord coord{ch.artifact, ch.property};
    // snapshot before any evaluations this event may create: fresh
    // instantiations below already evaluate against the new state
    std::vector<RegKey> candidates;
    if (auto it = scopeIndex_.find(coord); it != scopeIndex_.end())
        candidates.assign(it->second.begin(), it->second.end());

    if (ch.property == "type") sync_cres_for(ch.artifact, ch.workArea);

    for (const RegKey& key : candidates) {
        if (!registry_.count(key)) continue;  // retired above
        // A home that redefines the property in its own area keeps its view
        // and its verdict; every other home in scope re-checks.
        WorkAreaId home = std::get<2>(key);
        if (home != ch.workArea && store_.work_area(home).latest(coord) != nullptr) continue;
        reevaluate(key);
    }
}

void Engine::sync_cres_for(const ArtifactId& subject, WorkAreaId eventArea) {
    std::optional<ArtifactId> typeArtifact = linked_type_artifact(eventArea, subject);
    const std::vector<std::string>* wanted = nullptr;
    if (typeArtifact)
        if (auto it = crdsByType_.find(*typeArtifact); it != crdsByType_.end())
            wanted = &it->second;

    // retire evaluations this area's view no longer justifies
    std::vector<RegKey> stale;
    for (const auto& [key, st] : registry_) {
        if (std::get<0>(key) != subject || std::get<2>(key) != eventArea) continue;
        bool keep = wanted && std::find(wanted->begin(), wanted->end(), std::get<1>(key)) !=
                                  wanted->end();
        if (!keep) stale.push_back(key);
    }
    for (const RegKey& key : stale) retire_cre(key);

    if (!wanted) return;
    for (const std::string& crdId : *wanted) {
        RegKey key{subject, crdId, eventArea};
        if (registry_.count(key)) continue;
        instantiate_cre(crdId, subject, eventArea);
        reevaluate(key);
    }
}

void Engine::instantiate_cre(const std::string& crdId, const ArtifactId& subject,
                             WorkAreaId home) {
    const CrdInfo& crd = crdsById_.at(crdId);
    CreState st;
    st.artifact = "cre:" + crdId + ":" + subject;
    creArtifacts_.insert(st.artifact);
    RegKey key{subject, crdId, home};
    auto [it, inserted] = registry_.emplace(key, std::move(st));
    if (!inserted) return;
    const TypeDecl* creType = store_.find_type("cc:Evaluation");
    const ArtifactId& art = it->second.artifact;
    store_.set_property(home, art, "type", Value::link(creType->typeId));
    store_.set_property(home, art, "crd", Value::link(crd.artifact));
    store_.set_property(home, art, "subject", Value::link(subject));
}

void Engine::retire_cre(const RegKey& key) {
    auto it = registry_.find(key);
    if (it == registry_.end()) return;
    CreState& st = it->second;
    for (const Coord& c : st.scope) {
        auto sit = scopeIndex_.find(c);
        if (sit != scopeIndex_.end()) {
            sit->second.erase(key);
            if (sit->second.empty()) scopeIndex_.erase(sit);
        }
    }
    // tombstone the record in its home so a reload does not resurrect it
    store_.apply_change(std::get<2>(key), st.artifact, "type", std::nullopt, ChangeType::Delete);
    registry_.erase(it);
}

void Engine::apply_scope(const RegKey& key, CreState& st, rules::Scope next) {
    for (const Coord& c : st.scope) {
        if (next.count(c)) continue;
        auto sit = scopeIndex_.find(c);
        if (sit != scopeIndex_.end()) {
            sit->second.erase(key);
            if (sit->second.empty()) scopeIndex_.erase(sit);
        }
    }
    for (const Coord& c : next)
        if (!st.scope.count(c)) scopeIndex_[c].insert(key);
    st.scope = std::move(next);
}

void Engine::reevaluate(const RegKey& key) {
    auto rit = registry_.find(key);
    if (rit == registry_.end()) return;
    CreState& st = rit->second;
    const CrdInfo& crd = crdsById_.at(std::get<1>(key));
    const ArtifactId& subject = std::get<0>(key);
    WorkAreaId home = std::get<2>(key);

    AccessTally local;  // merged only if the evaluation completes
    std::map<Coord, std::optional<Value>> memo;
    auto reader = [&](const ArtifactId& a, const std::string& p) -> std::optional<Value> {
        Coord coord{a, p};
        if (auto mit = memo.find(coord); mit != memo.end()) return mit->second;
        Located loc = locate(home, a, p);
        std::optional<Value> v;
        if (loc.change && !loc.change->tombstone()) {
            v = loc.change->value;
            switch (loc.origin) {
                case Origin::Context: ++local.contextAccesses; break;
                case Origin::Group: ++local.groupAccesses; break;
                default: ++local.publicAccesses; break;
            }
        }
        memo.emplace(std::move(coord), v);
        return v;
    };

    rules::EvalResult res;
    try {
        res = rules::evaluate(crd.ast, subject, reader);
    } catch (const rules::EvalError& e) {
        diagnostics_.push_back(crd.id + " " + subject + ": " + e.what());
        // Keep the verdict and tally, but track everything read before the
        // failure so a repair of those properties re-triggers this record.
        rules::Scope partial;
        for (const auto& [coord, value] : memo) partial.insert(coord);
        apply_scope(key, st, std::move(partial));
        return;
    }
    ++local.ruleEvaluations;
    tally_ += local;
    apply_scope(key, st, std::move(res.scope));

    bool first = !st.verdict.has_value();
    bool flip = !first && *st.verdict != res.verdict.holds;
    st.verdict = res.verdict.holds;
    if (first || flip) {
        store_.set_property(home, st.artifact, resultProperty_, Value::boolean(res.verdict.holds));
        feedback_.push_back({crd.id, subject, home, res.verdict.holds});
    }
}

}  // namespace concord
