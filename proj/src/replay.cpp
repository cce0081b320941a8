// replay.cpp - corpus parsing, deterministic generation and the metrics run.
#include "concord/replay.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "concord/uml.hpp"

namespace concord::replay {

namespace {

[[noreturn]] void fail(std::size_t line, const std::string& msg) {
    throw CorpusError("line " + std::to_string(line) + ": " + msg);
}

std::string escape_text(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            case '\r': out += "\\r"; break;
            default: out += c;
        }
    }
    return out;
}

std::string unescape_text(std::string_view s, std::size_t line) {
    std::string out;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] != '\\') {
            out += s[i];
            continue;
        }
        if (++i == s.size()) fail(line, "dangling escape in string");
        switch (s[i]) {
            case '"': out += '"'; break;
            case '\\': out += '\\'; break;
            case 'n': out += '\n'; break;
            case 't': out += '\t'; break;
            case 'r': out += '\r'; break;
            default: fail(line, "unknown escape in string");
        }
    }
    return out;
}

std::string real_text(double d) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, d);
    return std::string(buf, p);
}

// Whitespace-separated tokens; a double quote opens a span whose whitespace
// is kept, with escaped quotes skipped over.
std::vector<std::string> tokenize(const std::string& line, std::size_t lineNo) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < line.size()) {
        if (std::isspace(static_cast<unsigned char>(line[i]))) {
            ++i;
            continue;
        }
        std::string tok;
        while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) {
            if (line[i] == '"') {
                tok += line[i++];
                while (i < line.size() && line[i] != '"') {
                    if (line[i] == '\\' && i + 1 < line.size()) tok += line[i++];
                    tok += line[i++];
                }
                if (i == line.size()) fail(lineNo, "unterminated string");
                tok += line[i++];
            } else {
                tok += line[i++];
            }
        }
        out.push_back(std::move(tok));
    }
    return out;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::size_t b = 0;
    while (true) {
        std::size_t e = s.find(sep, b);
        out.push_back(s.substr(b, e - b));
        if (e == std::string::npos) break;
        b = e + 1;
    }
    return out;
}

const FieldSpec* find_field(const TypeSpec& t, const std::string& name) {
    for (const FieldSpec& f : t.fields)
        if (f.name == name) return &f;
    return nullptr;
}

Entry parse_entry(const std::string& tok, const TypeSpec& type, std::size_t line) {
    const std::size_t apos = tok.find("->");
    const std::size_t epos = tok.find('=');
    const bool isLink = apos != std::string::npos && (epos == std::string::npos || apos < epos);
    std::string field;
    if (isLink)
        field = tok.substr(0, apos);
    else if (epos != std::string::npos)
        field = tok.substr(0, epos);
    if (field.empty()) fail(line, "malformed entry '" + tok + "'");

    const FieldSpec* fs = find_field(type, field);
    if (!fs) fail(line, "field " + field + " is not declared on " + type.name);

    Entry en;
    en.field = field;
    if (isLink) {
        if (fs->kind != ValueKind::Link) fail(line, "field " + field + " is not a link");
        std::vector<std::string> targets = split(tok.substr(apos + 2), ',');
        for (const std::string& t : targets)
            if (t.empty()) fail(line, "empty link target in '" + tok + "'");
        if (!fs->many && targets.size() > 1)
            fail(line, "field " + field + " holds a single link");
        en.value = Value::links(targets);
        return en;
    }
    if (fs->kind == ValueKind::Link) fail(line, "link field " + field + " needs '->'");
    const std::string rest = tok.substr(epos + 1);
    switch (fs->kind) {
        case ValueKind::String: {
            if (rest.size() < 2 || rest.front() != '"' || rest.back() != '"')
                fail(line, "string value for " + field + " must be quoted");
            en.value = Value::str(
                unescape_text(std::string_view(rest).substr(1, rest.size() - 2), line));
            break;
        }
        case ValueKind::Integer: {
            std::int64_t n = 0;
            auto [p, ec] = std::from_chars(rest.data(), rest.data() + rest.size(), n);
            if (ec != std::errc{} || p != rest.data() + rest.size())
                fail(line, "bad integer value for " + field);
            en.value = Value::integer(n);
            break;
        }
        case ValueKind::Real: {
            double d = 0;
            auto [p, ec] = std::from_chars(rest.data(), rest.data() + rest.size(), d);
            if (ec != std::errc{} || p != rest.data() + rest.size())
                fail(line, "bad real value for " + field);
            en.value = Value::real(d);
            break;
        }
        case ValueKind::Boolean: {
            if (rest == "true")
                en.value = Value::boolean(true);
            else if (rest == "false")
                en.value = Value::boolean(false);
            else
                fail(line, "bad boolean value for " + field);
            break;
        }
        default:
            fail(line, "unsupported field kind");
    }
    return en;
}

}  // namespace

Corpus parse_corpus(std::istream& in, DanglingLinks policy) {
    Corpus c;
    std::map<std::string, std::size_t> typeIndex;
    std::set<std::string> elementIds;
    std::string line;
    std::size_t lineNo = 0;
    while (std::getline(in, line)) {
        ++lineNo;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::vector<std::string> tok = tokenize(line, lineNo);
        if (tok.empty() || tok[0][0] == '#') continue;
        if (tok[0] == "TYPE") {
            if (tok.size() < 4 || tok[2] != "{" || tok.back() != "}")
                fail(lineNo, "expected TYPE <name> { <fields> }");
            TypeSpec t;
            t.name = tok[1];
            if (typeIndex.count(t.name)) fail(lineNo, "duplicate type " + t.name);
            for (std::size_t i = 3; i + 1 < tok.size(); ++i) {
                std::vector<std::string> parts = split(tok[i], ':');
                if (parts.size() < 2 || parts.size() > 3 || parts[0].empty())
                    fail(lineNo, "expected <field>:<kind>[:many], got '" + tok[i] + "'");
                std::optional<ValueKind> kind = kind_from_name(parts[1]);
                if (!kind) fail(lineNo, "unknown kind '" + parts[1] + "'");
                bool many = false;
                if (parts.size() == 3) {
                    if (parts[2] != "many") fail(lineNo, "expected ':many', got ':" + parts[2] + "'");
                    many = true;
                }
                t.fields.push_back({parts[0], *kind, many});
            }
            typeIndex.emplace(t.name, c.types.size());
            c.types.push_back(std::move(t));
        } else if (tok[0] == "ELEM") {
            if (tok.size() < 6 || tok[4] != "{" || tok.back() != "}")
                fail(lineNo, "expected ELEM <id> <type> partition=<label> { <entries> }");
            Element e;
            e.id = tok[1];
            e.type = tok[2];
            auto ti = typeIndex.find(e.type);
            if (ti == typeIndex.end()) fail(lineNo, "unknown type " + e.type);
            if (!elementIds.insert(e.id).second) fail(lineNo, "duplicate element " + e.id);
            if (tok[3].rfind("partition=", 0) != 0 || tok[3].size() == 10)
                fail(lineNo, "expected partition=<label>");
            e.partition = tok[3].substr(10);
            const TypeSpec& ts = c.types[ti->second];
            for (std::size_t i = 5; i + 1 < tok.size(); ++i)
                e.entries.push_back(parse_entry(tok[i], ts, lineNo));
            c.elements.push_back(std::move(e));
        } else {
            fail(lineNo, "expected TYPE or ELEM, got '" + tok[0] + "'");
        }
    }

    // Links may point forward, so targets are checked once the file is read.
    for (Element& e : c.elements) {
        auto entry = e.entries.begin();
        while (entry != e.entries.end()) {
            if (entry->value.kind != ValueKind::Link) {
                ++entry;
                continue;
            }
            auto item = entry->value.items.begin();
            while (item != entry->value.items.end()) {
                const std::string& target = std::get<std::string>(*item);
                if (elementIds.count(target)) {
                    ++item;
                    continue;
                }
                if (policy == DanglingLinks::Reject)
                    throw CorpusError("dangling link " + target + " in element " + e.id +
                                      " field " + entry->field);
                c.diagnostics.push_back("dropped dangling link " + target + " from " + e.id +
                                        "." + entry->field);
                item = entry->value.items.erase(item);
            }
            entry = entry->value.items.empty() ? e.entries.erase(entry) : entry + 1;
        }
    }
    return c;
}

Corpus parse_corpus_file(const std::string& path, DanglingLinks policy) {
    std::ifstream in(path);
    if (!in) throw CorpusError("cannot open corpus file " + path);
    return parse_corpus(in, policy);
}

void save_corpus(const Corpus& corpus, std::ostream& out) {
    for (const TypeSpec& t : corpus.types) {
        out << "TYPE " << t.name << " {";
        for (const FieldSpec& f : t.fields) {
            out << ' ' << f.name << ':' << kind_name(f.kind);
            if (f.many) out << ":many";
        }
        out << " }\n";
    }
    if (!corpus.types.empty() && !corpus.elements.empty()) out << '\n';
    for (const Element& e : corpus.elements) {
        out << "ELEM " << e.id << ' ' << e.type << " partition=" << e.partition << " {";
        for (const Entry& en : e.entries) {
            out << ' ';
            if (en.value.kind == ValueKind::Link) {
                out << en.field << "->";
                for (std::size_t i = 0; i < en.value.items.size(); ++i) {
                    if (i) out << ',';
                    out << std::get<std::string>(en.value.items[i]);
                }
            } else {
                out << en.field << '=';
                const Scalar& s = en.value.items.front();
                switch (en.value.kind) {
                    case ValueKind::String:
                        out << '"' << escape_text(std::get<std::string>(s)) << '"';
                        break;
                    case ValueKind::Integer: out << std::get<std::int64_t>(s); break;
                    case ValueKind::Real: out << real_text(std::get<double>(s)); break;
                    case ValueKind::Boolean: out << (std::get<bool>(s) ? "true" : "false"); break;
                    default: break;
                }
            }
        }
        out << " }\n";
    }
}

std::vector<Command> to_commands(const Corpus& corpus) {
    std::map<std::string, const TypeSpec*> types;
    for (const TypeSpec& t : corpus.types) types.emplace(t.name, &t);

    std::vector<Command> out;
    for (const Element& e : corpus.elements) {
        if (!types.count(e.type))
            throw CorpusError("element " + e.id + " has unknown type " + e.type);
        out.push_back({e.partition, e.id, "type", Value::link("type:" + e.type), true});
    }
    for (const Element& e : corpus.elements) {
        const TypeSpec& ts = *types.at(e.type);
        std::map<std::string, Value> grown;
        for (const Entry& en : e.entries) {
            const FieldSpec* fs = find_field(ts, en.field);
            if (!fs)
                throw CorpusError("element " + e.id + ": field " + en.field +
                                  " is not declared on " + ts.name);
            if (fs->many) {
                auto [it, fresh] = grown.try_emplace(en.field, Value{});
                if (fresh) it->second.kind = en.value.kind;
                for (const Scalar& s : en.value.items) it->second.items.push_back(s);
                out.push_back({e.partition, e.id, en.field, it->second, false});
            } else {
                out.push_back({e.partition, e.id, en.field, en.value, false});
            }
        }
    }
    return out;
}

Corpus generate_corpus(const GenSpec& spec) {
    if (spec.partitions == 0 || spec.elements < spec.partitions)
        throw CorpusError("the generator needs elements >= partitions >= 1");
    if (!(spec.linkDensity >= 0.0 && spec.linkDensity <= 1.0))
        throw CorpusError("linkDensity must lie in [0, 1]");
    std::mt19937_64 rng(spec.seed);

    Corpus c;
    {
        Store scratch;  // mirror the bundled type declarations
        uml::declare_types(scratch);
        for (const std::string& name : uml::type_names()) {
            const TypeDecl* d = scratch.find_type(name);
            TypeSpec t;
            t.name = d->name;
            for (const FieldDecl& f : d->fields) t.fields.push_back({f.name, f.kind, f.many});
            c.types.push_back(std::move(t));
        }
    }
    const std::vector<std::string>& names = uml::type_names();

    // element skeletons: each type and each partition gets used at least once
    std::map<std::string, std::map<std::string, std::vector<std::string>>> pools;  // type→partition→ids
    for (std::size_t i = 0; i < spec.elements; ++i) {
        Element e;
        e.id = "e" + std::to_string(i + 1);
        e.type = i < names.size() ? names[i] : names[rng() % names.size()];
        const std::size_t p = i < spec.partitions ? i : rng() % spec.partitions;
        e.partition = "p" + std::to_string(p);
        pools[e.type][e.partition].push_back(e.id);
        c.elements.push_back(std::move(e));
    }

    static const std::map<std::string, std::string> linkTarget = {
        {"operations", "uml:Operation"},   {"fields", "uml:Field"},
        {"attributes", "uml:Attribute"},   {"generalizations", "uml:Interface"},
        {"params", "uml:Parameter"},       {"returnParams", "uml:Parameter"},
        {"class", "uml:Class"},            {"message", "uml:Message"},
        {"owner", "uml:Class"},            {"receiver", "uml:Lifeline"}};

    std::map<std::string, const TypeSpec*> types;
    for (const TypeSpec& t : c.types) types.emplace(t.name, &t);

    const std::uint64_t crossPermille =
        static_cast<std::uint64_t>(spec.linkDensity * 1000.0 + 0.5);
    std::size_t updates = 0;
    for (Element& e : c.elements) {
        const TypeSpec& ts = *types.at(e.type);
        for (const FieldSpec& f : ts.fields) {
            if (f.name == "tags") continue;  // reserved for padding
            if (f.kind != ValueKind::Link) {
                Value v;
                if (f.name == "name") {
                    // small name pools make the uniqueness rules bite
                    if (e.type == "uml:Operation")
                        v = Value::str("op" + std::to_string(rng() % 12));
                    else if (e.type == "uml:Parameter")
                        v = Value::str("q" + std::to_string(rng() % 6));
                    else if (e.type == "uml:Field")
                        v = Value::str("f" + std::to_string(rng() % 8));
                    else if (e.type == "uml:Attribute")
                        v = Value::str("at" + std::to_string(rng() % 8));
                    else
                        v = Value::str("n_" + e.id);
                } else if (f.name == "visibility") {
                    v = Value::str(rng() % 4 ? "public" : "private");
                } else if (f.name == "signature") {
                    v = Value::str("sig" + std::to_string(rng() % 10));
                } else if (f.name == "action") {
                    v = Value::str("op" + std::to_string(rng() % 12));
                } else {
                    v = Value::str("x");
                }
                e.entries.push_back({f.name, std::move(v)});
                ++updates;
            } else {
                const std::string& targetType = linkTarget.at(f.name);
                const std::size_t k = f.many ? rng() % 4 : 1;  // up to 3 targets per list field
                for (std::size_t j = 0; j < k; ++j) {
                    // each target crosses into another partition with
                    // probability linkDensity; those are the references that
                    // later force group accesses
                    const bool cross =
                        spec.partitions > 1 && rng() % 1000 < crossPermille;
                    std::vector<std::string> crossPool;
                    const std::vector<std::string>* pool;
                    if (cross) {
                        for (const auto& [part, ids] : pools[targetType])
                            if (part != e.partition)
                                crossPool.insert(crossPool.end(), ids.begin(), ids.end());
                        pool = &crossPool;
                    } else {
                        pool = &pools[targetType][e.partition];
                    }
                    if (pool->empty()) continue;  // no target of that kind on this side
                    e.entries.push_back({f.name, Value::link((*pool)[rng() % pool->size()])});
                    ++updates;
                }
            }
        }
    }

    if (spec.targetUpdates) {
        if (updates > *spec.targetUpdates)
            throw CorpusError("cannot hit " + std::to_string(*spec.targetUpdates) +
                              " updates: the corpus already carries " + std::to_string(updates));
        const std::size_t need = *spec.targetUpdates - updates;
        for (std::size_t i = 0; i < need; ++i)
            c.elements[i % c.elements.size()].entries.push_back(
                {"tags", Value::str("t" + std::to_string(i))});
    }
    return c;
}

ReplayMetrics run_replay(const Corpus& corpus, const ReplayOptions& opts) {
    if (corpus.elements.empty()) throw CorpusError("the corpus has no elements");

    Store store;
    for (const TypeSpec& t : corpus.types) {
        std::vector<FieldDecl> fields;
        for (const FieldSpec& f : t.fields) fields.push_back({f.name, f.kind, f.many});
        store.declare_type(t.name, std::move(fields));
    }

    std::map<std::string, WorkAreaId> areas;
    for (const Element& e : corpus.elements)
        if (!areas.count(e.partition))
            areas.emplace(e.partition, store.create_work_area(kPublicWorkArea, e.partition));

    std::set<WorkAreaId> members;
    if (opts.groupLabels.empty()) {
        for (const auto& [label, wa] : areas) members.insert(wa);
    } else {
        for (const std::string& label : opts.groupLabels) {
            auto it = areas.find(label);
            if (it == areas.end())
                throw CorpusError("group label " + label + " names no partition");
            members.insert(it->second);
        }
    }
    store.define_group("replay", members);

    Engine engine(store, opts.mode,
                  opts.mode == CheckMode::Group ? "replay" : std::string{});
    engine.register_catalog(opts.catalog ? *opts.catalog : uml::rule_catalog());

    const std::vector<Command> commands = to_commands(corpus);
    ReplayMetrics m;
    m.modelElements = corpus.elements.size();
    m.totalCommands = commands.size();

    const auto start = std::chrono::steady_clock::now();
    for (const Command& cmd : commands) {
        store.set_property(areas.at(cmd.partition), cmd.artifact, cmd.property, cmd.value);
        ++(cmd.creation ? m.creationCommands : m.updateCommands);
    }
    const auto stop = std::chrono::steady_clock::now();
    m.evalTimeMs = std::chrono::duration<double, std::milli>(stop - start).count();

    const AccessTally& t = engine.tally();
    m.ruleEvaluations = t.ruleEvaluations;
    m.contextAccesses = t.contextAccesses;
    m.groupAccesses = t.groupAccesses;
    m.publicAccesses = t.publicAccesses;
    const std::uint64_t denom = t.contextAccesses + t.groupAccesses;
    m.contextPct =
        denom == 0 ? 100.0 : 100.0 * static_cast<double>(t.contextAccesses) / static_cast<double>(denom);
    m.groupPct =
        denom == 0 ? 0.0 : 100.0 * static_cast<double>(t.groupAccesses) / static_cast<double>(denom);
    return m;
}

static std::string csv_header(bool includeWallTime) {
    std::string header =
        "elements,commands,creations,updates,evaluations,context_accesses,"
        "group_accesses,context_pct,group_pct,public_accesses";
    if (includeWallTime) header += ",wall_ms";
    return header;
}

static std::string csv_row(const ReplayMetrics& m, bool includeWallTime) {
    char buf[512];
    std::snprintf(buf, sizeof buf, "%zu,%zu,%zu,%zu,%llu,%llu,%llu,%.2f,%.2f,%llu",
                  m.modelElements, m.totalCommands, m.creationCommands, m.updateCommands,
                  static_cast<unsigned long long>(m.ruleEvaluations),
                  static_cast<unsigned long long>(m.contextAccesses),
                  static_cast<unsigned long long>(m.groupAccesses), m.contextPct, m.groupPct,
                  static_cast<unsigned long long>(m.publicAccesses));
    std::string row = buf;
    if (includeWallTime) {
        std::snprintf(buf, sizeof buf, ",%.3f", m.evalTimeMs);
        row += buf;
    }
    return row;
}

std::string metrics_csv(const ReplayMetrics& m, bool includeWallTime) {
    return csv_header(includeWallTime) + "\n" + csv_row(m, includeWallTime) + "\n";
}

std::string report(const std::vector<ReplayMetrics>& rows, ReportFormat format,
                   bool includeWallTime) {
    if (rows.empty()) throw CorpusError("the report needs at least one metrics row");
    if (format == ReportFormat::Csv) {
        std::string out = csv_header(includeWallTime) + "\n";
        for (const ReplayMetrics& m : rows) out += csv_row(m, includeWallTime) + "\n";
        return out;
    }

    std::vector<std::string> headers = {"elements", "commands", "creations",  "updates",
                                        "evals",    "context",  "group",      "context%",
                                        "group%",   "public"};
    if (includeWallTime) headers.push_back("wall_ms");
    std::vector<std::vector<std::string>> cells;
    char buf[64];
    for (const ReplayMetrics& m : rows) {
        std::vector<std::string> row = {
            std::to_string(m.modelElements),   std::to_string(m.totalCommands),
            std::to_string(m.creationCommands), std::to_string(m.updateCommands),
            std::to_string(m.ruleEvaluations), std::to_string(m.contextAccesses),
            std::to_string(m.groupAccesses)};
        std::snprintf(buf, sizeof buf, "%.2f", m.contextPct);
        row.push_back(buf);
        std::snprintf(buf, sizeof buf, "%.2f", m.groupPct);
        row.push_back(buf);
        row.push_back(std::to_string(m.publicAccesses));
        if (includeWallTime) {
            std::snprintf(buf, sizeof buf, "%.3f", m.evalTimeMs);
            row.push_back(buf);
        }
        cells.push_back(std::move(row));
    }

    std::vector<std::size_t> width(headers.size());
    for (std::size_t c = 0; c < headers.size(); ++c) {
        width[c] = headers[c].size();
        for (const auto& row : cells) width[c] = std::max(width[c], row[c].size());
    }
    std::ostringstream out;
    auto emit = [&](const std::vector<std::string>& row) {
        for (std::size_t c = 0; c < row.size(); ++c)
            out << (c ? "  " : "") << std::right << std::setw(static_cast<int>(width[c]))
                << row[c];
        out << '\n';
    };
    emit(headers);
    for (const auto& row : cells) emit(row);
    return out.str();
}

}  // namespace concord::replay
