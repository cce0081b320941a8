// Command line front end: persists a store as a journal file and exposes
// editing, checking, committing, grouping, and replay over it.
#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "concord/replay.hpp"
#include "concord/uml.hpp"

namespace {

using namespace concord;

struct CliError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---- store file plumbing ----------------------------------------------------

std::string store_path(const std::string& arg) {
    if (!arg.empty()) return arg;
    if (const char* env = std::getenv("CONCORD_STORE")) {
        if (*env) return env;
    }
    throw CliError("no store file given (pass a path or set CONCORD_STORE)");
}

Store load_store(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw CliError("cannot open store file '" + path + "'");
    return Store::load(in);
}

/// Persist only the journal entries added after `mark`. The file stays
/// untouched when a command throws before reaching this point.
void append_journal(const std::string& path, const Store& store, std::size_t mark) {
    std::ofstream out(path, std::ios::app);
    if (!out) throw CliError("cannot write store file '" + path + "'");
    for (std::size_t i = mark; i < store.journal_size(); ++i)
        out << store.journal_entry(i) << '\n';
}

std::string area_label(const Store& store, WorkAreaId id) {
    const std::string& l = store.work_area(id).label();
    return l.empty() ? ("wa" + std::to_string(id)) : l;
}

WorkAreaId area_by_label(Store& store, const std::string& label, bool create) {
    if (label.empty() || label == "public") return kPublicWorkArea;
    if (std::optional<WorkAreaId> wa = store.find_work_area(label)) return *wa;
    if (!create) throw CliError("no work area labelled '" + label + "'");
    return store.create_work_area(kPublicWorkArea, label);
}

std::vector<std::string> split(const std::string& text, char sep) {
    std::vector<std::string> parts;
    std::string cur;
    for (char c : text) {
        if (c == sep) {
            parts.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    parts.push_back(cur);
    return parts;
}

// ---- value parsing ----------------------------------------------------------

Scalar scalar_from(ValueKind kind, const std::string& raw) {
    switch (kind) {
        case ValueKind::Integer: {
            std::int64_t n = 0;
            auto [p, ec] = std::from_chars(raw.data(), raw.data() + raw.size(), n);
            if (ec != std::errc{} || p != raw.data() + raw.size())
                throw CliError("'" + raw + "' is not an integer");
            return n;
        }
        case ValueKind::Real: {
            double d = 0;
            auto [p, ec] = std::from_chars(raw.data(), raw.data() + raw.size(), d);
            if (ec != std::errc{} || p != raw.data() + raw.size())
                throw CliError("'" + raw + "' is not a number");
            return d;
        }
        case ValueKind::Boolean:
            if (raw == "true") return true;
            if (raw == "false") return false;
            throw CliError("'" + raw + "' is not true or false");
        default:
            return raw;
    }
}

/// Parse a scalar assignment using the declared field kind when the artifact
/// is typed in this view; untyped properties default to strings.
Value typed_value(const Store& store, WorkAreaId wa, const ArtifactId& artifact,
                  const std::string& property, const std::string& raw) {
    const TypeDecl* type = store.artifact_type(wa, artifact);
    const FieldDecl* field = type ? type->find_field(property) : nullptr;
    ValueKind kind = field ? field->kind : ValueKind::String;
    if (kind == ValueKind::Link)
        throw CliError("property '" + property + "' holds links; use '" + artifact + "." +
                       property + "->target'");
    Value v;
    v.kind = kind;
    if (field && field->many) {
        for (const std::string& item : split(raw, ',')) v.items.push_back(scalar_from(kind, item));
    } else {
        v.items.push_back(scalar_from(kind, raw));
    }
    return v;
}

struct Edit {
    ArtifactId artifact;
    std::string property;
    std::string raw;
    bool link = false;
};

/// Accepts `artifact.property=value` and `artifact.property->id[,id...]`.
Edit parse_edit(const std::string& text) {
    std::size_t arrow = text.find("->");
    std::size_t eq = text.find('=');
    bool link = arrow != std::string::npos && (eq == std::string::npos || arrow < eq);
    std::size_t cut = link ? arrow : eq;
    if (cut == std::string::npos)
        throw CliError("expected '=' or '->' in '" + text + "'");
    std::string path = text.substr(0, cut);
    std::size_t dot = path.rfind('.');
    if (dot == std::string::npos || dot == 0 || dot + 1 == path.size())
        throw CliError("expected <artifact>.<property> before '" + std::string(link ? "->" : "=") +
                       "' in '" + text + "'");
    Edit e;
    e.artifact = path.substr(0, dot);
    e.property = path.substr(dot + 1);
    e.raw = text.substr(cut + (link ? 2 : 1));
    e.link = link;
    return e;
}

// ---- engine helpers ---------------------------------------------------------

Engine make_engine(Store& store, const std::string& group) {
    if (group.empty()) return Engine(store, CheckMode::Hierarchy);
    return Engine(store, CheckMode::Group, group);
}

/// A --group value names either an existing group or a comma-separated list
/// of work-area labels. A list (re)defines a group named by the sorted
/// labels joined with '+', so the same members always share one group and
/// one result property.
std::string resolve_group_spec(Store& store, const std::string& spec) {
    if (store.find_group(spec)) return spec;
    std::vector<std::string> labels = split(spec, ',');
    std::sort(labels.begin(), labels.end());
    std::set<WorkAreaId> members;
    std::string name;
    for (const std::string& label : labels) {
        members.insert(area_by_label(store, label, /*create=*/false));
        name += (name.empty() ? "" : "+") + label;
    }
    const Group* existing = store.find_group(name);
    if (!existing || existing->members != members) store.define_group(name, members);
    return name;
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw CliError("cannot open rules file '" + path + "'");
    std::ostringstream all;
    all << in.rdbuf();
    return all.str();
}

void print_feedback(std::ostream& out, Engine& engine, const Store& store) {
    for (const Feedback& f : engine.take_feedback()) {
        out << f.crdId << ' ' << f.subject << ' ' << (f.holds ? "hold" : "break") << " ["
            << area_label(store, f.home) << ']';
        if (engine.mode() == CheckMode::Group) out << " @" << engine.group_name();
        out << '\n';
    }
}

// ---- subcommands ------------------------------------------------------------

struct InitArgs {
    std::string store;
    bool uml = false;
    bool force = false;
};

int run_init(const InitArgs& a) {
    std::string path = store_path(a.store);
    if (std::filesystem::exists(path) && !a.force)
        throw CliError("'" + path + "' already exists (use --force to overwrite)");
    Store store;
    if (a.uml) uml::declare_types(store);
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw CliError("cannot write store file '" + path + "'");
    store.save(out);
    std::cout << "initialized '" << path << "'" << (a.uml ? " with the uml model types" : "")
              << '\n';
    return 0;
}

struct ApplyArgs {
    std::string store;
    std::string wa;
    std::string group;
    std::string rules;
    std::vector<std::string> creates;
    std::vector<std::string> edits;
    std::vector<std::string> deletes;
};

int run_apply(const ApplyArgs& a) {
    std::string path = store_path(a.store);
    Store store = load_store(path);
    std::size_t mark = store.journal_size();
    WorkAreaId wa = area_by_label(store, a.wa, /*create=*/true);

    std::string group = a.group.empty() ? std::string{} : resolve_group_spec(store, a.group);
    Engine engine = make_engine(store, group);
    engine.attach();
    if (!a.rules.empty()) engine.register_catalog(read_text_file(a.rules));

    for (const std::string& spec : a.creates) {
        std::size_t colon = spec.find(':');
        if (colon == std::string::npos || colon == 0 || colon + 1 == spec.size())
            throw CliError("expected <artifact>:<type> in '" + spec + "'");
        std::string artifact = spec.substr(0, colon);
        std::string type = spec.substr(colon + 1);
        store.set_property(wa, artifact, "type", Value::link("type:" + type));
    }
    for (const std::string& text : a.edits) {
        Edit e = parse_edit(text);
        Value v = e.link ? Value::links(split(e.raw, ','))
                         : typed_value(store, wa, e.artifact, e.property, e.raw);
        store.set_property(wa, e.artifact, e.property, v);
    }
    for (const std::string& text : a.deletes) {
        std::size_t dot = text.rfind('.');
        if (dot == std::string::npos || dot == 0 || dot + 1 == text.size())
            throw CliError("expected <artifact>.<property> in '" + text + "'");
        store.apply_change(wa, text.substr(0, dot), text.substr(dot + 1), std::nullopt,
                           ChangeType::Delete);
    }

    print_feedback(std::cout, engine, store);
    append_journal(path, store, mark);
    return 0;
}

struct CheckArgs {
    std::string store;
    std::string wa;
    std::string mode;
    std::string group;
    std::string rules;
};

int run_check(const CheckArgs& a) {
    if (!a.mode.empty() && a.mode != "hierarchy" && a.mode != "group")
        throw CliError("--mode must be 'hierarchy' or 'group'");
    if (a.mode == "group" && a.group.empty())
        throw CliError("--mode group needs --group <name-or-labels>");
    if (a.mode == "hierarchy" && !a.group.empty())
        throw CliError("--group only applies with --mode group");
    std::string path = store_path(a.store);
    Store store = load_store(path);
    std::size_t mark = store.journal_size();

    std::string group = a.group.empty() ? std::string{} : resolve_group_spec(store, a.group);
    Engine engine = make_engine(store, group);
    engine.attach();
    if (!a.rules.empty()) engine.register_catalog(read_text_file(a.rules));
    engine.take_feedback();  // verdicts are reported as a table below

    std::optional<WorkAreaId> only;
    if (!a.wa.empty()) only = area_by_label(store, a.wa, /*create=*/false);

    std::set<WorkAreaId> homes;
    for (const Engine::EvaluationRow& row : engine.evaluations()) homes.insert(row.home);
    for (WorkAreaId home : homes) {
        if (only && home != *only) continue;
        engine.check_all(home);
    }
    engine.take_feedback();

    std::size_t holds = 0, breaks = 0, errors = 0;
    for (const Engine::EvaluationRow& row : engine.evaluations(only)) {
        const char* state = !row.holds ? "error" : (*row.holds ? "hold" : "break");
        std::cout << '[' << area_label(store, row.home) << "] " << row.crdId << ' ' << row.subject
                  << ' ' << state;
        if (engine.mode() == CheckMode::Group) std::cout << " @" << engine.group_name();
        std::cout << '\n';
        if (!row.holds)
            ++errors;
        else if (*row.holds)
            ++holds;
        else
            ++breaks;
    }
    for (const std::string& d : engine.diagnostics()) std::cerr << "note: " << d << '\n';
    std::cout << holds << " hold, " << breaks << " break, " << errors << " unevaluated\n";

    append_journal(path, store, mark);
    return (breaks || errors) ? 1 : 0;
}

struct CommitArgs {
    std::string store;
    std::string wa;
    std::string group;
};

int run_commit(const CommitArgs& a) {
    if (a.wa.empty() == a.group.empty())
        throw CliError("commit needs exactly one of --wa or --group");
    std::string path = store_path(a.store);
    Store store = load_store(path);
    std::size_t mark = store.journal_size();

    Engine engine = make_engine(store, "");  // hierarchy view refreshes on commit
    engine.attach();
    engine.take_feedback();

    std::vector<ChangeEvent> promoted;
    if (!a.wa.empty()) {
        promoted = store.commit(area_by_label(store, a.wa, /*create=*/false));
    } else {
        const Group* g = store.find_group(a.group);
        if (!g) throw CliError("no group named '" + a.group + "'");
        promoted = store.commit_group(*g);
    }

    print_feedback(std::cout, engine, store);
    std::cout << "committed " << promoted.size() << " change" << (promoted.size() == 1 ? "" : "s")
              << '\n';
    append_journal(path, store, mark);
    return 0;
}

struct GroupArgs {
    std::string store;
    std::string name;
    std::vector<std::string> members;
};

int run_group(const GroupArgs& a) {
    std::string path = store_path(a.store);
    Store store = load_store(path);
    std::size_t mark = store.journal_size();

    std::set<WorkAreaId> members;
    for (const std::string& label : a.members)
        members.insert(area_by_label(store, label, /*create=*/true));
    store.define_group(a.name, members);

    std::cout << "group '" << a.name << "' = {";
    const char* sep = "";
    for (WorkAreaId id : members) {
        std::cout << sep << area_label(store, id);
        sep = ", ";
    }
    std::cout << "}\n";
    append_journal(path, store, mark);
    return 0;
}

struct ReplayArgs {
    std::string corpus;
    std::string generate;
    std::string mode = "group";
    std::string rules;
    std::string emit;
    std::string members;
    std::string format = "table";
    bool wall = false;
};

replay::GenSpec parse_gen_spec(const std::string& text) {
    std::vector<std::string> parts = split(text, ',');
    if (parts.size() < 3 || parts.size() > 5)
        throw CliError("expected seed,elements,partitions[,density[,updates]] in '" + text + "'");
    auto num = [&](const std::string& raw) {
        std::uint64_t n = 0;
        auto [p, ec] = std::from_chars(raw.data(), raw.data() + raw.size(), n);
        if (ec != std::errc{} || p != raw.data() + raw.size())
            throw CliError("'" + raw + "' is not a number in '" + text + "'");
        return n;
    };
    replay::GenSpec spec;
    spec.seed = num(parts[0]);
    spec.elements = static_cast<std::size_t>(num(parts[1]));
    spec.partitions = static_cast<std::size_t>(num(parts[2]));
    if (parts.size() > 3) {
        double d = 0;
        auto [p, ec] = std::from_chars(parts[3].data(), parts[3].data() + parts[3].size(), d);
        if (ec != std::errc{} || p != parts[3].data() + parts[3].size())
            throw CliError("'" + parts[3] + "' is not a link density in '" + text + "'");
        spec.linkDensity = d;
    }
    if (parts.size() > 4) spec.targetUpdates = static_cast<std::size_t>(num(parts[4]));
    return spec;
}

int run_replay(const ReplayArgs& a) {
    if (a.corpus.empty() == a.generate.empty())
        throw CliError("replay needs exactly one of --corpus or --generate");
    if (a.mode != "group" && a.mode != "hierarchy")
        throw CliError("--mode must be 'group' or 'hierarchy'");
    if (a.format != "table" && a.format != "csv")
        throw CliError("--format must be 'table' or 'csv'");

    replay::Corpus corpus;
    if (!a.corpus.empty()) {
        corpus = replay::parse_corpus_file(a.corpus);
    } else {
        corpus = replay::generate_corpus(parse_gen_spec(a.generate));
    }
    if (!a.emit.empty()) {
        std::ofstream out(a.emit, std::ios::trunc);
        if (!out) throw CliError("cannot write corpus file '" + a.emit + "'");
        replay::save_corpus(corpus, out);
    }

    replay::ReplayOptions opts;
    opts.mode = a.mode == "group" ? CheckMode::Group : CheckMode::Hierarchy;
    if (!a.rules.empty()) opts.catalog = read_text_file(a.rules);
    if (!a.members.empty()) {
        for (const std::string& label : split(a.members, ',')) opts.groupLabels.push_back(label);
    }

    replay::ReplayMetrics m = replay::run_replay(corpus, opts);
    std::cout << replay::report(
        {m}, a.format == "csv" ? replay::ReportFormat::Csv : replay::ReportFormat::Table, a.wall);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"incremental property store with rule checking"};
    app.require_subcommand(1);

    InitArgs initArgs;
    CLI::App* init = app.add_subcommand("init", "create an empty store file");
    init->add_option("--store", initArgs.store, "store file (default $CONCORD_STORE)");
    init->add_flag("--uml", initArgs.uml, "declare the bundled uml model types");
    init->add_flag("--force", initArgs.force, "overwrite an existing file");

    ApplyArgs applyArgs;
    CLI::App* apply = app.add_subcommand("apply", "record property changes in a work area");
    apply->add_option("--store", applyArgs.store, "store file (default $CONCORD_STORE)");
    apply->add_option("--wa", applyArgs.wa, "target work area label (default public)");
    apply->add_option("--group", applyArgs.group,
                      "check group-first: group name or comma-separated member labels");
    apply->add_option("--rules", applyArgs.rules, "register this rule catalog first");
    apply->add_option("--create", applyArgs.creates, "new artifact as <artifact>:<type>")
        ->allow_extra_args(false);
    apply->add_option("--delete", applyArgs.deletes, "remove a property as <artifact>.<property>")
        ->allow_extra_args(false);
    apply->add_option("edits", applyArgs.edits,
                      "assignments: a.prop=value or a.links->id1,id2");

    CheckArgs checkArgs;
    CLI::App* check = app.add_subcommand("check", "evaluate every consistency record");
    check->add_option("--store", checkArgs.store, "store file (default $CONCORD_STORE)");
    check->add_option("wa", checkArgs.wa, "restrict to records homed in this work area");
    check->add_option("--mode", checkArgs.mode, "hierarchy (default) or group");
    check->add_option("--group", checkArgs.group,
                      "group name or comma-separated member labels (implies --mode group)");
    check->add_option("--rules", checkArgs.rules, "register this rule catalog first");

    CommitArgs commitArgs;
    CLI::App* commit = app.add_subcommand("commit", "promote work-area changes to the parent");
    commit->add_option("--store", commitArgs.store, "store file (default $CONCORD_STORE)");
    commit->add_option("--wa", commitArgs.wa, "commit this work area");
    commit->add_option("--group", commitArgs.group, "commit every member of this group");

    GroupArgs groupArgs;
    CLI::App* group = app.add_subcommand("group", "define or redefine a work-area group");
    group->add_option("--store", groupArgs.store, "store file (default $CONCORD_STORE)");
    group->add_option("name", groupArgs.name, "group name")->required();
    group->add_option("members", groupArgs.members, "member work-area labels")->required();

    ReplayArgs replayArgs;
    CLI::App* replay = app.add_subcommand("replay", "run a change corpus and report access metrics");
    replay->add_option("--corpus", replayArgs.corpus, "corpus file to run");
    replay->add_option("--generate", replayArgs.generate,
                       "synthesize one: seed,elements,partitions[,density[,updates]]");
    replay->add_option("--mode", replayArgs.mode, "group (default) or hierarchy");
    replay->add_option("--rules", replayArgs.rules, "rule catalog (default: bundled uml rules)");
    replay->add_option("--emit-corpus", replayArgs.emit, "also write the corpus to this file");
    replay->add_option("--members", replayArgs.members, "comma-separated partition labels to group");
    replay->add_option("--format", replayArgs.format, "table (default) or csv");
    replay->add_flag("--wall", replayArgs.wall, "include wall-clock time in the report");

    try {
        app.parse(argc, argv);
        if (*init) return run_init(initArgs);
        if (*apply) return run_apply(applyArgs);
        if (*check) return run_check(checkArgs);
        if (*commit) return run_commit(commitArgs);
        if (*group) return run_group(groupArgs);
        if (*replay) return run_replay(replayArgs);
        return 2;
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}
