// uml.cpp - the bundled UML-flavoured type set and its rule catalog.
#include "concord/uml.hpp"

namespace concord::uml {

void declare_types(Store& store) {
    store.declare_type("uml:Class", {{"name", ValueKind::String, false},
                                     {"operations", ValueKind::Link, true},
                                     {"fields", ValueKind::Link, true},
                                     {"tags", ValueKind::String, true}});
    store.declare_type("uml:Interface", {{"name", ValueKind::String, false},
                                         {"operations", ValueKind::Link, true},
                                         {"attributes", ValueKind::Link, true},
                                         {"generalizations", ValueKind::Link, true},
                                         {"tags", ValueKind::String, true}});
    store.declare_type("uml:Operation", {{"name", ValueKind::String, false},
                                         {"visibility", ValueKind::String, false},
                                         {"signature", ValueKind::String, false},
                                         {"params", ValueKind::Link, true},
                                         {"returnParams", ValueKind::Link, true},
                                         {"tags", ValueKind::String, true}});
    store.declare_type("uml:Parameter", {{"name", ValueKind::String, false},
                                         {"tags", ValueKind::String, true}});
    store.declare_type("uml:Field", {{"name", ValueKind::String, false},
                                     {"tags", ValueKind::String, true}});
    store.declare_type("uml:Attribute", {{"name", ValueKind::String, false},
                                         {"tags", ValueKind::String, true}});
    store.declare_type("uml:Lifeline", {{"name", ValueKind::String, false},
                                        {"class", ValueKind::Link, false},
                                        {"tags", ValueKind::String, true}});
    store.declare_type("uml:Transition", {{"name", ValueKind::String, false},
                                          {"message", ValueKind::Link, false},
                                          {"owner", ValueKind::Link, false},
                                          {"action", ValueKind::String, false},
                                          {"tags", ValueKind::String, true}});
    store.declare_type("uml:Message", {{"name", ValueKind::String, false},
                                       {"receiver", ValueKind::Link, false},
                                       {"action", ValueKind::String, false},
                                       {"tags", ValueKind::String, true}});
}

const std::string& rule_catalog() {
    static const std::string catalog =
        "# structural and behavioural consistency rules for the uml types\n"
        "RULE CR01 ON uml:Lifeline: self.class != null\n"
        "RULE CR02 ON uml:Transition: self.message != null\n"
        "RULE CR03 ON uml:Transition: exists op in self.owner.operations : op.name = self.action\n"
        "RULE CR04 ON uml:Message: exists op in self.receiver.class.operations : op.name = self.action\n"
        "RULE CR05 ON uml:Operation: unique self.params by name\n"
        "RULE CR06 ON uml:Operation: count self.returnParams <= 1\n"
        "RULE CR07 ON uml:Interface: count self.generalizations <= 1\n"
        "RULE CR08 ON uml:Interface: forall op in self.operations : op.visibility = \"public\" "
        "and count self.attributes <= 0\n"
        "RULE CR09 ON uml:Class: unique self.operations by signature\n"
        "RULE CR10 ON uml:Class: unique self.fields by name\n";
    return catalog;
}

const std::vector<std::string>& type_names() {
    static const std::vector<std::string> names = {
        "uml:Class",     "uml:Interface",  "uml:Operation",  "uml:Parameter", "uml:Field",
        "uml:Attribute", "uml:Lifeline",   "uml:Transition", "uml:Message"};
    return names;
}

}  // namespace concord::uml
