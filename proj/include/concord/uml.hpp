#pragma once

#include <string>
#include <vector>

#include "concord/store.hpp"

namespace concord::uml {

/// Declares the UML-flavoured artifact types (classes, interfaces,
/// operations, lifelines, messages, ...) used by the bundled rule catalog
/// and the replay tooling. Idempotent on a store that already has them.
void declare_types(Store& store);

/// The bundled consistency-rule catalog for the UML-flavoured types, in the
/// line format understood by Engine::register_catalog.
const std::string& rule_catalog();

/// Names of the declared types, in declaration order.
const std::vector<std::string>& type_names();

}  // namespace concord::uml
