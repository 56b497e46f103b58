#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace shj {

enum class CatalogKind { system, section, potential, generating };

/// A named built-in expression family with its closed-form oracle.
/// `parameter` is the default of the single scalar parameter (c or kappa), if any.
struct CatalogEntry {
  std::string name;
  CatalogKind kind;
  std::string oracle;
  double parameter = 0.0;
  bool has_parameter = false;
};

/// Entries in documented order: systems, sections, potentials, generating functions.
const std::vector<CatalogEntry>& catalog();

const CatalogEntry& catalog_entry(std::string_view name, CatalogKind kind);

/// DSL strings for an entry in dimension n. Systems return h_0..h_r; the other kinds return
/// one expression. `parameter` overrides the default c / kappa when the entry has one.
std::vector<std::string> catalog_expressions(std::string_view name, CatalogKind kind, int n);
std::vector<std::string> catalog_expressions(std::string_view name, CatalogKind kind, int n,
                                             double parameter);

/// Human-readable table: one line per entry, "name: expressions   [oracle]".
std::string list_catalog();

}  // namespace shj
