#include "shj/catalog.hpp"

#include "shj/errors.hpp"

#include <cstdio>
#include <functional>

namespace shj {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// sum_{i=1..n} fmt(i)
std::string sum_over(int n, const std::function<std::string(const std::string&)>& term) {
  std::string out;
  for (int i = 1; i <= n; ++i) {
    if (i > 1) out += " + ";
    out += term(std::to_string(i));
  }
  return out;
}

std::vector<std::string> expressions(std::string_view name, CatalogKind kind, int n, double c) {
  using V = std::vector<std::string>;
  auto momenta = [n] {
    V ps;
    for (int i = 1; i <= n; ++i) ps.push_back("p" + std::to_string(i));
    return ps;
  };
  auto with_momenta = [&](std::string h0) {
    V out{std::move(h0)};
    for (auto& p : momenta()) out.push_back(p);
    return out;
  };
  const std::string kinetic = sum_over(n, [](auto i) { return "p" + i + "^2/2"; });
  switch (kind) {
    case CatalogKind::system:
      if (name == "free_particle") return with_momenta(kinetic);
      if (name == "translation") return with_momenta("0");
      if (name == "harmonic") return {sum_over(n, [](auto i) { return "(q" + i + "^2 + p" + i + "^2)/2"; })};
      if (name == "pendulum") return with_momenta(kinetic + " + " + sum_over(n, [](auto i) { return "cos(q" + i + ")"; }));
      if (name == "quadratic_potential") {
        return with_momenta(kinetic + " + " + sum_over(n, [&](auto i) { return num(c) + "*q" + i + "^2/2"; }));
      }
      break;
    case CatalogKind::section:
      if (name == "zero") return {"0"};
      if (name == "linear") return {sum_over(n, [&](auto i) { return num(c) + "*q" + i; })};
      if (name == "quadratic") return {sum_over(n, [&](auto i) { return num(c) + "*q" + i + "^2/2"; })};
      break;
    case CatalogKind::potential:
      if (name == "zero") return {"0"};
      if (name == "quadratic") return {sum_over(n, [&](auto i) { return num(c) + "*q" + i + "^2/2"; })};
      break;
    case CatalogKind::generating:
      if (name == "exchange") return {sum_over(n, [](auto i) { return "a" + i + "*b" + i; })};
      if (name == "free_flow") return {sum_over(n, [](auto i) { return "(a" + i + " - b" + i + ")^2/(2*t)"; })};
      if (name == "drifted_exchange") return {sum_over(n, [](auto i) { return "a" + i + "*(b" + i + " - t)"; })};
      break;
  }
  throw ConfigError("unknown catalog entry '" + std::string(name) + "'");
}

const char* kind_label(CatalogKind kind) {
  switch (kind) {
    case CatalogKind::system: return "system";
    case CatalogKind::section: return "section";
    case CatalogKind::potential: return "potential";
    case CatalogKind::generating: return "generating";
  }
  return "";
}

}  // namespace

const std::vector<CatalogEntry>& catalog() {
  static const std::vector<CatalogEntry> entries = {
      {"free_particle", CatalogKind::system, "flow: q+pt+B, p const"},
      {"translation", CatalogKind::system, "flow: q+B, p const"},
      {"harmonic", CatalogKind::system, "flow: rotation, q cos t + p sin t"},
      {"pendulum", CatalogKind::system, "no closed form; strong-convergence and HJ-residual benchmark"},
      {"quadratic_potential", CatalogKind::system, "linear flow: per-step Cayley products", 1.0, true},
      {"zero", CatalogKind::section, "lift: zero section (a, 0)"},
      {"linear", CatalogKind::section, "lift: (a, c); with free_particle S~ = cx - c^2 t/2 - cB", 1.0, true},
      {"quadratic", CatalogKind::section, "lift: (a, c a)", 1.0, true},
      {"zero", CatalogKind::potential, "heat kernel: Phi_t = Phi_0 * Gaussian"},
      {"quadratic", CatalogKind::potential, "linear flow; Gaussian-integration oracle", 1.0, true},
      {"exchange", CatalogKind::generating, "psi(q,p) = (p,-q)"},
      {"free_flow", CatalogKind::generating, "psi_t(q,p) = (q - t p, p); K0 = 0 for h0 = p^2/2"},
      {"drifted_exchange", CatalogKind::generating, "psi_t(q,p) = (p + t, -q); reduces h = (q, p)"},
  };
  return entries;
}

const CatalogEntry& catalog_entry(std::string_view name, CatalogKind kind) {
  for (const auto& e : catalog()) {
    if (e.name == name && e.kind == kind) return e;
  }
  throw ConfigError("unknown " + std::string(kind_label(kind)) + " catalog entry '" + std::string(name) + "'");
}

std::vector<std::string> catalog_expressions(std::string_view name, CatalogKind kind, int n) {
  return expressions(name, kind, n, catalog_entry(name, kind).parameter);
}

std::vector<std::string> catalog_expressions(std::string_view name, CatalogKind kind, int n,
                                             double parameter) {
  catalog_entry(name, kind);
  return expressions(name, kind, n, parameter);
}

std::string list_catalog() {
  std::string out;
  for (const auto& e : catalog()) {
    const auto ex = catalog_expressions(e.name, e.kind, 1);
    std::string body;
    switch (e.kind) {
      case CatalogKind::system:
        for (std::size_t j = 0; j < ex.size(); ++j) {
          if (j) body += ", ";
          body += "h" + std::to_string(j) + " = " + ex[j];
        }
        break;
      case CatalogKind::section: body = "f = " + ex[0]; break;
      case CatalogKind::potential: body = "V = " + ex[0]; break;
      case CatalogKind::generating: body = "S = " + ex[0]; break;
    }
    // Parameterized entries display the symbol rather than its default value.
    if (e.has_parameter) {
      const std::string sym = e.kind == CatalogKind::section ? "c" : "kappa";
      const std::string value = num(e.parameter);
      for (std::size_t pos; (pos = body.find(value + "*")) != std::string::npos;) {
        body.replace(pos, value.size(), sym);
      }
    }
    out += std::string(kind_label(e.kind)) + "  " + e.name + ": " + body + "   [" + e.oracle + "]\n";
  }
  return out;
}

}  // namespace shj
