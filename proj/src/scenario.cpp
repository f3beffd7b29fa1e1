#include "holonome/scenario.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <functional>
#include <numbers>
#include <set>
#include <sstream>

namespace holonome {

namespace {

[[noreturn]] void schema_error(const std::string& at, const std::string& what) {
  throw Error(ErrorKind::Schema, (at.empty() ? "/" : at) + ": " + what);
}

[[noreturn]] void validation_error(const std::string& at, const std::string& what) {
  throw Error(ErrorKind::Validation, (at.empty() ? "/" : at) + ": " + what);
}

// Re-raise a library error with the document location prepended.
[[noreturn]] void relocate(const Error& e, const std::string& at) {
  const std::string what = e.what();
  const std::size_t prefix = to_string(e.kind()).size() + 2;
  throw Error(e.kind(), at + ": " + (what.size() > prefix ? what.substr(prefix) : what));
}

std::string child(const std::string& at, const std::string& key) { return at + "/" + key; }
std::string child(const std::string& at, std::size_t i) { return at + "/" + std::to_string(i); }

/// Object node with its JSON pointer; rejects unknown keys.
class Node {
 public:
  Node(const Json& j, std::string at) : j_(j), at_(std::move(at)) {
    if (!j_.is_object()) schema_error(at_, "expected an object");
  }

  const Json& required(const std::string& key) const {
    auto it = j_.find(key);
    if (it == j_.end()) schema_error(at_, "missing required field '" + key + "'");
    return *it;
  }
  const Json* optional(const std::string& key) const {
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }
  bool has(const std::string& key) const { return j_.contains(key); }
  void allow_only(std::initializer_list<std::string_view> keys) const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (std::find(keys.begin(), keys.end(), it.key()) == keys.end())
        schema_error(child(at_, it.key()), "unknown field");
  }
  std::string at(const std::string& key) const { return child(at_, key); }
  const std::string& at() const noexcept { return at_; }
  const Json& json() const noexcept { return j_; }

 private:
  const Json& j_;
  std::string at_;
};

double as_number(const Json& j, const std::string& at) {
  if (!j.is_number()) schema_error(at, "expected a number");
  return j.get<double>();
}

int as_int(const Json& j, const std::string& at) {
  if (!j.is_number_integer()) schema_error(at, "expected an integer");
  return j.get<int>();
}

std::string as_string(const Json& j, const std::string& at) {
  if (!j.is_string()) schema_error(at, "expected a string");
  return j.get<std::string>();
}

bool as_bool(const Json& j, const std::string& at) {
  if (!j.is_boolean()) schema_error(at, "expected a boolean");
  return j.get<bool>();
}

const Json& as_array(const Json& j, const std::string& at) {
  if (!j.is_array()) schema_error(at, "expected an array");
  return j;
}

Vector as_vector(const Json& j, const std::string& at, int n = -1) {
  as_array(j, at);
  if (n >= 0 && static_cast<int>(j.size()) != n)
    schema_error(at, "expected " + std::to_string(n) + " numbers, got " + std::to_string(j.size()));
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = as_number(j[i], child(at, i));
  return v;
}

std::vector<double> as_numbers(const Json& j, const std::string& at) {
  const Vector v = as_vector(j, at);
  return {v.data(), v.data() + v.size()};
}

Matrix as_matrix(const Json& j, const std::string& at, int k) {
  as_array(j, at);
  if (static_cast<int>(j.size()) != k) schema_error(at, "expected " + std::to_string(k) + " rows");
  Matrix m(k, k);
  for (int i = 0; i < k; ++i) m.row(i) = as_vector(j[static_cast<std::size_t>(i)], child(at, static_cast<std::size_t>(i)), k).transpose();
  return m;
}

Expr as_expr(const Json& j, const std::string& at, int dim, std::span<const std::string> aliases = {}) {
  if (j.is_number()) return Expr::constant(j.get<double>(), dim);
  const std::string src = as_string(j, at);
  try {
    return parse(src, dim, aliases);
  } catch (const Error& e) {
    relocate(e, at);
  }
}

std::vector<Expr> as_exprs(const Json& j, const std::string& at, int dim, std::span<const std::string> aliases = {}) {
  as_array(j, at);
  std::vector<Expr> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(as_expr(j[i], child(at, i), dim, aliases));
  return out;
}

const std::vector<std::string> kPathAliases = {"t"};
const std::vector<std::string> kFamilyAliases = {"t", "s"};

// ---------------------------------------------------------------------------
// Connection

StructureGroup parse_group(const Json& j, const std::string& at) {
  const Node node(j, at);
  node.allow_only({"kind", "k"});
  const std::string kind = as_string(node.required("kind"), node.at("kind"));
  if (kind == "U1") {
    if (node.has("k") && as_int(node.required("k"), node.at("k")) != 2) schema_error(node.at("k"), "U1 is realized with k = 2");
    return StructureGroup::u1();
  }
  const int k = as_int(node.required("k"), node.at("k"));
  if (k < 1 || k > 4) schema_error(node.at("k"), "k must lie in 1..4");
  if (kind == "SO") return StructureGroup::so(k);
  if (kind == "GL") return StructureGroup::gl(k);
  schema_error(node.at("kind"), "expected one of SO, GL, U1");
}

ConnectionForm parse_inline_connection(const Node& node) {
  node.allow_only({"group", "charts", "maps", "transitions", "name"});
  const StructureGroup group = parse_group(node.required("group"), node.at("group"));
  const int k = group.k;
  const std::string charts_at = node.at("charts");
  const Json& charts_json = as_array(node.required("charts"), charts_at);
  if (charts_json.empty()) schema_error(charts_at, "at least one chart is required");

  std::vector<Chart> charts;
  std::vector<std::vector<std::vector<std::vector<Expr>>>> tables;
  int dim = -1;
  for (std::size_t c = 0; c < charts_json.size(); ++c) {
    const Node chart(charts_json[c], child(charts_at, c));
    chart.allow_only({"id", "lo", "hi", "coefficients"});
    Chart out;
    out.id = as_int(chart.required("id"), chart.at("id"));
    out.domain.lo = as_vector(chart.required("lo"), chart.at("lo"), dim);
    if (dim < 0) dim = static_cast<int>(out.domain.lo.size());
    if (dim < 1 || dim > static_cast<int>(kMaxVars)) schema_error(chart.at("lo"), "chart dimension must lie in 1.." + std::to_string(kMaxVars));
    out.domain.hi = as_vector(chart.required("hi"), chart.at("hi"), dim);
    charts.push_back(out);

    const std::string coef_at = chart.at("coefficients");
    const Json& coef = as_array(chart.required("coefficients"), coef_at);
    if (static_cast<int>(coef.size()) != dim) schema_error(coef_at, "expected one k x k matrix per coordinate");
    std::vector<std::vector<std::vector<Expr>>> table;
    for (std::size_t mu = 0; mu < coef.size(); ++mu) {
      const std::string mat_at = child(coef_at, mu);
      const Json& rows = as_array(coef[mu], mat_at);
      if (static_cast<int>(rows.size()) != k) schema_error(mat_at, "expected " + std::to_string(k) + " rows");
      std::vector<std::vector<Expr>> m;
      for (std::size_t i = 0; i < rows.size(); ++i) {
        const std::string row_at = child(mat_at, i);
        const Json& row = as_array(rows[i], row_at);
        if (static_cast<int>(row.size()) != k) schema_error(row_at, "expected " + std::to_string(k) + " entries");
        m.push_back(as_exprs(row, row_at, dim));
      }
      table.push_back(std::move(m));
    }
    tables.push_back(std::move(table));
  }

  std::vector<ChartMap> maps;
  if (const Json* mj = node.optional("maps")) {
    const std::string maps_at = node.at("maps");
    as_array(*mj, maps_at);
    for (std::size_t i = 0; i < mj->size(); ++i) {
      const Node m((*mj)[i], child(maps_at, i));
      m.allow_only({"from", "to", "coords"});
      ChartMap map;
      map.from = as_int(m.required("from"), m.at("from"));
      map.to = as_int(m.required("to"), m.at("to"));
      map.coords = as_exprs(m.required("coords"), m.at("coords"), dim);
      if (static_cast<int>(map.coords.size()) != dim) schema_error(m.at("coords"), "expected one expression per coordinate");
      maps.push_back(std::move(map));
    }
  }

  std::vector<GaugeTransition> transitions;
  if (const Json* tj = node.optional("transitions")) {
    const std::string tr_at = node.at("transitions");
    as_array(*tj, tr_at);
    for (std::size_t i = 0; i < tj->size(); ++i) {
      const Node t((*tj)[i], child(tr_at, i));
      t.allow_only({"from", "to", "gauge"});
      GaugeTransition tr;
      tr.from = as_int(t.required("from"), t.at("from"));
      tr.to = as_int(t.required("to"), t.at("to"));
      const std::string g_at = t.at("gauge");
      const Json& rows = as_array(t.required("gauge"), g_at);
      if (static_cast<int>(rows.size()) != k) schema_error(g_at, "expected " + std::to_string(k) + " rows");
      std::vector<std::vector<Expr>> entries;
      for (std::size_t r = 0; r < rows.size(); ++r) {
        entries.push_back(as_exprs(rows[r], child(g_at, r), dim));
        if (static_cast<int>(entries.back().size()) != k)
          schema_error(child(g_at, r), "expected " + std::to_string(k) + " entries");
      }
      tr.gauge = std::make_shared<ExprMatrixField>(std::move(entries));
      transitions.push_back(std::move(tr));
    }
  }

  std::string name = "inline";
  if (const Json* nj = node.optional("name")) name = as_string(*nj, node.at("name"));
  try {
    Atlas atlas(charts, maps);
    std::vector<std::shared_ptr<const CoefficientField>> fields;
    for (auto& t : tables) fields.push_back(std::make_shared<ExprCoefficients>(dim, k, std::move(t)));
    return ConnectionForm(group, std::move(atlas), std::move(fields), std::move(transitions), name);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Schema) throw;
    relocate(Error(ErrorKind::Validation, e.what()), node.at());
  }
}

ConnectionForm parse_connection(const Json& j, const std::string& at) {
  const Node node(j, at);
  if (node.has("builtin")) {
    node.allow_only({"builtin"});
    const std::string name = as_string(node.required("builtin"), node.at("builtin"));
    try {
      return builtin(name);
    } catch (const Error& e) {
      relocate(e, node.at("builtin"));
    }
  }
  return parse_inline_connection(node);
}

// ---------------------------------------------------------------------------
// Solver

SolverConfig parse_solver(const Json* j, const std::string& at) {
  SolverConfig cfg;
  if (!j) return cfg;
  const Node node(*j, at);
  node.allow_only({"method", "h", "project_every", "tol"});
  if (const Json* m = node.optional("method")) {
    const std::string method = as_string(*m, node.at("method"));
    if (method == "rk4-fixed") {
      cfg.method = StepMethod::Rk4Fixed;
    } else if (method == "rk4-doubling") {
      cfg.method = StepMethod::Rk4Doubling;
    } else {
      schema_error(node.at("method"), "expected rk4-fixed or rk4-doubling");
    }
  }
  if (const Json* h = node.optional("h")) cfg.h = as_number(*h, node.at("h"));
  if (const Json* p = node.optional("project_every")) cfg.project_every = as_int(*p, node.at("project_every"));
  if (const Json* t = node.optional("tol")) cfg.tol = as_number(*t, node.at("tol"));
  try {
    cfg.validate();
  } catch (const Error& e) {
    relocate(Error(ErrorKind::Validation, e.what()), at);
  }
  return cfg;
}

// ---------------------------------------------------------------------------
// Paths

class PathResolver {
 public:
  PathResolver(const Json* defs, std::string at, const ConnectionForm& conn)
      : defs_(defs), at_(std::move(at)), conn_(conn) {
    if (defs_ && !defs_->is_object()) schema_error(at_, "expected an object of named paths");
  }

  std::map<std::string, PathSpec> resolve_all() {
    if (defs_)
      for (auto it = defs_->begin(); it != defs_->end(); ++it) get(it.key(), at_);
    return done_;
  }

  const PathSpec& get(const std::string& name, const std::string& referenced_at) {
    if (auto it = done_.find(name); it != done_.end()) return it->second;
    if (!defs_ || !defs_->contains(name)) validation_error(referenced_at, "undeclared path '" + name + "'");
    if (active_.count(name)) validation_error(child(at_, name), "path '" + name + "' refers to itself");
    active_.insert(name);
    PathSpec p = build((*defs_)[name], child(at_, name));
    active_.erase(name);
    return done_.emplace(name, std::move(p)).first->second;
  }

 private:
  int chart_of(const Node& node) {
    const int id = node.has("chart") ? as_int(node.required("chart"), node.at("chart")) : conn_.atlas().charts().front().id;
    if (!conn_.atlas().has_chart(id)) validation_error(node.at("chart"), "unknown chart " + std::to_string(id));
    return id;
  }

  std::string name_ref(const Json& j, const std::string& at) { return as_string(j, at); }

  PathSpec build(const Json& j, const std::string& at) {
    const Node node(j, at);
    const int n = conn_.dim();
    try {
      if (node.has("coords")) {
        node.allow_only({"chart", "coords"});
        auto coords = as_exprs(node.required("coords"), node.at("coords"), 1, kPathAliases);
        if (static_cast<int>(coords.size()) != n) schema_error(node.at("coords"), "expected " + std::to_string(n) + " expressions");
        return path_from_exprs(chart_of(node), std::move(coords));
      }
      if (node.has("line")) {
        node.allow_only({"line"});
        const Node line(node.required("line"), node.at("line"));
        line.allow_only({"chart", "from", "to"});
        return straight_line(chart_of(line), as_vector(line.required("from"), line.at("from"), n),
                             as_vector(line.required("to"), line.at("to"), n));
      }
      if (node.has("polygon")) {
        node.allow_only({"polygon"});
        const Node poly(node.required("polygon"), node.at("polygon"));
        poly.allow_only({"chart", "points", "closed"});
        const int chart = chart_of(poly);
        const Json& pts = as_array(poly.required("points"), poly.at("points"));
        if (pts.size() < 2) schema_error(poly.at("points"), "a polygon needs at least two points");
        std::vector<Vector> vs;
        for (std::size_t i = 0; i < pts.size(); ++i) vs.push_back(as_vector(pts[i], child(poly.at("points"), i), n));
        const bool closed = poly.has("closed") && as_bool(poly.required("closed"), poly.at("closed"));
        if (closed) vs.push_back(vs.front());
        return polygon(chart, vs);
      }
      if (node.has("juxtapose")) {
        node.allow_only({"juxtapose"});
        const Json& parts = as_array(node.required("juxtapose"), node.at("juxtapose"));
        if (parts.size() < 2) schema_error(node.at("juxtapose"), "juxtapose needs at least two paths");
        const std::string at0 = child(node.at("juxtapose"), std::size_t{0});
        PathSpec out = get(name_ref(parts[0], at0), at0);
        for (std::size_t i = 1; i < parts.size(); ++i) {
          const std::string ati = child(node.at("juxtapose"), i);
          out = juxtapose(out, get(name_ref(parts[i], ati), ati), &conn_.atlas());
        }
        return out;
      }
      if (node.has("reverse")) {
        node.allow_only({"reverse"});
        return reverse(get(name_ref(node.required("reverse"), node.at("reverse")), node.at("reverse")));
      }
      if (node.has("reparametrize")) {
        node.allow_only({"reparametrize", "alpha"});
        const PathSpec& base = get(name_ref(node.required("reparametrize"), node.at("reparametrize")), node.at("reparametrize"));
        return reparametrize(base, as_expr(node.required("alpha"), node.at("alpha"), 1, kPathAliases));
      }
      if (node.has("restrict")) {
        node.allow_only({"restrict", "from", "to"});
        const PathSpec& base = get(name_ref(node.required("restrict"), node.at("restrict")), node.at("restrict"));
        return restrict_path(base, as_number(node.required("from"), node.at("from")),
                             as_number(node.required("to"), node.at("to")));
      }
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::Schema || e.kind() == ErrorKind::Validation) throw;
      throw Error(ErrorKind::Validation, at + ": " + e.what());
    }
    schema_error(at, "expected one of coords, line, polygon, juxtapose, reverse, reparametrize, restrict");
  }

  PathSpec polygon(int chart, const std::vector<Vector>& vs) {
    PathSpec out = straight_line(chart, vs[0], vs[1]);
    const std::size_t legs = vs.size() - 1;
    // Equal parameter share per leg.
    for (std::size_t i = 1; i < legs; ++i) {
      const PathSpec leg = straight_line(chart, vs[i], vs[i + 1]);
      std::vector<PathSegment> segs = out.segments();
      const double scale = static_cast<double>(i) / static_cast<double>(i + 1);
      for (auto& s : segs) {
        s.global_begin *= scale;
        s.global_end *= scale;
      }
      PathSegment tail = leg.segments().front();
      tail.global_begin = scale;
      tail.global_end = 1.0;
      segs.back().global_end = scale;
      segs.push_back(tail);
      out = PathSpec::from_segments(std::move(segs));
    }
    return out;
  }

  const Json* defs_;
  std::string at_;
  const ConnectionForm& conn_;
  std::map<std::string, PathSpec> done_;
  std::set<std::string> active_;
};

std::map<std::string, HomotopyFamily> parse_families(const Json* defs, const std::string& at, const ConnectionForm& conn) {
  std::map<std::string, HomotopyFamily> out;
  if (!defs) return out;
  if (!defs->is_object()) schema_error(at, "expected an object of named families");
  for (auto it = defs->begin(); it != defs->end(); ++it) {
    const Node node(it.value(), child(at, it.key()));
    node.allow_only({"chart", "coords", "s_samples"});
    const int chart = node.has("chart") ? as_int(node.required("chart"), node.at("chart")) : conn.atlas().charts().front().id;
    if (!conn.atlas().has_chart(chart)) validation_error(node.at("chart"), "unknown chart " + std::to_string(chart));
    auto coords = as_exprs(node.required("coords"), node.at("coords"), 2, kFamilyAliases);
    if (static_cast<int>(coords.size()) != conn.dim())
      schema_error(node.at("coords"), "expected " + std::to_string(conn.dim()) + " expressions");
    const int samples = node.has("s_samples") ? as_int(node.required("s_samples"), node.at("s_samples")) : 11;
    try {
      out.emplace(it.key(), HomotopyFamily(chart, std::move(coords), samples, it.key()));
    } catch (const Error& e) {
      relocate(Error(ErrorKind::Validation, e.what()), node.at());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Tasks

const std::set<std::string> kTaskTypes = {"transport",  "holonomy",           "verify_axioms", "reconstruct",
                                          "roundtrip", "shrinking_curvature", "homotopy_scan", "flatness_verdict"};

void require_path(const Scenario& sc, const Json& params, const std::string& key, const std::string& at) {
  const Node node(params, at);
  const std::string name = as_string(node.required(key), node.at(key));
  if (!sc.paths.count(name)) validation_error(node.at(key), "undeclared path '" + name + "'");
}

void validate_task(const Scenario& sc, const TaskSpec& task, const std::string& at) {
  const Node node(task.params, at);
  const int n = sc.connection->dim();
  auto check_expect = [&](std::initializer_list<std::string_view> keys) {
    if (const Json* e = node.optional("expect")) Node(*e, node.at("expect")).allow_only(keys);
  };
  if (task.type == "transport") {
    node.allow_only({"path", "expect"});
    require_path(sc, task.params, "path", at);
    check_expect({"matrix", "tol"});
  } else if (task.type == "holonomy") {
    node.allow_only({"loop", "expect"});
    require_path(sc, task.params, "loop", at);
    check_expect({"matrix", "angle", "tol"});
  } else if (task.type == "verify_axioms") {
    node.allow_only({"tol", "reparametrizations", "juxtapositions", "constant_points"});
    if (const Json* r = node.optional("reparametrizations")) {
      as_array(*r, node.at("reparametrizations"));
      for (std::size_t i = 0; i < r->size(); ++i) {
        const std::string ri = child(node.at("reparametrizations"), i);
        Node(r->at(i), ri).allow_only({"path", "alpha"});
        require_path(sc, r->at(i), "path", ri);
        as_expr(Node(r->at(i), ri).required("alpha"), child(ri, "alpha"), 1, kPathAliases);
      }
    }
    if (const Json* jx = node.optional("juxtapositions")) {
      as_array(*jx, node.at("juxtapositions"));
      for (std::size_t i = 0; i < jx->size(); ++i) {
        const std::string ji = child(node.at("juxtapositions"), i);
        Node(jx->at(i), ji).allow_only({"first", "second"});
        require_path(sc, jx->at(i), "first", ji);
        require_path(sc, jx->at(i), "second", ji);
      }
    }
    if (const Json* cp = node.optional("constant_points")) {
      as_array(*cp, node.at("constant_points"));
      for (std::size_t i = 0; i < cp->size(); ++i) as_vector(cp->at(i), child(node.at("constant_points"), i), n);
    }
  } else if (task.type == "reconstruct") {
    node.allow_only({"h", "grid", "csv", "expect"});
    check_expect({"max_error"});
  } else if (task.type == "roundtrip") {
    node.allow_only({"steps", "grid"});
  } else if (task.type == "shrinking_curvature") {
    node.allow_only({"chart", "at", "mu", "nu", "eps", "expect"});
    as_vector(node.required("at"), node.at("at"), n);
    const int mu = as_int(node.required("mu"), node.at("mu"));
    const int nu = as_int(node.required("nu"), node.at("nu"));
    if (mu < 0 || mu >= n || nu < 0 || nu >= n || mu == nu) validation_error(node.at("nu"), "need distinct directions in 0.." + std::to_string(n - 1));
    check_expect({"tol"});
  } else if (task.type == "homotopy_scan") {
    node.allow_only({"family", "expect"});
    const std::string name = as_string(node.required("family"), node.at("family"));
    if (!sc.families.count(name)) validation_error(node.at("family"), "undeclared family '" + name + "'");
    check_expect({"max_spread", "min_spread"});
  } else if (task.type == "flatness_verdict") {
    node.allow_only({"grid", "expect"});
    check_expect({"verdict"});
    if (const Json* e = node.optional("expect")) {
      if (const Json* v = Node(*e, node.at("expect")).optional("verdict")) {
        const std::string verdict = as_string(*v, child(node.at("expect"), "verdict"));
        if (verdict != "FLAT" && verdict != "CURVED" && verdict != "INCONSISTENT")
          validation_error(child(node.at("expect"), "verdict"), "expected FLAT, CURVED or INCONSISTENT");
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Report helpers

OrderedJson matrix_json(const Matrix& m) {
  OrderedJson rows = OrderedJson::array();
  for (int i = 0; i < m.rows(); ++i) {
    OrderedJson row = OrderedJson::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

OrderedJson vector_json(const Vector& v) {
  OrderedJson out = OrderedJson::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

OrderedJson point_json(const ChartPoint& p) { return {{"chart", p.chart_id}, {"coords", vector_json(p.coords)}}; }

OrderedJson group_json(const Matrix& g, const StructureGroup& group) {
  OrderedJson out = {{"matrix", matrix_json(g)}};
  if (group.orthogonal()) {
    out["orthogonality_defect"] = orthogonality_defect(g);
  } else {
    out["det"] = g.determinant();
  }
  return out;
}

OrderedJson solver_json(const SolverConfig& cfg) {
  return {{"method", cfg.method == StepMethod::Rk4Fixed ? "rk4-fixed" : "rk4-doubling"},
          {"h", cfg.h},
          {"project_every", cfg.project_every},
          {"tol", cfg.tol}};
}

double number_or(const Json& params, const std::string& key, double fallback) {
  return params.contains(key) ? params.at(key).get<double>() : fallback;
}

int int_or(const Json& params, const std::string& key, int fallback) {
  return params.contains(key) ? params.at(key).get<int>() : fallback;
}

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string sanitize(const std::string& s) {
  std::string out;
  for (char c : s) out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_') ? c : '_';
  return out;
}

void write_trace(const std::filesystem::path& file, const LiftedPath& lift, int n, int k) {
  std::ofstream os(file);
  if (!os) throw Error(ErrorKind::InvalidArgument, "cannot write " + file.string());
  os << "t,chart";
  for (int i = 0; i < n; ++i) os << ",x" << (i + 1);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) os << ",U[" << i << "][" << j << "]";
  os << '\n';
  char buf[64];
  for (const auto& s : lift.samples) {
    std::snprintf(buf, sizeof buf, "%.17g", s.t);
    os << buf << ',' << s.point.chart_id;
    for (int i = 0; i < n; ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", s.point.coords[i]);
      os << ',' << buf;
    }
    const Matrix& u = s.fiber.matrix();
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j) {
        std::snprintf(buf, sizeof buf, "%.17g", u(i, j));
        os << ',' << buf;
      }
    os << '\n';
  }
}

struct TaskContext {
  const Scenario& sc;
  const ConnectionForm& conn;
  const SolverConfig& cfg;
  const RunOptions& options;
  std::string file_stem;
};

// Sets results and, when an expectation or intrinsic criterion applies,
// returns whether it passed.
using TaskRunner = std::function<std::optional<bool>(const TaskContext&, const Json&, OrderedJson&)>;

std::optional<bool> run_transport(const TaskContext& ctx, const Json& params, OrderedJson& out) {
  const PathSpec& path = ctx.sc.paths.at(params.at("path").get<std::string>());
  const TransportResult r = transport(ctx.conn, path, ctx.cfg);
  out["results"] = {{"start", point_json(r.start)},
                    {"end", point_json(r.end)},
                    {"g", group_json(r.g.matrix(), ctx.conn.group())},
                    {"step_count", r.step_count},
                    {"est_error", r.est_error}};
  if (ctx.options.trace_csv) {
    const auto file = ctx.file_stem + ".csv";
    write_trace(ctx.options.out_dir / file, lift_path(ctx.conn, path, GroupElement::identity(ctx.conn.group()), ctx.cfg),
                ctx.conn.dim(), ctx.conn.k());
    out["results"]["trace"] = file;
  }
  if (!params.contains("expect")) return std::nullopt;
  const Json& e = params.at("expect");
  const double tol = number_or(e, "tol", 1e-9);
  const Matrix expected = as_matrix(e.at("matrix"), "/expect/matrix", ctx.conn.k());
  const double dev = (r.g.matrix() - expected).norm();
  out["deviation"] = dev;
  return dev <= tol;
}

std::optional<bool> run_holonomy(const TaskContext& ctx, const Json& params, OrderedJson& out) {
  const PathSpec& loop = ctx.sc.paths.at(params.at("loop").get<std::string>());
  const HolonomyResult h = holonomy(ctx.conn, loop, ctx.cfg);
  out["results"] = {{"base", point_json(h.base)}, {"g", group_json(h.g.matrix(), ctx.conn.group())}};
  out["results"]["angle"] = h.angle ? OrderedJson(*h.angle) : OrderedJson(nullptr);
  out["results"]["step_count"] = h.step_count;
  if (ctx.options.trace_csv) {
    const auto file = ctx.file_stem + ".csv";
    write_trace(ctx.options.out_dir / file, lift_path(ctx.conn, loop, GroupElement::identity(ctx.conn.group()), ctx.cfg),
                ctx.conn.dim(), ctx.conn.k());
    out["results"]["trace"] = file;
  }
  if (!params.contains("expect")) return std::nullopt;
  const Json& e = params.at("expect");
  const double tol = number_or(e, "tol", 1e-6);
  double dev = 0.0;
  if (e.contains("angle")) {
    if (!h.angle) throw Error(ErrorKind::InvalidArgument, "angle expectation needs an SO(2), U(1) or SO(3) connection");
    dev = std::abs(wrap_angle(*h.angle - e.at("angle").get<double>()));
  }
  if (e.contains("matrix"))
    dev = std::max(dev, (h.g.matrix() - as_matrix(e.at("matrix"), "/expect/matrix", ctx.conn.k())).norm());
  out["deviation"] = dev;
  return dev <= tol;
}

std::optional<bool> run_axioms(const TaskContext& ctx, const Json& params, OrderedJson& out) {
  const double tol = number_or(params, "tol", 1e-7);
  AxiomSuite suite;
  const bool custom = params.contains("reparametrizations") || params.contains("juxtapositions") ||
                      params.contains("constant_points");
  if (custom) {
    suite.atlas = &ctx.conn.atlas();
    if (params.contains("constant_points"))
      for (const auto& p : params.at("constant_points"))
        suite.constant_points.push_back({ctx.conn.atlas().charts().front().id, as_vector(p, "", ctx.conn.dim())});
    if (params.contains("reparametrizations"))
      for (const auto& r : params.at("reparametrizations"))
        suite.reparametrizations.emplace_back(ctx.sc.paths.at(r.at("path").get<std::string>()),
                                              as_expr(r.at("alpha"), "", 1, kPathAliases));
    if (params.contains("juxtapositions"))
      for (const auto& j : params.at("juxtapositions"))
        suite.juxtapositions.emplace_back(ctx.sc.paths.at(j.at("first").get<std::string>()),
                                          ctx.sc.paths.at(j.at("second").get<std::string>()));
  } else {
    suite = default_axiom_suite(ctx.conn);
  }
  const AxiomReport rep = verify_axioms(engine_oracle(ctx.conn, ctx.cfg), suite, tol);
  out["inputs"]["tol"] = tol;
  out["inputs"]["suite"] = custom ? "declared" : "default";
  out["results"] = {{"identity_deviation", rep.identity_deviation},
                    {"reparametrization_deviation", rep.reparametrization_deviation},
                    {"juxtaposition_deviation", rep.juxtaposition_deviation},
                    {"checks", rep.checks},
                    {"failures", rep.failures}};
  out["deviation"] =
      std::max({rep.identity_deviation, rep.reparametrization_deviation, rep.juxtaposition_deviation});
  return rep.pass;
}

std::optional<bool> run_reconstruct(const TaskContext& ctx, const Json& params, OrderedJson& out) {
  const double h = number_or(params, "h", 1e-3);
  const int grid = int_or(params, "grid", 5);
  out["inputs"]["h"] = h;
  out["inputs"]["grid"] = grid;
  const auto points = reconstruction_grid(ctx.conn.atlas(), grid);
  const ReconstructionTable table = reconstruct_connection(engine_oracle(ctx.conn, ctx.cfg), ctx.conn.group(), points, h, ctx.cfg.h);
  double worst = 0.0;
  std::vector<Matrix> exact;
  for (const auto& p : table.points) {
    ctx.conn.field(p.x.chart_id).values(std::span<const double>(p.x.coords.data(), static_cast<std::size_t>(p.x.coords.size())), exact);
    for (std::size_t mu = 0; mu < exact.size(); ++mu) worst = std::max(worst, (p.coefficients[mu] - exact[mu]).norm());
  }
  OrderedJson dropped = OrderedJson::array();
  for (const auto& d : table.dropped) dropped.push_back({{"point", point_json(d.x)}, {"reason", d.reason}});
  out["results"] = {{"points", table.points.size()}, {"dropped", dropped}, {"max_error", worst}};
  if (params.contains("csv")) {
    const std::string file = params.at("csv").get<std::string>();
    std::ofstream os(ctx.options.out_dir / file);
    if (!os) throw Error(ErrorKind::InvalidArgument, "cannot write " + file);
    write_reconstruction_csv(os, table);
    out["results"]["csv"] = file;
  }
  if (!params.contains("expect")) return std::nullopt;
  const double bound = number_or(params.at("expect"), "max_error", 3e-4);
  out["deviation"] = worst;
  return worst <= bound && table.dropped.empty();
}

std::optional<bool> run_roundtrip(const TaskContext& ctx, const Json& params, OrderedJson& out) {
  const std::vector<double> steps =
      params.contains("steps") ? as_numbers(params.at("steps"), "/steps") : std::vector<double>{1e-2, 5e-3, 2.5e-3};
  const int grid = int_or(params, "grid", 5);
  out["inputs"]["steps"] = steps;
  out["inputs"]["grid"] = grid;
  const RoundtripReport rep = roundtrip_report(ctx.conn, ctx.cfg, steps, grid);
  out["results"] = {{"errors", rep.errors},
                    {"order", std::isfinite(rep.order) ? OrderedJson(rep.order) : OrderedJson(nullptr)},
                    {"degenerate", rep.degenerate},
                    {"noise_floor", rep.noise_floor},
                    {"grid_points", rep.grid_points},
                    {"dropped", rep.dropped}};
  return rep.pass;
}

std::optional<bool> run_curvature(const TaskContext& ctx, const Json& params, OrderedJson& out) {
  const int chart = int_or(params, "chart", ctx.conn.atlas().charts().front().id);
  const ChartPoint x{chart, as_vector(params.at("at"), "/at", ctx.conn.dim())};
  const int mu = params.at("mu").get<int>();
  const int nu = params.at("nu").get<int>();
  const std::vector<double> eps =
      params.contains("eps") ? as_numbers(params.at("eps"), "/eps") : std::vector<double>{0.2, 0.1, 0.05};
  out["inputs"]["chart"] = chart;
  out["inputs"]["eps"] = eps;
  const CurvatureEstimate est = shrinking_loop_curvature(engine_oracle(ctx.conn, ctx.cfg), ctx.conn.atlas(), x, mu, nu, eps);
  const Matrix exact = curvature_at(ctx.conn, x).component(mu, nu);
  OrderedJson estimates = OrderedJson::array();
  for (const auto& m : est.estimates) estimates.push_back(matrix_json(m));
  const double dev = (est.extrapolated - exact).norm();
  out["results"] = {{"estimates", estimates},
                    {"extrapolated", matrix_json(est.extrapolated)},
                    {"order", std::isfinite(est.order) ? OrderedJson(est.order) : OrderedJson(nullptr)},
                    {"curvature_at", matrix_json(exact)},
                    {"error", dev}};
  if (!params.contains("expect")) return std::nullopt;
  out["deviation"] = dev;
  return dev <= number_or(params.at("expect"), "tol", 2e-3);
}

std::optional<bool> run_homotopy(const TaskContext& ctx, const Json& params, OrderedJson& out) {
  const HomotopyFamily& fam = ctx.sc.families.at(params.at("family").get<std::string>());
  out["inputs"]["s_samples"] = fam.s_samples();
  const HomotopyScan scan = homotopy_scan(engine_oracle(ctx.conn, ctx.cfg), fam);
  OrderedJson transports = OrderedJson::array();
  for (std::size_t i = 0; i < scan.s.size(); ++i)
    transports.push_back({{"s", scan.s[i]}, {"g", matrix_json(scan.transports[i])}});
  out["results"] = {{"spread", scan.spread}, {"transports", transports}};
  if (!params.contains("expect")) return std::nullopt;
  const Json& e = params.at("expect");
  bool ok = true;
  if (e.contains("max_spread")) ok = ok && scan.spread <= e.at("max_spread").get<double>();
  if (e.contains("min_spread")) ok = ok && scan.spread >= e.at("min_spread").get<double>();
  out["deviation"] = scan.spread;
  return ok;
}

std::optional<bool> run_verdict(const TaskContext& ctx, const Json& params, OrderedJson& out) {
  const int grid = int_or(params, "grid", 9);
  out["inputs"]["grid"] = grid;
  const FlatnessVerdict v = flatness_verdict(ctx.conn, ctx.cfg, grid);
  out["inputs"]["curvature_tol"] = v.curvature_tol;
  out["inputs"]["spread_tol"] = v.spread_tol;
  OrderedJson fams = OrderedJson::array();
  for (std::size_t i = 0; i < v.families.size(); ++i) fams.push_back({{"family", v.families[i]}, {"spread", v.spreads[i]}});
  out["results"] = {{"verdict", to_string(v.verdict)},
                    {"max_curvature", v.max_curvature},
                    {"worst", point_json(v.worst)},
                    {"families", fams}};
  if (params.contains("expect") && params.at("expect").contains("verdict"))
    return to_string(v.verdict) == params.at("expect").at("verdict").get<std::string>();
  return v.verdict != Verdict::Inconsistent;
}

const std::map<std::string, TaskRunner>& runners() {
  static const std::map<std::string, TaskRunner> table = {
      {"transport", run_transport},   {"holonomy", run_holonomy},          {"verify_axioms", run_axioms},
      {"reconstruct", run_reconstruct}, {"roundtrip", run_roundtrip},      {"shrinking_curvature", run_curvature},
      {"homotopy_scan", run_homotopy}, {"flatness_verdict", run_verdict}};
  return table;
}

}  // namespace

Scenario parse_scenario(const Json& doc, std::string source) {
  const Node root(doc, "");
  root.allow_only({"schema", "name", "description", "solver", "connection", "paths", "families", "tasks"});
  const std::string schema = as_string(root.required("schema"), "/schema");
  if (schema != "holonome-scenario/1") schema_error("/schema", "unsupported schema '" + schema + "'");

  Scenario sc;
  sc.source = std::move(source);
  sc.name = root.has("name") ? as_string(root.required("name"), "/name") : "scenario";
  if (const Json* d = root.optional("description")) as_string(*d, "/description");
  sc.solver = parse_solver(root.optional("solver"), "/solver");
  sc.connection = std::make_shared<const ConnectionForm>(parse_connection(root.required("connection"), "/connection"));
  sc.paths = PathResolver(root.optional("paths"), "/paths", *sc.connection).resolve_all();
  sc.families = parse_families(root.optional("families"), "/families", *sc.connection);

  if (const Json* tasks = root.optional("tasks")) {
    as_array(*tasks, "/tasks");
    std::set<std::string> ids;
    for (std::size_t i = 0; i < tasks->size(); ++i) {
      const std::string at = child("/tasks", i);
      const Node node((*tasks)[i], at);
      TaskSpec task;
      task.type = as_string(node.required("type"), node.at("type"));
      if (!kTaskTypes.count(task.type)) validation_error(node.at("type"), "unknown task type '" + task.type + "'");
      task.id = node.has("id") ? as_string(node.required("id"), node.at("id")) : task.type + "-" + std::to_string(i);
      if (!ids.insert(task.id).second) validation_error(node.at("id"), "duplicate task id '" + task.id + "'");
      task.params = node.json();
      task.params.erase("type");
      task.params.erase("id");
      validate_task(sc, task, at);
      sc.tasks.push_back(std::move(task));
    }
  }
  return sc;
}

Scenario load_scenario(const std::filesystem::path& file) {
  std::ifstream is(file);
  if (!is) throw Error(ErrorKind::Schema, file.string() + ": cannot open file");
  Json doc;
  try {
    doc = Json::parse(is);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorKind::Schema, file.string() + ": " + e.what());
  }
  return parse_scenario(doc, file.string());
}

RunOutcome run_scenario(const Scenario& scenario, const RunOptions& options) {
  SolverConfig cfg = scenario.solver;
  if (options.h) cfg.h = *options.h;
  if (options.tol) cfg.tol = *options.tol;
  cfg.validate();
  std::filesystem::create_directories(options.out_dir);

  const ConnectionForm& conn = *scenario.connection;
  OrderedJson report;
  report["schema"] = "holonome-report/1";
  report["scenario"] = scenario.name;
  report["source"] = scenario.source;
  report["generated_at"] = options.timestamp.empty() ? utc_now() : options.timestamp;
  report["connection"] = {{"name", conn.name()},
                          {"group", conn.group().name()},
                          {"dim", conn.dim()},
                          {"charts", conn.atlas().charts().size()},
                          {"max_overlap_defect", conn.max_overlap_defect()}};
  report["solver"] = solver_json(cfg);

  int passed = 0, failed = 0, errors = 0;
  OrderedJson entries = OrderedJson::array();
  for (std::size_t i = 0; i < scenario.tasks.size(); ++i) {
    const TaskSpec& task = scenario.tasks[i];
    OrderedJson entry;
    entry["index"] = i;
    entry["id"] = task.id;
    entry["type"] = task.type;
    entry["inputs"] = OrderedJson::parse(task.params.dump());
    entry["inputs"]["solver"] = solver_json(cfg);
    const TaskContext ctx{scenario, conn, cfg, options, "trace-" + std::to_string(i) + "-" + sanitize(task.id)};
    try {
      const std::optional<bool> verdict = runners().at(task.type)(ctx, task.params, entry);
      if (!verdict) {
        entry["status"] = "ok";
      } else if (*verdict) {
        entry["status"] = "pass";
        ++passed;
      } else {
        entry["status"] = "fail";
        ++failed;
      }
    } catch (const std::exception& e) {
      entry["status"] = "error";
      entry["error"] = e.what();
      ++errors;
    }
    entries.push_back(std::move(entry));
  }
  report["tasks"] = std::move(entries);

  RunOutcome outcome;
  outcome.exit_code = errors > 0 ? 1 : failed > 0 ? 2 : 0;
  report["summary"] = {{"tasks", scenario.tasks.size()},
                       {"passed", passed},
                       {"failed", failed},
                       {"errors", errors},
                       {"exit_code", outcome.exit_code}};
  std::ofstream os(options.out_dir / "report.json");
  if (!os) throw Error(ErrorKind::InvalidArgument, "cannot write report.json in " + options.out_dir.string());
  os << report.dump(2) << '\n';
  outcome.report = std::move(report);
  return outcome;
}

std::vector<std::filesystem::path> shipped_scenarios() {
  std::vector<std::filesystem::path> out;
  const std::filesystem::path dir(HOLONOME_SCENARIO_DIR);
  if (!std::filesystem::is_directory(dir)) return out;
  for (const auto& e : std::filesystem::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".json") out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace holonome
