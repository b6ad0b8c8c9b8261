#include "srjet/system.hpp"

#include <Eigen/SVD>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace srjet {

using nlohmann::json;

ControlGrid ControlGrid::constant(int k, int N, double t0, double t1,
                                  const Eigen::VectorXd& u) {
  ControlGrid g;
  g.k = k;
  g.N = N;
  g.t0 = t0;
  g.t1 = t1;
  g.values = u.replicate(1, N);
  return g;
}

ControlGrid ControlGrid::zero(int k, int N, double t0, double t1) {
  return constant(k, N, t0, t1, Eigen::VectorXd::Zero(k));
}

SRSystem builtin_system(const std::string& name) {
  if (name == "martinet") {
    SRSystem s;
    s.name = "martinet";
    s.fields = VectorFieldSet::from_strings(
        {"x", "y", "z"}, {{"1", "0", "0"}, {"0", "1-x", "x^2/2"}});
    return s;
  }
  if (name == "heisenberg") {
    SRSystem s;
    s.name = "heisenberg";
    s.fields = VectorFieldSet::from_strings(
        {"x", "y", "z"}, {{"1", "0", "-y/2"}, {"0", "1", "x/2"}});
    return s;
  }
  throw ConfigError("unknown system '" + name +
                    "' (available: martinet, heisenberg)");
}

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError(msg);
}

void check_finite(double v, const std::string& what) {
  require(std::isfinite(v), "non-finite value in " + what);
}

SRSystem system_from_json(const json& j) {
  if (j.is_string()) return builtin_system(j.get<std::string>());
  require(j.is_object(), "system must be a name or an object");
  if (j.contains("name") && !j.contains("fields"))
    return builtin_system(j.at("name").get<std::string>());
  require(j.contains("coords") && j.contains("fields"),
          "inline system needs 'coords' and 'fields'");
  std::vector<std::string> coords =
      j.at("coords").get<std::vector<std::string>>();
  std::vector<std::vector<std::string>> fields =
      j.at("fields").get<std::vector<std::vector<std::string>>>();
  SRSystem s;
  s.name = j.value("name", std::string("custom"));
  try {
    s.fields = VectorFieldSet::from_strings(coords, fields);
  } catch (const ParseError& e) {
    throw ConfigError(std::string("field expression error: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return s;
}

ControlGrid control_from_json(const json& j, int k, int N, double t0,
                              double t1) {
  if (j.is_object()) {
    std::string profile = j.value("profile", std::string());
    if (profile == "zero") return ControlGrid::zero(k, N, t0, t1);
    throw ConfigError("unknown control profile '" + profile + "'");
  }
  require(j.is_array() && !j.empty(), "control must be an array");
  if (j.front().is_array()) {
    // explicit samples: k arrays of N values
    require(static_cast<int>(j.size()) == k,
            "control has wrong number of rows (expected k)");
    ControlGrid g;
    g.k = k;
    g.N = N;
    g.t0 = t0;
    g.t1 = t1;
    g.values.resize(k, N);
    for (int i = 0; i < k; ++i) {
      require(static_cast<int>(j[i].size()) == N,
              "control row length does not match N");
      for (int s = 0; s < N; ++s) {
        g.values(i, s) = j[i][s].get<double>();
        check_finite(g.values(i, s), "control");
      }
    }
    return g;
  }
  require(static_cast<int>(j.size()) == k,
          "constant control length does not match k");
  Eigen::VectorXd u(k);
  for (int i = 0; i < k; ++i) {
    u(i) = j[i].get<double>();
    check_finite(u(i), "control");
  }
  return ControlGrid::constant(k, N, t0, t1, u);
}

}  // namespace

Scenario load_scenario_text(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  require(j.is_object(), "config must be an object");
  for (const char* key : {"system", "q0", "N", "u"})
    require(j.contains(key), std::string("missing config field '") + key + "'");

  Scenario s;
  s.system = system_from_json(j.at("system"));
  const int n = s.system.fields.n();
  const int k = s.system.fields.k();

  std::vector<double> q0 = j.at("q0").get<std::vector<double>>();
  require(static_cast<int>(q0.size()) == n, "q0 length does not match n");
  s.q0.resize(n);
  for (int m = 0; m < n; ++m) {
    s.q0(m) = q0[m];
    check_finite(s.q0(m), "q0");
  }

  if (j.contains("t")) {
    auto t = j.at("t").get<std::vector<double>>();
    require(t.size() == 2, "t must be [t0, t1]");
    s.t0 = t[0];
    s.t1 = t[1];
  } else {
    s.t0 = j.value("t0", 0.0);
    s.t1 = j.value("t1", 1.0);
  }
  check_finite(s.t0, "t0");
  check_finite(s.t1, "t1");
  require(s.t1 > s.t0, "need t1 > t0");

  s.N = j.at("N").get<int>();
  require(s.N >= 1, "need N >= 1");

  s.u = control_from_json(j.at("u"), k, s.N, s.t0, s.t1);

  if (!fields_independent_at(s.system, s.q0))
    throw ConfigError("fields are linearly dependent at q0");
  return s;
}

Scenario load_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read scenario file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return load_scenario_text(ss.str());
}

std::string serialize_scenario(const Scenario& s) {
  json j;
  if (s.system.name == "martinet" || s.system.name == "heisenberg") {
    j["system"] = s.system.name;
  } else {
    json sys;
    sys["name"] = s.system.name;
    sys["coords"] = s.system.fields.coordinates();
    std::vector<std::vector<std::string>> fields;
    for (int i = 0; i < s.system.fields.k(); ++i) {
      std::vector<std::string> row;
      for (int m = 0; m < s.system.fields.n(); ++m)
        row.push_back(to_string(s.system.fields.component(i, m),
                                s.system.fields.coordinates()));
      fields.push_back(row);
    }
    sys["fields"] = fields;
    j["system"] = sys;
  }
  j["q0"] = std::vector<double>(s.q0.data(), s.q0.data() + s.q0.size());
  j["t"] = {s.t0, s.t1};
  j["N"] = s.N;
  std::vector<std::vector<double>> u(s.k(), std::vector<double>(s.N));
  for (int i = 0; i < s.k(); ++i)
    for (int step = 0; step < s.N; ++step) u[i][step] = s.u.values(i, step);
  j["u"] = u;
  return j.dump(2);
}

bool fields_independent_at(const SRSystem& sys, const Eigen::VectorXd& q,
                           double tol) {
  const int n = sys.fields.n();
  const int k = sys.fields.k();
  Eigen::MatrixXd M(n, k);
  for (int i = 0; i < k; ++i) M.col(i) = sys.fields.eval_field(i, q);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0) return false;
  return sv(sv.size() - 1) > tol * std::max(1.0, sv(0));
}

}  // namespace srjet
