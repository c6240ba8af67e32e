#include "scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "mshift/error.hpp"
#include "mshift/rng.hpp"

namespace mshift::cli {
namespace {

std::string child(const std::string& where, const std::string& key) { return where + "/" + key; }
std::string child(const std::string& where, std::size_t i) { return where + "/" + std::to_string(i); }

void only_keys(const Json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw SchemaError(where, "expected an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [k, v] : j.items())
    if (!ok.count(k)) throw SchemaError(child(where, k), "unknown key");
}

const Json& need(const Json& j, const std::string& key, const std::string& where) {
  if (!j.contains(key)) throw SchemaError(child(where, key), "required key missing");
  return j.at(key);
}

double number(const Json& j, const std::string& where) {
  if (!j.is_number()) throw SchemaError(where, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw SchemaError(where, "expected a finite number");
  return v;
}

std::size_t count(const Json& j, const std::string& where) {
  if (!j.is_number_integer() || j.get<long long>() < 0)
    throw SchemaError(where, "expected a non-negative integer");
  return j.get<std::size_t>();
}

std::vector<double> numbers(const Json& j, const std::string& where) {
  if (!j.is_array()) throw SchemaError(where, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(number(j[i], child(where, i)));
  return out;
}

double number_or(const Json& j, const std::string& key, const std::string& where, double fallback) {
  return j.contains(key) ? number(j.at(key), child(where, key)) : fallback;
}

std::size_t count_or(const Json& j, const std::string& key, const std::string& where, std::size_t fallback) {
  return j.contains(key) ? count(j.at(key), child(where, key)) : fallback;
}

Eigen::VectorXd vector_of(const Json& j, const std::string& where) {
  const auto v = numbers(j, where);
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::string text(const Json& j, const std::string& where) {
  if (!j.is_string()) throw SchemaError(where, "expected a string");
  return j.get<std::string>();
}

// ---- chain ----------------------------------------------------------------------

ChainSpec random_with_floor(std::size_t states, std::size_t horizon, double floor, std::uint64_t seed) {
  auto row = [&](CounterRng& rng) {
    Eigen::VectorXd r(static_cast<Eigen::Index>(states));
    for (Eigen::Index i = 0; i < r.size(); ++i) r(i) = -std::log1p(-rng.uniform());  // Exp(1)
    r /= r.sum();
    return Eigen::VectorXd((1.0 - floor) * r.array() + floor / static_cast<double>(states));
  };
  ChainSpec spec;
  CounterRng init(seed, 0);
  spec.initial = row(init);
  for (std::size_t j = 0; j < horizon; ++j) {
    CounterRng rng(seed, j + 1);
    Eigen::MatrixXd p(static_cast<Eigen::Index>(states), static_cast<Eigen::Index>(states));
    for (Eigen::Index i = 0; i < p.rows(); ++i) p.row(i) = row(rng).transpose();
    spec.kernels.push_back(std::move(p));
  }
  return spec;
}

ChainSpec parse_chain(const Json& c, const std::string& where) {
  const std::string gen = text(need(c, "generator", where), child(where, "generator"));
  ChainSpec spec;
  if (gen == "iid") {
    only_keys(c, where, {"generator", "horizon", "a", "law"});
    const auto law = vector_of(need(c, "law", where), child(where, "law"));
    const std::size_t N = count(need(c, "horizon", where), child(where, "horizon"));
    spec.kernels.assign(N, law.transpose().replicate(law.size(), 1));
    spec.initial = law;
  } else if (gen == "periodic") {
    only_keys(c, where, {"generator", "horizon", "a", "kernels", "initial"});
    const auto& ks = need(c, "kernels", where);
    if (!ks.is_array() || ks.empty()) throw SchemaError(child(where, "kernels"), "expected a non-empty array");
    std::vector<Eigen::MatrixXd> block;
    for (std::size_t i = 0; i < ks.size(); ++i) block.push_back(parse_matrix(ks[i], child(child(where, "kernels"), i)));
    const std::size_t N = count(need(c, "horizon", where), child(where, "horizon"));
    spec = repeat_block(block, vector_of(need(c, "initial", where), child(where, "initial")), N, 0.5);
  } else if (gen == "random-with-floor") {
    only_keys(c, where, {"generator", "horizon", "a", "states", "floor", "seed"});
    const std::size_t N = count(need(c, "horizon", where), child(where, "horizon"));
    const std::size_t m = count_or(c, "states", where, 2);
    const double floor = number_or(c, "floor", where, 0.2);
    if (m < 2) throw SchemaError(child(where, "states"), "need at least 2 states");
    if (!(floor > 0.0 && floor <= 1.0)) throw SchemaError(child(where, "floor"), "floor must lie in (0, 1]");
    spec = random_with_floor(m, N, floor, count_or(c, "seed", where, 1));
  } else if (gen == "explicit") {
    only_keys(c, where, {"generator", "a", "kernels", "initial", "allow_degenerate", "labels"});
    const auto& ks = need(c, "kernels", where);
    if (!ks.is_array() || ks.empty()) throw SchemaError(child(where, "kernels"), "expected a non-empty array");
    for (std::size_t i = 0; i < ks.size(); ++i)
      spec.kernels.push_back(parse_matrix(ks[i], child(child(where, "kernels"), i)));
    spec.initial = vector_of(need(c, "initial", where), child(where, "initial"));
    if (c.contains("allow_degenerate")) {
      if (!c.at("allow_degenerate").is_boolean()) throw SchemaError(child(where, "allow_degenerate"), "expected a boolean");
      spec.allow_degenerate = c.at("allow_degenerate").get<bool>();
    }
    if (c.contains("labels")) {
      const auto& l = c.at("labels");
      if (!l.is_array()) throw SchemaError(child(where, "labels"), "expected an array of label lists");
      for (std::size_t i = 0; i < l.size(); ++i) {
        std::vector<std::string> row;
        if (!l[i].is_array()) throw SchemaError(child(child(where, "labels"), i), "expected an array of strings");
        for (std::size_t k = 0; k < l[i].size(); ++k)
          row.push_back(text(l[i][k], child(child(child(where, "labels"), i), k)));
        spec.labels.push_back(std::move(row));
      }
    }
  } else {
    throw SchemaError(child(where, "generator"),
                      "unknown chain generator '" + gen + "' (iid, periodic, random-with-floor, explicit)");
  }
  spec.a = number_or(c, "a", where, 0.5);
  try {
    validate_spec(spec);
  } catch (const InputError& e) {
    throw SchemaError(where, e.what());
  }
  return spec;
}

// ---- observables -----------------------------------------------------------------

std::size_t default_length(const ChainSpec& chain, std::size_t future) {
  const std::size_t N = chain.horizon();
  return N + 1 > future ? N + 1 - future : 0;
}

std::size_t length_of(const Json& o, const std::string& where, const ChainSpec& chain, std::size_t future) {
  const std::size_t cap = default_length(chain, future);
  const std::size_t n = count_or(o, "length", where, std::min(cap, chain.horizon()));
  if (n == 0 || n > cap) throw SchemaError(child(where, "length"), "length must lie in [1, " + std::to_string(cap) + "]");
  return n;
}

ObservableBundle parse_observable(const Json& o, const std::string& where, const ChainSpec& chain) {
  const std::string gen = text(need(o, "generator", where), child(where, "generator"));
  const auto sizes = chain.sizes();
  ObservableBundle b;
  b.generator = gen;
  if (gen == "coordinate") {
    only_keys(o, where, {"generator", "length", "values", "scales", "scale_exponent"});
    const auto values = numbers(need(o, "values", where), child(where, "values"));
    const std::size_t n = length_of(o, where, chain, 0);
    if (o.contains("scales") && o.contains("scale_exponent"))
      throw SchemaError(child(where, "scale_exponent"), "conflicts with 'scales'");
    std::vector<double> scales;
    if (o.contains("scales")) scales = numbers(o.at("scales"), child(where, "scales"));
    if (o.contains("scale_exponent")) {
      const double p = number(o.at("scale_exponent"), child(where, "scale_exponent"));
      for (std::size_t j = 0; j < n; ++j) scales.push_back(std::pow(static_cast<double>(j + 1), p));
    }
    b.f = coordinate_observable(sizes, n, values, scales);
  } else if (gen == "product-window") {
    only_keys(o, where, {"generator", "length", "values", "past", "future"});
    const auto values = numbers(need(o, "values", where), child(where, "values"));
    const std::size_t past = count_or(o, "past", where, 1), future = count_or(o, "future", where, 0);
    const std::size_t n = length_of(o, where, chain, future);
    for (std::size_t s : sizes)
      if (s > values.size()) throw SchemaError(child(where, "values"), "fewer values than states");
    b.f = tabulate(sizes, n, past, future, [&](std::size_t, std::span<const std::size_t> x) {
      double p = 1.0;
      for (std::size_t s : x) p *= values[s];
      return p;
    });
  } else if (gen == "linear-process") {
    only_keys(o, where, {"generator", "length", "coeffs", "K", "base"});
    const auto coeffs = numbers(need(o, "coeffs", where), child(where, "coeffs"));
    if (coeffs.size() % 2 == 0) throw SchemaError(child(where, "coeffs"), "need an odd count (lags -K..K)");
    const std::size_t K = count_or(o, "K", where, coeffs.size() / 2);
    const auto& base_j = need(o, "base", where);
    std::vector<std::vector<double>> base;
    if (base_j.is_array() && !base_j.empty() && base_j[0].is_array()) {
      for (std::size_t i = 0; i < base_j.size(); ++i) base.push_back(numbers(base_j[i], child(child(where, "base"), i)));
    } else {
      base.push_back(numbers(base_j, child(where, "base")));
    }
    const std::size_t n = length_of(o, where, chain, 0);
    auto lp = build_linear_process(sizes, n, coeffs, K, base);
    b.f = std::move(lp.observable);
    b.tail_bound = lp.tail_bound;
  } else if (gen == "irf") {
    only_keys(o, where, {"generator", "length", "alpha", "beta", "y0", "radius", "window", "tolerance"});
    const auto alpha = numbers(need(o, "alpha", where), child(where, "alpha"));
    const auto beta = numbers(need(o, "beta", where), child(where, "beta"));
    if (alpha.size() != beta.size()) throw SchemaError(child(where, "beta"), "alpha and beta lengths differ");
    IrfFamily fam = affine_irf({alpha}, {beta}, number_or(o, "y0", where, 0.0));
    if (o.contains("radius")) fam.radius = number(o.at("radius"), child(where, "radius"));
    const std::size_t w = count_or(o, "window", where, 8);
    std::optional<double> tol;
    if (o.contains("tolerance")) tol = number(o.at("tolerance"), child(where, "tolerance"));
    const std::size_t n = length_of(o, where, chain, 0);
    auto io = irf_window_observable(fam, sizes, n, w, {}, tol);
    b.f = std::move(io.observable);
    b.tail_bound = io.error_bound;
    b.irf = std::move(fam);
    b.irf_window = w;
  } else if (gen == "matrix-log-lambda") {
    only_keys(o, where, {"generator", "length", "matrices", "random", "bound", "window"});
    const double C = number(need(o, "bound", where), child(where, "bound"));
    PositiveMatrixFamily fam;
    if (o.contains("matrices") == o.contains("random"))
      throw SchemaError(where, "give exactly one of 'matrices' and 'random'");
    if (o.contains("matrices")) {
      const auto& ms = o.at("matrices");
      if (!ms.is_array()) throw SchemaError(child(where, "matrices"), "expected one matrix per state");
      std::vector<Eigen::MatrixXd> per_state;
      for (std::size_t i = 0; i < ms.size(); ++i)
        per_state.push_back(parse_matrix(ms[i], child(child(where, "matrices"), i)));
      fam = state_family(per_state, sizes, C);
    } else {
      const auto& r = o.at("random");
      const std::string rw = child(where, "random");
      only_keys(r, rw, {"dim", "seed"});
      fam = random_family(sizes, count(need(r, "dim", rw), child(rw, "dim")), C, count_or(r, "seed", rw, 1));
    }
    const std::size_t w = count_or(o, "window", where, 12);
    const ChainModel model(chain);
    auto pf = sequential_pf(fam, model, w);
    b.f = o.contains("length") ? pf.log_lambda.prefix(count(o.at("length"), child(where, "length")))
                               : std::move(pf.log_lambda);
    b.tail_bound = pf.log_tail;
    b.matrices = std::move(fam);
    b.matrix_window = w;
  } else if (gen == "explicit") {
    only_keys(o, where, {"generator", "terms"});
    const auto& ts = need(o, "terms", where);
    if (!ts.is_array() || ts.empty()) throw SchemaError(child(where, "terms"), "expected a non-empty array");
    std::vector<WindowTerm> terms;
    for (std::size_t i = 0; i < ts.size(); ++i) {
      const std::string tw = child(child(where, "terms"), i);
      only_keys(ts[i], tw, {"past", "future", "values"});
      WindowTerm t;
      t.past = count_or(ts[i], "past", tw, 0);
      t.future = count_or(ts[i], "future", tw, 0);
      t.values = numbers(need(ts[i], "values", tw), child(tw, "values"));
      terms.push_back(std::move(t));
    }
    b.f = WindowObservable(sizes, std::move(terms));
  } else {
    throw SchemaError(child(where, "generator"),
                      "unknown observable generator '" + gen +
                          "' (coordinate, product-window, linear-process, irf, matrix-log-lambda, explicit)");
  }
  return b;
}

// ---- analysis ----------------------------------------------------------------------

const std::set<std::string> kChecks = {"validate", "moments", "rpf",      "corange", "llt",     "edgeworth",
                                       "blocks",   "matrix",  "lyapunov", "irf",     "simulate"};

void check_analysis(const Json& a, const std::string& where) {
  only_keys(a, where,
            {"checks", "n_grid", "tolerance", "seed", "threads", "corange", "lattice", "kernel", "u_grid",
             "u_points", "mc_samples", "t_grid", "rpf", "blocks", "matrix", "lyapunov", "irf", "simulate",
             "edgeworth", "small_t", "suff", "llt"});
  if (a.contains("checks")) {
    const auto& c = a.at("checks");
    if (!c.is_array()) throw SchemaError(child(where, "checks"), "expected an array of names");
    for (std::size_t i = 0; i < c.size(); ++i) {
      const auto name = text(c[i], child(child(where, "checks"), i));
      if (!kChecks.count(name)) throw SchemaError(child(child(where, "checks"), i), "unknown check '" + name + "'");
    }
  }
  auto sub = [&](const char* key, std::initializer_list<const char*> allowed) {
    if (a.contains(key)) only_keys(a.at(key), child(where, key), allowed);
  };
  sub("corange", {"t_max", "resolution", "n_max", "samples", "seed"});
  sub("lattice", {"beta", "scale", "b_bound", "max_atoms"});
  sub("kernel", {"half_width", "x", "y"});
  sub("rpf", {"z", "n_max", "j"});
  sub("blocks", {"n", "D", "theta", "t_grid"});
  sub("matrix", {"j", "depth", "n_grid", "sandwich_n", "samples", "norm"});
  sub("lyapunov", {"base", "perturbations", "eps", "window", "eps_grid", "path_seed"});
  sub("irf", {"mode", "burn", "paths", "steps", "audit_samples"});
  sub("simulate", {"samples", "n", "min_hits"});
  sub("edgeworth", {"n_grid"});
  sub("small_t", {"delta", "t_points"});
  sub("suff", {"delta", "T", "lattice_variant", "t_points"});
  sub("llt", {"mode", "n", "threshold"});
  for (const char* k : {"n_grid", "u_grid", "t_grid"})
    if (a.contains(k)) numbers(a.at(k), child(where, k));
  for (const char* k : {"tolerance"})
    if (a.contains(k)) number(a.at(k), child(where, k));
  for (const char* k : {"seed", "threads", "u_points", "mc_samples"})
    if (a.contains(k)) count(a.at(k), child(where, k));
}

std::size_t line_of(const std::string& text, std::size_t byte) {
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + std::min(byte, text.size()), '\n'));
}

}  // namespace

Eigen::MatrixXd parse_matrix(const Json& j, const std::string& where) {
  if (!j.is_array() || j.empty() || !j[0].is_array()) throw SchemaError(where, "expected a matrix (array of rows)");
  const std::size_t rows = j.size(), cols = j[0].size();
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows; ++r) {
    const auto row = numbers(j[r], child(where, r));
    if (row.size() != cols) throw SchemaError(child(where, r), "ragged matrix row");
    for (std::size_t c = 0; c < cols; ++c) m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = row[c];
  }
  return m;
}

Scenario parse_scenario(const std::string& body, const std::string& source) {
  Scenario s;
  s.source = source;
  try {
    s.raw = Json::parse(body);
  } catch (const Json::parse_error& e) {
    throw SchemaError(source + ":" + std::to_string(line_of(body, e.byte)), e.what());
  }
  only_keys(s.raw, "", {"schema_version", "description", "chain", "observable", "analysis", "output"});
  const auto& v = need(s.raw, "schema_version", "");
  if (!v.is_number_integer() || v.get<int>() != kSchemaVersion)
    throw SchemaError("/schema_version", "unsupported schema version (expected " + std::to_string(kSchemaVersion) + ")");
  if (s.raw.contains("description")) text(s.raw.at("description"), "/description");
  s.chain = parse_chain(need(s.raw, "chain", ""), "/chain");
  if (s.raw.contains("observable")) s.observable = parse_observable(s.raw.at("observable"), "/observable", s.chain);
  s.analysis = s.raw.contains("analysis") ? s.raw.at("analysis") : Json::object();
  check_analysis(s.analysis, "/analysis");
  if (s.raw.contains("output")) {
    const auto& o = s.raw.at("output");
    only_keys(o, "/output", {"dir"});
    if (o.contains("dir")) s.out_dir = text(o.at("dir"), "/output/dir");
  }
  return s;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError(path, "cannot open scenario file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str(), path);
}

double analysis_number(const Scenario& s, const std::string& key, double fallback) {
  return s.analysis.contains(key) ? s.analysis.at(key).get<double>() : fallback;
}

std::vector<std::size_t> analysis_grid(const Scenario& s, const std::string& key, std::vector<std::size_t> fallback) {
  if (!s.analysis.contains(key)) return fallback;
  std::vector<std::size_t> out;
  for (const auto& v : s.analysis.at(key)) {
    if (!v.is_number_integer() || v.get<long long>() <= 0)
      throw SchemaError("/analysis/" + key, "grid entries must be positive integers");
    out.push_back(v.get<std::size_t>());
  }
  return out;
}

}  // namespace mshift::cli
