#include "bigimage/cli_report.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <random>
#include <sstream>

#include "bigimage/adjoint.hpp"
#include "bigimage/exponents.hpp"

namespace bigimage {

bool operator==(const CertificateCondition& a, const CertificateCondition& b) {
  return a.pass == b.pass && a.witness == b.witness;
}

nlohmann::ordered_json to_json(const Certificate& c) {
  using oj = nlohmann::ordered_json;
  oj j;
  j["p"] = c.p;
  j["n"] = c.n;
  j["e"] = c.e;
  j["seed"] = c.seed;
  j["profile"] = oj{{"irregular_indices", c.irregular_indices}, {"e_p", c.e_p}, {"assumptions", c.assumptions}};
  j["ks"] = c.ks;
  oj conds = oj::array();
  for (std::size_t i = 0; i < c.conditions.size(); ++i)
    conds.push_back(oj{{"condition", i + 1}, {"pass", c.conditions[i].pass}, {"witness", c.conditions[i].witness}});
  j["conditions"] = conds;
  j["assumed_zero_indices"] = c.assumed_zero_indices;
  j["avoided_eigenspaces"] = c.avoided_eigenspaces;
  j["lift"] = oj{{"target_level", c.target_level},
                 {"det_mode", c.det_mode},
                 {"psi_fingerprint", c.psi_fingerprint},
                 {"relators_exact", c.relators_exact},
                 {"det_exact", c.det_exact}};
  oj image;
  image["phi1_seeds"] = c.phi1_seeds;
  image["phi1_dim"] = c.phi1_dim;
  image["phi1_trace_zero"] = c.phi1_trace_zero;
  image["sl_closure_level"] = c.sl_closure_level ? oj(*c.sl_closure_level) : oj(nullptr);
  image["kernel"] = oj{{"level", c.kernel_level}, {"contained", c.kernel_contained}, {"method", c.kernel_method}};
  j["image"] = image;
  j["verdict"] = oj{{"pass", c.pass},
                    {"failed_stage", c.failed_stage ? oj(*c.failed_stage) : oj(nullptr)},
                    {"reason", c.reason}};
  return j;
}

Certificate certificate_from_json(const nlohmann::json& j) {
  try {
    Certificate c;
    c.p = j.at("p").get<u64>();
    c.n = j.at("n").get<unsigned>();
    c.e = j.at("e").get<unsigned>();
    c.seed = j.at("seed").get<u64>();
    const auto& prof = j.at("profile");
    c.irregular_indices = prof.at("irregular_indices").get<std::vector<u64>>();
    c.e_p = prof.at("e_p").get<u64>();
    c.assumptions = prof.at("assumptions").get<std::vector<std::string>>();
    c.ks = j.at("ks").get<std::vector<i64>>();
    for (const auto& cond : j.at("conditions"))
      c.conditions.push_back({cond.at("pass").get<bool>(), cond.at("witness").get<std::string>()});
    c.assumed_zero_indices = j.at("assumed_zero_indices").get<std::vector<u64>>();
    c.avoided_eigenspaces = j.at("avoided_eigenspaces").get<std::vector<u64>>();
    const auto& lift = j.at("lift");
    c.target_level = lift.at("target_level").get<unsigned>();
    c.det_mode = lift.at("det_mode").get<std::string>();
    c.psi_fingerprint = lift.at("psi_fingerprint").get<std::string>();
    c.relators_exact = lift.at("relators_exact").get<bool>();
    c.det_exact = lift.at("det_exact").get<bool>();
    const auto& image = j.at("image");
    c.phi1_seeds = image.at("phi1_seeds").get<std::vector<std::string>>();
    c.phi1_dim = image.at("phi1_dim").get<std::size_t>();
    c.phi1_trace_zero = image.at("phi1_trace_zero").get<bool>();
    if (!image.at("sl_closure_level").is_null()) c.sl_closure_level = image.at("sl_closure_level").get<unsigned>();
    const auto& kernel = image.at("kernel");
    c.kernel_level = kernel.at("level").get<unsigned>();
    c.kernel_contained = kernel.at("contained").get<bool>();
    c.kernel_method = kernel.at("method").get<std::string>();
    const auto& verdict = j.at("verdict");
    c.pass = verdict.at("pass").get<bool>();
    if (!verdict.at("failed_stage").is_null()) c.failed_stage = verdict.at("failed_stage").get<std::string>();
    c.reason = verdict.at("reason").get<std::string>();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("certificate: ") + e.what());
  }
}

std::string psi_fingerprint(const Character& psi) {
  u64 h = 0xcbf29ce484222325ULL;
  for (u64 v : psi.values) {
    for (int b = 0; b < 8; ++b) {
      h ^= (v >> (8 * b)) & 0xff;
      h *= 0x100000001b3ULL;
    }
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

namespace {

std::string join(const std::vector<std::string>& parts, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? sep : "") + parts[i];
  return out;
}

template <typename T>
std::string join_numbers(const std::vector<T>& xs, const std::string& sep = ",") {
  std::vector<std::string> parts;
  for (const auto& x : xs) parts.push_back(std::to_string(x));
  return join(parts, sep);
}

std::string elementary_label(std::size_t i, std::size_t j) {
  return "e_" + std::to_string(i) + "," + std::to_string(j);
}

// Signed representative in (-p/2, p/2].
i64 centered(u64 x, u64 p) { return x > p / 2 ? static_cast<i64>(x) - static_cast<i64>(p) : static_cast<i64>(x); }

// Linear combination of elementary matrices, e.g. "e_1,1 - e_2,2".
std::string format_combination(const AdMatrix& x) {
  const u64 p = x.modulus().p();
  const AdMatrix bar = x.reduce_to(1);
  std::string out;
  for (std::size_t r = 0; r < bar.n(); ++r) {
    for (std::size_t c = 0; c < bar.n(); ++c) {
      const i64 v = centered(bar.at(r, c), p);
      if (v == 0) continue;
      const std::string term = elementary_label(r + 1, c + 1);
      const i64 mag = v < 0 ? -v : v;
      if (out.empty())
        out += v < 0 ? "-" : "";
      else
        out += v < 0 ? " - " : " + ";
      out += (mag == 1 ? "" : std::to_string(mag) + "*") + term;
    }
  }
  return out.empty() ? "0" : out;
}

std::string format_matrix(const AdMatrix& x) {
  std::ostringstream os;
  os << "[";
  for (std::size_t r = 0; r < x.n(); ++r) {
    os << (r ? ", [" : "[");
    for (std::size_t c = 0; c < x.n(); ++c) os << (c ? " " : "") << x.at(r, c);
    os << "]";
  }
  os << "]";
  return os.str();
}

std::optional<AdMatrix> distinct_diagonal(const FpSubspace& space, std::size_t n) {
  const u64 p = space.p();
  // Diagonal elements of the space: combinations whose off-diagonal part vanishes.
  const FpRows& basis = space.basis();
  FpRows equations;
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      if (r == c) continue;
      FpVector row;
      for (const auto& b : basis) row.push_back(b[r * n + c]);
      equations.push_back(std::move(row));
    }
  }
  FpRows diag;
  for (const auto& x : kernel_basis(equations, p, basis.size())) {
    FpVector v(n * n, 0);
    for (std::size_t i = 0; i < basis.size(); ++i)
      for (std::size_t k = 0; k < v.size(); ++k) v[k] = (v[k] + x[i] * basis[i][k]) % p;
    diag.push_back(std::move(v));
  }
  auto distinct = [&](const FpVector& v) {
    std::vector<u64> entries;
    for (std::size_t i = 0; i < n; ++i) entries.push_back(v[i * n + i]);
    std::sort(entries.begin(), entries.end());
    return std::adjacent_find(entries.begin(), entries.end()) == entries.end();
  };
  for (const auto& v : diag)
    if (distinct(v)) return from_vector(n, p, v);
  if (diag.size() < 2) return std::nullopt;
  // Small coefficient vectors in lexicographic order.
  const u64 range = std::min<u64>(p, 8);
  std::vector<u64> coef(diag.size(), 0);
  for (u64 tries = 0; tries < 100000; ++tries) {
    std::size_t k = 0;
    while (k < coef.size() && ++coef[k] == range) coef[k++] = 0;
    if (k == coef.size()) break;
    FpVector v(n * n, 0);
    for (std::size_t i = 0; i < diag.size(); ++i)
      for (std::size_t t = 0; t < v.size(); ++t) v[t] = (v[t] + coef[i] * diag[i][t]) % p;
    if (distinct(v)) return from_vector(n, p, v);
  }
  return std::nullopt;
}

std::string format_diag(const AdMatrix& w) {
  std::vector<u64> d;
  for (std::size_t i = 0; i < w.n(); ++i) d.push_back(w.at(i, i));
  return "w=diag(" + join_numbers(d) + ")";
}

}  // namespace

Certificate certify(u64 p, unsigned n, unsigned e, const CertifyOptions& options) {
  if (p < 5 || !is_prime(p)) throw std::invalid_argument("certify: p must be a prime >= 5");
  if (n < 2) throw std::invalid_argument("certify: n must be at least 2");
  if (options.level < 2) throw std::invalid_argument("certify: the target level must be at least 2");
  Certificate c;
  c.p = p;
  c.n = n;
  c.e = e;
  c.seed = options.seed;
  c.target_level = options.level;
  c.det_mode = to_string(options.det_mode);
  auto fail = [&](std::string stage, std::string reason) {
    c.pass = false;
    c.failed_stage = std::move(stage);
    c.reason = std::move(reason);
    return c;
  };

  const IrregularityProfile profile = make_profile(p, options.budget);
  c.irregular_indices = profile.irregular_indices;
  c.e_p = profile.e_p;
  for (auto a : profile.assumptions) c.assumptions.push_back(to_string(a));

  std::variant<Selection, SelectionFailure> chosen = SelectionFailure{SelectionStep::Boundary, ""};
  try {
    chosen = select_ks(p, n, e, profile);
  } catch (const std::exception& ex) {
    return fail("exponents", ex.what());
  }
  if (auto* f = std::get_if<SelectionFailure>(&chosen)) return fail("exponents", to_string(f->step) + ": " + f->reason);
  const Selection& sel = std::get<Selection>(chosen);
  c.ks = sel.ks;
  for (const auto& v : sel.report.conditions) c.conditions.push_back({v.pass, v.witness});
  c.assumed_zero_indices = sel.report.assumed_zero_indices;
  c.avoided_eigenspaces = sel.avoided_eigenspaces;

  const auto model = std::make_shared<const DeskModel>(desk_model(p));
  std::optional<LiftRep> lift;
  try {
    lift = lift_to(build_rho2(model, sel.ks, options.det_mode), options.level);
  } catch (const LiftObstructed& ex) {
    return fail("lift", ex.what());
  } catch (const std::invalid_argument& ex) {
    return fail("lift", ex.what());
  }
  const LiftCheck check = check_lift(*lift);
  c.relators_exact = check.relators_exact;
  c.det_exact = check.det_exact;
  c.psi_fingerprint = psi_fingerprint(lift->psi);
  if (!check.ok()) return fail("lift", check.detail);

  const PhiResult phi1 = phi(*lift, 1);
  c.phi1_dim = phi1.space.dim();
  c.phi1_trace_zero = std::all_of(phi1.space.basis().begin(), phi1.space.basis().end(),
                                  [&](const FpVector& v) { return from_vector(n, p, v).trace() == 0; });
  if (options.det_mode == DetMode::Paper && !c.phi1_trace_zero)
    return fail("phi", "Phi_1 bound is not trace-zero in paper det mode");
  std::vector<Seed> seeds;
  const Modulus fp(p, 1);
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= n; ++j) {
      if (i == j || (i + j) % 2 == 0) continue;
      const AdMatrix eij = AdMatrix::elementary(n, i, j, fp);
      if (!phi1.space.contains(to_vector(eij))) return fail("phi", elementary_label(i, j) + " is not in Phi_1");
      c.phi1_seeds.push_back(elementary_label(i, j));
      seeds.push_back({1, eij});
    }
  }
  const auto w = distinct_diagonal(phi1.space, n);
  if (!w) return fail("phi", "Phi_1 has no diagonal element with distinct entries");
  c.phi1_seeds.push_back(format_diag(*w));
  seeds.push_back({1, *w});

  const GradedFiltration filtration = graded_closure(seeds, n, sel.ks, p, c.kernel_level);
  for (unsigned l = 1; l <= c.kernel_level; ++l) {
    if (contains_sl(filtration, l)) {
      c.sl_closure_level = l;
      break;
    }
  }
  if (!c.sl_closure_level)
    return fail("closure", "sl_" + std::to_string(n) + " not reached by level " + std::to_string(c.kernel_level));
  c.kernel_contained = true;
  c.pass = true;
  return c;
}

Budget budget_from_env() {
  Budget b;
  if (const char* v = std::getenv("BIGIMAGE_BUDGET_MS")) {
    char* end = nullptr;
    const long long ms = std::strtoll(v, &end, 10);
    if (end != v && *end == '\0' && ms >= 0) b = Budget::with_time_limit(std::chrono::milliseconds(ms));
  }
  return b;
}

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void require_odd_prime(u64 p) {
  if (p < 3 || !is_prime(p)) throw UsageError(std::to_string(p) + " is not an odd prime");
}

void print_profile(std::ostream& out, const IrregularityProfile& prof) {
  std::vector<std::string> assumptions;
  for (auto a : prof.assumptions) assumptions.push_back(to_string(a));
  out << "p=" << prof.p << ": e_p=" << prof.e_p << ", irregular indices {" << join_numbers(prof.irregular_indices)
      << "} [" << join(assumptions, ",") << "]\n";
  for (u64 k : prof.irregular_indices)
    out << "  nonzero eigenspace chi^" << prof.p - k << " (p | B_" << k << ")\n";
}

nlohmann::ordered_json profile_json(const IrregularityProfile& prof) {
  std::vector<std::string> assumptions;
  for (auto a : prof.assumptions) assumptions.push_back(to_string(a));
  return {{"p", prof.p}, {"e_p", prof.e_p}, {"irregular_indices", prof.irregular_indices}, {"assumptions", assumptions}};
}

int cmd_regularity(std::optional<u64> p, const std::vector<u64>& range, const std::string& cache_path, bool json,
                   unsigned threads, std::ostream& out, std::ostream& err) {
  const Budget budget = budget_from_env();
  if (p && !range.empty()) throw UsageError("give either a prime or --range, not both");
  if (p) {
    require_odd_prime(*p);
    RegularityCache cache;
    if (!cache_path.empty() && std::filesystem::exists(cache_path)) cache = load_cache(cache_path);
    IrregularityProfile prof;
    if (auto it = cache.find(*p); it != cache.end()) {
      prof = make_profile(*p, it->second);
    } else {
      try {
        prof = make_profile(*p, budget);
      } catch (const BudgetExceeded& ex) {
        err << "partial: " << ex.what() << "\n";
        return kExitBudget;
      }
      if (!cache_path.empty()) {
        cache[*p] = prof.irregular_indices;
        save_cache(cache_path, cache);
      }
    }
    if (json)
      out << profile_json(prof).dump(2) << "\n";
    else
      print_profile(out, prof);
    return kExitOk;
  }
  if (range.size() != 2) throw UsageError("give a prime or --range lo hi");
  if (range[0] < 5 || range[0] >= range[1]) throw UsageError("--range needs 5 <= lo < hi");
  RegularityCache cache;
  if (!cache_path.empty() && std::filesystem::exists(cache_path)) cache = load_cache(cache_path);
  const ScanStats stats = scan_range(range[0], range[1], budget, &cache, threads);
  if (!cache_path.empty()) save_cache(cache_path, cache);
  if (json) {
    nlohmann::ordered_json j;
    j["lo"] = stats.lo;
    j["hi"] = stats.hi;
    j["primes_scanned"] = stats.primes_scanned;
    j["counts"] = stats.counts;
    j["regular_density"] = stats.regular_density;
    j["expected"] = stats.expected;
    nlohmann::ordered_json irr = nlohmann::ordered_json::object();
    for (const auto& [q, idx] : stats.irregular) irr[std::to_string(q)] = idx;
    j["irregular"] = irr;
    j["partial"] = stats.partial;
    j["scanned_below"] = stats.scanned_below;
    out << j.dump(2) << "\n";
  } else {
    out << std::fixed << std::setprecision(4);
    out << "range [" << stats.lo << ", " << stats.hi << "): " << stats.primes_scanned << " primes, regular density "
        << stats.regular_density << " (expected " << expected_density(0) << ")\n";
    for (std::size_t r = 0; r < stats.counts.size(); ++r) {
      const double frac = stats.primes_scanned ? double(stats.counts[r]) / double(stats.primes_scanned) : 0.0;
      out << "  e_p=" << r << ": " << stats.counts[r] << " (" << frac << ", expected " << stats.expected[r] << ")\n";
    }
    std::vector<std::string> irr;
    for (const auto& [q, idx] : stats.irregular) irr.push_back(std::to_string(q) + " {" + join_numbers(idx) + "}");
    out << "irregular: " << (irr.empty() ? "none" : join(irr, ", ")) << "\n";
    out.unsetf(std::ios::floatfield);
  }
  if (stats.partial) {
    err << "partial: scanned primes below " << stats.scanned_below << "\n";
    return kExitBudget;
  }
  return kExitOk;
}

void print_report(std::ostream& out, const ConditionReport& report) {
  for (std::size_t i = 0; i < report.conditions.size(); ++i) {
    const auto& v = report.conditions[i];
    out << "  (" << i + 1 << ") " << (v.pass ? "pass" : "fail: " + v.witness) << "\n";
  }
  if (!report.assumed_zero_indices.empty())
    out << "  assumed zero [vandiver]: chi^{" << join_numbers(report.assumed_zero_indices) << "}\n";
}

int cmd_exponents(u64 p, unsigned n, unsigned e, bool search, bool json, std::ostream& out, std::ostream& err) {
  require_odd_prime(p);
  if (n < 2) throw UsageError("n must be at least 2");
  IrregularityProfile prof;
  try {
    prof = make_profile(p, budget_from_env());
  } catch (const BudgetExceeded& ex) {
    err << "partial: " << ex.what() << "\n";
    return kExitBudget;
  }
  ConditionReport report;
  nlohmann::ordered_json j;
  if (search) {
    std::optional<std::vector<i64>> ks;
    try {
      ks = search_ks(p, n, prof);
    } catch (const SearchBoundExceeded& ex) {
      err << "partial: " << ex.what() << "\n";
      return kExitBudget;
    }
    if (!ks) {
      err << "search: no tuple of length " << n << " satisfies conditions (1)-(5) for p=" << p << "\n";
      return kExitConstruction;
    }
    report = check_conditions(p, *ks, prof);
    j["strategy"] = "exhaustive";
  } else {
    std::variant<Selection, SelectionFailure> res = SelectionFailure{SelectionStep::Boundary, ""};
    try {
      res = select_ks(p, n, e, prof);
    } catch (const std::overflow_error& ex) {
      throw UsageError(ex.what());
    }
    if (auto* f = std::get_if<SelectionFailure>(&res)) {
      err << "selection failed at " << to_string(f->step) << ": " << f->reason << "\n";
      return kExitConstruction;
    }
    const auto& sel = std::get<Selection>(res);
    report = sel.report;
    j["positions"] = sel.positions;
    j["discarded"] = sel.discarded;
    j["avoided_eigenspaces"] = sel.avoided_eigenspaces;
  }
  if (json) {
    j["p"] = p;
    j["ks"] = report.ks;
    nlohmann::ordered_json conds = nlohmann::ordered_json::array();
    for (const auto& v : report.conditions) conds.push_back({{"pass", v.pass}, {"witness", v.witness}});
    j["conditions"] = conds;
    j["assumed_zero_indices"] = report.assumed_zero_indices;
    out << j.dump(2) << "\n";
  } else {
    out << "ks=(" << join_numbers(report.ks) << ")" << (report.pass() ? ", all conditions pass" : "") << "\n";
    print_report(out, report);
    if (j.contains("avoided_eigenspaces") && !j["avoided_eigenspaces"].empty())
      out << "  avoided eigenspaces: chi^{" << join_numbers(j["avoided_eigenspaces"].get<std::vector<u64>>())
          << "}\n";
  }
  return report.pass() ? kExitOk : kExitConstruction;
}

void print_certificate(std::ostream& out, const Certificate& c) {
  out << "certify p=" << c.p << " n=" << c.n << " e=" << c.e << "\n";
  out << "profile: e_p=" << c.e_p << ", irregular indices {" << join_numbers(c.irregular_indices) << "} ["
      << join(c.assumptions, ",") << "]\n";
  if (!c.ks.empty()) {
    out << "ks=(" << join_numbers(c.ks) << ")\n";
    for (std::size_t i = 0; i < c.conditions.size(); ++i)
      out << "  (" << i + 1 << ") " << (c.conditions[i].pass ? "pass" : "fail: " + c.conditions[i].witness) << "\n";
    if (!c.avoided_eigenspaces.empty())
      out << "  avoided eigenspaces: chi^{" << join_numbers(c.avoided_eigenspaces) << "}\n";
  }
  if (!c.psi_fingerprint.empty())
    out << "lift: level " << c.target_level << ", det_mode " << c.det_mode << ", psi " << c.psi_fingerprint
        << ", relators exact: " << (c.relators_exact ? "OK" : "FAIL") << ", det = psi: " << (c.det_exact ? "OK" : "FAIL")
        << "\n";
  if (c.phi1_dim)
    out << "Phi_1 bound: dim " << c.phi1_dim << (c.phi1_trace_zero ? ", trace-zero" : "") << "; seeds "
        << join(c.phi1_seeds, " ") << "\n";
  if (c.sl_closure_level)
    out << "closure: sl_" << c.n << " at level " << *c.sl_closure_level << "\n"
        << "kernel: U_" << c.kernel_level << " contained (" << c.kernel_method << ")\n";
  out << "verdict: " << (c.pass ? "PASS" : "FAIL at " + c.failed_stage.value_or("?") + ": " + c.reason) << "\n";
}

int cmd_certify(u64 p, unsigned n, unsigned e, unsigned level, const std::string& mode, u64 seed,
                const std::string& out_path, bool json, std::ostream& out, std::ostream& err) {
  if (p < 5 || !is_prime(p)) throw UsageError(std::to_string(p) + " is not a prime >= 5");
  if (n < 2) throw UsageError("n must be at least 2");
  if (level < 2) throw UsageError("--level must be at least 2");
  CertifyOptions opt;
  opt.level = level;
  opt.seed = seed;
  try {
    opt.det_mode = parse_det_mode(mode);
  } catch (const std::invalid_argument& ex) {
    throw UsageError(ex.what());
  }
  opt.budget = budget_from_env();
  Certificate c;
  try {
    c = certify(p, n, e, opt);
  } catch (const BudgetExceeded& ex) {
    err << "partial: " << ex.what() << "\n";
    return kExitBudget;
  }
  const std::string text = to_json(c).dump(2);
  if (!out_path.empty()) {
    std::ofstream f(out_path);
    if (!f) throw UsageError("cannot write " + out_path);
    f << text << "\n";
  }
  if (json)
    out << text << "\n";
  else
    print_certificate(out, c);
  return c.pass ? kExitOk : kExitStage;
}

int cmd_lie_verify(unsigned n, u64 p, unsigned trials, u64 seed, std::ostream& out, std::ostream& err) {
  require_odd_prime(p);
  if (n < 2 || n > 8) throw UsageError("--n must lie in [2, 8]");
  if (trials < 1) throw UsageError("--trials must be positive");
  // l + m + 1 <= 5 must fit the 62-bit modulus.
  u64 bound = 1;
  for (int i = 0; i < 5; ++i) {
    if (bound > (u64{1} << 62) / p) throw UsageError("p is too large for the commutator trials");
    bound *= p;
  }
  std::mt19937_64 rng(seed);
  const Modulus fp(p, 1);
  unsigned passed = 0;
  for (unsigned t = 0; t < trials; ++t) {
    AdMatrix c(n, fp), d(n, fp);
    unsigned l = 1, m = 1;
    if (t == 0) {
      c = AdMatrix::elementary(n, 1, 2, fp);
      d = AdMatrix::elementary(n, 2, 1, fp);
    } else {
      std::uniform_int_distribution<u64> digit(0, p - 1);
      std::uniform_int_distribution<unsigned> level(1, 2);
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t s = 0; s < n; ++s) {
          c.set(r, s, digit(rng));
          d.set(r, s, digit(rng));
        }
      l = level(rng);
      m = level(rng);
    }
    const CommutatorCheck check = commutator_identity_check(c, d, l, m, rng);
    if (!check.pass) {
      err << "counterexample at trial " << t << ": l=" << l << " m=" << m << "\n  c = " << format_matrix(c)
          << "\n  d = " << format_matrix(d) << "\n  commutator = " << format_matrix(check.commutator)
          << "\n  expected   = " << format_matrix(check.expected) << "\n";
      return kExitVerification;
    }
    ++passed;
    if (t == 0) {
      u64 pl = 1;
      for (unsigned i = 0; i < l + m; ++i) pl *= p;
      out << "trial 0: c=e_1,2 d=e_2,1 l=1 m=1: commutator = Id + " << pl << "*("
          << format_combination(bracket(c, d)) << ")\n";
    }
  }
  out << "commutator identity: " << passed << "/" << trials << " pass\n";

  if (p > n) {
    std::vector<Seed> seeds;
    std::vector<u64> diag;
    for (unsigned i = 1; i <= n; ++i) diag.push_back(i);
    seeds.push_back({1, AdMatrix::diagonal(diag, fp)});
    for (std::size_t i = 1; i <= n; ++i)
      for (std::size_t j = 1; j <= n; ++j)
        if (i != j && (i + j) % 2 == 1) seeds.push_back({1, AdMatrix::elementary(n, i, j, fp)});
    const GradedFiltration f = graded_closure(seeds, n, {}, p, 4);
    std::optional<unsigned> level;
    for (unsigned k = 1; k <= 4 && !level; ++k)
      if (contains_sl(f, k)) level = k;
    if (!level || !verify_filtration(f)) {
      err << "closure: sl_" << n << " not reached by level 4 from w=diag(1..n) and e_i,j (i+j odd)\n";
      return kExitVerification;
    }
    out << "closure: sl_" << n << " contained at level " << *level << " from w=diag(1.." << n
        << ") and e_i,j (i+j odd): pass\n";
  } else {
    out << "closure: skipped (needs p > n for a distinct diagonal)\n";
  }
  const GradedFiltration zero = graded_closure({}, n, {}, p, 4);
  bool all_zero = true;
  for (unsigned k = 1; k <= 4; ++k) all_zero = all_zero && zero.level(k).is_zero();
  out << "zero seeds: filtration levels 1..4 " << (all_zero ? "all zero: pass" : "nonzero: FAIL") << "\n";
  return all_zero ? kExitOk : kExitVerification;
}

int cmd_deform_demo(u64 p, const std::string& model_arg, u64 max_p, std::ostream& out, std::ostream& err) {
  require_odd_prime(p);
  std::shared_ptr<const DeskModel> model;
  if (model_arg == "free") {
    if (p > max_p) {
      err << "partial: p=" << p << " exceeds the demo budget --max-p " << max_p << "\n";
      return kExitBudget;
    }
    model = std::make_shared<const DeskModel>(desk_model(p));
  } else {
    try {
      model = std::make_shared<const DeskModel>(load_model_file(model_arg));
    } catch (const std::invalid_argument& ex) {
      throw UsageError(ex.what());
    }
    if (model->p() != p) throw UsageError("model file is for p=" + std::to_string(model->p()));
  }
  out << "model: p=" << p << ", " << model->pro_p_indices().size() << " pro-p generators, "
      << model->relators().size() << " relators\n";
  out << "H1 dims:";
  for (u64 d = 0; d <= p - 2; ++d) out << " (d=" << d << ")=" << cocycle_space(*model, d).h1_dim();
  out << "\n";

  std::optional<std::vector<i64>> ks;
  if (model->cyclotomic_index()) {
    try {
      ks = search_ks(p, 2, make_profile(p, budget_from_env()));
    } catch (const BudgetExceeded& ex) {
      err << "partial: " << ex.what() << "\n";
      return kExitBudget;
    }
  }
  LiftRep start;
  if (ks) {
    start = build_rho2(model, *ks, DetMode::Paper);
    out << "rho_bar: ks=(" << join_numbers(*ks) << ")\n";
    out << "rho_2 = (Id + pF) rho_2':\n";
    for (std::size_t g = 0; g < model->size(); ++g)
      if (!start.images[g].is_identity())
        out << "  " << model->generators()[g].name << " -> " << format_matrix(start.images[g]) << "\n";
  } else {
    const std::vector<i64> toy{1, 0};
    out << "rho_bar: no tuple of length 2 satisfies the conditions; using ks=(1,0)\n";
    start = residual_rep(model, toy, DetMode::Paper);
  }
  LiftRep cur = start;
  while (cur.level() < 5) {
    try {
      cur = lift_step(cur);
    } catch (const LiftObstructed& ex) {
      out << "obstruction at level " << ex.report().level << ": nonzero, lift does not extend\n";
      return kExitVerification;
    }
    const LiftCheck check = check_lift(cur);
    out << "level " << cur.level() << ": relators " << (check.relators_exact ? "exact" : "FAIL") << ", det "
        << (check.det_exact ? "exact" : "FAIL") << "\n";
    if (!check.ok()) return kExitVerification;
  }

  // Torsor: a perturbed set-lift gives a second level-3 lift differing by a cocycle.
  const LiftRep base = cur.reduce_to(2);
  auto cand = set_lift(base);
  const Modulus l3(p, 3);
  std::mt19937_64 rng(1);
  for (auto& m : cand) {
    AdMatrix noise(m.n(), Modulus(p, 1));
    for (std::size_t r = 0; r < m.n(); ++r)
      for (std::size_t s = 0; s < m.n(); ++s) noise.set(r, s, rng() % p);
    m = m + noise.times_p_power(2, 3);
  }
  const Character psi3 = cur.psi.reduce_to(3);
  const LiftRep a = lift_step(base, psi3);
  const LiftRep b = lift_step(base, psi3, cand);
  const Cochain h = cocycle_between(a, b);
  const bool torsor = is_cocycle(a, h) && twist_by_cocycle(a, h).images == b.images;
  out << "torsor: two level-3 lifts differ by a cocycle: " << (torsor ? "OK" : "FAIL") << "\n";

  const auto da = obstruction(base, set_lift(base), psi3).defects;
  const auto db = obstruction(base, cand, psi3).defects;
  Cochain v;
  for (std::size_t g = 0; g < cand.size(); ++g)
    v.push_back((cand[g] * set_lift(base)[g].inverse() - AdMatrix::identity(base.n(), l3)).divide_by_p_power(2).reduce_to(1));
  const auto bv = boundary(base, v);
  bool differ = true;
  for (std::size_t r = 0; r < da.size(); ++r) differ = differ && (db[r] - da[r] == bv[r]);
  out << "obstruction: defects of two set-lifts differ by a boundary: " << (differ ? "OK" : "FAIL") << "\n";

  const LiftCheck final_check = check_lift(cur);
  out << "relators exact at level 5: " << (final_check.relators_exact ? "OK" : "FAIL")
      << ", det = psi: " << (final_check.det_exact ? "OK" : "FAIL") << "\n";
  return final_check.ok() && torsor && differ ? kExitOk : kExitVerification;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Big-image lifts of diagonal residual representations at desk scale", "bigimage"};
  app.require_subcommand(1);

  auto* reg = app.add_subcommand("regularity", "Irregular indices of a prime or statistics over a range");
  std::optional<u64> reg_p;
  std::vector<u64> reg_range;
  std::string reg_cache;
  bool reg_json = false;
  unsigned reg_threads = 0;
  reg->add_option("p", reg_p, "Odd prime");
  reg->add_option("--range", reg_range, "Half-open range lo hi")->expected(2);
  reg->add_option("--cache", reg_cache, "Cache file (p: k1,k2 per line)");
  reg->add_option("--threads", reg_threads, "Worker threads (0 = hardware)");
  reg->add_flag("--json", reg_json, "Emit JSON");

  auto* exps = app.add_subcommand("exponents", "Select or search an exponent tuple");
  u64 ex_p = 0;
  unsigned ex_n = 0, ex_e = 0;
  bool ex_search = false, ex_json = false;
  exps->add_option("p", ex_p)->required();
  exps->add_option("n", ex_n)->required();
  exps->add_option("e", ex_e)->required();
  exps->add_flag("--search", ex_search, "Lexicographically first passing tuple");
  exps->add_flag("--json", ex_json, "Emit JSON");

  auto* cert = app.add_subcommand("certify", "Run the full pipeline and emit a certificate");
  u64 ce_p = 0;
  unsigned ce_n = 0, ce_e = 0, ce_level = 5;
  std::string ce_mode = "paper", ce_out;
  u64 ce_seed = 0;
  bool ce_json = false;
  cert->add_option("p", ce_p)->required();
  cert->add_option("n", ce_n)->required();
  cert->add_option("e", ce_e)->required();
  cert->add_option("--level", ce_level, "Target lift level");
  cert->add_option("--det-mode", ce_mode, "paper or plain");
  cert->add_option("--seed", ce_seed, "Recorded seed");
  cert->add_option("--out", ce_out, "Write the certificate JSON to a file");
  cert->add_flag("--json", ce_json, "Print the certificate JSON");

  auto* lie = app.add_subcommand("lie-verify", "Randomized commutator identity and closure checks");
  unsigned lv_n = 3, lv_trials = 100;
  u64 lv_p = 7, lv_seed = 0;
  lie->add_option("--n", lv_n);
  lie->add_option("--p", lv_p);
  lie->add_option("--trials", lv_trials);
  lie->add_option("--seed", lv_seed);

  auto* demo = app.add_subcommand("deform-demo", "Walk through rho_bar -> rho_2 -> rho_5 on the desk model");
  u64 dd_p = 0, dd_max_p = 23;
  std::string dd_model = "free";
  demo->add_option("p", dd_p)->required();
  demo->add_option("--model", dd_model, "free, or a model JSON file");
  demo->add_option("--max-p", dd_max_p, "Largest p for the free model");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (reg->parsed()) return cmd_regularity(reg_p, reg_range, reg_cache, reg_json, reg_threads, out, err);
    if (exps->parsed()) return cmd_exponents(ex_p, ex_n, ex_e, ex_search, ex_json, out, err);
    if (cert->parsed()) return cmd_certify(ce_p, ce_n, ce_e, ce_level, ce_mode, ce_seed, ce_out, ce_json, out, err);
    if (lie->parsed()) return cmd_lie_verify(lv_n, lv_p, lv_trials, lv_seed, out, err);
    if (demo->parsed()) return cmd_deform_demo(dd_p, dd_model, dd_max_p, out, err);
  } catch (const UsageError& e) {
    err << "usage: " << e.what() << "\n";
    return kExitUsage;
  } catch (const BudgetExceeded& e) {
    err << "partial: " << e.what() << "\n";
    return kExitBudget;
  } catch (const std::invalid_argument& e) {
    err << "usage: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace bigimage
