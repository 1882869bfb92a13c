#include "bigimage/deform.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "bigimage/exponents.hpp"

namespace bigimage {

namespace {

u64 mod_floor_u(i64 a, u64 m) {
  const i64 mm = static_cast<i64>(m);
  return static_cast<u64>(((a % mm) + mm) % mm);
}

std::string gen_label(const DeskModel& model, std::size_t g) { return model.generators()[g].name; }

}  // namespace

i64 Power::resolve(u64 p, unsigned level) const {
  if (!teich) return literal;
  const Modulus mod(p, std::max(1u, level > 1 ? level - 1 : 1u));
  const u64 g = primitive_root(p);
  const u64 base = powmod(g, teich_exponent % (p - 1), p);
  return sign * static_cast<i64>(teichmuller_value(base, mod));
}

DeskModel::DeskModel(u64 p, std::vector<Generator> generators, std::vector<Relator> relators)
    : p_(p), generators_(std::move(generators)), relators_(std::move(relators)) {
  if (p < 3 || !is_prime(p)) throw std::invalid_argument("DeskModel: p must be an odd prime");
  std::set<std::string> names;
  std::size_t torsion_count = 0;
  for (std::size_t i = 0; i < generators_.size(); ++i) {
    auto& g = generators_[i];
    if (g.name.empty() || !names.insert(g.name).second)
      throw std::invalid_argument("DeskModel: generator names must be unique and nonempty");
    if (g.kind == GeneratorKind::Torsion) {
      ++torsion_count;
      torsion_ = i;
      g.cyclotomic = false;
    }
    g.exponent %= (p - 1);
  }
  if (torsion_count != 1) throw std::invalid_argument("DeskModel: exactly one torsion generator is required");
  for (const auto& r : relators_)
    for (const auto& l : r.word)
      if (l.generator >= generators_.size())
        throw std::invalid_argument("DeskModel: relator " + r.name + " references an undeclared generator");
}

std::vector<std::size_t> DeskModel::pro_p_indices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < generators_.size(); ++i)
    if (generators_[i].kind == GeneratorKind::ProP) out.push_back(i);
  return out;
}

std::optional<std::size_t> DeskModel::find(const std::string& name) const {
  for (std::size_t i = 0; i < generators_.size(); ++i)
    if (generators_[i].name == name) return i;
  return std::nullopt;
}

std::optional<std::size_t> DeskModel::cyclotomic_index() const {
  for (std::size_t i = 0; i < generators_.size(); ++i)
    if (generators_[i].cyclotomic) return i;
  return std::nullopt;
}

u64 DeskModel::conjugation_exponent(u64 a, unsigned level) const {
  return static_cast<u64>(Power::teich_power(a, 1).resolve(p_, level));
}

DeskModel DeskModel::with_relator(Relator r) const {
  auto rels = relators_;
  rels.push_back(std::move(r));
  return DeskModel(p_, generators_, std::move(rels));
}

DeskModel desk_model(u64 p) {
  if (p < 3 || !is_prime(p)) throw std::invalid_argument("desk_model: p must be an odd prime");
  std::vector<Generator> gens;
  gens.push_back({"sigma", GeneratorKind::Torsion, 0, false});
  gens.push_back({"gamma", GeneratorKind::ProP, 0, true});
  for (u64 d = 1; d <= p - 2; d += 2) gens.push_back({"x" + std::to_string(d), GeneratorKind::ProP, d, false});
  std::vector<Relator> rels;
  rels.push_back({"sigma^" + std::to_string(p - 1), {{0, Power::lit(static_cast<i64>(p - 1))}}});
  for (std::size_t y = 1; y < gens.size(); ++y) {
    rels.push_back({"conj_" + gens[y].name,
                    {{0, Power::lit(1)}, {y, Power::lit(1)}, {0, Power::lit(-1)},
                     {y, Power::teich_power(gens[y].exponent, -1)}}});
  }
  return DeskModel(p, std::move(gens), std::move(rels));
}

DeskModel model_from_json(const nlohmann::json& j) {
  try {
    if (!j.is_object()) throw std::invalid_argument("model: expected a JSON object");
    const u64 p = j.at("p").get<u64>();
    const std::string base = j.value("base", std::string("none"));
    std::vector<Generator> gens;
    std::vector<Relator> rels;
    if (base == "default") {
      const DeskModel d = desk_model(p);
      gens = d.generators();
      rels = d.relators();
    } else if (base != "none") {
      throw std::invalid_argument("model: base must be \"default\" or \"none\"");
    }
    for (const auto& g : j.value("generators", nlohmann::json::array())) {
      Generator gen;
      gen.name = g.at("name").get<std::string>();
      const std::string kind = g.at("kind").get<std::string>();
      if (kind == "torsion") {
        gen.kind = GeneratorKind::Torsion;
      } else if (kind == "pro-p") {
        gen.kind = GeneratorKind::ProP;
      } else {
        throw std::invalid_argument("model: generator kind must be \"torsion\" or \"pro-p\"");
      }
      gen.exponent = g.value("exponent", u64{0});
      gen.cyclotomic = g.value("cyclotomic", false);
      gens.push_back(gen);
    }
    auto index_of = [&](const std::string& name) {
      for (std::size_t i = 0; i < gens.size(); ++i)
        if (gens[i].name == name) return i;
      throw std::invalid_argument("model: unknown generator " + name);
    };
    for (const auto& r : j.value("relators", nlohmann::json::array())) {
      Relator rel;
      rel.name = r.at("name").get<std::string>();
      for (const auto& l : r.at("word")) {
        if (!l.is_array() || l.size() != 2) throw std::invalid_argument("model: letters are [generator, power]");
        const std::size_t g = index_of(l[0].get<std::string>());
        const auto& e = l[1];
        if (e.is_number_integer()) {
          rel.word.push_back({g, Power::lit(e.get<i64>())});
        } else if (e.is_object()) {
          const int sign = e.value("sign", 1);
          if (sign != 1 && sign != -1) throw std::invalid_argument("model: sign must be 1 or -1");
          rel.word.push_back({g, Power::teich_power(e.at("teich").get<u64>(), sign)});
        } else {
          throw std::invalid_argument("model: power must be an integer or {\"teich\": a}");
        }
      }
      rels.push_back(std::move(rel));
    }
    return DeskModel(p, std::move(gens), std::move(rels));
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("model: ") + e.what());
  }
}

DeskModel load_model_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("model: cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("model: ") + e.what());
  }
  return model_from_json(j);
}

Character Character::reduce_to(unsigned target) const {
  if (target > level || target == 0) throw std::invalid_argument("Character::reduce_to: bad level");
  const Modulus mod(p, target);
  Character out{p, target, values};
  for (auto& v : out.values) v = mod.reduce(v);
  return out;
}

namespace {

u64 evaluate_character(const Character& c, const Relator& r) {
  const Modulus mod(c.p, c.level);
  u64 acc = 1;
  for (const auto& l : r.word) acc = mod.mul(acc, mod.pow_signed(c.values[l.generator], l.power.resolve(c.p, c.level)));
  return acc;
}

}  // namespace

bool is_character(const DeskModel& model, const Character& c) {
  if (c.p != model.p() || c.values.size() != model.size() || c.level == 0) return false;
  const Modulus mod(c.p, c.level);
  for (u64 v : c.values)
    if (!mod.is_unit(v)) return false;
  for (const auto& r : model.relators())
    if (evaluate_character(c, r) != 1) return false;
  return true;
}

Character cyclotomic_character(const DeskModel& model, unsigned level) {
  const u64 p = model.p();
  const Modulus mod(p, level);
  Character c{p, level, std::vector<u64>(model.size(), 1)};
  c.values[model.torsion_index()] = teichmuller_value(primitive_root(p), mod);
  if (auto cyc = model.cyclotomic_index()) c.values[*cyc] = mod.reduce(1 + p);
  return c;
}

Character character_power(const Character& c, i64 e) {
  const Modulus mod(c.p, c.level);
  Character out = c;
  for (auto& v : out.values) v = mod.pow_signed(v, e);
  return out;
}

Character tau_tilde(const DeskModel& model, const std::vector<i64>& ks, unsigned level) {
  const u64 p = model.p();
  const Modulus mod(p, level);
  const i64 sum = std::accumulate(ks.begin(), ks.end(), i64{0});
  Character c{p, level, std::vector<u64>(model.size(), 1)};
  const u64 residue = powmod(primitive_root(p), mod_floor_u(sum, p - 1), p);
  c.values[model.torsion_index()] = teichmuller_value(residue, mod);
  return c;
}

Character extend_character(const DeskModel& model, const Character& c, unsigned level) {
  if (level < c.level) return c.reduce_to(level);
  const Modulus mod(c.p, level);
  Character out{c.p, level, c.values};
  for (std::size_t g = 0; g < model.size(); ++g) {
    if (model.generators()[g].kind == GeneratorKind::Torsion)
      out.values[g] = teichmuller_value(c.values[g] % c.p, mod);
  }
  if (!is_character(model, out)) throw std::invalid_argument("extend_character: extension is not a character");
  return out;
}

std::string to_string(DetMode m) { return m == DetMode::Paper ? "paper" : "plain"; }

DetMode parse_det_mode(const std::string& s) {
  if (s == "paper") return DetMode::Paper;
  if (s == "plain") return DetMode::Plain;
  throw std::invalid_argument("det mode must be \"paper\" or \"plain\"");
}

Character default_psi(const DeskModel& model, const std::vector<i64>& ks, DetMode mode, unsigned level) {
  if (mode == DetMode::Paper) return tau_tilde(model, ks, level);
  return character_power(cyclotomic_character(model, level), std::accumulate(ks.begin(), ks.end(), i64{0}));
}

std::vector<Character> enumerate_psi(const DeskModel& model, const Character& tau, unsigned level,
                                     std::size_t count) {
  if (tau.level < level) throw std::invalid_argument("enumerate_psi: tau is given below the target level");
  const Character base = tau.reduce_to(level);
  const u64 p = model.p();
  const auto cyc = model.cyclotomic_index();
  u64 available = 1;
  if (cyc && level > 2)
    for (unsigned i = 2; i < level; ++i) available *= p;
  if (count > available)
    throw std::invalid_argument("enumerate_psi: only " + std::to_string(available) + " characters at level " +
                                std::to_string(level));
  const Modulus mod(p, level);
  const u64 step = mod.pow(mod.reduce(1 + p), p);
  std::vector<Character> out;
  u64 factor = 1;
  for (std::size_t s = 0; s < count; ++s) {
    Character c = base;
    if (cyc) c.values[*cyc] = mod.mul(base.values[*cyc], factor);
    out.push_back(std::move(c));
    factor = mod.mul(factor, step);
  }
  return out;
}

const AdMatrix& LiftRep::image(const std::string& name) const {
  const auto g = model->find(name);
  if (!g) throw std::invalid_argument("LiftRep::image: unknown generator " + name);
  return images[*g];
}

AdMatrix LiftRep::evaluate(const Relator& r) const {
  const Modulus mod(p(), level());
  AdMatrix acc = AdMatrix::identity(n(), mod);
  for (const auto& l : r.word) acc = acc * pow(images[l.generator], l.power.resolve(p(), level()));
  return acc;
}

LiftRep LiftRep::reduce_to(unsigned target) const {
  LiftRep out = *this;
  out.psi = psi.reduce_to(target);
  for (auto& m : out.images) m = m.reduce_to(target);
  return out;
}

namespace {

std::vector<u64> residual_diagonal(u64 p, const std::vector<i64>& ks) {
  const u64 g = primitive_root(p);
  std::vector<u64> d;
  for (i64 k : ks) d.push_back(powmod(g, mod_floor_u(k, p - 1), p));
  return d;
}

}  // namespace

LiftCheck check_lift(const LiftRep& lift) {
  LiftCheck out;
  const DeskModel& model = *lift.model;
  const u64 p = model.p();
  const unsigned level = lift.level();
  if (lift.images.size() != model.size() || lift.psi.values.size() != model.size() || lift.psi.p != p) {
    out.residual_ok = out.relators_exact = out.det_exact = false;
    out.detail = "shape mismatch";
    return out;
  }
  const Modulus mod(p, level);
  const auto diag = residual_diagonal(p, lift.ks);
  for (std::size_t g = 0; g < model.size(); ++g) {
    const AdMatrix& m = lift.images[g];
    if (m.n() != lift.n() || !(m.modulus() == mod)) {
      out.residual_ok = false;
      out.detail = "image of " + gen_label(model, g) + " has the wrong shape or level";
      return out;
    }
    const AdMatrix bar = m.reduce_to(1);
    const bool good = model.generators()[g].kind == GeneratorKind::Torsion
                          ? bar == AdMatrix::diagonal(diag, Modulus(p, 1))
                          : bar.is_identity();
    if (!good && out.residual_ok) {
      out.residual_ok = false;
      out.detail = "image of " + gen_label(model, g) + " does not reduce to rho_bar";
    }
    if (m.det() != mod.reduce(lift.psi.values[g]) && out.det_exact) {
      out.det_exact = false;
      if (out.detail.empty()) out.detail = "det of " + gen_label(model, g) + " differs from psi";
    }
  }
  for (const auto& r : model.relators()) {
    if (!lift.evaluate(r).is_identity()) {
      out.relators_exact = false;
      if (out.detail.empty()) out.detail = "relator " + r.name + " is not Id";
      break;
    }
  }
  return out;
}

LiftRep residual_rep(std::shared_ptr<const DeskModel> model, std::vector<i64> ks, DetMode mode) {
  const u64 p = model->p();
  if (ks.empty() || ks.size() >= p) throw std::invalid_argument("residual_rep: need 1 <= n < p");
  const Modulus mod(p, 1);
  LiftRep lift;
  lift.images.assign(model->size(), AdMatrix::identity(ks.size(), mod));
  lift.images[model->torsion_index()] = AdMatrix::diagonal(residual_diagonal(p, ks), mod);
  lift.psi = default_psi(*model, ks, mode, 1);
  lift.model = std::move(model);
  lift.ks = std::move(ks);
  lift.det_mode = mode;
  const auto check = check_lift(lift);
  if (!check.ok()) throw std::invalid_argument("residual_rep: " + check.detail);
  return lift;
}

namespace {

u64 geometric_sum(u64 lambda, i64 e, u64 p) {
  if (lambda == 1) return mod_floor_u(e, p);
  const Modulus mod(p, 1);
  const u64 le = mod.pow(lambda, mod_floor_u(e, p - 1));
  return mod.mul(mod.sub(le, 1), mod.inv(mod.sub(lambda, 1)));
}

// Fox Jacobian for a scalar action g -> lambda[g]: rows are relators,
// columns generators. Exponents are resolved at `level`.
FpRows fox_matrix(const DeskModel& model, const std::vector<u64>& lambda, unsigned level) {
  const u64 p = model.p();
  const Modulus mod(p, 1);
  FpRows rows;
  for (const auto& r : model.relators()) {
    FpVector row(model.size(), 0);
    u64 prefix = 1;
    for (const auto& l : r.word) {
      const i64 e = l.power.resolve(p, level);
      const u64 lg = lambda[l.generator];
      row[l.generator] = mod.add(row[l.generator], mod.mul(prefix, geometric_sum(lg, e, p)));
      prefix = mod.mul(prefix, mod.pow(lg, mod_floor_u(e, p - 1)));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

// Residual diagonal entries of each generator image.
std::vector<std::vector<u64>> residual_diagonals(const LiftRep& lift) {
  std::vector<std::vector<u64>> out;
  for (const auto& m : lift.images) {
    const AdMatrix bar = m.reduce_to(1);
    std::vector<u64> d(lift.n());
    for (std::size_t i = 0; i < lift.n(); ++i) d[i] = bar.at(i, i);
    out.push_back(std::move(d));
  }
  return out;
}

std::vector<u64> coordinate_action(const std::vector<std::vector<u64>>& diag, std::size_t i, std::size_t j, u64 p) {
  const Modulus mod(p, 1);
  std::vector<u64> lambda;
  for (const auto& d : diag) lambda.push_back(mod.mul(d[i], mod.inv(d[j])));
  return lambda;
}

// Fox Jacobians per coordinate (i, j), row-major over coordinates.
std::vector<FpRows> coordinate_jacobians(const LiftRep& lift, unsigned level) {
  const auto diag = residual_diagonals(lift);
  std::vector<FpRows> out;
  for (std::size_t i = 0; i < lift.n(); ++i)
    for (std::size_t j = 0; j < lift.n(); ++j)
      out.push_back(fox_matrix(*lift.model, coordinate_action(diag, i, j, lift.p()), level));
  return out;
}

Cochain empty_cochain(std::size_t gens, std::size_t n, u64 p) {
  return Cochain(gens, AdMatrix(n, Modulus(p, 1)));
}

std::vector<AdMatrix> apply_jacobians(const LiftRep& lift, const std::vector<FpRows>& jac, const Cochain& u) {
  const u64 p = lift.p();
  const std::size_t n = lift.n();
  const Modulus mod(p, 1);
  std::vector<AdMatrix> out(lift.model->relators().size(), AdMatrix(n, mod));
  for (std::size_t c = 0; c < n * n; ++c) {
    const std::size_t i = c / n, j = c % n;
    for (std::size_t r = 0; r < out.size(); ++r) {
      u64 acc = 0;
      for (std::size_t g = 0; g < u.size(); ++g) acc = mod.add(acc, mod.mul(jac[c][r][g], u[g].at(i, j) % p));
      out[r].set(i, j, acc);
    }
  }
  return out;
}

// Solves boundary(u) = -defects, and trace(u(g)) = -t_g when det defects are
// given. Off-diagonal coordinates decouple; the diagonal block is solved
// jointly because of the trace equations.
std::optional<Cochain> solve_correction(const LiftRep& lift, const std::vector<FpRows>& jac,
                                        const std::vector<AdMatrix>& defects,
                                        const std::optional<std::vector<u64>>& det_defects) {
  const u64 p = lift.p();
  const std::size_t n = lift.n();
  const std::size_t gens = lift.model->size();
  const std::size_t rels = defects.size();
  const Modulus mod(p, 1);
  Cochain u = empty_cochain(gens, n, p);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      FpVector b(rels);
      for (std::size_t r = 0; r < rels; ++r) b[r] = mod.neg(defects[r].at(i, j));
      const auto x = solve(jac[i * n + j], b, p, gens);
      if (!x) return std::nullopt;
      for (std::size_t g = 0; g < gens; ++g) u[g].set(i, j, (*x)[g]);
    }
  }
  // Diagonal block: variable g * n + i.
  FpRows a;
  FpVector b;
  for (std::size_t i = 0; i < n; ++i) {
    const FpRows& jd = jac[i * n + i];
    for (std::size_t r = 0; r < rels; ++r) {
      FpVector row(gens * n, 0);
      for (std::size_t g = 0; g < gens; ++g) row[g * n + i] = jd[r][g];
      a.push_back(std::move(row));
      b.push_back(mod.neg(defects[r].at(i, i)));
    }
  }
  if (det_defects) {
    for (std::size_t g = 0; g < gens; ++g) {
      FpVector row(gens * n, 0);
      for (std::size_t i = 0; i < n; ++i) row[g * n + i] = 1;
      a.push_back(std::move(row));
      b.push_back(mod.neg((*det_defects)[g]));
    }
  }
  const auto x = solve(a, b, p, gens * n);
  if (!x) return std::nullopt;
  for (std::size_t g = 0; g < gens; ++g)
    for (std::size_t i = 0; i < n; ++i) u[g].set(i, i, (*x)[g * n + i]);
  return u;
}

FpVector flatten(const Cochain& h) {
  FpVector v;
  for (const auto& m : h) {
    const AdMatrix bar = m.reduce_to(1);
    v.insert(v.end(), bar.entries().begin(), bar.entries().end());
  }
  return v;
}

}  // namespace

CocycleSpace cocycle_space(const DeskModel& model, u64 d) {
  const u64 p = model.p();
  if (d > p - 2) throw std::invalid_argument("cocycle_space: need 0 <= d <= p-2");
  std::vector<u64> lambda(model.size(), 1);
  lambda[model.torsion_index()] = powmod(primitive_root(p), d, p);
  CocycleSpace out;
  out.d = d;
  out.cocycles = kernel_basis(fox_matrix(model, lambda, 2), p, model.size());
  FpVector cob(model.size());
  for (std::size_t g = 0; g < model.size(); ++g) cob[g] = (lambda[g] + p - 1) % p;
  FpSubspace span(p, model.size());
  if (span.insert(cob)) out.coboundaries.push_back(cob);
  for (const auto& z : out.cocycles)
    if (span.insert(z)) out.h1_basis.push_back(z);
  return out;
}

LiftRep build_rho2(std::shared_ptr<const DeskModel> model, std::vector<i64> ks, DetMode mode) {
  const u64 p = model->p();
  const std::size_t n = ks.size();
  if (n < 1 || n >= p) throw std::invalid_argument("build_rho2: need 1 <= n < p");
  const auto report = check_conditions(p, ks, make_profile(p, std::vector<u64>{}));
  for (unsigned c = 0; c < 4; ++c)
    if (!report.conditions[c].pass)
      throw std::invalid_argument("build_rho2: condition (" + std::to_string(c + 1) +
                                  ") fails: " + report.conditions[c].witness);
  const auto cyc = model->cyclotomic_index();
  if (!cyc) throw std::invalid_argument("build_rho2: model has no cyclotomic generator");

  const Modulus mod(p, 2);
  const u64 g = primitive_root(p);
  std::vector<u64> sigma_diag, gamma_diag;
  i64 shift = 0;
  if (mode == DetMode::Paper) {
    const i64 sum = std::accumulate(ks.begin(), ks.end(), i64{0});
    const Modulus mp(p, 1);
    shift = static_cast<i64>(mp.mul(mp.reduce_signed(sum), mp.inv(n % p)));
  }
  for (i64 k : ks) {
    sigma_diag.push_back(teichmuller_value(powmod(g, mod_floor_u(k, p - 1), p), mod));
    gamma_diag.push_back(mod.pow_signed(mod.reduce(1 + p), k - shift));
  }
  LiftRep lift;
  lift.images.assign(model->size(), AdMatrix::identity(n, mod));
  lift.images[model->torsion_index()] = AdMatrix::diagonal(sigma_diag, mod);
  lift.images[*cyc] = AdMatrix::diagonal(gamma_diag, mod);
  for (std::size_t y : model->pro_p_indices()) {
    const u64 d = model->generators()[y].exponent;
    if (y == *cyc || d % 2 == 0) continue;
    AdMatrix f(n, Modulus(p, 1));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (i != j && (i + j) % 2 == 1 && mod_floor_u(ks[i] - ks[j], p - 1) == d) f.set(i, j, 1);
    lift.images[y] = AdMatrix::identity(n, mod) + f.times_p_power(1, 2);
  }
  lift.psi = default_psi(*model, ks, mode, 2);
  lift.model = std::move(model);
  lift.ks = std::move(ks);
  lift.det_mode = mode;
  const auto check = check_lift(lift);
  if (!check.ok()) throw std::logic_error("build_rho2: " + check.detail);
  return lift;
}

Cochain zero_cochain(const LiftRep& lift) { return empty_cochain(lift.model->size(), lift.n(), lift.p()); }

std::vector<AdMatrix> boundary(const LiftRep& lift, const Cochain& u) {
  if (u.size() != lift.model->size()) throw std::invalid_argument("boundary: cochain size mismatch");
  return apply_jacobians(lift, coordinate_jacobians(lift, lift.level() + 1), u);
}

bool is_cocycle(const LiftRep& lift, const Cochain& h) {
  const auto b = boundary(lift, h);
  return std::all_of(b.begin(), b.end(), [](const AdMatrix& m) { return m.is_zero(); });
}

Cochain coboundary(const LiftRep& lift, const AdMatrix& v) {
  const Modulus mod(lift.p(), 1);
  const AdMatrix vb = v.reduce_to(1);
  Cochain out;
  for (const auto& img : lift.images) {
    const AdMatrix bar = img.reduce_to(1);
    out.push_back(bar * vb * bar.inverse() - vb);
  }
  return out;
}

bool is_coboundary(const LiftRep& lift, const Cochain& h) {
  const std::size_t n = lift.n();
  const u64 p = lift.p();
  FpSubspace span(p, lift.model->size() * n * n);
  for (std::size_t i = 1; i <= n; ++i)
    for (std::size_t j = 1; j <= n; ++j)
      span.insert(flatten(coboundary(lift, AdMatrix::elementary(n, i, j, Modulus(p, 1)))));
  return span.contains(flatten(h));
}

std::vector<AdMatrix> set_lift(const LiftRep& lift) {
  std::vector<AdMatrix> out;
  for (const auto& m : lift.images) out.push_back(m.lift_to(lift.level() + 1));
  return out;
}

bool ObstructionReport::is_zero() const {
  return std::all_of(defects.begin(), defects.end(), [](const AdMatrix& m) { return m.is_zero(); });
}

ObstructionReport obstruction(const LiftRep& lift, const std::vector<AdMatrix>& candidate,
                              const std::optional<Character>& psi_next) {
  const DeskModel& model = *lift.model;
  const u64 p = lift.p();
  const unsigned m = lift.level();
  const Modulus next(p, m + 1);
  if (candidate.size() != model.size()) throw std::invalid_argument("obstruction: candidate size mismatch");
  for (std::size_t g = 0; g < model.size(); ++g) {
    if (!(candidate[g].modulus() == next) || candidate[g].n() != lift.n())
      throw std::invalid_argument("obstruction: candidate must live at level " + std::to_string(m + 1));
    if (!(candidate[g].reduce_to(m) == lift.images[g]))
      throw std::invalid_argument("obstruction: candidate for " + gen_label(model, g) + " does not reduce to the lift");
  }
  if (psi_next && (psi_next->level != m + 1 || !(psi_next->reduce_to(m) == lift.psi)))
    throw std::invalid_argument("obstruction: psi does not reduce to the lift's determinant");

  LiftRep cand = lift;
  cand.images = candidate;
  cand.psi.level = m + 1;
  ObstructionReport out;
  out.level = m;
  const AdMatrix id = AdMatrix::identity(lift.n(), next);
  for (const auto& r : model.relators())
    out.defects.push_back((cand.evaluate(r) - id).divide_by_p_power(m).reduce_to(1));
  std::optional<std::vector<u64>> det_defects;
  if (psi_next) {
    det_defects.emplace();
    for (std::size_t g = 0; g < model.size(); ++g) {
      const u64 ratio = next.mul(candidate[g].det(), next.inv(psi_next->values[g]));
      const u64 delta = next.sub(ratio, 1);
      if (delta % next.prime_power(m) != 0)
        throw std::invalid_argument("obstruction: determinant of the candidate disagrees with psi mod p^m");
      det_defects->push_back((delta / next.prime_power(m)) % p);
    }
    out.det_defects = *det_defects;
  }
  const auto jac = coordinate_jacobians(lift, m + 1);
  if (auto u = solve_correction(lift, jac, out.defects, det_defects)) {
    out.solvable = true;
    out.correction = std::move(*u);
  }
  return out;
}

LiftObstructed::LiftObstructed(ObstructionReport report)
    : std::runtime_error("lift obstructed at level " + std::to_string(report.level)), report_(std::move(report)) {}

LiftRep lift_step(const LiftRep& lift, const Character& psi_next,
                  const std::optional<std::vector<AdMatrix>>& candidate) {
  const unsigned m = lift.level();
  const std::vector<AdMatrix> cand = candidate ? *candidate : set_lift(lift);
  ObstructionReport report = obstruction(lift, cand, psi_next);
  if (!report.solvable) throw LiftObstructed(std::move(report));
  LiftRep out = lift;
  out.psi = psi_next;
  const Modulus next(lift.p(), m + 1);
  const AdMatrix id = AdMatrix::identity(lift.n(), next);
  for (std::size_t g = 0; g < cand.size(); ++g)
    out.images[g] = (id + report.correction[g].times_p_power(m, m + 1)) * cand[g];
  const auto check = check_lift(out);
  if (!check.ok()) throw std::logic_error("lift_step: corrected lift fails verification: " + check.detail);
  return out;
}

LiftRep lift_step(const LiftRep& lift) {
  return lift_step(lift, extend_character(*lift.model, lift.psi, lift.level() + 1));
}

LiftRep lift_to(const LiftRep& lift, unsigned target_level, const std::optional<Character>& psi_target) {
  if (target_level < lift.level()) throw std::invalid_argument("lift_to: target below the current level");
  if (psi_target) {
    if (psi_target->level != target_level || !(psi_target->reduce_to(lift.level()) == lift.psi))
      throw std::invalid_argument("lift_to: psi does not reduce to the lift's determinant");
    if (!is_character(*lift.model, *psi_target)) throw std::invalid_argument("lift_to: psi is not a character");
  }
  LiftRep cur = lift;
  while (cur.level() < target_level) {
    const unsigned next = cur.level() + 1;
    cur = psi_target ? lift_step(cur, psi_target->reduce_to(next)) : lift_step(cur);
  }
  return cur;
}

namespace {

FpSubspace sigma_close(FpSubspace space, const AdMatrix& sigma_bar, std::size_t n) {
  const AdMatrix inv = sigma_bar.inverse();
  const u64 p = space.p();
  bool grew = true;
  while (grew) {
    grew = false;
    const FpRows basis = space.basis();
    for (const auto& v : basis)
      if (space.insert(to_vector(sigma_bar * from_vector(n, p, v) * inv))) grew = true;
  }
  return space;
}

FpSubspace phi_module_closure(const LiftRep& lift, unsigned k) {
  const std::size_t n = lift.n();
  const u64 p = lift.p();
  const LiftRep low = lift.reduce_to(k + 1);
  FpSubspace space(p, n * n);
  for (std::size_t y : lift.model->pro_p_indices()) {
    AdMatrix img = low.images[y];
    while (!img.reduce_to(k).is_identity()) img = pow(img, static_cast<i64>(p));
    const AdMatrix id = AdMatrix::identity(n, img.modulus());
    space.insert(to_vector((img - id).divide_by_p_power(k).reduce_to(1)));
  }
  return sigma_close(std::move(space), low.images[lift.model->torsion_index()].reduce_to(1), n);
}

}  // namespace

PhiResult phi(const LiftRep& lift, unsigned k, PhiMethod method, std::size_t bfs_bound) {
  if (k < 1 || lift.level() < k + 1) throw std::invalid_argument("phi: need 1 <= k and a lift at level >= k+1");
  if (method == PhiMethod::ModuleClosure) return {phi_module_closure(lift, k), method, false};
  const LiftRep low = lift.reduce_to(k + 1);
  const auto closure = subgroup_bfs(low.images, bfs_bound);
  if (closure.overflow) return {phi_module_closure(lift, k), PhiMethod::ModuleClosure, true};
  const std::size_t n = lift.n();
  FpSubspace space(lift.p(), n * n);
  const AdMatrix id = AdMatrix::identity(n, low.images.front().modulus());
  for (const auto& x : closure.elements)
    if (x.reduce_to(k).is_identity()) space.insert(to_vector((x - id).divide_by_p_power(k).reduce_to(1)));
  return {space, method, false};
}

LiftRep twist_by_cocycle(const LiftRep& lift, const Cochain& h) {
  const unsigned m = lift.level();
  if (m < 2) throw std::invalid_argument("twist_by_cocycle: lift must be at level >= 2");
  if (h.size() != lift.model->size()) throw std::invalid_argument("twist_by_cocycle: cochain size mismatch");
  LiftRep out = lift;
  const Modulus mod(lift.p(), m);
  const AdMatrix id = AdMatrix::identity(lift.n(), mod);
  for (std::size_t g = 0; g < h.size(); ++g) {
    if (h[g].reduce_to(1).trace() != 0) throw std::invalid_argument("twist_by_cocycle: h is not trace-zero");
    out.images[g] = (id + h[g].reduce_to(1).times_p_power(m - 1, m)) * lift.images[g];
  }
  const auto check = check_lift(out);
  if (!check.ok()) throw std::invalid_argument("twist_by_cocycle: h is not a cocycle (" + check.detail + ")");
  return out;
}

Cochain cocycle_between(const LiftRep& a, const LiftRep& b) {
  const unsigned m = a.level();
  if (b.level() != m || m < 2 || a.n() != b.n() || a.images.size() != b.images.size())
    throw std::invalid_argument("cocycle_between: lifts must share shape and level >= 2");
  Cochain h;
  const AdMatrix id = AdMatrix::identity(a.n(), Modulus(a.p(), m));
  for (std::size_t g = 0; g < a.images.size(); ++g) {
    const AdMatrix ratio = b.images[g] * a.images[g].inverse() - id;
    h.push_back(ratio.divide_by_p_power(m - 1).reduce_to(1));
  }
  return h;
}

nlohmann::ordered_json lift_to_json(const LiftRep& lift) {
  nlohmann::ordered_json j;
  j["p"] = lift.p();
  j["m"] = lift.level();
  j["n"] = lift.n();
  j["ks"] = lift.ks;
  j["det_mode"] = to_string(lift.det_mode);
  nlohmann::ordered_json psi = nlohmann::ordered_json::object();
  nlohmann::ordered_json images = nlohmann::ordered_json::object();
  for (std::size_t g = 0; g < lift.model->size(); ++g) {
    const std::string& name = lift.model->generators()[g].name;
    psi[name] = lift.psi.values[g];
    images[name] = lift.images[g].entries();
  }
  j["psi"] = psi;
  j["images"] = images;
  return j;
}

LiftRep lift_from_json(const nlohmann::json& j, std::shared_ptr<const DeskModel> model) {
  try {
    LiftRep lift;
    const u64 p = j.at("p").get<u64>();
    if (p != model->p()) throw std::invalid_argument("lift: prime differs from the model");
    const unsigned m = j.at("m").get<unsigned>();
    const std::size_t n = j.at("n").get<std::size_t>();
    lift.ks = j.at("ks").get<std::vector<i64>>();
    if (lift.ks.size() != n) throw std::invalid_argument("lift: ks has the wrong length");
    lift.det_mode = parse_det_mode(j.at("det_mode").get<std::string>());
    const Modulus mod(p, m);
    lift.psi = Character{p, m, std::vector<u64>(model->size())};
    for (std::size_t g = 0; g < model->size(); ++g) {
      const std::string& name = model->generators()[g].name;
      lift.psi.values[g] = j.at("psi").at(name).get<u64>();
      auto entries = j.at("images").at(name).get<std::vector<u64>>();
      if (entries.size() != n * n) throw std::invalid_argument("lift: image of " + name + " has the wrong size");
      lift.images.emplace_back(n, mod, std::move(entries));
    }
    lift.model = std::move(model);
    const auto check = check_lift(lift);
    if (!check.ok()) throw std::invalid_argument("lift: " + check.detail);
    return lift;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("lift: ") + e.what());
  }
}

}  // namespace bigimage
