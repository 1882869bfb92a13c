#pragma once

// Deformations of the diagonal residual representation on a finitely
// presented desk model: sigma of order p-1 acting on free pro-p generators.
//
// A lift at level m assigns a matrix in GL_n(Z/p^m) to every generator. All
// linear algebra on cochains uses the residual action, which is diagonal, so
// each matrix coordinate (i, j) carries the scalar action
// rho_bar(g)_ii / rho_bar(g)_jj.

#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "bigimage/adjoint.hpp"
#include "bigimage/fp_linalg.hpp"
#include "bigimage/zp_arith.hpp"

namespace bigimage {

enum class GeneratorKind { Torsion, ProP };

struct Generator {
  std::string name;
  GeneratorKind kind = GeneratorKind::ProP;
  u64 exponent = 0;         // eigen-exponent a mod p-1 (pro-p only)
  bool cyclotomic = false;  // carries chi = 1+p (the generator gamma)
};

/// Exponent of a relator letter: a literal integer, or sign * c(a) where c(a)
/// is the Teichmuller value omega(g)^a reduced mod p^(level-1).
struct Power {
  bool teich = false;
  i64 literal = 1;
  u64 teich_exponent = 0;
  int sign = 1;

  static Power lit(i64 e) { return Power{false, e, 0, 1}; }
  static Power teich_power(u64 a, int sign) { return Power{true, 0, a, sign}; }
  i64 resolve(u64 p, unsigned level) const;
};

struct Letter {
  std::size_t generator;
  Power power;
};

struct Relator {
  std::string name;
  std::vector<Letter> word;
};

class DeskModel {
 public:
  /// Validates: odd prime p, exactly one torsion generator, unique names,
  /// relator letters referencing declared generators.
  DeskModel(u64 p, std::vector<Generator> generators, std::vector<Relator> relators);

  u64 p() const { return p_; }
  std::size_t size() const { return generators_.size(); }
  const std::vector<Generator>& generators() const { return generators_; }
  const std::vector<Relator>& relators() const { return relators_; }
  std::size_t torsion_index() const { return torsion_; }
  std::vector<std::size_t> pro_p_indices() const;
  std::optional<std::size_t> find(const std::string& name) const;
  std::optional<std::size_t> cyclotomic_index() const;

  /// c(a) = omega(g)^a mod p^(level-1) as an integer (mod p at level 1).
  u64 conjugation_exponent(u64 a, unsigned level) const;

  DeskModel with_relator(Relator r) const;

 private:
  u64 p_;
  std::vector<Generator> generators_;
  std::vector<Relator> relators_;
  std::size_t torsion_ = 0;
};

/// sigma, gamma (a = 0) and x_d (a = d) for odd 1 <= d <= p-2, with the
/// relators sigma^(p-1) and sigma y sigma^-1 y^-c(a) for each pro-p y.
/// Relator exponents are resolved per level, so one model serves all levels.
DeskModel desk_model(u64 p);

/// Model from JSON: {"p", "base": "default"|"none", "generators": [...],
/// "relators": [{"name", "word": [[gen, e | {"teich": a, "sign": s}], ...]}]}.
/// Throws std::invalid_argument on malformed input.
DeskModel model_from_json(const nlohmann::json& j);
DeskModel load_model_file(const std::filesystem::path& path);

/// A unit of Z/p^level per generator.
struct Character {
  u64 p = 0;
  unsigned level = 0;
  std::vector<u64> values;

  Character reduce_to(unsigned level) const;
  friend bool operator==(const Character&, const Character&) = default;
};

/// Every relator maps to 1.
bool is_character(const DeskModel& model, const Character& c);
/// chi_m: sigma -> omega(g), cyclotomic generator -> 1+p, other pro-p -> 1.
Character cyclotomic_character(const DeskModel& model, unsigned level);
Character character_power(const Character& c, i64 e);
/// Teichmuller lift of det rho_bar = chi_bar^(sum k).
Character tau_tilde(const DeskModel& model, const std::vector<i64>& ks, unsigned level);
/// Torsion values re-lifted by Teichmuller, pro-p values by their integer
/// representative. Throws if the result is not a character.
Character extend_character(const DeskModel& model, const Character& c, unsigned level);

enum class DetMode { Paper, Plain };
std::string to_string(DetMode m);
DetMode parse_det_mode(const std::string& s);

/// Paper: tau_tilde. Plain: chi^(sum k).
Character default_psi(const DeskModel& model, const std::vector<i64>& ks, DetMode mode, unsigned level);

/// Characters equal to tau mod p^2 that vary on the cyclotomic generator by
/// (1+p)^(p s), s = 0..count-1. At level m there are p^(m-2) of them.
std::vector<Character> enumerate_psi(const DeskModel& model, const Character& tau, unsigned level,
                                     std::size_t count);

struct LiftRep {
  std::shared_ptr<const DeskModel> model;
  std::vector<i64> ks;
  DetMode det_mode = DetMode::Paper;
  Character psi;
  std::vector<AdMatrix> images;  // aligned with model->generators()

  u64 p() const { return model->p(); }
  unsigned level() const { return psi.level; }
  std::size_t n() const { return ks.size(); }
  const AdMatrix& image(const std::string& name) const;
  /// Relator word evaluated at the lift's level.
  AdMatrix evaluate(const Relator& r) const;
  LiftRep reduce_to(unsigned level) const;
};

struct LiftCheck {
  bool residual_ok = true;
  bool relators_exact = true;
  bool det_exact = true;
  std::string detail;  // first failure
  bool ok() const { return residual_ok && relators_exact && det_exact; }
};

LiftCheck check_lift(const LiftRep& lift);

/// Level-1 lift: sigma -> diag(g^k_i mod p), pro-p generators -> Id.
/// Requires 1 <= n < p.
LiftRep residual_rep(std::shared_ptr<const DeskModel> model, std::vector<i64> ks, DetMode mode = DetMode::Paper);

/// Cocycles of the model with values in F_p(chi_bar^d). Vectors are indexed
/// by generator.
struct CocycleSpace {
  u64 d = 0;
  FpRows cocycles;
  FpRows coboundaries;
  FpRows h1_basis;  // cocycles completing the coboundaries to Z^1
  std::size_t h1_dim() const { return h1_basis.size(); }
};

CocycleSpace cocycle_space(const DeskModel& model, u64 d);

/// rho_2 = (Id + pF) rho_2' with rho_2' = diag(chi_2^k_i). Paper mode scales
/// the cyclotomic generator by (1+p)^(-sum k / n). Requires conditions (1)-(4)
/// on ks and a model with a cyclotomic generator.
LiftRep build_rho2(std::shared_ptr<const DeskModel> model, std::vector<i64> ks, DetMode mode = DetMode::Paper);

/// Level-1 matrix per generator.
using Cochain = std::vector<AdMatrix>;

Cochain zero_cochain(const LiftRep& lift);

/// Linearised relator map: for rho' = (Id + p^m u) rho, rho'(r) =
/// (Id + p^m boundary(u)_r) rho(r). One level-1 matrix per relator.
std::vector<AdMatrix> boundary(const LiftRep& lift, const Cochain& u);
bool is_cocycle(const LiftRep& lift, const Cochain& h);
/// g -> rho_bar(g) v rho_bar(g)^-1 - v.
Cochain coboundary(const LiftRep& lift, const AdMatrix& v);
bool is_coboundary(const LiftRep& lift, const Cochain& h);

/// Entrywise integer representatives at level + 1.
std::vector<AdMatrix> set_lift(const LiftRep& lift);

struct ObstructionReport {
  unsigned level = 0;                // level of the lift being extended
  std::vector<AdMatrix> defects;     // candidate(r) = Id + p^level defect_r
  std::vector<u64> det_defects;      // det(candidate(g)) = psi(g)(1 + p^level t_g)
  bool solvable = false;
  Cochain correction;                // u with boundary(u) = -defects, when solvable
  bool is_zero() const;
};

/// Throws std::invalid_argument when the candidate does not reduce to the
/// lift or psi_next does not reduce to the lift's determinant.
ObstructionReport obstruction(const LiftRep& lift, const std::vector<AdMatrix>& candidate,
                              const std::optional<Character>& psi_next = std::nullopt);

class LiftObstructed : public std::runtime_error {
 public:
  explicit LiftObstructed(ObstructionReport report);
  const ObstructionReport& report() const { return report_; }

 private:
  ObstructionReport report_;
};

/// Set-lift (the given candidate or the integer representative), then the
/// F_p correction solving relators and determinant together.
LiftRep lift_step(const LiftRep& lift, const Character& psi_next,
                  const std::optional<std::vector<AdMatrix>>& candidate = std::nullopt);
/// Uses extend_character(lift.psi) as the next determinant.
LiftRep lift_step(const LiftRep& lift);

/// Iterated lift_step. psi_target (if given) must reduce to lift.psi.
LiftRep lift_to(const LiftRep& lift, unsigned target_level, const std::optional<Character>& psi_target = std::nullopt);

enum class PhiMethod { ModuleClosure, Bfs };

struct PhiResult {
  FpSubspace space;
  PhiMethod method;
  bool overflow = false;  // BFS hit its bound; space is the module-closure bound
};

/// Phi_k as a subspace of F_p^(n^2). Needs a lift at level >= k+1.
PhiResult phi(const LiftRep& lift, unsigned k, PhiMethod method = PhiMethod::ModuleClosure,
              std::size_t bfs_bound = kDefaultBfsBound);

/// (Id + p^(m-1) h(g)) rho(g) at level m. Throws std::invalid_argument if h
/// is not trace-zero or the result is not relator-exact.
LiftRep twist_by_cocycle(const LiftRep& lift, const Cochain& h);

/// h with b(g) = (Id + p^(m-1) h(g)) a(g), for lifts a, b at level m that
/// agree mod p^(m-1).
Cochain cocycle_between(const LiftRep& a, const LiftRep& b);

nlohmann::ordered_json lift_to_json(const LiftRep& lift);
LiftRep lift_from_json(const nlohmann::json& j, std::shared_ptr<const DeskModel> model);

}  // namespace bigimage
