#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "metachem/behavior.hpp"
#include "metachem/config.hpp"
#include "metachem/graph.hpp"
#include "metachem/particle.hpp"
#include "metachem/rng.hpp"
#include "metachem/state.hpp"

// Matrix chemistry: particles are 3x3 complex Hermitian matrices with
// nonzero trace. Pairs link with probability s*a, where a measures how
// anti-parallel their chosen unit eigenvectors are and s applies a gaussian
// kernel to the difference of the matching normalised eigenvalues. A formed
// link is the Jordan product (AB+BA)/2 and remembers its reactants, so
// decomposition can restore them exactly and atom counts stay conserved.

namespace metachem::ja {

using Mat3 = Eigen::Matrix3cd;
using Vec3c = Eigen::Vector3cd;

enum class TransferMode { Single, None, Random, Grid };

TransferMode transfer_mode_from(const std::string& word);
std::string to_string(TransferMode m);

struct Config {
  std::int64_t tanks = 1;
  std::int64_t atoms_per_tank = 16;
  std::int64_t links_per_step = 10;    // link attempts per time unit
  std::int64_t decomps_per_step = 10;  // decomposition attempts per time unit
  TransferMode transfer = TransferMode::Single;
  std::int64_t grid_rows = 0;  // grid mode only; rows*cols must equal tanks
  std::int64_t grid_cols = 0;
  std::int64_t time_bound = 10;

  // Reads the [ja] section; unknown transfer words and inconsistent grid
  // shapes are rejected.
  static Config from(const ConfigDoc& doc);
  void check() const;
};

// ---- linking maths ----

Mat3 jordan(const Mat3& a, const Mat3& b);

struct EigenSystem {
  std::array<double, 3> lambda;  // ascending; ties ordered by vector key
  std::array<double, 3> mu;      // lambda / sum(lambda)
  std::array<Vec3c, 3> vectors;  // unit length, phase-canonical
};

// Eigen-decomposition with a deterministic presentation: each vector is
// rotated so its largest-modulus component (ties: lowest index) is real and
// nonnegative. Throws ZeroTrace when the trace vanishes, NonConvergence if
// the solver fails.
EigenSystem hermitian_eig3(const Mat3& m);

// 1 - ((re<u,v>)+1)/2, clamped into [0,1]: 0 parallel, 1 anti-parallel.
double alignment(const Vec3c& u, const Vec3c& v);

struct PairChoice {
  int i = 0;  // eigenvector index into a
  int j = 0;  // eigenvector index into b
  double align = 0.0;
};

// Highest alignment over the 9 pairs; ties take the smallest (i, j).
PairChoice best_pair(const EigenSystem& a, const EigenSystem& b);

// Standard normal density of (mu_a - mu_b); peaks at 1/sqrt(2*pi).
double strength(double mu_a, double mu_b);
inline constexpr double kMaxStrength = 0.3989422804014327;

// ---- the atom set ----

// All Hermitian 3x3 matrices with entries from {0, ±1, ±i, ±1±i} (real
// diagonal) and nonzero trace, in a fixed enumeration order.
std::vector<Mat3> enumerate_atoms();

std::array<std::int64_t, 3> quantize_mu(const std::array<double, 3>& mu);

struct Census {
  std::int64_t candidates = 0;  // entry combinations before the trace cut
  std::int64_t atoms = 0;
  std::int64_t classes = 0;  // distinct quantized normalised spectra
  std::vector<std::array<double, 3>> representatives;  // first mu per class
  std::vector<std::int64_t> class_sizes;
};

Census census(const std::vector<Mat3>& atoms);
std::string census_csv(const Census& c);

// ---- particles ----

struct JaParticle;
using JaPtr = std::shared_ptr<const JaParticle>;

struct JaParticle {
  Mat3 matrix;
  std::int64_t atom_count = 1;
  JaPtr left, right;  // composites remember their reactants
  double link_strength = 0.0;
  double link_alignment = 0.0;
  int pair_i = 0;
  int pair_j = 0;
  bool is_atom() const { return left == nullptr; }
};

JaPtr make_atom(const Mat3& m);  // ZeroTrace when the trace vanishes

std::string ja_serial(const JaParticle& p);
// Bag key: "<tank>|ja<atoms>:<128-bit content digest>". The tank tag models
// separate well-mixed tanks inside one container.
std::string ja_key(const std::string& tank, const JaParticle& p);
Particle make_particle(const std::string& tank, JaPtr p);
std::string tank_of(const Particle& p);
JaPtr payload_of(const Particle& p);

struct LinkAssessment {
  double s = 0.0;
  double a = 0.0;
  double p = 0.0;  // s*a
  int i = 0;
  int j = 0;
};

LinkAssessment assess_link(const JaParticle& a, const JaParticle& b);

// Draws r; links when r < p and the product trace is nonzero.
std::optional<JaPtr> attempt_link(JaPtr a, JaPtr b, Rng& rng);

// Restores the two stored reactants. Throws NoLinks on atoms.
std::pair<JaPtr, JaPtr> break_top(const JaParticle& p);

// Breaks the outermost link with probability 1 - s*a. Interior links are
// not breakable: their remnants would have no defined matrix, so the top
// link is also the weakest recoverable one.
std::optional<std::pair<JaPtr, JaPtr>> attempt_decompose(const JaParticle& p,
                                                         Rng& rng);

// ---- transfers between tanks ----

// Merges both tanks, sorts by atom count descending (ties by key), hands the
// largest to A and every later particle to the lighter side (ties to A).
std::pair<std::vector<JaPtr>, std::vector<JaPtr>> balance_transfer(
    std::vector<JaPtr> a, std::vector<JaPtr> b);

// Tank index pairs for one transfer stage. Single/none yield nothing;
// random draws 0..10 pairs without replacement inside each pair; grid picks
// a tank then a Moore neighbour (no wrap-around).
std::vector<std::pair<std::int64_t, std::int64_t>> select_transfer_pairs(
    TransferMode mode, std::int64_t tanks, Rng& rng,
    std::int64_t grid_rows = 0, std::int64_t grid_cols = 0);

// ---- summary statistics ----

struct TankStats {
  std::int64_t particles = 0;
  std::int64_t atoms = 0;
  std::int64_t links = 0;
  std::int64_t distinct_atoms = 0;   // distinct atom matrices present
  double mean_atom_count = 0.0;      // particle weight
  double mean_link_strength = 0.0;   // over every link in every particle
  double mean_trace_mag = 0.0;
  double largest_link = 0.0;         // strongest link anywhere in the tank
};

TankStats tank_stats(const std::vector<JaPtr>& particles);
std::map<std::string, std::vector<JaPtr>> by_tank(const ParticleBag& bag);

// ---- graphs ----

inline const NodeId kInit{NodeKind::Tank, "init"};
inline const NodeId kTank{NodeKind::Tank, "Tank"};
inline const NodeId kReactants{NodeKind::Sample, "Reactants"};
inline const NodeId kDecomp{NodeKind::Sample, "Decomp"};
inline const NodeId kMat{NodeKind::Environment, "Mat"};
inline const NodeId kEval{NodeKind::Environment, "Eval"};
inline const NodeId kEvec{NodeKind::Environment, "Evec"};
inline const NodeId kPairs{NodeKind::Environment, "Pairs"};
inline const NodeId kStrengths{NodeKind::Environment, "Strengths"};
inline const NodeId kNewMat{NodeKind::Environment, "New_Mat"};
inline const NodeId kCounters{NodeKind::Environment, "counters"};
inline const NodeId kTimeEnv{NodeKind::Environment, "time"};
inline const NodeId kLog{NodeKind::Environment, "log"};

// Document form: the whole link pipeline appears as the single action
// a:Link, decomposition as a:Decomp.
GraphDef build_macro();

// Runnable form with the link pipeline expanded into its observer /
// decision / action stages.
GraphDef build_runnable();

BehaviorSet behaviors(const Config& cfg);

// Loops back to `again` until a per-step attempt budget is spent. The
// counter never resets, so the budget scales with the shared time counter.
BehaviorPtr attempt_count_decision(std::int64_t per_step, std::string var, NodeId done,
                                   NodeId again);

// Atoms drawn uniformly from the enumerated set, tank by tank.
ParticleBag initial_atoms(const Config& cfg, std::uint64_t seed);
SystemState initial_state(const GraphDef& g, const Config& cfg,
                          std::uint64_t seed);

// Total atoms bound in particles across every particle container.
std::int64_t total_atoms(const SystemState& st);

}  // namespace metachem::ja
