#include "metachem/ja.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include "metachem/env_value.hpp"
#include "metachem/errors.hpp"

namespace metachem::ja {

namespace {

using Complex = std::complex<double>;

const double kSqrt2Pi = std::sqrt(2.0 * std::numbers::pi);

// control node ids of the runnable graph
const NodeId nLoad{NodeKind::Sampler, "load"};
const NodeId nTime{NodeKind::Observer, "time"};
const NodeId nReact{NodeKind::Sampler, "react"};
const NodeId nStruct{NodeKind::Observer, "struct"};
const NodeId nAlign{NodeKind::Observer, "align"};
const NodeId nStrength{NodeKind::Observer, "strength"};
const NodeId nProb{NodeKind::Decision, "prob"};
const NodeId nNewMat{NodeKind::Action, "new_mat"};
const NodeId nValid{NodeKind::Decision, "valid"};
const NodeId nLink{NodeKind::Action, "link"};
const NodeId nRetReact{NodeKind::Sampler, "ret_react"};
const NodeId nLinks{NodeKind::Observer, "links"};
const NodeId nLinked{NodeKind::Decision, "linked"};
const NodeId nDecompPick{NodeKind::Sampler, "decomp"};
const NodeId nDecompose{NodeKind::Action, "decompose"};
const NodeId nRetDecomp{NodeKind::Sampler, "ret_decomp"};
const NodeId nDecomps{NodeKind::Observer, "decomps"};
const NodeId nDecomped{NodeKind::Decision, "decomped"};
const NodeId nTransfer{NodeKind::Sampler, "transfer"};
const NodeId nLog{NodeKind::Observer, "log"};
const NodeId nMore{NodeKind::Decision, "more"};
const NodeId nDone{NodeKind::Termination, "done"};

EnvValue mat_to_env(const Mat3& m) {
  EnvList out;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) out.push_back(Vec2{m(r, c).real(), m(r, c).imag()});
  return out;
}

Mat3 mat_from_env(const EnvValue& v) {
  const EnvList& l = v.list();
  if (l.size() != 9) throw Error(ErrorCode::Type, "matrix value needs 9 entries");
  Mat3 m;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) {
      const Vec2& e = l[static_cast<std::size_t>(r * 3 + c)].vec();
      m(r, c) = Complex(e.x, e.y);
    }
  return m;
}

EnvValue vec3_to_env(const Vec3c& v) {
  EnvList out;
  for (int i = 0; i < 3; ++i) out.push_back(Vec2{v(i).real(), v(i).imag()});
  return out;
}

Vec3c vec3_from_env(const EnvValue& v) {
  const EnvList& l = v.list();
  if (l.size() != 3) throw Error(ErrorCode::Type, "vector value needs 3 entries");
  Vec3c out;
  for (int i = 0; i < 3; ++i) {
    const Vec2& e = l[static_cast<std::size_t>(i)].vec();
    out(i) = Complex(e.x, e.y);
  }
  return out;
}

EnvValue triple_to_env(const std::array<double, 3>& t) {
  return EnvList{t[0], t[1], t[2]};
}

std::array<double, 3> triple_from_env(const EnvValue& v) {
  const EnvList& l = v.list();
  if (l.size() != 3) throw Error(ErrorCode::Type, "triple value needs 3 entries");
  return {l[0].number(), l[1].number(), l[2].number()};
}

std::string vec_sort_key(const Vec3c& v) {
  std::string s;
  for (int i = 0; i < 3; ++i) {
    s += format_double(v(i).real());
    s += ':';
    s += format_double(v(i).imag());
    s += ',';
  }
  return s;
}

std::string mat_serial(const Mat3& m) {
  std::string s = "(";
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) {
      s += format_double(m(r, c).real());
      s += ':';
      s += format_double(m(r, c).imag());
      s += ',';
    }
  s += ')';
  return s;
}

// Particles of one tagged tank, expanded to multiplicity, in bag order.
std::vector<Particle> tank_members(const ParticleBag& bag, const std::string& tag) {
  std::vector<Particle> out;
  std::string prefix = tag + "|";
  for (const auto& [key, entry] : bag) {
    if (key.size() < prefix.size() || key.compare(0, prefix.size(), prefix) != 0) continue;
    for (std::int64_t i = 0; i < entry.count; ++i) out.push_back(entry.particle);
  }
  return out;
}

void collect_links(const JaParticle& p, std::vector<const JaParticle*>& out) {
  if (p.is_atom()) return;
  out.push_back(&p);
  collect_links(*p.left, out);
  collect_links(*p.right, out);
}

void collect_atoms(const JaParticle& p, std::set<std::string>& out) {
  if (p.is_atom()) {
    out.insert(mat_serial(p.matrix));
    return;
  }
  collect_atoms(*p.left, out);
  collect_atoms(*p.right, out);
}

}  // namespace

TransferMode transfer_mode_from(const std::string& word) {
  if (word == "single") return TransferMode::Single;
  if (word == "none") return TransferMode::None;
  if (word == "random") return TransferMode::Random;
  if (word == "grid") return TransferMode::Grid;
  throw Error(ErrorCode::Config, "unknown transfer mode '" + word + "'");
}

std::string to_string(TransferMode m) {
  switch (m) {
    case TransferMode::Single: return "single";
    case TransferMode::None: return "none";
    case TransferMode::Random: return "random";
    case TransferMode::Grid: return "grid";
  }
  return "?";
}

Config Config::from(const ConfigDoc& doc) {
  Config c;
  c.tanks = doc.get_int("ja", "tanks", c.tanks);
  c.atoms_per_tank = doc.get_int("ja", "atoms_per_tank", c.atoms_per_tank);
  c.links_per_step = doc.get_int("ja", "links_per_step", c.links_per_step);
  c.decomps_per_step = doc.get_int("ja", "decomps_per_step", c.decomps_per_step);
  c.transfer = transfer_mode_from(doc.get("ja", "transfer", to_string(c.transfer)));
  c.grid_rows = doc.get_int("ja", "grid_rows", c.grid_rows);
  c.grid_cols = doc.get_int("ja", "grid_cols", c.grid_cols);
  c.time_bound = doc.get_int("ja", "time_bound", c.time_bound);
  c.check();
  return c;
}

void Config::check() const {
  if (tanks < 1) throw Error(ErrorCode::Config, "tanks must be at least 1");
  if (atoms_per_tank < 0) throw Error(ErrorCode::Config, "atoms_per_tank must not be negative");
  if (links_per_step < 0 || decomps_per_step < 0)
    throw Error(ErrorCode::Config, "attempt rates must not be negative");
  if (time_bound < 1) throw Error(ErrorCode::Config, "time_bound must be at least 1");
  if ((transfer == TransferMode::Random || transfer == TransferMode::Grid) && tanks < 2)
    throw Error(ErrorCode::Config, "transfers need at least 2 tanks");
  if (transfer == TransferMode::Grid) {
    if (grid_rows < 1 || grid_cols < 1 || grid_rows * grid_cols != tanks)
      throw Error(ErrorCode::GridShape, "grid_rows*grid_cols must equal tanks");
  }
}

Mat3 jordan(const Mat3& a, const Mat3& b) { return (a * b + b * a) / 2.0; }

EigenSystem hermitian_eig3(const Mat3& m) {
  double tr = m.trace().real();
  if (tr == 0.0) throw Error(ErrorCode::ZeroTrace, "matrix trace is zero");
  Eigen::SelfAdjointEigenSolver<Mat3> solver(m);
  if (solver.info() != Eigen::Success)
    throw Error(ErrorCode::NonConvergence, "eigen solver did not converge");

  std::array<double, 3> lam;
  std::array<Vec3c, 3> vec;
  for (int k = 0; k < 3; ++k) {
    lam[static_cast<std::size_t>(k)] = solver.eigenvalues()(k);
    Vec3c v = solver.eigenvectors().col(k);
    // rotate so the largest-modulus component (ties: lowest index) is real >= 0
    int arg = 0;
    double best = -1.0;
    for (int c = 0; c < 3; ++c) {
      double mod = std::abs(v(c));
      if (mod > best) {
        best = mod;
        arg = c;
      }
    }
    Complex z = v(arg);
    double mod = std::abs(z);
    if (mod > 0.0) v *= std::conj(z) / mod;
    vec[static_cast<std::size_t>(k)] = v;
  }

  std::array<int, 3> order{0, 1, 2};
  std::sort(order.begin(), order.end(), [&](int x, int y) {
    std::size_t ux = static_cast<std::size_t>(x), uy = static_cast<std::size_t>(y);
    if (lam[ux] != lam[uy]) return lam[ux] < lam[uy];
    return vec_sort_key(vec[ux]) < vec_sort_key(vec[uy]);
  });

  EigenSystem out;
  double sum = lam[0] + lam[1] + lam[2];
  for (int k = 0; k < 3; ++k) {
    std::size_t uk = static_cast<std::size_t>(k);
    std::size_t src = static_cast<std::size_t>(order[uk]);
    out.lambda[uk] = lam[src];
    out.mu[uk] = lam[src] / sum;
    out.vectors[uk] = vec[src];
  }
  return out;
}

double alignment(const Vec3c& u, const Vec3c& v) {
  // Eigen's dot conjugates its first argument
  double d = u.dot(v).real();
  d = std::clamp(d, -1.0, 1.0);
  return 1.0 - (d + 1.0) / 2.0;
}

PairChoice best_pair(const EigenSystem& a, const EigenSystem& b) {
  PairChoice out{0, 0, -1.0};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double al = alignment(a.vectors[static_cast<std::size_t>(i)],
                            b.vectors[static_cast<std::size_t>(j)]);
      if (al > out.align) out = PairChoice{i, j, al};
    }
  return out;
}

double strength(double mu_a, double mu_b) {
  double x = mu_a - mu_b;
  return std::exp(-0.5 * x * x) / kSqrt2Pi;
}

std::vector<Mat3> enumerate_atoms() {
  static const std::array<double, 3> diag{-1.0, 0.0, 1.0};
  static const std::array<Complex, 9> off{
      Complex(0, 0),  Complex(1, 0),  Complex(-1, 0),
      Complex(0, 1),  Complex(0, -1), Complex(1, 1),
      Complex(1, -1), Complex(-1, 1), Complex(-1, -1)};
  std::vector<Mat3> out;
  out.reserve(14580);
  for (double d0 : diag)
    for (double d1 : diag)
      for (double d2 : diag) {
        if (d0 + d1 + d2 == 0.0) continue;
        for (const Complex& e01 : off)
          for (const Complex& e02 : off)
            for (const Complex& e12 : off) {
              Mat3 m;
              m(0, 0) = d0;
              m(1, 1) = d1;
              m(2, 2) = d2;
              m(0, 1) = e01;
              m(1, 0) = std::conj(e01);
              m(0, 2) = e02;
              m(2, 0) = std::conj(e02);
              m(1, 2) = e12;
              m(2, 1) = std::conj(e12);
              out.push_back(m);
            }
      }
  return out;
}

std::array<std::int64_t, 3> quantize_mu(const std::array<double, 3>& mu) {
  std::array<std::int64_t, 3> q;
  for (int i = 0; i < 3; ++i)
    q[static_cast<std::size_t>(i)] = std::llround(mu[static_cast<std::size_t>(i)] * 1e6);
  std::sort(q.begin(), q.end());
  return q;
}

Census census(const std::vector<Mat3>& atoms) {
  Census c;
  c.candidates = 3LL * 3 * 3 * 9 * 9 * 9;
  c.atoms = static_cast<std::int64_t>(atoms.size());
  std::map<std::array<std::int64_t, 3>, std::pair<std::int64_t, std::array<double, 3>>> classes;
  for (const Mat3& m : atoms) {
    EigenSystem es = hermitian_eig3(m);
    auto q = quantize_mu(es.mu);
    auto it = classes.find(q);
    if (it == classes.end()) {
      std::array<double, 3> rep = es.mu;
      std::sort(rep.begin(), rep.end());
      classes.emplace(q, std::make_pair(std::int64_t{1}, rep));
    } else {
      ++it->second.first;
    }
  }
  c.classes = static_cast<std::int64_t>(classes.size());
  for (const auto& [q, entry] : classes) {
    c.class_sizes.push_back(entry.first);
    c.representatives.push_back(entry.second);
  }
  return c;
}

std::string census_csv(const Census& c) {
  std::string out = "class,size,mu1,mu2,mu3\n";
  for (std::size_t i = 0; i < c.representatives.size(); ++i) {
    out += std::to_string(i);
    out += ',';
    out += std::to_string(c.class_sizes[i]);
    for (double v : c.representatives[i]) {
      out += ',';
      out += format_double(v);
    }
    out += '\n';
  }
  return out;
}

JaPtr make_atom(const Mat3& m) {
  if (m.trace().real() == 0.0) throw Error(ErrorCode::ZeroTrace, "atom trace is zero");
  auto p = std::make_shared<JaParticle>();
  p->matrix = m;
  p->atom_count = 1;
  return p;
}

std::string ja_serial(const JaParticle& p) {
  if (p.is_atom()) return "A" + mat_serial(p.matrix);
  std::string s = "C(s=";
  s += format_double(p.link_strength);
  s += ",a=";
  s += format_double(p.link_alignment);
  s += ",i=";
  s += std::to_string(p.pair_i);
  s += ",j=";
  s += std::to_string(p.pair_j);
  s += ",M=";
  s += mat_serial(p.matrix);
  s += ",L=";
  s += ja_serial(*p.left);
  s += ",R=";
  s += ja_serial(*p.right);
  s += ')';
  return s;
}

std::string ja_key(const std::string& tank, const JaParticle& p) {
  std::string serial = ja_serial(p);
  // two independent digests; a collision would need both to collide at once
  std::uint64_t h1 = fnv1a64(serial);
  std::uint64_t h2 = fnv1a64(serial, 0x84222325cbf29ce4ULL);
  char buf[36];
  std::snprintf(buf, sizeof buf, "%016llx%016llx", static_cast<unsigned long long>(h1),
                static_cast<unsigned long long>(h2));
  return tank + "|ja" + std::to_string(p.atom_count) + ":" + buf;
}

Particle make_particle(const std::string& tank, JaPtr p) {
  return Particle::wrap<JaPtr>(ja_key(tank, *p), p);
}

std::string tank_of(const Particle& p) {
  const std::string& k = p.key();
  return k.substr(0, k.find('|'));
}

JaPtr payload_of(const Particle& p) { return p.as<JaPtr>(); }

LinkAssessment assess_link(const JaParticle& a, const JaParticle& b) {
  EigenSystem ea = hermitian_eig3(a.matrix);
  EigenSystem eb = hermitian_eig3(b.matrix);
  PairChoice pc = best_pair(ea, eb);
  LinkAssessment out;
  out.i = pc.i;
  out.j = pc.j;
  out.a = pc.align;
  out.s = strength(ea.mu[static_cast<std::size_t>(pc.i)], eb.mu[static_cast<std::size_t>(pc.j)]);
  out.p = out.s * out.a;
  return out;
}

std::optional<JaPtr> attempt_link(JaPtr a, JaPtr b, Rng& rng) {
  double r = rng.uniform01();
  LinkAssessment la = assess_link(*a, *b);
  if (!(r < la.p)) return std::nullopt;
  Mat3 product = jordan(a->matrix, b->matrix);
  if (product.trace().real() == 0.0) return std::nullopt;
  auto p = std::make_shared<JaParticle>();
  p->matrix = product;
  p->atom_count = a->atom_count + b->atom_count;
  p->left = std::move(a);
  p->right = std::move(b);
  p->link_strength = la.s;
  p->link_alignment = la.a;
  p->pair_i = la.i;
  p->pair_j = la.j;
  return p;
}

std::pair<JaPtr, JaPtr> break_top(const JaParticle& p) {
  if (p.is_atom()) throw Error(ErrorCode::NoLinks, "atoms have no link to break");
  return {p.left, p.right};
}

std::optional<std::pair<JaPtr, JaPtr>> attempt_decompose(const JaParticle& p, Rng& rng) {
  auto parts = break_top(p);
  double r = rng.uniform01();
  double p_break = 1.0 - p.link_strength * p.link_alignment;
  if (r < p_break) return parts;
  return std::nullopt;
}

std::pair<std::vector<JaPtr>, std::vector<JaPtr>> balance_transfer(std::vector<JaPtr> a,
                                                                   std::vector<JaPtr> b) {
  std::vector<JaPtr> merged = std::move(a);
  merged.insert(merged.end(), b.begin(), b.end());
  std::stable_sort(merged.begin(), merged.end(), [](const JaPtr& x, const JaPtr& y) {
    if (x->atom_count != y->atom_count) return x->atom_count > y->atom_count;
    return ja_serial(*x) < ja_serial(*y);
  });
  std::vector<JaPtr> out_a, out_b;
  std::int64_t tot_a = 0, tot_b = 0;
  for (JaPtr& p : merged) {
    if (tot_a <= tot_b) {
      tot_a += p->atom_count;
      out_a.push_back(std::move(p));
    } else {
      tot_b += p->atom_count;
      out_b.push_back(std::move(p));
    }
  }
  return {std::move(out_a), std::move(out_b)};
}

std::vector<std::pair<std::int64_t, std::int64_t>> select_transfer_pairs(
    TransferMode mode, std::int64_t tanks, Rng& rng, std::int64_t grid_rows,
    std::int64_t grid_cols) {
  std::vector<std::pair<std::int64_t, std::int64_t>> out;
  if (mode == TransferMode::Single || mode == TransferMode::None) return out;
  if (tanks < 2) throw Error(ErrorCode::Config, "transfers need at least 2 tanks");
  std::uint64_t k = rng.below(11);
  if (mode == TransferMode::Random) {
    for (std::uint64_t n = 0; n < k; ++n) {
      std::int64_t i = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(tanks)));
      std::int64_t j = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(tanks - 1)));
      if (j >= i) ++j;
      out.emplace_back(i, j);
    }
    return out;
  }
  // grid: Moore neighbourhood, no wrap-around
  if (grid_rows < 1 || grid_cols < 1 || grid_rows * grid_cols != tanks)
    throw Error(ErrorCode::GridShape, "grid shape does not cover the tanks");
  for (std::uint64_t n = 0; n < k; ++n) {
    std::int64_t t = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(tanks)));
    std::int64_t r = t / grid_cols, c = t % grid_cols;
    std::vector<std::int64_t> moore;
    for (std::int64_t dr = -1; dr <= 1; ++dr)
      for (std::int64_t dc = -1; dc <= 1; ++dc) {
        if (dr == 0 && dc == 0) continue;
        std::int64_t rr = r + dr, cc = c + dc;
        if (rr < 0 || rr >= grid_rows || cc < 0 || cc >= grid_cols) continue;
        moore.push_back(rr * grid_cols + cc);
      }
    std::int64_t u = moore[rng.below(moore.size())];
    out.emplace_back(t, u);
  }
  return out;
}

TankStats tank_stats(const std::vector<JaPtr>& particles) {
  TankStats st;
  st.particles = static_cast<std::int64_t>(particles.size());
  if (particles.empty()) return st;
  std::set<std::string> distinct;
  double strength_sum = 0.0, trace_sum = 0.0;
  for (const JaPtr& p : particles) {
    st.atoms += p->atom_count;
    trace_sum += std::abs(p->matrix.trace().real());
    collect_atoms(*p, distinct);
    std::vector<const JaParticle*> links;
    collect_links(*p, links);
    st.links += static_cast<std::int64_t>(links.size());
    for (const JaParticle* l : links) {
      strength_sum += l->link_strength;
      st.largest_link = std::max(st.largest_link, l->link_strength);
    }
  }
  st.distinct_atoms = static_cast<std::int64_t>(distinct.size());
  st.mean_atom_count = static_cast<double>(st.atoms) / static_cast<double>(st.particles);
  st.mean_link_strength = st.links ? strength_sum / static_cast<double>(st.links) : 0.0;
  st.mean_trace_mag = trace_sum / static_cast<double>(st.particles);
  return st;
}

std::map<std::string, std::vector<JaPtr>> by_tank(const ParticleBag& bag) {
  std::map<std::string, std::vector<JaPtr>> out;
  for (const auto& [key, entry] : bag) {
    std::string tag = tank_of(entry.particle);
    for (std::int64_t i = 0; i < entry.count; ++i)
      out[tag].push_back(payload_of(entry.particle));
  }
  return out;
}

GraphDef build_macro() {
  GraphDef g;
  g.add(NodeKind::Tank, "init", "", "ja");
  g.add(NodeKind::Tank, "Tank", "", "ja");
  g.add(NodeKind::Sample, "Reactants", "", "ja");
  g.add(NodeKind::Sample, "Decomp", "", "ja");
  g.add(NodeKind::Environment, "counters", "", "ja");
  g.add(NodeKind::Environment, "time", "", "ja");
  g.add(NodeKind::Environment, "log", "", "ja");

  NodeId load = g.add(NodeKind::Sampler, "load", "", "ja");
  NodeId time = g.add(NodeKind::Observer, "time", "", "ja");
  NodeId react = g.add(NodeKind::Sampler, "react", "", "ja");
  NodeId link = g.add(NodeKind::Action, "Link", "", "ja");
  NodeId ret_react = g.add(NodeKind::Sampler, "ret_react", "", "ja");
  NodeId links = g.add(NodeKind::Observer, "links", "", "ja");
  NodeId linked = g.add(NodeKind::Decision, "linked", "", "ja");
  NodeId decomp = g.add(NodeKind::Sampler, "decomp", "", "ja");
  NodeId decompose = g.add(NodeKind::Action, "Decomp", "", "ja");
  NodeId ret_decomp = g.add(NodeKind::Sampler, "ret_decomp", "", "ja");
  NodeId decomps = g.add(NodeKind::Observer, "decomps", "", "ja");
  NodeId decomped = g.add(NodeKind::Decision, "decomped", "", "ja");
  NodeId transfer = g.add(NodeKind::Sampler, "transfer", "", "ja");
  NodeId log = g.add(NodeKind::Observer, "log", "", "ja");
  NodeId more = g.add(NodeKind::Decision, "more", "", "ja");
  NodeId done = g.add(NodeKind::Termination, "done", "", "ja");
  g.start = load;

  g.edge(load, time);
  g.edge(time, react);
  g.edge(react, link);
  g.edge(link, ret_react);
  g.edge(ret_react, links);
  g.edge(links, linked);
  g.edge(linked, react);
  g.edge(linked, decomp);
  g.edge(decomp, decompose);
  g.edge(decompose, ret_decomp);
  g.edge(ret_decomp, decomps);
  g.edge(decomps, decomped);
  g.edge(decomped, decomp);
  g.edge(decomped, transfer);
  g.edge(transfer, log);
  g.edge(log, more);
  g.edge(more, time);
  g.edge(more, done);

  g.wire_pull(load, kInit);
  g.wire_push(load, kTank);
  g.wire_rw(time, kTimeEnv);
  g.wire_pull(react, kTank);
  g.wire_push(react, kReactants);
  g.wire_rw(link, kReactants);
  g.wire_pull(ret_react, kReactants);
  g.wire_push(ret_react, kTank);
  g.wire_rw(links, kCounters);
  g.wire_read(linked, kCounters);
  g.wire_read(linked, kTimeEnv);
  g.wire_pull(decomp, kTank);
  g.wire_push(decomp, kDecomp);
  g.wire_rw(decompose, kDecomp);
  g.wire_pull(ret_decomp, kDecomp);
  g.wire_push(ret_decomp, kTank);
  g.wire_rw(decomps, kCounters);
  g.wire_read(decomped, kCounters);
  g.wire_read(decomped, kTimeEnv);
  g.wire_rw(transfer, kTank);
  g.wire_read(log, kTank);
  g.wire_rw(log, kLog);
  g.wire_read(more, kTimeEnv);
  return g;
}

GraphDef build_runnable() {
  GraphDef g;
  g.add(NodeKind::Tank, "init", "", "ja");
  g.add(NodeKind::Tank, "Tank", "", "ja");
  g.add(NodeKind::Sample, "Reactants", "", "ja");
  g.add(NodeKind::Sample, "Decomp", "", "ja");
  g.add(NodeKind::Environment, "Mat", "", "ja");
  g.add(NodeKind::Environment, "Eval", "", "ja");
  g.add(NodeKind::Environment, "Evec", "", "ja");
  g.add(NodeKind::Environment, "Pairs", "", "ja");
  g.add(NodeKind::Environment, "Strengths", "", "ja");
  g.add(NodeKind::Environment, "New_Mat", "", "ja");
  g.add(NodeKind::Environment, "counters", "", "ja");
  g.add(NodeKind::Environment, "time", "", "ja");
  g.add(NodeKind::Environment, "log", "", "ja");

  for (const NodeId* n :
       {&nLoad, &nTime, &nReact, &nStruct, &nAlign, &nStrength, &nProb, &nNewMat, &nValid, &nLink,
        &nRetReact, &nLinks, &nLinked, &nDecompPick, &nDecompose, &nRetDecomp, &nDecomps,
        &nDecomped, &nTransfer, &nLog, &nMore, &nDone})
    g.add(n->kind, n->label, "", "ja");
  g.start = nLoad;

  g.edge(nLoad, nTime);
  g.edge(nTime, nReact);
  g.edge(nReact, nStruct);
  g.edge(nStruct, nAlign);
  g.edge(nAlign, nStrength);
  g.edge(nStrength, nProb);
  g.edge(nProb, nNewMat);
  g.edge(nProb, nRetReact);
  g.edge(nNewMat, nValid);
  g.edge(nValid, nLink);
  g.edge(nValid, nRetReact);
  g.edge(nLink, nRetReact);
  g.edge(nRetReact, nLinks);
  g.edge(nLinks, nLinked);
  g.edge(nLinked, nReact);
  g.edge(nLinked, nDecompPick);
  g.edge(nDecompPick, nDecompose);
  g.edge(nDecompose, nRetDecomp);
  g.edge(nRetDecomp, nDecomps);
  g.edge(nDecomps, nDecomped);
  g.edge(nDecomped, nDecompPick);
  g.edge(nDecomped, nTransfer);
  g.edge(nTransfer, nLog);
  g.edge(nLog, nMore);
  g.edge(nMore, nTime);
  g.edge(nMore, nDone);

  g.wire_pull(nLoad, kInit);
  g.wire_push(nLoad, kTank);
  g.wire_rw(nTime, kTimeEnv);
  g.wire_pull(nReact, kTank);
  g.wire_push(nReact, kReactants);
  g.wire_read(nStruct, kReactants);
  g.wire_rw(nStruct, kMat);
  g.wire_rw(nStruct, kEval);
  g.wire_rw(nStruct, kEvec);
  g.wire_read(nAlign, kEval);
  g.wire_read(nAlign, kEvec);
  g.wire_rw(nAlign, kPairs);
  g.wire_read(nStrength, kEval);
  g.wire_read(nStrength, kPairs);
  g.wire_rw(nStrength, kStrengths);
  g.wire_read(nProb, kPairs);
  g.wire_read(nProb, kStrengths);
  g.wire_read(nNewMat, kMat);
  g.wire_rw(nNewMat, kNewMat);
  g.wire_read(nValid, kNewMat);
  g.wire_read(nLink, kNewMat);
  g.wire_read(nLink, kPairs);
  g.wire_read(nLink, kStrengths);
  g.wire_rw(nLink, kReactants);
  g.wire_pull(nRetReact, kReactants);
  g.wire_push(nRetReact, kTank);
  g.wire_rw(nLinks, kCounters);
  g.wire_read(nLinked, kCounters);
  g.wire_read(nLinked, kTimeEnv);
  g.wire_pull(nDecompPick, kTank);
  g.wire_push(nDecompPick, kDecomp);
  g.wire_rw(nDecompose, kDecomp);
  g.wire_pull(nRetDecomp, kDecomp);
  g.wire_push(nRetDecomp, kTank);
  g.wire_rw(nDecomps, kCounters);
  g.wire_read(nDecomped, kCounters);
  g.wire_read(nDecomped, kTimeEnv);
  g.wire_rw(nTransfer, kTank);
  g.wire_read(nLog, kTank);
  g.wire_read(nLog, kTimeEnv);
  g.wire_rw(nLog, kLog);
  g.wire_read(nMore, kTimeEnv);
  return g;
}

namespace {

BehaviorPtr react_sampler(const Config& cfg) {
  auto b = std::make_shared<HookBehavior>();
  b->node_kind = NodeKind::Sampler;
  b->on_read = [](ReadView& view, LocalState& local, Rng&) {
    local.particles(kTank) = view.particles(kTank);
  };
  std::int64_t tanks = cfg.tanks;
  b->on_pull = [tanks](StateGate& gate, LocalState& local, Rng& rng) {
    std::string tag = std::to_string(rng.below(static_cast<std::uint64_t>(tanks)));
    std::vector<Particle> members = tank_members(local.particles(kTank), tag);
    if (members.size() < 2) return;
    std::size_t ia = rng.below(members.size());
    std::size_t ib = rng.below(members.size() - 1);
    if (ib >= ia) ++ib;
    ParticleBag take;
    take.add(members[ia]);
    take.add(members[ib]);
    local.particles(kReactants) = gate.pull_particles(kTank, take);
  };
  b->on_push = [](StateGate& gate, LocalState& local) {
    gate.push_particles(kReactants, local.particles(kReactants));
  };
  return b;
}

BehaviorPtr struct_observer() {
  auto b = std::make_shared<HookBehavior>();
  b->node_kind = NodeKind::Observer;
  b->on_read = [](ReadView& view, LocalState& local, Rng&) {
    local.particles(kReactants) = view.particles(kReactants);
  };
  b->on_pull = [](StateGate& gate, LocalState&, Rng&) {
    gate.pull_env_all(kMat);
    gate.pull_env_all(kEval);
    gate.pull_env_all(kEvec);
  };
  b->on_process = [](LocalState& local, Rng&) {
    const ParticleBag& bag = local.particles(kReactants);
    if (bag.size() != 2) return;
    JaPtr a = payload_of(bag.at_index(0));
    JaPtr bb = payload_of(bag.at_index(1));
    EigenSystem ea = hermitian_eig3(a->matrix);
    EigenSystem eb = hermitian_eig3(bb->matrix);
    EnvStore& mat = local.env(kMat);
    mat["A"] = mat_to_env(a->matrix);
    mat["B"] = mat_to_env(bb->matrix);
    EnvStore& eval = local.env(kEval);
    eval["A_lambda"] = triple_to_env(ea.lambda);
    eval["A_mu"] = triple_to_env(ea.mu);
    eval["B_lambda"] = triple_to_env(eb.lambda);
    eval["B_mu"] = triple_to_env(eb.mu);
    EnvStore& evec = local.env(kEvec);
    evec["A"] = EnvList{vec3_to_env(ea.vectors[0]), vec3_to_env(ea.vectors[1]),
                        vec3_to_env(ea.vectors[2])};
    evec["B"] = EnvList{vec3_to_env(eb.vectors[0]), vec3_to_env(eb.vectors[1]),
                        vec3_to_env(eb.vectors[2])};
  };
  b->on_push = [](StateGate& gate, LocalState& local) {
    gate.push_env(kMat, local.env(kMat));
    gate.push_env(kEval, local.env(kEval));
    gate.push_env(kEvec, local.env(kEvec));
  };
  return b;
}

BehaviorPtr align_observer() {
  auto b = std::make_shared<HookBehavior>();
  b->node_kind = NodeKind::Observer;
  b->on_read = [](ReadView& view, LocalState& local, Rng&) {
    local.env(kEval) = view.env(kEval);
    local.env(kEvec) = view.env(kEvec);
  };
  b->on_pull = [](StateGate& gate, LocalState&, Rng&) { gate.pull_env_all(kPairs); };
  b->on_process = [](LocalState& local, Rng&) {
    EnvStore& evec = local.env(kEvec);
    EnvStore& eval = local.env(kEval);
    if (!evec.count("A") || !evec.count("B")) return;
    EigenSystem ea, eb;
    ea.mu = triple_from_env(eval.at("A_mu"));
    eb.mu = triple_from_env(eval.at("B_mu"));
    for (int k = 0; k < 3; ++k) {
      std::size_t uk = static_cast<std::size_t>(k);
      ea.vectors[uk] = vec3_from_env(evec.at("A").list()[uk]);
      eb.vectors[uk] = vec3_from_env(evec.at("B").list()[uk]);
    }
    PairChoice pc = best_pair(ea, eb);
    EnvStore& pairs = local.env(kPairs);
    pairs["i"] = static_cast<double>(pc.i);
    pairs["j"] = static_cast<double>(pc.j);
    pairs["a"] = pc.align;
  };
  b->on_push = [](StateGate& gate, LocalState& local) {
    gate.push_env(kPairs, local.env(kPairs));
  };
  return b;
}

BehaviorPtr strength_observer() {
  auto b = std::make_shared<HookBehavior>();
  b->node_kind = NodeKind::Observer;
  b->on_read = [](ReadView& view, LocalState& local, Rng&) {
    local.env(kEval) = view.env(kEval);
    local.env(kPairs) = view.env(kPairs);
  };
  b->on_pull = [](StateGate& gate, LocalState&, Rng&) { gate.pull_env_all(kStrengths); };
  b->on_process = [](LocalState& local, Rng&) {
    EnvStore& pairs = local.env(kPairs);
    EnvStore& eval = local.env(kEval);
    if (!pairs.count("i") || !eval.count("A_mu")) return;
    int i = static_cast<int>(pairs.at("i").number());
    int j = static_cast<int>(pairs.at("j").number());
    double mu_a = triple_from_env(eval.at("A_mu"))[static_cast<std::size_t>(i)];
    double mu_b = triple_from_env(eval.at("B_mu"))[static_cast<std::size_t>(j)];
    double s = strength(mu_a, mu_b);
    EnvStore& st = local.env(kStrengths);
    st["s"] = s;
    st["p"] = s * pairs.at("a").number();
  };
  b->on_push = [](StateGate& gate, LocalState& local) {
    gate.push_env(kStrengths, local.env(kStrengths));
  };
  return b;
}

BehaviorPtr prob_decision() {
  auto b = std::make_shared<HookBehavior>();
  b->node_kind = NodeKind::Decision;
  b->on_read = [](ReadView& view, LocalState& local, Rng&) {
    local.env(kStrengths) = view.env(kStrengths);
  };
  b->on_process = [](LocalState& local, Rng& rng) {
    EnvStore& st = local.env(kStrengths);
    double p = st.count("p") ? st.at("p").number() : 0.0;
    double r = rng.uniform01();
    local.set_next(r < p ? nNewMat : nRetReact);
  };
  return b;
}

BehaviorPtr new_mat_action() {
  auto b = std::make_shared<HookBehavior>();
  b->node_kind = NodeKind::Action;
  b->on_read = [](ReadView& view, LocalState& local, Rng&) {
    local.env(kMat) = view.env(kMat);
  };
  b->on_pull = [](StateGate& gate, LocalState&, Rng&) { gate.pull_env_all(kNewMat); };
  b->on_process = [](LocalState& local, Rng&) {
    EnvStore& mat = local.env(kMat);
    if (!mat.count("A") || !mat.count("B")) return;
    Mat3 m = jordan(mat_from_env(mat.at("A")), mat_from_env(mat.at("B")));
    local.env(kNewMat)["M"] = mat_to_env(m);
  };
  b->on_push = [](StateGate& gate, LocalState& local) {
    gate.push_env(kNewMat, local.env(kNewMat));
  };
  return b;
}

BehaviorPtr valid_decision() {
  auto b = std::make_shared<HookBehavior>();
  b->node_kind = NodeKind::Decision;
  b->on_read = [](ReadView& view, LocalState& local, Rng&) {
    local.env(kNewMat) = view.env(kNewMat);
  };
  b->on_process = [](LocalState& local, Rng&) {
    EnvStore& nm = local.env(kNewMat);
    bool ok = false;
    if (nm.count("M")) ok = mat_from_env(nm.at("M")).trace().real() != 0.0;
    local.set_next(ok ? nLink : nRetReact);
  };
  return b;
}

BehaviorPtr link_action() {
  auto b = std::make_shared<HookBehavior>();
  b->node_kind = NodeKind::Action;
  b->on_read = [](ReadView& view, LocalState& local, Rng&) {
    local.particles(kReactants) = view.particles(kReactants);
    local.env(kNewMat) = view.env(kNewMat);
    local.env(kPairs) = view.env(kPairs);
    local.env(kStrengths) = view.env(kStrengths);
  };
  b->on_pull = [](StateGate& gate, LocalState& local, Rng&) {
    local.particles(kReactants) = gate.pull_particles(kReactants, local.particles(kReactants));
  };
  b->on_process = [](LocalState& local, Rng&) {
    ParticleBag& bag = local.particles(kReactants);
    if (bag.size() != 2) return;  // leaves the pulled bag to be pushed back whole
    JaPtr a = payload_of(bag.at_index(0));
    JaPtr bb = payload_of(bag.at_index(1));
    std::string tag = tank_of(bag.at_index(0));
    auto comp = std::make_shared<JaParticle>();
    comp->matrix = mat_from_env(local.env(kNewMat).at("M"));
    comp->atom_count = a->atom_count + bb->atom_count;
    comp->left = a;
    comp->right = bb;
    comp->link_strength = local.env(kStrengths).at("s").number();
    comp->link_alignment = local.env(kPairs).at("a").number();
    comp->pair_i = static_cast<int>(local.env(kPairs).at("i").number());
    comp->pair_j = static_cast<int>(local.env(kPairs).at("j").number());
    ParticleBag out;
    out.add(make_particle(tag, comp));
    bag = out;
  };
  b->on_push = [](StateGate& gate, LocalState& local) {
    gate.push_particles(kReactants, local.particles(kReactants));
  };
  return b;
}

BehaviorPtr decomp_sampler(const Config& cfg) {
  auto b = std::make_shared<HookBehavior>();
  b->node_kind = NodeKind::Sampler;
  b->on_read = [](ReadView& view, LocalState& local, Rng&) {
    local.particles(kTank) = view.particles(kTank);
  };
  std::int64_t tanks = cfg.tanks;
  b->on_pull = [tanks](StateGate& gate, LocalState& local, Rng& rng) {
    std::string tag = std::to_string(rng.below(static_cast<std::uint64_t>(tanks)));
    std::vector<Particle> members = tank_members(local.particles(kTank), tag);
    if (members.empty()) return;
    ParticleBag take;
    take.add(members[rng.below(members.size())]);
    local.particles(kDecomp) = gate.pull_particles(kTank, take);
  };
  b->on_push = [](StateGate& gate, LocalState& local) {
    gate.push_particles(kDecomp, local.particles(kDecomp));
  };
  return b;
}

BehaviorPtr decompose_action() {
  auto b = std::make_shared<HookBehavior>();
  b->node_kind = NodeKind::Action;
  b->on_read = [](ReadView& view, LocalState& local, Rng&) {
    local.particles(kDecomp) = view.particles(kDecomp);
  };
  b->on_pull = [](StateGate& gate, LocalState& local, Rng&) {
    local.particles(kDecomp) = gate.pull_particles(kDecomp, local.particles(kDecomp));
  };
  b->on_process = [](LocalState& local, Rng& rng) {
    ParticleBag& bag = local.particles(kDecomp);
    if (bag.size() != 1) return;
    JaPtr p = payload_of(bag.at_index(0));
    if (p->is_atom()) return;
    std::string tag = tank_of(bag.at_index(0));
    auto broken = attempt_decompose(*p, rng);
    if (!broken) return;
    ParticleBag out;
    out.add(make_particle(tag, broken->first));
    out.add(make_particle(tag, broken->second));
    bag = out;
  };
  b->on_push = [](StateGate& gate, LocalState& local) {
    gate.push_particles(kDecomp, local.particles(kDecomp));
  };
  return b;
}

BehaviorPtr transfer_sampler(const Config& cfg) {
  auto b = std::make_shared<HookBehavior>();
  b->node_kind = NodeKind::Sampler;
  b->on_read = [](ReadView& view, LocalState& local, Rng&) {
    local.particles(kTank) = view.particles(kTank);
  };
  Config c = cfg;
  b->on_pull = [c](StateGate& gate, LocalState& local, Rng& rng) {
    if (c.transfer == TransferMode::Single || c.transfer == TransferMode::None) return;
    auto pairs = select_transfer_pairs(c.transfer, c.tanks, rng, c.grid_rows, c.grid_cols);
    if (pairs.empty()) return;
    ParticleBag whole = gate.pull_particles(kTank, local.particles(kTank));
    std::map<std::string, std::vector<JaPtr>> work = by_tank(whole);
    for (const auto& [ti, tj] : pairs) {
      std::string a = std::to_string(ti), bb = std::to_string(tj);
      auto balanced = balance_transfer(std::move(work[a]), std::move(work[bb]));
      work[a] = std::move(balanced.first);
      work[bb] = std::move(balanced.second);
    }
    ParticleBag out;
    for (const auto& [tag, members] : work)
      for (const JaPtr& p : members) out.add(make_particle(tag, p));
    local.particles(kTank) = out;
    local.env(kLocalEnv)["moved"] = 1.0;
  };
  b->on_push = [](StateGate& gate, LocalState& local) {
    if (!local.env(kLocalEnv).count("moved")) return;
    gate.push_particles(kTank, local.particles(kTank));
  };
  return b;
}

BehaviorPtr log_observer() {
  auto b = std::make_shared<HookBehavior>();
  b->node_kind = NodeKind::Observer;
  b->on_read = [](ReadView& view, LocalState& local, Rng&) {
    local.particles(kTank) = view.particles(kTank);
    local.env(kTimeEnv) = view.env(kTimeEnv);
  };
  b->on_process = [](LocalState& local, Rng&) {
    std::vector<JaPtr> all;
    for (const auto& [key, entry] : local.particles(kTank))
      for (std::int64_t i = 0; i < entry.count; ++i) all.push_back(payload_of(entry.particle));
    TankStats st = tank_stats(all);
    EnvRecord rec;
    rec["particles"] = static_cast<double>(st.particles);
    rec["atoms"] = static_cast<double>(st.atoms);
    rec["links"] = static_cast<double>(st.links);
    rec["distinct_atoms"] = static_cast<double>(st.distinct_atoms);
    rec["mean_atom_count"] = st.mean_atom_count;
    rec["mean_link_strength"] = st.mean_link_strength;
    rec["mean_trace_mag"] = st.mean_trace_mag;
    rec["largest_link"] = st.largest_link;
    EnvStore& time = local.env(kTimeEnv);
    std::int64_t t =
        time.count("time") ? static_cast<std::int64_t>(time.at("time").number()) : 0;
    local.env(kLog)["t" + std::to_string(t)] = rec;
  };
  b->on_push = [](StateGate& gate, LocalState& local) {
    gate.push_env(kLog, local.env(kLog));
  };
  return b;
}

}  // namespace

BehaviorPtr attempt_count_decision(std::int64_t per_step, std::string var, NodeId done,
                                   NodeId again) {
  auto b = std::make_shared<HookBehavior>();
  b->node_kind = NodeKind::Decision;
  b->on_read = [](ReadView& view, LocalState& local, Rng&) {
    local.env(kCounters) = view.env(kCounters);
    local.env(kTimeEnv) = view.env(kTimeEnv);
  };
  b->on_process = [per_step, var = std::move(var), done, again](LocalState& local, Rng&) {
    EnvStore& counters = local.env(kCounters);
    EnvStore& time = local.env(kTimeEnv);
    double attempts = counters.count(var) ? counters.at(var).number() : 0.0;
    double t = time.count("time") ? time.at("time").number() : 0.0;
    // the counters never reset, so compare against a rate that grows with time
    local.set_next(attempts >= static_cast<double>(per_step) * t ? done : again);
  };
  return b;
}

BehaviorSet behaviors(const Config& cfg) {
  BehaviorSet set;
  set.set("load", move_all_sampler(kInit, kTank));
  set.set("time", counter_observer(kTimeEnv, "time", 1.0));
  set.set("react", react_sampler(cfg));
  set.set("struct", struct_observer());
  set.set("align", align_observer());
  set.set("strength", strength_observer());
  set.set("prob", prob_decision());
  set.set("new_mat", new_mat_action());
  set.set("valid", valid_decision());
  set.set("link", link_action());
  set.set("ret_react", move_all_sampler(kReactants, kTank));
  set.set("links", counter_observer(kCounters, "link_attempts", 1.0));
  set.set("linked",
          attempt_count_decision(cfg.links_per_step, "link_attempts", nDecompPick, nReact));
  set.set("decomp", decomp_sampler(cfg));
  set.set("decompose", decompose_action());
  set.set("ret_decomp", move_all_sampler(kDecomp, kTank));
  set.set("decomps", counter_observer(kCounters, "decomp_attempts", 1.0));
  set.set("decomped",
          attempt_count_decision(cfg.decomps_per_step, "decomp_attempts", nTransfer, nDecompPick));
  set.set("transfer", transfer_sampler(cfg));
  set.set("log", log_observer());
  set.set("more", threshold_decision(kTimeEnv, "time", static_cast<double>(cfg.time_bound),
                                     nDone, nTime));
  return set;
}

ParticleBag initial_atoms(const Config& cfg, std::uint64_t seed) {
  std::vector<Mat3> atoms = enumerate_atoms();
  Rng rng = derive_stream(seed, "ja:init", 0);
  ParticleBag bag;
  for (std::int64_t t = 0; t < cfg.tanks; ++t) {
    std::string tag = std::to_string(t);
    for (std::int64_t k = 0; k < cfg.atoms_per_tank; ++k) {
      const Mat3& m = atoms[rng.below(atoms.size())];
      bag.add(make_particle(tag, make_atom(m)));
    }
  }
  return bag;
}

SystemState initial_state(const GraphDef& g, const Config& cfg, std::uint64_t seed) {
  SystemState st = SystemState::for_graph(g);
  NodeId target = g.has_node(kInit) ? kInit : kTank;
  st.add_particles(target, initial_atoms(cfg, seed));
  return st;
}

std::int64_t total_atoms(const SystemState& st) {
  std::int64_t total = 0;
  for (const auto& [container, bag] : st.particles)
    for (const auto& [key, entry] : bag) {
      if (!entry.particle.holds<JaPtr>()) continue;  // composed states mix particle kinds
      total += payload_of(entry.particle)->atom_count * entry.count;
    }
  return total;
}

}  // namespace metachem::ja
