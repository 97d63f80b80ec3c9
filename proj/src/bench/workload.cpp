#include <algorithm>
#include <array>
#include <numeric>
#include <set>

#include "reroute/bench.hpp"
#include "reroute/error.hpp"
#include "reroute/rng.hpp"

namespace reroute {

namespace {

constexpr std::array kEasyNouns = {
    "cat", "dog", "apple", "ball", "tree", "house", "car", "sun", "water", "book", "door", "chair",
    "bread", "milk", "fish", "bird", "cup", "hat", "shoe", "box", "pen", "rain", "snow", "cake",
    "game", "song", "park", "road", "shop", "boat", "farm", "egg", "leaf", "rock", "star", "sand",
    "garden", "lunch", "school", "friend", "movie", "window", "table", "coffee", "river", "horse",
    "pizza", "phone", "bike", "bus", "train", "plane", "kitchen", "bed", "lamp", "clock", "shirt",
    "coat", "sock", "bag", "key", "map", "ticket", "letter", "paper", "pencil", "toy", "doll",
    "kite", "flower", "grass", "hill", "lake", "beach", "cloud", "wind", "moon", "city", "town",
    "street", "bridge", "market", "store", "bank", "office", "room", "wall", "floor", "roof",
    "yard", "fence", "gate", "pool", "cookie", "soup", "rice", "salad", "sandwich", "juice", "tea",
    "candy", "orange", "banana", "grape", "lemon", "carrot", "potato", "tomato", "onion", "cheese",
    "butter", "sugar", "salt", "spoon", "fork", "knife", "plate", "bowl", "bottle", "basket",
    "blanket", "pillow", "towel", "soap", "brush", "mirror", "radio", "picture", "camera", "guitar",
    "piano", "drum", "ladder", "bucket", "hammer", "tent", "jacket", "glove", "scarf"};

constexpr std::array kHardNouns = {
    "eigenvalue", "homomorphism", "manifold", "lagrangian", "isomorphism", "entropy", "tensor",
    "polynomial", "topology", "convolution", "hamiltonian", "eigenvector", "integral", "derivative",
    "covariance", "jacobian", "fibration", "cohomology", "martingale", "spinor", "quaternion",
    "gradient", "hessian", "spectrum", "kernel", "functor", "diffeomorphism", "wavelet",
    "recursion", "invariant", "asymptote", "boundary", "operator", "semigroup", "lattice",
    "tautology", "theorem", "lemma", "axiom", "automaton", "grammar", "complexity", "heuristic",
    "equilibrium", "bifurcation", "attractor", "perturbation", "renormalization", "adjoint",
    "annihilator", "antiderivative", "bijection", "bilinearity", "bundle", "category", "centroid",
    "characteristic", "chromosome", "codomain", "coefficient", "commutator", "compactification",
    "conjugacy", "connectedness", "continuum", "contraction", "coordinate", "correlation",
    "cryptosystem", "curvature", "cycloid", "deformation", "determinant", "diagonalization",
    "dichotomy", "discriminant", "distribution", "divergence", "eigenfunction", "ellipsoid",
    "embedding", "endomorphism", "epimorphism", "estimator", "excision", "exponent",
    "factorization", "filtration", "fourier", "geodesic", "grassmannian", "groupoid", "homology",
    "homotopy", "hyperplane", "hypersurface", "ideal", "idempotent", "inequality", "infimum",
    "involution", "isometry", "kinematics", "laplacian", "likelihood", "logarithm", "monomorphism",
    "morphism", "multiplicity", "neighborhood", "nilpotent", "norm", "nullspace", "orthonormality",
    "parabola", "partition", "permutation", "polytope", "posterior", "potential", "projection",
    "quantifier", "quotient", "regression", "residue", "resolvent", "riemannian", "semantics",
    "sheaf", "simplex", "singularity", "stabilizer", "submanifold", "subspace", "supremum",
    "surjection", "symmetry", "tangent", "thermodynamics", "torsion", "trajectory", "transform",
    "transversality", "triangulation", "uniformity", "valuation", "variance", "variety",
    "vorticity"};

constexpr std::array kEasyAdjectives = {
    "big", "small", "red", "blue", "happy", "cold", "warm", "old", "new", "fast", "slow", "nice",
    "green", "yellow", "soft", "hard", "tall", "short", "shiny", "dirty", "sunny", "quiet", "loud",
    "sweet", "round", "funny", "pretty", "heavy", "light", "bright", "dark", "fresh", "wet", "dry",
    "empty", "full", "cheap"};

constexpr std::array kHardAdjectives = {
    "stochastic", "orthogonal", "nonlinear", "compact", "hermitian", "ergodic", "convex",
    "symplectic", "bayesian", "recursive", "unitary", "adiabatic", "holomorphic", "stationary",
    "asymptotic", "invertible", "isotropic", "anisotropic", "solvable", "semisimple", "measurable",
    "differentiable", "quasiconvex", "harmonic", "elliptic", "hyperbolic", "parabolic", "abelian",
    "noetherian", "hausdorff", "lipschitz", "markovian", "logarithmic", "exponential", "canonical",
    "degenerate", "bounded", "monotone", "separable"};

constexpr std::array kEasyVerbs = {
    "find", "make", "clean", "cook", "draw", "fix", "open", "buy", "paint", "wash", "move", "carry",
    "bake", "build", "catch", "close", "cut", "drink", "eat", "fold", "grow", "hang", "help",
    "kick", "lift", "plant", "play", "pull", "push", "read", "sell", "sing", "sweep", "throw",
    "visit", "watch", "write"};

constexpr std::array kHardVerbs = {
    "diagonalize", "integrate", "differentiate", "factorize", "normalize", "linearize",
    "parametrize", "optimize", "approximate", "prove", "derive", "characterize", "orthogonalize",
    "regularize", "discretize", "extrapolate", "interpolate", "triangulate", "decompose",
    "compactify", "quantize", "marginalize", "bootstrap", "vectorize", "symmetrize", "localize",
    "eigendecompose", "reparametrize", "homogenize", "deconvolve"};

// Slot markers: N noun, A adjective, V verb, D digit. Everything else is a
// literal token.
constexpr std::array<std::string_view, 12> kFamilies = {
    "what is a N ?",
    "what is the N of a N ?",
    "how do i V the N ?",
    "can you V the N and the N ?",
    "explain the N of N in terms of N .",
    "describe how the N relates to N , N and N .",
    "compute D + D and then V the N .",
    "why does the N V when the N is A ?",
    "give a list of A N for the N with N .",
    "if the N is A , what happens to the N and its N ?",
    "tell me about the A N .",
    "please V every A N near the N .",
};

// Share of queries whose closing mark becomes "!", independent of difficulty.
constexpr double kExclamationRate = 0.2;

constexpr std::array<std::string_view, 4> kTails = {
    "in the context of N", "with respect to the A N", "for a A N", "using the N and N"};

struct Draft {
  std::vector<std::string> tokens;
  std::size_t slots = 0;
  std::size_t hard = 0;
  std::string family;
};

template <std::size_t N>
std::string pick(Rng& rng, const std::array<const char*, N>& words) {
  return words[rng.below(N)];
}

void expand(std::string_view pattern, double rare, Rng& rng, Draft& d) {
  std::size_t pos = 0;
  while (pos < pattern.size()) {
    auto end = pattern.find(' ', pos);
    if (end == std::string_view::npos) end = pattern.size();
    const std::string_view piece = pattern.substr(pos, end - pos);
    pos = end + 1;
    if (piece == "N" || piece == "A" || piece == "V") {
      const bool hard = rng.bernoulli(rare);
      ++d.slots;
      d.hard += hard ? 1 : 0;
      if (piece == "N") d.tokens.push_back(hard ? pick(rng, kHardNouns) : pick(rng, kEasyNouns));
      if (piece == "A") {
        d.tokens.push_back(hard ? pick(rng, kHardAdjectives) : pick(rng, kEasyAdjectives));
      }
      if (piece == "V") d.tokens.push_back(hard ? pick(rng, kHardVerbs) : pick(rng, kEasyVerbs));
    } else if (piece == "D") {
      d.tokens.push_back(std::to_string(rng.below(10)));
    } else {
      d.tokens.emplace_back(piece);
    }
  }
}

}  // namespace

std::string_view to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::calibration: return "calibration";
    case Split::eval: return "eval";
  }
  return "?";
}

Split parse_split(std::string_view s) {
  if (s == "train") return Split::train;
  if (s == "calibration" || s == "cal") return Split::calibration;
  if (s == "eval") return Split::eval;
  throw ValidationError("unknown split \"" + std::string(s) + "\"");
}

Workload gen_workload(std::size_t size, std::uint64_t seed, const DifficultyModel& model,
                      SplitSizes splits, std::string name) {
  if (size < 10) throw ValidationError("workload size must be >= 10");
  if (splits.train + splits.calibration > size) {
    throw ValidationError("train + calibration split sizes exceed the workload size");
  }
  Rng rng(seed);
  Workload w;
  w.name = std::move(name);
  w.queries.reserve(size);
  std::set<std::string> seen_text;
  std::size_t attempts = 0;
  while (w.queries.size() < size) {
    if (++attempts > size * 100) throw std::runtime_error("workload generator cannot find distinct queries");
    Draft d;
    const auto family = rng.below(kFamilies.size());
    const double rare = rng.uniform();
    d.family = "f" + std::to_string(family);
    expand(kFamilies[family], rare, rng, d);
    const auto tails = rng.below(4);
    if (tails > 0) {
      const std::string closing = d.tokens.back();
      d.tokens.pop_back();
      for (std::uint64_t t = 0; t < tails; ++t) expand(kTails[rng.below(kTails.size())], rare, rng, d);
      d.tokens.push_back(closing);
    }
    if (rng.bernoulli(kExclamationRate)) d.tokens.back() = "!";
    std::string text;
    for (const auto& tok : d.tokens) {
      if (!text.empty()) text += ' ';
      text += tok;
    }
    const double noise = rng.normal();
    if (!seen_text.insert(text).second) continue;
    const double hard_fraction =
        d.slots ? static_cast<double>(d.hard) / static_cast<double>(d.slots) : 0.0;
    WorkloadQuery q;
    q.id = w.name + "-" + std::to_string(w.queries.size());
    q.text = std::move(text);
    q.family = d.family;
    q.difficulty = model.rare_weight * hard_fraction +
                   model.length_weight *
                       (static_cast<double>(d.tokens.size()) - model.length_center) /
                       model.length_scale +
                   model.noise_sd * noise;
    w.queries.push_back(std::move(q));
  }

  // Tercile labels over the whole workload (ties broken by index).
  std::vector<std::size_t> order(size);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return w.queries[a].difficulty < w.queries[b].difficulty;
  });
  for (std::size_t rank = 0; rank < size; ++rank) {
    const double label = rank * 3 < size ? 0.0 : (rank * 3 < 2 * size ? 0.5 : 1.0);
    w.queries[order[rank]].label = label;
  }
  for (std::size_t i = 0; i < size; ++i) {
    w.queries[i].split = i < splits.train                        ? Split::train
                         : i < splits.train + splits.calibration ? Split::calibration
                                                                 : Split::eval;
  }
  return w;
}

std::vector<const WorkloadQuery*> Workload::split(Split s) const {
  std::vector<const WorkloadQuery*> out;
  for (const auto& q : queries) {
    if (q.split == s) out.push_back(&q);
  }
  return out;
}

std::vector<std::string> Workload::texts(Split s) const {
  std::vector<std::string> out;
  for (const auto* q : split(s)) out.push_back(q->text);
  return out;
}

std::vector<std::string> Workload::all_texts() const {
  std::vector<std::string> out;
  for (const auto& q : queries) out.push_back(q.text);
  return out;
}

void Workload::validate() const {
  std::set<std::string> ids;
  for (const auto& q : queries) {
    if (!ids.insert(q.id).second) throw ValidationError("duplicate query id " + q.id);
    if (q.label && !is_valid_label(*q.label)) throw ValidationError("bad label on query " + q.id);
  }
}

std::vector<nlohmann::json> Workload::to_jsonl() const {
  std::vector<nlohmann::json> rows;
  for (const auto& q : queries) {
    nlohmann::json row = {{"id", q.id},
                          {"text", q.text},
                          {"split", to_string(q.split)},
                          {"family", q.family},
                          {"difficulty", q.difficulty}};
    row["label"] = q.label ? nlohmann::json(*q.label) : nlohmann::json(nullptr);
    rows.push_back(std::move(row));
  }
  return rows;
}

Workload Workload::from_jsonl(std::string name, const std::vector<nlohmann::json>& rows) {
  Workload w;
  w.name = std::move(name);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& row = rows[i];
    if (!row.is_object() || !row.contains("text") || !row["text"].is_string()) {
      throw ValidationError("workload row " + std::to_string(i + 1) + " lacks a string \"text\"");
    }
    WorkloadQuery q;
    q.text = row["text"].get<std::string>();
    q.id = row.contains("id") && row["id"].is_string() ? row["id"].get<std::string>()
                                                       : w.name + "-" + std::to_string(i);
    if (row.contains("label") && row["label"].is_number()) q.label = row["label"].get<double>();
    q.split = parse_split(row.value("split", "eval"));
    q.family = row.value("family", "");
    q.difficulty = row.value("difficulty", 0.0);
    w.queries.push_back(std::move(q));
  }
  w.validate();
  return w;
}

double ordering_accuracy(std::span<const double> scores, std::span<const double> labels) {
  if (scores.size() != labels.size()) throw ValidationError("scores and labels differ in length");
  double correct = 0.0;
  double pairs = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != 1.0) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j] != 0.0) continue;
      pairs += 1.0;
      if (scores[i] > scores[j]) correct += 1.0;
      else if (scores[i] == scores[j]) correct += 0.5;
    }
  }
  return pairs > 0.0 ? correct / pairs : 0.0;
}

}  // namespace reroute
