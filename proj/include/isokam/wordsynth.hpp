#pragma once

#include <cstdint>
#include <vector>

#include "isokam/liegroup.hpp"

namespace isokam {

struct Letter {
  int gen = 0;
  int power = 1;  // +1 or -1
  bool operator==(const Letter& o) const { return gen == o.gen && power == o.power; }
};

// Product letters[0] * letters[1] * ... with the value cached.
class Word {
 public:
  Word() = default;
  static Word identity(int dim);
  static Word from_letters(std::vector<Letter> letters, const GeneratorTuple& s);

  const std::vector<Letter>& letters() const { return letters_; }
  const GroupElement& value() const { return value_; }
  int dim() const { return value_.dim(); }
  long length() const { return static_cast<long>(letters_.size()); }
  bool balanced() const;
  bool inverse_free() const;

  Word inverse() const;
  // Concatenation; the value is the product of cached values.
  Word operator*(const Word& o) const;
  // Max-entry gap between the cached value and a fresh re-multiplication.
  double consistency_error(const GeneratorTuple& s) const;

 private:
  friend class EpsilonNet;
  friend Word compile_without_inverses(const GroupElement&, const GeneratorTuple&, double,
                                       const class EpsilonNet&, int);
  std::vector<Letter> letters_;
  GroupElement value_;
};

// Words stored as a trie (parent index + last letter) with flat values.
class EpsilonNet {
 public:
  int dim() const { return dim_; }
  long size() const { return static_cast<long>(parent_.size()); }
  const GeneratorTuple& generators() const { return gens_; }
  double epsilon() const { return epsilon_; }
  double covering_radius() const { return radius_; }
  int max_length() const { return length_; }
  bool symmetric() const { return symmetric_; }

  Word word(long i) const;
  std::vector<Word> words() const;
  Eigen::Map<const Mat> value(long i) const {
    return Eigen::Map<const Mat>(values_.data() + i * dim_ * dim_, dim_, dim_);
  }
  // Index maximizing tr(g^T w), i.e. the Frobenius-nearest word.
  long nearest(const Mat& g) const;

 private:
  friend EpsilonNet epsilon_net_bfs(const GeneratorTuple&, double, int, bool);
  int dim_ = 0;
  GeneratorTuple gens_;
  double epsilon_ = 0.0;
  double radius_ = 0.0;
  int length_ = 0;
  bool symmetric_ = true;
  std::vector<long> parent_;
  std::vector<Letter> last_;
  std::vector<int> depth_;
  std::vector<double> values_;  // column-major dim x dim blocks
};

// Fixed seeded Haar panel used to certify density.
inline constexpr int kNetPanelSize = 1000;
inline constexpr std::uint64_t kNetPanelSeed = 0x6e65'7470'616eULL;
const std::vector<GroupElement>& net_panel(int dim);

// BFS over words in S (and S^-1 if symmetric) by increasing length, with
// entrywise dedup grid of spacing eps/(4 dim). Stops at the first length whose
// panel covering radius is <= eps; throws NotDenseAtBudget otherwise.
EpsilonNet epsilon_net_bfs(const GeneratorTuple& s, double eps, int max_len, bool symmetric = true);

// Panel covering radius of an arbitrary element list.
double covering_radius(const std::vector<GroupElement>& elems, int dim);

struct InverseApprox {
  long n = 0;
  double achieved = 0.0;
};
// Smallest n <= n_max with distance(h^-1, h^n) < eps.
InverseApprox approximate_inverse(const GroupElement& h, double eps, long n_max = 10'000'000);

inline constexpr double kSkBasin = 0.14;

// Dawson-Nielsen balanced-commutator recursion on SO(3).
Word solovay_kitaev(const GroupElement& target, const EpsilonNet& net, int depth);
// Distances d_0..d_depth of the recursion levels.
std::vector<double> solovay_kitaev_trace(const GroupElement& target, const EpsilonNet& net, int depth);

// Rotations (v, w) near I with v w v^-1 w^-1 = delta (SO(3)).
std::pair<GroupElement, GroupElement> balanced_commutator(const GroupElement& delta);

// Positive-power word within eps of target: SK on S u S^-1 at the smallest
// depth reaching eps/2, then each s_i^-1 replaced by s_i^n from
// approximate_inverse at accuracy eps / (2 length).
Word compile_without_inverses(const GroupElement& target, const GeneratorTuple& s, double eps,
                              const EpsilonNet& net, int max_depth = 6);
Word compile_without_inverses(const GroupElement& target, const GeneratorTuple& s, double eps);

// SO(3) distance from the trace; no antipodal exception.
double so3_distance(const Mat& a, const Mat& b);

}  // namespace isokam
