#include "isokam/wordsynth.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>
#include <string>
#include <unordered_set>

namespace isokam {

namespace {

const Mat& letter_matrix(const GeneratorTuple& s, const Letter& l, Mat& scratch) {
  if (l.power > 0) return s[l.gen].mat();
  scratch = s[l.gen].mat().transpose();
  return scratch;
}

double angle_distance(double sin_t, double cos_t) { return std::sqrt(2.0) * std::atan2(sin_t, cos_t); }

// Distance from I for a raw 3x3 column-major block.
double so3_distance_from_identity(const double* r) {
  const double vx = 0.5 * (r[5] - r[7]), vy = 0.5 * (r[6] - r[2]), vz = 0.5 * (r[1] - r[3]);
  return angle_distance(std::sqrt(vx * vx + vy * vy + vz * vz), 0.5 * (r[0] + r[4] + r[8] - 1.0));
}

double distance_any(const Mat& a, const Mat& b) {
  if (a.rows() == 3) return so3_distance(a, b);
  return distance_or_chordal(GroupElement::unchecked(a), GroupElement::unchecked(b)).value;
}

}  // namespace

double so3_distance(const Mat& a, const Mat& b) {
  const Eigen::Matrix3d r = a.transpose() * b;
  return so3_distance_from_identity(r.data());
}

Word Word::identity(int dim) {
  Word w;
  w.value_ = GroupElement::identity(dim);
  return w;
}

Word Word::from_letters(std::vector<Letter> letters, const GeneratorTuple& s) {
  Word w;
  Mat v = Mat::Identity(s.dim(), s.dim()), scratch;
  for (const auto& l : letters) {
    if (l.gen < 0 || l.gen >= s.size() || (l.power != 1 && l.power != -1))
      throw ConfigInvalid("word", "letter out of range");
    v = v * letter_matrix(s, l, scratch);
  }
  w.letters_ = std::move(letters);
  w.value_ = GroupElement::unchecked(v);
  return w;
}

bool Word::balanced() const {
  std::map<int, long> net;
  for (const auto& l : letters_) net[l.gen] += l.power;
  return std::all_of(net.begin(), net.end(), [](const auto& kv) { return kv.second == 0; });
}

bool Word::inverse_free() const {
  return std::all_of(letters_.begin(), letters_.end(), [](const Letter& l) { return l.power > 0; });
}

Word Word::inverse() const {
  Word w;
  w.letters_.reserve(letters_.size());
  for (auto it = letters_.rbegin(); it != letters_.rend(); ++it) w.letters_.push_back({it->gen, -it->power});
  w.value_ = value_.inverse();
  return w;
}

Word Word::operator*(const Word& o) const {
  Word w;
  w.letters_.reserve(letters_.size() + o.letters_.size());
  w.letters_ = letters_;
  w.letters_.insert(w.letters_.end(), o.letters_.begin(), o.letters_.end());
  w.value_ = GroupElement::unchecked(value_.mat() * o.value_.mat());
  return w;
}

double Word::consistency_error(const GeneratorTuple& s) const {
  Mat v = Mat::Identity(dim(), dim()), scratch;
  for (const auto& l : letters_) v = v * letter_matrix(s, l, scratch);
  return (v - value_.mat()).cwiseAbs().maxCoeff();
}

// ---------------------------------------------------------------------------

Word EpsilonNet::word(long i) const {
  std::vector<Letter> rev;
  for (long k = i; k > 0; k = parent_[k]) rev.push_back(last_[k]);
  Word w;
  w.letters_.assign(rev.rbegin(), rev.rend());
  w.value_ = GroupElement::unchecked(Mat(value(i)));
  return w;
}

std::vector<Word> EpsilonNet::words() const {
  std::vector<Word> out;
  out.reserve(size());
  for (long i = 0; i < size(); ++i) out.push_back(word(i));
  return out;
}

long EpsilonNet::nearest(const Mat& g) const {
  const int nn = dim_ * dim_;
  const double* gd = g.data();
  long best = 0;
  double best_tr = -1e300;
  const double* v = values_.data();
  for (long i = 0; i < size(); ++i, v += nn) {
    double tr = 0.0;
    for (int k = 0; k < nn; ++k) tr += gd[k] * v[k];
    if (tr > best_tr) {
      best_tr = tr;
      best = i;
    }
  }
  return best;
}

const std::vector<GroupElement>& net_panel(int dim) {
  static thread_local std::map<int, std::vector<GroupElement>> cache;
  auto& p = cache[dim];
  if (p.empty()) {
    Rng rng(split_seed(kNetPanelSeed, dim));
    for (int i = 0; i < kNetPanelSize; ++i) p.push_back(haar_sample(dim, rng));
  }
  return p;
}

namespace {

// Tracks the best (max-trace) element for each panel point.
class PanelCover {
 public:
  explicit PanelCover(int dim) : dim_(dim), panel_(net_panel(dim)) {
    const int nn = dim * dim;
    p_.resize(static_cast<long>(panel_.size()), nn);
    for (std::size_t i = 0; i < panel_.size(); ++i)
      p_.row(static_cast<long>(i)) = Eigen::Map<const Eigen::RowVectorXd>(panel_[i].mat().data(), nn);
    best_tr_.assign(panel_.size(), -1e300);
    best_.assign(panel_.size(), Mat());
  }

  void add(const double* values, long count) {
    const int nn = dim_ * dim_;
    Eigen::Map<const Mat> w(values, nn, count);
    const Mat tr = p_ * w;
    for (long i = 0; i < tr.rows(); ++i) {
      long j = 0;
      const double m = tr.row(i).maxCoeff(&j);
      if (m > best_tr_[i]) {
        best_tr_[i] = m;
        best_[i] = Eigen::Map<const Mat>(values + j * nn, dim_, dim_);
      }
    }
  }

  double radius() const {
    double r = 0.0;
    for (std::size_t i = 0; i < panel_.size(); ++i) r = std::max(r, distance_any(panel_[i].mat(), best_[i]));
    return r;
  }

 private:
  int dim_;
  const std::vector<GroupElement>& panel_;
  Mat p_;
  std::vector<double> best_tr_;
  std::vector<Mat> best_;
};

std::string grid_key(const double* v, int nn, double h) {
  std::string key(sizeof(std::int32_t) * nn, '\0');
  for (int k = 0; k < nn; ++k) {
    const auto c = static_cast<std::int32_t>(std::floor(v[k] / h));
    std::memcpy(&key[sizeof(std::int32_t) * k], &c, sizeof c);
  }
  return key;
}

}  // namespace

double covering_radius(const std::vector<GroupElement>& elems, int dim) {
  PanelCover cover(dim);
  std::vector<double> flat;
  for (const auto& g : elems) flat.insert(flat.end(), g.mat().data(), g.mat().data() + dim * dim);
  cover.add(flat.data(), static_cast<long>(elems.size()));
  return cover.radius();
}

EpsilonNet epsilon_net_bfs(const GeneratorTuple& s, double eps, int max_len, bool symmetric) {
  if (!(eps > 0.0)) throw ConfigInvalid("epsilon", "must be positive");
  if (max_len < 1) throw ConfigInvalid("max_len", "must be >= 1");
  const int n = s.dim(), nn = n * n;
  std::vector<Letter> alphabet;
  std::vector<Mat> mats;
  for (int i = 0; i < s.size(); ++i) {
    alphabet.push_back({i, 1});
    mats.push_back(s[i].mat());
    if (symmetric) {
      alphabet.push_back({i, -1});
      mats.push_back(s[i].mat().transpose());
    }
  }
  EpsilonNet net;
  net.dim_ = n;
  net.gens_ = s;
  net.epsilon_ = eps;
  net.symmetric_ = symmetric;
  const double h = eps / (4.0 * n);
  std::unordered_set<std::string> seen;
  const Mat id = Mat::Identity(n, n);
  net.values_.assign(id.data(), id.data() + nn);
  net.parent_.push_back(-1);
  net.last_.push_back({-1, 0});
  net.depth_.push_back(0);
  seen.insert(grid_key(id.data(), nn, h));
  PanelCover cover(n);
  cover.add(net.values_.data(), 1);
  net.radius_ = cover.radius();
  if (net.radius_ <= eps) return net;

  long frontier_lo = 0, frontier_hi = 1;
  Mat prod(n, n);
  for (int len = 1; len <= max_len; ++len) {
    for (long f = frontier_lo; f < frontier_hi; ++f) {
      const Letter prev = net.last_[f];
      for (std::size_t a = 0; a < alphabet.size(); ++a) {
        const Letter& l = alphabet[a];
        if (prev.gen == l.gen && prev.power == -l.power) continue;  // free reduction
        prod.noalias() = Eigen::Map<const Mat>(net.values_.data() + f * nn, n, n) * mats[a];
        if (!seen.insert(grid_key(prod.data(), nn, h)).second) continue;
        net.values_.insert(net.values_.end(), prod.data(), prod.data() + nn);
        net.parent_.push_back(f);
        net.last_.push_back(l);
        net.depth_.push_back(len);
      }
    }
    frontier_lo = frontier_hi;
    frontier_hi = net.size();
    cover.add(net.values_.data() + frontier_lo * nn, frontier_hi - frontier_lo);
    net.radius_ = cover.radius();
    net.length_ = len;
    if (net.radius_ <= eps) return net;
    if (frontier_hi == frontier_lo) break;
  }
  throw NotDenseAtBudget(net.radius_, net.length_);
}

// ---------------------------------------------------------------------------

InverseApprox approximate_inverse(const GroupElement& h, double eps, long n_max) {
  if (!(eps > 0.0)) throw ConfigInvalid("epsilon", "must be positive");
  const int n = h.dim();
  const Mat& hm = h.mat();
  Mat p = hm * hm;  // h^{n+1} for n = 1
  Mat next(n, n);
  for (long k = 1; k <= n_max; ++k) {
    // d(h^-1, h^k) = d(I, h^{k+1}) by bi-invariance.
    const double d = n == 3 ? so3_distance_from_identity(p.data())
                            : distance_any(Mat::Identity(n, n), p);
    if (d < eps) return {k, d};
    next.noalias() = p * hm;
    p.swap(next);
    if (k % 4096 == 0) p = project_to_group(p).mat();
  }
  throw BudgetExceeded("no power h^n with n <= n_max approximates h^-1 to the requested accuracy");
}

std::pair<GroupElement, GroupElement> balanced_commutator(const GroupElement& delta) {
  if (delta.dim() != 3) throw DimUnsupported("balanced commutator requires SO(3)");
  const double theta = rotation_angle(delta.mat());
  if (theta < 1e-300) return {GroupElement::identity(3), GroupElement::identity(3)};
  auto comm = [](double phi) {
    const Mat a = rot_x(phi).mat(), b = rot_y(phi).mat();
    return Mat(a * b * a.transpose() * b.transpose());
  };
  // Commutator angle increases on [0, phi_max], reaching pi at phi_max.
  const double phi_max = 2.0 * std::asin(std::pow(2.0, -0.25));
  double lo = 0.0, hi = phi_max;
  // Closed-form start: sin(theta/2) = 2 s^2 sqrt(1 - s^4), s = sin(phi/2).
  const double u = std::sqrt(0.5 * (1.0 - std::cos(0.5 * theta)));
  double phi = 2.0 * std::asin(std::min(1.0, std::sqrt(u)));
  for (int it = 0; it < 200 && hi - lo > 1e-17; ++it) {
    if (rotation_angle(comm(phi)) < theta) lo = phi;
    else hi = phi;
    phi = 0.5 * (lo + hi);
  }
  const Mat c = comm(phi);
  auto axis_of = [](const Mat& r) {
    const Mat l = log_so(GroupElement::unchecked(r));
    Eigen::Vector3d w = vee(l);
    return Eigen::Vector3d(w.normalized());
  };
  const Eigen::Vector3d a = axis_of(c), t = axis_of(delta.mat());
  // Rotation taking a to t.
  const Eigen::Vector3d cr = a.cross(t);
  const double sn = cr.norm(), cs = a.dot(t);
  Mat rot;
  if (sn < 1e-15) {
    if (cs > 0.0) {
      rot = Mat::Identity(3, 3);
    } else {
      Eigen::Vector3d perp = a.unitOrthogonal();
      rot = exp_so(hat(perp * M_PI)).mat();
    }
  } else {
    rot = exp_so(hat(cr / sn * std::atan2(sn, cs))).mat();
  }
  const Mat v = rot * rot_x(phi).mat() * rot.transpose();
  const Mat w = rot * rot_y(phi).mat() * rot.transpose();
  return {GroupElement::unchecked(v), GroupElement::unchecked(w)};
}

namespace {

Word sk_rec(const Mat& u, const EpsilonNet& net, int depth) {
  if (depth == 0) return net.word(net.nearest(u));
  const Word un1 = sk_rec(u, net, depth - 1);
  const GroupElement delta = GroupElement::unchecked(u * un1.value().mat().transpose());
  const auto [v, w] = balanced_commutator(delta);
  const Word vn1 = sk_rec(v.mat(), net, depth - 1);
  const Word wn1 = sk_rec(w.mat(), net, depth - 1);
  return vn1 * wn1 * vn1.inverse() * wn1.inverse() * un1;
}

void check_sk_input(const GroupElement& target, const EpsilonNet& net, int depth) {
  if (target.dim() != 3 || net.dim() != 3) throw DimUnsupported("Solovay-Kitaev is implemented for SO(3)");
  if (depth < 0) throw ConfigInvalid("depth", "must be >= 0");
  if (net.size() == 0) throw NetTooCoarse("empty net");
  const double d0 = so3_distance(target.mat(), net.value(net.nearest(target.mat())));
  if (d0 > kSkBasin) throw NetTooCoarse("nearest net word at distance " + std::to_string(d0));
}

}  // namespace

Word solovay_kitaev(const GroupElement& target, const EpsilonNet& net, int depth) {
  check_sk_input(target, net, depth);
  return sk_rec(target.mat(), net, depth);
}

std::vector<double> solovay_kitaev_trace(const GroupElement& target, const EpsilonNet& net, int depth) {
  check_sk_input(target, net, depth);
  std::vector<double> out;
  for (int k = 0; k <= depth; ++k)
    out.push_back(so3_distance(target.mat(), sk_rec(target.mat(), net, k).value().mat()));
  return out;
}

namespace {

Mat matrix_power(const Mat& a, long n) {
  Mat result = Mat::Identity(a.rows(), a.cols()), base = a;
  while (n > 0) {
    if (n & 1) result = result * base;
    base = base * base;
    n >>= 1;
  }
  return result;
}

}  // namespace

Word compile_without_inverses(const GroupElement& target, const GeneratorTuple& s, double eps,
                              const EpsilonNet& net, int max_depth) {
  if (!(eps > 0.0)) throw ConfigInvalid("epsilon", "must be positive");
  if (net.generators().size() != s.size() || !net.symmetric())
    throw ConfigInvalid("net", "net must be a symmetric BFS net over the same generators");
  check_sk_input(target, net, 0);
  Word w;
  for (int depth = 0;; ++depth) {
    w = sk_rec(target.mat(), net, depth);
    if (so3_distance(target.mat(), w.value().mat()) < 0.5 * eps) break;
    if (depth == max_depth) throw BudgetExceeded("Solovay-Kitaev depth budget exhausted before eps/2");
  }
  if (w.inverse_free()) return w;
  const double acc = eps / (2.0 * static_cast<double>(w.length()));
  std::vector<long> power(s.size(), 0);
  std::vector<Mat> power_mat(s.size());
  for (const auto& l : w.letters()) {
    if (l.power > 0 || power[l.gen] > 0) continue;
    power[l.gen] = approximate_inverse(s[l.gen], acc).n;
    power_mat[l.gen] = matrix_power(s[l.gen].mat(), power[l.gen]);
  }
  Word out;
  Mat v = Mat::Identity(3, 3);
  for (const auto& l : w.letters()) {
    if (l.power > 0) {
      out.letters_.push_back(l);
      v = v * s[l.gen].mat();
    } else {
      out.letters_.insert(out.letters_.end(), power[l.gen], Letter{l.gen, 1});
      v = v * power_mat[l.gen];
    }
  }
  out.value_ = GroupElement::unchecked(v);
  return out;
}

Word compile_without_inverses(const GroupElement& target, const GeneratorTuple& s, double eps) {
  const EpsilonNet net = epsilon_net_bfs(s, kSkBasin, 40, true);
  return compile_without_inverses(target, s, eps, net);
}

}  // namespace isokam
