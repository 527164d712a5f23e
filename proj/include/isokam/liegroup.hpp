#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include <Eigen/Dense>

#include "isokam/errors.hpp"
#include "isokam/random.hpp"

namespace isokam {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
// Point-level types for S^d, d <= 7: dynamic size, inline storage.
inline constexpr int kMaxAmbient = 8;
using PVec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxAmbient, 1>;
using PMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxAmbient, kMaxAmbient>;

inline constexpr double kGroupTol = 1e-10;
inline constexpr double kAntipodalTol = 1e-9;

// Element of SO(n), n = d + 1, acting on S^d by matrix multiplication.
class GroupElement {
 public:
  GroupElement() = default;
  // Validates orthogonality and det = +1 to kGroupTol; throws SingularInput.
  explicit GroupElement(Mat m);
  static GroupElement unchecked(Mat m);
  static GroupElement identity(int dim);

  int dim() const { return static_cast<int>(mat_.rows()); }
  const Mat& mat() const { return mat_; }

  GroupElement operator*(const GroupElement& other) const;
  GroupElement inverse() const;
  Vec operator*(const Vec& x) const { return mat_ * x; }

 private:
  Mat mat_;
};

bool is_special_orthogonal(const Mat& m, double tol = kGroupTol);

class GeneratorTuple {
 public:
  GeneratorTuple() = default;
  explicit GeneratorTuple(std::vector<GroupElement> elems);

  int dim() const { return elems_.empty() ? 0 : elems_.front().dim(); }
  int size() const { return static_cast<int>(elems_.size()); }
  const GroupElement& operator[](int i) const { return elems_[i]; }
  const std::vector<GroupElement>& elems() const { return elems_; }
  auto begin() const { return elems_.begin(); }
  auto end() const { return elems_.end(); }

 private:
  std::vector<GroupElement> elems_;
};

GroupElement project_to_group(const Mat& a);

// ||log(g^T h)||_F. Throws LogUndefined near antipodal pairs.
double distance(const GroupElement& g, const GroupElement& h);

struct DistanceResult {
  double value = 0.0;
  bool chordal = false;  // true: fell back to ||g - h||_F
};
DistanceResult distance_or_chordal(const GroupElement& g, const GroupElement& h);

GroupElement exp_so(const Mat& x);
Mat log_so(const GroupElement& g);

GroupElement haar_sample(int dim, std::uint64_t seed);
GroupElement haar_sample(int dim, Rng& rng);

// SO(3) helpers.
GroupElement rot_x(double theta);
GroupElement rot_y(double theta);
GroupElement rot_z(double theta);
// Rotation angle in [0, pi] of an SO(3) element.
double rotation_angle(const Mat& r);
Mat hat(const Eigen::Vector3d& w);
Eigen::Vector3d vee(const Mat& x);

// Rotation by theta in the (i, j) coordinate plane of R^dim.
GroupElement plane_rotation(int dim, int i, int j, double theta);

// Golden-angle rotations about z and x: the reference Diophantine pair.
GeneratorTuple reference_pair();

// Matrix text blocks: "<dim>" line followed by dim rows, 17 significant digits.
std::vector<Mat> read_matrices(std::istream& in);
void write_matrices(std::ostream& out, const std::vector<Mat>& mats);
std::vector<Mat> read_matrices_file(const std::string& path);

}  // namespace isokam
